"""Offspring laws with within-group dependence and their random environments.

A sibling group of size i reproduces as one unit: the joint child counts of its
i members follow an exchangeable law on {0..N}^i, where N caps the litter size
of a single member.  Exchangeability means only the multiset of counts matters,
so laws are stored on canonical (non-decreasing) tuples, each carrying the total
weight of its permutation orbit.  An Environment bundles one law per group size
1..N; an EnvironmentEnsemble is a finite mixture of environments, one drawn
independently per generation.

Generating functions follow the usual convention that a child count of zero
contributes a factor 1, so phi and f are polynomials in (s_1, .., s_N) only.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import EnsembleFormatError, InvalidLawError

# Probability data must balance to this tolerance before the single
# renormalization applied at construction time.
VALIDATION_TOL = 1e-12

# Generating functions are polynomials, so evaluation slightly above 1 is well
# defined; the slack exists so finite-difference derivative probes can straddle
# the point s = 1 symmetrically.
EVAL_SLACK = 0.5


def _as_atom_items(atoms) -> list[tuple[tuple[int, ...], float]]:
    if isinstance(atoms, Mapping):
        items = list(atoms.items())
    else:
        items = [(t, w) for t, w in atoms]
    return [(tuple(int(v) for v in t), float(w)) for t, w in items]


@dataclass(frozen=True)
class SiblingLaw:
    """Joint offspring law for one sibling-group size.

    atoms maps canonical non-decreasing count tuples to the total probability
    of their orbit under coordinate permutation.  Construction enforces the
    structural shape (tuple arity, integer entries, canonical order, no
    duplicates); numeric soundness is checked by validate_sibling_law.
    """

    group_size: int
    order: int
    atoms: tuple[tuple[tuple[int, ...], float], ...]

    def __post_init__(self):
        if not isinstance(self.group_size, int) or self.group_size < 1:
            raise ValueError(f"group_size must be a positive integer, got {self.group_size!r}")
        if not isinstance(self.order, int) or self.order < 1:
            raise ValueError(f"order must be a positive integer, got {self.order!r}")
        if self.group_size > self.order:
            raise ValueError(
                f"group_size {self.group_size} exceeds order {self.order}; "
                "groups cannot outgrow the per-member litter cap"
            )
        items = _as_atom_items(self.atoms)
        if not items:
            raise ValueError("a sibling law needs at least one atom")
        seen = set()
        for t, _ in items:
            if len(t) != self.group_size:
                raise ValueError(
                    f"atom {t} has arity {len(t)}, expected {self.group_size}"
                )
            if any(t[r] > t[r + 1] for r in range(len(t) - 1)):
                raise ValueError(f"atom {t} is not in canonical non-decreasing order")
            if t in seen:
                raise ValueError(f"duplicate atom {t}")
            seen.add(t)
        items.sort(key=lambda kv: kv[0])
        object.__setattr__(self, "atoms", tuple(items))

    # -- structural views -------------------------------------------------

    @property
    def atom_count(self) -> int:
        return len(self.atoms)

    def weight_sum(self) -> float:
        return float(sum(w for _, w in self.atoms))

    def entries_in_range(self) -> bool:
        return all(0 <= v <= self.order for t, _ in self.atoms for v in t)

    def weights_usable(self) -> bool:
        return all(math.isfinite(w) and w >= 0.0 for _, w in self.atoms)

    def normalized(self) -> "SiblingLaw":
        total = self.weight_sum()
        if not (total > 0.0):
            raise InvalidLawError(
                f"law for group size {self.group_size} has non-positive total weight {total}"
            )
        return SiblingLaw(
            self.group_size, self.order,
            tuple((t, w / total) for t, w in self.atoms),
        )

    # -- numeric views (valid laws only) ----------------------------------

    def weight_array(self) -> np.ndarray:
        return np.array([w for _, w in self.atoms], dtype=float)

    def count_matrix(self) -> np.ndarray:
        """Value multiplicities: row a, column v = how many entries of atom a equal v."""
        mat = np.zeros((len(self.atoms), self.order + 1), dtype=np.int64)
        for a, (t, _) in enumerate(self.atoms):
            for v in t:
                mat[a, v] += 1
        return mat

    def orbit_sizes(self) -> np.ndarray:
        """Number of distinct orderings of each atom."""
        counts = self.count_matrix()
        fact = np.array([math.factorial(int(c)) for c in counts.ravel()]).reshape(counts.shape)
        return math.factorial(self.group_size) // fact.prod(axis=1)

    def ordered_expansion(self) -> dict[tuple[int, ...], float]:
        """Expand orbit weights uniformly over all distinct orderings."""
        out: dict[tuple[int, ...], float] = {}
        for t, w in self.atoms:
            orderings = set(itertools.permutations(t))
            share = w / len(orderings)
            for o in orderings:
                out[o] = share
        return out


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of the numeric checks on one sibling law."""

    group_size: int
    atom_count: int
    weight_sum: float
    normalization_defect: float
    out_of_range: tuple[tuple[int, tuple[int, ...]], ...]
    negative_weights: tuple[tuple[int, float], ...]
    nonfinite_weights: tuple[tuple[int, float], ...]

    @property
    def ok(self) -> bool:
        return (
            self.normalization_defect <= VALIDATION_TOL
            and not self.out_of_range
            and not self.negative_weights
            and not self.nonfinite_weights
        )

    def defect_lines(self) -> list[str]:
        lines = []
        if self.normalization_defect > VALIDATION_TOL:
            lines.append(
                f"weights sum to {self.weight_sum!r}; defect "
                f"{self.normalization_defect:.3e} exceeds {VALIDATION_TOL:.0e}"
            )
        for idx, t in self.out_of_range:
            lines.append(f"atom {idx} {t} has entries outside 0..order")
        for idx, w in self.negative_weights:
            lines.append(f"atom {idx} has negative weight {w!r}")
        for idx, w in self.nonfinite_weights:
            lines.append(f"atom {idx} has non-finite weight {w!r}")
        return lines

    def to_dict(self) -> dict:
        return {
            "group_size": self.group_size,
            "atom_count": self.atom_count,
            "weight_sum": self.weight_sum,
            "normalization_defect": self.normalization_defect,
            "out_of_range": [[i, list(t)] for i, t in self.out_of_range],
            "negative_weights": [[i, w] for i, w in self.negative_weights],
            "nonfinite_weights": [[i, w] for i, w in self.nonfinite_weights],
            "ok": self.ok,
        }


def validate_sibling_law(law: SiblingLaw) -> ValidationReport:
    """Check weights and entry ranges without mutating the law."""
    out_of_range = []
    negative = []
    nonfinite = []
    total = 0.0
    for idx, (t, w) in enumerate(law.atoms):
        if any(v < 0 or v > law.order for v in t):
            out_of_range.append((idx, t))
        if not math.isfinite(w):
            nonfinite.append((idx, w))
        elif w < 0.0:
            negative.append((idx, w))
        total += w
    defect = abs(total - 1.0) if math.isfinite(total) else math.inf
    return ValidationReport(
        group_size=law.group_size,
        atom_count=law.atom_count,
        weight_sum=total,
        normalization_defect=defect,
        out_of_range=tuple(out_of_range),
        negative_weights=tuple(negative),
        nonfinite_weights=tuple(nonfinite),
    )


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Environment:
    """One complete reproduction regime: a sibling law for every group size 1..N.

    Laws are validated on construction and renormalized exactly once.  Derived
    tables (marginals, pair marginals, polynomial evaluation data) are cached
    as read-only arrays, so instances are safe to share across worker threads.
    """

    order: int
    laws: tuple[SiblingLaw, ...]
    label: str = ""

    def __post_init__(self):
        by_size: dict[int, SiblingLaw] = {}
        for law in self.laws:
            if law.group_size in by_size:
                raise ValueError(f"duplicate law for group size {law.group_size}")
            if law.order != self.order:
                raise ValueError(
                    f"law for group size {law.group_size} has order {law.order}, "
                    f"environment has order {self.order}"
                )
            by_size[law.group_size] = law
        missing = [i for i in range(1, self.order + 1) if i not in by_size]
        if missing:
            raise ValueError(f"missing laws for group sizes {missing}")
        extra = [i for i in by_size if i < 1 or i > self.order]
        if extra:
            raise ValueError(f"laws for out-of-range group sizes {extra}")

        reports = {i: validate_sibling_law(by_size[i]) for i in by_size}
        bad = {i: r for i, r in reports.items() if not r.ok}
        if bad:
            detail = "; ".join(
                f"group size {i}: " + "; ".join(r.defect_lines()) for i, r in bad.items()
            )
            raise InvalidLawError(
                f"environment {self.label or '<unnamed>'} rejected: {detail}",
                report=reports,
            )

        laws = tuple(by_size[i].normalized() for i in range(1, self.order + 1))
        object.__setattr__(self, "laws", laws)

        n = self.order
        marg = np.zeros((n, n + 1))
        pair = np.full((n, n + 1, n + 1), np.nan)
        weights = []
        counts = []
        child_counts = []
        totals = []
        for i, law in enumerate(laws, start=1):
            w = law.weight_array()
            c = law.count_matrix()
            marg[i - 1] = (w @ c) / i
            if i >= 2:
                second = (c.T * w) @ c - np.diag(w @ c)
                pair[i - 1] = second / (i * (i - 1))
            weights.append(_frozen(w))
            counts.append(_frozen(c))
            child_counts.append(_frozen(c[:, 1:].astype(float)))
            totals.append(_frozen(c @ np.arange(n + 1)))
        object.__setattr__(self, "_marginals", _frozen(marg))
        object.__setattr__(self, "_pairs", _frozen(pair))
        object.__setattr__(self, "_atom_weights", tuple(weights))
        object.__setattr__(self, "_atom_counts", tuple(counts))
        object.__setattr__(self, "_atom_child_counts", tuple(child_counts))
        object.__setattr__(self, "_atom_totals", tuple(totals))

    # -- bookkeeping -------------------------------------------------------

    def law(self, i: int) -> SiblingLaw:
        self._check_size(i)
        return self.laws[i - 1]

    def _check_size(self, i: int):
        if not 1 <= i <= self.order:
            raise IndexError(f"group size {i} outside 1..{self.order}")

    def _check_child(self, j: int, lowest: int = 0):
        if not lowest <= j <= self.order:
            raise IndexError(f"child count {j} outside {lowest}..{self.order}")

    # -- marginals ---------------------------------------------------------

    def marginal(self, i: int, j: int) -> float:
        """Probability that one member of a size-i group has exactly j children."""
        self._check_size(i)
        self._check_child(j)
        return float(self._marginals[i - 1, j])

    def marginal_row(self, i: int) -> np.ndarray:
        self._check_size(i)
        return self._marginals[i - 1]

    def pair_marginal(self, i: int, j: int, k: int) -> float:
        """Joint child counts (j, k) of two distinct members of a size-i group."""
        self._check_size(i)
        if i < 2:
            raise ValueError("pair marginals need a group of size at least 2")
        self._check_child(j)
        self._check_child(k)
        return float(self._pairs[i - 1, j, k])

    def pair_matrix(self, i: int) -> np.ndarray:
        self._check_size(i)
        if i < 2:
            raise ValueError("pair marginals need a group of size at least 2")
        return self._pairs[i - 1]

    # -- generating functions ---------------------------------------------

    def _check_domain(self, s: np.ndarray):
        if s.shape[-1] != self.order:
            raise IndexError(f"s must have length {self.order}, got {s.shape[-1]}")
        if np.any(s < 0.0) or np.any(s > 1.0 + EVAL_SLACK):
            raise ValueError(
                f"s entries must lie in [0, {1.0 + EVAL_SLACK}] "
                "(slack above 1 exists for derivative probes)"
            )

    def phi(self, i: int, s: Sequence[float]) -> float:
        """Joint generating function of the child-group type counts.

        A group of size i produces one child group of size k for every member
        with k >= 1 children; phi(i, s) averages prod_r s_(k_r) over the law,
        with zero counts contributing the factor 1.
        """
        self._check_size(i)
        arr = np.asarray(s, dtype=float)
        self._check_domain(arr)
        full = np.concatenate(([1.0], arr))
        terms = np.prod(full[None, :] ** self._atom_counts[i - 1], axis=1)
        return float(terms @ self._atom_weights[i - 1])

    def f(self, i: int, s: Sequence[float]) -> float:
        """Single-member marginal generating function with group-size weighting.

        f(i, s) = p_i0 + sum_j p_ij s_j^j; its Jacobian at s = 1 is the particle
        mean matrix j * p_ij.
        """
        self._check_size(i)
        arr = np.asarray(s, dtype=float)
        self._check_domain(arr)
        row = self._marginals[i - 1]
        j = np.arange(1, self.order + 1)
        return float(row[0] + np.sum(row[1:] * arr ** j))

    def phi_map(self, s_rows: np.ndarray) -> np.ndarray:
        """Apply every phi_i to a batch of points; rows are points, columns types.

        Internal hot path for quenched iteration; assumes rows already lie in
        the unit box.
        """
        full = np.concatenate(
            [np.ones((s_rows.shape[0], 1)), np.asarray(s_rows, dtype=float)], axis=1
        )
        out = np.empty_like(s_rows, dtype=float)
        for i in range(1, self.order + 1):
            powers = full[:, None, :] ** self._atom_counts[i - 1][None, :, :]
            out[:, i - 1] = powers.prod(axis=2) @ self._atom_weights[i - 1]
        return out

    def phi_vector(self, s: np.ndarray) -> np.ndarray:
        return self.phi_map(np.asarray(s, dtype=float)[None, :])[0]

    # -- sampling ----------------------------------------------------------

    def sample_offspring_vector(self, i: int, rng: np.random.Generator) -> tuple[int, ...]:
        """Draw one ordered joint offspring vector for a size-i group."""
        self._check_size(i)
        a = rng.choice(len(self._atom_weights[i - 1]), p=self._atom_weights[i - 1])
        t, _ = self.laws[i - 1].atoms[a]
        return tuple(int(v) for v in rng.permutation(np.array(t, dtype=np.int64)))

    def sample_atom_counts(self, i: int, n_groups, rng: np.random.Generator) -> np.ndarray:
        """Multinomial split of n_groups independent group draws over the atoms."""
        self._check_size(i)
        return rng.multinomial(n_groups, self._atom_weights[i - 1])


@dataclass(frozen=True)
class EnvironmentEnsemble:
    """Finite mixture of environments; one member is drawn per generation."""

    members: tuple[Environment, ...]
    weights: np.ndarray
    label: str = ""

    def __post_init__(self):
        if not self.members:
            raise ValueError("ensemble needs at least one member")
        orders = {env.order for env in self.members}
        if len(orders) != 1:
            raise ValueError(f"members disagree on order: {sorted(orders)}")
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.shape[0] != len(self.members):
            raise ValueError(
                f"{len(self.members)} members but {w.shape[0]} weights"
            )
        if not np.all(np.isfinite(w)):
            raise ValueError("ensemble weights must be finite")
        if np.any(w < 0.0):
            raise ValueError("ensemble weights must be nonnegative")
        defect = abs(w.sum() - 1.0)
        if defect > VALIDATION_TOL:
            raise ValueError(
                f"ensemble weights sum to {w.sum()!r}; defect {defect:.3e} "
                f"exceeds {VALIDATION_TOL:.0e}"
            )
        object.__setattr__(self, "members", tuple(self.members))
        object.__setattr__(self, "weights", _frozen(w / w.sum()))

    @property
    def order(self) -> int:
        return self.members[0].order

    @property
    def size(self) -> int:
        return len(self.members)

    def sample_index(self, rng: np.random.Generator) -> int:
        return int(rng.choice(self.size, p=self.weights))

    def sample(self, rng: np.random.Generator) -> Environment:
        return self.members[self.sample_index(rng)]

    def sample_index_array(self, shape, rng: np.random.Generator) -> np.ndarray:
        return rng.choice(self.size, size=shape, p=self.weights)


def sample_environment(ens: EnvironmentEnsemble, rng: np.random.Generator) -> Environment:
    """Draw one generation's environment from the mixture."""
    return ens.sample(rng)


def single_environment_ensemble(env: Environment, label: str = "") -> EnvironmentEnsemble:
    return EnvironmentEnsemble((env,), np.array([1.0]), label=label or env.label)


# -- interchange format ----------------------------------------------------
#
# {
#   "N": int,
#   "label": str (optional),
#   "environments": [
#     {
#       "weight": float,
#       "label": str (optional),
#       "laws": [
#         {"group_size": int,
#          "atoms": [{"tuple": [int, ...], "weight": float}, ...]},
#         ...
#       ]
#     },
#     ...
#   ]
# }
#
# Atom tuples must already be canonical (non-decreasing); the loader rejects
# anything else with the exact document position.


def _require(doc: Mapping, key: str, where: str):
    if key not in doc:
        raise EnsembleFormatError(f"{where}: missing required key {key!r}")
    return doc[key]


def ensemble_from_dict(doc: Mapping) -> EnvironmentEnsemble:
    """Build an ensemble from a parsed document, with position-precise errors."""
    if not isinstance(doc, Mapping):
        raise EnsembleFormatError("document root must be an object")
    order = _require(doc, "N", "document root")
    if not isinstance(order, int) or order < 1:
        raise EnsembleFormatError(f"document root: N must be a positive integer, got {order!r}")
    env_docs = _require(doc, "environments", "document root")
    if not isinstance(env_docs, Sequence) or isinstance(env_docs, (str, bytes)):
        raise EnsembleFormatError("document root: environments must be an array")
    if not env_docs:
        raise EnsembleFormatError("document root: environments array is empty")

    members = []
    weights = []
    for e, env_doc in enumerate(env_docs):
        where_env = f"environments[{e}]"
        if not isinstance(env_doc, Mapping):
            raise EnsembleFormatError(f"{where_env}: must be an object")
        weight = _require(env_doc, "weight", where_env)
        if not isinstance(weight, (int, float)) or isinstance(weight, bool):
            raise EnsembleFormatError(f"{where_env}.weight: must be a number, got {weight!r}")
        law_docs = _require(env_doc, "laws", where_env)
        if not isinstance(law_docs, Sequence) or isinstance(law_docs, (str, bytes)):
            raise EnsembleFormatError(f"{where_env}.laws: must be an array")
        laws = []
        for l, law_doc in enumerate(law_docs):
            where_law = f"{where_env}.laws[{l}]"
            if not isinstance(law_doc, Mapping):
                raise EnsembleFormatError(f"{where_law}: must be an object")
            group_size = _require(law_doc, "group_size", where_law)
            if not isinstance(group_size, int) or group_size < 1:
                raise EnsembleFormatError(
                    f"{where_law}.group_size: must be a positive integer, got {group_size!r}"
                )
            atom_docs = _require(law_doc, "atoms", where_law)
            if not isinstance(atom_docs, Sequence) or isinstance(atom_docs, (str, bytes)):
                raise EnsembleFormatError(f"{where_law}.atoms: must be an array")
            atoms = []
            for a, atom_doc in enumerate(atom_docs):
                where_atom = f"{where_law}.atoms[{a}]"
                if not isinstance(atom_doc, Mapping):
                    raise EnsembleFormatError(f"{where_atom}: must be an object")
                t = _require(atom_doc, "tuple", where_atom)
                w = _require(atom_doc, "weight", where_atom)
                if (not isinstance(t, Sequence)) or isinstance(t, (str, bytes)) or not all(
                    isinstance(v, int) and not isinstance(v, bool) for v in t
                ):
                    raise EnsembleFormatError(
                        f"{where_atom}.tuple: must be an array of integers, got {t!r}"
                    )
                if len(t) != group_size:
                    raise EnsembleFormatError(
                        f"{where_atom}.tuple: arity {len(t)} does not match "
                        f"group_size {group_size}"
                    )
                tt = tuple(t)
                if any(tt[r] > tt[r + 1] for r in range(len(tt) - 1)):
                    raise EnsembleFormatError(
                        f"{where_atom}.tuple: {list(tt)} is not canonical "
                        "(entries must be non-decreasing)"
                    )
                if not isinstance(w, (int, float)) or isinstance(w, bool):
                    raise EnsembleFormatError(
                        f"{where_atom}.weight: must be a number, got {w!r}"
                    )
                atoms.append((tt, float(w)))
            try:
                laws.append(SiblingLaw(group_size, order, tuple(atoms)))
            except ValueError as exc:
                raise EnsembleFormatError(f"{where_law}: {exc}") from exc
        label = env_doc.get("label", "")
        if not isinstance(label, str):
            raise EnsembleFormatError(f"{where_env}.label: must be a string")
        try:
            members.append(Environment(order, tuple(laws), label=label))
        except (ValueError, InvalidLawError) as exc:
            raise type(exc)(f"{where_env}: {exc}") from exc
        weights.append(float(weight))

    label = doc.get("label", "")
    if not isinstance(label, str):
        raise EnsembleFormatError("document root: label must be a string")
    return EnvironmentEnsemble(tuple(members), np.array(weights), label=label)


def load_ensemble(path) -> EnvironmentEnsemble:
    """Load an ensemble document from a JSON file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise EnsembleFormatError(f"{path}: invalid JSON at line {exc.lineno} "
                                  f"column {exc.colno}: {exc.msg}") from exc
    return ensemble_from_dict(doc)


def law_to_dict(law: SiblingLaw) -> dict:
    return {
        "group_size": law.group_size,
        "atoms": [{"tuple": list(t), "weight": w} for t, w in law.atoms],
    }


def environment_to_dict(env: Environment, weight: float) -> dict:
    out = {"weight": weight}
    if env.label:
        out["label"] = env.label
    out["laws"] = [law_to_dict(law) for law in env.laws]
    return out


def ensemble_to_dict(ens: EnvironmentEnsemble) -> dict:
    out: dict = {"N": ens.order}
    if ens.label:
        out["label"] = ens.label
    out["environments"] = [
        environment_to_dict(env, float(w)) for env, w in zip(ens.members, ens.weights)
    ]
    return out


def random_environment(rng: np.random.Generator, order: int,
                       concentration: float = 1.0, label: str = "") -> Environment:
    """Generate a random fully supported environment, mainly for testing.

    Every canonical multiset of each group size receives a Dirichlet weight, so
    all marginals are strictly positive and the mean matrix is positive.
    """
    laws = []
    for i in range(1, order + 1):
        tuples = list(itertools.combinations_with_replacement(range(order + 1), i))
        w = rng.dirichlet(np.full(len(tuples), concentration))
        # guard against zeros from extreme Dirichlet draws
        w = w + 1e-9
        w = w / w.sum()
        laws.append(SiblingLaw(i, order, tuple(zip(tuples, map(float, w)))))
    return Environment(order, tuple(laws), label=label)
