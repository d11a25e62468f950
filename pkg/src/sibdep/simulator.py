"""Forward simulation, exact quenched survival, and the scaling experiments.

Two complementary engines live here.  The particle engine advances
group-type count vectors generation by generation with multinomial draws,
which keeps memory independent of population size; equal-type groups are
exchangeable, so the aggregated law is the exact process law.  The quenched
engine never simulates populations at all: for a fixed environment sequence
it composes the offspring generating maps backward from the zero vector,
giving extinction probabilities that are exact up to float rounding, and
Monte Carlo enters only through the environment sequence.

Survival estimates therefore carry a method tag: "quenched-exact" for the
composition route, "particle-mc" for the particle route.  Conditional-law
estimation must realize populations jointly with survival, so it is always
particle based; in regimes where unconditioned survival is too rare to hit,
walkers that die are resampled from the live ones, which keeps the empirical
law aimed at the same conditional target at O(1/walkers) bias.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from .env_model import Environment, EnvironmentEnsemble
from .errors import InsufficientSurvivorsError, PopulationCapError
from .rng import DEFAULT_CHUNK_SIZE, run_chunked

POPULATION_CAP = 1_000_000_000
MIN_SURVIVORS = 100


@dataclass(frozen=True)
class MacroState:
    """Group counts by type at one generation."""

    counts: np.ndarray     # (N,) nonnegative ints; counts[k-1] holds type k
    generation: int

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if c.ndim != 1 or np.any(c < 0):
            raise ValueError("counts must be a nonnegative integer vector")
        c = c.copy()
        c.flags.writeable = False
        object.__setattr__(self, "counts", c)

    @property
    def zeta(self) -> int:
        """Number of individuals: each type-k group holds k members."""
        return int(self.counts @ np.arange(1, self.counts.shape[0] + 1))

    @property
    def extinct(self) -> bool:
        return bool(self.counts.sum() == 0)


def _member_tables(ens: EnvironmentEnsemble):
    """Per member and type: atom weights, child-group counts, children totals."""
    tables = []
    for env in ens.members:
        per_type = []
        for i in range(1, env.order + 1):
            law = env.law(i)
            cm = np.rint(law.count_matrix()).astype(np.int64)
            per_type.append((law.weight_array(), cm[:, 1:], cm @ np.arange(env.order + 1)))
        tables.append(per_type)
    return tables


def _advance_batch(counts, member_idx, tables, gen, generation, cap=POPULATION_CAP):
    """One generation for a batch of replicas; returns (new counts, children born)."""
    new = np.zeros_like(counts)
    born = np.zeros(counts.shape[0], dtype=np.int64)
    for m, per_type in enumerate(tables):
        mask = member_idx == m
        if not mask.any():
            continue
        sub = counts[mask]
        add = np.zeros_like(sub)
        add_born = np.zeros(sub.shape[0], dtype=np.int64)
        for k, (weights, child_counts, totals) in enumerate(per_type):
            nk = sub[:, k]
            if not nk.any():
                continue
            draws = gen.multinomial(nk, weights)
            add += draws @ child_counts
            add_born += draws @ totals
        new[mask] = add
        born[mask] = add_born
    sizes = new @ np.arange(1, new.shape[1] + 1, dtype=np.int64)
    if np.any(sizes > cap):
        worst = int(sizes.max())
        raise PopulationCapError(
            f"population {worst} exceeds the cap {cap} at generation {generation}",
            generation=generation, cap=cap,
        )
    return new, born


def _initial_counts(order: int, initial_type: int, replicas: int) -> np.ndarray:
    if not 1 <= initial_type <= order:
        raise ValueError(f"initial type {initial_type} outside 1..{order}")
    counts = np.zeros((replicas, order), dtype=np.int64)
    counts[:, initial_type - 1] = 1
    return counts


def simulate_micro(ens: EnvironmentEnsemble, initial_type: int, horizon: int,
                   rng: np.random.Generator, cap: int = POPULATION_CAP) -> list[MacroState]:
    """One trajectory, group resolved: a single size-i group starts at time 0.

    Every generation draws one environment for all groups, then each group
    draws its members' joint child counts.  Children of one member stay
    together as a new group of their own size; childless members leave
    nothing.  Raises a cap error carrying the partial trajectory.
    """
    tables = _member_tables(ens)
    counts = _initial_counts(ens.order, initial_type, 1)
    states = [MacroState(counts[0], 0)]
    for t in range(1, horizon + 1):
        member = ens.sample_index(rng)
        try:
            counts, _ = _advance_batch(counts, np.array([member]), tables, rng, t, cap)
        except PopulationCapError as exc:
            raise PopulationCapError(str(exc), generation=exc.generation,
                                     cap=exc.cap, trajectory=states) from None
        states.append(MacroState(counts[0], t))
        if not counts.any():
            states.extend(MacroState(counts[0], s) for s in range(t + 1, horizon + 1))
            break
    return states


def simulate_macro_coupled(ens: EnvironmentEnsemble, initial_type: int, horizon: int,
                           rng: np.random.Generator, cap: int = POPULATION_CAP):
    """One trajectory bookkept twice from identical draws.

    The micro route turns each drawn outcome into child groups by counting
    the sibship sizes in the outcome tuple directly; the macro route applies
    the precomputed child-group count tables.  Both see the same multinomial
    draws, so the returned trajectories must agree state by state, and the
    individual count of either equals the weighted group total of the other.
    """
    order = ens.order
    # independent derivation of the per-atom child-group counts, from raw tuples
    micro_tables = []
    for env in ens.members:
        per_type = []
        for i in range(1, order + 1):
            law = env.law(i)
            by_value = np.zeros((law.atom_count, order), dtype=np.int64)
            for a, (combo, _) in enumerate(law.atoms):
                for c in combo:
                    if c >= 1:
                        by_value[a, c - 1] += 1
            per_type.append(by_value)
        micro_tables.append(per_type)
    macro_tables = _member_tables(ens)

    micro_counts = _initial_counts(order, initial_type, 1)[0]
    macro_counts = micro_counts.copy()
    micro = [MacroState(micro_counts, 0)]
    macro = [MacroState(macro_counts, 0)]
    for t in range(1, horizon + 1):
        member = ens.sample_index(rng)
        new_micro = np.zeros(order, dtype=np.int64)
        new_macro = np.zeros(order, dtype=np.int64)
        for k in range(order):
            nk = int(macro_counts[k])
            if nk == 0:
                continue
            weights, child_counts, _ = macro_tables[member][k]
            draws = rng.multinomial(nk, weights)
            new_macro += draws @ child_counts
            new_micro += draws @ micro_tables[member][k]
        size = int(new_macro @ np.arange(1, order + 1))
        if size > cap:
            raise PopulationCapError(
                f"population {size} exceeds the cap {cap} at generation {t}",
                generation=t, cap=cap, trajectory=(micro, macro),
            )
        micro_counts, macro_counts = new_micro, new_macro
        micro.append(MacroState(micro_counts, t))
        macro.append(MacroState(macro_counts, t))
        if not macro_counts.any():
            for s in range(t + 1, horizon + 1):
                micro.append(MacroState(micro_counts, s))
                macro.append(MacroState(macro_counts, s))
            break
    return micro, macro


# -- exact quenched survival ------------------------------------------------


def quenched_survival(env_seq: Sequence[Environment], initial_type: int) -> float:
    """Exact survival probability for one fixed environment sequence.

    Composes the offspring generating maps backward from the zero vector;
    the resulting coordinate is the extinction probability of a line started
    by one group of the requested type.  No sampling is involved.
    """
    envs = list(env_seq)
    if not envs:
        raise ValueError("need at least one environment")
    order = envs[0].order
    if not 1 <= initial_type <= order:
        raise ValueError(f"initial type {initial_type} outside 1..{order}")
    s = np.zeros(order)
    for env in reversed(envs):
        s = env.phi_vector(s)
    return float(1.0 - s[initial_type - 1])


def _quenched_survival_rows(ens: EnvironmentEnsemble, member_idx: np.ndarray,
                            initial_type: int) -> np.ndarray:
    """Vectorized backward composition over many index rows at once."""
    rows, length = member_idx.shape
    s = np.zeros((rows, ens.order))
    for t in range(length - 1, -1, -1):
        col = member_idx[:, t]
        for m, env in enumerate(ens.members):
            mask = col == m
            if mask.any():
                s[mask] = env.phi_map(s[mask])
    return 1.0 - s[:, initial_type - 1]


@dataclass(frozen=True)
class SurvivalEstimate:
    horizon: int
    initial_type: int
    value: float
    stderr: float
    replicas: int
    method: str        # "quenched-exact" or "particle-mc"

    def to_dict(self) -> dict:
        return {"horizon": self.horizon, "initial_type": self.initial_type,
                "value": self.value, "stderr": self.stderr,
                "replicas": self.replicas, "method": self.method}


def _summarize(values: np.ndarray, horizon, initial_type, method) -> SurvivalEstimate:
    n = values.shape[0]
    stderr = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return SurvivalEstimate(horizon=horizon, initial_type=initial_type,
                            value=float(values.mean()), stderr=stderr,
                            replicas=n, method=method)


def estimate_survival(ens: EnvironmentEnsemble, initial_type: int, horizon: int,
                      replicas: int = 10_000, seed: int = 0,
                      method: str = "quenched",
                      chunk_size: int = DEFAULT_CHUNK_SIZE,
                      workers: int | None = None) -> SurvivalEstimate:
    """Annealed survival probability at the given horizon.

    The quenched method samples environment sequences only and scores each
    with the exact composition above, so all demographic noise is gone; the
    particle method simulates populations and scores the survival indicator.
    """
    if replicas < 2:
        raise ValueError("replicas >= 2 required")
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    if method not in ("quenched", "particle"):
        raise ValueError(f"unknown method {method!r}")

    if method == "quenched":
        def task(gen, size):
            idx = ens.sample_index_array((size, horizon), gen)
            return _quenched_survival_rows(ens, idx, initial_type)
        tag = "quenched-exact"
    else:
        tables = _member_tables(ens)

        def task(gen, size):
            counts = _initial_counts(ens.order, initial_type, size)
            for t in range(1, horizon + 1):
                idx = ens.sample_index_array(size, gen)
                counts, _ = _advance_batch(counts, idx, tables, gen, t)
            return (counts.sum(axis=1) > 0).astype(float)
        tag = "particle-mc"

    values = np.concatenate(run_chunked(task, replicas, seed,
                                        chunk_size=chunk_size, workers=workers))
    return _summarize(values, horizon, initial_type, tag)


@dataclass(frozen=True)
class ScanRow:
    horizon: int
    estimate: float
    stderr: float
    scaled: float      # horizon^(1/alpha) * estimate

    def to_dict(self) -> dict:
        return {"horizon": self.horizon, "estimate": self.estimate,
                "stderr": self.stderr, "scaled": self.scaled}


def survival_scaling_scan(ens: EnvironmentEnsemble, initial_type: int,
                          horizons: Sequence[int], replicas: int = 10_000,
                          alpha: float = 2.0, seed: int = 0,
                          chunk_size: int = DEFAULT_CHUNK_SIZE,
                          workers: int | None = None) -> tuple[ScanRow, ...]:
    """Quenched survival across horizons with the scaling column attached.

    Every horizon reuses prefixes of one set of sampled environment
    sequences, so the per-sequence survival values are nested and the
    estimates decrease monotonically in the horizon by construction.
    """
    hs = sorted(set(int(h) for h in horizons))
    if not hs or hs[0] < 1:
        raise ValueError("horizons must be positive")
    if replicas < 2:
        raise ValueError("replicas >= 2 required")
    longest = hs[-1]

    def task(gen, size):
        idx = ens.sample_index_array((size, longest), gen)
        return np.stack([_quenched_survival_rows(ens, idx[:, :h], initial_type)
                         for h in hs], axis=1)

    values = np.concatenate(run_chunked(task, replicas, seed,
                                        chunk_size=chunk_size, workers=workers))
    rows = []
    for j, h in enumerate(hs):
        est = _summarize(values[:, j], h, initial_type, "quenched-exact")
        rows.append(ScanRow(horizon=h, estimate=est.value, stderr=est.stderr,
                            scaled=h ** (1.0 / alpha) * est.value))
    return tuple(rows)


# -- conditional size distribution ------------------------------------------


@dataclass(frozen=True)
class ConditionalSizeDistribution:
    """Empirical law of the individual count given survival to the horizon."""

    horizon: int
    initial_type: int
    support: np.ndarray        # distinct individual counts, ascending
    probabilities: np.ndarray  # matching masses, sum 1
    survivors: int
    replicas: int
    method: str                # "direct" or "resample"
    s_grid: np.ndarray
    pgf_values: np.ndarray     # empirical generating function on s_grid

    def probability_of(self, size: int) -> float:
        pos = np.searchsorted(self.support, size)
        if pos < self.support.shape[0] and self.support[pos] == size:
            return float(self.probabilities[pos])
        return 0.0

    def mean(self) -> float:
        return float(self.support @ self.probabilities)

    def to_dict(self) -> dict:
        return {"horizon": self.horizon, "initial_type": self.initial_type,
                "support": self.support.tolist(),
                "probabilities": self.probabilities.tolist(),
                "survivors": self.survivors, "replicas": self.replicas,
                "method": self.method, "s_grid": self.s_grid.tolist(),
                "pgf_values": self.pgf_values.tolist()}


def total_variation_distance(a: ConditionalSizeDistribution,
                             b: ConditionalSizeDistribution) -> float:
    support = np.union1d(a.support, b.support)
    pa = np.array([a.probability_of(int(z)) for z in support])
    pb = np.array([b.probability_of(int(z)) for z in support])
    return 0.5 * float(np.abs(pa - pb).sum())


def _direct_sizes(ens, initial_type, horizon, replicas, seed, chunk_size, workers):
    tables = _member_tables(ens)

    def task(gen, size):
        counts = _initial_counts(ens.order, initial_type, size)
        for t in range(1, horizon + 1):
            idx = ens.sample_index_array(size, gen)
            counts, _ = _advance_batch(counts, idx, tables, gen, t)
        return counts @ np.arange(1, ens.order + 1, dtype=np.int64)

    sizes = np.concatenate(run_chunked(task, replicas, seed,
                                       chunk_size=chunk_size, workers=workers))
    return sizes[sizes > 0]


def _resampled_sizes(ens, initial_type, horizon, replicas, seed, chunk_size, workers):
    """Survival-conditioned walker system, resampling dead walkers each step.

    All resampling stays inside a chunk, so the merged output is independent
    of the worker count.  The resulting sample is exchangeable but not
    independent; the conditional-law bias shrinks like 1/chunk walkers.
    """
    tables = _member_tables(ens)

    def task(gen, size):
        counts = _initial_counts(ens.order, initial_type, size)
        for t in range(1, horizon + 1):
            idx = ens.sample_index_array(size, gen)
            counts, _ = _advance_batch(counts, idx, tables, gen, t)
            dead = ~counts.any(axis=1)
            n_dead = int(dead.sum())
            if n_dead == size:
                raise InsufficientSurvivorsError(
                    f"every walker died at generation {t}; "
                    "the regime is too close to instant extinction",
                    survivors=0, required=1,
                )
            if n_dead:
                alive = np.flatnonzero(~dead)
                counts[dead] = counts[gen.choice(alive, size=n_dead)]
        return counts @ np.arange(1, ens.order + 1, dtype=np.int64)

    return np.concatenate(run_chunked(task, replicas, seed,
                                      chunk_size=chunk_size, workers=workers))


def conditional_size_distribution(ens: EnvironmentEnsemble, initial_type: int,
                                  horizon: int, replicas: int = 20_000,
                                  seed: int = 0, method: str = "auto",
                                  s_grid: np.ndarray | None = None,
                                  chunk_size: int = DEFAULT_CHUNK_SIZE,
                                  workers: int | None = None
                                  ) -> ConditionalSizeDistribution:
    """Law of the individual count at the horizon given it is positive.

    Conditioning needs jointly realized populations, so this is particle
    based throughout.  "direct" keeps surviving replicas of a plain forward
    run; "resample" replaces dead walkers with copies of live ones, which is
    the only tractable route when survival is far below 1/replicas; "auto"
    picks by a cheap quenched survival estimate of the expected survivor
    count.
    """
    if replicas < 2:
        raise ValueError("replicas >= 2 required")
    if method not in ("auto", "direct", "resample"):
        raise ValueError(f"unknown method {method!r}")
    if method == "auto":
        probe = estimate_survival(ens, initial_type, horizon,
                                  replicas=min(replicas, 2048), seed=seed,
                                  chunk_size=chunk_size, workers=workers)
        expected = probe.value * replicas
        method = "direct" if expected >= 10 * MIN_SURVIVORS else "resample"

    if method == "direct":
        sizes = _direct_sizes(ens, initial_type, horizon, replicas, seed,
                              chunk_size, workers)
        if sizes.shape[0] < MIN_SURVIVORS:
            raise InsufficientSurvivorsError(
                f"{sizes.shape[0]} survivors out of {replicas} replicas; "
                f"at least {MIN_SURVIVORS} needed (switch to resample)",
                survivors=int(sizes.shape[0]), required=MIN_SURVIVORS,
            )
    else:
        sizes = _resampled_sizes(ens, initial_type, horizon, replicas, seed,
                                 chunk_size, workers)

    support, freq = np.unique(sizes, return_counts=True)
    probs = freq / freq.sum()
    grid = np.linspace(0.0, 1.0, 11) if s_grid is None else np.asarray(s_grid, dtype=float)
    pgf = (grid[:, None] ** support[None, :]) @ probs
    return ConditionalSizeDistribution(
        horizon=horizon, initial_type=initial_type,
        support=support, probabilities=probs,
        survivors=int(sizes.shape[0]), replicas=replicas, method=method,
        s_grid=grid, pgf_values=pgf,
    )


# -- normalized log-population paths ----------------------------------------


@dataclass(frozen=True)
class PathRecord:
    """One surviving replica's normalized log-population trajectory."""

    times: np.ndarray     # 0, 1/n, ..., 1
    values: np.ndarray    # horizon^(-1/alpha) * scale * log individual count
    survived: bool = True

    @property
    def endpoint(self) -> float:
        return float(self.values[-1])


@dataclass(frozen=True)
class PathEnsemble:
    """Surviving-path collection with its endpoint sample and mean path.

    Iterates as a sequence of path records.
    """

    records: tuple[PathRecord, ...]
    times: np.ndarray
    endpoints: np.ndarray
    mean_path: np.ndarray
    horizon: int
    alpha: float
    replicas: int
    survivors: int

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, item) -> PathRecord:
        return self.records[item]

    def summary_dict(self) -> dict:
        return {"horizon": self.horizon, "alpha": self.alpha,
                "replicas": self.replicas, "survivors": self.survivors,
                "times": self.times.tolist(),
                "mean_path": self.mean_path.tolist(),
                "endpoints": self.endpoints.tolist()}


def log_population_path(ens: EnvironmentEnsemble, initial_type: int, horizon: int,
                        replicas: int = 20_000, alpha: float = 2.0, seed: int = 0,
                        scale_sequence: Callable[[int], float] | None = None,
                        cap: int = POPULATION_CAP,
                        chunk_size: int = DEFAULT_CHUNK_SIZE,
                        workers: int | None = None) -> PathEnsemble:
    """Normalized log individual counts along surviving replicas.

    A replica survives when its population at the horizon is positive, in
    which case it was positive at every earlier time too, so the whole
    recorded path is well defined.  The scale sequence defaults to the
    constant 1.  Long critical runs can push rare surviving paths past the
    default cap; raising the cap (counts are exact 64-bit integers well
    beyond it) lets those tails complete instead of failing the run.
    """
    if replicas < 2:
        raise ValueError("replicas >= 2 required")
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    if alpha <= 0.0:
        raise ValueError("alpha must be positive")
    tables = _member_tables(ens)
    scale = horizon ** (-1.0 / alpha)
    if scale_sequence is not None:
        scale *= float(scale_sequence(horizon))

    def task(gen, size):
        counts = _initial_counts(ens.order, initial_type, size)
        weights_k = np.arange(1, ens.order + 1, dtype=np.int64)
        logs = np.zeros((size, horizon + 1))
        logs[:, 0] = math.log(initial_type)
        for t in range(1, horizon + 1):
            idx = ens.sample_index_array(size, gen)
            counts, _ = _advance_batch(counts, idx, tables, gen, t, cap)
            sizes = counts @ weights_k
            live = sizes > 0
            logs[live, t] = np.log(sizes[live])
            logs[~live, t] = np.nan
        alive = counts.any(axis=1)
        return logs[alive] * scale

    parts = run_chunked(task, replicas, seed, chunk_size=chunk_size, workers=workers)
    kept = np.concatenate(parts) if parts else np.empty((0, horizon + 1))
    survivors = kept.shape[0]
    if survivors == 0:
        raise InsufficientSurvivorsError(
            f"no replica of {replicas} survived to generation {horizon}",
            survivors=0, required=1,
        )
    times = np.arange(horizon + 1) / horizon
    records = tuple(PathRecord(times=times, values=row) for row in kept)
    return PathEnsemble(
        records=records, times=times, endpoints=kept[:, -1].copy(),
        mean_path=kept.mean(axis=0), horizon=horizon, alpha=alpha,
        replicas=replicas, survivors=survivors,
    )
