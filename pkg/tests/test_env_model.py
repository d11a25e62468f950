"""Offspring-law containers, validation, evaluation, and serialization."""
import json
import math

import numpy as np
import pytest

from sibdep.env_model import (
    Environment,
    EnvironmentEnsemble,
    SiblingLaw,
    ensemble_from_dict,
    ensemble_to_dict,
    load_ensemble,
    random_environment,
    single_environment_ensemble,
    validate_sibling_law,
)
from sibdep.errors import EnsembleFormatError, InvalidLawError

from conftest import make_rich, make_lean


# -- construction and structural checks ------------------------------------

def test_atoms_sorted_and_frozen():
    law = SiblingLaw(2, 2, (((1, 2), 0.5), ((0, 0), 0.5)))
    assert [t for t, _ in law.atoms] == [(0, 0), (1, 2)]


def test_construction_rejects_bad_shapes():
    with pytest.raises(ValueError, match="arity"):
        SiblingLaw(2, 2, (((1,), 1.0),))
    with pytest.raises(ValueError, match="canonical"):
        SiblingLaw(2, 2, (((2, 1), 1.0),))
    with pytest.raises(ValueError, match="duplicate"):
        SiblingLaw(2, 2, (((1, 1), 0.5), ((1, 1), 0.5)))
    with pytest.raises(ValueError, match="at least one atom"):
        SiblingLaw(1, 2, ())
    with pytest.raises(ValueError, match="exceeds order"):
        SiblingLaw(3, 2, (((1, 1, 1), 1.0),))


def test_validation_report_flags_each_defect():
    bad_sum = SiblingLaw(2, 2, (((0, 0), 0.10), ((0, 1), 0.30), ((0, 2), 0.10),
                                ((1, 1), 0.20), ((1, 2), 0.20), ((2, 2), 0.20)))
    rep = validate_sibling_law(bad_sum)
    assert not rep.ok
    assert rep.normalization_defect == pytest.approx(0.10, abs=1e-12)

    neg = SiblingLaw(1, 2, (((0,), 1.5), ((1,), -0.5)))
    rep = validate_sibling_law(neg)
    assert rep.negative_weights and not rep.ok

    oor = SiblingLaw(1, 1, (((0,), 0.5), ((2,), 0.5)))
    rep = validate_sibling_law(oor)
    assert rep.out_of_range and not rep.ok

    inf = SiblingLaw(1, 1, (((0,), 0.5), ((1,), math.inf)))
    rep = validate_sibling_law(inf)
    assert rep.nonfinite_weights and not rep.ok


def test_environment_requires_every_group_size():
    law1 = SiblingLaw(1, 2, (((0,), 0.5), ((1,), 0.5)))
    with pytest.raises(ValueError, match="missing laws"):
        Environment(2, (law1,))
    with pytest.raises(ValueError, match="duplicate law"):
        Environment(1, (SiblingLaw(1, 1, (((1,), 1.0),)),
                        SiblingLaw(1, 1, (((0,), 1.0),)))
                    )


def test_environment_rejects_invalid_weights_with_defect():
    law1 = SiblingLaw(1, 2, (((0,), 0.5), ((1,), 0.5)))
    bad = SiblingLaw(2, 2, (((0, 0), 0.6), ((1, 1), 0.6)))
    with pytest.raises(InvalidLawError, match="defect"):
        Environment(2, (law1, bad))


def test_environment_normalizes_exactly_once():
    env = make_rich()
    for law in env.laws:
        assert law.weight_sum() == pytest.approx(1.0, abs=1e-15)


# -- marginals and pair marginals ------------------------------------------

def test_rich_marginals_match_hand_values():
    env = make_rich()
    assert [env.marginal(2, j) for j in (0, 1, 2)] == pytest.approx(
        [0.30, 0.45, 0.25], abs=1e-15)
    assert env.pair_marginal(2, 1, 1) == pytest.approx(0.20, abs=1e-15)
    assert env.pair_marginal(2, 1, 2) == pytest.approx(0.10, abs=1e-15)


def test_pair_matrix_symmetric_and_row_consistent():
    gen = np.random.default_rng(7)
    for _ in range(20):
        order = int(gen.integers(2, 6))
        env = random_environment(gen, order)
        for i in range(2, order + 1):
            pm = env.pair_matrix(i)
            assert np.allclose(pm, pm.T, atol=1e-14)
            assert np.allclose(pm.sum(axis=1), env.marginal_row(i),
                               atol=1e-12)


def test_marginal_row_sums_to_one():
    gen = np.random.default_rng(11)
    for _ in range(10):
        env = random_environment(gen, int(gen.integers(1, 6)))
        for i in range(1, env.order + 1):
            assert env.marginal_row(i).sum() == pytest.approx(1.0, abs=1e-12)


def test_ordered_expansion_is_exchangeable():
    env = make_rich()
    oe = env.laws[1].ordered_expansion()
    assert oe[(0, 1)] == pytest.approx(oe[(1, 0)], abs=1e-15)
    assert oe[(0, 1)] == pytest.approx(0.15, abs=1e-15)
    assert sum(oe.values()) == pytest.approx(1.0, abs=1e-12)


def test_orbit_sizes_count_distinct_orderings():
    law = SiblingLaw(3, 3, (((0, 0, 0), 0.25), ((0, 1, 2), 0.25),
                            ((1, 1, 2), 0.25), ((3, 3, 3), 0.25)))
    assert law.orbit_sizes().tolist() == [1, 6, 3, 1]


# -- generating maps -------------------------------------------------------

def test_phi_and_f_frozen_values():
    env = make_rich()
    assert env.phi(2, (0.5, 0.5)) == pytest.approx(0.425, abs=1e-12)
    assert env.f(2, (0.5, 0.5)) == pytest.approx(0.5875, abs=1e-12)
    assert env.phi(1, (0.0, 0.0)) == pytest.approx(0.2, abs=1e-15)


def test_phi_fixed_point_and_monotonicity():
    gen = np.random.default_rng(23)
    for _ in range(10):
        env = random_environment(gen, int(gen.integers(2, 5)))
        ones = np.ones(env.order)
        assert np.allclose(env.phi_vector(ones), ones, atol=1e-12)
        lo = gen.uniform(0.0, 0.5, env.order)
        hi = lo + gen.uniform(0.0, 0.5, env.order)
        assert np.all(env.phi_vector(lo) <= env.phi_vector(hi) + 1e-14)


def test_phi_vector_matches_scalar_phi():
    env = make_lean()
    s = np.array([0.3, 0.8])
    vec = env.phi_vector(s)
    assert vec[0] == pytest.approx(env.phi(1, s), abs=1e-15)
    assert vec[1] == pytest.approx(env.phi(2, s), abs=1e-15)


def test_phi_map_batches_rows_independently():
    env = make_rich()
    rows = np.array([[0.1, 0.9], [0.5, 0.5], [1.0, 0.0]])
    batched = env.phi_map(rows)
    for r, row in enumerate(rows):
        assert np.allclose(batched[r], env.phi_vector(row), atol=1e-15)


def test_phi_rejects_out_of_box_arguments():
    # evaluation allows slack up to 1.5 for derivative probes, nothing beyond
    env = make_rich()
    assert env.phi(1, (1.5, 1.0)) > 1.0
    with pytest.raises(ValueError):
        env.phi(1, (1.6, 0.0))
    with pytest.raises(ValueError):
        env.f(1, (-0.1, 0.0))


# -- sampling --------------------------------------------------------------

def test_sample_offspring_vector_reproducible_and_in_range():
    env = make_rich()
    a = [env.sample_offspring_vector(2, np.random.default_rng(5))
         for _ in range(10)]
    b = [env.sample_offspring_vector(2, np.random.default_rng(5))
         for _ in range(10)]
    assert a == b
    for t in a:
        assert len(t) == 2 and all(0 <= v <= 2 for v in t)


def test_sample_empirical_marginal_matches_exact():
    env = make_rich()
    gen = np.random.default_rng(99)
    draws = np.array([env.sample_offspring_vector(2, gen) for _ in range(4000)])
    for j in (0, 1, 2):
        emp = float((draws == j).sum()) / (2 * 4000)
        assert emp == pytest.approx(env.marginal(2, j), abs=0.02)


def test_sample_atom_counts_totals():
    env = make_rich()
    counts = env.sample_atom_counts(2, 500, np.random.default_rng(3))
    assert counts.sum() == 500
    assert counts.shape == (env.laws[1].atom_count,)


def test_ensemble_sampling_follows_weights():
    ens = EnvironmentEnsemble((make_rich(), make_lean()),
                              np.array([0.2, 0.8]))
    idx = ens.sample_index_array(20_000, np.random.default_rng(17))
    assert abs(float((idx == 0).mean()) - 0.2) < 0.01
    assert ens.sample_index_array(
        7, np.random.default_rng(2)).tolist() == ens.sample_index_array(
        7, np.random.default_rng(2)).tolist()


def test_ensemble_weight_validation():
    envs = (make_rich(), make_lean())
    with pytest.raises(ValueError, match="defect"):
        EnvironmentEnsemble(envs, np.array([0.8, 0.8]))
    with pytest.raises(ValueError, match="nonnegative"):
        EnvironmentEnsemble(envs, np.array([1.5, -0.5]))
    with pytest.raises(ValueError, match="disagree on order"):
        EnvironmentEnsemble((make_rich(),
                             Environment(1, (SiblingLaw(1, 1, (((1,), 1.0),)),)),),
                            np.array([0.5, 0.5]))
    assert single_environment_ensemble(make_rich()).size == 1


def test_random_environment_always_valid():
    gen = np.random.default_rng(31)
    for _ in range(25):
        env = random_environment(gen, int(gen.integers(1, 6)))
        for law in env.laws:
            assert validate_sibling_law(law).ok


# -- interchange format ----------------------------------------------------

def test_round_trip_preserves_structure(tmp_path):
    ens = EnvironmentEnsemble((make_rich(), make_lean()),
                              np.array([0.3, 0.7]), label="pair")
    path = tmp_path / "pair.json"
    path.write_text(json.dumps(ensemble_to_dict(ens)), encoding="utf-8")
    back = load_ensemble(path)
    assert back.label == "pair" and back.size == 2
    assert np.allclose(back.weights, [0.3, 0.7], atol=1e-15)
    for env, env2 in zip(ens.members, back.members):
        assert env.label == env2.label
        for law, law2 in zip(env.laws, env2.laws):
            assert [t for t, _ in law.atoms] == [t for t, _ in law2.atoms]
            got = [w for _, w in law2.atoms]
            want = [w for _, w in law.atoms]
            assert np.allclose(got, want, rtol=0.0, atol=1e-14)


def test_format_errors_carry_document_positions():
    with pytest.raises(EnsembleFormatError, match="document root"):
        ensemble_from_dict([])
    with pytest.raises(EnsembleFormatError, match="missing required key 'N'"):
        ensemble_from_dict({"environments": []})
    doc = {"N": 2, "environments": [
        {"weight": 1.0, "laws": [
            {"group_size": 1, "atoms": [{"tuple": [0], "weight": 0.5},
                                        {"tuple": [1], "weight": 0.5}]},
            {"group_size": 2, "atoms": [{"tuple": [2, 1], "weight": 1.0}]},
        ]}]}
    with pytest.raises(EnsembleFormatError,
                       match=r"environments\[0\].laws\[1\].atoms\[0\].tuple"):
        ensemble_from_dict(doc)
    doc["environments"][0]["laws"][1]["atoms"][0] = {"tuple": [1], "weight": 1.0}
    with pytest.raises(EnsembleFormatError, match="arity 1 does not match"):
        ensemble_from_dict(doc)


def test_invalid_json_reports_location(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"N": 2,', encoding="utf-8")
    with pytest.raises(EnsembleFormatError, match="line"):
        load_ensemble(path)


def test_invalid_law_in_document_names_member():
    doc = {"N": 1, "environments": [
        {"weight": 1.0, "label": "bad", "laws": [
            {"group_size": 1, "atoms": [{"tuple": [0], "weight": 0.7},
                                        {"tuple": [1], "weight": 0.7}]},
        ]}]}
    with pytest.raises(InvalidLawError, match=r"environments\[0\]"):
        ensemble_from_dict(doc)
