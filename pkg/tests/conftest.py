"""Shared fixture environments.

The two-type fixtures here are built inline rather than loaded from the
bundled presets, so preset files and in-code definitions can be checked
against each other.
"""
import numpy as np
import pytest

from sibdep.env_model import Environment, EnvironmentEnsemble, SiblingLaw


def make_rich() -> Environment:
    """Two-type environment with strong growth (top root about 1.078)."""
    return Environment(2, (
        SiblingLaw(1, 2, (((0,), 0.2), ((1,), 0.3), ((2,), 0.5))),
        SiblingLaw(2, 2, (((0, 0), 0.10), ((0, 1), 0.30), ((0, 2), 0.10),
                          ((1, 1), 0.20), ((1, 2), 0.20), ((2, 2), 0.10))),
    ), label="rich")


def make_lean() -> Environment:
    """Two-type environment with strong decay (top root about 0.661)."""
    return Environment(2, (
        SiblingLaw(1, 2, (((0,), 0.5), ((1,), 0.3), ((2,), 0.2))),
        SiblingLaw(2, 2, (((0, 0), 0.30), ((0, 1), 0.35), ((1, 1), 0.10),
                          ((0, 2), 0.10), ((1, 2), 0.10), ((2, 2), 0.05))),
    ), label="lean")


def product_pair_env(p, label="") -> Environment:
    """Environment whose siblings reproduce independently with count law p.

    The pair law is the symmetrized product, so the mean matrix has equal
    rows and the all-ones direction is a right eigenvector: handy for
    building ensembles whose members share one eigendirection.
    """
    atoms = []
    for a in range(3):
        for b in range(a, 3):
            atoms.append(((a, b), p[a] * p[b] * (1.0 if a == b else 2.0)))
    return Environment(2, (
        SiblingLaw(1, 2, (((0,), p[0]), ((1,), p[1]), ((2,), p[2]))),
        SiblingLaw(2, 2, tuple(atoms)),
    ), label=label)


def make_line() -> Environment:
    """One type, exactly one child each: the frozen deterministic line."""
    return Environment(1, (SiblingLaw(1, 1, (((1,), 1.0),)),), label="line")


@pytest.fixture(scope="session")
def rich():
    return make_rich()


@pytest.fixture(scope="session")
def lean():
    return make_lean()


@pytest.fixture(scope="session")
def rich_only(rich):
    return EnvironmentEnsemble((rich,), np.array([1.0]), label="rich-only")


@pytest.fixture(scope="session")
def lean_only(lean):
    return EnvironmentEnsemble((lean,), np.array([1.0]), label="lean-only")


@pytest.fixture(scope="session")
def ab_equal(rich, lean):
    return EnvironmentEnsemble((rich, lean), np.array([0.5, 0.5]),
                               label="ab-equal")


@pytest.fixture(scope="session")
def ab_sub(rich, lean):
    return EnvironmentEnsemble((rich, lean), np.array([0.2, 0.8]),
                               label="ab-sub")


@pytest.fixture(scope="session")
def critical_pair():
    up = product_pair_env((1.0 / 12.0, 1.0 / 2.0, 5.0 / 12.0), "flood")
    down = product_pair_env((1.0 / 2.0, 1.0 / 4.0, 1.0 / 4.0), "ebb")
    return EnvironmentEnsemble((up, down), np.array([0.5, 0.5]),
                               label="critical")


@pytest.fixture(scope="session")
def line_only():
    return EnvironmentEnsemble((make_line(),), np.array([1.0]), label="line")
