"""Correspondence between systems/maps and representations/series families."""

import numpy as np
import pytest

from src.core.bridge import lss_dims_of_repr, lss_index_set, lss_of_repr, psi_from_markov, repr_of_lss
from src.core.errors import DimensionMismatchError, OutOfDepthError
from src.core.hankel import build_hankel, build_series_hankel
from src.core.lss import ModeWord, check_morphism, io_map
from src.core.markov import MarkovFamily, extract_markov
from src.core.rational import RationalRepresentation, morphism_residuals, obs_space, reach_space
from src.core.realization import obs_matrix, reach_matrix
from src.testing.random_systems import pad_unobservable, pad_unreachable, random_system
from src.utils.numerics import Subspace, kernel_basis, same_subspace

SEEDS = range(30)


def draw(seed):
    rng = np.random.default_rng(seed)
    D = int(rng.integers(1, 4))
    m = int(rng.integers(1, 3))
    p = int(rng.integers(1, 3))
    n = int(rng.integers(1, 4))
    return rng, random_system(rng, n, D, m, p)


def test_series_coefficients_of_the_rank_two_map(rank_two_markov):
    psi = psi_from_markov(rank_two_markov)
    np.testing.assert_array_equal(psi.s(0, ModeWord.of(2)), [1.0, 0.0])
    assert psi.depth == 6
    with pytest.raises(OutOfDepthError):
        psi.s(0, ModeWord.parse("1111111"))


def test_round_trip_keeps_matrices(gap_system):
    back = lss_of_repr(repr_of_lss(gap_system))
    for mine, original in zip((*back.A, *back.B, *back.C, back.x0),
                              (*gap_system.A, *gap_system.B, *gap_system.C, gap_system.x0)):
        np.testing.assert_array_equal(mine, original)


def test_index_set_is_checked():
    R = RationalRepresentation((np.eye(1), np.eye(1)), np.zeros((1, 2)), np.zeros((2, 1)), (0, 1))
    with pytest.raises(DimensionMismatchError):
        lss_dims_of_repr(R)


@pytest.mark.parametrize("seed", SEEDS)
def test_hankel_of_map_equals_hankel_of_series(seed):
    _, system = draw(seed)
    markov = extract_markov(io_map(system), 4)
    direct = build_hankel(markov, 1, 1)
    series = build_series_hankel(psi_from_markov(markov), 1, 1)
    np.testing.assert_array_equal(direct.data, series.data)
    assert series.index_set == lss_index_set(system.D, system.m)


@pytest.mark.parametrize("seed", SEEDS)
def test_representation_represents_the_series(seed):
    _, system = draw(seed)
    psi = psi_from_markov(MarkovFamily.from_system(system))
    R = repr_of_lss(system)
    for word in (ModeWord(), ModeWord.of(1), ModeWord.of(1, 1)):
        for j in R.index_set:
            np.testing.assert_allclose(R.evaluate(j, word), psi.s(j, word), atol=1e-12)


@pytest.mark.parametrize("seed", SEEDS)
def test_reachable_and_unobservable_subspaces_agree(seed):
    rng, system = draw(seed)
    system = pad_unobservable(pad_unreachable(system, 1, rng), 1, rng)
    R = repr_of_lss(system)
    tol = 1e-9
    assert same_subspace(reach_space(R, tol), Subspace.span(reach_matrix(system), tol), 1e-8)
    unobservable = Subspace(kernel_basis(obs_matrix(system), tol))
    assert same_subspace(obs_space(R, tol), unobservable, 1e-8)


@pytest.mark.parametrize("seed", SEEDS)
def test_morphisms_coincide(seed):
    rng, system = draw(seed)
    T = rng.standard_normal((system.n, system.n)) + 3 * np.eye(system.n)
    image = system.transform(T)
    assert check_morphism(system, image, T, 1e-9).holds
    residuals = morphism_residuals(repr_of_lss(system), repr_of_lss(image), T)
    assert max(residuals.values()) < 1e-9

    wrong = T + 0.5
    assert not check_morphism(system, image, wrong, 1e-9).holds
    assert max(morphism_residuals(repr_of_lss(system), repr_of_lss(image), wrong).values()) > 1e-9
