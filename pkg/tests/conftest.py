"""Shared fixtures: catalogue systems, seeded generators, fixture files."""

from pathlib import Path

import numpy as np
import pytest

from src.core import catalog

FIXTURES_DIR = Path(__file__).resolve().parents[1] / "fixtures"


@pytest.fixture
def gap_system():
    return catalog.reachability_gap_system()


@pytest.fixture
def gap_minimal():
    return catalog.reachability_gap_minimal()


@pytest.fixture
def rank_two_markov():
    return catalog.rank_two_markov(8)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def fixtures_dir():
    return FIXTURES_DIR
