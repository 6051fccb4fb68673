"""Shared fixtures: reference networks and randomized-case helpers."""

from pathlib import Path

import numpy as np
import pytest

from bnsense import Evidence, load_network
from bnsense.oracle import brute_evidence_probability, random_evidence

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def r1():
    """Two-variable chain A -> B with one clique."""
    return load_network(FIXTURES / "r1.json")


@pytest.fixture(scope="session")
def r2():
    """Three-variable chain A -> B -> C with two cliques."""
    return load_network(FIXTURES / "r2.json")


def possible_evidence(rng: np.random.Generator, net, max_findings: int = 3) -> Evidence:
    """Random evidence resampled until it has positive probability."""
    for _ in range(50):
        candidate = random_evidence(rng, net, max_findings)
        if brute_evidence_probability(net, candidate) > 1e-12:
            return candidate
    return Evidence(net)
