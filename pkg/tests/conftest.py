"""Shared test helpers: random jump-operator families with known structure."""

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20260825)


def random_anticommuting_family(rng, num_modes: int, num_ops: int):
    """Jump operators with pairwise vanishing anticommutators.

    Rows ``(e_{2i} + i e_{2i+1}) O / sqrt(2)`` of a random special orthogonal
    O satisfy ``l_i l_j^T = 0`` for all i, j (including i = j), which is the
    anticommuting condition ``{L_i, L_j} = 0``.
    """
    n = 2 * num_modes
    A = rng.standard_normal((n, n))
    Q, _ = np.linalg.qr(A)
    ops = []
    for i in range(num_ops):
        l = (Q[2 * i] + 1j * Q[2 * i + 1]) / np.sqrt(2.0)
        ops.append(l * (0.5 + rng.random()))   # arbitrary positive rates
    return ops


def random_generic_family(rng, num_modes: int, num_ops: int):
    """Generic (full-rank) complex jump-operator vectors."""
    n = 2 * num_modes
    return [
        rng.standard_normal(n) + 1j * rng.standard_normal(n)
        for _ in range(num_ops)
    ]
