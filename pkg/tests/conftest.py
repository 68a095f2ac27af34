from fractions import Fraction

import numpy as np
import pytest

from shiftedpbf import BandedOperatorSpec, StarterVectors, synthesize_pbf_operator


def spec_from_matrix(mat, p=1, q=1):
    """Finite spec whose truncation at ``len(mat) - 1`` is ``mat``."""
    mat = [[Fraction(v) for v in row] for row in mat]
    n = len(mat)
    diagonals = {}
    for d in range(-p, q + 1):
        if d >= 0:
            diagonals[str(d)] = [mat[k][k + d] for k in range(n - d)]
        else:
            diagonals[str(d)] = [mat[k - d][k] for k in range(n + d)]
    return BandedOperatorSpec(p, q, diagonals=diagonals, max_index=n - 1)


@pytest.fixture
def small_jacobi():
    return spec_from_matrix([[1, 1], [1, 2]])


@pytest.fixture
def synth21():
    return synthesize_pbf_operator(2, 1, rng_seed=7, size=30)


@pytest.fixture
def synth12():
    return synthesize_pbf_operator(1, 2, rng_seed=3, size=30)


def identity_starters(spec, mode="rational"):
    return StarterVectors.identity(spec.p, spec.q, mode)


def gaussian_moment(n):
    """Moments of N(0, 1/2): (n-1)!! / 2^(n/2) for even n."""
    if n % 2:
        return Fraction(0)
    out = Fraction(1)
    for k in range(1, n, 2):
        out *= Fraction(k, 2)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
