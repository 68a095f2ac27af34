import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shiftedpbf import (
    BandedOperatorSpec,
    OutOfRangeError,
    ShapeError,
    StarterVectors,
    block_determinant_identity_check,
    build_table,
    characteristic_polynomial,
    degree_report,
    determinantal_Q,
    determinantal_R,
    jacobi_spec,
    synthesize_pbf_operator,
    truncate,
)
from shiftedpbf.pbf import _determinant
from shiftedpbf.polynomials import (
    ZERO_DEGREE,
    Polynomial,
    alpha_beta,
    degree_bound,
    poly_det,
    recurrence_residual,
    table_rows,
)

from conftest import spec_from_matrix

x = Polynomial.x()


def test_polynomial_arithmetic():
    p = Polynomial([1, 2])
    assert p * p == Polynomial([1, 4, 4])
    assert (p - p).is_zero() and (p - p).degree == ZERO_DEGREE
    assert (x * x - 1)(Fraction(3)) == 8
    assert Polynomial([1, 0, 3]).derivative() == Polynomial([0, 6])
    assert p.shift_up() == Polynomial([0, 1, 2])
    assert 2 - p == Polynomial([1, -2])
    assert Polynomial([0, 0]) == 0


def test_poly_det_numbers_and_polys():
    assert poly_det([[1, 2], [3, 4]]) == -2
    assert poly_det([[x, 1], [1, x]]) == x * x - 1


def test_classical_three_term_recurrence():
    table = build_table(jacobi_spec(), StarterVectors.identity(1, 1), 4)
    B = table.B[0]
    assert B[0] == 1 and B[1] == x and B[2] == x * x - 1
    assert B[3] == x * x * x - 2 * x


def test_initial_conditions_with_identity_starters():
    spec = synthesize_pbf_operator(3, 2, rng_seed=5, size=20)
    table = build_table(spec, StarterVectors.identity(3, 2), 8)
    for a in range(3):
        for n in range(a):
            assert table.A[a][n].is_zero()
        assert table.A[a][a] == 1
    for b in range(2):
        assert table.B[b][b] == 1


def test_p2_q1_first_recurrence_step():
    spec = synthesize_pbf_operator(2, 1, rng_seed=2, size=10)
    table = build_table(spec, StarterVectors.identity(2, 1), 6)
    T = truncate(spec, 6, 0, "rational").entries
    # Column 0 of A T = x A: A_0 T00 + A_1 T10 + A_2 T20 = x A_0.
    expected = (x * table.A[0][0] - table.A[0][0] * T[0, 0] - table.A[0][1] * T[1, 0]) / T[2, 0]
    assert table.A[0][2] == expected
    assert table.A[0][2].degree <= degree_bound(2, 1, 2) == 1


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 5000), p=st.integers(1, 3), q=st.integers(1, 3))
def test_recurrence_residual_is_zero(seed, p, q):
    spec = synthesize_pbf_operator(p, q, rng_seed=seed, size=16)
    starters = StarterVectors.totally_positive(p, q, seed)
    assert recurrence_residual(build_table(spec, starters, 10)) == 0


def test_characteristic_polynomial_examples(small_jacobi):
    assert characteristic_polynomial(small_jacobi, 0) == 1
    assert characteristic_polynomial(small_jacobi, 2) == Polynomial([1, -3, 1])
    shifted = characteristic_polynomial(small_jacobi, 2, shift=5)
    # Roots move by +5: P(x - 5).
    assert shifted == Polynomial([1, -3, 1])(x - 5)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 5000), N=st.integers(1, 6))
def test_characteristic_polynomial_matches_determinant(seed, N):
    spec = synthesize_pbf_operator(2, 2, rng_seed=seed, size=10)
    P = characteristic_polynomial(spec, N)
    T = truncate(spec, N - 1, 0, "rational").entries
    for t in (Fraction(-1), Fraction(1, 3), Fraction(5)):
        assert P(t) == _determinant(np.eye(N, dtype=int) * t - T)


def test_alpha_beta_examples():
    spec = synthesize_pbf_operator(1, 1, size=6, values=1)
    assert alpha_beta(spec, 0) == (1, 1)
    assert all(alpha_beta(spec, N) == (1, 1) for N in range(5))
    spec21 = BandedOperatorSpec(2, 1, diagonals={"-2": [2, 3, 1], "-1": [1, 1, 1, 1],
                                                 "0": [1] * 5, "1": [1] * 4})
    alpha, _ = alpha_beta(spec21, 2)
    assert alpha == 6


def test_block_identity_trivial_and_classical():
    spec = jacobi_spec(diag=[0, 1])
    starters = StarterVectors.identity(1, 1)
    table = build_table(spec, starters, 8)
    assert block_determinant_identity_check(table, 0)
    for N in range(8):
        P = characteristic_polynomial(spec, N)
        assert P == table.A[0][N] == table.B[0][N]


@pytest.mark.parametrize("p,q", [(2, 1), (1, 2), (3, 3), (2, 3)])
def test_block_identity_synthesized(p, q):
    spec = synthesize_pbf_operator(p, q, rng_seed=11, size=20)
    starters = StarterVectors.totally_positive(p, q, 4)
    table = build_table(spec, starters, 10)
    for N in range(6):
        res = block_determinant_identity_check(table, N)
        assert res and res.defect == 0


def test_block_identity_float_spec():
    spec = spec_from_matrix([[1.5, 1, 0], [0.5, 2, 1], [0, 0.25, 3]])
    spec = BandedOperatorSpec(1, 1, diagonals={k: [float(v) for v in arr] for k, arr in spec.diagonals.items()})
    table = build_table(spec, StarterVectors.identity(1, 1), 2)
    assert block_determinant_identity_check(table, 2, tol=1e-12)


def test_determinantal_Q_examples():
    spec = synthesize_pbf_operator(1, 2, rng_seed=0, size=12)
    table = build_table(spec, StarterVectors.identity(1, 2), 8)
    assert determinantal_Q(table, 3, 4) == table.A[0][3]
    spec2 = synthesize_pbf_operator(2, 1, rng_seed=0, size=12)
    t2 = build_table(spec2, StarterVectors.identity(2, 1), 8)
    assert determinantal_Q(t2, 3, 2).is_zero()
    Q = determinantal_Q(t2, 0, 2)
    for s in (Fraction(-2), Fraction(0), Fraction(1, 2), Fraction(3), Fraction(7)):
        rows = [[t2.A[a][n](s) for a in range(2)] for n in (0, 3)]
        assert Q(s) == rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]
    assert determinantal_R(t2, 5, 2) == t2.B[0][5]
    with pytest.raises(OutOfRangeError):
        determinantal_Q(t2, 0, 20)


def test_degree_bound_formula():
    assert degree_bound(2, 1, 2) == math.ceil(3 / 2) - 1
    assert degree_bound(0, 2, 2) == -1


def test_degree_report_classical():
    table = build_table(jacobi_spec(), StarterVectors.identity(1, 1), 10)
    rows = degree_report(table)
    assert all(r.degree == r.bound == r.n and r.attained for r in rows)


@pytest.mark.parametrize("p,q", [(1, 1), (2, 1), (1, 2), (2, 2), (3, 1), (1, 3), (3, 2), (2, 3), (3, 3)])
def test_degree_report_totally_positive(p, q):
    spec = synthesize_pbf_operator(p, q, rng_seed=p * 10 + q, size=30)
    table = build_table(spec, StarterVectors.totally_positive(p, q, 1), 20)
    rows = degree_report(table, 20)
    assert not any(r.violated for r in rows)
    assert all(r.attained for r in rows)


def test_degree_report_identity_respects_bounds():
    spec = synthesize_pbf_operator(2, 1, rng_seed=3, size=30)
    rows = degree_report(build_table(spec, StarterVectors.identity(2, 1), 15))
    assert not any(r.violated for r in rows)
    # A^(1)_1 vanishes with the identity starter although the bound is 0.
    row = next(r for r in rows if r.series == "A" and r.index == 1 and r.n == 1)
    assert row.bound == 0 and not row.attained


def test_table_rows_and_mismatch():
    table = build_table(jacobi_spec(), StarterVectors.identity(1, 1), 2)
    rows = table_rows(table)
    assert rows[2] == ("A", 1, 2, (-1, 0, 1))
    with pytest.raises(ShapeError):
        build_table(jacobi_spec(), StarterVectors.identity(2, 1), 2)
