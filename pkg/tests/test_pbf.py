from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shiftedpbf import (
    InternalConsistencyError,
    ShapeError,
    ShiftNotAdmissible,
    factorize_pbf,
    is_pbf_admissible,
    jacobi_spec,
    leading_minors,
    minimal_admissible_shift,
    oscillatory_check_tridiagonal,
    synthesize_pbf_operator,
    truncate,
)
from shiftedpbf._arith import as_array
from shiftedpbf.pbf import DEGENERATE, FAILED, STRICT

from conftest import spec_from_matrix


def R(mat):
    return as_array(mat, "rational")


def test_factorize_hand_example():
    fac = factorize_pbf(R([[2, 1], [1, 2]]), 1, 1)
    assert fac.status == STRICT
    assert list(fac.lower_factors[0]) == [Fraction(1, 2)]
    assert list(fac.delta) == [2, Fraction(3, 2)]
    assert list(fac.upper_factors[0]) == [Fraction(1, 2)]
    assert (fac.product() == R([[2, 1], [1, 2]])).all()


@pytest.mark.parametrize("p,q", [(1, 1), (2, 1), (1, 3), (3, 2)])
def test_factorize_identity_is_degenerate(p, q):
    fac = factorize_pbf(R(np.eye(5, dtype=int)), p, q)
    assert fac.status == DEGENERATE
    assert all(v == 1 for v in fac.delta)
    assert all(v == 0 for f in fac.lower_factors + fac.upper_factors for v in f)


def test_factorize_zero_pivot_fails():
    fac = factorize_pbf(R([[0, 1], [1, 0]]), 1, 1)
    assert fac.status == FAILED
    assert "delta_0" in fac.reason


def test_factorize_rejects_entries_outside_band():
    with pytest.raises(ShapeError):
        factorize_pbf(R([[1, 0, 1], [0, 1, 0], [0, 0, 1]]), 1, 1)


def test_factorize_float_matches_rational():
    m = [[4, 1, 0], [2, 5, 1], [0, 1, 3]]
    exact = factorize_pbf(R(m), 1, 1)
    approx = factorize_pbf(np.array(m, dtype=float), 1, 1)
    assert np.allclose(np.array(exact.delta, dtype=float), approx.delta)
    assert np.allclose(approx.product(), m)


def test_is_pbf_admissible_examples(small_jacobi):
    ok, fac = is_pbf_admissible(small_jacobi, 1, 4, "rational")
    assert ok and fac.shift == 4
    assert leading_minors(truncate(small_jacobi, 1, 4, "rational").entries) == [5, 29]
    ok, fac = is_pbf_admissible(small_jacobi, 1, 0, "rational")
    assert ok
    assert list(fac.delta) == [1, 1]
    assert list(fac.lower_factors[0]) == [1] and list(fac.upper_factors[0]) == [1]
    swap = spec_from_matrix([[0, 1], [1, 0]])
    assert not is_pbf_admissible(swap, 1, 0, "rational")[0]


def test_minimal_admissible_shift_examples(small_jacobi):
    assert minimal_admissible_shift(small_jacobi, 1, "theorem_norm", mode="rational") == 4
    sym = spec_from_matrix([[2, 1], [1, 2]])
    assert minimal_admissible_shift(sym, 1, "bisect", eps=1e-6) == 0
    swap = spec_from_matrix([[0, 1], [1, 0]])
    s = minimal_admissible_shift(swap, 1, "bisect", eps=1e-6)
    assert 1 < s <= 1 + 2e-6
    assert is_pbf_admissible(swap, 1, s)[0]


def test_norm_shift_inadmissible_for_general_band():
    # A constant (2,1) band with a huge subdiagonal: shifting the diagonal
    # up does not make the LU factors of the second subdiagonal positive.
    spec = spec_from_matrix([[1, 1, 0], [-5, 1, 1], [1, -5, 1]], p=2, q=1)
    with pytest.raises(ShiftNotAdmissible):
        minimal_admissible_shift(spec, 2, "theorem_norm", mode="rational")


def test_leading_minors_examples():
    assert leading_minors(R([[2, 1], [1, 2]])) == [2, 3]
    assert leading_minors(R(np.eye(3, dtype=int))) == [1, 1, 1]
    assert leading_minors(R([[1, 1], [1, 1]])) == [1, 0]
    assert leading_minors(R([[0, 1], [1, 0]])) == [0, -1]


def test_oscillatory_examples():
    assert oscillatory_check_tridiagonal(R([[2, 1], [1, 2]]))
    assert not oscillatory_check_tridiagonal(R([[1, 0], [1, 1]]))
    assert not oscillatory_check_tridiagonal(R([[1, 1], [1, 1]]))
    with pytest.raises(ShapeError):
        oscillatory_check_tridiagonal(R([[1, 1, 1], [1, 1, 1], [1, 1, 1]]))


def test_synthesized_all_ones():
    spec = synthesize_pbf_operator(1, 1, size=6, values=1)
    t = truncate(spec, 3, 0, "rational").entries
    assert t.tolist() == [[1, 1, 0, 0], [1, 2, 1, 0], [0, 1, 2, 1], [0, 0, 1, 2]]
    spec12 = synthesize_pbf_operator(1, 2, size=6, values=1)
    assert is_pbf_admissible(spec12, 2, 0, "rational")[0]


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000), p=st.integers(1, 3), q=st.integers(1, 3), N=st.integers(2, 9))
def test_synthesized_round_trip(seed, p, q, N):
    spec = synthesize_pbf_operator(p, q, rng_seed=seed, size=12)
    ok, fac = is_pbf_admissible(spec, N, 0, "rational")
    assert ok
    gen = spec.params["factors"]
    for k in range(p):
        assert list(fac.lower_factors[k]) == gen["lower"][k][:N]
    assert list(fac.delta) == gen["delta"][:N + 1]
    for k in range(q):
        assert list(fac.upper_factors[k]) == gen["upper"][k][:N]


@settings(max_examples=20, deadline=None)
@given(st.lists(st.integers(-10, 10), min_size=3, max_size=15),
       st.lists(st.integers(1, 5), min_size=14, max_size=14))
def test_norm_shift_jacobi_property(diag, offd):
    N = len(diag) - 1
    spec = spec_from_matrix(
        [[diag[i] if i == j else offd[min(i, j)] if abs(i - j) == 1 else 0 for j in range(N + 1)]
         for i in range(N + 1)])
    s = minimal_admissible_shift(spec, N, "theorem_norm", mode="rational")
    t = truncate(spec, N, s, "rational").entries
    assert all(m > 0 for m in leading_minors(t))
    assert oscillatory_check_tridiagonal(t)
    assert factorize_pbf(t, 1, 1).status == STRICT


def test_positive_jacobi_norm_shift_failure_is_a_bug(monkeypatch):
    import shiftedpbf.pbf as pbf
    monkeypatch.setattr(pbf, "is_pbf_admissible", lambda *a, **k: (False, None))
    with pytest.raises(InternalConsistencyError):
        pbf.minimal_admissible_shift(jacobi_spec(), 3, "theorem_norm")
