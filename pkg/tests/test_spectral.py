import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shiftedpbf import (
    ComplexSpectrumError,
    SimplicityError,
    StarterVectors,
    build_table,
    characteristic_polynomial,
    charpoly_agreement,
    decompose,
    eigenpairs,
    eigenpairs_extended,
    eigenvalues,
    eigenvector_agreement,
    eigenvectors_from_determinantal_formula,
    hermite_spec,
    jacobi_spec,
    spectral_decomposition_check,
    synthesize_pbf_operator,
    truncate,
)

from conftest import spec_from_matrix

SQ5 = math.sqrt(5)


def test_eigenvalue_examples():
    assert np.allclose(eigenvalues([[2, 1], [1, 2]]), [3, 1])
    assert np.allclose(eigenvalues(np.diag([5.0, 2, 7])), [7, 5, 2])
    assert np.allclose(eigenvalues([[1, 1], [1, 2]]), [(3 + SQ5) / 2, (3 - SQ5) / 2])


def test_complex_spectrum_rejected():
    with pytest.raises(ComplexSpectrumError):
        eigenvalues([[0, 1, 0], [-1, 0, 1], [0, 0, 3]])


def test_repeated_eigenvalue_rejected():
    with pytest.raises(SimplicityError):
        eigenpairs(np.eye(3))


def test_eigenpairs_symmetric_example():
    dec = eigenpairs([[2, 1], [1, 2]])
    u0 = dec.U[:, 0]
    assert np.isclose(abs(u0[0]), abs(u0[1]))
    assert np.allclose(dec.W @ dec.U, np.eye(2))
    assert np.allclose(dec.W[0], u0 / (u0 @ u0))


def test_eigenpairs_diagonal_gives_coordinate_vectors():
    dec = eigenpairs(np.diag([1.0, 4.0, 2.0]))
    assert np.allclose(np.abs(dec.U), np.eye(3)[:, [1, 2, 0]])


def test_eigenpairs_nonsymmetric_pbf():
    spec = synthesize_pbf_operator(2, 1, rng_seed=4, size=10)
    m = np.array(truncate(spec, 2, 0, "float").entries)
    dec = eigenpairs(m)
    assert np.abs(dec.W @ dec.U - np.eye(3)).max() <= 1e-10
    assert spectral_decomposition_check(dec, m, 5)


def test_spectral_decomposition_trivial_powers():
    m = np.array([[3.0, 1], [2, 4]])
    dec = eigenpairs(m)
    assert spectral_decomposition_check(dec, m, 0).defect <= 1e-14
    assert spectral_decomposition_check(dec, m, 1).defect <= 1e-14


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 5000), p=st.integers(1, 3), q=st.integers(1, 3), N=st.integers(3, 9))
def test_synthesized_decomposition_reproduces_powers(seed, p, q, N):
    spec = synthesize_pbf_operator(p, q, rng_seed=seed, size=12)
    trunc = truncate(spec, N, 0, "float")
    dec = decompose(trunc)
    assert np.all(dec.lambdas > 0)
    assert spectral_decomposition_check(dec, trunc.entries, 5, tol=1e-9)


def test_extended_solver_matches_double():
    spec = synthesize_pbf_operator(2, 2, rng_seed=9, size=12)
    m = truncate(spec, 6, 0, "rational").entries
    ext = eigenpairs_extended(m)
    dbl = eigenpairs(np.array(m, dtype=float))
    assert ext.extended and ext.dps >= 50
    assert np.allclose(np.array(ext.lambdas, dtype=float), dbl.lambdas, rtol=1e-10)
    with ext.precision():
        assert ext.residuals["biorthogonality"] < mpmath.mpf(10) ** -20
    assert spectral_decomposition_check(ext, m, 5, tol=1e-30)


def test_decompose_auto_precision():
    spec = jacobi_spec(diag=[0, 1])
    assert decompose(truncate(spec, 5, 1, "rational")).extended
    assert not decompose(truncate(spec, 5, 1, "float")).extended
    assert decompose(truncate(spec, 5, 1, "float"), precision="extended").extended


def test_determinantal_formula_trivial():
    spec = jacobi_spec(diag=[3])
    table = build_table(spec, StarterVectors.identity(1, 1), 1)
    dec = decompose(truncate(spec, 0, 0, "float"))
    W_alt, U_alt, _ = eigenvectors_from_determinantal_formula(table, dec, 0)
    assert np.allclose(U_alt, [[1]]) and np.allclose(W_alt, [[1]])


def test_determinantal_formula_small_jacobi():
    # b_n = 1 + n truncated at N = 1 is [[1, 1], [1, 2]].
    spec = jacobi_spec(diag=[1, 1])
    table = build_table(spec, StarterVectors.identity(1, 1), 2)
    dec = decompose(truncate(spec, 1, 0, "float"))
    W_alt, U_alt, W_cp = eigenvectors_from_determinantal_formula(table, dec, 1)
    assert eigenvector_agreement(dec, W_alt, U_alt, tol=1e-10)
    for k, lam in enumerate(dec.lambdas):
        assert np.allclose(U_alt[:, k], [1, lam - 1])
    assert np.allclose(W_cp, W_alt)


@pytest.mark.parametrize("p,q", [(1, 1), (2, 1), (1, 2), (2, 2), (3, 1), (2, 3)])
def test_determinantal_formula_synthesized_extended(p, q):
    spec = synthesize_pbf_operator(p, q, rng_seed=p + 7 * q, size=20)
    N = 8
    starters = StarterVectors.totally_positive(p, q, 2)
    table = build_table(spec, starters, N + max(p, q))
    dec = decompose(truncate(spec, N, 0, "rational"))
    W_alt, U_alt, W_cp = eigenvectors_from_determinantal_formula(table, dec, N)
    assert eigenvector_agreement(dec, W_alt, U_alt, tol=1e-8)
    with dec.precision():
        assert float(max(abs(v) for v in (W_cp - W_alt).flat)) <= 1e-20 * float(
            max(abs(v) for v in W_alt.flat))


def test_charpoly_agreement_examples(small_jacobi):
    dec = decompose(truncate(small_jacobi, 1, 0, "float"))
    P = characteristic_polynomial(small_jacobi, 2, 0, "float")
    assert charpoly_agreement(dec, P).defect <= 1e-14
    spec = synthesize_pbf_operator(3, 2, rng_seed=1, size=30)
    dec = decompose(truncate(spec, 15, 0, "rational"))
    assert charpoly_agreement(dec, characteristic_polynomial(spec, 16)).defect <= 1e-8


def test_hermite_eigenvalues_are_gauss_hermite_nodes():
    N = 40
    dec = decompose(truncate(hermite_spec(max_index=60), N, 0, "float"))
    nodes, _ = np.polynomial.hermite.hermgauss(N + 1)
    assert np.allclose(np.sort(dec.lambdas), nodes, atol=1e-11)


def test_float_charpoly_is_exact_charpoly_of_float_entries():
    spec = synthesize_pbf_operator(2, 3, rng_seed=523, size=40)
    float_P = characteristic_polynomial(spec, 9, 0, "float")
    exact_P = characteristic_polynomial(spec, 9, 0, "rational")
    # Entries are dyadic here, so rounding the exact coefficients is the only error.
    assert list(float_P.coeffs) == [float(c) for c in exact_P.coeffs]
    assert float_P.coeffs[0] == -278.4375


def test_ill_conditioned_symmetrizable_escalates():
    trunc = truncate(hermite_spec(), 20, 21.0, "float")
    assert not decompose(trunc, precision="double").extended
    dec = decompose(trunc)
    assert dec.extended
    assert spectral_decomposition_check(dec, trunc.entries, 5).defect < 1e-20


def test_unseparated_double_eigenvalues_use_multiprecision_start():
    spec = synthesize_pbf_operator(3, 3, rng_seed=533, size=40)
    trunc = truncate(spec, 20, 0, "float")
    with pytest.raises(SimplicityError):
        eigenpairs(trunc.entries)
    dec = decompose(trunc)
    lams = [float(v) for v in dec.lambdas]
    assert min(lams) > 0 and all(x > y for x, y in zip(lams, lams[1:]))
    assert lams[-1] == pytest.approx(2.2603e-15, rel=1e-4)
