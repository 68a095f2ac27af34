import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shiftedpbf import (
    OutOfRangeError,
    StarterVectors,
    biorthogonality_check,
    build_quadrature,
    build_table,
    christoffel,
    decompose,
    degrees_of_precision,
    discrete_measure,
    exactness_profile,
    hermite_spec,
    helly_moment_diagnostic,
    jacobi_spec,
    mass_identity_check,
    moment_tensor,
    path_expansion_entry,
    quadrature_moment,
    recentering_check,
    spectral_representation_check,
    stabilization_threshold,
    steplike_orthogonality_check,
    synthesize_pbf_operator,
    tail_bound_report,
    truncate,
)

from conftest import gaussian_moment, identity_starters, spec_from_matrix

SQ5 = math.sqrt(5)


def test_degrees_of_precision_examples():
    # The formula gives 7 at N = 3: Gauss exactness 2(N+1) - 1 with N+1 nodes.
    assert degrees_of_precision(1, 1, 1, 1, 3) == 7
    assert degrees_of_precision(2, 1, 2, 1, 4) == 6
    for p in range(1, 4):
        for q in range(1, 4):
            N = max(p * q - 2, 0)
            assert degrees_of_precision(p, q, p, q, N) >= 0
    with pytest.raises(OutOfRangeError):
        degrees_of_precision(2, 1, 3, 1, 4)


def test_stabilization_threshold_examples():
    assert stabilization_threshold(1, 1, 1, 1, 3) == 1
    assert stabilization_threshold(2, 1, 1, 1, 4) == 3
    assert stabilization_threshold(1, 1, 1, 1, 0) == 0


@settings(max_examples=60, deadline=None)
@given(p=st.integers(1, 3), q=st.integers(1, 3), n=st.integers(0, 12), data=st.data())
def test_threshold_certifies_degree(p, q, n, data):
    a = data.draw(st.integers(1, p))
    b = data.draw(st.integers(1, q))
    assert n <= degrees_of_precision(p, q, a, b, stabilization_threshold(p, q, a, b, n))


def test_christoffel_trivial():
    dec = decompose(truncate(jacobi_spec(diag=[4]), 0, 0, "float"))
    chris = christoffel(dec, StarterVectors.identity(1, 1, "float"))
    assert np.allclose(chris.mu, [[1]]) and np.allclose(chris.rho, [[1]])


def test_christoffel_symmetric_example():
    spec = jacobi_spec(diag=[2])
    dec = decompose(truncate(spec, 1, 0, "float"))
    chris = christoffel(dec, StarterVectors.identity(1, 1, "float"))
    # mu and rho individually depend on how each eigenpair is scaled; the weight does not.
    assert np.allclose(chris.mu * chris.rho, 0.5)
    assert chris.positive


def test_discrete_measure_single_node():
    spec = jacobi_spec(diag=[3])
    s = 5.0
    dec = decompose(truncate(spec, 0, s, "float"))
    measure = discrete_measure(dec, christoffel(dec, StarterVectors.identity(1, 1)), s)
    assert np.allclose(measure.nodes, [3]) and np.allclose(measure.weights, 1)
    assert quadrature_moment(measure, 2, 1, 1) == pytest.approx(9)


def test_discrete_measure_small_jacobi():
    spec = jacobi_spec(diag=[1, 1])
    dec = decompose(truncate(spec, 1, 0, "float"))
    measure = discrete_measure(dec, christoffel(dec, StarterVectors.identity(1, 1)), 0)
    assert np.allclose(measure.nodes, [(3 + SQ5) / 2, (3 - SQ5) / 2])
    assert measure.mass()[0, 0] == pytest.approx(1)
    assert quadrature_moment(measure, 1, 1, 1) == pytest.approx(1)


def test_moment_tensor_matches_path_oracle():
    spec = synthesize_pbf_operator(2, 2, rng_seed=11, size=30)
    st_ = identity_starters(spec)
    tensor = moment_tensor(spec, st_, 6)
    for n in range(7):
        for a in (1, 2):
            for b in (1, 2):
                assert tensor(n, a, b) == path_expansion_entry(spec, b - 1, a - 1, n)
    assert tensor(0, 1, 1) == 1 and tensor(0, 1, 2) == 0


def test_moment_tensor_hermite_gaussian():
    tensor = moment_tensor(hermite_spec(), StarterVectors.identity(1, 1), 8)
    assert [tensor(n, 1, 1) for n in range(9)] == [gaussian_moment(n) for n in range(9)]
    assert tensor(2, 1, 1) == Fraction(1, 2) and tensor(4, 1, 1) == Fraction(3, 4)


def test_hermite_nodes_and_weights_are_gauss_hermite():
    N = 20
    quad = build_quadrature(hermite_spec(max_index=40), StarterVectors.identity(1, 1, "float"), N)
    order = np.argsort(quad.measure.nodes)
    x, w = np.polynomial.hermite.hermgauss(N + 1)
    assert np.allclose(quad.measure.nodes[order], x, atol=1e-10)
    assert np.allclose(quad.measure.weights[order, 0, 0], w / math.sqrt(math.pi), atol=1e-13)


def test_exactness_classical_sharp():
    spec = hermite_spec()
    st_ = StarterVectors.identity(1, 1, "float")
    for N in (2, 3, 6):
        prof = exactness_profile(spec, st_, N, None, 2 * N + 3, "float")
        assert prof.holds
        assert prof.degrees[(1, 1)] == 2 * N + 1
        # Odd moments vanish by symmetry, so sharpness shows at the next even order.
        assert prof.first_failure(1, 1) == 2 * N + 2


def test_exactness_sharp_rational_jacobi():
    spec = jacobi_spec(diag=[0, 1])
    st_ = StarterVectors.identity(1, 1)
    prof = exactness_profile(spec, st_, 4, None, 11, "rational")
    assert prof.holds and prof.sharp(1, 1)
    assert prof.first_failure(1, 1) == prof.degrees[(1, 1)] + 1


@pytest.mark.parametrize("mode", ["float", "rational"])
def test_exactness_synthesized_p21(synth21, mode):
    st_ = identity_starters(synth21, mode)
    prof = exactness_profile(synth21, st_, 5, 0, 8, mode)
    assert prof.holds
    assert prof.rows[(1, 1)][0].exact


def test_mass_identity_with_tp_starters(synth12):
    for mode in ("float", "rational"):
        st_ = StarterVectors.totally_positive(1, 2, 5, mode)
        quad = build_quadrature(synth12, st_, 6, 0, mode)
        res = mass_identity_check(quad.exact_measure, st_)
        assert res
        if mode == "rational":
            assert res.defect == 0


def test_biorthogonality_k0():
    spec = jacobi_spec(diag=[0, 1])
    st_ = StarterVectors.identity(1, 1)
    quad = build_quadrature(spec, st_, 3, None, "float")
    assert biorthogonality_check(quad.table(), quad.measure, 0).defect <= 1e-14


def test_biorthogonality_classical_jacobi():
    spec = jacobi_spec(diag=[0, Fraction(1, 2)], sub=[1], super=[1])
    st_ = StarterVectors.identity(1, 1)
    quad = build_quadrature(spec, st_, 5, None, "float")
    assert biorthogonality_check(quad.table(), quad.measure, 5).defect <= 1e-10


def test_biorthogonality_synthesized_rational(synth21):
    st_ = identity_starters(synth21)
    quad = build_quadrature(synth21, st_, 6, 0, "rational")
    assert biorthogonality_check(quad.table(), quad.exact_measure, 6).defect == 0
    quad_f = build_quadrature(synth21, identity_starters(synth21, "float"), 6, 0, "float")
    assert biorthogonality_check(quad_f.table(), quad_f.measure, 6, 1e-9)


def test_steplike_orthogonality_hermite():
    st_ = StarterVectors.identity(1, 1)
    quad = build_quadrature(hermite_spec(), st_, 6, None, "float")
    assert steplike_orthogonality_check(quad.table(), quad.measure, 4)
    assert steplike_orthogonality_check(quad.table(), quad.measure, 1)
    with pytest.raises(OutOfRangeError):
        steplike_orthogonality_check(quad.table(), quad.measure, 7)


def test_steplike_orthogonality_synthesized_p12(synth12):
    quad = build_quadrature(synth12, identity_starters(synth12), 6, 0, "rational")
    for m in range(1, 7):
        assert steplike_orthogonality_check(quad.table(), quad.exact_measure, m).defect == 0


def test_spectral_representation():
    spec = synthesize_pbf_operator(2, 1, rng_seed=2, size=20)
    for mode in ("float", "rational"):
        res = spectral_representation_check(spec, identity_starters(spec, mode), 5, 0, 3, mode)
        assert res
        if mode == "rational":
            assert res.defect == 0


def test_spectral_representation_first_entry():
    # k = 1 at m = n = 0 reproduces b_0 from recentered nodes.
    spec = jacobi_spec(diag=[1, 1])
    quad = build_quadrature(spec, StarterVectors.identity(1, 1), 1, None, "float")
    A, B = quad.measure.values(quad.table(True), True)
    val, _ = quad.measure.form_matrix(B[0][:1], A[0][:1], 1, 1, 1, True)
    assert val[0, 0] == pytest.approx(1)


def test_recentering():
    spec = jacobi_spec(diag=[0, 1])
    for mode in ("float", "rational"):
        quad = build_quadrature(spec, StarterVectors.identity(1, 1), 6, None, mode)
        for n in range(6):
            assert recentering_check(quad.exact_measure, n, 1, 1)


def test_tail_bound_hermite():
    spec = hermite_spec(max_index=60)
    st_ = StarterVectors.identity(1, 1)
    moments = moment_tensor(spec, st_, 8)
    measures = [build_quadrature(spec, st_, N, None, "float").measure for N in (5, 10, 20, 40)]
    rows = tail_bound_report(measures, 2, moments, R_grid=(1, 2, 3, 4, 8, 16))
    assert all(r.holds for r in rows)
    # Beyond the largest node the tail is empty.
    assert all(r.tail == 0 for r in rows if r.R > np.abs(measures[0].nodes).max() and r.N == 5)
    for N in (5, 40):
        bounds = [r.bound for r in rows if r.N == N]
        assert bounds == sorted(bounds, reverse=True)


def test_tail_bound_rejects_unsupported_order():
    spec = hermite_spec()
    st_ = StarterVectors.identity(1, 1)
    measure = build_quadrature(spec, st_, 1, None, "float").measure
    with pytest.raises(OutOfRangeError):
        tail_bound_report([measure], 2, moment_tensor(spec, st_, 6))


def test_helly_hermite():
    st_ = StarterVectors.identity(1, 1)
    rows = helly_moment_diagnostic(hermite_spec(max_index=60), st_, 6, [10, 20, 40])
    for r in rows:
        assert r.holds
        assert np.allclose(r.values, float(gaussian_moment(r.n)), atol=1e-9)


def test_helly_unbounded_jacobi_rational():
    spec = jacobi_spec(diag=[0, 1])
    rows = helly_moment_diagnostic(spec, StarterVectors.identity(1, 1), 5, [4, 6, 8], mode="rational")
    assert all(r.holds and r.deviation == 0 for r in rows)
    assert rows[0].values == [1, 1, 1]
