"""Christoffel numbers, discrete matrix measures and their quadrature properties.

Two measure representations share one interface:

* :class:`DiscreteMatrixMeasure` holds nodes and rank-one ``q x p`` weights in
  double precision and integrates by summation over the nodes.
* :class:`MomentMeasure` is the exact moment functional of the same measure.
  Its nodes are irrational, but every polynomial integral is a finite
  combination of the moments ``e_b^xi . A^n e_a^nu``, which are rational.

Polynomials are handed to a measure as a matrix ``F`` (one row per polynomial):
values at the nodes for the former, ascending coefficients for the latter.
``form_matrix(F, G, b, a, k)`` then returns ``F K G^T`` for the kernel of
``x^k dpsi_{b,a}``.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from ._arith import check_mode, to_mpf, to_scalar, zeros
from ._checks import compare
from .banded import default_shift, truncate
from .exceptions import (
    OutOfRangeError,
    ShapeError,
    ShiftNotAdmissible,
    StabilizationError,
)
from .pbf import STRICT, factorize_pbf
from .polynomials import build_table
from .spectral import decompose, amplification_digits, polished_eigenvalues


def _check_indices(p, q, a, b):
    if not (1 <= a <= p and 1 <= b <= q):
        raise OutOfRangeError(f"need 1 <= a <= {p} and 1 <= b <= {q}, got a={a}, b={b}")


def _ceil_div(num, den):
    return -((-num) // den)


def degrees_of_precision(p, q, a, b, N):
    """``ceil((N+2-a)/p) + ceil((N+2-b)/q) - 1``."""
    _check_indices(p, q, a, b)
    if N < 0:
        raise OutOfRangeError(f"N must be nonnegative, got {N}")
    return _ceil_div(N + 2 - a, p) + _ceil_div(N + 2 - b, q) - 1


def stabilization_threshold(p, q, a, b, n):
    """Smallest truncation index the stabilization bound certifies for degree ``n``.

    This is the sufficient bound ``ceil([n + 1 - (2-a)/p - (2-b)/q] / (1/p + 1/q))``
    clamped at zero; smaller indices may already work.
    """
    _check_indices(p, q, a, b)
    value = (n + 1 - Fraction(2 - a, p) - Fraction(2 - b, q)) / (Fraction(1, p) + Fraction(1, q))
    return max(0, math.ceil(value))


# Christoffel numbers and node measures


@dataclass
class ChristoffelData:
    """``mu[k, a-1]`` and ``rho[k, b-1]`` for each eigenvalue index ``k``."""

    mu: np.ndarray
    rho: np.ndarray

    @property
    def positive(self):
        return bool(np.all(self.mu > 0) and np.all(self.rho > 0))

    def min_entry(self):
        return float(min(self.mu.min(), self.rho.min()))


def christoffel(decomposition, starters):
    """Christoffel numbers from the leading entries of the eigenvectors.

    Each eigenvector pair is only fixed up to a common sign, which is chosen
    so that ``rho[k, 0]`` is positive. The decomposition's vectors are flipped
    in place to stay consistent with the returned numbers.
    """
    p, q = starters.p, starters.q
    K = decomposition.size
    if K < max(p, q):
        raise ShapeError(f"truncation of size {K} is smaller than the band ({p}, {q})")
    with decomposition.precision():
        if decomposition.extended:
            nu_inv = np.array([[to_mpf(v) for v in row] for row in starters.nu_inv], dtype=object)
            xi_inv = np.array([[to_mpf(v) for v in row] for row in starters.xi_inv], dtype=object)
        else:
            nu_inv = np.array(starters.nu_inv, dtype=float)
            xi_inv = np.array(starters.xi_inv, dtype=float)
        U, W = decomposition.U, decomposition.W
        rho = (xi_inv @ U[:q, :]).T
        mu = (nu_inv @ W[:, :p].T).T
        for k in range(K):
            lead = next((v for v in rho[k] if v != 0), 1)
            if lead < 0:
                rho[k] = -rho[k]
                mu[k] = -mu[k]
                U[:, k] = -U[:, k]
                W[k] = -W[k]
        return ChristoffelData(np.array(mu.tolist(), dtype=float), np.array(rho.tolist(), dtype=float))


@dataclass
class DiscreteMatrixMeasure:
    """Recentered nodes ``lambda_k - s`` with weights ``rho_k mu_k^T`` (shape ``(K, q, p)``)."""

    nodes: np.ndarray
    weights: np.ndarray
    N: int
    shift: float
    exact: bool = field(default=False, init=False)
    # Truncation and decomposition behind the nodes, used to polish them.
    matrix: object = field(default=None, repr=False)
    decomposition: object = field(default=None, repr=False)
    _polished: tuple = field(default=None, init=False, repr=False)

    @property
    def p(self):
        return self.weights.shape[2]

    @property
    def q(self):
        return self.weights.shape[1]

    @property
    def unshifted_nodes(self):
        return self.nodes + float(self.shift)

    def points(self, recentered=True):
        return self.nodes if recentered else self.unshifted_nodes

    def mass(self):
        return self.weights.sum(axis=0)

    def step(self, x):
        """``psi_{b,a}(x) = sum over x_k <= x of the weights``; shape ``(len(x), q, p)``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        below = self.nodes[None, :] <= x[:, None]
        return np.einsum("mk,kba->mba", below.astype(float), self.weights)

    def moment(self, n, b, a, recentered=True):
        _check_indices(self.p, self.q, a, b)
        return float(np.sum(self.weights[:, b - 1, a - 1] * self.points(recentered) ** n))

    def abs_moment(self, n, b, a, recentered=True):
        """Quadrature of ``|x|^n`` against ``|w|``; the natural scale for float comparisons."""
        w = np.abs(self.weights[:, b - 1, a - 1])
        return float(np.sum(w * np.abs(self.points(recentered)) ** n))

    def polished_nodes(self):
        """Unshifted nodes in multiprecision, ``(values, dps)``, or ``None`` without a matrix."""
        if self.matrix is None:
            return None
        if self._polished is None:
            dec = self.decomposition
            self._polished = polished_eigenvalues(self.matrix, dec.lambdas, amplification_digits(dec.U))
        return self._polished

    def values(self, table, recentered=False):
        """Recursion polynomials at the nodes: ``(A, B)`` with arrays of shape ``(n, K)``.

        Values past the peak of an eigenvector are a decaying solution of the
        recurrence, which a double-precision node turns into a growing one.
        They are therefore computed at polished nodes and rounded afterwards.
        """
        polished = self.polished_nodes()
        if polished is None:
            A, B = table.values_at(self.points(recentered))
            return [np.array(col) for col in A], [np.array(col) for col in B]
        lams, dps = polished
        with mpmath.workdps(dps):
            x = np.array(lams, dtype=object)
            if recentered:
                x = x - to_mpf(self.shift)
            A, B = table.values_at(x)
            return ([np.array(np.array(col).tolist(), dtype=float) for col in A],
                    [np.array(np.array(col).tolist(), dtype=float) for col in B])

    def monomials(self, n_max, recentered=True):
        return self.points(recentered)[None, :] ** np.arange(n_max + 1)[:, None]

    def form_matrix(self, F, G, b, a, k=0, recentered=False):
        """``F diag(w_{b,a} x^k) G^T`` with the matching absolute-value bound."""
        kern = self.weights[:, b - 1, a - 1] * self.points(recentered) ** k
        val = (F * kern) @ G.T
        scale = (np.abs(F) * np.abs(kern)) @ np.abs(G).T
        return val, scale

    def to_dict(self):
        return {"N": self.N, "shift": float(self.shift), "nodes": self.nodes.tolist(),
                "weights": self.weights.tolist()}


def discrete_measure(decomposition, christoffel_data, s_N, matrix=None):
    """Recentered measure ``sum_k rho_k mu_k^T delta(x - (lambda_k - s_N))``.

    Passing the decomposed ``matrix`` lets the measure evaluate polynomials
    at polished nodes.
    """
    with decomposition.precision():
        if decomposition.extended:
            shift = to_mpf(s_N)
            nodes = [float(lam - shift) for lam in decomposition.lambdas]
        else:
            nodes = [float(lam) - float(s_N) for lam in decomposition.lambdas]
    weights = np.einsum("kb,ka->kba", christoffel_data.rho, christoffel_data.mu)
    N = decomposition.size - 1
    return DiscreteMatrixMeasure(np.array(nodes), weights, N, s_N, matrix, decomposition)


class MomentMeasure:
    """Exact moment functional of the discrete measure of ``T^[N] + s I``.

    Recentered moments are ``e_b^xi . (T^[N])^n e_a^nu`` and unshifted ones use
    the shifted truncation. Powers are applied to vectors lazily and cached.
    """

    exact = True

    def __init__(self, spec, starters, N, shift):
        self.spec = spec
        self.starters = starters.astype("rational")
        self.N = N
        self.shift = to_scalar(shift, "rational")
        self._mats = {True: truncate(spec, N, 0, "rational").entries,
                      False: truncate(spec, N, self.shift, "rational").entries}
        self._lefts = [self.starters.e_xi(b, N + 1) for b in range(1, self.q + 1)]
        self._cache = {}

    @property
    def p(self):
        return self.starters.p

    @property
    def q(self):
        return self.starters.q

    def moments(self, n_max, b, a, recentered=True):
        """``[m_0, ..., m_{n_max}]`` for the pair ``(b, a)``."""
        _check_indices(self.p, self.q, a, b)
        key = (a, recentered)
        seq = self._cache.get(key)
        if seq is None or len(seq) <= n_max:
            # Grow geometrically so repeated requests stay cheap.
            top = max(n_max, 2 * len(seq) if seq else 0)
            seq = exact_moment_sequence(self._mats[recentered], self.starters.e_nu(a, self.N + 1),
                                        self._lefts, top)
            self._cache[key] = seq
        return [row[b - 1] for row in seq[:n_max + 1]]

    def moment(self, n, b, a, recentered=True):
        return self.moments(n, b, a, recentered)[n]

    def mass(self):
        out = zeros((self.q, self.p), "rational")
        for b in range(1, self.q + 1):
            for a in range(1, self.p + 1):
                out[b - 1, a - 1] = self.moment(0, b, a)
        return out

    def values(self, table, recentered=False):
        """Coefficient matrices of the table polynomials, padded to a common width."""
        width = max(len(poly.coeffs) for col in table.A + table.B for poly in col) or 1
        pad = lambda poly: list(poly.coeffs) + [Fraction(0)] * (width - len(poly.coeffs))  # noqa: E731
        A = [np.array([pad(poly) for poly in col], dtype=object) for col in table.A]
        B = [np.array([pad(poly) for poly in col], dtype=object) for col in table.B]
        return A, B

    def monomials(self, n_max, recentered=True):
        out = zeros((n_max + 1, n_max + 1), "rational")
        for i in range(n_max + 1):
            out[i, i] = Fraction(1)
        return out

    def form_matrix(self, F, G, b, a, k=0, recentered=False):
        """``F H G^T`` with the Hankel matrix ``H[i, j] = m_{i+j+k}``; exact, zero scale."""
        rows, cols = F.shape[1], G.shape[1]
        mom = self.moments(rows + cols - 2 + k, b, a, recentered)
        H = np.empty((rows, cols), dtype=object)
        for i in range(rows):
            for j in range(cols):
                H[i, j] = mom[i + j + k]
        val = F @ H @ G.T
        return val, np.zeros(val.shape)


# Moments of the semi-infinite operator


@dataclass
class MomentTensor:
    """``values[n][a-1][b-1] = e_b^xi . T^n e_a^nu`` with the truncation index used."""

    p: int
    q: int
    n_max: int
    values: list
    truncation_index: list
    provenance: str = "truncation-stabilized"

    def __call__(self, n, a, b):
        if not 0 <= n <= self.n_max:
            raise OutOfRangeError(f"moment order {n} outside 0..{self.n_max}")
        _check_indices(self.p, self.q, a, b)
        return self.values[n][a - 1][b - 1]

    def to_dict(self):
        return {"p": self.p, "q": self.q, "n_max": self.n_max, "provenance": self.provenance,
                "values": [[[str(v) for v in row] for row in block] for block in self.values],
                "truncation_index": self.truncation_index}


def _common_denominator(values):
    fracs = [Fraction(v) for v in values]
    den = math.lcm(*(f.denominator for f in fracs)) if fracs else 1
    return den, [f.numerator * (den // f.denominator) for f in fracs]


def exact_moment_sequence(mat, right, lefts, n_max):
    """``[[l . mat^n right for l in lefts] for n <= n_max]`` in exact arithmetic.

    Everything is scaled to integers by common denominators, so the inner
    loops avoid the per-operation gcd of :class:`fractions.Fraction`.
    """
    size = len(mat)
    D, flat = _common_denominator(np.asarray(mat).flat)
    rows = [[(j, flat[i * size + j]) for j in range(size) if flat[i * size + j]] for i in range(size)]
    dr, v = _common_denominator(right)
    lints = [_common_denominator(left) for left in lefts]
    out = []
    scale = dr
    for k in range(n_max + 1):
        if k:
            v = [sum(c * v[j] for j, c in row) for row in rows]
            scale *= D
        out.append([Fraction(sum(x * y for x, y in zip(li, v)), dl * scale) for dl, li in lints])
    return out


def _moments_at(spec, starters, N, n_max, a, mode):
    mat = truncate(spec, N, 0, mode).entries
    lefts = [starters.e_xi(b, N + 1) for b in range(1, spec.q + 1)]
    right = starters.e_nu(a, N + 1)
    if mode == "rational":
        return exact_moment_sequence(mat, right, lefts, n_max)
    out = []
    v = np.array(right, dtype=float)
    L = np.array(lefts, dtype=float)
    for k in range(n_max + 1):
        if k:
            v = mat @ v
        out.append(list(L @ v))
    return out


def moment_tensor(spec, starters, n_max, mode="rational", rtol=1e-10):
    """Stabilized moments ``m_{n,a,b}`` for ``n <= n_max``.

    Each entry is computed at the certified truncation index and cross-checked
    at the next two; a mismatch means the implementation is broken and raises
    :class:`StabilizationError`.
    """
    check_mode(mode)
    p, q = spec.p, spec.q
    starters = starters.astype(mode)
    values = [[[None] * q for _ in range(p)] for _ in range(n_max + 1)]
    index = [[[None] * q for _ in range(p)] for _ in range(n_max + 1)]
    for a in range(1, p + 1):
        top = {}
        for b in range(1, q + 1):
            for n in range(n_max + 1):
                N0 = stabilization_threshold(p, q, a, b, n)
                for N in (N0, N0 + 1, N0 + 2):
                    top[N] = max(top.get(N, 0), n)
        runs = {N: _moments_at(spec, starters, N, t, a, mode) for N, t in top.items()}
        for b in range(1, q + 1):
            for n in range(n_max + 1):
                N0 = stabilization_threshold(p, q, a, b, n)
                ref = runs[N0][n][b - 1]
                for N in (N0 + 1, N0 + 2):
                    other = runs[N][n][b - 1]
                    bad = other != ref if mode == "rational" else \
                        abs(other - ref) > rtol * max(1.0, abs(ref))
                    if bad:
                        raise StabilizationError(
                            f"m_({n},{a},{b}) differs between N={N0} and N={N}: {ref} vs {other}")
                values[n][a - 1][b - 1] = ref
                index[n][a - 1][b - 1] = N0
    return MomentTensor(p, q, n_max, values, index)


# Assembled quadrature for one truncation


@dataclass
class Quadrature:
    """Everything derived from one shifted truncation."""

    spec: object
    starters: object
    N: int
    shift: object
    mode: str
    truncation: object
    factorization: object
    decomposition: object
    christoffel: ChristoffelData
    measure: DiscreteMatrixMeasure
    moment_measure: object = None

    @property
    def exact_measure(self):
        """The measure used for checks: exact moments in rational mode, nodes otherwise."""
        return self.moment_measure if self.moment_measure is not None else self.measure

    def table(self, recentered=False):
        spec = self.spec if recentered else self.spec.shifted(self.shift)
        return build_table(spec, self.starters.astype(self.mode), self.N + max(self.spec.p, self.spec.q))


def build_quadrature(spec, starters, N, shift=None, mode="float", seed=0, require_pbf=True):
    """Truncate, shift, factorize, diagonalize and assemble the discrete measure.

    ``shift=None`` uses the norm shift ``||T^[N]||_inf + 1``. With
    ``require_pbf`` an inadmissible shift raises :class:`ShiftNotAdmissible`.
    """
    check_mode(mode)
    if starters.p != spec.p or starters.q != spec.q:
        raise ShapeError("starter dimensions do not match the band")
    shift = default_shift(spec, N, mode) if shift is None else to_scalar(shift, mode)
    trunc = truncate(spec, N, shift, mode)
    fac = factorize_pbf(trunc.entries, spec.p, spec.q)
    if require_pbf and fac.status != STRICT:
        raise ShiftNotAdmissible(f"shift {shift} is not PBF-admissible at N={N}: {fac.reason}")
    dec = decompose(trunc, seed=seed)
    chris = christoffel(dec, starters)
    measure = discrete_measure(dec, chris, shift, trunc.entries)
    moments = MomentMeasure(spec, starters, N, shift) if mode == "rational" else None
    return Quadrature(spec, starters, N, shift, mode, trunc, fac, dec, chris, measure, moments)


def quadrature_moment(measure, n, b, a):
    """Recentered quadrature ``sum_k rho_{k,b} mu_{k,a} x_k^n``."""
    return measure.moment(n, b, a, recentered=True)


# Verifications


def mass_identity_check(measure, starters, tol=1e-10):
    """Total mass against ``xi^{-1} I_{q,p} nu^{-T}``."""
    p, q = starters.p, starters.q
    ident = zeros((q, p), "rational")
    for i in range(min(p, q)):
        ident[i, i] = Fraction(1)
    target = starters.astype("rational").xi_inv @ ident @ starters.astype("rational").nu_inv.T
    mass = measure.mass()
    if measure.exact:
        defect = max(abs(v) for v in (mass - target).flat)
        return compare(defect, tol, True)
    defect = np.abs(mass - np.array(target, dtype=float)).max()
    return compare(defect, tol, False)


@dataclass
class ExactnessRow:
    n: int
    quadrature: object
    moment: object
    remainder: object
    exact: bool
    within_degree: bool
    nonzero: bool


@dataclass
class ExactnessProfile:
    """Per ``(b, a)``: rows for ``n = 0..n_max`` and the degree of precision."""

    degrees: dict
    rows: dict

    def first_failure(self, b, a):
        return next((r.n for r in self.rows[(b, a)] if not r.exact), None)

    @property
    def holds(self):
        """Exactness for every order up to the degree of precision."""
        return all(r.exact for rows in self.rows.values() for r in rows if r.within_degree)

    def sharp(self, b, a):
        """Remainder above rounding level at the first order past the degree, if computed."""
        d = self.degrees[(b, a)]
        row = next((r for r in self.rows[(b, a)] if r.n == d + 1), None)
        return None if row is None else row.nonzero


def exactness_profile(spec, starters, N, shift, n_max, mode="float", rtol=1e-9, quad=None):
    """Compare recentered quadrature moments with the stabilized moments."""
    quad = quad or build_quadrature(spec, starters, N, shift, mode)
    measure = quad.exact_measure
    tensor = moment_tensor(spec, starters, n_max, mode)
    p, q = spec.p, spec.q
    # Rounding level of a float quadrature sum, used to call a remainder nonzero.
    noise = 100 * (N + 1) * np.finfo(float).eps
    degrees, rows = {}, {}
    for b in range(1, q + 1):
        for a in range(1, p + 1):
            d = degrees_of_precision(p, q, a, b, N)
            degrees[(b, a)] = d
            out = []
            for n in range(n_max + 1):
                got = quadrature_moment(measure, n, b, a)
                ref = tensor(n, a, b)
                rem = ref - got
                if measure.exact:
                    nonzero = rem != 0
                    ok = not nonzero
                else:
                    scale = max(abs(ref), measure.abs_moment(n, b, a))
                    ok = abs(rem) <= rtol * scale
                    nonzero = abs(rem) > noise * scale
                out.append(ExactnessRow(n, got, ref, rem, bool(ok), n <= d, bool(nonzero)))
            rows[(b, a)] = out
    return ExactnessProfile(degrees, rows)


def _pairing(measure, F, G, k, recentered, p, q, pairs=None):
    """``sum_{a,b} F_b K_{b,a} G_a^T`` summed over the chosen ``(b, a)`` pairs."""
    total = scale = 0
    for b in range(1, q + 1):
        for a in range(1, p + 1):
            if pairs is not None and (b, a) not in pairs:
                continue
            val, sc = measure.form_matrix(F[b - 1], G[a - 1], b, a, k, recentered)
            total = total + val
            scale = scale + sc
    return total, scale


def _defect(diff, scale, exact):
    if exact:
        return max((abs(v) for v in np.asarray(diff).flat), default=0)
    return float(np.max(np.abs(np.asarray(diff, dtype=float)) / np.maximum(1.0, scale)))


def biorthogonality_check(table, measure, K, tol=1e-9):
    """``sum_{a,b} int B^(b)_l dpsi_{b,a} A^(a)_k = delta_{k,l}`` for ``k, l <= K``.

    The table must be built on the shifted operator, paired with unshifted
    nodes. Float defects are scaled by the absolute-value quadrature of each
    product so that cancellation in huge polynomial values is accounted for.
    """
    if K > measure.N:
        raise OutOfRangeError(f"K={K} exceeds N={measure.N}")
    A, B = measure.values(table, recentered=False)
    F = [col[:K + 1] for col in B]
    G = [col[:K + 1] for col in A]
    val, scale = _pairing(measure, F, G, 0, False, table.p, table.q)
    eye = np.eye(K + 1, dtype=int)
    defect = _defect(val - eye, scale, measure.exact)
    return compare(defect, tol, measure.exact, K=K)


def steplike_orthogonality_check(table, measure, m, tol=1e-9):
    """Vanishing of ``sum_a int x^n dpsi_{b,a} A^(a)_m`` and its mirror for ``B^(b)_m``.

    Orders run over ``n <= ceil((m+1-b)/q) - 1`` for each ``b`` and
    ``n <= ceil((m+1-a)/p) - 1`` for each ``a``.
    """
    if not 1 <= m <= measure.N:
        raise OutOfRangeError(f"m must lie in 1..{measure.N}, got {m}")
    p, q = table.p, table.q
    A, B = measure.values(table, recentered=False)
    worst = 0
    for b in range(1, q + 1):
        top = _ceil_div(m + 1 - b, q) - 1
        if top >= 0:
            X = [measure.monomials(top, recentered=False)] * q
            G = [col[m:m + 1] for col in A]
            val, scale = _pairing(measure, X, G, 0, False, p, q, {(b, a) for a in range(1, p + 1)})
            worst = max(worst, _defect(val, scale, measure.exact))
    for a in range(1, p + 1):
        top = _ceil_div(m + 1 - a, p) - 1
        if top >= 0:
            F = [col[m:m + 1] for col in B]
            X = [measure.monomials(top, recentered=False)] * p
            val, scale = _pairing(measure, F, X, 0, False, p, q, {(b, a) for b in range(1, q + 1)})
            worst = max(worst, _defect(val, scale, measure.exact))
    return compare(worst, tol, measure.exact, m=m)


def spectral_representation_check(spec, starters, N, shift, n_max, mode="float", tol=1e-9, quad=None):
    """``sum_{a,b} int B^(b)_l x^k dpsi_{b,a} A^(a)_m = (M^k)_{l,m}`` for ``k <= n_max``.

    Checked for the shifted matrix with unshifted nodes, and for ``T^[N]`` with
    the unshifted recursion table at recentered nodes.
    """
    quad = quad or build_quadrature(spec, starters, N, shift, mode)
    measure = quad.exact_measure
    exact = measure.exact
    worst = 0
    for recentered in (False, True):
        table = quad.table(recentered)
        A, B = measure.values(table, recentered)
        F = [col[:N + 1] for col in B]
        G = [col[:N + 1] for col in A]
        target = truncate(spec, N, 0 if recentered else quad.shift, mode).entries
        power = np.eye(N + 1, dtype=int)
        norm = 1.0 if exact else max(1.0, float(np.abs(np.array(target, dtype=float)).sum(axis=1).max()))
        for k in range(n_max + 1):
            if k:
                power = power @ target
            val, scale = _pairing(measure, F, G, k, recentered, spec.p, spec.q)
            if exact:
                worst = max(worst, _defect(val - power, scale, True))
            else:
                diff = np.abs(np.asarray(val - power, dtype=float))
                worst = max(worst, float(np.max(diff / np.maximum(norm ** k, scale))))
    return compare(worst, tol, exact, n_max=n_max)


@dataclass
class TailRow:
    N: int
    R: float
    b: int
    a: int
    tail: float
    bound: float
    holds: bool


def tail_bound_report(measures, n, moments, R_grid=(1, 2, 4, 8, 16), rtol=1e-12):
    """``int_{|x|>R} |x|^n dpsi_{b,a} <= R^{-(n+2)} m_{2n+2,a,b}`` on a grid of ``R``.

    ``moments`` is a :class:`MomentTensor` reaching order ``2n+2``. Rows where
    ``2n+2`` exceeds the degree of precision are flagged as unsupported
    instead of being checked.
    """
    rows = []
    for measure in measures:
        p, q = measure.p, measure.q
        for b in range(1, q + 1):
            for a in range(1, p + 1):
                if 2 * n + 2 > degrees_of_precision(p, q, a, b, measure.N):
                    raise OutOfRangeError(
                        f"order {2 * n + 2} beyond the degree of precision at N={measure.N}")
                m = float(moments(2 * n + 2, a, b))
                w = measure.weights[:, b - 1, a - 1]
                x = np.abs(measure.nodes)
                for R in R_grid:
                    tail = float(np.sum(w[x > R] * x[x > R] ** n))
                    bound = m / float(R) ** (n + 2)
                    rows.append(TailRow(measure.N, float(R), b, a, tail, bound,
                                        tail <= bound + rtol * max(abs(bound), 1e-300)))
    return rows


@dataclass
class HellyRow:
    n: int
    b: int
    a: int
    values: list
    deviation: float
    stabilized_from: int
    holds: bool


def helly_moment_diagnostic(spec, starters, n_max, N_list, mode="float", shift_fn=None, rtol=1e-9):
    """Recentered moments across truncations: they must agree once stabilized.

    ``shift_fn(N)`` selects the shift (norm shift by default). Only truncations
    at or past the certified threshold for each order enter the deviation.
    """
    quads = {N: build_quadrature(spec, starters, N, None if shift_fn is None else shift_fn(N), mode)
             for N in N_list}
    rows = []
    for n in range(n_max + 1):
        for b in range(1, spec.q + 1):
            for a in range(1, spec.p + 1):
                start = stabilization_threshold(spec.p, spec.q, a, b, n)
                vals = [quadrature_moment(quads[N].exact_measure, n, b, a) for N in N_list]
                used = [v for N, v in zip(N_list, vals) if N >= start]
                if not used:
                    dev, ok = 0.0, True
                elif mode == "rational":
                    dev = float(max(used) - min(used))
                    ok = dev == 0
                else:
                    scale = max(1.0, max(abs(v) for v in used))
                    dev = (max(used) - min(used)) / scale
                    ok = dev <= rtol
                rows.append(HellyRow(n, b, a, vals, dev, start, ok))
    return rows


def christoffel_positivity_report(quad):
    """Smallest Christoffel number and whether all are positive."""
    return compare(0 if quad.christoffel.positive else 1, 0, True,
                   min_entry=quad.christoffel.min_entry())


def recentering_check(measure, n, b, a, tol=1e-9):
    """Recentered moment against the binomial expansion of unshifted moments."""
    s = measure.shift if measure.exact else float(measure.shift)
    lhs = measure.moment(n, b, a, recentered=True)
    rhs = sum(math.comb(n, j) * (-s) ** (n - j) * measure.moment(j, b, a, recentered=False)
              for j in range(n + 1))
    if measure.exact:
        return compare(abs(lhs - rhs), tol, True)
    scale = sum(math.comb(n, j) * abs(s) ** (n - j) * measure.abs_moment(j, b, a, recentered=False)
                for j in range(n + 1))
    return compare(abs(lhs - rhs) / max(1.0, scale), tol, False)

