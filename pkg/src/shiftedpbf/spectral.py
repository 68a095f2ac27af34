"""Spectra and biorthogonal eigenvector bases of shifted truncations."""

import warnings
from contextlib import nullcontext
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np
import scipy.linalg as sla

from ._arith import as_mpf_array, to_mpf
from ._checks import compare
from .banded import truncate
from .exceptions import (
    ComplexSpectrumError,
    ConvergenceError,
    DegenerateNormalizationError,
    SimplicityError,
)
from .polynomials import alpha_beta, characteristic_polynomial, poly_det

GAP_TOL = 1e-12
# Double-precision bases less biorthogonal than this are recomputed in multiprecision.
REFINE_TOL = 1e-12
# Same for bases whose eigenvalue condition numbers exceed this.
COND_TOL = 1e2


def _float_matrix(m):
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return np.array(m, dtype=float)


def _symmetrizer(a):
    """Diagonal ``d`` with ``diag(d) a diag(d)^-1`` symmetric, for sign-symmetric tridiagonals.

    Returns ``None`` unless ``a`` is tridiagonal with positive products of
    opposite off-diagonal entries.
    """
    n = a.shape[0]
    if n > 2 and (np.any(np.tril(a, -2)) or np.any(np.triu(a, 2))):
        return None
    sub, sup = np.diag(a, -1), np.diag(a, 1)
    if np.any(sub * sup <= 0):
        return None
    # Accumulate in logs: the scaling of unbounded families spans many decades.
    logd = np.concatenate([[0.0], np.cumsum(0.5 * (np.log(sup) - np.log(sub)))])
    return np.exp(logd - logd.max())


def _twisted_vector(diag, off, lam):
    """Eigenvector of a symmetric tridiagonal from its twisted factorization.

    Entries are generated outward from the twist index as products of
    ratios, so entries many decades below the largest keep their relative
    accuracy. Inverse iteration only gets them to absolute accuracy.
    """
    n = len(diag)
    tiny = np.finfo(float).tiny
    shifted = diag - lam
    top = np.empty(n)
    bottom = np.empty(n)
    top[0] = shifted[0]
    for i in range(1, n):
        top[i] = shifted[i] - off[i - 1] ** 2 / (top[i - 1] if top[i - 1] != 0 else tiny)
    bottom[-1] = shifted[-1]
    for i in range(n - 2, -1, -1):
        bottom[i] = shifted[i] - off[i] ** 2 / (bottom[i + 1] if bottom[i + 1] != 0 else tiny)
    k = int(np.argmin(np.abs(top + bottom - shifted)))
    v = np.zeros(n)
    v[k] = 1.0
    for i in range(k - 1, -1, -1):
        v[i] = -off[i] * v[i + 1] / (top[i] if top[i] != 0 else tiny)
    for i in range(k + 1, n):
        v[i] = -off[i - 1] * v[i - 1] / (bottom[i] if bottom[i] != 0 else tiny)
    return v / np.linalg.norm(v)


def _symmetric_eigh(a, d):
    diag = np.diag(a).copy()
    off = np.sqrt(np.diag(a, -1) * np.diag(a, 1))
    lams, V = sla.eigh_tridiagonal(diag, off, lapack_driver="stebz")
    if len(lams) > 1:
        # The quadrature weights far out are the squares of tiny first entries.
        with np.errstate(all="ignore"):
            T = np.column_stack([_twisted_vector(diag, off, lam) for lam in lams])
        if np.all(np.isfinite(T)) and np.abs(T.T @ T - np.eye(len(lams))).max() <= 1e-12:
            V = T
    return lams[::-1], V[:, ::-1]


def eigenvalues(m, imag_tol=1e-8):
    """All eigenvalues in descending order.

    Tridiagonal matrices with positive off-diagonal products are symmetrized
    by a diagonal similarity first, which keeps the problem well conditioned.
    Raises :class:`ComplexSpectrumError` when a genuinely complex pair shows
    up, which means the input is not oscillatory-like.
    """
    a = _float_matrix(m)
    if a.shape[0] == 0:
        return np.zeros(0)
    if not np.all(np.isfinite(a)):
        raise ConvergenceError("matrix has non-finite entries")
    d = _symmetrizer(a)
    if d is not None:
        return _symmetric_eigh(a, d)[0]
    try:
        vals = sla.eigvals(a)
    except sla.LinAlgError as exc:
        raise ConvergenceError(str(exc)) from exc
    scale = max(1.0, np.abs(a).sum(axis=1).max())
    bad = np.abs(vals.imag) > imag_tol * scale
    if bad.any():
        raise ComplexSpectrumError(f"complex eigenvalue {vals[bad][0]!r} detected")
    return np.sort(vals.real)[::-1]


@dataclass
class SpectralDecomposition:
    """``A = U diag(lambdas) W`` with ``W U = I``; columns of U are right eigenvectors."""

    lambdas: np.ndarray
    U: np.ndarray
    W: np.ndarray
    shift: float = 0.0
    residuals: dict = field(default_factory=dict)
    dps: int = None

    @property
    def size(self):
        return len(self.lambdas)

    @property
    def extended(self):
        return self.dps is not None

    def precision(self):
        """Context manager restoring the working precision of extended results."""
        return mpmath.workdps(self.dps) if self.extended else nullcontext()

    def as_float(self):
        """Copy rounded to double precision."""
        if not self.extended:
            return self
        f = lambda a: np.array(a.tolist(), dtype=float)  # noqa: E731
        return SpectralDecomposition(f(self.lambdas), f(self.U), f(self.W), self.shift,
                                     dict(self.residuals))

    def min_gap(self):
        return float(np.min(-np.diff(self.lambdas))) if self.size > 1 else np.inf

    def to_dict(self, full=False):
        out = {"lambdas": [float(v) for v in self.lambdas], "shift": float(self.shift),
               "residuals": {k: float(v) for k, v in self.residuals.items()}}
        if full:
            out["U"] = self.U.tolist()
            out["W"] = self.W.tolist()
        return out


def _inverse_iteration(lu, residual, n, rng, trans, iters=3):
    # Repeated solves with a numerically singular factor can drift away from
    # the eigenvector, so the iterate with the smallest residual is kept.
    x = rng.standard_normal(n)
    best, best_res = None, np.inf
    for _ in range(iters):
        x = sla.lu_solve(lu, x, trans=trans)
        big = np.abs(x).max()
        if not np.isfinite(big) or big == 0:
            break
        x = x / big
        res = residual(x)
        if res < best_res:
            best, best_res = x, res
    return best, best_res


def eigenpairs(m, lambdas=None, seed=0, max_restarts=3, tol=1e-10):
    """Right/left eigenvectors by inverse iteration, normalized so ``w_k u_k = 1``.

    Right vectors are scaled to unit max-norm with a positive largest entry.
    """
    a = _float_matrix(m)
    n = a.shape[0]
    lams = eigenvalues(a) if lambdas is None else np.sort(np.asarray(lambdas, dtype=float))[::-1]
    norm = max(np.abs(a).sum(axis=1).max(), np.finfo(float).tiny)
    if n > 1 and np.min(-np.diff(lams)) < GAP_TOL * norm:
        raise SimplicityError("eigenvalues are not numerically simple")
    d = _symmetrizer(a) if lambdas is None else None
    if d is not None:
        return _from_symmetric(a, d, norm)
    rng = np.random.default_rng(seed)
    U = np.empty((n, n))
    W = np.empty((n, n))
    eye = np.eye(n)
    right_res = left_res = 0.0
    for k, lam in enumerate(lams):
        for attempt in range(max_restarts + 1):
            nudge = attempt * 4 * np.finfo(float).eps * norm
            # An exactly singular shift is expected here; the zero pivot is patched below.
            with np.errstate(all="ignore"), warnings.catch_warnings():
                warnings.simplefilter("ignore", sla.LinAlgWarning)
                lu = sla.lu_factor(a - (lam + nudge) * eye, check_finite=False)
            piv = np.abs(np.diag(lu[0]))
            if piv.min() == 0:
                lu[0][np.argmin(piv), np.argmin(piv)] = np.finfo(float).eps * norm
            with np.errstate(all="ignore"):
                u, r_res = _inverse_iteration(
                    lu, lambda v: np.abs(a @ v - lam * v).max() / norm, n, rng, 0)
                w, l_res = _inverse_iteration(
                    lu, lambda v: np.abs(v @ a - lam * v).max() / norm, n, rng, 1)
            if u is None or w is None:
                continue
            if r_res <= tol and l_res <= tol:
                break
        else:
            raise ConvergenceError(f"inverse iteration stalled for eigenvalue {lam!r}")
        u = u / u[np.argmax(np.abs(u))]
        dot = w @ u
        if abs(dot) <= 1e-14 * np.abs(w).max() * np.abs(u).max():
            raise SimplicityError(f"left/right eigenvectors orthogonal at eigenvalue {lam!r}")
        U[:, k] = u
        W[k, :] = w / dot
        right_res = max(right_res, r_res)
        left_res = max(left_res, l_res)
    biorth = np.abs(W @ U - eye).max() if n else 0.0
    cond = float(np.max(np.linalg.norm(U, axis=0) * np.linalg.norm(W, axis=1))) if n else 1.0
    return SpectralDecomposition(lams, U, W, residuals={
        "right": right_res, "left": left_res, "biorthogonality": biorth, "condition": cond})


def _lu(a, lam, tiny):
    # Row-pivoted elimination with zero skipping; band structure keeps it cheap.
    n = len(a)
    m = [list(row) for row in a]
    for i in range(n):
        m[i][i] = m[i][i] - lam
    piv = []
    for k in range(n):
        r = max(range(k, n), key=lambda i: abs(m[i][k]))
        piv.append(r)
        if r != k:
            m[k], m[r] = m[r], m[k]
        if m[k][k] == 0:
            m[k][k] = tiny
        cols = [j for j in range(k + 1, n) if m[k][j] != 0]
        for i in range(k + 1, n):
            if m[i][k] != 0:
                f = m[i][k] / m[k][k]
                m[i][k] = f
                for j in cols:
                    m[i][j] = m[i][j] - f * m[k][j]
    return m, piv


def _solve(m, piv, b):
    n = len(m)
    y = list(b)
    for k, r in enumerate(piv):
        y[k], y[r] = y[r], y[k]
    for k in range(n):
        if y[k] != 0:
            for i in range(k + 1, n):
                if m[i][k] != 0:
                    y[i] = y[i] - m[i][k] * y[k]
    for k in reversed(range(n)):
        acc = y[k]
        for j in range(k + 1, n):
            if m[k][j] != 0:
                acc = acc - m[k][j] * y[j]
        y[k] = acc / m[k][k]
    return y


def _solve_transposed(m, piv, b):
    n = len(m)
    z = list(b)
    for k in range(n):
        acc = z[k]
        for j in range(k):
            if m[j][k] != 0:
                acc = acc - m[j][k] * z[j]
        z[k] = acc / m[k][k]
    for k in reversed(range(n)):
        for i in range(k + 1, n):
            if m[i][k] != 0:
                z[k] = z[k] - m[i][k] * z[i]
    for k in reversed(range(n)):
        r = piv[k]
        z[k], z[r] = z[r], z[k]
    return z


def _scaled(v):
    big = max(v, key=abs)
    return [x / big for x in v]


def _refine(a, lam, b, norm, dps, max_iter=12):
    # Two-sided Rayleigh quotient iteration from a double-precision eigenvalue.
    tiny = norm * mpmath.mpf(10) ** (-dps)
    stop = norm * mpmath.mpf(10) ** (-(dps - 8))
    for _ in range(max_iter):
        m, piv = _lu(a, lam, tiny)
        u = _scaled(_solve(m, piv, b))
        w = _scaled(_solve_transposed(m, piv, b))
        au = [mpmath.fsum(row[j] * u[j] for j in range(len(u)) if row[j] != 0) for row in a]
        new = mpmath.fdot(w, au) / mpmath.fdot(w, u)
        done = abs(new - lam) <= stop
        lam = new
        if done:
            break
    else:
        raise ConvergenceError(f"Rayleigh quotient iteration stalled near {float(lam)!r}")
    m, piv = _lu(a, lam, tiny)
    return lam, _scaled(_solve(m, piv, u)), _scaled(_solve_transposed(m, piv, w))


def eigenpairs_extended(m, seed=0, dps=50, max_dps=400):
    """Eigenpairs of an exactly represented matrix in multiprecision arithmetic.

    Double-precision eigenvalues, or multiprecision QR eigenvalues when the
    double ones are not separated, are polished by two-sided Rayleigh quotient
    iteration at ``dps`` digits. The digit count doubles until the computed
    bases are biorthogonal to half the working precision, which absorbs the
    severe non-normality of totally positive banded matrices.
    """
    start, from_double = _extended_start(m, dps)
    while True:
        with mpmath.workdps(dps):
            dec = _extended_at(m, start, seed, dps)
        if dec is None and from_double:
            # Rayleigh iteration merged or reordered some double start values.
            start, from_double = _extended_start(m, dps, force=True)
            continue
        with mpmath.workdps(dps):
            if dec is not None and dec.residuals["biorthogonality"] <= mpmath.mpf(10) ** (-dps // 2):
                return dec
        if dps >= max_dps:
            raise ConvergenceError(f"extended eigensolver not converged at {dps} digits")
        dps *= 2


def _extended_start(m, dps, force=False):
    # Double-precision eigenvalues resolve gaps down to about eps * norm only;
    # tighter spectra are located with the multiprecision QR algorithm.
    a = np.array(np.asarray(m).tolist(), dtype=float)
    norm = float(np.abs(a).sum(axis=1).max()) if a.size else 0.0
    try:
        start = eigenvalues(a)
        if not force and (len(start) < 2 or np.min(-np.diff(start)) >= GAP_TOL * norm):
            return [mpmath.mpf(float(v)) for v in start], True
    except (ComplexSpectrumError, ConvergenceError):
        pass
    with mpmath.workdps(dps):
        vals = mpmath.eig(mpmath.matrix(as_mpf_array(m).tolist()), left=False, right=False)
        tol = norm * mpmath.mpf(10) ** (-dps // 2)
        bad = [v for v in vals if abs(mpmath.im(v)) > tol]
        if bad:
            raise ComplexSpectrumError(f"complex eigenvalue {complex(bad[0])!r} detected")
        start = sorted((mpmath.re(v) for v in vals), reverse=True)
        if any(start[k] - start[k + 1] < tol for k in range(len(start) - 1)):
            raise SimplicityError("eigenvalues are not numerically simple")
    return start, False


def _extended_at(m, start, seed, dps):
    a = as_mpf_array(m).tolist()
    n = len(a)
    norm = max(mpmath.fsum(abs(v) for v in row) for row in a)
    rng = np.random.default_rng(seed)
    b = [mpmath.mpf(float(v)) for v in rng.uniform(0.5, 1.5, n)]
    lams, us, ws = [], [], []
    for lam0 in start:
        lam, u, w = _refine(a, mpmath.mpf(lam0), b, norm, dps)
        lams.append(lam)
        us.append(u)
        ws.append(w)
    order = sorted(range(n), key=lambda k: -lams[k])
    if order != list(range(n)) or any(lams[k] <= lams[k + 1] for k in range(n - 1)):
        return None
    U = np.empty((n, n), dtype=object)
    W = np.empty((n, n), dtype=object)
    for k in range(n):
        dot = mpmath.fdot(ws[k], us[k])
        U[:, k] = us[k]
        W[k, :] = [x / dot for x in ws[k]]
    A = np.array(a, dtype=object)
    lam_arr = np.array(lams, dtype=object)
    right = max((abs(v) for v in (A @ U - U * lam_arr).flat), default=0) / norm
    left = max((abs(v) for v in (W @ A - lam_arr[:, None] * W).flat), default=0) / norm
    biorth = max((abs(v) for v in (W @ U - np.eye(n, dtype=int)).flat), default=0)
    return SpectralDecomposition(lam_arr, U, W, residuals={
        "right": right, "left": left, "biorthogonality": biorth}, dps=dps)


def _from_symmetric(a, d, norm):
    lams, V = _symmetric_eigh(a, d)
    U = V / d[:, None]
    W = V.T * d[None, :]
    # Same normalization as inverse iteration: unit max-norm right vectors.
    big = U[np.argmax(np.abs(U), axis=0), np.arange(len(lams))]
    U = U / big
    W = W * big[:, None]
    lam_col = lams[None, :]
    residuals = {
        "right": np.abs(a @ U - U * lam_col).max() / norm,
        "left": max(np.abs(W[k] @ a - lams[k] * W[k]).max() / np.abs(W[k]).max()
                    for k in range(len(lams))) / norm,
        "biorthogonality": np.abs(W @ U - np.eye(len(lams))).max(),
        "condition": float(np.max(np.linalg.norm(U, axis=0) * np.linalg.norm(W, axis=1))),
    }
    return SpectralDecomposition(lams, U, W, residuals=residuals)


def decompose(trunc, seed=0, precision="auto", dps=50):
    """Eigen-decomposition of a :class:`Truncation`, recording its shift.

    ``precision="auto"`` works in multiprecision for rational truncations.
    For float truncations it uses double precision unless the computed bases
    fail to be biorthogonal to ``REFINE_TOL``, have condition numbers above
    ``COND_TOL`` or cannot be separated at all; the eigenvectors of nonsymmetric
    banded matrices can be so ill conditioned that double precision loses
    most digits of the quadrature weights, while the moments themselves are
    well conditioned in the entries. The float entries are then decomposed
    in multiprecision as given.
    """
    if precision not in ("auto", "double", "extended"):
        raise ValueError(f"unknown precision {precision!r}")
    extended = precision == "extended" or (precision == "auto" and trunc.mode == "rational")
    if not extended:
        try:
            dec = eigenpairs(trunc.entries, seed=seed)
        except (SimplicityError, ConvergenceError, ComplexSpectrumError):
            if precision == "double":
                raise
            dec = None
        if dec is not None and (precision == "double" or (
                dec.residuals["biorthogonality"] <= REFINE_TOL
                and dec.residuals.get("condition", 1.0) <= COND_TOL)):
            dec.shift = float(trunc.shift)
            return dec
    dec = eigenpairs_extended(trunc.entries, seed=seed, dps=dps)
    dec.shift = trunc.shift
    return dec


def _abs_max(arr):
    return max((abs(v) for v in np.asarray(arr).flat), default=0)


def _poly_at(poly, x, extended):
    if extended:
        # Extra digits absorb cancellation among the large coefficients.
        with mpmath.extradps(mpmath.mp.dps):
            return +mpmath.polyval([to_mpf(c) for c in reversed(poly.coeffs)], x)
    if poly.coeffs and isinstance(poly.coeffs[0], Fraction):
        # Exact evaluation at the binary value of x avoids coefficient cancellation.
        return float(poly(Fraction(float(x))))
    return poly(float(x))


def determinantal_values(table, lambdas, N):
    """``Q_{n,N}`` and ``R_{n,N}`` (n = 0..N) evaluated at each eigenvalue.

    Returns arrays of shape ``(N+1, K)``; object arrays of mpf when the
    eigenvalues are multiprecision.
    """
    p, q = table.p, table.q
    lambdas = np.asarray(lambdas)
    x = lambdas if lambdas.dtype == object else lambdas.astype(float)
    A, B = table.values_at(x, upto=N + max(p, q) - 1)
    Q = np.empty((N + 1, x.size), dtype=x.dtype)
    R = np.empty((N + 1, x.size), dtype=x.dtype)
    tailA = [[A[a][N + r] for a in range(p)] for r in range(1, p)]
    tailB = [[B[b][N + r] for b in range(q)] for r in range(1, q)]
    for n in range(N + 1):
        Q[n] = poly_det([[A[a][n] for a in range(p)]] + tailA)
        R[n] = poly_det([[B[b][n] for b in range(q)]] + tailB)
    return Q, R


def eigenvectors_from_determinantal_formula(table, decomposition, N):
    """Eigenvector matrices from the determinantal recursion polynomials.

    ``table`` must be built on the shifted operator whose truncation was
    decomposed. Returns ``(W_alt, U_alt, W_charpoly)`` where the last one uses
    the characteristic-polynomial representation of the left vectors.

    The recurrences amplify eigenvalue errors by the dynamic range of the
    eigenvectors, so they are always run at eigenvalues polished in
    multiprecision; double-precision inputs get double-precision outputs.
    """
    dec = decomposition
    mode = "rational" if _exact(table.spec) else "float"
    mat = truncate(table.spec, N, 0, mode).entries
    if not dec.extended:
        lams, dps = polished_eigenvalues(mat, dec.lambdas, amplification_digits(dec.U))
        with mpmath.workdps(dps):
            out = _determinantal_vectors(table, np.array(lams, dtype=object), N, True)
        return tuple(np.array(v.tolist(), dtype=float) for v in out)
    while True:
        with dec.precision():
            out = _determinantal_vectors(table, dec.lambdas, N, True)
            defect = _abs_max(out[0] @ out[1] - np.eye(dec.size))
            if defect <= mpmath.mpf(10) ** (-dec.dps // 2) or dec.dps >= 800:
                return out
        dec = eigenpairs_extended(mat, dps=2 * dec.dps)


def amplification_digits(U):
    """Digits lost when recurrences are run at a slightly wrong eigenvalue.

    Running a recurrence along an eigenvector that decays by ``10^-r``
    excites the growing solution, which climbs by ``10^r`` over the same
    stretch, so errors grow by ``10^(2r)`` relative to the smallest entries.
    ``r`` is the widest dynamic range among the columns of ``U``.
    """
    mags = np.abs(np.array(np.asarray(U).tolist(), dtype=float))
    out = 0.0
    for col in mags.T:
        nz = col[col > 0]
        if nz.size:
            out = max(out, float(np.log10(nz.max() / nz.min())))
    return 2 * int(np.ceil(out))


def polished_eigenvalues(m, lambdas, spread=0, max_dps=800):
    """Eigenvalues of ``m`` refined by Rayleigh quotient iteration in multiprecision.

    The working precision is 30 digits plus ``spread``, the digits by which
    downstream recurrences amplify eigenvalue errors. Returns ``(lams, dps)``
    with the refined values as mpf numbers valid at ``dps`` digits.
    """
    dps = min(max_dps, 30 + spread)
    with mpmath.workdps(dps):
        a = as_mpf_array(m).tolist()
        norm = max(mpmath.fsum(abs(v) for v in row) for row in a)
        rng = np.random.default_rng(0)
        b = [mpmath.mpf(float(v)) for v in rng.uniform(0.5, 1.5, len(a))]
        lams = [_refine(a, to_mpf(lam), b, norm, dps)[0] for lam in lambdas]
    return lams, dps


def _determinantal_vectors(table, lams, N, ext):
    conv = to_mpf if ext else float
    Q, R = determinantal_values(table, lams, N)
    alpha, beta = (conv(v) for v in alpha_beta(table.spec, N))
    norm = np.array([beta * sum(Q[l, k] * R[l, k] for l in range(N + 1))
                     for k in range(len(lams))], dtype=Q.dtype)
    for k in range(len(lams)):
        scale = sum(abs(Q[l, k] * R[l, k]) for l in range(N + 1)) * abs(beta)
        if abs(norm[k]) <= 1e-14 * scale:
            raise DegenerateNormalizationError("vanishing normalizing sum sum_l Q_l R_l")
    U_alt = R * beta
    W_alt = (Q / norm).T
    mode = "rational" if _exact(table.spec) else "float"
    P_N = characteristic_polynomial(table.spec, N, 0, mode)
    dP = characteristic_polynomial(table.spec, N + 1, 0, mode).derivative()
    denom = np.array([_poly_at(P_N, lam, ext) * _poly_at(dP, lam, ext) for lam in lams],
                     dtype=Q.dtype)
    W_cp = (Q * alpha / denom).T
    return W_alt, U_alt, W_cp


def _exact(spec):
    return not isinstance(spec.raw_entry(0, 0), float)


def eigenvector_agreement(decomposition, W_alt, U_alt, tol=1e-8):
    """Compare rank-one spectral projectors ``u_k w_k`` between two bases.

    Projectors do not depend on how each eigenvector pair is scaled, so the
    comparison is absolute. The alternative basis must also be biorthonormal.
    """
    worst = 0.0
    with decomposition.precision():
        for k in range(decomposition.size):
            P = np.outer(decomposition.U[:, k], decomposition.W[k])
            P_alt = np.outer(U_alt[:, k], W_alt[k])
            worst = max(worst, float(_abs_max(P - P_alt) / _abs_max(P)))
        # Each entry of W U is a sum over vectors spanning many decades, so it is
        # measured against the same sum taken in absolute values.
        diff = W_alt @ U_alt - np.eye(decomposition.size)
        scale = np.abs(W_alt) @ np.abs(U_alt)
        biorth = float(max((abs(d) / max(1, s) for d, s in zip(diff.flat, scale.flat)), default=0))
    return compare(max(worst, biorth), tol, False, projector=worst, biorthogonality=biorth)


def spectral_decomposition_check(decomposition, m, n_max, tol=1e-9):
    """``U D^n W`` against ``m^n`` for ``n = 0..n_max``, relative to ``||m||^n``."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    worst = 0.0
    with decomposition.precision():
        a = as_mpf_array(m) if decomposition.extended else np.array(m, dtype=float)
        norm = max(max(sum(abs(v) for v in row) for row in a), 1e-300) if a.size else 1
        power = None
        for n in range(n_max + 1):
            power = np.eye(len(a), dtype=a.dtype) if power is None else power @ a
            if decomposition.extended and n == 0:
                power = as_mpf_array(power)
            lhs = (decomposition.U * decomposition.lambdas ** n) @ decomposition.W
            err = max((sum(abs(v) for v in row) for row in lhs - power), default=0) / norm ** n
            worst = max(worst, float(err))
    return compare(worst, tol, False, n_max=n_max)


def charpoly_agreement(decomposition, P, tol=1e-8):
    """Relative coefficient error between ``prod (x - lambda_k)`` and ``P``."""
    with decomposition.precision():
        coeffs = [1]
        for lam in decomposition.lambdas:
            # Multiply the ascending coefficient list by (x - lam).
            coeffs = [(coeffs[i - 1] if i else 0) - lam * (coeffs[i] if i < len(coeffs) else 0)
                      for i in range(len(coeffs) + 1)]
        conv = to_mpf if decomposition.extended else float
        ref = [conv(c) for c in P.coeffs]
        if len(ref) != len(coeffs):
            return compare(np.inf, tol, False)
        err = max(abs(c - r) for c, r in zip(coeffs, ref)) / max(abs(r) for r in ref)
    return compare(float(err), tol, False)
