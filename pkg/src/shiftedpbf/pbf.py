"""Normalized bidiagonal factorizations ``A = L_1 ... L_p D U_q ... U_1``.

For p >= 2 (or q >= 2) the bidiagonal factors of a *finite* banded matrix are
not unique: ``p(p-1)/2`` leading subdiagonal entries (resp. ``q(q-1)/2``
superdiagonal ones) are free. :func:`factorize_pbf` fixes them with the
Neville convention (set to zero, nothing to eliminate there) and marks them
as *structural*. Structural zeros do not count against strict positivity:
when every other entry is positive, nudging the free entries up from zero
keeps all entries positive by continuity, so a strictly positive
factorization exists.
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._arith import as_array, identity, mode_of, to_scalar, zeros
from .banded import BandedOperatorSpec, default_shift, truncate
from .exceptions import InternalConsistencyError, ShapeError, ShiftNotAdmissible

STRICT = "strictly_positive"
DEGENERATE = "nonnegative_degenerate"
FAILED = "failed"


@dataclass(frozen=True)
class BidiagonalFactorization:
    """Factor entries of ``L_1 ... L_p diag(delta) U_q ... U_1``.

    ``lower_factors[k]`` holds the subdiagonal of ``L_{k+1}`` (entry ``i`` sits
    at ``(i+1, i)``). ``upper_factors`` is stored in application order
    ``U_q, ..., U_1``; its entry ``i`` sits at ``(i, i+1)``.
    """

    lower_factors: list
    delta: np.ndarray
    upper_factors: list
    status: str
    offending_index: object = None
    reason: str = ""
    shift: object = 0
    p: int = 1
    q: int = 1

    @property
    def N(self):
        return len(self.delta) - 1

    def structural_lower(self, k):
        """Number of leading gauge entries of ``L_k`` (1-based ``k``)."""
        return self.p - k

    def structural_upper(self, k):
        return self.q - k

    def lower_matrices(self):
        return [_bidiagonal(f, self.N + 1, lower=True) for f in self.lower_factors]

    def upper_matrices(self):
        """Upper factors in application order ``U_q, ..., U_1``."""
        return [_bidiagonal(f, self.N + 1, lower=False) for f in self.upper_factors]

    def product(self):
        n = self.N + 1
        mode = mode_of(self.delta)
        out = identity(n, mode)
        for mat in self.lower_matrices():
            out = out @ mat
        dmat = zeros((n, n), mode)
        for i in range(n):
            dmat[i, i] = self.delta[i]
        out = out @ dmat
        for mat in self.upper_matrices():
            out = out @ mat
        return out

    def to_dict(self):
        conv = float if mode_of(self.delta) == "float" else str
        return {
            "N": self.N,
            "shift": conv(self.shift),
            "status": self.status,
            "offending_index": self.offending_index,
            "lower_factors": [[conv(v) for v in f] for f in self.lower_factors],
            "delta": [conv(v) for v in self.delta],
            "upper_factors": [[conv(v) for v in f] for f in self.upper_factors],
        }


def _bidiagonal(entries, n, lower):
    mode = mode_of(np.asarray(entries, dtype=object) if len(entries) == 0 else entries)
    if isinstance(entries, np.ndarray):
        mode = mode_of(entries)
    out = identity(n, mode)
    for i, v in enumerate(entries):
        if lower:
            out[i + 1, i] = v
        else:
            out[i, i + 1] = v
    return out


def _check_banded(m, p, q):
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {m.shape}")
    n = m.shape[0]
    for i in range(n):
        for j in range(n):
            if (j < i - p or j > i + q) and m[i, j] != 0:
                raise ShapeError(f"entry ({i}, {j}) violates the ({p}, {q}) band")
    return m


class _Breakdown(Exception):
    def __init__(self, index, reason):
        self.index = index
        self.reason = reason


def _ldu(m, p, q):
    """Banded Doolittle ``m = L diag(delta) U`` without pivoting."""
    n = m.shape[0]
    mode = mode_of(m)
    work = m.copy()
    L = identity(n, mode)
    U = identity(n, mode)
    delta = zeros(n, mode)
    for k in range(n):
        piv = work[k, k]
        delta[k] = piv
        rows = range(k + 1, min(n, k + p + 1))
        cols = range(k + 1, min(n, k + q + 1))
        if piv == 0:
            if any(work[i, k] != 0 for i in rows) or any(work[k, j] != 0 for j in cols):
                raise _Breakdown(k, f"zero pivot delta_{k}")
            continue
        for i in rows:
            L[i, k] = work[i, k] / piv
        for j in cols:
            U[k, j] = work[k, j] / piv
        for i in rows:
            if L[i, k] == 0:
                continue
            for j in range(k + 1, min(n, k + q + 1)):
                work[i, j] = work[i, j] - L[i, k] * piv * U[k, j]
    return L, delta, U


def _peel(lower, bandwidth, exact):
    """Split off the leftmost bidiagonal factor of a unit lower banded matrix.

    Returns the factor's subdiagonal and the remaining matrix of bandwidth
    ``bandwidth - 1``. Row ``i`` of the remainder is row ``i`` of ``lower``
    minus ``ell[i-1]`` times row ``i-1`` of the remainder; ``ell[i-1]`` is
    chosen to cancel the lowest subdiagonal. Rows above ``bandwidth`` have
    nothing to cancel and get the structural value zero.
    """
    n = lower.shape[0]
    mode = mode_of(lower)
    rest = lower.copy()
    ell = zeros(max(n - 1, 0), mode)
    for i in range(1, n):
        if i >= bandwidth:
            target = lower[i, i - bandwidth]
            pivot = rest[i - 1, i - bandwidth]
            if pivot == 0:
                if target != 0:
                    raise _Breakdown(i - 1, f"zero pivot while peeling subdiagonal {bandwidth}")
                mult = ell[i - 1]
            else:
                mult = target / pivot
            ell[i - 1] = mult
        mult = ell[i - 1]
        if mult != 0:
            # Row i-1 of the remainder is zero outside columns i-1-bandwidth..i-1.
            lo = max(0, i - 1 - bandwidth)
            rest[i, lo:i] = lower[i, lo:i] - mult * rest[i - 1, lo:i]
        if i >= bandwidth:
            rest[i, i - bandwidth] = Fraction(0) if exact else 0.0
    return ell, rest


def _split(unit, width):
    exact = mode_of(unit) == "rational"
    factors = []
    rest = unit
    for bw in range(width, 0, -1):
        ell, rest = _peel(rest, bw, exact)
        factors.append(ell)
    return factors


def factorize_pbf(m, p, q):
    """Factor a (p, q)-banded square matrix into normalized bidiagonal factors.

    Returns a :class:`BidiagonalFactorization` whose status is
    ``strictly_positive`` when every non-structural factor entry and every
    pivot is positive, ``nonnegative_degenerate`` when some are zero,
    and ``failed`` on a zero-pivot breakdown or a negative entry.
    """
    m = _check_banded(m, p, q)
    n = m.shape[0]
    mode = mode_of(m) if m.dtype == object else "float"
    if m.dtype != object:
        m = np.asarray(m, dtype=float)
    try:
        L, delta, U = _ldu(m, p, q)
        lower = _split(L, p)
        upper_rev = _split(U.T.copy(), q)
    except _Breakdown as exc:
        return BidiagonalFactorization([], zeros(n, mode), [], FAILED, exc.index, exc.reason, p=p, q=q)
    upper = list(reversed(upper_rev))
    status, where, reason = _classify(lower, delta, upper_rev, p, q)
    return BidiagonalFactorization(lower, delta, upper, status, where, reason, p=p, q=q)


def _classify(lower, delta, upper_rev, p, q):
    zero_at = None
    for i, v in enumerate(delta):
        if v < 0:
            return FAILED, ("delta", i), f"negative pivot delta_{i}"
        if v == 0 and zero_at is None:
            zero_at = ("delta", i)
    for label, factors, width in (("L", lower, p), ("U", upper_rev, q)):
        for k, ell in enumerate(factors, start=1):
            skip = width - k
            for i, v in enumerate(ell):
                if i < skip:
                    continue
                if v < 0:
                    return FAILED, (f"{label}{k}", i), f"negative entry in {label}_{k} at {i}"
                if v == 0 and zero_at is None:
                    zero_at = (f"{label}{k}", i)
    if zero_at is not None:
        return DEGENERATE, zero_at, "zero entry"
    return STRICT, None, ""


def is_pbf_admissible(spec, N, shift, mode="float"):
    """Factor ``T^[N] + shift I``; returns ``(admissible, factorization)``."""
    trunc = truncate(spec, N, shift, mode)
    fac = factorize_pbf(trunc.entries, spec.p, spec.q)
    fac = _with_shift(fac, trunc.shift)
    return fac.status == STRICT, fac


def _with_shift(fac, shift):
    from dataclasses import replace
    return replace(fac, shift=shift)


def leading_minors(m):
    """Determinants of the leading k x k submatrices, k = 1..n."""
    m = np.asarray(m)
    n = m.shape[0]
    exact = m.dtype == object
    work = m.copy() if exact else np.asarray(m, dtype=float).copy()
    rows, cols = np.nonzero(work != 0)
    below = int(max(rows - cols, default=0))
    above = int(max(cols - rows, default=0))
    minors = []
    prod = Fraction(1) if exact else 1.0
    for k in range(n):
        piv = work[k, k]
        if piv == 0:
            minors.append(prod * 0)
            minors.extend(_determinant(m[:j, :j]) for j in range(k + 2, n + 1))
            return minors
        prod = prod * piv
        minors.append(prod)
        # Elimination without pivoting keeps the band, so only the band is touched.
        end = min(n, k + above + 1)
        for i in range(k + 1, min(n, k + below + 1)):
            if work[i, k] != 0:
                f = work[i, k] / piv
                work[i, k:end] = work[i, k:end] - f * work[k, k:end]
    return minors


def _determinant(m):
    """Determinant with partial pivoting (exact for object arrays)."""
    work = m.copy()
    n = work.shape[0]
    det = Fraction(1) if work.dtype == object else 1.0
    for k in range(n):
        col = [abs(work[i, k]) for i in range(k, n)]
        r = k + int(np.argmax(col))
        if work[r, k] == 0:
            return det * 0
        if r != k:
            work[[k, r]] = work[[r, k]]
            det = -det
        det = det * work[k, k]
        for i in range(k + 1, n):
            f = work[i, k] / work[k, k]
            work[i, k:] = work[i, k:] - f * work[k, k:]
    return det


def oscillatory_check_tridiagonal(m):
    """Gantmacher–Krein criterion for a tridiagonal matrix."""
    m = np.asarray(m)
    n = m.shape[0]
    if m.ndim != 2 or m.shape[1] != n:
        raise ShapeError("expected a square matrix")
    for i in range(n):
        for j in range(n):
            if abs(i - j) > 1 and m[i, j] != 0:
                raise ShapeError(f"entry ({i}, {j}) is outside the tridiagonal band")
    for i in range(n - 1):
        if not (m[i + 1, i] > 0 and m[i, i + 1] > 0):
            return False
    return all(v > 0 for v in leading_minors(m))


def minimal_admissible_shift(spec, N, strategy="bisect", eps=None, mode="float"):
    """Smallest shift found making ``T^[N] + s I`` PBF-admissible.

    ``theorem_norm`` returns ``||T^[N]||_inf + 1``. ``bisect`` returns 0 when
    the unshifted truncation already factors, and otherwise searches down from
    the norm shift; the result is always admissible and lies within ``eps`` of
    the last inadmissible probe.
    """
    if strategy not in ("theorem_norm", "bisect"):
        raise ValueError(f"unknown strategy {strategy!r}")
    if strategy == "bisect" and is_pbf_admissible(spec, N, 0, mode)[0]:
        return to_scalar(0, mode)
    top = default_shift(spec, N, mode)
    ok, _ = is_pbf_admissible(spec, N, top, mode)
    if not ok:
        if _positive_jacobi(spec, N):
            raise InternalConsistencyError(
                f"norm shift {top} not admissible for a Jacobi truncation with positive off-diagonals")
        raise ShiftNotAdmissible(f"not admissible at the norm shift {top} (N={N})")
    if strategy == "theorem_norm":
        return top
    if eps is None:
        eps = 1e-9 * (1 + float(top))
    lo, hi = to_scalar(0, mode), top
    eps = to_scalar(eps, mode)
    while hi - lo > eps:
        mid = (lo + hi) / 2
        if is_pbf_admissible(spec, N, mid, mode)[0]:
            hi = mid
        else:
            lo = mid
    return hi


def _positive_jacobi(spec, N):
    if spec.p != 1 or spec.q != 1:
        return False
    return all(spec.raw_entry(i + 1, i) > 0 and spec.raw_entry(i, i + 1) > 0 for i in range(N))


def _draw(rng, low, high, mode):
    """Positive rational in ``[low, high]`` with denominator 4."""
    lo, hi = int(np.ceil(low * 4)), int(np.floor(high * 4))
    if lo <= 0:
        lo = 1
    if hi < lo:
        raise ValueError("entry_range must contain a positive multiple of 1/4")
    return Fraction(int(rng.integers(lo, hi + 1)), 4)


def synthesize_pbf_operator(p, q, rng_seed=0, entry_range=(1, 3), size=40, values=None):
    """Banded operator built as a product of positive bidiagonal factors.

    Factor entries are drawn from ``entry_range`` as exact rationals (or all
    set to ``values`` when given). The leading gauge entries of each factor
    are zero, matching the convention of :func:`factorize_pbf`, so every
    truncation factors back to exactly the generating entries.
    """
    low, high = entry_range
    if not (0 < low <= high):
        raise ValueError("entry_range must lie in (0, inf)")
    rng = np.random.default_rng(rng_seed)
    n = size + 1

    def pick():
        return Fraction(values) if values is not None else _draw(rng, low, high, "rational")

    lower = [[Fraction(0) if i < p - k else pick() for i in range(n - 1)] for k in range(1, p + 1)]
    delta = [pick() for _ in range(n)]
    upper_rev = [[Fraction(0) if i < q - k else pick() for i in range(n - 1)] for k in range(1, q + 1)]
    fac = BidiagonalFactorization(
        [as_array(f, "rational") for f in lower], as_array(delta, "rational"),
        [as_array(f, "rational") for f in reversed(upper_rev)], STRICT, p=p, q=q)
    full = fac.product()
    diagonals = {}
    for d in range(-p, q + 1):
        diagonals[d] = [full[k - d, k] if d < 0 else full[k, k + d] for k in range(size - abs(d) + 1)]
    params = {"seed": rng_seed, "low": low, "high": high, "size": size,
              "factors": {"lower": lower, "delta": delta, "upper": [list(f) for f in reversed(upper_rev)]}}
    return BandedOperatorSpec(p, q, diagonals=diagonals, params=params, max_index=size)
