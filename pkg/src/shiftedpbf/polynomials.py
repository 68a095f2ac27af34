"""Left/right recursion polynomials of a banded operator.

The left family ``A^(a)_n`` (a = 1..p) and right family ``B^(b)_n`` (b = 1..q)
are the entries of formal left/right eigenvectors of ``T``. They are built by
solving the banded recurrences for their top term, starting from the rows of
the initial-condition matrices ``nu`` and ``xi``.
"""

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from ._arith import as_mpf_array, is_mpf_array, to_mpf, to_scalar
from ._checks import compare
from .banded import truncate
from .exceptions import OutOfRangeError, ShapeError, ZeroExtremeDiagonalError

ZERO_DEGREE = -math.inf


class Polynomial:
    """Dense polynomial with ascending coefficients.

    The zero polynomial has an empty coefficient tuple and degree
    :data:`ZERO_DEGREE`; trailing zeros are always stripped.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=()):
        coeffs = list(coeffs)
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        self.coeffs = tuple(coeffs)

    @classmethod
    def constant(cls, c):
        return cls([c])

    @classmethod
    def x(cls, one=Fraction(1)):
        return cls([one * 0, one])

    @property
    def degree(self):
        return len(self.coeffs) - 1 if self.coeffs else ZERO_DEGREE

    def is_zero(self):
        return not self.coeffs

    def __repr__(self):
        return f"Polynomial({list(self.coeffs)!r})"

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(other)
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def _lift(self, other):
        return other if isinstance(other, Polynomial) else Polynomial.constant(other)

    def __add__(self, other):
        other = self._lift(other)
        a, b = self.coeffs, other.coeffs
        n = max(len(a), len(b))
        return Polynomial([(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)])

    __radd__ = __add__

    def __neg__(self):
        return Polynomial([-c for c in self.coeffs])

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            return Polynomial([c * other for c in self.coeffs])
        if not self.coeffs or not other.coeffs:
            return Polynomial()
        out = [0] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] = out[i + j] + a * b
        return Polynomial(out)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return Polynomial([c / scalar for c in self.coeffs])

    def shift_up(self):
        """Multiply by ``x``."""
        if not self.coeffs:
            return Polynomial()
        return Polynomial((self.coeffs[0] * 0,) + self.coeffs)

    def __call__(self, x):
        acc = x * 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def derivative(self):
        return Polynomial([k * c for k, c in enumerate(self.coeffs)][1:])

    def leading(self):
        return self.coeffs[-1] if self.coeffs else 0

    def max_abs_coeff(self):
        return max((abs(c) for c in self.coeffs), default=0)


def poly_det(rows):
    """Leibniz determinant of a small square matrix of polynomials (or numbers)."""
    n = len(rows)
    total = Polynomial() if any(isinstance(v, Polynomial) for r in rows for v in r) else 0
    for perm in itertools.permutations(range(n)):
        sign = _perm_sign(perm)
        term = 1
        for i, j in enumerate(perm):
            term = rows[i][j] * term
        total = total + term if sign > 0 else total - term
    return total


def _perm_sign(perm):
    sign, seen = 1, set()
    for i in range(len(perm)):
        if i in seen:
            continue
        j, length = i, 0
        while j not in seen:
            seen.add(j)
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


@dataclass
class RecursionTable:
    """Coefficient tables ``A[a-1][n]`` and ``B[b-1][n]`` for ``n = 0..horizon``."""

    spec: object
    starters: object
    horizon: int
    A: list = field(default_factory=list)
    B: list = field(default_factory=list)

    @property
    def p(self):
        return self.spec.p

    @property
    def q(self):
        return self.spec.q

    def values_at(self, x, upto=None):
        """Run both recurrences at a point (number, numpy array or Polynomial).

        Returns ``(A, B)`` with ``A[a-1][n]`` and ``B[b-1][n]`` for ``n <= upto``.
        """
        upto = self.horizon if upto is None else upto
        return _run_recurrences(self.spec, self.starters, upto, x)


def _is_exact(x):
    if isinstance(x, Fraction):
        return True
    if isinstance(x, np.ndarray):
        return x.dtype == object
    return isinstance(x, int)


def _run_recurrences(spec, starters, upto, x):
    p, q = spec.p, spec.q
    if spec.max_index is not None and upto > spec.max_index + max(p, q):
        raise OutOfRangeError(f"horizon {upto} needs entries beyond max_index {spec.max_index}")
    if is_mpf_array(x) or isinstance(x, mpmath.mpf):
        nu, xi = as_mpf_array(starters.nu), as_mpf_array(starters.xi)
        convert = to_mpf
    else:
        mode = "rational" if isinstance(x, Polynomial) or _is_exact(x) else "float"
        nu, xi = starters.astype(mode).nu, starters.astype(mode).xi
        convert = lambda v: to_scalar(v, mode)  # noqa: E731
    zero = x * 0

    def ent(i, j):
        return convert(spec.raw_entry(i, j))

    A = [[zero + nu[j, a] if j < p else None for j in range(upto + 1)] for a in range(p)]
    B = [[zero + xi[j, b] if j < q else None for j in range(upto + 1)] for b in range(q)]
    # Column n of T fixes A_{n+p}; row n fixes B_{n+q}.
    for n in range(0, upto - p + 1):
        top = ent(n + p, n)
        if top == 0:
            raise ZeroExtremeDiagonalError(f"T[{n + p}, {n}] vanishes; cannot solve for A_{n + p}")
        for a in range(p):
            col = A[a]
            acc = col[n] * x
            for k in range(max(0, n - q), n + p):
                t = ent(k, n)
                if t != 0:
                    acc = acc - col[k] * t
            col[n + p] = acc / top
    for n in range(0, upto - q + 1):
        top = ent(n, n + q)
        if top == 0:
            raise ZeroExtremeDiagonalError(f"T[{n}, {n + q}] vanishes; cannot solve for B_{n + q}")
        for b in range(q):
            col = B[b]
            acc = col[n] * x
            for k in range(max(0, n - p), n + q):
                t = ent(n, k)
                if t != 0:
                    acc = acc - t * col[k]
            col[n + q] = acc / top
    return A, B


def build_table(spec, starters, N_max):
    """Exact (or float, for float-valued specs) coefficient tables up to ``N_max``."""
    if starters.p != spec.p or starters.q != spec.q:
        raise ShapeError("starter dimensions do not match the band")
    float_spec = isinstance(spec.raw_entry(0, 0), float)
    x = Polynomial([0.0, 1.0]) if float_spec else Polynomial.x()
    if float_spec:
        A, B = _run_float_poly(spec, starters, N_max)
    else:
        A, B = _run_recurrences(spec, starters, N_max, x)
    return RecursionTable(spec, starters, N_max, A, B)


def _run_float_poly(spec, starters, upto):
    # Same recurrences with float coefficients; Polynomial arithmetic is type-agnostic.
    p, q = spec.p, spec.q
    nu, xi = starters.astype("float").nu, starters.astype("float").xi
    x = Polynomial([0.0, 1.0])
    A = [[Polynomial([nu[j, a]]) if j < p else None for j in range(upto + 1)] for a in range(p)]
    B = [[Polynomial([xi[j, b]]) if j < q else None for j in range(upto + 1)] for b in range(q)]
    ent = lambda i, j: float(spec.raw_entry(i, j))  # noqa: E731
    for n in range(0, upto - p + 1):
        top = ent(n + p, n)
        if top == 0:
            raise ZeroExtremeDiagonalError(f"T[{n + p}, {n}] vanishes")
        for a in range(p):
            acc = A[a][n] * x
            for k in range(max(0, n - q), n + p):
                acc = acc - A[a][k] * ent(k, n)
            A[a][n + p] = acc / top
    for n in range(0, upto - q + 1):
        top = ent(n, n + q)
        if top == 0:
            raise ZeroExtremeDiagonalError(f"T[{n}, {n + q}] vanishes")
        for b in range(q):
            acc = B[b][n] * x
            for k in range(max(0, n - p), n + q):
                acc = acc - B[b][k] * ent(n, k)
            B[b][n + q] = acc / top
    return A, B


def recurrence_residual(table):
    """Largest coefficient of ``sum_k A_k T[k, n] - x A_n`` (and the B analogue).

    Exact tables give the absolute residual. Float residuals are divided by
    the largest coefficient among the terms of the sum, the level at which
    cancellation in floating point happens.
    """
    spec, p, q = table.spec, table.p, table.q
    exact = not isinstance(spec.raw_entry(0, 0), float)
    worst = 0
    x = Polynomial.x()

    def residual(lhs, terms):
        res = -lhs
        for poly, t in terms:
            res = res + poly * t
        if exact:
            return res.max_abs_coeff()
        scale = max([lhs.max_abs_coeff()] + [poly.max_abs_coeff() * abs(t) for poly, t in terms])
        return res.max_abs_coeff() / max(1.0, scale)

    for n in range(0, table.horizon - p + 1):
        for a in range(p):
            terms = [(table.A[a][k], spec.raw_entry(k, n)) for k in range(max(0, n - q), n + p + 1)]
            worst = max(worst, residual(table.A[a][n] * x, terms))
    for n in range(0, table.horizon - q + 1):
        for b in range(q):
            terms = [(table.B[b][k], spec.raw_entry(n, k)) for k in range(max(0, n - p), n + q + 1)]
            worst = max(worst, residual(table.B[b][n] * x, terms))
    return worst


def characteristic_polynomial(spec, N, shift=0, mode="rational"):
    """``P_N(x) = det(x I_N - (T^[N-1] + shift I))``; ``P_0 = 1``.

    Computed with the division-free Samuelson–Berkowitz recursion. In float
    mode the recursion runs exactly on the float entries and only the
    coefficients are rounded; in floating point the low-order coefficients
    suffer heavy cancellation.
    """
    if N == 0:
        return Polynomial([Fraction(1) if mode == "rational" else 1.0])
    mat = truncate(spec, N - 1, shift, mode).entries
    exact = [[Fraction(v) for v in row] for row in np.asarray(mat).tolist()]
    # Clearing denominators keeps the recursion in integer arithmetic.
    den = math.lcm(*(v.denominator for row in exact for v in row))
    ints = np.array([[v.numerator * (den // v.denominator) for v in row] for row in exact], dtype=object)
    coeffs = [Fraction(c, den ** k) for k, c in enumerate(_berkowitz(ints, 1))]
    if mode == "float":
        coeffs = [float(c) for c in coeffs]
    return Polynomial(list(reversed(coeffs)))


def _berkowitz(mat, one):
    """Coefficients (descending) of ``det(x I - mat)``."""
    n = mat.shape[0]
    vect = [one]
    for r in range(n):
        # Leading (r+1)x(r+1) block: a = mat[r, r], R = row part, C = column part, S = leading block.
        S = mat[:r, :r]
        R = mat[r, :r]
        C = mat[:r, r]
        a = mat[r, r]
        col = [one, -a]
        pw = C
        for _ in range(r):
            col.append(-(R @ pw))
            pw = S @ pw
        # Toeplitz (lower triangular) product with the previous coefficient vector.
        new = []
        for i in range(r + 2):
            acc = one * 0
            for j in range(min(i, r) + 1):
                acc = acc + col[i - j] * vect[j]
            new.append(acc)
        vect = new
    return vect


def alpha_beta(spec, N):
    """Products of extreme diagonals relating ``P_N`` to the recursion blocks."""
    if N == 0:
        return 1, 1
    p, q = spec.p, spec.q
    alpha = (-1) ** ((p - 1) * N)
    beta = (-1) ** ((q - 1) * N)
    for i in range(N):
        alpha = alpha * spec.raw_entry(i + p, i)
        beta = beta * spec.raw_entry(i, i + q)
    return alpha, beta


def _require(table, top):
    if table.horizon < top:
        raise OutOfRangeError(f"table horizon {table.horizon} < required index {top}")


def block_A(table, N):
    _require(table, N + table.p - 1)
    return [[table.A[a][N + j] for j in range(table.p)] for a in range(table.p)]


def block_B(table, N):
    _require(table, N + table.q - 1)
    return [[table.B[b][N + i] for b in range(table.q)] for i in range(table.q)]


def block_determinant_identity_check(table, N, tol=1e-10):
    """``P_N = alpha_N det A_N = beta_N det B_N`` coefficientwise."""
    spec = table.spec
    exact = not isinstance(spec.raw_entry(0, 0), float)
    P = characteristic_polynomial(spec, N, 0, "rational" if exact else "float")
    alpha, beta = alpha_beta(spec, N)
    left = poly_det(block_A(table, N)) * alpha
    right = poly_det(block_B(table, N)) * beta
    defect = max((left - P).max_abs_coeff(), (right - P).max_abs_coeff())
    scale = max(1.0, float(P.max_abs_coeff()))
    return compare(defect, tol * scale, exact, P=P, alpha_detA=left, beta_detB=right)


def determinantal_Q(table, n, N):
    """p x p determinant: first row ``A^(.)_n``, then rows ``A^(.)_{N+1..N+p-1}``."""
    p = table.p
    _require(table, max(n, N + p - 1))
    rows = [[table.A[a][n] for a in range(p)]]
    rows += [[table.A[a][N + r] for a in range(p)] for r in range(1, p)]
    return poly_det(rows)


def determinantal_R(table, n, N):
    q = table.q
    _require(table, max(n, N + q - 1))
    rows = [[table.B[b][n] for b in range(q)]]
    rows += [[table.B[b][N + r] for b in range(q)] for r in range(1, q)]
    return poly_det(rows)


def degree_bound(n, index, width):
    """``ceil((n + 2 - index) / width) - 1``."""
    return -((-(n + 2 - index)) // width) - 1


@dataclass(frozen=True)
class DegreeRow:
    series: str
    index: int
    n: int
    degree: float
    bound: int

    # A negative bound means the polynomial must vanish identically.
    @property
    def attained(self):
        if self.bound < 0:
            return self.degree == ZERO_DEGREE
        return self.degree == self.bound

    @property
    def violated(self):
        if self.bound < 0:
            return self.degree != ZERO_DEGREE
        return self.degree > self.bound


def degree_report(table, up_to_n=None):
    up_to_n = table.horizon if up_to_n is None else up_to_n
    rows = []
    for a in range(1, table.p + 1):
        for n in range(up_to_n + 1):
            rows.append(DegreeRow("A", a, n, table.A[a - 1][n].degree, degree_bound(n, a, table.p)))
    for b in range(1, table.q + 1):
        for n in range(up_to_n + 1):
            rows.append(DegreeRow("B", b, n, table.B[b - 1][n].degree, degree_bound(n, b, table.q)))
    return rows


def table_rows(table, up_to_n=None):
    """Flat dump rows ``(series, index, n, coefficients)``."""
    up_to_n = table.horizon if up_to_n is None else up_to_n
    out = []
    for label, fam, width in (("A", table.A, table.p), ("B", table.B, table.q)):
        for k in range(width):
            for n in range(up_to_n + 1):
                out.append((label, k + 1, n, fam[k][n].coeffs))
    return out
