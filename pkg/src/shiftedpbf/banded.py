"""Semi-infinite (p, q)-banded operators, their truncations and shifts.

An operator is described by a :class:`BandedOperatorSpec`, either from
explicit diagonal arrays or from a builtin parametric family. Entries are
kept in whatever exact type the source provides (``int``, ``Fraction``,
``float``) and only converted when a truncation is assembled in a given
arithmetic mode.
"""

from dataclasses import dataclass, field, replace
from fractions import Fraction
from numbers import Real

import numpy as np

from ._arith import as_array, check_mode, identity, inf_norm, mode_of, to_scalar, unit_lower_inverse
from ._checks import compare
from .exceptions import ContractViolation, OutOfRangeError, SpecError

FAMILIES = ("jacobi", "hermite", "constant", "random_pbf")


def _number(value):
    if isinstance(value, str):
        return Fraction(value)
    if isinstance(value, bool) or not isinstance(value, Real):
        raise SpecError(f"expected a real number, got {value!r}")
    if isinstance(value, float) and not np.isfinite(value):
        raise SpecError(f"non-finite entry {value!r}")
    return value


def _poly_in_n(coeffs, n):
    if not isinstance(coeffs, (list, tuple)):
        coeffs = [coeffs]
    acc = 0
    for c in reversed(coeffs):
        acc = acc * n + _number(c)
    return acc


@dataclass(frozen=True)
class BandedOperatorSpec:
    """Generator of the entries ``T[i, j]`` of a semi-infinite banded matrix.

    Parameters
    ----------
    p, q : int
        Number of sub- and superdiagonals.
    diagonals : dict, optional
        Map from offset ``d = j - i`` in ``[-p, q]`` to an array. For ``d >= 0``
        element ``k`` is ``T[k, k + d]``; for ``d < 0`` it is ``T[k - d, k]``.
    family, params : optional
        Builtin family name (one of :data:`FAMILIES`) and its parameters.
    max_index : int, optional
        Largest row/column index the source can produce.
    diagonal_offset : number
        Constant added to every diagonal entry (used to build ``T + s I``).
    """

    p: int
    q: int
    diagonals: dict = None
    family: str = None
    params: dict = field(default_factory=dict)
    max_index: int = None
    diagonal_offset: object = 0

    def __post_init__(self):
        if not (isinstance(self.p, int) and isinstance(self.q, int)) or self.p < 1 or self.q < 1:
            raise SpecError(f"p and q must be positive integers, got p={self.p!r}, q={self.q!r}")
        if (self.diagonals is None) == (self.family is None):
            raise SpecError("exactly one of 'diagonals' or 'family' must be given")
        if self.diagonals is not None:
            self._validate_diagonals()
        elif self.family not in FAMILIES:
            raise SpecError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.max_index is not None and self.max_index < 0:
            raise SpecError("max_index must be nonnegative")

    def _validate_diagonals(self):
        diags = {}
        for key, arr in self.diagonals.items():
            d = int(key)
            if d < -self.p or d > self.q:
                raise SpecError(f"offset {d} lies outside the band [-{self.p}, {self.q}]")
            diags[d] = tuple(_number(v) for v in arr)
        for d in (-self.p, self.q):
            if d not in diags or not diags[d]:
                raise SpecError(f"extreme diagonal {d} is missing")
            for k, v in enumerate(diags[d]):
                if v == 0:
                    raise SpecError(f"extreme diagonal {d} has a zero entry at position {k}")
        implied = min(len(arr) + abs(d) - 1 for d, arr in diags.items())
        object.__setattr__(self, "diagonals", diags)
        if self.max_index is None:
            object.__setattr__(self, "max_index", implied)
        elif self.max_index > implied:
            raise SpecError(f"max_index {self.max_index} exceeds what the arrays provide ({implied})")

    def shifted(self, s):
        """Spec of ``T + s I`` (the shift accumulates with any existing one)."""
        return replace(self, diagonal_offset=self.diagonal_offset + _number(s))

    def raw_entry(self, i, j):
        d = j - i
        if d < -self.p or d > self.q:
            return 0
        if self.diagonals is not None:
            arr = self.diagonals.get(d)
            value = 0 if arr is None else arr[min(i, j)] if min(i, j) < len(arr) else 0
        else:
            value = _family_entry(self.family, self.params, self.p, self.q, i, j)
        if i == j and self.diagonal_offset != 0:
            value = value + self.diagonal_offset
        return value


def _family_entry(family, params, p, q, i, j):
    d = j - i
    if family == "jacobi":
        if d == 0:
            return _poly_in_n(params.get("diag", 0), i)
        if d == -1:
            return _poly_in_n(params.get("sub", 1), i)
        return _poly_in_n(params.get("super", 1), i)
    if family == "hermite":
        if d == 0:
            return 0
        if d == -1:
            return _number(params.get("scale", Fraction(1, 2))) * i
        return 1
    if family == "constant":
        values = {int(k): v for k, v in params.get("values", {}).items()}
        return _number(values.get(d, 0))
    raise SpecError(f"family {family!r} has no closed-form entries; materialize it first")


def jacobi_spec(diag=0, sub=1, super=1, max_index=None):
    """Tridiagonal spec with entries given as polynomials in the row index.

    ``diag``, ``sub`` and ``super`` are coefficient lists (ascending) of
    ``T[n, n]``, ``T[n, n - 1]`` and ``T[n, n + 1]`` as functions of ``n``.
    """
    return BandedOperatorSpec(1, 1, family="jacobi",
                              params={"diag": diag, "sub": sub, "super": super},
                              max_index=max_index)


def hermite_spec(scale=Fraction(1, 2), max_index=None):
    """Jacobi matrix of the monic Hermite-type recurrence ``x P_n = P_{n+1} + scale*n P_{n-1}``."""
    return BandedOperatorSpec(1, 1, family="hermite", params={"scale": scale}, max_index=max_index)


def constant_spec(p, q, values, max_index=None):
    values = {int(k): v for k, v in values.items()}
    for d in (-p, q):
        if _number(values.get(d, 0)) == 0:
            raise SpecError(f"extreme diagonal {d} must be nonzero")
    return BandedOperatorSpec(p, q, family="constant", params={"values": values}, max_index=max_index)


def entry(spec, i, j):
    """``T[i, j]``; exactly zero outside the band."""
    if i < 0 or j < 0:
        raise OutOfRangeError(f"negative index ({i}, {j})")
    if spec.max_index is not None and max(i, j) > spec.max_index:
        raise OutOfRangeError(f"index ({i}, {j}) beyond max_index {spec.max_index}")
    return spec.raw_entry(i, j)


@dataclass(frozen=True)
class Truncation:
    """Dense ``(N+1) x (N+1)`` principal truncation plus a diagonal shift."""

    N: int
    entries: np.ndarray
    spec: BandedOperatorSpec
    shift: object = 0
    mode: str = "float"

    @property
    def size(self):
        return self.N + 1


def truncate(spec, N, shift=0, mode="float"):
    if N < 0:
        raise ContractViolation("N must be nonnegative")
    if shift < 0:
        raise ContractViolation("shift must be nonnegative")
    check_mode(mode)
    if spec.max_index is not None and N > spec.max_index:
        raise OutOfRangeError(f"spec cannot produce index {N} (max_index {spec.max_index})")
    mat = np.empty((N + 1, N + 1), dtype=object)
    mat.fill(0)
    for i in range(N + 1):
        for j in range(max(0, i - spec.p), min(N, i + spec.q) + 1):
            mat[i, j] = spec.raw_entry(i, j)
        mat[i, i] = mat[i, i] + _number(shift)
    return Truncation(N, as_array(mat, mode), spec, to_scalar(shift, mode), mode)


def infinity_norm(t):
    """Max absolute row sum. Accepts a Truncation or a plain matrix."""
    mat = t.entries if isinstance(t, Truncation) else np.asarray(t)
    return inf_norm(mat)


def default_shift(spec, N, mode="float"):
    """``||T^[N]||_inf + 1``; entries outside the truncation do not count."""
    return infinity_norm(truncate(spec, N, 0, mode)) + 1


def dense_power(t, n):
    mat = t.entries if isinstance(t, Truncation) else np.asarray(t)
    if n < 0:
        raise ContractViolation("exponent must be nonnegative")
    out = identity(mat.shape[0], mode_of(mat))
    for _ in range(n):
        out = out @ mat
    return out


def path_sums(spec, start, n_max, cutoff=None):
    """Enumerate every band-respecting index path leaving ``start``.

    Returns ``sums[n][j]``: the sum over all paths of length ``n`` ending at
    ``j`` of the product of traversed entries. Paths never visit negative
    indices and, when ``cutoff`` is given, never visit indices above it.
    """
    cache = {}

    def t(i, j):
        key = (i, j)
        if key not in cache:
            cache[key] = spec.raw_entry(i, j)
        return cache[key]

    sums = [dict() for _ in range(n_max + 1)]

    def walk(idx, depth, prod):
        bucket = sums[depth]
        bucket[idx] = bucket.get(idx, 0) + prod
        if depth == n_max:
            return
        hi = idx + spec.q if cutoff is None else min(idx + spec.q, cutoff)
        for nxt in range(max(0, idx - spec.p), hi + 1):
            val = t(idx, nxt)
            if val != 0:
                walk(nxt, depth + 1, prod * val)

    if cutoff is None or start <= cutoff:
        walk(start, 0, Fraction(1) if _exact_source(spec) else 1.0)
    return sums


def _exact_source(spec):
    return not isinstance(spec.raw_entry(0, 0), float)


def path_expansion_entry(spec, i, j, n, cutoff=None):
    """Brute-force ``(T^n)[i, j]`` (or of ``T^[cutoff]`` when ``cutoff`` is set)."""
    if n < 0:
        raise ContractViolation("exponent must be nonnegative")
    return path_sums(spec, i, n, cutoff)[n].get(j, 0)


@dataclass(frozen=True)
class StarterVectors:
    """Unit lower triangular initial-condition matrices ``nu`` (p x p) and ``xi`` (q x q)."""

    nu: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        for name in ("nu", "xi"):
            mat = getattr(self, name)
            if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] < 1:
                raise SpecError(f"{name} must be a nonempty square matrix")
            n = mat.shape[0]
            for i in range(n):
                if mat[i, i] != 1:
                    raise SpecError(f"{name} must have a unit diagonal")
                for j in range(i + 1, n):
                    if mat[i, j] != 0:
                        raise SpecError(f"{name} must be lower triangular")
        object.__setattr__(self, "_nu_inv", unit_lower_inverse(self.nu))
        object.__setattr__(self, "_xi_inv", unit_lower_inverse(self.xi))

    @property
    def p(self):
        return self.nu.shape[0]

    @property
    def q(self):
        return self.xi.shape[0]

    @property
    def nu_inv(self):
        return self._nu_inv

    @property
    def xi_inv(self):
        return self._xi_inv

    @classmethod
    def identity(cls, p, q, mode="rational"):
        return cls(identity(p, mode), identity(q, mode))

    @classmethod
    def from_arrays(cls, nu, xi, mode="rational"):
        return cls(as_array(nu, mode), as_array(xi, mode))

    @classmethod
    def totally_positive(cls, p, q, seed, mode="rational", low=1, high=3):
        rng = np.random.default_rng(seed)
        return cls(totally_positive_unitriangular(p, rng, mode, low, high),
                   totally_positive_unitriangular(q, rng, mode, low, high))

    def astype(self, mode):
        return StarterVectors(as_array(self.nu, mode), as_array(self.xi, mode))

    def e_nu(self, a, size):
        """Column ``nu^{-T} e_a`` padded with zeros to ``size``."""
        out = np.zeros(size, dtype=self.nu.dtype)
        if self.nu.dtype == object:
            out.fill(Fraction(0))
        col = self._nu_inv[a - 1, :]
        k = min(size, self.p)
        out[:k] = col[:k]
        return out

    def e_xi(self, b, size):
        """Row ``e_b^T xi^{-1}`` padded with zeros to ``size``."""
        out = np.zeros(size, dtype=self.xi.dtype)
        if self.xi.dtype == object:
            out.fill(Fraction(0))
        row = self._xi_inv[b - 1, :]
        k = min(size, self.q)
        out[:k] = row[:k]
        return out


def totally_positive_unitriangular(n, rng, mode="rational", low=1, high=3):
    """Unit lower triangular matrix with every nontrivial minor positive.

    Built as the Whitney product ``(E_{n-1}...E_1)(E_{n-1}...E_2)...(E_{n-1})`` of
    elementary factors ``I + t e_i e_{i-1}^T`` with positive ``t``.
    """
    mat = identity(n, mode)
    for k in range(n - 1):
        for i in range(n - 1, k, -1):
            t = Fraction(int(rng.integers(low * 4, high * 4 + 1)), 4)
            elem = identity(n, mode)
            elem[i, i - 1] = to_scalar(t, mode)
            mat = mat @ elem
    return mat


def stabilization_identity_check(spec, starters, a, b, n, N, mode="rational", tol=1e-10):
    """Compare ``u_b T^n u_a`` (path oracle) with ``e_b (T^[N])^n e_a`` (dense power)."""
    from .quadrature import degrees_of_precision

    d = degrees_of_precision(spec.p, spec.q, a, b, N)
    if n > d:
        raise ContractViolation(f"n={n} exceeds the degree of precision d_{{{b},{a}}}({N})={d}")
    starters = starters.astype(mode)
    ambient = max(a, b) + n * max(spec.p, spec.q)
    left = 0
    for i in range(b):
        coef_i = starters.xi_inv[b - 1, i]
        if coef_i == 0:
            continue
        sums = path_sums(spec, i, n, cutoff=ambient)[n]
        for j in range(a):
            left = left + coef_i * to_scalar(sums.get(j, 0), mode) * starters.nu_inv[a - 1, j]
    trunc = truncate(spec, N, 0, mode)
    right = starters.e_xi(b, N + 1) @ dense_power(trunc, n) @ starters.e_nu(a, N + 1)
    defect = abs(left - right)
    scale = max(1.0, float(abs(left)))
    return compare(defect, tol * scale, mode == "rational", left=left, right=right)
