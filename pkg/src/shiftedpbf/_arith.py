"""Dual-mode scalar helpers.

``"rational"`` arrays are numpy object arrays of :class:`fractions.Fraction`;
``"float"`` arrays are plain float64. Kernels written against these helpers
run unchanged in both modes because numpy dispatches object-array arithmetic
to the Python operators.
"""

from fractions import Fraction
from numbers import Rational

import mpmath
import numpy as np

MODES = ("rational", "float")


def check_mode(mode):
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    return mode


def to_scalar(value, mode):
    """Convert a number (or a ``"a/b"`` string) to the scalar type of ``mode``."""
    if isinstance(value, str):
        value = Fraction(value)
    if mode == "rational":
        if isinstance(value, Rational):
            return Fraction(value)
        if isinstance(value, float) and not np.isfinite(value):
            raise ValueError(f"non-finite entry {value!r}")
        return Fraction(float(value))
    out = float(value)
    if not np.isfinite(out):
        raise ValueError(f"non-finite entry {value!r}")
    return out


def as_array(values, mode):
    arr = np.asarray(values, dtype=object)
    if mode == "rational":
        out = np.empty(arr.shape, dtype=object)
        for idx, v in np.ndenumerate(arr):
            out[idx] = to_scalar(v, "rational")
        return out
    out = np.empty(arr.shape, dtype=float)
    for idx, v in np.ndenumerate(arr):
        out[idx] = to_scalar(v, "float")
    return out


def mode_of(arr):
    return "rational" if np.asarray(arr).dtype == object else "float"


def zeros(shape, mode):
    if mode == "rational":
        out = np.empty(shape, dtype=object)
        out.fill(Fraction(0))
        return out
    return np.zeros(shape)


def identity(n, mode):
    out = zeros((n, n), mode)
    for i in range(n):
        out[i, i] = Fraction(1) if mode == "rational" else 1.0
    return out


def unit_lower_inverse(mat):
    """Inverse of a unit lower triangular matrix by forward substitution."""
    n = mat.shape[0]
    mode = mode_of(mat)
    inv = identity(n, mode)
    for j in range(n):
        for i in range(j + 1, n):
            acc = mat[i, j] * inv[j, j]
            for k in range(j + 1, i):
                acc = acc + mat[i, k] * inv[k, j]
            inv[i, j] = -acc
    return inv


def inf_norm(mat):
    mat = np.asarray(mat)
    if mat.size == 0:
        return 0
    return max(sum(abs(v) for v in row) for row in mat)


def to_mpf(value):
    """Exact-as-possible conversion to an mpmath float at the working precision."""
    if isinstance(value, mpmath.mpf):
        return +value
    if isinstance(value, str):
        value = Fraction(value)
    if isinstance(value, Rational):
        value = Fraction(value)
        return mpmath.mpf(value.numerator) / value.denominator
    return mpmath.mpf(float(value))


def as_mpf_array(values):
    arr = np.asarray(values, dtype=object)
    out = np.empty(arr.shape, dtype=object)
    for idx, v in np.ndenumerate(arr):
        out[idx] = to_mpf(v)
    return out


def is_mpf_array(arr):
    arr = np.asarray(arr)
    return arr.dtype == object and arr.size > 0 and isinstance(arr.flat[0], mpmath.mpf)
