"""Scikit-learn style front end and the argument validators shared with the CLI."""

from numbers import Real

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._arith import MODES, to_scalar
from .banded import BandedOperatorSpec, StarterVectors
from .exceptions import ContractViolation, ShiftNotAdmissible, SpecError
from .pbf import is_pbf_admissible, minimal_admissible_shift
from .quadrature import (
    biorthogonality_check,
    build_quadrature,
    mass_identity_check,
    moment_tensor,
    steplike_orthogonality_check,
)

SHIFT_STRATEGIES = ("theorem_norm", "bisect", "explicit")


def check_spec(spec):
    """Accept a spec object, a parsed mapping or a path to a spec file."""
    if isinstance(spec, BandedOperatorSpec):
        return spec
    from .io import load_spec, spec_from_dict
    if isinstance(spec, dict):
        return spec_from_dict(spec)
    if isinstance(spec, str) or hasattr(spec, "__fspath__"):
        return load_spec(spec)
    raise SpecError(f"cannot interpret {type(spec).__name__} as an operator spec")


def check_N(N, spec=None):
    if isinstance(N, bool) or not isinstance(N, (int, np.integer)) or N < 0:
        raise ContractViolation(f"N must be a nonnegative integer, got {N!r}")
    if spec is not None:
        if N + 1 < max(spec.p, spec.q):
            raise ContractViolation(f"N={N} is too small for the band ({spec.p}, {spec.q})")
        if spec.max_index is not None and N > spec.max_index:
            raise ContractViolation(f"N={N} exceeds max_index {spec.max_index}")
    return int(N)


def check_mode(mode):
    if mode not in MODES:
        raise ContractViolation(f"mode must be one of {MODES}, got {mode!r}")
    return mode


def check_starters(starters, p, q, seed=0, mode="rational"):
    """Starter matrices from an instance, ``"identity"``, ``"tp"`` or a file path."""
    if isinstance(starters, StarterVectors):
        if starters.p != p or starters.q != q:
            raise SpecError(f"starters are {starters.p}x{starters.q}, the band needs {p}x{q}")
        return starters.astype(mode)
    from .io import load_starters
    return load_starters(starters, p, q, seed, mode)


def resolve_shift(spec, N, strategy="theorem_norm", value=None, mode="float"):
    """Shift for the truncation at ``N``.

    ``explicit`` uses ``value`` as given and raises :class:`ShiftNotAdmissible`
    when the shifted truncation has no strictly positive factorization.
    """
    if value is not None and strategy != "explicit":
        strategy = "explicit"
    if strategy not in SHIFT_STRATEGIES:
        raise ContractViolation(f"shift strategy must be one of {SHIFT_STRATEGIES}, got {strategy!r}")
    if strategy == "explicit":
        if value is None:
            raise ContractViolation("the explicit strategy needs a shift value")
        if not isinstance(value, (Real, str)) or to_scalar(value, "rational") < 0:
            raise ContractViolation(f"explicit shift must be a nonnegative number, got {value!r}")
        shift = to_scalar(value, mode)
        ok, fac = is_pbf_admissible(spec, N, shift, mode)
        if not ok:
            raise ShiftNotAdmissible(f"shift {value} is not admissible at N={N}: {fac.reason}")
        return shift
    return minimal_admissible_shift(spec, N, strategy, mode=mode)


class ShiftedPBFQuadrature(BaseEstimator, TransformerMixin):
    """Discrete matrix measure of a shifted banded truncation.

    ``fit`` takes an operator spec (object, mapping or path) and builds the
    quadrature of ``T^[N] + s I``. ``transform`` evaluates the recentered
    step functions ``psi_{b,a}`` at the given points, one column per
    ``(b, a)`` in row-major order.

    Parameters
    ----------
    N : int
        Truncation index; the matrix has size ``N + 1``.
    shift : number, optional
        Explicit shift. Overrides ``shift_strategy``.
    shift_strategy : {"theorem_norm", "bisect", "explicit"}
    starters : {"identity", "tp"}, path or StarterVectors
    seed : int
        Seed for the totally positive starters and the eigensolver start.
    mode : {"float", "rational"}
    tol : float
        Tolerance of the float checks in :meth:`verify`.
    """

    def __init__(self, N=10, shift=None, shift_strategy="theorem_norm", starters="identity",
                 seed=0, mode="float", tol=1e-9):
        self.N = N
        self.shift = shift
        self.shift_strategy = shift_strategy
        self.starters = starters
        self.seed = seed
        self.mode = mode
        self.tol = tol

    def fit(self, X, y=None):
        spec = check_spec(X)
        N = check_N(self.N, spec)
        mode = check_mode(self.mode)
        starters = check_starters(self.starters, spec.p, spec.q, self.seed, mode)
        shift = resolve_shift(spec, N, self.shift_strategy, self.shift, mode)
        self.spec_ = spec
        self.starters_ = starters
        self.shift_ = shift
        self.quadrature_ = build_quadrature(spec, starters, N, shift, mode, seed=self.seed)
        self.nodes_ = self.quadrature_.measure.nodes
        self.weights_ = self.quadrature_.measure.weights
        self.n_features_in_ = 1
        return self

    def transform(self, X):
        check_is_fitted(self, "quadrature_")
        X = check_array(X, ensure_2d=False, dtype=float)
        x = X.ravel() if X.ndim == 1 or X.shape[1] == 1 else None
        if x is None:
            raise ValueError(f"expected a single column of points, got shape {X.shape}")
        vals = self.quadrature_.measure.step(x)
        return vals.reshape(len(x), -1)

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "quadrature_")
        from .io import weight_labels
        return np.array([s.replace("w_", "psi_") for s in weight_labels(self.spec_.p, self.spec_.q)],
                        dtype=object)

    def moments(self, n_max):
        """Recentered quadrature moments ``[n][b-1][a-1]`` for ``n <= n_max``."""
        check_is_fitted(self, "quadrature_")
        measure = self.quadrature_.exact_measure
        p, q = self.spec_.p, self.spec_.q
        return [[[measure.moment(n, b, a) for a in range(1, p + 1)] for b in range(1, q + 1)]
                for n in range(n_max + 1)]

    def stabilized_moments(self, n_max):
        check_is_fitted(self, "quadrature_")
        return moment_tensor(self.spec_, self.starters_, n_max, self.mode)

    def verify(self):
        """Mass identity, biorthogonality and steplike orthogonality at this truncation."""
        check_is_fitted(self, "quadrature_")
        quad = self.quadrature_
        measure = quad.exact_measure
        table = quad.table()
        out = {"mass_identity": mass_identity_check(measure, self.starters_, min(self.tol, 1e-10)),
               "biorthogonality": biorthogonality_check(table, measure, quad.N, self.tol)}
        if quad.N >= 1:
            out["steplike_orthogonality"] = max(
                (steplike_orthogonality_check(table, measure, m, self.tol) for m in range(1, quad.N + 1)),
                key=lambda r: r.defect)
        return out
