"""Reading spec and starter files, writing dumps and reports.

Spec files are JSON. Decimal literals are read as exact fractions (``0.1``
becomes ``1/10``) and strings such as ``"1/3"`` are accepted wherever a
number is expected, so the same file drives both arithmetic modes.
"""

import json
from fractions import Fraction
from pathlib import Path

import mpmath
import numpy as np

from .banded import FAMILIES, BandedOperatorSpec, StarterVectors
from .exceptions import SpecError
from .pbf import synthesize_pbf_operator

SPEC_FIELDS = ("p", "q", "diagonals", "family", "params", "max_index")
STARTER_SOURCES = ("identity", "tp")


def _read_json(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SpecError(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text, parse_float=Fraction)
    except (json.JSONDecodeError, ValueError) as exc:
        raise SpecError(f"{path} is not valid JSON: {exc}") from exc


def spec_from_dict(data):
    """Build a :class:`BandedOperatorSpec` from parsed file contents.

    The ``random_pbf`` family is materialized immediately from its ``seed``,
    ``entry_range`` and ``size`` parameters.
    """
    if not isinstance(data, dict):
        raise SpecError("a spec must be a mapping")
    unknown = sorted(set(data) - set(SPEC_FIELDS))
    if unknown:
        raise SpecError(f"unknown spec fields {unknown}; allowed: {list(SPEC_FIELDS)}")
    for key in ("p", "q"):
        if key not in data:
            raise SpecError(f"missing required field {key!r}")
    p, q = data["p"], data["q"]
    max_index = data.get("max_index")
    if max_index is not None and (isinstance(max_index, bool) or not isinstance(max_index, int)):
        raise SpecError("max_index must be an integer")
    params = data.get("params") or {}
    if not isinstance(params, dict):
        raise SpecError("params must be a mapping")
    family = data.get("family")
    if isinstance(family, dict):
        # Accept the nested form {"name": ..., "params": {...}} as well.
        params = {**family.get("params", {}), **params}
        family = family.get("name")
    if family == "random_pbf":
        if "diagonals" in data:
            raise SpecError("exactly one of 'diagonals' or 'family' must be given")
        low, high = params.get("entry_range", (1, 3))
        size = params.get("size", 40 if max_index is None else max_index)
        spec = synthesize_pbf_operator(p, q, rng_seed=int(params.get("seed", 0)),
                                       entry_range=(Fraction(low), Fraction(high)), size=int(size))
        if max_index is not None and max_index < spec.max_index:
            spec = BandedOperatorSpec(p, q, diagonals=spec.diagonals, params=spec.params,
                                      max_index=max_index)
        return spec
    if family is not None and family not in FAMILIES:
        raise SpecError(f"unknown family {family!r}; expected one of {FAMILIES}")
    diagonals = data.get("diagonals")
    if diagonals is not None and not isinstance(diagonals, dict):
        raise SpecError("diagonals must map offset strings to arrays")
    try:
        return BandedOperatorSpec(p, q, diagonals=diagonals, family=family,
                                  params=params, max_index=max_index)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, SpecError):
            raise
        raise SpecError(str(exc)) from exc


def load_spec(path):
    return spec_from_dict(_read_json(path))


def load_starters(source, p, q, seed=0, mode="rational"):
    """Starter matrices from ``"identity"``, ``"tp"`` (seeded) or a JSON file with ``nu`` and ``xi``."""
    if source in (None, "identity"):
        return StarterVectors.identity(p, q, mode)
    if source == "tp":
        return StarterVectors.totally_positive(p, q, seed, mode)
    data = _read_json(source)
    if not isinstance(data, dict) or "nu" not in data or "xi" not in data:
        raise SpecError("a starter file must contain 'nu' and 'xi'")
    try:
        starters = StarterVectors.from_arrays(data["nu"], data["xi"], mode)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, SpecError):
            raise
        raise SpecError(f"bad starter matrices: {exc}") from exc
    if starters.p != p or starters.q != q:
        raise SpecError(f"starters are {starters.p}x{starters.q}, the band needs {p}x{q}")
    return starters


def jsonable(obj):
    """Recursively convert numbers and arrays into JSON-ready values.

    Exact fractions become ``"a/b"`` strings (integers stay integers) so that
    rational results round-trip; floats and multiprecision values become floats.
    """
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, Fraction):
        return obj.numerator if obj.denominator == 1 else str(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating, mpmath.mpf)):
        value = float(obj)
        return value if np.isfinite(value) else str(value)
    return obj


def write_json(path, obj):
    Path(path).write_text(json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n")


def format_number(value):
    if isinstance(value, Fraction):
        return str(value.numerator) if value.denominator == 1 else str(value)
    if isinstance(value, (float, np.floating, mpmath.mpf)):
        return repr(float(value))
    return str(value)


def format_table(header, rows):
    """Left-aligned whitespace table, one line per row."""
    cells = [list(map(str, header))] + [[format_number(v) for v in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in cells]
    return "\n".join(lines) + "\n"


def write_table(path, header, rows):
    Path(path).write_text(format_table(header, rows))


def factorization_record(fac):
    return fac.to_dict()


def polynomial_rows(table, up_to_n=None):
    """Rows ``(series, index, n, c_0 c_1 ...)`` with ascending coefficients."""
    from .polynomials import table_rows
    return [(s, i, n, " ".join(format_number(c) for c in coeffs) or "0")
            for s, i, n, coeffs in table_rows(table, up_to_n)]


def weight_labels(p, q):
    return [f"w_{b},{a}" for b in range(1, q + 1) for a in range(1, p + 1)]


def measure_rows(measure, recentered=True):
    """Rows ``(node, w_{1,1}, ..., w_{q,p})``; nodes in ascending order."""
    nodes = measure.points(recentered)
    order = np.argsort(nodes, kind="stable")
    return [[nodes[k]] + [measure.weights[k, b, a] for b in range(measure.q) for a in range(measure.p)]
            for k in order]


def step_rows(measure, grid):
    vals = measure.step(np.asarray(grid, dtype=float))
    return [[x] + [vals[i, b, a] for b in range(measure.q) for a in range(measure.p)]
            for i, x in enumerate(grid)]


def default_grid(measure, points=41):
    """Evenly spaced grid covering the recentered nodes with a small margin."""
    lo, hi = float(np.min(measure.nodes)), float(np.max(measure.nodes))
    pad = 0.05 * max(hi - lo, 1.0)
    return np.linspace(lo - pad, hi + pad, points)
