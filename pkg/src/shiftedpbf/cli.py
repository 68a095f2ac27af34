"""Command line front end.

Every subcommand loads a spec file, runs its part of the pipeline and writes
``report.txt`` (a table) and ``report.structured`` (JSON) to ``--out`` along
with its dumps. Runs are deterministic for a fixed configuration.

Exit codes
----------
0  every enforced check passed
2  the command line, spec file or starter file could not be parsed
3  the requested shift does not give a strictly positive factorization
4  the eigensolver or another numerical stage failed
5  at least one enforced check failed
"""

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from ._checks import CheckResult, compare
from .banded import truncate
from .estimator import SHIFT_STRATEGIES, check_N, check_starters, resolve_shift
from .exceptions import (
    ContractViolation,
    OutOfRangeError,
    ShapeError,
    ShiftedPBFError,
    ShiftNotAdmissible,
    SpecError,
)
from .io import (
    default_grid,
    format_number,
    format_table,
    load_spec,
    measure_rows,
    polynomial_rows,
    step_rows,
    weight_labels,
    write_json,
    write_table,
)
from .pbf import is_pbf_admissible, leading_minors, oscillatory_check_tridiagonal
from .polynomials import (
    block_determinant_identity_check,
    build_table,
    characteristic_polynomial,
    degree_report,
    recurrence_residual,
)
from .quadrature import (
    biorthogonality_check,
    build_quadrature,
    christoffel_positivity_report,
    degrees_of_precision,
    exactness_profile,
    helly_moment_diagnostic,
    mass_identity_check,
    moment_tensor,
    recentering_check,
    spectral_representation_check,
    steplike_orthogonality_check,
    tail_bound_report,
)
from .spectral import (
    GAP_TOL,
    charpoly_agreement,
    eigenvector_agreement,
    eigenvectors_from_determinantal_formula,
    spectral_decomposition_check,
)

EXIT_OK, EXIT_PARSE, EXIT_SHIFT, EXIT_SOLVER, EXIT_VERIFY = 0, 2, 3, 4, 5
COMMANDS = ("factorize", "polys", "spectrum", "measure", "verify", "sweep")
DEFAULT_TOL = 1e-9


@dataclass
class Report:
    """Checks (enforced or informational) and free-form sections of one run."""

    command: str
    config: dict
    checks: list = field(default_factory=list)
    sections: dict = field(default_factory=dict)
    error: str = None
    exit_code: int = EXIT_OK

    def add(self, name, result, N=None, enforced=True, **extra):
        self.checks.append({
            "name": name, "N": N, "defect": result.defect, "tol": result.tol,
            "passed": bool(result.passed), "enforced": enforced,
            "detail": {**_plain(result.detail), **extra},
        })

    @property
    def passed(self):
        return all(c["passed"] for c in self.checks if c["enforced"])

    def status(self, check):
        if not check["enforced"]:
            return "info"
        return "pass" if check["passed"] else "FAIL"

    def to_dict(self):
        return {"command": self.command, "config": self.config, "checks": self.checks,
                "sections": self.sections, "passed": self.passed and self.error is None,
                "error": self.error, "exit_code": self.exit_code}

    def to_text(self):
        lines = [f"shiftedpbf {self.command}"]
        lines += [f"  {k}: {format_number(v)}" for k, v in sorted(self.config.items())]
        lines.append("")
        if self.checks:
            rows = [(c["name"], "-" if c["N"] is None else c["N"], c["defect"], c["tol"], self.status(c))
                    for c in self.checks]
            lines.append(format_table(("check", "N", "defect", "tol", "status"), rows))
        for title, (header, rows) in self.sections.items():
            lines.append(f"[{title}]")
            lines.append(format_table(header, rows))
        if self.error:
            lines.append(f"error: {self.error}")
        verdict = "PASS" if self.passed and self.error is None else "FAIL"
        lines.append(f"result: {verdict} (exit {self.exit_code})")
        return "\n".join(lines) + "\n"

    def write(self, out):
        write_json(out / "report.structured", self.to_dict())
        (out / "report.txt").write_text(self.to_text())


def _plain(detail):
    return {k: v for k, v in detail.items() if isinstance(v, (int, float, str, bool)) or v is None}


def _flag(passed, **detail):
    """Pass/fail outcome of a structural property as a check with a 0/1 defect."""
    return CheckResult(bool(passed), 0.0 if passed else 1.0, 0.0, detail)


@dataclass
class Context:
    args: argparse.Namespace
    spec: object
    out: Path
    report: Report
    dumps: dict = field(default_factory=dict)

    @property
    def mode(self):
        return self.args.mode

    @property
    def tol(self):
        return self.args.tol

    @property
    def Ns(self):
        return self.args.N_list or [self.args.N]

    def starters(self, mode=None):
        return check_starters(self.args.starters, self.spec.p, self.spec.q, self.args.seed,
                              mode or self.mode)

    def shift(self, N):
        return resolve_shift(self.spec, N, self.args.shift_strategy, self.args.shift, self.mode)

    def name(self, stem, ext, N):
        """File name for a dump; ``N=None`` marks one file for the whole run."""
        return f"{stem}{'' if N is None or len(self.Ns) == 1 else f'_N{N}'}.{ext}"

    def dump_json(self, stem, N, obj):
        self.dumps[self.name(stem, "json", N)] = ("json", obj)

    def dump_table(self, stem, N, header, rows):
        self.dumps[self.name(stem, "txt", N)] = ("table", (header, rows))

    def flush(self):
        self.out.mkdir(parents=True, exist_ok=True)
        for fname, (kind, payload) in sorted(self.dumps.items()):
            if kind == "json":
                write_json(self.out / fname, payload)
            else:
                write_table(self.out / fname, *payload)
        self.report.sections.setdefault("files", (("file",), [(f,) for f in sorted(self.dumps)]))
        self.report.write(self.out)


# Subcommands


def _factorize_one(ctx, N):
    spec = ctx.spec
    try:
        shift = ctx.shift(N)
    except ShiftNotAdmissible:
        if ctx.args.shift is not None:
            _, fac = is_pbf_admissible(spec, N, ctx.args.shift, ctx.mode)
            ctx.dump_json("factorization", N, fac.to_dict())
        raise
    trunc = truncate(spec, N, shift, ctx.mode)
    ok, fac = is_pbf_admissible(spec, N, shift, ctx.mode)
    ctx.dump_json("factorization", N, fac.to_dict())
    exact = ctx.mode == "rational"
    diff = fac.product() - trunc.entries
    defect = max((abs(v) for v in np.asarray(diff).flat), default=0)
    scale = max(1.0, float(np.abs(np.array(trunc.entries, dtype=float)).max()))
    ctx.report.add("factorization_product", compare(defect if exact else float(defect) / scale,
                                                    ctx.tol, exact), N)
    ctx.report.add("factorization_strictly_positive", _flag(ok, status=fac.status), N)
    if spec.p == 1 and spec.q == 1:
        minors = leading_minors(trunc.entries)
        ctx.report.add("leading_minors_positive", _flag(all(m > 0 for m in minors),
                                                        min_minor=float(min(minors))), N)
        ctx.report.add("oscillatory", _flag(oscillatory_check_tridiagonal(trunc.entries)), N)
    return shift, fac


def cmd_factorize(ctx):
    for N in ctx.Ns:
        _factorize_one(ctx, N)


def _polys_one(ctx, N, shift, starters):
    spec = ctx.spec
    table = build_table(spec.shifted(shift), starters, N + max(spec.p, spec.q))
    ctx.dump_table("polys", N, ("series", "index", "n", "coefficients"), polynomial_rows(table))
    exact = ctx.mode == "rational"
    ctx.report.add("recurrence_residual", compare(recurrence_residual(table), ctx.tol, exact), N)
    worst = max((block_determinant_identity_check(table, k, ctx.tol) for k in range(N + 2)),
                key=lambda r: r.defect)
    ctx.report.add("block_determinant_identity", worst, N)
    rows = degree_report(table, N)
    violations = sum(r.violated for r in rows)
    attained = sum(r.attained for r in rows)
    ctx.report.add("degree_bounds", compare(violations, 0, True), N)
    ctx.report.add("degree_attainment", compare(len(rows) - attained, 0, True), N, enforced=False,
                   attained=attained, total=len(rows))
    ctx.dump_table("degrees", N, ("series", "index", "n", "degree", "bound", "attained"),
                   [(r.series, r.index, r.n, "-inf" if r.degree < 0 else int(r.degree), r.bound,
                     r.attained) for r in rows])


def cmd_polys(ctx):
    starters = ctx.starters()
    for N in ctx.Ns:
        _polys_one(ctx, N, ctx.shift(N), starters)


def _spectral_checks(ctx, quad, n_max):
    spec, N, dec = ctx.spec, quad.N, quad.decomposition
    lambdas = [float(v) for v in dec.lambdas]
    ctx.report.add("eigenvalues_positive", compare(max(0.0, -min(lambdas)), 0, True), N,
                   min_eigenvalue=min(lambdas))
    gap = float(dec.min_gap()) if dec.size > 1 else float("inf")
    ctx.report.add("eigenvalues_simple", _flag(gap > GAP_TOL, min_gap=gap), N)
    ctx.report.add("spectral_decomposition", spectral_decomposition_check(
        dec, quad.truncation.entries, n_max, ctx.tol), N)
    table = build_table(spec.shifted(quad.shift), quad.starters, N + max(spec.p, spec.q))
    W_alt, U_alt, _ = eigenvectors_from_determinantal_formula(table, dec, N)
    ctx.report.add("determinantal_eigenvectors", eigenvector_agreement(dec, W_alt, U_alt, 1e-8), N)
    P = characteristic_polynomial(spec, N + 1, quad.shift, ctx.mode)
    ctx.report.add("characteristic_polynomial", charpoly_agreement(dec, P, 1e-8), N)


def _quadrature(ctx, N, starters):
    shift = ctx.shift(N)
    return build_quadrature(ctx.spec, starters, N, shift, ctx.mode, seed=ctx.args.seed)


def cmd_spectrum(ctx):
    starters = ctx.starters()
    for N in ctx.Ns:
        quad = _quadrature(ctx, N, starters)
        ctx.dump_json("spectrum", N, quad.decomposition.to_dict(full=ctx.args.verbose))
        _spectral_checks(ctx, quad, 5 if ctx.args.n_max is None else ctx.args.n_max)


def _grid(ctx, measure):
    if ctx.args.grid is None:
        return default_grid(measure)
    lo, hi, count = ctx.args.grid
    return np.linspace(lo, hi, int(count))


def _measure_dumps(ctx, quad, tensor):
    N, measure = quad.N, quad.measure
    p, q = ctx.spec.p, ctx.spec.q
    labels = weight_labels(p, q)
    ctx.dump_table("measure", N, ["node"] + labels, measure_rows(measure))
    ctx.dump_table("step", N, ["x"] + [s.replace("w_", "psi_") for s in labels],
                   step_rows(measure, _grid(ctx, measure)))
    rows = []
    for n in range(tensor.n_max + 1):
        for a in range(1, p + 1):
            for b in range(1, q + 1):
                got = quad.exact_measure.moment(n, b, a)
                ref = tensor(n, a, b)
                used = tensor.truncation_index[n][a - 1][b - 1]
                d = degrees_of_precision(p, q, a, b, N)
                if n > d:
                    status = "beyond_degree"
                elif quad.exact_measure.exact:
                    status = "exact" if got == ref else "mismatch"
                else:
                    scale = max(abs(float(ref)), quad.measure.abs_moment(n, b, a), 1e-300)
                    status = "ok" if abs(float(got) - float(ref)) <= ctx.tol * scale else "mismatch"
                rows.append((n, a, b, ref, used, status))
    ctx.dump_table("moments", N, ("n", "a", "b", "value", "N_used", "crosscheck_status"), rows)


def _measure_checks(ctx, quad, n_max):
    N, measure = quad.N, quad.exact_measure
    ctx.report.add("mass_identity", mass_identity_check(measure, quad.starters, min(ctx.tol, 1e-10)), N)
    report = christoffel_positivity_report(quad)
    ctx.report.add("christoffel_positivity", report, N, enforced=False)
    worst = max((recentering_check(measure, n, b, a, ctx.tol)
                 for n in range(n_max + 1) for b in range(1, ctx.spec.q + 1)
                 for a in range(1, ctx.spec.p + 1)), key=lambda r: r.defect)
    ctx.report.add("recentering", worst, N)


def _n_max(ctx, N):
    if ctx.args.n_max is not None:
        return ctx.args.n_max
    p, q = ctx.spec.p, ctx.spec.q
    return max(degrees_of_precision(p, q, a, b, N) for a in range(1, p + 1) for b in range(1, q + 1)) + 1


def cmd_measure(ctx):
    starters = ctx.starters()
    for N in ctx.Ns:
        quad = _quadrature(ctx, N, starters)
        n_max = _n_max(ctx, N)
        _measure_dumps(ctx, quad, moment_tensor(ctx.spec, starters, n_max, ctx.mode))
        _measure_checks(ctx, quad, n_max)


def _tail_checks(ctx, measures, starters):
    p, q = ctx.spec.p, ctx.spec.q
    d_min = min(degrees_of_precision(p, q, a, b, m.N) for m in measures
                for a in range(1, p + 1) for b in range(1, q + 1))
    top = min(3, (d_min - 2) // 2)
    if top < 0:
        return
    tensor = moment_tensor(ctx.spec, starters, 2 * top + 2, ctx.mode)
    rows = []
    for n in range(top + 1):
        tail = tail_bound_report(measures, n, tensor)
        rows += [(n, r.N, r.R, r.b, r.a, r.tail, r.bound, r.holds) for r in tail]
        # Excess of the tail over the bound, relative to the bound.
        excess = max(max(0.0, r.tail - r.bound) / max(r.bound, 1e-300) for r in tail)
        ctx.report.add(f"tail_bound_n{n}", compare(excess, 1e-12, False),
                       None if len(measures) > 1 else measures[0].N,
                       violations=sum(not r.holds for r in tail))
    ctx.report.sections["tail bound"] = (("n", "N", "R", "b", "a", "tail", "bound", "holds"), rows)


def cmd_verify(ctx):
    starters = ctx.starters()
    measures = []
    for N in ctx.Ns:
        shift, _ = _factorize_one(ctx, N)
        _polys_one(ctx, N, shift, starters)
        quad = build_quadrature(ctx.spec, starters, N, shift, ctx.mode, seed=ctx.args.seed)
        measures.append(quad.measure)
        n_max = _n_max(ctx, N)
        ctx.dump_json("spectrum", N, quad.decomposition.to_dict(full=ctx.args.verbose))
        _spectral_checks(ctx, quad, min(5, n_max))
        _measure_dumps(ctx, quad, moment_tensor(ctx.spec, starters, n_max, ctx.mode))
        _measure_checks(ctx, quad, n_max)
        _quadrature_checks(ctx, quad, starters, n_max)
    _tail_checks(ctx, measures, starters)


def _quadrature_checks(ctx, quad, starters, n_max):
    spec, N, mode = ctx.spec, quad.N, ctx.mode
    prof = exactness_profile(spec, starters, N, quad.shift, n_max, mode, ctx.tol, quad=quad)
    exact = quad.exact_measure.exact
    worst = 0
    rows = []
    for (b, a), prof_rows in sorted(prof.rows.items()):
        for r in prof_rows:
            if not r.within_degree:
                continue
            if exact:
                worst = max(worst, abs(r.remainder))
            else:
                scale = max(abs(r.moment), quad.measure.abs_moment(r.n, b, a), 1e-300)
                worst = max(worst, abs(r.remainder) / scale)
        first = prof.first_failure(b, a)
        rows.append((b, a, prof.degrees[(b, a)], "-" if first is None else first,
                     "-" if prof.sharp(b, a) is None else prof.sharp(b, a)))
    ctx.report.add("quadrature_exactness", compare(worst, ctx.tol, exact), N)
    sharp = [prof.sharp(b, a) for (b, a) in prof.rows]
    ctx.report.add("exactness_sharpness", _flag(all(s for s in sharp if s is not None)), N, enforced=False)
    ctx.report.sections[f"exactness N={N}"] = (("b", "a", "degree", "first_failure", "sharp"), rows)
    table = quad.table()
    measure = quad.exact_measure
    ctx.report.add("biorthogonality", biorthogonality_check(table, measure, N, ctx.tol), N)
    if N >= 1:
        ctx.report.add("steplike_orthogonality", max(
            (steplike_orthogonality_check(table, measure, m, ctx.tol) for m in range(1, N + 1)),
            key=lambda r: r.defect), N)
    d11 = degrees_of_precision(spec.p, spec.q, 1, 1, N)
    ctx.report.add("spectral_representation", spectral_representation_check(
        spec, starters, N, quad.shift, max(0, min(n_max, d11, 5)), mode, ctx.tol, quad=quad), N)


def cmd_sweep(ctx):
    starters = ctx.starters()
    Ns = sorted(ctx.Ns)
    n_max = 6 if ctx.args.n_max is None else ctx.args.n_max
    rows = helly_moment_diagnostic(ctx.spec, starters, n_max, Ns, ctx.mode,
                                   shift_fn=ctx.shift, rtol=ctx.tol)
    worst = max((r.deviation for r in rows if r.values), default=0.0)
    ctx.report.add("moment_stabilization", compare(worst, ctx.tol, ctx.mode == "rational"))
    ctx.report.sections["stabilized moments"] = (
        ["n", "b", "a", "from_N"] + [f"N={N}" for N in Ns] + ["deviation"],
        [[r.n, r.b, r.a, r.stabilized_from] + list(r.values) + [r.deviation] for r in rows])
    measures = []
    for N in Ns:
        quad = _quadrature(ctx, N, starters)
        measures.append(quad.measure)
        ctx.report.add("mass_identity", mass_identity_check(quad.exact_measure, starters,
                                                            min(ctx.tol, 1e-10)), N)
        ctx.report.add("christoffel_positivity", christoffel_positivity_report(quad), N, enforced=False)
    tensor = moment_tensor(ctx.spec, starters, n_max, ctx.mode)
    ctx.dump_table("moments", None, ("n", "a", "b", "value", "N_used", "crosscheck_status"),
                   [(r.n, r.a, r.b, tensor(r.n, r.a, r.b), tensor.truncation_index[r.n][r.a - 1][r.b - 1],
                     "stable" if r.holds else "unstable") for r in rows])
    _tail_checks(ctx, measures, starters)


HANDLERS = {"factorize": cmd_factorize, "polys": cmd_polys, "spectrum": cmd_spectrum,
            "measure": cmd_measure, "verify": cmd_verify, "sweep": cmd_sweep}


# Argument parsing


def _N_list(text):
    try:
        values = [int(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("N list must be nonempty")
    return values


def _shift_value(text):
    from fractions import Fraction
    try:
        value = Fraction(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if value < 0:
        raise argparse.ArgumentTypeError("shift must be nonnegative")
    return value


def _grid_spec(text):
    parts = text.split(":")
    try:
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except (IndexError, ValueError):
        raise argparse.ArgumentTypeError("grid must look like LO:HI:COUNT")
    if count < 1 or hi < lo:
        raise argparse.ArgumentTypeError("grid needs LO <= HI and COUNT >= 1")
    return lo, hi, count


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", required=True, help="operator spec file (JSON)")
    sizes = common.add_mutually_exclusive_group()
    sizes.add_argument("--N", type=int, default=10, help="truncation index (default 10)")
    sizes.add_argument("--N-list", type=_N_list, help="comma-separated truncation indices")
    common.add_argument("--shift", type=_shift_value,
                        help="explicit shift; implies --shift-strategy explicit")
    common.add_argument("--shift-strategy", choices=SHIFT_STRATEGIES, default="theorem_norm",
                        help="theorem_norm: ||T^[N]||_inf + 1; bisect: smallest admissible found")
    common.add_argument("--starters", default="identity",
                        help="identity, tp (seeded totally positive) or a JSON file with nu and xi")
    common.add_argument("--mode", choices=("float", "rational"), default="float")
    common.add_argument("--n-max", type=int, help="highest moment order")
    common.add_argument("--out", default="out", help="output directory (default ./out)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=DEFAULT_TOL,
                        help="float tolerance (default 1e-9); rational mode demands exact zeros")
    common.add_argument("--grid", type=_grid_spec, help="step-function grid LO:HI:COUNT")
    common.add_argument("-v", "--verbose", action="store_true",
                        help="include full eigenvector matrices in the spectrum dump")
    parser = argparse.ArgumentParser(
        prog="shiftedpbf", description="Shifted positive bidiagonal factorization pipeline.",
        epilog="exit codes: 0 success, 2 parse error, 3 inadmissible shift, "
               "4 solver failure, 5 verification failure",
        formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {"factorize": "factor the shifted truncation into bidiagonal factors",
             "polys": "recursion polynomial tables, determinant identity and degree bounds",
             "spectrum": "eigen-decomposition with determinantal and charpoly cross-checks",
             "measure": "Christoffel numbers, discrete measure, step functions and moments",
             "verify": "full pipeline with every quadrature check",
             "sweep": "moment stabilization and tail bounds across --N-list"}
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def _config(args):
    return {"spec": args.spec, "N": args.N_list if args.N_list else args.N,
            "shift": "-" if args.shift is None else args.shift,
            "shift_strategy": "explicit" if args.shift is not None else args.shift_strategy,
            "starters": args.starters, "mode": args.mode,
            "n_max": "-" if args.n_max is None else args.n_max, "seed": args.seed, "tol": args.tol}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.n_max is not None and args.n_max < 0:
        parser.error("--n-max must be nonnegative")
    out = Path(args.out)
    report = Report(args.command, _config(args))
    ctx = None
    try:
        ctx = Context(args, load_spec(args.spec), out, report)
        for N in ctx.Ns:
            check_N(N, ctx.spec)
        HANDLERS[args.command](ctx)
        code = EXIT_OK if report.passed else EXIT_VERIFY
    except (SpecError, ContractViolation, OutOfRangeError, ShapeError) as exc:
        code, report.error = EXIT_PARSE, f"{type(exc).__name__}: {exc}"
    except ShiftNotAdmissible as exc:
        code, report.error = EXIT_SHIFT, f"shift not admissible: {exc}"
    except (ShiftedPBFError, ArithmeticError, np.linalg.LinAlgError) as exc:
        code, report.error = EXIT_SOLVER, f"{type(exc).__name__}: {exc}"
    report.exit_code = code
    if ctx is None:
        out.mkdir(parents=True, exist_ok=True)
        report.write(out)
    else:
        ctx.flush()
    sys.stdout.write(report.to_text())
    if report.error:
        sys.stderr.write(f"shiftedpbf: {report.error}\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
