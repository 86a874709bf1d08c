"""Command-line front end: ``oukernels {eval,verify,bounds,table}``.

Every invocation prints one record (JSON by default, CSV on request).
Exit codes: 0 pass, 1 check failure, 2 usage or domain error,
3 parameters outside the hypotheses of the bound.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import sys
from fractions import Fraction
from typing import Any, Callable, Sequence

import numpy as np

from . import bounds, combinatorics, hermite, kernels, operator, weyl

SCHEMA_VERSION = "1"

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_HYPOTHESIS = 3


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# output


def _clean(v: Any) -> Any:
    """Plain JSON types; floats keep their shortest round-trip repr."""
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    return v


def make_record(command: str, params: dict, rows: list[dict], status: str) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "params": params,
        "rows": rows,
        "status": status,
    }


def _flatten(row: dict) -> dict:
    out = {}
    for section in ("inputs", "values", "residuals"):
        for k, v in row.get(section, {}).items():
            out[k] = v
    return out


def _csv_cell(v: Any) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, list):
        return ";".join(_csv_cell(x) for x in v)
    if isinstance(v, dict):
        return json.dumps(v, sort_keys=True)
    return str(v)


def render(record: dict, fmt: str) -> str:
    record = _clean(record)
    if fmt == "json":
        return json.dumps(record, indent=2) + "\n"
    rows = [_flatten(r) for r in record["rows"]]
    header: list[str] = []
    for r in rows:
        header.extend(k for k in r if k not in header)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for r in rows:
        writer.writerow([_csv_cell(r.get(k, "")) for k in header])
    return buf.getvalue()


def _row(inputs: dict, values: dict | None = None, residuals: dict | None = None) -> dict:
    return {"inputs": inputs, "values": values or {}, "residuals": residuals or {}}


# ---------------------------------------------------------------------------
# parsing helpers


def _floats(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if any(not math.isfinite(v) for v in vals):
        raise argparse.ArgumentTypeError("values must be finite")
    return vals


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _pair(text: str) -> tuple[float, float]:
    vals = _floats(text)
    if len(vals) != 2:
        raise argparse.ArgumentTypeError(f"expected lo,hi, got {text!r}")
    return vals[0], vals[1]


def _point(vals: list[float], dim: int, name: str) -> tuple[float, ...]:
    if len(vals) != dim:
        raise UsageError(f"--{name} has {len(vals)} coordinates but --dim is {dim}")
    return tuple(vals)


def _params(args: argparse.Namespace) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("func", "command")}


# ---------------------------------------------------------------------------
# eval


ORACLE_TOL = {"spectral": 1e-9, "fd": 1e-5}


def _oracle_value(name: str, q: kernels.KernelQuery) -> float:
    if name == "spectral":
        return kernels.mtn_spectral(q, kernels.OracleControls(dps=30))
    return kernels.mtn_finite_difference(q)


def cmd_eval(args: argparse.Namespace) -> tuple[dict, int]:
    x = _point(args.x, args.dim, "x")
    y = _point(args.y, args.dim, "y")
    q = kernels.KernelQuery(args.t, args.N, x, y)
    value = kernels.mtn_closed(q)
    values = {"value": value}
    residuals = {}
    status = "info"
    if args.oracle:
        ref = _oracle_value(args.oracle, q)
        dev = float(kernels.relative_deviation(value, ref))
        tol = args.tol if args.tol is not None else ORACLE_TOL[args.oracle]
        values["oracle"] = ref
        residuals = {"deviation": dev, "tol": tol}
        status = "pass" if dev <= tol else "fail"
    row = _row({"t": q.t, "N": q.N, "x": list(x), "y": list(y)}, values, residuals)
    return make_record("eval", _params(args), [row], status), EXIT_FAIL if status == "fail" else EXIT_PASS


# ---------------------------------------------------------------------------
# verify


class Check:
    """One named check; ``exact`` checks report 0/1 mismatches and ignore --tol."""

    def __init__(self, name: str, fn: Callable[[], float], tol: float, exact: bool = False, fixed_tol: bool = False):
        self.name = name
        self.fn = fn
        self.tol = tol
        self.exact = exact
        self.fixed_tol = fixed_tol

    def run(self, tol_override: float | None) -> dict:
        tol = self.tol
        if tol_override is not None and not (self.exact or self.fixed_tol):
            tol = tol_override
        residual = float(self.fn())
        ok = residual == 0 if self.exact else residual <= tol
        return _row({"check": self.name}, {"pass": ok}, {"residual": residual, "tol": 0.0 if self.exact else tol})


def _exact(flag: bool) -> float:
    return 0.0 if flag else 1.0


def _stirling_checks() -> list[Check]:
    def partitions():
        bad = 0
        for N in range(11):
            bad += combinatorics.partition_counts(N) != list(combinatorics.stirling_table(N).row(N))
        return bad

    def compositions():
        bad = 0
        for N in range(9):
            for d in range(1, 5):
                comps = list(combinatorics.compositions(N, d))
                ok = len(set(comps)) == len(comps) == math.comb(N + d - 1, d - 1)
                bad += not (ok and all(c.order == N for c in comps))
        return bad

    return [
        Check("partition counts equal S(N, n), N <= 10", partitions, 0, exact=True),
        Check("j^N = sum S(N, n) (j)_n, N, j <= 20",
              lambda: _exact(combinatorics.check_stirling_generating(20, 20)), 0, exact=True),
        Check("recursion with factor n matches explicit formula, N <= 30",
              lambda: _exact(combinatorics.check_stirling_recursion(30)), 0, exact=True),
        Check("compositions count C(N+d-1, d-1), N <= 8, d <= 4", compositions, 0, exact=True),
    ]


def _weyl_checks() -> list[Check]:
    def identities(name):
        def fn():
            bad = 0
            for m in range(1, 11):
                for p in weyl.DEFAULT_TEST_POLYS:
                    bad += not weyl.commutation_identities(m, p)[name]
            return bad
        return fn

    names = list(weyl.commutation_identities(1, (1,)))

    def homogeneity():
        bad = 0
        for a in range(4):
            for b in range(4):
                for n in range(4):
                    bad += weyl.homogeneity_breaks(a, b, n) != (a != b)
        return bad

    def polynomial_model():
        bad = 0
        for N in range(7):
            for j in range(7):
                got = weyl.act_on_polynomial(weyl.power(weyl.D, N), {j: 1})
                bad += got != weyl.euler_power_on_monomial(N, j)
        return bad

    def constant_terms():
        bad = 0
        for N in range(13):
            for j in range(13):
                bad += weyl.constant_term_map(weyl.stirling_expansion(N), j) != j**N
        return bad

    checks = [
        Check("(xy)^m = sum S(m, i) x^i y^i, m <= 12",
              lambda: _exact(weyl.normal_order_xy_power_check(12)), 0, exact=True),
    ]
    checks += [Check(f"{n}, m <= 10", identities(n), 0, exact=True) for n in names]
    checks += [
        Check("x^a y^b preserves homogeneity iff a = b", homogeneity, 0, exact=True),
        Check("(xy)^N acts as (t d/dt)^N on t^j", polynomial_model, 0, exact=True),
        Check("constant terms give j^N = sum S(N, i) (j)_i", constant_terms, 0, exact=True),
    ]
    return checks


def _hermite_checks() -> list[Check]:
    xs = np.linspace(-3, 3, 25)

    def generating():
        return max(hermite.check_generating_function(x, t, 80) for x in xs for t in np.linspace(-1, 1, 21))

    def binomial():
        grid = np.linspace(-3, 3, 7)
        return max(hermite.check_binomial_identity(n, x, y) for n in range(31) for x in grid for y in grid)

    def integral():
        rule = hermite.gauss_hermite_rule(100)
        return max(hermite.check_integral_representation(n, x, rule) for n in range(21) for x in np.linspace(-2, 2, 17))

    def derivative():
        return max(
            hermite.check_generating_derivative(N, x, t)
            for N in range(1, 5) for x in np.linspace(-2, 2, 9) for t in np.linspace(-1, 1, 9)
        )

    def coefficients():
        bad = 0
        for n in range(16):
            c = hermite.recurrence_coefficients(n)
            bad += c != hermite.rodrigues_coefficients(n)
            bad += hermite.ou_generator_coefficients(c) != [Fraction(-n * v) for v in c]
        return bad

    return [
        Check("generating function, |x| <= 3, |t| <= 1, 80 terms", generating, 1e-10),
        Check("binomial identity, n <= 30", binomial, 1e-10),
        Check("integral representation, n <= 20, |x| <= 2", integral, 1e-8),
        Check("orthonormality, m, n <= 20",
              lambda: hermite.check_orthonormality(20, hermite.gauss_hermite_rule(40)), 1e-11),
        Check("t-derivatives of the generating function, N <= 4", derivative, 1e-5, fixed_tol=True),
        Check("recurrence = Rodrigues and L H_n = -n H_n, n <= 15", coefficients, 0, exact=True),
    ]


def _kernel_checks() -> list[Check]:
    state: dict = {}

    def grid():
        if not state:
            state["s"] = kernels.oracle_agreement_grid(dims=(1, 2))
        return state["s"]

    def factorized():
        worst = 0.0
        for d in (1, 2, 3):
            rng = np.random.default_rng(d)
            x = rng.uniform(-3, 3, (200, d))
            y = rng.uniform(-3, 3, (200, d))
            for t in (0.1, 1.0):
                for N in range(5):
                    a = kernels.mtn_closed_array(t, N, x, y)
                    b = kernels.mtn_closed_factorized_array(t, N, x, y)
                    # cancellation below the Mehler scale is not an assembly error
                    scale = np.maximum(np.maximum(np.abs(b), kernels.mehler_array(t, x, y)), 1e-280)
                    worst = max(worst, float(np.max(np.abs(a - b) / scale)))
        return worst

    return [
        Check("closed form vs spectral series, d <= 2, N <= 4", lambda: grid().worst_spectral, 1e-9),
        Check("closed form vs finite differences, d <= 2, N <= 4", lambda: grid().worst_fd, 1e-5, fixed_tol=True),
        Check("joint vs per-coordinate assembly, scaled by the Mehler kernel", factorized, 1e-12),
    ]


def _operator_checks() -> list[Check]:
    rule = hermite.gauss_hermite_rule(30)

    def eigen():
        worst = 0.0
        pts1 = [(-1.5,), (0.0,), (0.7,)]
        pts2 = [(-1.0, 0.5), (0.3, 1.2)]
        for d, pts in ((1, pts1), (2, pts2)):
            for k in range(5):
                for alpha in combinatorics.compositions(k, d):
                    for N in range(4):
                        worst = max(worst, operator.eigenfunction_check(alpha, 0.5, N, pts, rule))
        return worst

    def composition():
        worst = 0.0
        big = hermite.gauss_hermite_rule(80)
        for N in range(4):
            for M in range(4 - N):
                lhs, rhs = operator.semigroup_composition(0.4, N, 0.7, M, [0.3], [-0.8], big)
                worst = max(worst, abs(lhs - rhs) / max(1.0, abs(rhs)))
        return worst

    return [
        Check("eigenfunction action, |alpha| <= 4, N <= 3, d <= 2", eigen, 1e-8),
        Check("semigroup composition, N + M <= 3", composition, 1e-7),
        Check("e^{tL} 1 = 1",
              lambda: abs(operator.apply_semigroup_derivative(operator.constant_function(1.0, 1), 0.3, 0, [0.4], rule) - 1),
              1e-12),
    ]


SUITES: dict[str, Callable[[], list[Check]]] = {
    "stirling": _stirling_checks,
    "weyl": _weyl_checks,
    "hermite": _hermite_checks,
    "kernels": _kernel_checks,
    "operator": _operator_checks,
}


def cmd_verify(args: argparse.Namespace) -> tuple[dict, int]:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    rows = []
    for name in names:
        for check in SUITES[name]():
            row = check.run(args.tol)
            row["inputs"] = {"suite": name, **row["inputs"]}
            rows.append(row)
    ok = all(r["values"]["pass"] for r in rows)
    return make_record("verify", _params(args), rows, "pass" if ok else "fail"), EXIT_PASS if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# bounds


def _bounds_calderon(args) -> tuple[dict, int]:
    if args.N is None or args.alpha is None:
        raise UsageError("--calderon needs --N and --alpha")
    res = bounds.calderon_constant(args.N, args.alpha, args.n_list)
    rows = []
    for n, value in zip(args.n_list, res.integrals):
        rows.append(_row(
            {"n": n},
            {"integral": value, "closed_form": res.closed_form, "constant": 1.0 / value},
            {
                "spread": abs(value - res.integrals[0]) / res.closed_form,
                "relative_error": abs(value - res.closed_form) / res.closed_form,
            },
        ))
    ok = res.deviation / res.closed_form < args.tol and res.relative_error < args.tol
    return make_record("bounds", _params(args), rows, "pass" if ok else "fail"), EXIT_PASS if ok else EXIT_FAIL


def _bounds_slacks(args) -> tuple[dict, int]:
    if args.alpha is None or args.t is None or args.x is None or args.y is None:
        raise UsageError("--slacks needs --alpha, --t, --x and --y")
    x = _point(args.x, args.dim, "x")
    y = _point(args.y, args.dim, "y")
    s1, s2 = bounds.lemma62_check(args.alpha, args.t, x, y)
    ok = s1 >= -1e-12 and s2 >= -1e-12
    row = _row({"alpha": args.alpha, "t": args.t, "x": list(x), "y": list(y)},
               {"exponent_slack": s1, "ratio_slack": s2, "pass": ok})
    return make_record("bounds", _params(args), [row], "pass" if ok else "fail"), EXIT_PASS if ok else EXIT_FAIL


def _report_row(report: bounds.BoundReport, grid: str) -> dict:
    t, x, y = report.argmax
    return _row(
        {"kernel": report.kernel, "grid": grid},
        {
            "max_ratio": report.max_ratio,
            "argmax": {"t": t, "x": list(x), "y": list(y)},
            "samples": report.samples,
            "violations": report.violations,
            "skipped": report.skipped,
        },
    )


def cmd_bounds(args: argparse.Namespace) -> tuple[dict, int]:
    if args.calderon:
        return _bounds_calderon(args)
    if args.slacks:
        return _bounds_slacks(args)
    if args.N is None or args.alpha is None:
        raise UsageError("a sweep needs --N and --alpha")
    spec = bounds.BoundSweepSpec(
        N=args.N, alpha=args.alpha, C=args.C, T=args.T,
        t_range=args.t_range, t_steps=args.t_steps,
        x_range=args.x_range, x_steps=args.x_steps,
        y_range=args.y_range, y_steps=args.y_steps,
        d=args.dim, j=args.j, constant=args.constant,
    )
    report = bounds.theorem63_sweep(spec, args.kernel)
    rows = [_report_row(report, "base")]
    ok = report.violations == 0
    if args.refine:
        fine = bounds.theorem63_sweep(spec.refined(2), args.kernel)
        row = _report_row(fine, "refined")
        change = abs(fine.max_ratio / report.max_ratio - 1) if report.max_ratio else math.inf
        row["residuals"] = {"relative_change": change}
        rows.append(row)
        ok = ok and fine.violations == 0 and change < 0.05
    return make_record("bounds", _params(args), rows, "pass" if ok else "fail"), EXIT_PASS if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# table


def cmd_table(args: argparse.Namespace) -> tuple[dict, int]:
    if not (args.t and args.N and args.x and args.y):
        raise UsageError("empty grid: --t, --N, --x and --y each need at least one value")
    d = args.dim
    xs = list(itertools.product(args.x, repeat=d))
    ys = list(itertools.product(args.y, repeat=d))
    rows = []
    ok = True
    tol = args.tol if args.tol is not None else ORACLE_TOL.get(args.oracle or "", 0.0)
    for t in args.t:
        for N in args.N:
            for x in xs:
                for y in ys:
                    q = kernels.KernelQuery(t, N, x, y)
                    inputs = {"t": q.t, "N": q.N}
                    inputs.update({f"x{i + 1}": v for i, v in enumerate(x)})
                    inputs.update({f"y{i + 1}": v for i, v in enumerate(y)})
                    values = {"value": kernels.mtn_closed(q)}
                    residuals = {}
                    if args.oracle:
                        ref = _oracle_value(args.oracle, q)
                        values["oracle"] = ref
                        dev = float(kernels.relative_deviation(values["value"], ref))
                        residuals["deviation"] = dev
                        ok = ok and dev <= tol
                    rows.append(_row(inputs, values, residuals))
    status = ("pass" if ok else "fail") if args.oracle else "info"
    return make_record("table", _params(args), rows, status), EXIT_FAIL if status == "fail" else EXIT_PASS


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="oukernels", description="Kernels of L^N e^{tL} for the Ornstein-Uhlenbeck operator.")
    sub = p.add_subparsers(dest="command", required=True)

    def fmt(sp, default="json"):
        sp.add_argument("--format", choices=("json", "csv"), default=default)

    e = sub.add_parser("eval", help="evaluate M_t^N(x, y)")
    e.add_argument("--t", type=float, required=True)
    e.add_argument("--N", type=int, required=True)
    e.add_argument("--dim", type=int, default=1)
    e.add_argument("--x", type=_floats, required=True, help="comma-separated coordinates")
    e.add_argument("--y", type=_floats, required=True)
    e.add_argument("--oracle", choices=("spectral", "fd"))
    e.add_argument("--tol", type=float, help="deviation tolerance (default 1e-9 spectral, 1e-5 fd)")
    fmt(e)
    e.set_defaults(func=cmd_eval)

    v = sub.add_parser("verify", help="run an identity suite")
    v.add_argument("--suite", choices=(*SUITES, "all"), required=True)
    v.add_argument("--tol", type=float, help="override floating tolerances (finite-difference checks keep theirs)")
    fmt(v)
    v.set_defaults(func=cmd_verify)

    b = sub.add_parser("bounds", help="kernel bound sweeps, exponent slacks, Calderon constant")
    mode = b.add_mutually_exclusive_group()
    mode.add_argument("--calderon", action="store_true")
    mode.add_argument("--slacks", action="store_true", help="slacks of the exponent comparison at one point")
    b.add_argument("--kernel", choices=("K", "Ktilde"), default="K")
    b.add_argument("--N", type=int)
    b.add_argument("--alpha", type=float)
    b.add_argument("--C", type=float, default=1.0)
    b.add_argument("--T", type=float, default=1.0)
    b.add_argument("--dim", type=int, default=1)
    b.add_argument("--j", type=int, default=1)
    b.add_argument("--t-range", type=_pair, default=(0.05, 0.95))
    b.add_argument("--t-steps", type=int, default=19)
    b.add_argument("--x-range", type=_pair, default=(-3.0, 3.0))
    b.add_argument("--x-steps", type=int, default=121)
    b.add_argument("--y-range", type=_pair, default=(-3.0, 3.0))
    b.add_argument("--y-steps", type=int, default=481)
    b.add_argument("--constant", type=float, default=1.0, help="ratios above this count as violations")
    b.add_argument("--refine", action="store_true", help="also sweep the 2x refined grid")
    b.add_argument("--n-list", type=_ints, default=[1, 5, 40])
    b.add_argument("--tol", type=float, default=1e-10, help="Calderon tolerance")
    b.add_argument("--t", type=float, help="time for --slacks")
    b.add_argument("--x", type=_floats)
    b.add_argument("--y", type=_floats)
    fmt(b)
    b.set_defaults(func=cmd_bounds)

    t = sub.add_parser("table", help="tabulate kernel values on a grid")
    t.add_argument("--t", type=_floats, required=True)
    t.add_argument("--N", type=_ints, default=[0])
    t.add_argument("--dim", type=int, default=1)
    t.add_argument("--x", type=_floats, required=True, help="coordinate values; points are their d-fold products")
    t.add_argument("--y", type=_floats, required=True)
    t.add_argument("--oracle", choices=("spectral", "fd"))
    t.add_argument("--tol", type=float)
    fmt(t, default="csv")
    t.set_defaults(func=cmd_table)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "dim", 1) < 1:
            raise UsageError("--dim must be at least 1")
        record, code = args.func(args)
    except bounds.HypothesisError as exc:
        print(f"oukernels: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except (ValueError, ArithmeticError) as exc:
        print(f"oukernels: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    sys.stdout.write(render(record, args.format))
    return code


if __name__ == "__main__":
    sys.exit(main())
