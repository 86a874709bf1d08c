"""Acceptance criteria 1-11, each at its stated tolerance and time budget.

Every criterion prints one PASS/FAIL line; under pytest the lines are
repeated in the terminal summary. ``python tests/test_acceptance.py``
runs them without pytest.
"""

import functools
import itertools
import math
import subprocess
import sys
import time

import numpy as np

from oukernels import bounds, combinatorics, hermite, kernels, operator, weyl

try:
    from conftest import ACCEPTANCE
except ImportError:
    ACCEPTANCE = {}


def criterion(number, budget):
    """Run the body, which returns (ok, detail); check the time budget; report."""

    def wrap(fn):
        @functools.wraps(fn)
        def test():
            start = time.perf_counter()
            ok, detail = fn()
            elapsed = time.perf_counter() - start
            in_time = elapsed < budget
            status = "PASS" if ok and in_time else "FAIL"
            line = f"criterion {number:2d}: {status}  {detail}; {elapsed:.1f} s of {budget} s"
            ACCEPTANCE[number] = line
            print(line)
            assert ok, line
            assert in_time, line

        return test

    return wrap


@criterion(1, 5)
def test_criterion_01_xy_power_normal_order():
    ok = weyl.normal_order_xy_power_check(12)
    return ok, "(xy)^m normal order equals Stirling expansion exactly for m <= 12"


@criterion(2, 10)
def test_criterion_02_commutation_identities():
    ok = weyl.check_section4_identities(10, weyl.DEFAULT_TEST_POLYS)
    degrees = sorted({len(p) - 1 for p in weyl.DEFAULT_TEST_POLYS})
    homog = all(
        weyl.homogeneity_breaks(a, b, n) == (a != b) for a in range(5) for b in range(5) for n in range(5)
    )
    return ok and homog and max(degrees) == 4, f"m <= 10, polynomial degrees {degrees}, homogeneity characterization"


@criterion(3, 5)
def test_criterion_03_stirling():
    part = all(
        combinatorics.partition_counts(N) == list(combinatorics.stirling_table(N).row(N)) for N in range(11)
    )
    gen = combinatorics.check_stirling_generating(20, 20)
    rec = combinatorics.check_stirling_recursion(30)
    return part and gen and rec, f"partitions N <= 10: {part}; j^N identity N, j <= 20: {gen}; recursion N <= 30: {rec}"


@criterion(4, 30)
def test_criterion_04_hermite_identities():
    gen = max(
        hermite.check_generating_function(x, t, 80)
        for x in np.linspace(-3, 3, 61)
        for t in np.linspace(-1, 1, 41)
    )
    grid = np.linspace(-3, 3, 13)
    binom = max(hermite.check_binomial_identity(n, x, y) for n in range(31) for x in grid for y in grid[::2])
    rule = hermite.gauss_hermite_rule(100)
    integ = max(
        hermite.check_integral_representation(n, x, rule) for n in range(21) for x in np.linspace(-2, 2, 41)
    )
    ortho = hermite.check_orthonormality(20, hermite.gauss_hermite_rule(40))
    fd = max(
        hermite.check_generating_derivative(N, x, t)
        for N in range(1, 5)
        for x in np.linspace(-2, 2, 9)
        for t in np.linspace(-1, 1, 9)
    )
    ok = gen < 1e-10 and binom < 1e-10 and integ < 1e-8 and ortho < 1e-11 and fd < 1e-5
    return ok, (
        f"generating {gen:.1e}, binomial {binom:.1e}, integral {integ:.1e}, "
        f"orthonormality {ortho:.1e}, t-derivative {fd:.1e}"
    )


@criterion(5, 120)
def test_criterion_05_oracle_agreement():
    s = kernels.oracle_agreement_grid(
        dims=(1, 2, 3), orders=range(5), times=(0.1, 0.5, 1.0, 2.0), coords=(-3.0, -1.0, 0.0, 0.5, 2.0)
    )
    ok = s.worst_spectral <= 1e-9 and s.worst_fd <= 1e-5 and s.comparisons >= 10**4
    return ok, f"{s.comparisons} comparisons, spectral {s.worst_spectral:.1e}, finite difference {s.worst_fd:.1e}"


@criterion(6, 60)
def test_criterion_06_eigenfunction_action():
    rule = hermite.gauss_hermite_rule(30)
    pts = {1: [(-2.0,), (-0.4,), (0.0,), (1.3,)], 2: [(-1.5, 0.2), (0.0, 0.0), (0.8, -1.1)]}
    worst, cases = 0.0, 0
    for d in (1, 2):
        for k in range(9):
            for alpha in combinatorics.compositions(k, d):
                for N in range(4):
                    for t in (0.2, 1.5):
                        worst = max(worst, operator.eigenfunction_check(alpha, t, N, pts[d], rule))
                        cases += 1
    return worst < 1e-8, f"{cases} cases, worst {worst:.1e}"


@criterion(7, 30)
def test_criterion_07_semigroup_composition():
    rule = hermite.gauss_hermite_rule(80)
    worst, cases = 0.0, 0
    for N in range(4):
        for M in range(4 - N):
            for s, t in ((0.2, 0.3), (0.5, 1.0), (1.5, 0.4)):
                for x, y in itertools.product((-1.5, 0.3, 2.0), repeat=2):
                    lhs, rhs = operator.semigroup_composition(s, N, t, M, [x], [y], rule)
                    worst = max(worst, float(kernels.relative_deviation(lhs, rhs)))
                    cases += 1
    return worst < 1e-7, f"{cases} cases, worst relative {worst:.1e}"


@criterion(8, 30)
def test_criterion_08_exponent_comparison_slacks():
    rng = np.random.default_rng(20240601)
    n = 10**5
    worst1 = worst2 = math.inf
    for d in (1, 2, 3):
        alpha = 1.0 + rng.uniform(1e-9, 99.0, n)
        t = rng.uniform(1e-4, 5.0, n)
        x = rng.uniform(-5, 5, (n, d))
        y = rng.uniform(-5, 5, (n, d))
        s1, s2 = bounds.exponent_slacks_array(alpha, t, x, y)
        worst1 = min(worst1, float(s1.min()))
        worst2 = min(worst2, float(s2.min()))
    ok = worst1 >= -1e-12 and worst2 >= -1e-12
    return ok, f"3 x {n} points, min slacks {worst1:.2e} and {worst2:.2e}"


@criterion(9, 120)
def test_criterion_09_bound_sweeps():
    parts, ok = [], True
    for N, alpha in ((1, 64.0), (2, 128.0)):
        for which in ("K", "Ktilde"):
            spec = bounds.BoundSweepSpec(N, alpha, 1.0, 1.0, d=1, j=1)
            base = bounds.theorem63_sweep(spec, which)
            fine = bounds.theorem63_sweep(spec.refined(2), which)
            change = abs(fine.max_ratio / base.max_ratio - 1)
            ok = ok and base.violations == 0 and fine.violations == 0 and change < 0.05
            ok = ok and math.isfinite(base.max_ratio) and base.max_ratio > 0
            parts.append(f"{which} N={N}: {base.max_ratio:.3e} ({100 * change:.2f}%)")
    return ok, "max_ratio (refinement change) " + ", ".join(parts)


@criterion(10, 5)
def test_criterion_10_calderon_constant():
    spread = err = 0.0
    for N in range(6):
        for alpha in (2.0, 4.0, 10.0):
            res = bounds.calderon_constant(N, alpha, (1, 5, 40))
            spread = max(spread, res.deviation / res.closed_form)
            err = max(err, res.relative_error)
    return spread < 1e-10 and err < 1e-10, f"spread over n {spread:.1e}, error vs closed form {err:.1e}"


def _cli(*argv):
    res = subprocess.run([sys.executable, "-m", "oukernels", *argv], capture_output=True)
    return res.returncode, res.stdout, res.stderr


@criterion(11, 60)
def test_criterion_11_cli_contract():
    coarse = ["--t-steps", "7", "--x-steps", "13", "--y-steps", "49"]
    invocations = [
        ["eval", "--t", "1", "--N", "2", "--dim", "2", "--x", "0.5,1", "--y", "0,0.25", "--oracle", "spectral"],
        ["verify", "--suite", "stirling"],
        ["bounds", "--kernel", "Ktilde", "--N", "1", "--alpha", "64", *coarse],
        ["bounds", "--calderon", "--N", "2", "--alpha", "3", "--n-list", "1,5,40"],
        ["table", "--t", "0.5,1", "--N", "0,1", "--x", "0,1", "--y=-1,0", "--oracle", "fd"],
        ["table", "--t", "0.5", "--x", "0", "--y", "0", "--format", "json"],
    ]
    same = True
    for argv in invocations:
        a, b = _cli(*argv), _cli(*argv)
        same = same and a == b and a[0] == 0 and bool(a[1])
    failing = {
        2: ["eval", "--t", "0", "--N", "1", "--x", "0", "--y", "0"],
        3: ["bounds", "--kernel", "K", "--N", "1", "--alpha", "1.5", "--T", "1"],
        1: ["bounds", "--kernel", "K", "--N", "1", "--alpha", "64", "--constant", "1e-30", *coarse],
    }
    codes = {want: _cli(*argv)[0] for want, argv in failing.items()}
    usage = _cli("verify", "--suite", "unknown")[0]
    ok = same and all(want == got for want, got in codes.items()) and usage == 2
    return ok, f"{len(invocations)} subcommand runs byte-identical: {same}; exit codes {codes} and usage {usage}"


if __name__ == "__main__":
    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
