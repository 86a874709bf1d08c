import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oukernels.bounds import (
    BoundSweepSpec,
    EmptyGridError,
    HypothesisError,
    calderon_constant,
    calderon_integral,
    largeness_violations,
    lemma62_check,
    exponent_slacks_array,
    recheck_ktilde,
    theorem63_sweep,
)
from oukernels.kernels import DomainError, KernelQuery, kernel_K, kernel_K_tilde, mehler

SMALL = dict(t_steps=7, x_steps=13, y_steps=25)


@settings(max_examples=200)
@given(
    st.floats(1.0001, 100),
    st.floats(1e-3, 5),
    st.lists(st.floats(-5, 5), min_size=2, max_size=2),
    st.lists(st.floats(-5, 5), min_size=2, max_size=2),
)
def test_exponent_slacks_nonnegative(alpha, t, x, y):
    s1, s2 = lemma62_check(alpha, t, x, y)
    assert s1 >= -1e-12 and s2 >= -1e-12


def test_exponent_scalar_matches_array():
    rng = np.random.default_rng(3)
    alpha = rng.uniform(1.5, 50, 100)
    t = rng.uniform(0.01, 3, 100)
    x, y = rng.uniform(-3, 3, (100, 2)), rng.uniform(-3, 3, (100, 2))
    s1, s2 = exponent_slacks_array(alpha, t, x, y)
    for i in range(0, 100, 17):
        assert lemma62_check(alpha[i], t[i], x[i], y[i]) == pytest.approx((s1[i], s2[i]))


def test_exponent_domain():
    with pytest.raises(DomainError):
        lemma62_check(1.0, 0.5, [0.0], [0.0])
    with pytest.raises(DomainError):
        lemma62_check(2.0, 0.5, [0.0], [0.0, 1.0])


def test_largeness_conditions():
    assert largeness_violations(64, 1.0, [0.05, 0.95]) == []
    assert largeness_violations(59, 1.0, [0.5])
    with pytest.raises(HypothesisError, match="alpha below largeness threshold"):
        theorem63_sweep(BoundSweepSpec(1, 1.5, 1, 1, **SMALL))


def test_empty_grid():
    spec = BoundSweepSpec(1, 64, 0.01, 1, x_range=(1.0, 3.0), **SMALL)
    with pytest.raises(EmptyGridError):
        theorem63_sweep(spec)


@pytest.mark.parametrize("which", ["K", "Ktilde"])
@pytest.mark.parametrize("N", [0, 1, 2])
def test_ratio_at_argmax_matches_direct_evaluation(which, N):
    spec = BoundSweepSpec(N, 64, 1, 1, j=1, **SMALL)
    rep = theorem63_sweep(spec, which)
    assert rep.violations == 0 and rep.samples > 0
    t, x, y = rep.argmax
    assert t * abs(x[0]) <= 1 + 1e-12
    if which == "K":
        k = kernel_K(t, N, 64, x, y)
    else:
        k = kernel_K_tilde(t, N, 64, 1, x, y)
    u = t * t
    a2 = 1 - math.exp(-2 * u)
    q = (math.exp(-u) * x[0] - y[0]) ** 2 / a2
    bound = 64 * math.exp(32) * mehler(KernelQuery(u, 0, x, y)) * math.exp(-64 / (8 * math.e**2) * q)
    assert rep.max_ratio == pytest.approx(abs(k) / bound, rel=1e-9)


def test_constant_threshold_counts_violations():
    spec = BoundSweepSpec(1, 64, 1, 1, constant=1e-30, **SMALL)
    rep = theorem63_sweep(spec)
    assert 0 < rep.violations <= rep.samples


def test_report_serializes():
    rep = theorem63_sweep(BoundSweepSpec(1, 64, 1, 1, **SMALL))
    d = rep.to_dict()
    assert set(d) == {"max_ratio", "argmax", "samples", "params", "violations", "kernel", "skipped"}
    assert d["params"]["alpha"] == 64


def test_refined_keeps_nodes():
    spec = BoundSweepSpec(1, 64, 1, 1, **SMALL)
    fine = spec.refined()
    assert (fine.t_steps, fine.x_steps, fine.y_steps) == (13, 25, 49)
    assert set(np.round(spec.t_grid(), 12)) <= set(np.round(fine.t_grid(), 12))


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(N=-1, alpha=64, C=1, T=1),
        dict(N=1, alpha=1, C=1, T=1),
        dict(N=1, alpha=64, C=0, T=1),
        dict(N=1, alpha=64, C=1, T=1, t_range=(0.5, 1.5)),
        dict(N=1, alpha=64, C=1, T=1, j=2),
        dict(N=1, alpha=64, C=1, T=1, x_steps=0),
    ],
)
def test_spec_validation(kwargs):
    with pytest.raises(ValueError):
        BoundSweepSpec(**kwargs)


def test_ktilde_recheck():
    worst, n = recheck_ktilde(BoundSweepSpec(1, 64, 1, 1, j=1, **SMALL), fraction=0.2)
    assert n > 0 and worst < 1e-6


@pytest.mark.parametrize("N", range(6))
@pytest.mark.parametrize("alpha", [2.0, 4.0, 10.0])
def test_calderon(N, alpha):
    res = calderon_constant(N, alpha, (1, 5, 40))
    assert res.closed_form == alpha ** (N + 1) * math.factorial(N) / 2
    assert res.deviation / res.closed_form < 1e-10
    assert res.relative_error < 1e-10
    assert res.constant == pytest.approx(1 / res.closed_form, rel=1e-10)


def test_calderon_example():
    assert calderon_constant(2, 3.0, (1, 5, 40)).constant == pytest.approx(1 / 27, rel=1e-12)


def test_calderon_validation():
    with pytest.raises(ValueError):
        calderon_integral(1, 0.5, 1)
    with pytest.raises(ValueError):
        calderon_integral(1, 2.0, 0)
    with pytest.raises(ValueError):
        calderon_constant(1, 2.0, ())
