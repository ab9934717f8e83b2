import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cpsconf.conformance import (
    ClosenessParams,
    ConformanceVerdict,
    build_pwc_formula,
    check,
    closeness_formula,
    conformance_robustness,
    epsilon_star,
    is_close,
    tau_star,
)
from cpsconf.monitor import Signal, robustness, satisfies
from cpsconf.tss import (
    ParallelTrace,
    TimedStateSequence,
    TraceError,
    parallel_concat,
    window_count,
)

from conftest import build_trace, random_pair

INF = math.inf


def grid(n, dt=0.1):
    return np.round(np.arange(n) * dt, 10)


def const(value, n=21, dt=0.1):
    t = grid(n, dt)
    return TimedStateSequence.real(t, np.full((n, 1), float(value)))


def step(at, n=31, dt=0.1):
    t = grid(n, dt)
    return TimedStateSequence.real(t, (t >= at - 1e-9).astype(float).reshape(-1, 1))


def params(tau, eps, T=100.0, J=100):
    return ClosenessParams(T, J, tau, eps)


def span(a, b):
    return float(max(a.times[-1], b.times[-1])), int(max(a.jumps.max(), b.jumps.max()))


def pt(a, b):
    return parallel_concat(a, b, *span(a, b))


# ------------------------------------------------------------ direct route


def test_params_validation():
    for bad in [(0, 1, 1, 1), (1, -1, 1, 1), (1, 1, 0, 1), (1, 1, 1, 0)]:
        with pytest.raises(ValueError):
            ClosenessParams(*bad)
    with pytest.raises(ValueError, match="witness"):
        ConformanceVerdict(False)


def test_is_close_examples():
    a = const(0.5)
    assert is_close(a, a, params(0.01, 1e-9)).close
    v = is_close(const(0), const(0.3), params(0.1, 0.2))
    assert not v.close and v.witness.index == 1 and v.witness.side == "a"
    assert is_close(step(1.0), step(1.2), params(0.25, 0.1)).close
    v = is_close(step(1.0), step(1.2), params(0.1, 0.1))
    assert not v.close and v.witness.t == 1.0


def test_is_close_dim_mismatch():
    a = TimedStateSequence.real([0, 1], [[0, 0], [1, 1]])
    with pytest.raises(TraceError, match="dimensions differ"):
        is_close(a, const(0, 2), params(1, 1))


def test_is_close_respects_horizon_and_jumps():
    a = TimedStateSequence.real(grid(5), [[0], [0], [0], [0], [9]])
    b = const(0, 5)
    assert not is_close(a, b, params(0.05, 0.5)).close
    assert is_close(a, b, params(0.05, 0.5, T=0.35)).close
    h = build_trace(grid(5), np.zeros((5, 1)), [2], jump_values={2: [9.0]})
    g = build_trace(grid(5), np.zeros((5, 1)), [2])
    assert not is_close(h, g, params(0.05, 0.5)).close
    assert is_close(h, g, params(0.05, 0.5, J=1)).close


def test_epsilon_star_examples():
    a = step(1.0)
    assert epsilon_star(a, a, 0.3, 10, 10) == 0
    assert epsilon_star(const(0), const(0.3), 0.3, 10, 10) == pytest.approx(0.3, abs=1e-15)
    h = TimedStateSequence([0, 1], [1, 1], [[0], [0]])
    g = TimedStateSequence([0, 1], [2, 2], [[0], [0]])
    assert epsilon_star(h, g, 0.5, 10, 10) == INF


def test_tau_star_examples():
    a = step(1.0)
    assert tau_star(a, a, 0.1, 10, 10) == 0
    ts = tau_star(step(1.0), step(1.2), 0.1, 10, 10)
    # grid times 0.9 and 1.1 differ by 0.2 plus one rounding ulp
    assert 0.1 < ts <= 0.2 + 1e-15
    assert not is_close(step(1.0), step(1.2), params(0.1, 0.1)).close
    assert is_close(step(1.0), step(1.2), params(0.25, 0.1)).close
    assert tau_star(const(0), const(1), 0.5, 10, 10) == INF


def test_strict_inequality_at_epsilon_star():
    a, b = const(0), const(0.3)
    e = epsilon_star(a, b, 0.1, 10, 10)
    assert not is_close(a, b, params(0.1, e)).close
    assert is_close(a, b, params(0.1, np.nextafter(e, 1))).close


# ------------------------------------------------------------ formula route


def test_conformance_robustness_examples():
    a = step(1.0)
    assert conformance_robustness(pt(a, a), 0.1, 0.5) == 0.5
    assert conformance_robustness(pt(const(0), const(0.3)), 0.1, 0.5) == pytest.approx(0.2)
    assert conformance_robustness(pt(const(0), const(0.3)), 0.1, 0.2) == pytest.approx(-0.1)


def test_conformance_robustness_unmatched_segments():
    h = build_trace(grid(6), np.zeros((6, 1)), [2])
    g = build_trace(grid(6), np.zeros((6, 1)))
    assert conformance_robustness(pt(h, g), 0.15, 1.0) == -INF
    assert epsilon_star(h, g, 0.15, 10, 10) == INF


def test_conformance_robustness_hybrid_matched():
    h = build_trace(grid(6), np.zeros((6, 1)), [2])
    g = build_trace(grid(6), np.full((6, 1), 0.25), [2])
    r = conformance_robustness(pt(h, g), 0.15, 1.0)
    assert r == pytest.approx(0.75)
    assert is_close(h, g, params(0.15, 1.0)).close


def test_formula_route_equals_explicit_formula_on_shared_grid():
    """The public closeness formula over Signal channels agrees on real traces."""
    rng = np.random.default_rng(3)
    for _ in range(40):
        a, b = random_pair(rng, n_hi=40, p_hybrid=0.0)
        p = pt(a, b)
        dt = a.times[1] - a.times[0]
        tau, eps = 2.5 * dt, float(rng.uniform(0.05, 2))
        c = window_count(a.times, tau)
        phi = closeness_formula(c, c, eps, p.horizon)
        direct = robustness(phi, Signal.from_parallel(p))
        assert direct == pytest.approx(conformance_robustness(p, tau, eps), abs=1e-12)


def test_check_annotates_robustness():
    v = check(const(0), const(0.3), ClosenessParams(2.0, 1, 0.1, 0.2))
    assert not v.close and v.robustness == pytest.approx(-0.1)
    v = check(const(0), const(0.3), ClosenessParams(2.0, 1, 0.1, 0.5))
    assert v.close and v.robustness == pytest.approx(0.2)


def test_degenerate_trace_errors():
    a = TimedStateSequence.real([0.0], [[0.0]])
    with pytest.raises(TraceError, match="Zeno or degenerate"):
        conformance_robustness(ParallelTrace(a, a, 1.0, 1), 0.1, 0.1)


@settings(max_examples=80)
@given(st.integers(0, 2**32 - 1), st.floats(0.3, 4), st.floats(0.01, 3))
def test_sign_agrees_with_direct_check(seed, tau_steps, eps):
    rng = np.random.default_rng(seed)
    a, b = random_pair(rng, n_hi=60)
    p = pt(a, b)
    dt = float(np.diff(np.unique(a.times))[0])
    tau = tau_steps * dt
    es = epsilon_star(p.model, p.impl, tau, p.horizon, p.max_jumps)
    if abs(eps - es) <= 1e-9:
        return
    close = is_close(p.model, p.impl, ClosenessParams(p.horizon, p.max_jumps, tau, eps)).close
    r = conformance_robustness(p, tau, eps)
    assert (r > 0) == close


# ------------------------------------------------------------ properties


@given(st.integers(0, 2**32 - 1), st.floats(0.01, 1), st.floats(0.01, 3))
def test_is_close_symmetric(seed, tau, eps):
    rng = np.random.default_rng(seed)
    a, b = random_pair(rng, n_hi=40)
    p = params(tau, eps)
    assert is_close(a, b, p).close == is_close(b, a, p).close


@given(st.integers(0, 2**32 - 1), st.floats(0.01, 1), st.floats(0.01, 1))
def test_epsilon_star_non_increasing_in_tau(seed, t1, t2):
    rng = np.random.default_rng(seed)
    a, b = random_pair(rng, n_hi=40)
    lo, hi = sorted((t1, t2))
    assert epsilon_star(a, b, hi, 100, 100) <= epsilon_star(a, b, lo, 100, 100)


@given(st.integers(0, 2**32 - 1), st.floats(0.01, 3), st.floats(0.01, 3))
def test_tau_star_non_increasing_in_eps(seed, e1, e2):
    rng = np.random.default_rng(seed)
    a, b = random_pair(rng, n_hi=40)
    lo, hi = sorted((e1, e2))
    assert tau_star(a, b, hi, 100, 100) <= tau_star(a, b, lo, 100, 100)


@given(st.integers(0, 2**32 - 1), st.floats(0.01, 1), st.floats(0.01, 3),
       st.floats(0, 1), st.floats(0, 1))
def test_closeness_upward_closed(seed, tau, eps, dtau, deps):
    rng = np.random.default_rng(seed)
    a, b = random_pair(rng, n_hi=40)
    if is_close(a, b, params(tau, eps)).close:
        assert is_close(a, b, params(tau + dtau, eps + deps)).close


@given(st.integers(0, 2**32 - 1), st.floats(0.05, 1))
def test_epsilon_star_is_the_threshold(seed, tau):
    rng = np.random.default_rng(seed)
    a, b = random_pair(rng, n_hi=40)
    e = epsilon_star(a, b, tau, 100, 100)
    if math.isinf(e):
        assert not is_close(a, b, params(tau, 1e12)).close
        return
    if e > 0:
        assert not is_close(a, b, params(tau, e)).close
    assert is_close(a, b, params(tau, e + 1e-9)).close


# ------------------------------------------------------------ mode-divergence formula


def modes_pair(lm, li):
    n = len(lm)
    t = np.arange(float(n))
    a = TimedStateSequence.real(t, np.zeros((n, 1)), lm)
    b = TimedStateSequence.real(t, np.zeros((n, 1)), li)
    return parallel_concat(a, b, float(n - 1), 1)


def test_pwc_identical_modes():
    p = modes_pair([0, 0, 1, 1, 1, 0], [0, 0, 1, 1, 1, 0])
    phi = build_pwc_formula(1, 5)
    assert robustness(phi, p, kind="temporal") == INF


def test_pwc_unhealed_divergence():
    p = modes_pair([0, 0, 1, 1, 1, 0], [0] * 6)
    phi = build_pwc_formula(1, 5)
    assert not satisfies(phi, p)
    assert robustness(phi, p, kind="temporal") < 0


def test_pwc_healed_divergence():
    p = modes_pair([0, 0, 1, 1, 1, 0], [0] * 6)
    phi = build_pwc_formula(3, 5)
    assert satisfies(phi, p)
    assert robustness(phi, p, kind="temporal") >= 0


def test_pwc_errors():
    with pytest.raises(ValueError, match="smaller than"):
        build_pwc_formula(5, 5)
    with pytest.raises(ValueError):
        build_pwc_formula(0, 5)
