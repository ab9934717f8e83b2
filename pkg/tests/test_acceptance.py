"""Acceptance suite: one PASS/FAIL line per criterion, at the stated tolerances."""
import csv
import json
import math
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from scipy.stats import spearmanr

from cpsconf.cli import main
from cpsconf.conformance import (
    ClosenessParams,
    build_pwc_formula,
    conformance_robustness,
    epsilon_star,
    is_close,
)
from cpsconf.degree import binary_search_epsilon, initial_bracket
from cpsconf.falsify import Conformance, OptimizerConfig, SearchSpace, falsify
from cpsconf.monitor import Signal, desugar, evaluate, parse, robustness, satisfies
from cpsconf.monitor import Always, Eventually, Interval, Not
from cpsconf.systems import AutomatonSystem, GuardOffset, ReplaySystem, make_mutant, nav_automaton
from cpsconf.systems.benchmark import INIT_HIGH, INIT_LOW, INPUT_BOUND
from cpsconf.tss import TimedStateSequence, parallel_concat

from conftest import random_formula, random_pair, random_signal_trace
from test_conformance import modes_pair
from test_monitor import GOLDENS

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {n}: {'PASS' if ok else 'FAIL'} ({detail})")
    return emit


def span(a, b):
    return float(max(a.times[-1], b.times[-1])), int(max(a.jumps.max(), b.jumps.max()))


def step_of(a):
    return float(np.diff(np.unique(a.times))[0])


def test_1_monotonicity(report):
    rng = np.random.default_rng(41)
    start = time.perf_counter()
    violations = checks = 0
    for _ in range(1000):
        a, b = random_pair(rng)
        p = parallel_concat(a, b, *span(a, b))
        dt = step_of(a)
        for _ in range(10):
            tau = float(rng.uniform(0.1, 5)) * dt
            e1, e2 = np.sort(rng.uniform(0.01, 3, 2))
            r1 = conformance_robustness(p, tau, e1, "spatial")
            r2 = conformance_robustness(p, tau, e2, "spatial")
            violations += r1 > r2
            eps = float(rng.uniform(0.01, 3))
            t1, t2 = np.sort(rng.uniform(0.1, 5, 2)) * dt
            r1 = conformance_robustness(p, t1, eps, "temporal")
            r2 = conformance_robustness(p, t2, eps, "temporal")
            violations += r1 > r2
            checks += 2
    elapsed = time.perf_counter() - start
    ok = violations == 0 and elapsed < 120
    report(1, ok, f"{violations} violations in {checks} checks, {elapsed:.1f} s")
    assert ok


def test_2_oracle_equivalence(report):
    rng = np.random.default_rng(42)
    cases = agree = rejected = 0
    while cases < 500:
        a, b = random_pair(rng)
        T, J = span(a, b)
        dt = step_of(a)
        tau = float(rng.uniform(0.1, 5)) * dt
        es = epsilon_star(a, b, tau, T, J)
        eps = float(rng.uniform(0.01, 3)) if not math.isfinite(es) or rng.random() < 0.5 \
            else float(es * rng.uniform(0.5, 1.5))
        if eps <= 0 or abs(eps - es) <= 1e-9:
            rejected += 1
            continue
        close = is_close(a, b, ClosenessParams(T, J, tau, eps)).close
        r = conformance_robustness(parallel_concat(a, b, T, J), tau, eps)
        agree += (r > 0) == close
        cases += 1
    ok = agree == cases
    report(2, ok, f"{agree}/{cases} agree, {rejected} rejected near the threshold")
    assert ok


def test_3_bisection_matches_epsilon_star(report):
    rng = np.random.default_rng(43)
    good = 0
    for _ in range(200):
        a, b = random_pair(rng)
        T, J = span(a, b)
        tau = float(rng.uniform(0.1, 5)) * step_of(a)
        es = epsilon_star(a, b, tau, T, J)

        def close(e):
            return is_close(a, b, ClosenessParams(T, J, tau, e)).close

        if math.isinf(es):
            good += not close(1e12)
            continue
        lo, hi = 0.0, 1.0
        while not close(hi):
            hi *= 2
        while hi - lo > 1e-9:
            mid = (lo + hi) / 2
            lo, hi = (lo, mid) if close(mid) else (mid, hi)
        good += abs(hi - es) <= 1e-9
    ok = good == 200
    report(3, ok, f"{good}/200 within 1e-9")
    assert ok


def test_4_degree_exact_width(report):
    t = np.round(np.arange(51) * 0.1, 10)
    base = TimedStateSequence.real(t, np.column_stack([np.sin(t), np.cos(2 * t)]))
    space = SearchSpace([0.0], [0.0], 5.0, 1)
    opt = OptimizerConfig("uniform")
    start = time.perf_counter()
    good = 0
    for off in np.linspace(0.05, 2.0, 50):
        impl = TimedStateSequence.real(t, base.values + [off, 0.0])
        es = epsilon_star(base, impl, 0.01, 5.0, 1)
        m, i = ReplaySystem(base), ReplaySystem(impl)
        eps_h, _ = initial_bracket(m, i, 0.01, 0.1, space, opt, 1, 0)
        res = binary_search_epsilon(m, i, 0.01, 20, eps_h, space, opt, 1, 0, check_upper=False)
        lo, hi = res.interval
        good += res.width == Fraction(eps_h) / 2**20 and lo <= es <= hi
    elapsed = time.perf_counter() - start
    ok = good == 50 and elapsed < 60
    report(4, ok, f"{good}/50 exact brackets containing the oracle value, {elapsed:.1f} s")
    assert ok


def test_5_injected_fault(report):
    T = 10.0
    space = SearchSpace(INIT_LOW, INIT_HIGH, T, 100, [-INPUT_BOUND] * 2, [INPUT_BOUND] * 2, 3)
    model = AutomatonSystem(nav_automaton(), 0.05)
    mutant = AutomatonSystem(make_mutant(nav_automaton(), GuardOffset("horizontal", 0.1)), 0.05)
    obj = Conformance(0.01, 0.25)
    opt = OptimizerConfig("sa")
    start = time.perf_counter()
    runs = [falsify(model, mutant, obj, space, opt, 500, seed) for seed in range(20)]
    caught = sum(r.falsified for r in runs)
    h0, u = space.decode(runs[0].best_theta)
    ym = model.simulate(h0, u, T, 100)
    yi = mutant.simulate(h0, u, T, 100)
    es = epsilon_star(ym, yi, 0.01, T, 100)
    same = sum(falsify(model, model, obj, space, opt, 500, seed).falsified for seed in range(20))
    elapsed = time.perf_counter() - start
    ok = caught >= 18 and same == 0 and es >= 0.5 and elapsed < 600
    report(5, ok, f"mutant {caught}/20, identity {same}/20, oracle eps* {es:g}, {elapsed:.0f} s")
    assert ok


def test_6_pwc(report, tmp_path, capsys):
    phi1, phi3 = build_pwc_formula(1, 5), build_pwc_formula(3, 5)
    same = modes_pair([0, 0, 1, 1, 1, 0], [0, 0, 1, 1, 1, 0])
    diverged = modes_pair([0, 0, 1, 1, 1, 0], [0] * 6)
    signs = [
        robustness(phi1, same, kind="temporal") > 0,
        not satisfies(phi1, diverged) and robustness(phi1, diverged, kind="temporal") < 0,
        satisfies(phi3, diverged) and robustness(phi3, diverged, kind="temporal") >= 0,
    ]
    main(["bench", str(CONFIGS / "bench_dynamics.json"), "--output", str(tmp_path)])
    capsys.readouterr()
    with open(tmp_path / "bench_summary.csv") as fh:
        rows = [r for r in csv.DictReader(fh) if r["mutant"] != "identity"]
    mags = [float(r["magnitude"]) for r in rows]
    tests = [float(r["avg_tests_all"]) for r in rows]
    rho = spearmanr(mags, tests).statistic
    ok = all(signs) and len(rows) >= 3 and rho < 0
    report(6, ok, f"fixtures {sum(signs)}/3, spearman {rho:.3f} over {tests}")
    assert ok


def test_7_mtl_goldens(report):
    good = 0
    for formula, trace, t, kind, norm, expected in GOLDENS:
        phi = parse(formula) if isinstance(formula, str) else formula
        r = robustness(phi, trace, float(t), kind=kind, norm=norm)
        if math.isinf(expected) or expected == 0:
            good += r == expected
        else:
            good += float(f"{r:.12g}") == float(f"{expected:.12g}")
    rng = np.random.default_rng(2024)
    exact = 0
    for _ in range(500):
        tr = random_signal_trace(rng)
        phi = random_formula(rng, 3, 3.0)
        sig = Signal.from_tss(tr)
        psi = phi.arg if isinstance(phi, (Always, Eventually)) else phi
        iv = Interval(0, 1.5)
        ok_case = True
        for kind in ("spatial", "temporal"):
            ok_case &= np.array_equal(evaluate(phi, sig, kind), evaluate(desugar(phi), sig, kind))
            ok_case &= np.array_equal(evaluate(Always(psi, iv), sig, kind),
                                      evaluate(Not(Eventually(Not(psi), iv)), sig, kind))
        exact += ok_case
    ok = good == len(GOLDENS) >= 25 and exact == 500
    report(7, ok, f"goldens {good}/{len(GOLDENS)}, desugaring exact {exact}/500")
    assert ok


def test_8_determinism(report, tmp_path, capsys):
    runs = [("falsify", "falsify_identity.json"), ("falsify", "falsify_guard.json"),
            ("falsify", "falsify_pwc.json"), ("degree", "degree_offset.json")]
    same = 0
    for cmd, name in runs:
        first, second = tmp_path / name / "a", tmp_path / name / "b"
        main([cmd, str(CONFIGS / name), "--output", str(first)])
        main([cmd, str(first / "manifest.json"), "--output", str(second)])
        files = sorted(p.name for p in first.iterdir() if p.name != "timing.json")
        equal = files == sorted(p.name for p in second.iterdir() if p.name != "timing.json")
        for f in files:
            a, b = (first / f).read_bytes(), (second / f).read_bytes()
            if f == "manifest.json":
                a, b = json.loads(a), json.loads(b)
                del a["config"]["output"], b["config"]["output"]
            equal &= a == b
        same += equal
    capsys.readouterr()
    ok = same == len(runs)
    report(8, ok, f"{same}/{len(runs)} reruns byte-identical")
    assert ok
