"""Falsification: search initial conditions and inputs for a robustness violation.

A test is one parameter vector ``theta = (h0, control values)``.  Both
systems are simulated from it, the pair of traces is scored by an objective
and the search stops at the first test that violates the property.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .conformance import ClosenessParams, conformance_robustness, is_close
from .monitor import Formula as MtlFormula
from .monitor import Kind, Signal, evaluate, satisfies
from .systems import InputSignal, Interpolation, SimulationError, SystemUnderTest
from .tss import TraceError, parallel_concat

INF = math.inf


class FalsificationError(RuntimeError):
    pass


def _rank(r: float, violated: bool):
    return (r, 0 if violated else 1)


# ------------------------------------------------------------ search space


@dataclass(frozen=True, eq=False)
class SearchSpace:
    """Box of initial conditions and of control-point values.

    ``input_low``/``input_high`` are either one box shared by all control
    points (shape ``(n_u,)``) or one box per point (``(n_control_points, n_u)``).
    Control points sit at ``T * i / n_control_points``.
    """

    h0_low: np.ndarray
    h0_high: np.ndarray
    horizon: float
    max_jumps: int = 100
    input_low: np.ndarray | None = None
    input_high: np.ndarray | None = None
    n_control_points: int = 1
    interpolation: Interpolation = Interpolation.PIECEWISE_CONSTANT

    def __post_init__(self):
        lo = np.asarray(self.h0_low, dtype=float).reshape(-1)
        hi = np.asarray(self.h0_high, dtype=float).reshape(-1)
        if lo.shape != hi.shape or np.any(lo > hi):
            raise ValueError("empty initial-condition box")
        object.__setattr__(self, "h0_low", lo)
        object.__setattr__(self, "h0_high", hi)
        if self.n_control_points < 1:
            raise ValueError("n_control_points must be at least 1")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if (self.input_low is None) != (self.input_high is None):
            raise ValueError("give both input bounds or neither")
        if self.input_low is not None:
            ulo = np.broadcast_to(np.asarray(self.input_low, dtype=float), self._ushape())
            uhi = np.broadcast_to(np.asarray(self.input_high, dtype=float), self._ushape())
            if np.any(ulo > uhi):
                raise ValueError("empty input box")
            object.__setattr__(self, "input_low", np.array(ulo))
            object.__setattr__(self, "input_high", np.array(uhi))
        object.__setattr__(self, "interpolation", Interpolation(self.interpolation))

    def _ushape(self):
        n_u = np.asarray(self.input_low).shape[-1]
        return (self.n_control_points, n_u)

    @property
    def n_inputs(self) -> int:
        return 0 if self.input_low is None else self.input_low.shape[1]

    @property
    def low(self) -> np.ndarray:
        parts = [self.h0_low]
        if self.input_low is not None:
            parts.append(self.input_low.reshape(-1))
        return np.concatenate(parts)

    @property
    def high(self) -> np.ndarray:
        parts = [self.h0_high]
        if self.input_high is not None:
            parts.append(self.input_high.reshape(-1))
        return np.concatenate(parts)

    @property
    def dim(self) -> int:
        return len(self.low)

    def control_times(self) -> np.ndarray:
        return self.horizon * np.arange(self.n_control_points) / self.n_control_points

    def decode(self, theta) -> tuple[np.ndarray, InputSignal | None]:
        theta = np.asarray(theta, dtype=float)
        nh = len(self.h0_low)
        h0 = theta[:nh]
        if self.input_low is None:
            return h0, None
        vals = theta[nh:].reshape(self.n_control_points, self.n_inputs)
        u = InputSignal(
            self.control_times(), vals, self.interpolation, self.horizon,
            (self.input_low.min(axis=0), self.input_high.max(axis=0)),
        )
        return h0, u

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.low, self.high)

    def contains(self, theta) -> bool:
        theta = np.asarray(theta, dtype=float)
        return theta.shape == self.low.shape and bool(
            np.all(theta >= self.low) and np.all(theta <= self.high)
        )


# -------------------------------------------------------------- objectives
#
# ``assess`` returns the robustness and whether the test violates the
# property.  The two agree except at robustness zero, where the margin says
# nothing (temporal robustness is zero whenever a violation lasts a single
# sample); there the Boolean semantics decides.


@dataclass(frozen=True)
class Conformance:
    tau: float
    eps: float
    kind: Kind = Kind.SPATIAL
    norm: float = 2

    def score(self, model_tr, impl_tr, T, J) -> float:
        pt = parallel_concat(model_tr, impl_tr, T, J)
        return conformance_robustness(pt, self.tau, self.eps, self.kind, norm=self.norm)

    def assess(self, model_tr, impl_tr, T, J) -> tuple[float, bool]:
        r = self.score(model_tr, impl_tr, T, J)
        if r != 0:
            return r, r < 0
        params = ClosenessParams(T, J, self.tau, self.eps)
        return r, not is_close(model_tr, impl_tr, params, norm=self.norm).close

    def with_eps(self, eps: float) -> Conformance:
        return Conformance(self.tau, eps, self.kind, self.norm)

    def with_tau(self, tau: float) -> Conformance:
        return Conformance(tau, self.eps, self.kind, self.norm)


@dataclass(frozen=True)
class Formula:
    """An MTL property of the parallel trace (channels ``yM``, ``yI``, ``lM``, ``lI``)."""

    formula: MtlFormula
    kind: Kind = Kind.SPATIAL
    norm: float = 2

    def score(self, model_tr, impl_tr, T, J) -> float:
        sig = Signal.from_parallel(parallel_concat(model_tr, impl_tr, T, J))
        return float(evaluate(self.formula, sig, self.kind, self.norm)[0])

    def assess(self, model_tr, impl_tr, T, J) -> tuple[float, bool]:
        sig = Signal.from_parallel(parallel_concat(model_tr, impl_tr, T, J))
        r = float(evaluate(self.formula, sig, self.kind, self.norm)[0])
        if r != 0:
            return r, r < 0
        return r, not satisfies(self.formula, sig, norm=self.norm)


# --------------------------------------------------------------- optimizer


@dataclass(frozen=True)
class OptimizerConfig:
    """``method`` is ``"sa"`` (simulated annealing) or ``"uniform"``.

    ``initial_temperature=None`` uses the magnitude of the first robustness
    value.  ``restarts`` splits the budget into that many extra fresh starts.
    ``workers`` > 1 evaluates uniform-random tests concurrently; results are
    consumed in submission order, so the outcome does not depend on it.
    """

    method: str = "sa"
    initial_temperature: float | None = None
    cooling: float = 0.97
    step_fraction: float = 0.1
    restarts: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.method not in ("sa", "uniform"):
            raise ValueError(f"unknown optimizer {self.method!r}")
        if not 0 < self.cooling <= 1:
            raise ValueError("cooling must lie in (0, 1]")
        if not self.step_fraction > 0:
            raise ValueError("step_fraction must be positive")
        if self.restarts < 0 or self.workers < 1:
            raise ValueError("restarts must be >= 0 and workers >= 1")


def reflect(x: np.ndarray, low: np.ndarray, high: np.ndarray) -> np.ndarray:
    """Fold ``x`` back into ``[low, high]`` by mirroring at the bounds."""
    w = high - low
    safe = np.where(w > 0, w, 1.0)
    y = np.mod(x - low, 2 * safe)
    y = np.where(y > safe, 2 * safe - y, y)
    y = np.clip(low + y, low, high)
    inside = (x >= low) & (x <= high)
    return np.where(w > 0, np.where(inside, x, y), low)


def propose(theta, space: SearchSpace, config: OptimizerConfig, rng) -> np.ndarray:
    sigma = config.step_fraction * (space.high - space.low)
    return reflect(theta + sigma * rng.standard_normal(len(theta)), space.low, space.high)


def accept(delta: float, temperature: float, rng) -> bool:
    """Metropolis rule; downhill (and sideways) moves are always taken."""
    if math.isnan(delta) or delta <= 0:
        return True
    if temperature <= 0 or delta == INF:
        return False
    return bool(rng.random() < math.exp(-delta / temperature))


# ------------------------------------------------------------------ result


@dataclass
class TestRecord:
    index: int
    theta: list
    robustness: float | None
    violated: bool = False
    error: str | None = None
    accepted: bool = False
    elapsed: float = 0.0


@dataclass
class FalsificationResult:
    best_theta: np.ndarray | None
    best_robustness: float
    tests_run: int
    falsified: bool
    wall_time: float
    rng_seed: int
    history: list = field(default_factory=list)
    space: SearchSpace | None = None

    @property
    def best_h0(self):
        return None if self.best_theta is None else self.space.decode(self.best_theta)[0]

    @property
    def best_input(self):
        return None if self.best_theta is None else self.space.decode(self.best_theta)[1]

    @property
    def errors(self) -> int:
        return sum(1 for r in self.history if r.error is not None)


# ------------------------------------------------------------------ search


def run_test(model, impl, objective, space: SearchSpace, theta) -> tuple[float, bool]:
    """Simulate both systems at ``theta``; return (robustness, violated)."""
    h0, u = space.decode(theta)
    T, J = space.horizon, space.max_jumps
    ym = model.simulate(h0, u, T, J)
    yi = impl.simulate(h0, u, T, J)
    return objective.assess(ym, yi, T, J)


def _safe_test(model, impl, objective, space, theta):
    t0 = time.perf_counter()
    try:
        r, bad = run_test(model, impl, objective, space, theta)
        err = None
    except (SimulationError, TraceError, ValueError, KeyError) as exc:
        r, bad, err = None, False, f"{type(exc).__name__}: {exc}"
    return r, bad, err, time.perf_counter() - t0


def falsify(
    model: SystemUnderTest,
    impl: SystemUnderTest,
    objective,
    space: SearchSpace,
    optimizer: OptimizerConfig | None = None,
    budget: int = 100,
    seed: int = 0,
    *,
    start: Sequence[float] | None = None,
) -> FalsificationResult:
    """Minimise the objective's robustness over ``space``; stop on a violation.

    ``start`` seeds the first test (a warm start); otherwise it is drawn
    uniformly.  Failed simulations count against the budget.
    """
    optimizer = optimizer or OptimizerConfig()
    if budget < 1:
        raise ValueError("budget must be at least 1")
    rng = np.random.default_rng(seed)
    t_start = time.perf_counter()
    history: list[TestRecord] = []
    best = (INF, False, None)

    def record(theta, out) -> float | None:
        nonlocal best
        r, bad, err, dt = out
        history.append(
            TestRecord(len(history) + 1, [float(v) for v in theta], r, bad, err, False, dt)
        )
        if r is not None and (best[2] is None or _rank(r, bad) < _rank(*best[:2])):
            best = (r, bad, np.array(theta))
        return r

    def done() -> bool:
        return best[1]

    if optimizer.method == "uniform":
        _uniform(model, impl, objective, space, optimizer, budget, rng, start, record, done)
    else:
        _anneal(model, impl, objective, space, optimizer, budget, rng, start, record, done, history)

    if best[2] is None:
        msgs = sorted({r.error for r in history})
        raise FalsificationError(f"all {len(history)} tests failed: {'; '.join(msgs)}")
    return FalsificationResult(
        best_theta=best[2],
        best_robustness=best[0],
        tests_run=len(history),
        falsified=best[1],
        wall_time=time.perf_counter() - t_start,
        rng_seed=seed,
        history=history,
        space=space,
    )


def _draws(space, rng, start, n):
    out = []
    for i in range(n):
        if i == 0 and start is not None:
            out.append(np.clip(np.asarray(start, dtype=float), space.low, space.high))
        else:
            out.append(space.sample(rng))
    return out


def _uniform(model, impl, objective, space, config, budget, rng, start, record, done):
    thetas = _draws(space, rng, start, budget)
    if config.workers > 1:
        with ThreadPoolExecutor(config.workers) as pool:
            futures = [pool.submit(_safe_test, model, impl, objective, space, th) for th in thetas]
            for th, fut in zip(thetas, futures):
                record(th, fut.result())
                if done():
                    for f in futures:
                        f.cancel()
                    return
        return
    for th in thetas:
        record(th, _safe_test(model, impl, objective, space, th))
        if done():
            return


def _anneal(model, impl, objective, space, config, budget, rng, start, record, done, history):
    starts = config.restarts + 1
    per = [budget // starts + (1 if k < budget % starts else 0) for k in range(starts)]
    for k, n in enumerate(per):
        if n == 0:
            continue
        theta = _draws(space, rng, start if k == 0 else None, 1)[0]
        r_cur = record(theta, _safe_test(model, impl, objective, space, theta))
        if done():
            return
        temp = config.initial_temperature
        if temp is None:
            temp = abs(r_cur) if r_cur is not None and math.isfinite(r_cur) and r_cur != 0 else 1.0
        history[-1].accepted = r_cur is not None
        for _ in range(n - 1):
            cand = propose(theta, space, config, rng)
            r = record(cand, _safe_test(model, impl, objective, space, cand))
            if done():
                return
            if r is not None and (r_cur is None or accept(r - r_cur, temp, rng)):
                theta, r_cur = cand, r
                history[-1].accepted = True
            temp *= config.cooling


# ----------------------------------------------------------------- summary


def summarize(results: Sequence[FalsificationResult]) -> dict:
    """Campaign statistics over repeated runs.

    Averages of robustness use finite values only; infinite outcomes are
    counted separately.  ``avg_tests`` is over falsified runs (or over all
    runs when none falsified); ``avg_tests_all`` counts every run, an
    unfalsified one at its full test count.
    """
    fals = [r for r in results if r.falsified]
    finite = [r.best_robustness for r in results if math.isfinite(r.best_robustness)]
    pool = fals or list(results)
    return {
        "runs": len(results),
        "falsified": len(fals),
        "avg_tests": float(np.mean([r.tests_run for r in pool])) if pool else math.nan,
        "avg_tests_all": float(np.mean([r.tests_run for r in results])) if results else math.nan,
        "avg_robustness": float(np.mean(finite)) if finite else math.nan,
        "n_neg_inf": sum(1 for r in results if r.best_robustness == -INF),
        "n_pos_inf": sum(1 for r in results if r.best_robustness == INF),
        "avg_time": float(np.mean([r.wall_time for r in results])) if results else math.nan,
    }
