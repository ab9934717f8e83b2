"""Conformance degree: bisection for the smallest eps given tau (or tau given eps).

Every probe is a full falsification campaign.  A probe that finds a
violation proves the systems are not close at that value, so the lower end
moves up; a probe that finds none moves the upper end down.  Bracket
endpoints are kept as exact fractions, so after ``K`` probes the width is
exactly the initial width divided by ``2**K``.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .falsify import Conformance, OptimizerConfig, SearchSpace, falsify
from .monitor import Kind


class DegreeError(RuntimeError):
    pass


@dataclass
class Probe:
    value: float
    robustness: float
    falsified: bool
    tests: int
    time: float
    theta: list | None = None


@dataclass
class DegreeResult:
    """``parameter`` is ``"eps"`` (searching eps at fixed ``tau``) or ``"tau"``."""

    parameter: str
    fixed: float
    lower: Fraction
    upper: Fraction
    iterations: int
    log: list = field(default_factory=list)
    witness: list | None = None  # falsifying theta at the lower end

    @property
    def interval(self) -> tuple[float, float]:
        return float(self.lower), float(self.upper)

    @property
    def width(self) -> Fraction:
        return self.upper - self.lower

    @property
    def tau(self) -> float:
        return self.fixed if self.parameter == "eps" else float(self.upper)

    @property
    def eps_interval(self) -> tuple[float, float]:
        if self.parameter != "eps":
            raise AttributeError("this result brackets tau")
        return self.interval


def _objective(parameter, fixed, value, kind):
    if parameter == "eps":
        return Conformance(fixed, value, kind)
    return Conformance(value, fixed, kind)


def _probe(model, impl, parameter, fixed, value, kind, space, optimizer, budget, seed, start):
    res = falsify(
        model, impl, _objective(parameter, fixed, value, kind), space, optimizer, budget,
        seed, start=start,
    )
    theta = [float(v) for v in res.best_theta]
    return res, Probe(value, res.best_robustness, res.falsified, res.tests_run, res.wall_time, theta)


def _bracket(model, impl, parameter, fixed, start_value, kind, space, optimizer, budget, seed,
             max_doublings):
    if not start_value > 0:
        raise ValueError(f"initial {parameter} must be positive")
    value = float(start_value)
    log = []
    warm = None
    for i in range(max_doublings + 1):
        res, p = _probe(model, impl, parameter, fixed, value, kind, space, optimizer, budget,
                        seed + i, warm)
        log.append(p)
        if not p.falsified:
            return value, log
        warm = p.theta
        value *= 2.0
    sym = "τ" if parameter == "eps" else "ε"
    raise DegreeError(f"systems differ unboundedly at this {sym} (after {max_doublings} doublings)")


def initial_bracket(model, impl, tau: float, eps0: float, space: SearchSpace,
                    optimizer: OptimizerConfig | None = None, budget: int = 100, seed: int = 0,
                    *, max_doublings: int = 30, kind=Kind.SPATIAL):
    """Double ``eps0`` until a campaign at ``(tau, eps)`` finds no violation.

    Returns ``(eps_h, log)``.
    """
    return _bracket(model, impl, "eps", tau, eps0, kind, space, optimizer, budget, seed,
                    max_doublings)


def initial_bracket_tau(model, impl, eps: float, tau0: float, space: SearchSpace,
                        optimizer: OptimizerConfig | None = None, budget: int = 100,
                        seed: int = 0, *, max_doublings: int = 30, kind=Kind.TEMPORAL):
    return _bracket(model, impl, "tau", eps, tau0, kind, space, optimizer, budget, seed,
                    max_doublings)


def _bisect(model, impl, parameter, fixed, K, low, high, kind, space, optimizer, budget, seed,
            check_upper):
    if K < 1:
        raise ValueError("K must be at least 1")
    lo, hi = Fraction(low), Fraction(high)
    if not (0 <= lo < hi):
        raise ValueError(f"need 0 <= lower < upper, got [{low}, {high}]")
    if check_upper:
        res, _ = _probe(model, impl, parameter, fixed, float(hi), kind, space, optimizer, budget,
                        seed, None)
        if res.falsified:
            raise DegreeError(
                f"precondition violated: a violation exists at the upper {parameter}={float(hi)}"
            )
    log, witness = [], None
    for i in range(K):
        mid = (lo + hi) / 2
        _, p = _probe(model, impl, parameter, fixed, float(mid), kind, space, optimizer, budget,
                      seed + 1 + i, witness)
        log.append(p)
        if p.falsified:
            lo, witness = mid, p.theta
        else:
            hi = mid
    return DegreeResult(parameter, fixed, lo, hi, K, log, witness)


def binary_search_epsilon(model, impl, tau: float, K: int, eps_h: float, space: SearchSpace,
                          optimizer: OptimizerConfig | None = None, budget: int = 100,
                          seed: int = 0, *, eps_l: float = 0.0, kind=Kind.SPATIAL,
                          check_upper: bool = True) -> DegreeResult:
    """``K`` bisection steps on ``[eps_l, eps_h]`` at fixed ``tau``.

    Each step warm-starts its campaign from the latest falsifying parameters.
    With ``check_upper`` a campaign at ``eps_h`` first confirms that no
    violation is found there.
    """
    return _bisect(model, impl, "eps", tau, K, eps_l, eps_h, kind, space, optimizer, budget,
                   seed, check_upper)


def binary_search_tau(model, impl, eps: float, K: int, tau_h: float, space: SearchSpace,
                      optimizer: OptimizerConfig | None = None, budget: int = 100,
                      seed: int = 0, *, tau_l: float = 0.0, kind=Kind.TEMPORAL,
                      check_upper: bool = True) -> DegreeResult:
    return _bisect(model, impl, "tau", eps, K, tau_l, tau_h, kind, space, optimizer, budget,
                   seed, check_upper)


@dataclass
class ParetoPoint:
    tau: float
    eps_h: float | None
    status: str
    result: DegreeResult | None = None


def pareto_front(model, impl, tau_grid: Sequence[float], K: int, space: SearchSpace,
                 optimizer: OptimizerConfig | None = None, budget: int = 100, seed: int = 0,
                 *, eps0: float = 1.0, max_doublings: int = 30, workers: int = 1,
                 kind=Kind.SPATIAL) -> list[ParetoPoint]:
    """Bracket and bisect eps at every grid point.

    Failures at one grid point are reported in its ``status`` and do not stop
    the others.
    """
    grid = [float(t) for t in tau_grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("tau grid must be strictly increasing")

    def one(tau):
        try:
            eps_h, _ = initial_bracket(model, impl, tau, eps0, space, optimizer, budget, seed,
                                       max_doublings=max_doublings, kind=kind)
            res = binary_search_epsilon(model, impl, tau, K, eps_h, space, optimizer, budget,
                                        seed, kind=kind, check_upper=False)
            return ParetoPoint(tau, float(res.upper), "ok", res)
        except (DegreeError, RuntimeError, ValueError) as exc:
            return ParetoPoint(tau, None, f"error: {exc}")

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(one, grid))
    return [one(t) for t in grid]

