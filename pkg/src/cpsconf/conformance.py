"""(T, J, (tau, eps))-closeness of two traces.

Two routes decide closeness:

* :func:`is_close`, :func:`epsilon_star` and :func:`tau_star` check the
  definition directly: every sample (with ``t <= T`` and ``j <= J``) of either
  trace needs a sample on the other trace with the same jump counter, less
  than ``tau`` away in time and less than ``eps`` away in value.
* :func:`conformance_robustness` encodes the same condition as an MTL formula
  over shifted copies of the traces and evaluates its robustness with
  :mod:`cpsconf.monitor`.  Positive robustness means close.

Sample indices in witnesses are 1-based, matching row numbers of the trace
CSV files.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .monitor import Always, Atom, Eventually, Implies, Interval, ModeDiffers, ModeEquals
from .monitor import NormLessThan, Signal, any_of, all_of
from .monitor.robustness import Kind, evaluate
from .tss import (
    FillPolicy,
    ParallelTrace,
    TimedStateSequence,
    TraceError,
    _segments,
    parallel_concat,
    shift_matrix,
    window_count,
)

INF = math.inf


@dataclass(frozen=True)
class ClosenessParams:
    T: float
    J: int
    tau: float
    eps: float

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("T must be positive")
        if self.J < 0:
            raise ValueError("J must be non-negative")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if not self.eps > 0:
            raise ValueError("eps must be positive")


@dataclass(frozen=True)
class Witness:
    index: int  # 1-based
    side: Literal["a", "b"]
    t: float
    j: int


@dataclass(frozen=True)
class ConformanceVerdict:
    close: bool
    witness: Witness | None = None
    robustness: float | None = None

    def __post_init__(self):
        if not self.close and self.witness is None:
            raise ValueError("a negative verdict needs a witness")


# ------------------------------------------------------------ direct route


def _check_dims(a: TimedStateSequence, b: TimedStateSequence):
    if a.dim != b.dim:
        raise TraceError(f"output dimensions differ: {a.dim} vs {b.dim}")


def _distances(y: np.ndarray, ys: np.ndarray, norm) -> np.ndarray:
    diff = ys - y
    if norm == 2:
        return np.sqrt(np.einsum("ij,ij->i", diff, diff))
    return np.linalg.norm(diff, ord=norm, axis=1)


class _Partners:
    """Samples of one trace grouped by jump counter, for window lookups."""

    def __init__(self, tss: TimedStateSequence):
        self.groups = {}
        for j in np.unique(tss.jumps):
            idx = np.flatnonzero(tss.jumps == j)
            self.groups[int(j)] = (tss.times[idx], tss.values[idx], tss.infinite_mask[idx])

    def candidates(self, t: float, j: int, tau: float | None):
        """Times, values and sentinel flags of same-j samples with ``|t - s| < tau``."""
        group = self.groups.get(j)
        if group is None:
            return None
        times, values, inf = group
        if tau is None:
            return times, values, inf
        # widen by a few ulps, then apply the exact strict test
        lo = np.searchsorted(times, t - tau * (1 + 1e-12), side="left")
        hi = np.searchsorted(times, t + tau * (1 + 1e-12), side="right")
        s = times[lo:hi]
        keep = np.abs(t - s) < tau
        return s[keep], values[lo:hi][keep], inf[lo:hi][keep]


def _eligible(tss: TimedStateSequence, T: float, J: int) -> np.ndarray:
    return np.flatnonzero((tss.times <= T) & (tss.jumps <= J))


def _nearest_in_window(a, b, tau, T, J, norm) -> np.ndarray:
    """For each eligible sample of ``a``: smallest distance to a partner on ``b``."""
    partners = _Partners(b)
    idx = _eligible(a, T, J)
    out = np.full(len(idx), INF)
    for n, i in enumerate(idx):
        if a.infinite is not None and a.infinite[i]:
            continue
        cand = partners.candidates(a.times[i], int(a.jumps[i]), tau)
        if cand is None or len(cand[0]) == 0:
            continue
        _, values, inf = cand
        d = _distances(a.values[i], values, norm)
        d[inf] = INF
        out[n] = d.min()
    return out


def is_close(
    model: TimedStateSequence,
    impl: TimedStateSequence,
    params: ClosenessParams,
    *,
    norm=2,
) -> ConformanceVerdict:
    """Check closeness sample by sample; the first violating sample is the witness."""
    _check_dims(model, impl)
    for side, a, b in (("a", model, impl), ("b", impl, model)):
        partners = _Partners(b)
        for i in _eligible(a, params.T, params.J):
            ok = False
            if a.infinite is None or not a.infinite[i]:
                cand = partners.candidates(a.times[i], int(a.jumps[i]), params.tau)
                if cand is not None and len(cand[0]):
                    _, values, inf = cand
                    d = _distances(a.values[i], values, norm)
                    ok = bool(np.any((d < params.eps) & ~inf))
            if not ok:
                w = Witness(int(i) + 1, side, float(a.times[i]), int(a.jumps[i]))
                return ConformanceVerdict(False, w)
    return ConformanceVerdict(True)


def epsilon_star(model, impl, tau: float, T: float, J: int, *, norm=2) -> float:
    """Smallest eps (as an infimum) for which the traces are (tau, eps)-close.

    ``max`` over both traces and their samples of the ``min`` distance to a
    same-j partner less than ``tau`` away; ``inf`` if some sample has no
    partner at all.  Closeness holds for every ``eps`` above this value and
    fails for every ``eps`` at or below it.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    _check_dims(model, impl)
    worst = 0.0
    for a, b in ((model, impl), (impl, model)):
        d = _nearest_in_window(a, b, tau, T, J, norm)
        if len(d):
            worst = max(worst, float(d.max()))
    return worst


def tau_star(model, impl, eps: float, T: float, J: int, *, norm=2) -> float:
    """Smallest tau (as an infimum) for which the traces are (tau, eps)-close."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    _check_dims(model, impl)
    worst = 0.0
    for a, b in ((model, impl), (impl, model)):
        partners = _Partners(b)
        for i in _eligible(a, T, J):
            cand = partners.candidates(a.times[i], int(a.jumps[i]), None)
            if cand is None or (a.infinite is not None and a.infinite[i]):
                return INF
            times, values, inf = cand
            d = _distances(a.values[i], values, norm)
            good = (d < eps) & ~inf
            if not good.any():
                return INF
            worst = max(worst, float(np.abs(times[good] - a.times[i]).min()))
    return worst


# --------------------------------------------------------- formula route


@functools.lru_cache(maxsize=256)
def _window_formula(c: int, eps: float, T: float):
    """``[]_[0,T] OR_{k=-c..c} (|y - other@k| < eps)``."""
    disj = any_of(Atom(NormLessThan("y", f"other@{k}", eps)) for k in range(-c, c + 1))
    return Always(disj, Interval(0.0, T))


def closeness_formula(n: int, m: int, eps: float, T: float):
    """Closeness as one formula over ``Signal.from_parallel`` channels.

    ``[]_[0,T] (p1 /\\ p2)`` where ``p1`` compares ``yM`` with the shifts
    ``-n..n`` of ``yI`` and ``p2`` compares ``yI`` with the shifts ``-m..m``
    of ``yM``.  Shifts are applied by the monitor with constant-interpolation
    fill, so this is the real-timed construction on a shared sampling grid.
    """
    p1 = any_of(Atom(NormLessThan("yM", "yI", eps, k)) for k in range(-n, n + 1))
    p2 = any_of(Atom(NormLessThan("yI", "yM", eps, k)) for k in range(-m, m + 1))
    return Always(all_of((p1, p2)), Interval(0.0, T))


def _place(seg: TimedStateSequence, pos: np.ndarray, size: int):
    values = np.zeros((size, seg.dim))
    inf = np.ones(size, dtype=bool)
    values[pos] = seg.values
    inf[pos] = seg.infinite_mask
    return values, inf


def _one_side(base, pos_base, other_vals, other_inf, src, filler, fill, c, eps, T, kind, norm):
    """Robustness of ``[]_[0,T] OR_k |y - (S_k other)| < eps`` on ``base``'s samples."""
    sig = Signal(base.times)
    sig.channels["y"] = base.values
    if base.infinite is not None:
        sig.infinite["y"] = base.infinite
    rows = src[pos_base]
    gathered = other_vals[rows]  # (n_base, 2c+1, d)
    flags = other_inf[rows]
    if fill is FillPolicy.INFINITY:
        flags = flags | filler[pos_base]
    for col, k in enumerate(range(-c, c + 1)):
        name = f"other@{k}"
        sig.channels[name] = gathered[:, col, :]
        if flags[:, col].any():
            sig.infinite[name] = flags[:, col]
    return float(evaluate(_window_formula(c, eps, T), sig, kind, norm)[0])


def conformance_robustness(
    parallel: ParallelTrace,
    tau: float,
    eps: float,
    kind: Kind | str = Kind.SPATIAL,
    *,
    norm=2,
) -> float:
    """Robustness of the closeness formula for a model/implementation pair.

    Both traces are laid out on their common time axis (the union of their
    distinct timestamps); ``c`` is the window count of that axis for ``tau``.
    For each model sample the formula asks for some shift ``k`` in
    ``-c..c`` of the implementation trace that is within ``eps``, and
    symmetrically for each implementation sample.  Traces with jumps are cut
    into constant-``j`` segments; segments with equal ``j`` are compared with
    infinitely-far filler past the segment ends, and the result is the
    minimum over segments.  A segment without a counterpart gives ``-inf``.
    Without jumps the filler is the boundary sample.
    """
    kind = Kind(kind)
    if not tau > 0 or not eps > 0:
        raise ValueError("tau and eps must be positive")
    model, impl = parallel.model, parallel.impl
    T = parallel.horizon
    axis = np.unique(np.concatenate([model.times, impl.times]))
    c = window_count(axis, tau)
    c = min(c, len(axis) - 1)
    hybrid = model.is_hybrid or impl.is_hybrid
    fill = FillPolicy.INFINITY if hybrid else FillPolicy.CONSTANT
    segs_m = dict(_segments(model))
    segs_i = dict(_segments(impl))
    if set(segs_m) != set(segs_i):
        return -INF
    src, filler = shift_matrix(len(axis), range(-c, c + 1))
    result = INF
    for j in sorted(segs_m):
        gm, gi = segs_m[j], segs_i[j]
        pos_m = np.searchsorted(axis, gm.times)
        pos_i = np.searchsorted(axis, gi.times)
        vm, im = _place(gm, pos_m, len(axis))
        vi, ii = _place(gi, pos_i, len(axis))
        r1 = _one_side(gm, pos_m, vi, ii, src, filler, fill, c, eps, T, kind, norm)
        r2 = _one_side(gi, pos_i, vm, im, src, filler, fill, c, eps, T, kind, norm)
        result = min(result, r1, r2)
    return result


def check(model, impl, params: ClosenessParams, kind=Kind.SPATIAL, *, norm=2) -> ConformanceVerdict:
    """Direct verdict annotated with the formula robustness of the truncated pair."""
    verdict = is_close(model, impl, params, norm=norm)
    pt = parallel_concat(model, impl, params.T, params.J)
    r = conformance_robustness(pt, params.tau, params.eps, kind, norm=norm)
    return ConformanceVerdict(verdict.close, verdict.witness, r)


def build_pwc_formula(D: float, T: float, model_mode: str = "lM", impl_mode: str = "lI"):
    """Mode divergence heals within ``D``: ``[]_[0,T-D] (l != l' -> <>_[0,D] l == l')``."""
    if not D > 0:
        raise ValueError("D must be positive")
    if D >= T:
        raise ValueError(f"D={D} must be smaller than T={T}")
    return Always(
        Implies(
            Atom(ModeDiffers(model_mode, impl_mode)),
            Eventually(Atom(ModeEquals(model_mode, impl_mode)), Interval(0.0, D)),
        ),
        Interval(0.0, T - D),
    )
