"""Spatial and temporal robustness of MTL formulas over sampled signals.

Both evaluators compute the robustness of every subformula at every sample
(dynamic programming over the formula tree).  Temporal operators quantify
over sample indices ``k >= i`` whose time offset ``t_k - t_i`` lies in the
operator interval; ``sup`` of an empty set is ``-inf`` and ``inf`` of an empty
set is ``+inf``.  Unbounded ``Until`` costs O(N^2) per node.

Spatial and temporal evaluation differ only at the atoms: spatial atoms give
the signed distance of the sample to the predicate set, temporal atoms give
``min(theta-, theta+)``, the signed length of the constant-truth run around
the sample.
"""
from __future__ import annotations

import enum

import numpy as np

from ..tss import shift_indices
from .formula import (
    Always,
    And,
    Atom,
    Compare,
    Custom,
    Eventually,
    Formula,
    Implies,
    Interval,
    ModeDiffers,
    ModeEquals,
    NormLessThan,
    Not,
    Or,
    Prop,
    TrueF,
    Until,
)
from .signal import Signal, as_signal

INF = np.inf


class Kind(str, enum.Enum):
    SPATIAL = "spatial"
    TEMPORAL = "temporal"


def spatial_robustness(phi: Formula, trace, t: float | None = None, *, norm=2) -> float:
    """Spatial robustness of ``phi`` at sample time ``t`` (default: first sample)."""
    return _at(phi, trace, t, Kind.SPATIAL, norm)


def temporal_robustness(phi: Formula, trace, t: float | None = None, *, norm=2) -> float:
    """Temporal robustness of ``phi`` at sample time ``t`` (default: first sample)."""
    return _at(phi, trace, t, Kind.TEMPORAL, norm)


def robustness(phi: Formula, trace, t: float | None = None, *, kind=Kind.SPATIAL, norm=2) -> float:
    return _at(phi, trace, t, Kind(kind), norm)


def _at(phi, trace, t, kind, norm) -> float:
    sig = as_signal(trace)
    i = 0 if t is None else sig.index_of(t)
    return float(evaluate(phi, sig, kind, norm)[i])


def evaluate(phi: Formula, sig: Signal, kind=Kind.SPATIAL, norm=2) -> np.ndarray:
    """Robustness of ``phi`` at every sample of ``sig``."""
    return _Evaluator(sig, Kind(kind), norm).eval(phi)


# ------------------------------------------------------------------- atoms


def _norm(diff: np.ndarray, norm) -> np.ndarray:
    if norm == 2:
        return np.sqrt(np.einsum("...i,...i->...", diff, diff))
    return np.linalg.norm(diff, ord=norm, axis=-1)


def _channel_with_mask(sig: Signal, name: str, shift: int = 0):
    arr = sig.channel(name)
    mask = sig.mask(name)
    if shift:
        src, _ = shift_indices(len(arr), shift)
        arr = arr[src]
        mask = None if mask is None else mask[src]
    return arr, mask


def norm_distances(preds: list[NormLessThan], sig: Signal, norm=2) -> np.ndarray:
    """Norm values ``d`` of several norm atoms at once, shape ``(m, N)``."""
    out = np.empty((len(preds), len(sig)))
    groups: dict[tuple, list[int]] = {}
    for i, p in enumerate(preds):
        groups.setdefault((p.lhs, p.shift), []).append(i)
    for (lhs, _), members in groups.items():
        left, lmask = _channel_with_mask(sig, lhs)
        with_rhs = [i for i in members if preds[i].rhs is not None]
        without = [i for i in members if preds[i].rhs is None]
        if without:
            d = _norm(left, norm)
            if lmask is not None:
                d = np.where(lmask, INF, d)
            out[without] = d
        if with_rhs:
            rights, rmasks = [], []
            for i in with_rhs:
                r, m = _channel_with_mask(sig, preds[i].rhs, preds[i].shift)
                if r.shape[1] != left.shape[1]:
                    raise ValueError(
                        f"dimension mismatch between {lhs!r} and {preds[i].rhs!r}"
                    )
                rights.append(r)
                rmasks.append(m)
            stack = np.stack(rights)
            with np.errstate(invalid="ignore"):
                d = _norm(left[None, :, :] - stack, norm)
            bad = np.zeros(d.shape, dtype=bool)
            if lmask is not None:
                bad |= lmask[None, :]
            for row, m in enumerate(rmasks):
                if m is not None:
                    bad[row] |= m
            d[bad] = INF
            out[with_rhs] = d
    return out


def _scalar(sig: Signal, name: str) -> np.ndarray:
    arr, mask = _channel_with_mask(sig, name)
    if arr.shape[1] != 1:
        raise ValueError(f"channel {name!r} is {arr.shape[1]}-dimensional; compare needs a scalar")
    x = arr[:, 0]
    if mask is not None:
        x = np.where(mask, INF, x)
    return x


def _mode_rhs(sig: Signal, b) -> np.ndarray:
    return np.full(len(sig), b, dtype=np.int64) if isinstance(b, int) else sig.mode(b)


def truth(pred, sig: Signal, norm=2) -> np.ndarray:
    """Boolean value of an atomic predicate at every sample."""
    if isinstance(pred, NormLessThan):
        return norm_distances([pred], sig, norm)[0] < pred.eps
    if isinstance(pred, Compare):
        x = _scalar(sig, pred.channel)
        return {"<": x < pred.const, "<=": x <= pred.const,
                ">": x > pred.const, ">=": x >= pred.const}[pred.op]
    if isinstance(pred, ModeEquals):
        return sig.mode(pred.a) == _mode_rhs(sig, pred.b)
    if isinstance(pred, ModeDiffers):
        return sig.mode(pred.a) != _mode_rhs(sig, pred.b)
    if isinstance(pred, Prop):
        return _prop(sig, pred.name)
    if isinstance(pred, Custom):
        d = np.asarray(pred.signed_distance(sig.channel(pred.channel)), dtype=float)
        return d >= 0 if pred.closed else d > 0
    raise TypeError(f"unknown predicate {pred!r}")


def _prop(sig: Signal, name: str) -> np.ndarray:
    try:
        return np.asarray(sig.props[name], dtype=bool)
    except KeyError:
        raise KeyError(f"unknown proposition {name!r}; available: {sorted(sig.props)}") from None


def signed_distance(pred, sig: Signal, norm=2) -> np.ndarray:
    """Signed distance of every sample to the predicate set (spatial atom value).

    Discrete predicates (modes, propositions) cannot be changed by any finite
    perturbation of the continuous outputs and evaluate to +-inf.
    """
    if isinstance(pred, NormLessThan):
        return pred.eps - norm_distances([pred], sig, norm)[0]
    if isinstance(pred, Compare):
        x = _scalar(sig, pred.channel)
        return pred.const - x if pred.op in ("<", "<=") else x - pred.const
    if isinstance(pred, Custom):
        return np.asarray(pred.signed_distance(sig.channel(pred.channel)), dtype=float)
    return np.where(truth(pred, sig, norm), INF, -INF)


def time_robustness(b: np.ndarray, times: np.ndarray) -> np.ndarray:
    """``min(theta-, theta+)`` for Boolean rows ``b`` of shape ``(N,)`` or ``(m, N)``.

    ``theta-`` (``theta+``) is the time from the sample back to the start
    (forward to the end) of its constant-truth run, signed by the truth value.
    A run that reaches the trace boundary is measured to the boundary; a row
    that never changes truth value is ``+-inf``.
    """
    b = np.atleast_2d(np.asarray(b, dtype=bool))
    m, n = b.shape
    idx = np.broadcast_to(np.arange(n), (m, n))
    change = np.ones((m, n), dtype=bool)
    change[:, 1:] = b[:, 1:] != b[:, :-1]
    start = np.maximum.accumulate(np.where(change, idx, 0), axis=1)
    end_mark = np.ones((m, n), dtype=bool)
    end_mark[:, :-1] = change[:, 1:]
    end = np.minimum.accumulate(np.where(end_mark, idx, n - 1)[:, ::-1], axis=1)[:, ::-1]
    sign = np.where(b, 1.0, -1.0)
    back = times[None, :] - times[start]
    ahead = times[end] - times[None, :]
    theta = np.minimum(sign * back, sign * ahead)
    constant = ~change[:, 1:].any(axis=1)
    theta[constant] = sign[constant] * INF
    return theta


# ----------------------------------------------------------------- windows


def _covers_all(times: np.ndarray, iv: Interval) -> bool:
    span = times[-1] - times[0]
    return iv.lo == 0 and iv.lo_closed and bool(iv.contains(span))


def window_bounds(times: np.ndarray, iv: Interval) -> tuple[np.ndarray, np.ndarray]:
    """For each ``i`` the index range ``[lo, hi)`` of ``k >= i`` with ``t_k - t_i`` in ``iv``."""
    n = len(times)
    lo = np.empty(n, dtype=np.int64)
    hi = np.empty(n, dtype=np.int64)
    side_lo = "left" if iv.lo_closed else "right"
    side_hi = "right" if iv.hi_closed else "left"
    for i in range(n):
        diffs = times[i:] - times[i]
        lo[i] = i + np.searchsorted(diffs, iv.lo, side=side_lo)
        hi[i] = i + np.searchsorted(diffs, iv.hi, side=side_hi)
    return lo, hi


def _window_reduce(r: np.ndarray, times: np.ndarray, iv: Interval, maximum: bool) -> np.ndarray:
    acc = np.maximum if maximum else np.minimum
    empty = -INF if maximum else INF
    if _covers_all(times, iv):
        return acc.accumulate(r[::-1])[::-1].copy()
    lo, hi = window_bounds(times, iv)
    out = np.full(len(r), empty)
    red = np.max if maximum else np.min
    for i in range(len(r)):
        if hi[i] > lo[i]:
            out[i] = red(r[lo[i] : hi[i]])
    return out


def _until(r1: np.ndarray, r2: np.ndarray, times: np.ndarray, iv: Interval) -> np.ndarray:
    lo, hi = window_bounds(times, iv)
    out = np.full(len(r1), -INF)
    for i in range(len(r1)):
        if hi[i] <= lo[i]:
            continue
        # min of r1 over [i, k) for k in [i, hi)
        prefix = np.minimum.accumulate(r1[i : hi[i]])
        inner = np.concatenate(([INF], prefix[:-1]))
        a, b = lo[i] - i, hi[i] - i
        out[i] = np.max(np.minimum(r2[lo[i] : hi[i]], inner[a:b]))
    return out


# --------------------------------------------------------------- evaluator


class _Evaluator:
    def __init__(self, sig: Signal, kind: Kind, norm):
        self.sig = sig
        self.kind = kind
        self.norm = norm

    def atoms(self, preds: list) -> np.ndarray:
        """Atom robustness rows, shape ``(len(preds), N)``; norm atoms are batched."""
        sig = self.sig
        out = np.empty((len(preds), len(sig)))
        norm_idx = [i for i, p in enumerate(preds) if isinstance(p, NormLessThan)]
        if norm_idx:
            d = norm_distances([preds[i] for i in norm_idx], sig, self.norm)
            eps = np.array([preds[i].eps for i in norm_idx])[:, None]
            if self.kind is Kind.SPATIAL:
                out[norm_idx] = eps - d
            else:
                out[norm_idx] = time_robustness(d < eps, sig.times)
        for i, p in enumerate(preds):
            if isinstance(p, NormLessThan):
                continue
            if self.kind is Kind.SPATIAL:
                out[i] = signed_distance(p, sig, self.norm)
            else:
                out[i] = time_robustness(truth(p, sig, self.norm), sig.times)[0]
        return out

    def many(self, args) -> np.ndarray:
        rows = np.empty((len(args), len(self.sig)))
        atom_idx = [i for i, a in enumerate(args) if isinstance(a, Atom)]
        if atom_idx:
            rows[atom_idx] = self.atoms([args[i].pred for i in atom_idx])
        for i, a in enumerate(args):
            if not isinstance(a, Atom):
                rows[i] = self.eval(a)
        return rows

    def eval(self, phi: Formula) -> np.ndarray:
        sig = self.sig
        if isinstance(phi, TrueF):
            return np.full(len(sig), INF)
        if isinstance(phi, Atom):
            return self.atoms([phi.pred])[0]
        if isinstance(phi, Not):
            return -self.eval(phi.arg)
        if isinstance(phi, Or):
            return self.many(phi.args).max(axis=0)
        if isinstance(phi, And):
            return self.many(phi.args).min(axis=0)
        if isinstance(phi, Implies):
            return np.maximum(-self.eval(phi.left), self.eval(phi.right))
        if isinstance(phi, Eventually):
            return _window_reduce(self.eval(phi.arg), sig.times, phi.interval, True)
        if isinstance(phi, Always):
            return _window_reduce(self.eval(phi.arg), sig.times, phi.interval, False)
        if isinstance(phi, Until):
            return _until(self.eval(phi.left), self.eval(phi.right), sig.times, phi.interval)
        raise TypeError(f"not a formula: {phi!r}")

