"""Timed state sequences.

A timed state sequence (TSS) is a finite list of output samples, each paired
with a hybrid timestamp ``(t, j)``: ``t`` is time in seconds and ``j`` counts
the discrete jumps taken so far.  A purely sampled signal is the special case
``j = 1`` everywhere.

Besides the container types this module provides the discrete shift operator,
the window count used to size shifted comparisons, jump segmentation,
parallel concatenation, and the trace CSV format.
"""
from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np


class TraceError(ValueError):
    """A trace violates the timed-state-sequence invariants."""


class HybridTimestamp(NamedTuple):
    t: float
    j: int


class FillPolicy(enum.Enum):
    CONSTANT = "constant"
    INFINITY = "infinity"


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TimedStateSequence:
    """Sampled output trajectory.

    ``values`` has shape ``(N, dim)``.  ``infinite`` flags samples that stand
    for the "+infinity vector" filler: any distance involving such a sample is
    ``+inf``.  ``modes`` is an optional integer label per sample.
    """

    times: np.ndarray
    jumps: np.ndarray
    values: np.ndarray
    modes: np.ndarray | None = None
    infinite: np.ndarray | None = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).reshape(-1)
        jumps = np.asarray(self.jumps, dtype=np.int64).reshape(-1)
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values.reshape(-1, 1)
        n = len(times)
        if n == 0:
            raise TraceError("empty trace")
        if values.ndim != 2 or len(values) != n or len(jumps) != n:
            raise TraceError(
                f"length mismatch: {n} times, {len(jumps)} jump counters, "
                f"{len(values)} values"
            )
        if not np.all(np.isfinite(times)) or np.any(times < 0):
            raise TraceError("timestamps must be finite and non-negative")
        if np.any(jumps < 0):
            raise TraceError("jump counters must be non-negative")
        dt = np.diff(times)
        dj = np.diff(jumps)
        if np.any(dt < 0):
            i = int(np.argmax(dt < 0))
            raise TraceError(f"timestamps decrease at sample {i + 1}")
        if np.any(dj < 0):
            i = int(np.argmax(dj < 0))
            raise TraceError(f"jump counter decreases at sample {i + 1}")
        same_t = dt == 0
        if np.any(same_t & (dj <= 0)):
            i = int(np.argmax(same_t & (dj <= 0)))
            raise TraceError(f"repeated timestamp without a jump at sample {i + 1}")
        modes = self.modes
        if modes is not None:
            modes = np.asarray(modes, dtype=np.int64).reshape(-1)
            if len(modes) != n:
                raise TraceError("modes length differs from trace length")
            modes = _frozen(modes)
        inf = self.infinite
        if inf is not None:
            inf = np.asarray(inf, dtype=bool).reshape(-1)
            if len(inf) != n:
                raise TraceError("infinite-flag length differs from trace length")
            inf = _frozen(inf) if inf.any() else None
        object.__setattr__(self, "times", _frozen(times))
        object.__setattr__(self, "jumps", _frozen(jumps))
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "infinite", inf)

    @classmethod
    def real(cls, times, values, modes=None) -> TimedStateSequence:
        """Real-timed sequence: every jump counter equals 1."""
        times = np.asarray(times, dtype=float).reshape(-1)
        return cls(times, np.ones(len(times), dtype=np.int64), values, modes)

    def __len__(self) -> int:
        return len(self.times)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def timestamps(self) -> list[HybridTimestamp]:
        return [HybridTimestamp(float(t), int(j)) for t, j in zip(self.times, self.jumps)]

    @property
    def is_hybrid(self) -> bool:
        return bool(np.any(self.jumps != self.jumps[0]))

    @property
    def infinite_mask(self) -> np.ndarray:
        if self.infinite is None:
            return np.zeros(len(self), dtype=bool)
        return self.infinite

    def take(self, idx) -> TimedStateSequence:
        idx = np.asarray(idx)
        fields = (
            self.times[idx],
            self.jumps[idx],
            self.values[idx],
            None if self.modes is None else self.modes[idx],
            None if self.infinite is None else self.infinite[idx],
        )
        if idx.ndim == 1 and len(idx) and np.all(np.diff(idx) > 0):
            # an increasing subsequence of a valid trace is valid
            return TimedStateSequence._trusted(*fields)
        return TimedStateSequence(*fields)

    @classmethod
    def _trusted(cls, times, jumps, values, modes=None, infinite=None) -> TimedStateSequence:
        obj = object.__new__(cls)
        if infinite is not None and not infinite.any():
            infinite = None
        for name, a in (("times", times), ("jumps", jumps), ("values", values),
                        ("modes", modes), ("infinite", infinite)):
            if a is not None:
                a.setflags(write=False)
            object.__setattr__(obj, name, a)
        return obj

    def with_jumps(self, jumps) -> TimedStateSequence:
        return TimedStateSequence(self.times, jumps, self.values, self.modes, self.infinite)

    def equals(self, other: TimedStateSequence) -> bool:
        """Exact (bitwise) equality of all fields."""
        if len(self) != len(other) or self.dim != other.dim:
            return False
        if (self.modes is None) != (other.modes is None):
            return False
        return (
            np.array_equal(self.times, other.times)
            and np.array_equal(self.jumps, other.jumps)
            and np.array_equal(self.values, other.values)
            and np.array_equal(self.infinite_mask, other.infinite_mask)
            and (self.modes is None or np.array_equal(self.modes, other.modes))
        )

    def __repr__(self) -> str:
        return (
            f"TimedStateSequence(n={len(self)}, dim={self.dim}, "
            f"t=[{self.times[0]:g}..{self.times[-1]:g}], "
            f"j=[{self.jumps[0]}..{self.jumps[-1]}])"
        )


TSS = TimedStateSequence


@dataclass(frozen=True, eq=False)
class ParallelTrace:
    """Model and implementation traces of the same test, truncated to (T, J)."""

    model: TimedStateSequence
    impl: TimedStateSequence
    horizon: float
    max_jumps: int

    def __post_init__(self):
        if self.model.dim != self.impl.dim:
            raise TraceError(
                f"output dimensions differ: model {self.model.dim}, impl {self.impl.dim}"
            )


# --------------------------------------------------------------------------
# shift operator


def shift_indices(n: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Source index and filler flag for each position of a k-shifted sequence.

    Positive ``k`` moves the sequence left (future samples come into view),
    negative ``k`` moves it right.  Positions past either end are fillers and
    point at the nearest boundary sample.
    """
    src = np.arange(n) + k
    filler = (src < 0) | (src >= n)
    return np.clip(src, 0, n - 1), filler


def shift_matrix(n: int, ks: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`shift_indices` for several shifts; arrays are (n, len(ks))."""
    src = np.arange(n)[:, None] + np.asarray(ks, dtype=np.int64)[None, :]
    filler = (src < 0) | (src >= n)
    return np.clip(src, 0, n - 1), filler


def shift(
    tss: TimedStateSequence,
    k: int,
    fill: FillPolicy = FillPolicy.CONSTANT,
    horizon: float | None = None,
) -> TimedStateSequence:
    """Discrete shift of a trace by ``k`` samples.

    For ``k > 0`` the first ``k`` samples are dropped, ``k`` fillers are
    appended and the appended timestamps continue past the last one in steps
    of ``horizon / N``.  For ``k < 0`` ``|k|`` fillers are prepended, the tail
    is cut and the timestamps are left unchanged.  Fillers repeat the boundary
    sample (``CONSTANT``) or are flagged as infinitely far (``INFINITY``).
    """
    n = len(tss)
    if abs(k) >= n:
        raise TraceError(f"shift exceeds trace length: |{k}| >= {n}")
    if k == 0:
        return tss
    src, filler = shift_indices(n, k)
    values = tss.values[src]
    inf = tss.infinite_mask[src].copy()
    if fill is FillPolicy.INFINITY:
        inf |= filler
    modes = None if tss.modes is None else tss.modes[src]
    if k > 0:
        if horizon is None:
            raise ValueError("a positive shift needs the horizon to extend timestamps")
        step = horizon / n
        t_last = tss.times[-1]
        times = np.concatenate([tss.times[k:], t_last + step * np.arange(1, k + 1)])
        jumps = np.concatenate([tss.jumps[k:], np.full(k, tss.jumps[-1])])
    else:
        times = tss.times
        jumps = tss.jumps
    return TimedStateSequence(times, jumps, values, modes, inf)


# --------------------------------------------------------------------------
# window count


def window_count(tss: TimedStateSequence | np.ndarray, tau: float) -> int:
    """Smallest number of extra samples inside a forward window shorter than ``tau``.

    For every eligible start index ``i`` this counts ``k - i`` where ``k`` is
    the last index with ``|t_k - t_i| < tau``; the minimum over eligible
    starts is returned.  A start is eligible when its whole window lies
    inside the trace, ``t_i + tau <= t_N``.  If no start is eligible the count
    of the first window is returned.
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    times = tss.times if isinstance(tss, TimedStateSequence) else np.asarray(tss, float)
    if len(times) <= 1 or times[-1] == times[0]:
        raise TraceError("Zeno or degenerate trace: fewer than two distinct timestamps")
    n = len(times)
    idx = np.arange(n)
    # last index with t_k - t_i < tau; searching for t_i + tau can be off by
    # rounding, so nudge until the difference test itself agrees
    last = np.searchsorted(times, times + tau, side="left") - 1
    while True:
        up = (last + 1 < n) & (times[np.minimum(last + 1, n - 1)] - times < tau)
        down = (last > idx) & (times[last] - times >= tau)
        if not (up.any() or down.any()):
            break
        last = last + up - down
    counts = last - idx
    eligible = times + tau <= times[-1]
    if not eligible.any():
        return int(counts[0])
    return int(counts[eligible].min())


# --------------------------------------------------------------------------
# segmentation and concatenation


def segment_by_jumps(tss: TimedStateSequence) -> list[TimedStateSequence]:
    """Split a hybrid trace into maximal runs of constant jump counter.

    Each segment is returned as a real-timed sequence (``j = 1``); the original
    counter of a segment is ``tss.jumps[start]``.
    """
    return [seg.with_jumps(np.ones(len(seg), dtype=np.int64)) for _, seg in _segments(tss)]


def _segments(tss: TimedStateSequence) -> list[tuple[int, TimedStateSequence]]:
    """Segments with their original jump counter, in trace order."""
    breaks = np.flatnonzero(np.diff(tss.jumps)) + 1
    bounds = np.concatenate([[0], breaks, [len(tss)]])
    return [
        (int(tss.jumps[a]), tss.take(np.arange(a, b)))
        for a, b in zip(bounds[:-1], bounds[1:])
    ]


def truncate(tss: TimedStateSequence, horizon: float, max_jumps: int) -> TimedStateSequence:
    keep = (tss.times <= horizon) & (tss.jumps <= max_jumps)
    # both coordinates are non-decreasing, so the kept samples form a prefix
    n = int(np.argmin(keep)) if not keep.all() else len(tss)
    if n == 0:
        raise TraceError(
            f"no samples within horizon T={horizon} and J={max_jumps} "
            f"(first sample at t={tss.times[0]}, j={tss.jumps[0]})"
        )
    return tss if n == len(tss) else tss.take(np.arange(n))


def parallel_concat(
    model: TimedStateSequence,
    impl: TimedStateSequence,
    horizon: float,
    max_jumps: int,
) -> ParallelTrace:
    if model.dim != impl.dim:
        raise TraceError(f"output dimensions differ: model {model.dim}, impl {impl.dim}")
    return ParallelTrace(
        truncate(model, horizon, max_jumps),
        truncate(impl, horizon, max_jumps),
        float(horizon),
        int(max_jumps),
    )


# --------------------------------------------------------------------------
# CSV format: header t[,j][,mode],y1,...,yn


def read_csv(source: str | Path | io.TextIOBase) -> TimedStateSequence:
    if isinstance(source, (str, Path)):
        with open(source, newline="", encoding="utf-8") as fh:
            return read_csv(fh)
    reader = csv.reader(source)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise TraceError("empty CSV file") from None
    if not header or header[0] != "t":
        raise TraceError("CSV header must start with 't'")
    has_j = "j" in header
    has_mode = "mode" in header
    ycols = [h for h in header if h not in ("t", "j", "mode")]
    expected = [f"y{i}" for i in range(1, len(ycols) + 1)]
    if not ycols or (ycols != expected and ycols != ["y"]):
        raise TraceError(f"output columns must be y1..yn (or a single y), got {ycols}")
    col = {h: i for i, h in enumerate(header)}
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise TraceError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
        rows.append(row)
    if not rows:
        raise TraceError("CSV file has no samples")
    try:
        times = [float(r[col["t"]]) for r in rows]
        jumps = [int(r[col["j"]]) for r in rows] if has_j else [1] * len(rows)
        modes = [int(r[col["mode"]]) for r in rows] if has_mode else None
        values = [[float(r[col[c]]) for c in ycols] for r in rows]
    except ValueError as exc:
        raise TraceError(f"malformed number in CSV: {exc}") from None
    return TimedStateSequence(times, jumps, values, modes)


def _fmt(x: float) -> str:
    return repr(float(x)) if math.isfinite(x) else ("inf" if x > 0 else "-inf")


def write_csv(tss: TimedStateSequence, dest: str | Path | io.TextIOBase) -> None:
    if isinstance(dest, (str, Path)):
        with open(dest, "w", newline="", encoding="utf-8") as fh:
            write_csv(tss, fh)
        return
    w = csv.writer(dest, lineterminator="\n")
    header = ["t", "j"] + (["mode"] if tss.modes is not None else [])
    header += [f"y{i}" for i in range(1, tss.dim + 1)]
    w.writerow(header)
    for i in range(len(tss)):
        row = [_fmt(tss.times[i]), str(int(tss.jumps[i]))]
        if tss.modes is not None:
            row.append(str(int(tss.modes[i])))
        row += [_fmt(v) for v in tss.values[i]]
        w.writerow(row)


def from_rows(rows: Iterable[Sequence[float]]) -> TimedStateSequence:
    """Build a real-timed trace from ``(t, y1, ..., yn)`` tuples."""
    arr = np.asarray(list(rows), dtype=float)
    return TimedStateSequence.real(arr[:, 0], arr[:, 1:])
