"""Multi-channel sampled signals, the input of the MTL evaluators."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..tss import ParallelTrace, TimedStateSequence, TraceError


@dataclass
class Signal:
    """Named channels sampled on one time axis.

    ``channels`` maps a name to an ``(N, d)`` float array, ``infinite`` maps a
    channel name to an ``(N,)`` mask of sentinel samples, ``modes`` maps a
    name to integer labels and ``props`` to Boolean propositions.
    """

    times: np.ndarray
    channels: dict[str, np.ndarray] = field(default_factory=dict)
    infinite: dict[str, np.ndarray] = field(default_factory=dict)
    modes: dict[str, np.ndarray] = field(default_factory=dict)
    props: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.times.ndim != 1 or len(self.times) == 0:
            raise TraceError("a signal needs at least one sample")
        if np.any(np.diff(self.times) < 0):
            raise TraceError("signal timestamps must be non-decreasing")

    def __len__(self) -> int:
        return len(self.times)

    def channel(self, name: str) -> np.ndarray:
        try:
            return self.channels[name]
        except KeyError:
            raise KeyError(
                f"unknown channel {name!r}; available: {sorted(self.channels)}"
            ) from None

    def mask(self, name: str) -> np.ndarray | None:
        return self.infinite.get(name)

    def mode(self, name: str) -> np.ndarray:
        try:
            return self.modes[name]
        except KeyError:
            raise KeyError(
                f"predicate references missing mode channel {name!r}; "
                f"available: {sorted(self.modes)}"
            ) from None

    def index_of(self, t: float) -> int:
        hits = np.flatnonzero(self.times == t)
        if len(hits) == 0:
            raise ValueError(f"time {t} is not on the sample grid")
        return int(hits[0])

    @classmethod
    def from_tss(cls, tss: TimedStateSequence, prefix: str = "") -> Signal:
        """Channels ``y`` (full vector), ``y1..yn`` and mode channel ``l``/``mode``."""
        sig = cls(tss.times.copy())
        _add_trace_channels(sig, tss, np.arange(len(tss)), "y" + prefix, prefix)
        if tss.modes is not None:
            sig.modes["l" + prefix] = tss.modes
            if not prefix:
                sig.modes["mode"] = tss.modes
        return sig

    @classmethod
    def from_parallel(cls, pt: ParallelTrace) -> Signal:
        """Index-aligned signal over a shared sampling grid.

        Channels ``yM``/``yI`` (and components ``yM1``...), mode channels
        ``lM``/``lI``.  Zero-time jumps are collapsed: at a repeated
        timestamp the last sample (after all jumps) is kept.  Both traces
        must have the same distinct timestamps.
        """
        tm, ti = _collapse(pt.model), _collapse(pt.impl)
        if len(tm) != len(ti) or not np.array_equal(pt.model.times[tm], pt.impl.times[ti]):
            raise TraceError("model and implementation traces do not share a sampling grid")
        sig = cls(pt.model.times[tm].copy())
        _add_trace_channels(sig, pt.model, tm, "yM", "M")
        _add_trace_channels(sig, pt.impl, ti, "yI", "I")
        if pt.model.modes is not None:
            sig.modes["lM"] = pt.model.modes[tm]
        if pt.impl.modes is not None:
            sig.modes["lI"] = pt.impl.modes[ti]
        return sig


def _collapse(tss: TimedStateSequence) -> np.ndarray:
    """Index of the last sample at each distinct timestamp."""
    t = tss.times
    last = np.ones(len(t), dtype=bool)
    last[:-1] = t[1:] != t[:-1]
    return np.flatnonzero(last)


def _add_trace_channels(sig: Signal, tss: TimedStateSequence, idx, name: str, suffix: str):
    vals = tss.values[idx]
    sig.channels[name] = vals
    if tss.infinite is not None:
        sig.infinite[name] = tss.infinite[idx]
    base = "y" + suffix
    for c in range(tss.dim):
        comp = f"{base}{c + 1}"
        sig.channels[comp] = vals[:, c : c + 1]
        if tss.infinite is not None:
            sig.infinite[comp] = tss.infinite[idx]


def as_signal(trace) -> Signal:
    if isinstance(trace, Signal):
        return trace
    if isinstance(trace, ParallelTrace):
        return Signal.from_parallel(trace)
    if isinstance(trace, TimedStateSequence):
        return Signal.from_tss(trace)
    raise TypeError(f"cannot monitor a {type(trace).__name__}")
