"""Plain Boolean MTL semantics over sampled signals.

Written directly from the satisfaction relation with explicit loops, as an
independent check on the robustness evaluators; it shares nothing with them
beyond atom truth values.
"""
from __future__ import annotations

from .formula import (
    Always,
    And,
    Atom,
    Eventually,
    Formula,
    Implies,
    Not,
    Or,
    TrueF,
    Until,
)
from .robustness import truth
from .signal import Signal, as_signal


def satisfies(phi: Formula, trace, t: float | None = None, *, norm=2) -> bool:
    sig = as_signal(trace)
    i = 0 if t is None else sig.index_of(t)
    return _Sat(sig, norm).holds(phi, i)


class _Sat:
    def __init__(self, sig: Signal, norm):
        self.sig = sig
        self.norm = norm
        self.cache: dict[int, list[bool]] = {}
        self.memo: dict[tuple[int, int], bool] = {}

    def atom(self, pred) -> list[bool]:
        key = id(pred)
        if key not in self.cache:
            self.cache[key] = [bool(v) for v in truth(pred, self.sig, self.norm)]
        return self.cache[key]

    def window(self, i, interval):
        times = self.sig.times
        return [k for k in range(i, len(times)) if interval.contains(times[k] - times[i])]

    def holds(self, phi: Formula, i: int) -> bool:
        key = (id(phi), i)
        if key not in self.memo:
            self.memo[key] = self._holds(phi, i)
        return self.memo[key]

    def _holds(self, phi: Formula, i: int) -> bool:
        if isinstance(phi, TrueF):
            return True
        if isinstance(phi, Atom):
            return self.atom(phi.pred)[i]
        if isinstance(phi, Not):
            return not self.holds(phi.arg, i)
        if isinstance(phi, Or):
            return any(self.holds(a, i) for a in phi.args)
        if isinstance(phi, And):
            return all(self.holds(a, i) for a in phi.args)
        if isinstance(phi, Implies):
            return (not self.holds(phi.left, i)) or self.holds(phi.right, i)
        if isinstance(phi, Eventually):
            return any(self.holds(phi.arg, k) for k in self.window(i, phi.interval))
        if isinstance(phi, Always):
            return all(self.holds(phi.arg, k) for k in self.window(i, phi.interval))
        if isinstance(phi, Until):
            for k in self.window(i, phi.interval):
                if self.holds(phi.right, k) and all(
                    self.holds(phi.left, q) for q in range(i, k)
                ):
                    return True
            return False
        raise TypeError(f"not a formula: {phi!r}")
