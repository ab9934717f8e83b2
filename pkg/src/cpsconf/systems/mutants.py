"""Fault injection: perturbed copies of a hybrid automaton."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np

from .automaton import Edge, Halfspace, HybridAutomaton, Mode


@dataclass(frozen=True)
class DynamicsScale:
    """Multiply the vector field of every mode (or of selected modes) by a factor."""

    factor: float | Mapping[int, float] = 1.0

    def factors(self, labels) -> dict[int, float]:
        if isinstance(self.factor, Mapping):
            out = {int(k): float(v) for k, v in self.factor.items()}
            return {lab: out.get(lab, 1.0) for lab in labels}
        return {lab: float(self.factor) for lab in labels}

    @property
    def magnitude(self) -> float:
        if isinstance(self.factor, Mapping):
            return max((abs(float(v) - 1.0) for v in self.factor.values()), default=0.0)
        return abs(float(self.factor) - 1.0)


@dataclass(frozen=True)
class GuardOffset:
    """Translate the guard lines of one orientation by ``delta``.

    A horizontal guard line moves along the vertical plane axis and a
    vertical one along the horizontal axis.
    """

    axis: str
    delta: float

    def __post_init__(self):
        if self.axis not in ("horizontal", "vertical"):
            raise ValueError(f"unknown axis label {self.axis!r}")
        if not np.isfinite(self.delta):
            raise ValueError("delta must be finite")

    @property
    def magnitude(self) -> float:
        return abs(float(self.delta))


def _scaled_mode(m: Mode, f: float) -> Mode:
    if f == 1.0:
        return m
    if m.flow is not None:
        flow = m.flow
        return replace(m, flow=lambda x, u: f * np.asarray(flow(x, u), dtype=float))
    return replace(m, A=f * m.A, B=f * m.B, c=f * m.c)


def _moved_edge(e: Edge, coord: int, delta: float) -> Edge:
    guard = tuple(Halfspace(h.normal, h.offset + delta * h.normal[coord]) for h in e.guard)
    return replace(e, guard=guard)


def make_mutant(base: HybridAutomaton, mutation) -> HybridAutomaton:
    if isinstance(mutation, DynamicsScale):
        fs = mutation.factors([m.label for m in base.modes])
        if any(not f > 0 for f in fs.values()):
            raise ValueError("scale factors must be positive")
        modes = tuple(_scaled_mode(m, fs[m.label]) for m in base.modes)
        edges = base.edges
    elif isinstance(mutation, GuardOffset):
        coord = base.plane[1] if mutation.axis == "horizontal" else base.plane[0]
        modes = base.modes
        edges = tuple(
            _moved_edge(e, coord, mutation.delta) if e.orientation == mutation.axis else e
            for e in base.edges
        )
    else:
        raise TypeError(f"unknown mutation {mutation!r}")
    tag = (type(mutation).__name__, mutation.magnitude)
    return replace(base, modes=modes, edges=edges, mutation=base.mutation + (tag,))


def mutation_from_dict(d: dict):
    kind = d.get("kind")
    if kind == "dynamics_scale":
        f = d["factor"]
        if isinstance(f, dict):
            f = {int(k): v for k, v in f.items()}
        return DynamicsScale(f)
    if kind == "guard_offset":
        return GuardOffset(d["axis"], float(d["delta"]))
    if kind in (None, "identity"):
        return DynamicsScale(1.0)
    raise ValueError(f"unknown mutation kind {kind!r}")
