"""Hybrid automata with affine flows, half-space guards and affine resets.

Within a mode the continuous state follows ``x' = A x + B u + c`` (or a
user-supplied vector field).  An edge fires as soon as its guard (a
conjunction of half-spaces ``a . x >= b``) holds at a sample instant; the
flow set is the complement of the union of the guards.  Edges leaving the
same mode are tried in declaration order.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from ..tss import TimedStateSequence
from .inputs import InputSignal, materialize_input

MAX_JUMPS_PER_INSTANT = 10


class SimulationError(RuntimeError):
    pass


class ZenoError(SimulationError):
    pass


def _arr(x, ndim) -> np.ndarray:
    a = np.array(x, dtype=float, ndmin=ndim)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Box:
    low: np.ndarray
    high: np.ndarray

    def __post_init__(self):
        lo, hi = _arr(self.low, 1), _arr(self.high, 1)
        if lo.shape != hi.shape or np.any(lo > hi):
            raise ValueError("box bounds must have equal shape and low <= high")
        object.__setattr__(self, "low", lo)
        object.__setattr__(self, "high", hi)

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return x.shape == self.low.shape and bool(
            np.all(x >= self.low - tol) and np.all(x <= self.high + tol)
        )


@dataclass(frozen=True, eq=False)
class Halfspace:
    """``normal . x >= offset``."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        object.__setattr__(self, "normal", _arr(self.normal, 1))
        object.__setattr__(self, "offset", float(self.offset))


@dataclass(frozen=True, eq=False)
class Mode:
    label: int
    A: np.ndarray
    B: np.ndarray | None = None
    c: np.ndarray | None = None
    region: Box | None = None
    flow: Callable | None = None  # overrides the affine field when given

    def __post_init__(self):
        A = _arr(self.A, 2)
        n = A.shape[0]
        if A.shape != (n, n):
            raise ValueError(f"mode {self.label}: A must be square")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", _arr(self.B if self.B is not None else np.zeros((n, 0)), 2))
        object.__setattr__(self, "c", _arr(self.c if self.c is not None else np.zeros(n), 1))

    def field(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        if self.flow is not None:
            return np.asarray(self.flow(x, u), dtype=float)
        dx = self.A @ x + self.c
        if self.B.shape[1]:
            dx = dx + self.B @ u
        return dx


@dataclass(frozen=True, eq=False)
class Edge:
    source: int
    target: int
    guard: tuple
    reset_matrix: np.ndarray | None = None
    reset_offset: np.ndarray | None = None
    orientation: str | None = None  # "horizontal" / "vertical" guard lines

    def __post_init__(self):
        object.__setattr__(self, "guard", tuple(self.guard))
        if self.reset_matrix is not None:
            object.__setattr__(self, "reset_matrix", _arr(self.reset_matrix, 2))
        if self.reset_offset is not None:
            object.__setattr__(self, "reset_offset", _arr(self.reset_offset, 1))
        if self.orientation not in (None, "horizontal", "vertical"):
            raise ValueError(f"unknown guard orientation {self.orientation!r}")

    def enabled(self, x: np.ndarray) -> bool:
        return all(float(h.normal @ x) >= h.offset for h in self.guard)

    def reset(self, x: np.ndarray) -> np.ndarray:
        if self.reset_matrix is not None:
            x = self.reset_matrix @ x
        if self.reset_offset is not None:
            x = x + self.reset_offset
        return x


@dataclass(frozen=True, eq=False)
class HybridAutomaton:
    modes: tuple
    edges: tuple
    init: Box
    output_matrix: np.ndarray | None = None
    output_offset: np.ndarray | None = None
    initial_mode: int | None = None
    plane: tuple = (0, 1)  # state coordinates of the horizontal/vertical axes
    name: str = "automaton"
    mutation: tuple = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        object.__setattr__(self, "edges", tuple(self.edges))
        labels = [m.label for m in self.modes]
        if len(set(labels)) != len(labels):
            raise ValueError("mode labels must be unique")
        n = self.state_dim
        for m in self.modes:
            if m.A.shape[0] != n or len(m.c) != n:
                raise ValueError(f"mode {m.label}: dimension differs from the initial box")
        for e in self.edges:
            if e.source not in labels or e.target not in labels:
                raise ValueError(f"edge {e.source}->{e.target} references an unknown mode")
        if self.output_matrix is None:
            object.__setattr__(self, "output_matrix", _arr(np.eye(n), 2))
        else:
            object.__setattr__(self, "output_matrix", _arr(self.output_matrix, 2))
        if self.output_offset is None:
            object.__setattr__(self, "output_offset", _arr(np.zeros(len(self.output_matrix)), 1))
        else:
            object.__setattr__(self, "output_offset", _arr(self.output_offset, 1))
        if self.initial_mode is not None and self.initial_mode not in labels:
            raise ValueError(f"unknown initial mode {self.initial_mode}")

    @property
    def state_dim(self) -> int:
        return len(self.init.low)

    @property
    def output_dim(self) -> int:
        return self.output_matrix.shape[0]

    @property
    def n_inputs(self) -> int:
        return max((m.B.shape[1] for m in self.modes), default=0)

    def mode(self, label: int) -> Mode:
        for m in self.modes:
            if m.label == label:
                return m
        raise KeyError(label)

    def output(self, x: np.ndarray) -> np.ndarray:
        return self.output_matrix @ x + self.output_offset

    def start_mode(self, x0: np.ndarray) -> int:
        for m in self.modes:
            if m.region is not None and m.region.contains(x0):
                return m.label
        if self.initial_mode is None:
            raise SimulationError(f"no mode region contains the initial state {x0.tolist()}")
        return self.initial_mode

    def outgoing(self, label: int) -> list[Edge]:
        return [e for e in self.edges if e.source == label]

    def with_changes(self, **kw) -> HybridAutomaton:
        return replace(self, **kw)


# ------------------------------------------------------------------ simulate


def _stage_inputs(u: InputSignal | None, times: np.ndarray, n_u: int):
    if n_u == 0:
        return np.zeros((len(times), 0)), np.zeros((len(times) - 1, 0))
    if u is None or u.dim == 0:
        raise SimulationError(f"the automaton expects {n_u} inputs")
    if u.dim != n_u:
        raise SimulationError(f"input has dimension {u.dim}, automaton expects {n_u}")
    steps = np.diff(times)
    at = materialize_input(u, times)
    mid = materialize_input(u, times[:-1] + steps / 2)
    return at, mid


def _step(f, x, h, w0, wm, w1, method):
    if method == "euler":
        return x + h * f(x, w0)
    k1 = f(x, w0)
    k2 = f(x + 0.5 * h * k1, wm)
    k3 = f(x + 0.5 * h * k2, wm)
    k4 = f(x + h * k3, w1)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


class _AffineStepper:
    """One integration step of ``x' = A x + w(t)`` as ``P x + drive[k]``.

    RK4 and Euler are linear in the state and in the forcing at the stage
    times, so both reduce to precomputed matrices.
    """

    def __init__(self, mode: Mode, grid, dt, u_at, u_mid, method):
        A = mode.A
        n = len(A)
        w_at = mode.c + (u_at @ mode.B.T if mode.B.shape[1] else 0.0)
        w_mid = mode.c + (u_mid @ mode.B.T if mode.B.shape[1] else 0.0)
        w_at = np.broadcast_to(w_at, (len(grid), n))
        w_mid = np.broadcast_to(w_mid, (len(grid) - 1, n))
        # nominal step sizes; only the last step may be shorter
        hs = np.full((len(grid) - 1, 1), float(dt))
        hs[-1] = grid[-1] - grid[-2]
        # forcing response from the zero state, batched over all steps
        batch = lambda x, w: x @ A.T + w  # noqa: E731
        self.drive = _step(batch, np.zeros((len(hs), n)), hs, w_at[:-1], w_mid, w_at[1:], method)
        lin = lambda x, w: A @ x + w  # noqa: E731
        eye, zero = np.eye(n), np.zeros((n, n))
        maps = {h: _step(lin, eye, h, zero, zero, zero, method) for h in set(hs[:, 0].tolist())}
        self.P = [maps[h] for h in hs[:, 0].tolist()]

    def __call__(self, k, x):
        return self.P[k] @ x + self.drive[k]


class _FieldStepper:
    def __init__(self, mode: Mode, grid, dt, u_at, u_mid, method):
        self.mode, self.grid, self.u_at, self.u_mid, self.method = mode, grid, u_at, u_mid, method

    def __call__(self, k, x):
        h = self.grid[k + 1] - self.grid[k]
        return _step(
            self.mode.field, x, h, self.u_at[k], self.u_mid[k], self.u_at[k + 1], self.method
        )


class _Guards:
    """Outgoing edges of one mode with their half-spaces stacked."""

    def __init__(self, edges: list[Edge], n: int):
        self.edges = edges
        rows = [h for e in edges for h in e.guard]
        self.G = np.array([h.normal for h in rows]).reshape(len(rows), n)
        self.g = np.array([h.offset for h in rows])
        self.bounds = np.cumsum([0] + [len(e.guard) for e in edges])

    def first_enabled(self, x) -> Edge | None:
        if not self.edges:
            return None
        ok = self.G @ x >= self.g
        if not ok.any():
            return None
        b = self.bounds
        for i, e in enumerate(self.edges):
            if ok[b[i]:b[i + 1]].all():
                return e
        return None


def simulate_automaton(
    aut: HybridAutomaton,
    h0,
    u: InputSignal | None,
    T: float,
    J: int,
    dt: float,
    method: str = "rk4",
) -> TimedStateSequence:
    """Fixed-step simulation sampled every ``dt`` seconds.

    A jump is taken at the first sample instant at which a guard holds: the
    state is reset, ``j`` is incremented and a second sample is emitted at the
    same time.  The trace starts at ``j = 1``; it ends at ``T``, or at the
    instant a jump would push ``j`` above ``J``.
    """
    x = np.array(h0, dtype=float).reshape(-1)
    if not aut.init.contains(x, tol=1e-12):
        raise SimulationError(f"initial state {x.tolist()} outside the initial box")
    if not (dt > 0 and T > 0):
        raise ValueError("dt and T must be positive")
    if method not in ("rk4", "euler"):
        raise ValueError(f"unknown integration method {method!r}")
    n_steps = max(1, int(np.ceil(T / dt - 1e-9)))
    grid = np.minimum(np.arange(n_steps + 1) * dt, T)
    grid[-1] = T
    u_at, u_mid = _stage_inputs(u, grid, aut.n_inputs)
    n = aut.state_dim

    steppers, guards = {}, {}

    def stepper(label):
        if label not in steppers:
            m = aut.mode(label)
            cls = _FieldStepper if m.flow is not None else _AffineStepper
            steppers[label] = cls(m, grid, dt, u_at, u_mid, method)
            guards[label] = _Guards(aut.outgoing(label), n)
        return steppers[label]

    mode = aut.start_mode(x)
    j = 1
    ts, js, xs, ls = [], [], [], []

    def emit(t):
        ts.append(t)
        js.append(j)
        xs.append(x)
        ls.append(mode)

    def jumps(t) -> bool:
        """Take all enabled jumps at time t; False when J is exhausted."""
        nonlocal x, mode, j
        count = 0
        while True:
            stepper(mode)
            e = guards[mode].first_enabled(x)
            if e is None:
                return True
            if j + 1 > J:
                return False
            count += 1
            if count > MAX_JUMPS_PER_INSTANT:
                raise ZenoError(
                    f"Zeno guard cycle: more than {MAX_JUMPS_PER_INSTANT} jumps at t={t}"
                )
            x = e.reset(x)
            mode = e.target
            j += 1
            emit(t)

    emit(0.0)
    if jumps(0.0):
        for k in range(n_steps):
            x = stepper(mode)(k, x)
            if not np.all(np.isfinite(x)):
                raise SimulationError(f"state diverged at t={grid[k + 1]}")
            emit(float(grid[k + 1]))
            if not jumps(float(grid[k + 1])):
                break
    states = np.array(xs)
    ys = states @ aut.output_matrix.T + aut.output_offset
    return TimedStateSequence(ts, js, ys, ls)


# ------------------------------------------------------------------ config

AUTOMATON_SCHEMA = {
    "type": "object",
    "required": ["modes", "init"],
    "properties": {
        "name": {"type": "string"},
        "modes": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["label", "A"],
                "properties": {
                    "label": {"type": "integer"},
                    "A": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
                    "B": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
                    "c": {"type": "array", "items": {"type": "number"}},
                    "region": {"$ref": "#/definitions/box"},
                },
            },
        },
        "edges": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["source", "target", "guard"],
                "properties": {
                    "source": {"type": "integer"},
                    "target": {"type": "integer"},
                    "guard": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["normal", "offset"],
                            "properties": {
                                "normal": {"type": "array", "items": {"type": "number"}},
                                "offset": {"type": "number"},
                            },
                        },
                    },
                    "orientation": {"enum": ["horizontal", "vertical", None]},
                    "reset": {
                        "type": "object",
                        "properties": {
                            "R": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
                            "r": {"type": "array", "items": {"type": "number"}},
                        },
                    },
                },
            },
        },
        "output": {
            "type": "object",
            "properties": {
                "C": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
                "d": {"type": "array", "items": {"type": "number"}},
            },
        },
        "init": {"$ref": "#/definitions/box"},
        "initial_mode": {"type": ["integer", "null"]},
        "plane": {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2},
    },
    "definitions": {
        "box": {
            "type": "object",
            "required": ["low", "high"],
            "properties": {
                "low": {"type": "array", "items": {"type": "number"}},
                "high": {"type": "array", "items": {"type": "number"}},
            },
        }
    },
}


def automaton_from_dict(d: dict) -> HybridAutomaton:
    import jsonschema

    jsonschema.validate(d, AUTOMATON_SCHEMA)
    n = len(d["init"]["low"])
    modes = []
    for m in d["modes"]:
        region = Box(m["region"]["low"], m["region"]["high"]) if "region" in m else None
        B = m.get("B")
        if B is not None and len(B) == 0:
            B = np.zeros((n, 0))
        modes.append(Mode(m["label"], m["A"], B, m.get("c"), region))
    edges = []
    for e in d.get("edges", []):
        guard = [Halfspace(h["normal"], h["offset"]) for h in e["guard"]]
        reset = e.get("reset", {})
        edges.append(
            Edge(e["source"], e["target"], guard, reset.get("R"), reset.get("r"), e.get("orientation"))
        )
    out = d.get("output", {})
    return HybridAutomaton(
        modes,
        edges,
        Box(d["init"]["low"], d["init"]["high"]),
        out.get("C"),
        out.get("d"),
        d.get("initial_mode"),
        tuple(d.get("plane", (0, 1))),
        d.get("name", "automaton"),
    )


def automaton_to_dict(aut: HybridAutomaton) -> dict:
    modes = []
    for m in aut.modes:
        if m.flow is not None:
            raise ValueError(f"mode {m.label} has a custom vector field and cannot be serialised")
        md = {"label": m.label, "A": m.A.tolist(), "B": m.B.tolist(), "c": m.c.tolist()}
        if m.region is not None:
            md["region"] = {"low": m.region.low.tolist(), "high": m.region.high.tolist()}
        modes.append(md)
    edges = []
    for e in aut.edges:
        ed = {
            "source": e.source,
            "target": e.target,
            "guard": [{"normal": h.normal.tolist(), "offset": h.offset} for h in e.guard],
            "orientation": e.orientation,
        }
        reset = {}
        if e.reset_matrix is not None:
            reset["R"] = e.reset_matrix.tolist()
        if e.reset_offset is not None:
            reset["r"] = e.reset_offset.tolist()
        if reset:
            ed["reset"] = reset
        edges.append(ed)
    return {
        "name": aut.name,
        "modes": modes,
        "edges": edges,
        "output": {"C": aut.output_matrix.tolist(), "d": aut.output_offset.tolist()},
        "init": {"low": aut.init.low.tolist(), "high": aut.init.high.tolist()},
        "initial_mode": aut.initial_mode,
        "plane": list(aut.plane),
    }


def load_automaton(path: str | Path) -> HybridAutomaton:
    with open(path, encoding="utf-8") as fh:
        return automaton_from_dict(json.load(fh))


def single_mode(A, *, B=None, c=None, init_low: Sequence[float], init_high: Sequence[float]):
    """One-mode automaton without edges (a plain ODE)."""
    return HybridAutomaton(
        (Mode(0, A, B, c),), (), Box(init_low, init_high), initial_mode=0, name="ode"
    )
