"""Finitely parametrised input signals."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class Interpolation(str, enum.Enum):
    PIECEWISE_CONSTANT = "pc"
    PIECEWISE_LINEAR = "pl"


@dataclass(frozen=True, eq=False)
class InputSignal:
    """Control points ``(times[i], values[i])`` over ``[0, horizon]``.

    ``bounds`` optionally declares the input box ``U`` as ``(low, high)``
    arrays; control values must lie inside it.
    """

    times: np.ndarray
    values: np.ndarray
    interpolation: Interpolation = Interpolation.PIECEWISE_CONSTANT
    horizon: float = np.inf
    bounds: tuple | None = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).reshape(-1)
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values.reshape(len(times), -1) if len(times) else values.reshape(0, 1)
        if len(times) == 0:
            raise ValueError("an input signal needs at least one control point")
        if len(values) != len(times):
            raise ValueError("control times and values differ in length")
        if np.any(np.diff(times) <= 0):
            raise ValueError("control times must be strictly increasing")
        if times[0] < 0 or times[-1] > self.horizon:
            raise ValueError(f"control times must lie in [0, {self.horizon}]")
        if self.bounds is not None:
            lo, hi = (np.asarray(b, dtype=float) for b in self.bounds)
            if np.any(values < lo) or np.any(values > hi):
                raise ValueError("control values leave the declared input box")
        times.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "interpolation", Interpolation(self.interpolation))

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @classmethod
    def constant(cls, value, horizon: float = np.inf) -> InputSignal:
        return cls([0.0], np.atleast_2d(np.asarray(value, dtype=float)), horizon=horizon)

    @classmethod
    def empty(cls) -> InputSignal:
        """Zero-dimensional input for autonomous systems."""
        return cls([0.0], np.zeros((1, 0)))

    def __call__(self, t) -> np.ndarray:
        return materialize_input(self, np.atleast_1d(t))

    def as_dict(self) -> dict:
        return {
            "control_times": self.times.tolist(),
            "control_values": self.values.tolist(),
            "interpolation": self.interpolation.value,
        }


def materialize_input(u: InputSignal, grid) -> np.ndarray:
    """Input values on ``grid``, shape ``(len(grid), n_u)``.

    Piecewise-constant holds the latest control point at or before ``t``;
    piecewise-linear interpolates.  Outside the span of the control points
    the first/last value is held.
    """
    grid = np.asarray(grid, dtype=float).reshape(-1)
    if u.dim == 0:
        return np.zeros((len(grid), 0))
    if u.interpolation is Interpolation.PIECEWISE_CONSTANT:
        idx = np.searchsorted(u.times, grid, side="right") - 1
        return u.values[np.clip(idx, 0, len(u.times) - 1)]
    return np.column_stack(
        [np.interp(grid, u.times, u.values[:, c]) for c in range(u.dim)]
    )
