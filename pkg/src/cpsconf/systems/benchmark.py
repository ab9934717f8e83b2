"""A small planar navigation automaton used by the benchmark campaigns.

The plane ``[0, 2]^2`` is split into four unit cells by the lines ``x = 1``
(vertical guards) and ``y = 1`` (horizontal guards).  Each cell has a desired
velocity, and the velocity relaxes towards it:

    p' = v,    v' = A (v - v_d(cell)) + u

The desired velocities circulate counter-clockwise around the centre, so a
trajectory keeps crossing guard lines.  The state is ``(x, y, vx, vy)``, the
output is the position and ``u`` is a bounded 2-d disturbance.
"""
from __future__ import annotations

import numpy as np

from .automaton import Box, Edge, Halfspace, HybridAutomaton, Mode

RELAX = np.array([[-1.2, 0.1], [0.1, -1.2]])

# cell index (col, row) -> desired velocity
DESIRED = {
    0: ((0, 0), (1.0, 0.0)),
    1: ((1, 0), (0.0, 1.0)),
    2: ((1, 1), (-1.0, 0.0)),
    3: ((0, 1), (0.0, -1.0)),
}

INPUT_BOUND = 0.2
INIT_LOW = (0.2, 0.2, -0.1, -0.1)
INIT_HIGH = (0.8, 0.8, 0.1, 0.1)


def _mode(label: int) -> Mode:
    (col, row), vd = DESIRED[label]
    A = np.zeros((4, 4))
    A[0, 2] = A[1, 3] = 1.0
    A[2:, 2:] = RELAX
    c = np.zeros(4)
    c[2:] = -RELAX @ np.array(vd)
    B = np.zeros((4, 2))
    B[2, 0] = B[3, 1] = 1.0
    big = 1e6
    region = Box(
        [col if col else -big, row if row else -big, -big, -big],
        [1 if not col else big, 1 if not row else big, big, big],
    )
    return Mode(label, A, B, c, region)


def _edge(src, dst, coord, sign):
    """Guard ``sign * state[coord] >= sign * 1``."""
    normal = np.zeros(4)
    normal[coord] = sign
    orientation = "vertical" if coord == 0 else "horizontal"
    return Edge(src, dst, (Halfspace(normal, sign * 1.0),), orientation=orientation)


def nav_automaton() -> HybridAutomaton:
    edges = (
        _edge(0, 1, 0, +1), _edge(0, 3, 1, +1),
        _edge(1, 0, 0, -1), _edge(1, 2, 1, +1),
        _edge(2, 3, 0, -1), _edge(2, 1, 1, -1),
        _edge(3, 2, 0, +1), _edge(3, 0, 1, -1),
    )
    C = np.zeros((2, 4))
    C[0, 0] = C[1, 1] = 1.0
    return HybridAutomaton(
        tuple(_mode(k) for k in range(4)),
        edges,
        Box(INIT_LOW, INIT_HIGH),
        C,
        np.zeros(2),
        name="nav4",
    )


def nav_input_box():
    return np.full(2, -INPUT_BOUND), np.full(2, INPUT_BOUND)
