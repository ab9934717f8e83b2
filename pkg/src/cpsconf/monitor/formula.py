"""MTL abstract syntax.

Formulas are immutable dataclasses, so two structurally identical formulas
compare equal and hash alike.  ``And``, ``Implies``, ``Always`` and
``Eventually`` are first-class nodes; :func:`desugar` rewrites them into the
base grammar ``true | atom | not | or | until``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np


@dataclass(frozen=True)
class Interval:
    """Non-empty interval of non-negative reals; ``hi`` may be ``inf``."""

    lo: float = 0.0
    hi: float = math.inf
    lo_closed: bool = True
    hi_closed: bool = True

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if math.isnan(lo) or math.isnan(hi) or lo < 0 or math.isinf(lo):
            raise ValueError(f"malformed interval bounds ({self.lo}, {self.hi})")
        if hi < lo:
            raise ValueError(f"malformed interval: upper bound {hi} < lower bound {lo}")
        hi_closed = self.hi_closed and not math.isinf(hi)
        if hi == lo and not (self.lo_closed and hi_closed):
            raise ValueError(f"empty interval at {lo}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "hi_closed", hi_closed)

    def contains(self, d):
        d = np.asarray(d, dtype=float)
        above = d >= self.lo if self.lo_closed else d > self.lo
        below = d <= self.hi if self.hi_closed else d < self.hi
        return above & below

    def __str__(self) -> str:
        hi = "inf" if math.isinf(self.hi) else repr(self.hi)
        return f"{'[' if self.lo_closed else '('}{self.lo!r},{hi}{']' if self.hi_closed else ')'}"


# ---------------------------------------------------------------- predicates


@dataclass(frozen=True)
class NormLessThan:
    """``|| lhs - shift(rhs, shift) || < eps`` (``rhs=None`` means ``|| lhs || < eps``).

    Signed distance of the norm ``d`` to the open ball ``(-eps, eps)`` is
    ``eps - d``.
    """

    lhs: str
    rhs: str | None = None
    eps: float = 0.0
    shift: int = 0


@dataclass(frozen=True)
class Compare:
    """Scalar half-line ``channel op const`` with ``op`` in ``< <= > >=``."""

    channel: str
    op: str
    const: float

    def __post_init__(self):
        if self.op not in ("<", "<=", ">", ">="):
            raise ValueError(f"unknown comparison operator {self.op!r}")


@dataclass(frozen=True)
class ModeEquals:
    """Mode channel ``a`` equals mode channel (or integer constant) ``b``."""

    a: str
    b: Union[str, int]


@dataclass(frozen=True)
class ModeDiffers:
    a: str
    b: Union[str, int]


@dataclass(frozen=True)
class Prop:
    """Boolean proposition read from a named Boolean channel."""

    name: str


@dataclass(frozen=True, eq=False)
class Custom:
    """User-defined output set given by a vectorised signed-distance function.

    ``signed_distance`` maps the ``(N, d)`` array of ``channel`` to ``N``
    signed distances (positive inside the set).  With ``closed`` the boundary
    belongs to the set for Boolean evaluation.
    """

    name: str
    channel: str
    signed_distance: object
    closed: bool = False


Predicate = Union[NormLessThan, Compare, ModeEquals, ModeDiffers, Prop, Custom]


# ------------------------------------------------------------------ formulas


class Formula:
    def __invert__(self):
        return Not(self)

    def __or__(self, other):
        return Or((self, other))

    def __and__(self, other):
        return And((self, other))

    def __rshift__(self, other):
        return Implies(self, other)

    def __str__(self) -> str:
        from .parser import render

        return render(self)


@dataclass(frozen=True, repr=False)
class TrueF(Formula):
    def __repr__(self) -> str:
        return "TrueF()"


@dataclass(frozen=True)
class Atom(Formula):
    pred: Predicate


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True)
class Or(Formula):
    args: tuple

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        if len(self.args) < 2:
            raise ValueError("Or needs at least two operands")


@dataclass(frozen=True)
class And(Formula):
    args: tuple

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        if len(self.args) < 2:
            raise ValueError("And needs at least two operands")


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Until(Formula):
    left: Formula
    right: Formula
    interval: Interval = Interval()


@dataclass(frozen=True)
class Always(Formula):
    arg: Formula
    interval: Interval = Interval()


@dataclass(frozen=True)
class Eventually(Formula):
    arg: Formula
    interval: Interval = Interval()


TRUE = TrueF()


def any_of(args) -> Formula:
    args = tuple(args)
    return args[0] if len(args) == 1 else Or(args)


def all_of(args) -> Formula:
    args = tuple(args)
    return args[0] if len(args) == 1 else And(args)


def desugar(phi: Formula) -> Formula:
    """Rewrite into ``true | atom | not | or | until`` only."""
    if isinstance(phi, (TrueF, Atom)):
        return phi
    if isinstance(phi, Not):
        return Not(desugar(phi.arg))
    if isinstance(phi, Or):
        return Or(tuple(desugar(a) for a in phi.args))
    if isinstance(phi, And):
        return Not(Or(tuple(Not(desugar(a)) for a in phi.args)))
    if isinstance(phi, Implies):
        return Or((Not(desugar(phi.left)), desugar(phi.right)))
    if isinstance(phi, Until):
        return Until(desugar(phi.left), desugar(phi.right), phi.interval)
    if isinstance(phi, Eventually):
        return Until(TRUE, desugar(phi.arg), phi.interval)
    if isinstance(phi, Always):
        return Not(Until(TRUE, Not(desugar(phi.arg)), phi.interval))
    raise TypeError(f"not a formula: {phi!r}")


def atoms(phi: Formula) -> list[Predicate]:
    out: list[Predicate] = []

    def walk(f):
        if isinstance(f, Atom):
            out.append(f.pred)
        elif isinstance(f, (Not, Always, Eventually)):
            walk(f.arg)
        elif isinstance(f, (Or, And)):
            for a in f.args:
                walk(a)
        elif isinstance(f, (Implies, Until)):
            walk(f.left)
            walk(f.right)

    walk(phi)
    return out


def map_predicates(phi: Formula, fn) -> Formula:
    """Return ``phi`` with every atomic predicate replaced by ``fn(pred)``."""
    if isinstance(phi, TrueF):
        return phi
    if isinstance(phi, Atom):
        return Atom(fn(phi.pred))
    if isinstance(phi, Not):
        return Not(map_predicates(phi.arg, fn))
    if isinstance(phi, Or):
        return Or(tuple(map_predicates(a, fn) for a in phi.args))
    if isinstance(phi, And):
        return And(tuple(map_predicates(a, fn) for a in phi.args))
    if isinstance(phi, Implies):
        return Implies(map_predicates(phi.left, fn), map_predicates(phi.right, fn))
    if isinstance(phi, Until):
        return Until(map_predicates(phi.left, fn), map_predicates(phi.right, fn), phi.interval)
    if isinstance(phi, Always):
        return Always(map_predicates(phi.arg, fn), phi.interval)
    if isinstance(phi, Eventually):
        return Eventually(map_predicates(phi.arg, fn), phi.interval)
    raise TypeError(f"not a formula: {phi!r}")
