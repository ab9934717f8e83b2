import numpy as np
from hypothesis import HealthCheck, settings

from cpsconf.tss import TimedStateSequence

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def build_trace(times, values, jump_at=(), jump_values=None) -> TimedStateSequence:
    """Sampled trace with a zero-time jump after each index in ``jump_at``.

    At a jump the sample is repeated at the same time with ``j + 1`` and the
    value from ``jump_values`` (default: the next regular value).
    """
    jump_at = set(int(i) for i in jump_at)
    ts, js, ys = [], [], []
    j = 1
    for i, (t, y) in enumerate(zip(times, values)):
        ts.append(t)
        js.append(j)
        ys.append(y)
        if i in jump_at:
            j += 1
            ts.append(t)
            js.append(j)
            nxt = jump_values[i] if jump_values is not None else values[min(i + 1, len(values) - 1)]
            ys.append(nxt)
    return TimedStateSequence(ts, js, np.asarray(ys, dtype=float))


def random_pair(rng: np.random.Generator, n_lo=5, n_hi=200, dim_lo=1, dim_hi=4, p_hybrid=0.5):
    """A model/implementation pair on a shared uniform grid.

    The implementation is the model delayed by a few samples, offset and
    perturbed; hybrid pairs get jumps at mostly (not always) matching indices.
    """
    n = int(rng.integers(n_lo, n_hi + 1))
    dim = int(rng.integers(dim_lo, dim_hi + 1))
    dt = float(rng.choice([0.05, 0.1, 0.25, 1.0]))
    times = np.arange(n) * dt
    base = np.cumsum(rng.normal(0, 0.3, size=(n + 8, dim)), axis=0)
    delay = int(rng.integers(0, 4))
    ym = base[4:4 + n]
    yi = base[4 - delay:4 - delay + n] + rng.normal(0, 0.05, size=(n, dim))
    yi = yi + rng.normal(0, 0.1) * rng.integers(0, 2)
    if rng.random() < p_hybrid and n > 3:
        k = int(rng.integers(1, max(2, n // 10) + 1))
        jm = np.sort(rng.choice(np.arange(n - 1), size=min(k, n - 1), replace=False))
        ji = jm.copy()
        if rng.random() < 0.3:
            ji = np.clip(ji + rng.integers(-1, 2, size=len(ji)), 0, n - 2)
            ji = np.unique(ji)
        return build_trace(times, ym, jm), build_trace(times, yi, ji)
    return build_trace(times, ym), build_trace(times, yi)


def random_interval(rng: np.random.Generator, span: float):
    from cpsconf.monitor import Interval

    lo = float(rng.choice([0.0, rng.uniform(0, span)]))
    if rng.random() < 0.2:
        return Interval(lo, np.inf)
    hi = lo + float(rng.uniform(0, span))
    closed = rng.random(2) < 0.7
    if hi == lo:
        closed[:] = True
    return Interval(lo, hi, bool(closed[0]), bool(closed[1]))


def random_formula(rng: np.random.Generator, depth: int, span: float, channels=("y1", "y2")):
    """Random formula over scalar compare atoms and the norm atom ``|y| < c``."""
    from cpsconf.monitor import (
        TRUE, Always, And, Atom, Compare, Eventually, Implies, Not, NormLessThan, Or, Until,
    )

    if depth == 0 or rng.random() < 0.25:
        r = rng.random()
        if r < 0.05:
            return TRUE
        if r < 0.25:
            return Atom(NormLessThan("y", None, float(np.round(rng.uniform(0.1, 2), 3))))
        ch = str(rng.choice(channels))
        op = str(rng.choice(["<", "<=", ">", ">="]))
        return Atom(Compare(ch, op, float(np.round(rng.normal(), 3))))
    k = int(rng.integers(0, 7))
    sub = lambda: random_formula(rng, depth - 1, span, channels)  # noqa: E731
    if k == 0:
        return Not(sub())
    if k == 1:
        return Or((sub(), sub()))
    if k == 2:
        return And((sub(), sub()))
    if k == 3:
        return Implies(sub(), sub())
    if k == 4:
        return Until(sub(), sub(), random_interval(rng, span))
    if k == 5:
        return Always(sub(), random_interval(rng, span))
    return Eventually(sub(), random_interval(rng, span))


def random_signal_trace(rng: np.random.Generator, n_lo=2, n_hi=25):
    """Real-timed 2-d trace with irregular steps (channels y, y1, y2 once monitored)."""
    n = int(rng.integers(n_lo, n_hi + 1))
    times = np.concatenate([[0.0], np.cumsum(rng.choice([0.25, 0.5, 1.0], size=n - 1))])
    values = np.round(rng.normal(size=(n, 2)), 3)
    return TimedStateSequence.real(times, values)
