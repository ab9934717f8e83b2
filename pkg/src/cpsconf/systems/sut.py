"""Systems under test: the black-box map ``(h0, u) -> trace``.

Backends:

* :class:`AutomatonSystem` simulates a :class:`HybridAutomaton`.
* :class:`ReplaySystem` returns recorded traces, keyed by a test id.
* :class:`ExternalProcessSystem` runs a command that reads a JSON request
  file and prints a trace CSV on stdout.
"""
from __future__ import annotations

import abc
import io
import json
import os
import subprocess
import tempfile
import threading
from typing import Callable, Mapping, Sequence

import numpy as np

from ..tss import TimedStateSequence, TraceError, read_csv
from .automaton import HybridAutomaton, SimulationError, simulate_automaton
from .inputs import InputSignal


class ExternalSimulationError(SimulationError):
    pass


class SystemUnderTest(abc.ABC):
    sampling_period: float
    dim_out: int

    @abc.abstractmethod
    def simulate(self, h0, u: InputSignal | None, T: float, J: int) -> TimedStateSequence:
        ...


def simulate(sut: SystemUnderTest, h0, u: InputSignal | None, T: float, J: int):
    return sut.simulate(h0, u, T, J)


class AutomatonSystem(SystemUnderTest):
    """``projection`` maps a shared initial condition to this automaton's state."""

    def __init__(
        self,
        automaton: HybridAutomaton,
        sampling_period: float,
        method: str = "rk4",
        projection: Callable | Sequence[Sequence[float]] | None = None,
    ):
        self.automaton = automaton
        self.sampling_period = float(sampling_period)
        self.method = method
        if projection is not None and not callable(projection):
            M = np.asarray(projection, dtype=float)
            projection = lambda h: M @ np.asarray(h, dtype=float)  # noqa: E731
        self.projection = projection
        self.dim_out = automaton.output_dim

    def simulate(self, h0, u, T, J):
        x0 = self.projection(h0) if self.projection is not None else h0
        return simulate_automaton(
            self.automaton, x0, u, T, J, self.sampling_period, self.method
        )


class ReplaySystem(SystemUnderTest):
    """Recorded traces.

    ``key`` turns ``(h0, u)`` into a table key; without it the table must
    hold exactly one trace, which is returned for every test.
    """

    def __init__(
        self,
        table: Mapping[str, TimedStateSequence] | TimedStateSequence,
        key: Callable | None = None,
        sampling_period: float | None = None,
    ):
        if isinstance(table, TimedStateSequence):
            table = {"default": table}
        if not table:
            raise ValueError("empty replay table")
        if key is None and len(table) != 1:
            raise ValueError("a replay table with several traces needs a key function")
        self.table = dict(table)
        self.key = key
        first = next(iter(self.table.values()))
        self.dim_out = first.dim
        if sampling_period is None:
            dts = np.diff(np.unique(first.times))
            sampling_period = float(dts.min()) if len(dts) else 1.0
        self.sampling_period = sampling_period

    def simulate(self, h0, u, T, J):
        k = self.key(h0, u) if self.key is not None else next(iter(self.table))
        try:
            return self.table[k]
        except KeyError:
            raise SimulationError(f"no recorded trace for test id {k!r}") from None


class TransformedSystem(SystemUnderTest):
    """Another system with its output traces post-processed by ``fn``."""

    def __init__(self, base: SystemUnderTest, fn: Callable[[TimedStateSequence], TimedStateSequence]):
        self.base = base
        self.fn = fn
        self.sampling_period = base.sampling_period
        self.dim_out = base.dim_out

    def simulate(self, h0, u, T, J):
        return self.fn(self.base.simulate(h0, u, T, J))


def offset_system(base: SystemUnderTest, offset) -> TransformedSystem:
    """``base`` with a constant added to every output sample."""
    off = np.asarray(offset, dtype=float)

    def shift(tr: TimedStateSequence) -> TimedStateSequence:
        return TimedStateSequence(tr.times, tr.jumps, tr.values + off, tr.modes, tr.infinite)

    return TransformedSystem(base, shift)


def write_request(path, h0, u: InputSignal | None, T, J, dt) -> dict:
    req = {
        "h0": [float(v) for v in np.asarray(h0, dtype=float).reshape(-1)],
        "control_times": [] if u is None else u.times.tolist(),
        "control_values": [] if u is None else u.values.tolist(),
        "interpolation": "pc" if u is None else u.interpolation.value,
        "T": float(T),
        "J": int(J),
        "dt": float(dt),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(req, fh, indent=1)
    return req


def external_simulate(
    cmd: Sequence[str],
    protocol: str,
    h0,
    u: InputSignal | None,
    T: float,
    J: int,
    *,
    dt: float,
    timeout: float = 60.0,
    workdir: str | None = None,
    test_id: str | None = None,
) -> TimedStateSequence:
    """Run ``cmd`` once.

    Protocol ``"stdout"``: the command gets the request path as its last
    argument and prints the trace CSV.  Protocol ``"file"``: it gets the
    request and response paths and writes the CSV to the latter.
    """
    if protocol not in ("stdout", "file"):
        raise ValueError(f"unknown protocol {protocol!r}")
    ctx = f" (test {test_id})" if test_id is not None else ""
    with tempfile.TemporaryDirectory(dir=workdir) as tmp:
        req = os.path.join(tmp, "request.json")
        resp = os.path.join(tmp, "response.csv")
        write_request(req, h0, u, T, J, dt)
        argv = list(cmd) + [req] + ([resp] if protocol == "file" else [])
        try:
            proc = subprocess.run(
                argv, capture_output=True, text=True, timeout=timeout, cwd=workdir
            )
        except subprocess.TimeoutExpired:
            raise ExternalSimulationError(f"timeout after {timeout} s{ctx}") from None
        except OSError as exc:
            raise ExternalSimulationError(f"cannot run {argv[0]!r}{ctx}: {exc}") from None
        if proc.returncode != 0:
            msg = proc.stderr.strip().splitlines()[-1:] or [""]
            raise ExternalSimulationError(
                f"simulator exited with status {proc.returncode}{ctx}: {msg[0]}"
            )
        if protocol == "file":
            try:
                with open(resp, encoding="utf-8") as fh:
                    text = fh.read()
            except OSError:
                raise ExternalSimulationError(f"simulator wrote no response file{ctx}") from None
        else:
            text = proc.stdout
    try:
        return read_csv(io.StringIO(text))
    except TraceError as exc:
        raise ExternalSimulationError(f"malformed trace{ctx}: {exc}") from None


class ExternalProcessSystem(SystemUnderTest):
    """A simulator run as a separate process, one call at a time per instance."""

    def __init__(
        self,
        command: Sequence[str],
        sampling_period: float,
        dim_out: int,
        protocol: str = "stdout",
        timeout: float = 60.0,
        workdir: str | None = None,
    ):
        self.command = list(command)
        self.sampling_period = float(sampling_period)
        self.dim_out = dim_out
        self.protocol = protocol
        self.timeout = timeout
        self.workdir = workdir
        self._lock = threading.Lock()
        self._calls = 0

    def simulate(self, h0, u, T, J):
        with self._lock:
            self._calls += 1
            tr = external_simulate(
                self.command, self.protocol, h0, u, T, J,
                dt=self.sampling_period, timeout=self.timeout,
                workdir=self.workdir, test_id=str(self._calls),
            )
        if tr.dim != self.dim_out:
            raise ExternalSimulationError(
                f"simulator returned {tr.dim} output channels, expected {self.dim_out}"
            )
        return tr
