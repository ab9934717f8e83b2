"""Conformance testing of cyber-physical systems by falsification.

Subpackages and modules:

* :mod:`cpsconf.tss` timed state sequences, shifts, CSV I/O
* :mod:`cpsconf.monitor` MTL formulas and robustness monitors
* :mod:`cpsconf.conformance` (T, J, (tau, eps))-closeness
* :mod:`cpsconf.systems` simulators, replay, external processes, mutants
* :mod:`cpsconf.falsify` robustness-guided test search
* :mod:`cpsconf.degree` conformance-degree bisection and Pareto fronts
"""
from .tss import TSS, ParallelTrace, TimedStateSequence, TraceError

__version__ = "0.1.0"

__all__ = ["TSS", "ParallelTrace", "TimedStateSequence", "TraceError", "__version__"]
