"""Systems under test: input signals, hybrid automata, replay and external simulators."""
from .automaton import (
    MAX_JUMPS_PER_INSTANT,
    Box,
    Edge,
    Halfspace,
    HybridAutomaton,
    Mode,
    SimulationError,
    ZenoError,
    automaton_from_dict,
    automaton_to_dict,
    load_automaton,
    simulate_automaton,
    single_mode,
)
from .benchmark import nav_automaton, nav_input_box
from .inputs import InputSignal, Interpolation, materialize_input
from .mutants import DynamicsScale, GuardOffset, make_mutant, mutation_from_dict
from .sut import (
    AutomatonSystem,
    ExternalProcessSystem,
    ExternalSimulationError,
    ReplaySystem,
    SystemUnderTest,
    TransformedSystem,
    external_simulate,
    offset_system,
    simulate,
)

__all__ = [
    "MAX_JUMPS_PER_INSTANT", "AutomatonSystem", "Box", "DynamicsScale", "Edge",
    "ExternalProcessSystem", "ExternalSimulationError", "GuardOffset", "Halfspace",
    "HybridAutomaton", "InputSignal", "Interpolation", "Mode", "ReplaySystem",
    "SimulationError", "SystemUnderTest", "TransformedSystem", "ZenoError",
    "automaton_from_dict", "automaton_to_dict", "external_simulate", "load_automaton",
    "make_mutant", "materialize_input", "mutation_from_dict", "nav_automaton",
    "nav_input_box", "offset_system", "simulate", "simulate_automaton", "single_mode",
]
