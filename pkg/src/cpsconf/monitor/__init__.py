"""MTL formulas, their text syntax, and robustness monitors."""
from .boolean import satisfies
from .formula import (
    TRUE,
    Always,
    And,
    Atom,
    Compare,
    Custom,
    Eventually,
    Formula,
    Implies,
    Interval,
    ModeDiffers,
    ModeEquals,
    NormLessThan,
    Not,
    Or,
    Prop,
    TrueF,
    Until,
    all_of,
    any_of,
    atoms,
    desugar,
    map_predicates,
)
from .parser import FormulaSyntaxError, parse, render
from .robustness import (
    Kind,
    evaluate,
    robustness,
    spatial_robustness,
    temporal_robustness,
    time_robustness,
)
from .signal import Signal, as_signal

__all__ = [
    "TRUE", "Always", "And", "Atom", "Compare", "Custom", "Eventually", "Formula",
    "FormulaSyntaxError", "Implies", "Interval", "Kind", "ModeDiffers", "ModeEquals",
    "NormLessThan", "Not", "Or", "Prop", "Signal", "TrueF", "Until", "all_of", "any_of",
    "as_signal", "atoms", "desugar", "evaluate", "map_predicates", "parse", "render",
    "robustness", "satisfies", "spatial_robustness", "temporal_robustness",
    "time_robustness",
]
