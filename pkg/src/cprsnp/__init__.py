"""Exact solvers for capacitated survivable network design with protection.

Pick a cheapest arc subset (plus up to ``kp`` protected arcs) so that one
unit still flows from the root to every terminal after any ``k`` of the
selected, unprotected arcs fail.  Three interchangeable exact methods are
provided, all driven by the same constraint-and-column generation engine.
"""

from .engine import FORMULATIONS, EngineError, EngineOptions, Solution, solve
from .formulations import Design, FailureScenario, FormulationError
from .graph import (
    Arc,
    ArcMask,
    AugmentedInstance,
    CutSet,
    GraphError,
    Instance,
    augment,
    max_flow,
    min_cut,
)
from .instances import (
    GenerationError,
    ParseError,
    generate,
    load_instance,
    parse_design,
    parse_instance,
    save_instance,
    write_design,
    write_instance,
)
from .verify import exhaustive_optimum, is_survivable

__version__ = "0.1.0"

__all__ = [
    "Arc",
    "ArcMask",
    "AugmentedInstance",
    "CutSet",
    "Design",
    "EngineError",
    "EngineOptions",
    "FailureScenario",
    "FormulationError",
    "FORMULATIONS",
    "GenerationError",
    "GraphError",
    "Instance",
    "ParseError",
    "Solution",
    "augment",
    "exhaustive_optimum",
    "generate",
    "is_survivable",
    "load_instance",
    "max_flow",
    "min_cut",
    "parse_design",
    "parse_instance",
    "save_instance",
    "solve",
    "write_design",
    "write_instance",
    "__version__",
]
