"""Critical points of Euclidean-distance and likelihood objectives on algebraic varieties.

Monodromy loops populate the fiber of the critical-point variety over a
parameter value; a trace test checks that nothing was missed.
"""

from .critsys import (
    CriticalSystem,
    Model,
    Objective,
    ObjectiveKind,
    build_critical_system,
    classify_by_component,
    critical_conditions_residual,
    randomize_square,
)
from .monodromy import FiberResult, MonodromyConfig, collect_fiber, run_loop, triangular_loop
from .pathtrack import Homotopy, PathResult, PathSegment, PathStatus, TrackerConfig, total_degree_solve, track, track_many
from .polycore import ParseError, Polynomial, PolySystem, Problem, differentiate, evaluate, parse_polynomial, parse_problem
from .seed import SeedingError, SeedResult, find_seed, gradient_descent_start, point_on_model
from .solutions import Solution, SolutionSet
from .tracetest import TraceReport, TraceSetup, build_trace_curve, certify, collect_curve_points, trace_test

__version__ = "0.1.0"

__all__ = [
    "CriticalSystem", "Model", "Objective", "ObjectiveKind", "build_critical_system", "classify_by_component",
    "critical_conditions_residual", "randomize_square",
    "FiberResult", "MonodromyConfig", "collect_fiber", "run_loop", "triangular_loop",
    "Homotopy", "PathResult", "PathSegment", "PathStatus", "TrackerConfig", "total_degree_solve", "track",
    "track_many",
    "ParseError", "Polynomial", "PolySystem", "Problem", "differentiate", "evaluate", "parse_polynomial",
    "parse_problem",
    "SeedingError", "SeedResult", "find_seed", "gradient_descent_start", "point_on_model",
    "Solution", "SolutionSet",
    "TraceReport", "TraceSetup", "build_trace_curve", "certify", "collect_curve_points", "trace_test",
]
