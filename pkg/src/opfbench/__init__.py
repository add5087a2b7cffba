"""Optimal power flow workbench.

Builds, solves and benchmarks optimal power flow formulations: three
power-flow structures (AC, second-order-cone relaxation, DC approximation)
crossed with four equivalent convex piecewise linear cost encodings plus a
quadratic baseline, solved by an embedded primal-dual interior-point method.
"""

from .bench import BenchConfig, BenchReport, render_report, run_suite, runtime_ratio
from .errors import (
    CaseParseError,
    CaseStructureError,
    ConvexityError,
    CostDomainError,
    DegenerateSegmentError,
    ModelBuildError,
    OpfBenchError,
    RecoveryMismatchError,
    SingularBranchError,
    UnsupportedFeatureError,
)
from .formulations import (
    CostKind,
    OpfSolution,
    PowerFlowKind,
    build_opf,
    build_power_flow,
    recover_solution,
)
from .ipm import IterationLog, KktReport, SolverOptions, kkt_check, solve
from .modelir import ModelIR, SolveResult, SolveStatus
from .netdata import Network, parse_case, serialize_case, validate_network
from .pwlcost import PwlCurve, evaluate, preprocess

__version__ = "0.1.0"

__all__ = [
    "BenchConfig", "BenchReport", "CaseParseError", "CaseStructureError",
    "ConvexityError", "CostDomainError", "CostKind",
    "DegenerateSegmentError", "IterationLog", "KktReport", "ModelBuildError",
    "ModelIR", "Network", "OpfBenchError", "OpfSolution", "PowerFlowKind",
    "PwlCurve", "RecoveryMismatchError", "SingularBranchError",
    "SolveResult", "SolveStatus", "SolverOptions", "UnsupportedFeatureError",
    "build_opf", "build_power_flow", "evaluate", "kkt_check", "parse_case",
    "preprocess", "recover_solution", "render_report", "run_suite",
    "runtime_ratio", "serialize_case", "solve", "validate_network",
]
