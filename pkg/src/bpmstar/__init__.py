"""Optimal multi-agent path finding on 4-connected grids.

Solvers: classic subdimensional expansion (mstar), its bypass variant
(bpmstar), and the recursive forms of both (rmstar, rbpmstar), plus an
independent joint-space oracle and a solution validator.
"""

from .domain import (
    Cell,
    ConflictModel,
    GenerationError,
    GridMap,
    Instance,
    generate_instance,
    neighbors,
)
from .mapio import load_instance, load_internal, write_instance, write_movingai
from .mstar import (
    Conflict,
    Solution,
    SolveResult,
    SolveStatus,
    solve_mstar,
)
from .bypass import solve_bpmstar
from .policy import Policy, PathSegment, compute_policy, find_bypass, optimal_successors
from .recursion import solve_rbpmstar, solve_recursive, solve_rmstar
from .validate import ValidationReport, oracle_solve, validate

SOLVERS = {
    "mstar": solve_mstar,
    "bpmstar": solve_bpmstar,
    "rmstar": solve_rmstar,
    "rbpmstar": solve_rbpmstar,
    "oracle": oracle_solve,
}

__all__ = [
    "Cell",
    "Conflict",
    "ConflictModel",
    "GenerationError",
    "GridMap",
    "Instance",
    "PathSegment",
    "Policy",
    "SOLVERS",
    "Solution",
    "SolveResult",
    "SolveStatus",
    "ValidationReport",
    "compute_policy",
    "find_bypass",
    "generate_instance",
    "load_instance",
    "load_internal",
    "neighbors",
    "optimal_successors",
    "oracle_solve",
    "solve_bpmstar",
    "solve_mstar",
    "solve_rbpmstar",
    "solve_recursive",
    "solve_rmstar",
    "validate",
    "write_instance",
    "write_movingai",
]
