"""LP / MILP solving.

``solve_lp`` and ``solve_milp`` dispatch on ``backend``:

* ``"builtin"`` (default) -- the dense revised simplex and best-bound
  branch-and-bound in this package; the reference engine.
* ``"highs"`` -- HiGHS via :mod:`scipy.optimize`, for 24-hour models.
* any object with ``solve_lp(model)`` and ``solve_milp(model, time_limit,
  tol_mipgap)`` methods.
"""

from __future__ import annotations

from .bnb import solve_milp_builtin
from .highs import solve_lp_highs, solve_milp_highs
from .lpformat import to_lp_string, write_lp
from .model import (BINARY, CONTINUOUS, EQ, GE, LE, TOL_FEAS, TOL_GAP, TOL_INT, TOL_MIPGAP,
                    Model, ModelError, fix_binaries)
from .result import (INFEASIBLE, OPTIMAL, TIME_LIMIT, UNBOUNDED, LpSolution, MipSolution,
                     dual_objective)
from .simplex import solve_lp_builtin

__all__ = [
    "BINARY", "CONTINUOUS", "EQ", "GE", "LE", "TOL_FEAS", "TOL_GAP", "TOL_INT", "TOL_MIPGAP",
    "INFEASIBLE", "OPTIMAL", "TIME_LIMIT", "UNBOUNDED",
    "Model", "ModelError", "LpSolution", "MipSolution",
    "fix_binaries", "solve_lp", "solve_milp", "dual_objective", "to_lp_string", "write_lp",
]


def solve_lp(model: Model, backend="builtin") -> LpSolution:
    if backend == "builtin":
        return solve_lp_builtin(model)
    if backend == "highs":
        return solve_lp_highs(model)
    return backend.solve_lp(model)


def solve_milp(model: Model, time_limit: float | None = None, tol_mipgap: float = TOL_MIPGAP,
               backend="builtin") -> MipSolution:
    if backend == "builtin":
        return solve_milp_builtin(model, solve_lp_builtin, time_limit, tol_mipgap)
    if backend == "highs":
        return solve_milp_highs(model, time_limit, tol_mipgap)
    return backend.solve_milp(model, time_limit, tol_mipgap)
