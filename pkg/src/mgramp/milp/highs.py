"""HiGHS backend through ``scipy.optimize`` for desk-scale models."""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, linprog, milp

from .model import TOL_MIPGAP, Model, ModelError
from .result import INFEASIBLE, OPTIMAL, TIME_LIMIT, UNBOUNDED, LpSolution, MipSolution


def solve_lp_highs(model: Model) -> LpSolution:
    comp = model.compile()
    if comp.binary.any() and np.any(comp.lb[comp.binary] != comp.ub[comp.binary]):
        raise ModelError("solve_lp needs a continuous model; fix the binaries first")
    sign = 1.0 if comp.sense == "min" else -1.0
    A = comp.A
    ineq = comp.rel != 0
    eq = ~ineq
    # >= rows are negated into <= rows
    flip = np.where(comp.rel[ineq] > 0, -1.0, 1.0)
    A_ub = A[ineq].multiply(flip[:, None]).tocsr() if ineq.any() else None
    b_ub = comp.b[ineq] * flip if ineq.any() else None
    A_eq = A[eq] if eq.any() else None
    b_eq = comp.b[eq] if eq.any() else None
    bounds = list(zip(np.where(np.isfinite(comp.lb), comp.lb, None),
                      np.where(np.isfinite(comp.ub), comp.ub, None)))
    res = linprog(sign * comp.c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                  bounds=bounds, method="highs")
    if res.status == 2:
        return LpSolution(INFEASIBLE)
    if res.status == 3:
        return LpSolution(UNBOUNDED)
    if res.status != 0:
        raise RuntimeError(f"HiGHS LP failed: {res.message}")
    x = np.clip(res.x, comp.lb, comp.ub)
    duals = np.zeros(model.n_rows)
    if ineq.any():
        duals[ineq] = res.ineqlin.marginals * flip
    if eq.any():
        duals[eq] = res.eqlin.marginals
    duals *= sign
    reduced = comp.c - comp.A.T @ duals
    return LpSolution(OPTIMAL, x, float(comp.c @ x + comp.c0), duals, reduced, int(res.nit))


def solve_milp_highs(model: Model, time_limit: float | None = None,
                     tol_mipgap: float = TOL_MIPGAP) -> MipSolution:
    comp = model.compile()
    sign = 1.0 if comp.sense == "min" else -1.0
    lo = np.where(comp.rel >= 0, comp.b, -np.inf)
    hi = np.where(comp.rel <= 0, comp.b, np.inf)
    constraints = [LinearConstraint(comp.A, lo, hi)] if model.n_rows else []
    options = {"mip_rel_gap": tol_mipgap, "presolve": True}
    if time_limit is not None:
        options["time_limit"] = float(time_limit)
    res = milp(sign * comp.c, integrality=comp.binary.astype(int), bounds=Bounds(comp.lb, comp.ub),
               constraints=constraints, options=options)
    nodes = int(getattr(res, "mip_node_count", 0) or 0)
    if res.status == 2:
        return MipSolution(INFEASIBLE, nodes=nodes)
    if res.status == 3:
        return MipSolution(UNBOUNDED, nodes=nodes)
    if res.x is None:
        if res.status == 1:
            return MipSolution(TIME_LIMIT, nodes=nodes, proven=False)
        raise RuntimeError(f"HiGHS MILP failed: {res.message}")
    x = np.asarray(res.x, dtype=float)
    x[comp.binary] = np.round(x[comp.binary])
    objective = float(comp.c @ x + comp.c0)
    bound = getattr(res, "mip_dual_bound", None)
    bound = objective if bound is None or not math.isfinite(bound) else sign * bound + comp.c0
    proven = res.status == 0
    return MipSolution(OPTIMAL if proven else TIME_LIMIT, x, objective, bound, nodes, proven)
