from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import Model, TOL_FEAS

OPTIMAL, INFEASIBLE, UNBOUNDED, TIME_LIMIT = "optimal", "infeasible", "unbounded", "time_limit"


@dataclass
class LpSolution:
    """Result of an LP solve.

    ``duals[i]`` is the derivative of the objective with respect to the
    right-hand side of row ``i`` (in the model's own sense), so a binding
    ``>=`` row of a minimization has a nonnegative dual.
    """

    status: str
    x: np.ndarray | None = None
    objective: float = math.nan
    duals: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


@dataclass
class MipSolution:
    status: str
    x: np.ndarray | None = None
    objective: float = math.nan
    bound: float = math.nan
    nodes: int = 0
    # False when a time or node limit stopped the search before the gap closed
    proven: bool = True
    trace: list = field(default_factory=list)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def dual_objective(model: Model, duals: np.ndarray, tol: float = TOL_FEAS) -> float:
    """Lagrangian dual value of ``duals``; -inf (min) / +inf (max) if infeasible."""
    comp = model.compile()
    y = np.asarray(duals, dtype=float)
    sign = 1.0 if comp.sense == "min" else -1.0
    bad = math.inf * -sign
    # sign conditions on row duals, expressed for a minimization
    ys = sign * y
    if np.any(ys[comp.rel > 0] < -tol * (1 + np.abs(ys[comp.rel > 0]))):
        return bad
    if np.any(ys[comp.rel < 0] > tol * (1 + np.abs(ys[comp.rel < 0]))):
        return bad
    r = sign * (comp.c - comp.A.T @ y)
    total = float(comp.b @ ys) + sign * comp.c0
    for j, rj in enumerate(r):
        if abs(rj) <= tol * (1 + abs(comp.c[j])):
            continue
        bound = comp.lb[j] if rj > 0 else comp.ub[j]
        if not math.isfinite(bound):
            return bad
        total += rj * bound
    return sign * total
