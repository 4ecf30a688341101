"""Best-bound branch-and-bound over LP relaxations."""

from __future__ import annotations

import heapq
import math
import time

import numpy as np

from .model import TOL_INT, TOL_MIPGAP, Model
from .result import INFEASIBLE, OPTIMAL, TIME_LIMIT, UNBOUNDED, MipSolution


def solve_milp_builtin(model: Model, lp_solver, time_limit: float | None = None,
                       tol_mipgap: float = TOL_MIPGAP, node_limit: int | None = None) -> MipSolution:
    """Branch on the most fractional binary, always expanding the best bound.

    Work is done in minimization form; ``bound`` and ``objective`` are mapped
    back to the model's sense on return.
    """
    comp = model.compile()
    sign = 1.0 if comp.sense == "min" else -1.0
    binaries = np.flatnonzero(comp.binary)
    start = time.monotonic()
    relaxed = model.copy()
    relaxed.kinds = ["continuous"] * model.n_vars

    def relax(lb, ub):
        m = relaxed.copy()
        m.lb, m.ub = list(lb), list(ub)
        return lp_solver(m)

    root = relax(comp.lb, comp.ub)
    nodes = 1
    if root.status == INFEASIBLE:
        return MipSolution(INFEASIBLE, nodes=nodes)
    if root.status == UNBOUNDED:
        return MipSolution(UNBOUNDED, nodes=nodes)

    best_x, best = None, math.inf
    counter = 0
    heap = [(sign * root.objective, counter, comp.lb.copy(), comp.ub.copy(), root)]
    global_bound = sign * root.objective
    proven = True
    while heap:
        bound, _, lb, ub, sol = heapq.heappop(heap)
        global_bound = bound
        if bound >= best - _gap(best, tol_mipgap):
            global_bound = min(bound, best)
            heap.clear()
            break
        if (time_limit is not None and time.monotonic() - start > time_limit) or \
                (node_limit is not None and nodes >= node_limit):
            proven = False
            heapq.heappush(heap, (bound, counter, lb, ub, sol))
            break
        x = sol.x
        frac = np.abs(x[binaries] - np.round(x[binaries]))
        if binaries.size == 0 or frac.max() <= TOL_INT:
            value = sign * sol.objective
            if value < best:
                best, best_x = value, x.copy()
                best_x[binaries] = np.round(best_x[binaries])
            continue
        # most fractional; lowest index breaks ties
        k = int(binaries[np.argmax(frac)])
        for value in (0.0, 1.0):
            clb, cub = lb.copy(), ub.copy()
            clb[k] = cub[k] = value
            child = relax(clb, cub)
            nodes += 1
            if child.status != OPTIMAL:
                continue
            child_bound = sign * child.objective
            assert child_bound >= bound - 1e-6 * (1 + abs(bound)), "child bound below parent"
            if child_bound < best - _gap(best, tol_mipgap):
                counter += 1
                heapq.heappush(heap, (child_bound, counter, clb, cub, child))

    if heap:
        global_bound = min(global_bound, heap[0][0])
    if best_x is None:
        if proven:
            return MipSolution(INFEASIBLE, nodes=nodes)
        return MipSolution(TIME_LIMIT, nodes=nodes, bound=sign * global_bound, proven=False)
    status = OPTIMAL if proven else TIME_LIMIT
    return MipSolution(status, best_x, sign * best, sign * min(global_bound, best), nodes, proven)


def _gap(best: float, tol: float) -> float:
    return tol * (1 + abs(best)) if math.isfinite(best) else 0.0
