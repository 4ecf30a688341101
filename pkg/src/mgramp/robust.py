"""Worst-case recourse cost over the budgeted uncertainty set.

The recourse LP is dualized; with the dual maximization in hand the
adversary's choice of deviations joins the same maximization.  Each
uncertain hour gets two selector binaries (deviation at the upper or lower
extreme of its interval), the number of selected hours is capped by the
budget, and selector x dual products are linearized with McCormick rows
whose big-M values come from bounds implied by the dual constraints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .domain import CATEGORIES, FeederProfile, PriceSeries, RampPolicy, UncertaintySpec
from .milp import BINARY, EQ, GE, LE, OPTIMAL, Model, ModelError, solve_lp, solve_milp
from .scheduling import (GRID, BuiltProblem, UncertainRealization, recourse_at)

CONFIRM_RTOL = 1e-5


class BigMError(ModelError):
    """A dual variable multiplied by a selector has no finite implied bound."""


class ConsistencyError(RuntimeError):
    """The worst-case MILP and the confirming primal solve disagree."""


@dataclass
class WorstCase:
    realization: UncertainRealization
    worst_cost: float
    duals: np.ndarray  # recourse-LP row multipliers at the worst case
    x: np.ndarray  # recourse-LP primal solution at the worst case
    milp_objective: float = math.nan
    selected_hours: dict = field(default_factory=dict)  # category -> 1-based hours
    model: Model | None = None  # recourse LP patched to the worst-case realization


def dualize(problem: BuiltProblem | Model) -> Model:
    """Exact LP dual: a maximization model for a minimization LP and vice versa.

    Finite variable bounds other than a plain sign restriction become explicit
    primal rows first, so every primal bound has its own dual variable.
    ``meta['row_dual'][i]`` is the dual variable of primal row ``i`` and
    ``meta['col_row'][j]`` the dual constraint of primal variable ``j``.
    """
    built = problem if isinstance(problem, BuiltProblem) else None
    model = built.model if built else problem
    if not model.is_continuous or any(k == BINARY for k in model.kinds):
        raise ModelError("dualize needs a pure LP; fix the binaries first")
    comp = model.compile()
    sign = 1.0 if comp.sense == "min" else -1.0
    c = sign * comp.c
    n = model.n_vars

    dual = Model(f"dual({model.name})")
    row_dual = []
    for i, r in enumerate(comp.rel):
        lo, hi = {1: (0.0, math.inf), -1: (-math.inf, 0.0), 0: (-math.inf, math.inf)}[int(r)]
        row_dual.append(dual.add_var(f"y[{model.row_names[i]}]", lo, hi))
    obj = {y: comp.b[i] for i, y in enumerate(row_dual) if comp.b[i] != 0.0}
    bound_dual = {}
    col_rel = []
    for j in range(n):
        lo, hi = comp.lb[j], comp.ub[j]
        extra = []
        if lo == 0.0 and hi == math.inf:
            col_rel.append(LE)
        elif lo == -math.inf and hi == 0.0:
            col_rel.append(GE)
        else:
            col_rel.append(EQ)
            if lo == hi:
                y = dual.add_var(f"y[fix:{model.var_names[j]}]", -math.inf, math.inf)
                extra.append((y, lo))
            else:
                if math.isfinite(lo):
                    extra.append((dual.add_var(f"y[lb:{model.var_names[j]}]", 0.0, math.inf), lo))
                if math.isfinite(hi):
                    extra.append((dual.add_var(f"y[ub:{model.var_names[j]}]", -math.inf, 0.0), hi))
        for y, rhs in extra:
            if rhs != 0.0:
                obj[y] = rhs
        bound_dual[j] = [y for y, _ in extra]

    At = comp.A.tocsc()
    col_row = []
    for j in range(n):
        start, end = At.indptr[j], At.indptr[j + 1]
        row = {row_dual[i]: a for i, a in zip(At.indices[start:end], At.data[start:end])}
        for y in bound_dual[j]:
            row[y] = 1.0
        col_row.append(dual.add_constraint(row, col_rel[j], c[j], f"dual[{model.var_names[j]}]"))
    if sign > 0:
        dual.set_objective(obj, "max", comp.c0)
    else:
        # built for min(-c x); negating gives the min-form dual of the max primal
        dual.set_objective({y: -a for y, a in obj.items()}, "min", comp.c0)
    dual.meta = {"row_dual": row_dual, "col_row": col_row, "bound_dual": bound_dual,
                 "primal_sense": comp.sense}
    if built is not None:
        dual.meta.update(ramp_rows=dict(built.ramp_rows),
                         pm_vars=[built.var_map[(GRID, "PM", t)] for t in range(built.config.horizon)],
                         tau=built.config.tau)
    return dual


def infer_bounds(model: Model) -> tuple[np.ndarray, np.ndarray]:
    """Variable bounds tightened by every single-variable row of ``model``."""
    comp = model.compile()
    lo, hi = comp.lb.copy(), comp.ub.copy()
    A = comp.A
    for i in range(model.n_rows):
        start, end = A.indptr[i], A.indptr[i + 1]
        if end - start != 1:
            continue
        j, a = A.indices[start], A.data[start]
        v = comp.b[i] / a
        r = int(comp.rel[i])
        if r == 0:
            lo[j], hi[j] = max(lo[j], v), min(hi[j], v)
        elif (r < 0) == (a > 0):  # a*y <= b with a>0, or a*y >= b with a<0
            hi[j] = min(hi[j], v)
        else:
            lo[j] = max(lo[j], v)
    return lo, hi


def build_worstcase_milp(dual: Model, spec: UncertaintySpec, feeder: FeederProfile,
                         price: PriceSeries) -> Model:
    """Join the adversary's extreme-point choice to the recourse dual."""
    T = len(price)
    meta = dual.meta
    m = dual.copy("worst_case")
    m.meta = dict(meta)
    obj = dict(dual.objective)
    selectors: dict = {}
    budget_rows = {}

    def add_selectors(cat, hours):
        rows = []
        for t in hours:
            sp = m.add_var(f"s+[{cat},{t + 1}]", kind=BINARY)
            sm = m.add_var(f"s-[{cat},{t + 1}]", kind=BINARY)
            m.add_constraint({sp: 1, sm: 1}, LE, 1, f"one_side[{cat},{t + 1}]")
            selectors[(cat, t)] = (sp, sm)
            rows.extend([(sp, 1.0), (sm, 1.0)])
        budget_rows[cat] = m.add_constraint(rows, LE, spec.budget(cat), f"budget[{cat}]")

    feeder_cats = [c for c in ("load", "solar") if c in spec.active_categories]
    if feeder_cats:
        lo, hi = infer_bounds(dual)
        w = []  # per hour: sum of ramp-row duals as (var list)
        for t in range(T):
            rows = meta["ramp_rows"].get(t, (None, None))
            w.append([meta["row_dual"][r] for r in rows if r is not None])

        def w_range(t):
            if t >= T:
                return 0.0, 0.0
            return sum(lo[y] for y in w[t]), sum(hi[y] for y in w[t])

        q_vars = {}
        for cat in feeder_cats:
            values = np.asarray(feeder.customer_load if cat == "load" else feeder.customer_solar)
            # net-load change per unit selector
            k = spec.error(cat) * values * (1.0 if cat == "load" else -1.0)
            hours = [t for t in range(T) if k[t] != 0.0]
            add_selectors(cat, hours)
            for t in hours:
                if t not in q_vars:
                    (a_lo, a_hi), (b_lo, b_hi) = w_range(t + 1), w_range(t)
                    q_lo, q_hi = a_lo - b_hi, a_hi - b_lo
                    if not (math.isfinite(q_lo) and math.isfinite(q_hi)):
                        raise BigMError(f"no finite bound on ramp-row duals near hour {t + 1}; "
                                        "a ramp slack penalty is required")
                    q = m.add_var(f"q[{t + 1}]", q_lo, q_hi)
                    row = {q: 1.0}
                    for y in (w[t + 1] if t + 1 < T else []):
                        row[y] = row.get(y, 0.0) - 1.0
                    for y in w[t]:
                        row[y] = row.get(y, 0.0) + 1.0
                    m.add_constraint(row, EQ, 0.0, f"q_def[{t + 1}]")
                    q_vars[t] = (q, q_lo, q_hi)
                q, q_lo, q_hi = q_vars[t]
                for sel, sgn in zip(selectors[(cat, t)], (1.0, -1.0)):
                    phi = m.add_var(f"phi[{cat},{t + 1},{'+' if sgn > 0 else '-'}]", q_lo, q_hi)
                    m.add_constraint({phi: 1, sel: -q_lo}, GE, 0, "mc1")
                    m.add_constraint({phi: 1, sel: -q_hi}, LE, 0, "mc2")
                    m.add_constraint({phi: 1, q: -1, sel: -q_hi}, GE, -q_hi, "mc3")
                    m.add_constraint({phi: 1, q: -1, sel: -q_lo}, LE, -q_lo, "mc4")
                    obj[phi] = obj.get(phi, 0.0) + sgn * k[t]

    if "price" in spec.active_categories:
        rho = price.as_array()
        err = spec.error("price")
        hours = [t for t in range(T) if rho[t] != 0.0]
        add_selectors("price", hours)
        for t in hours:
            row = meta["col_row"][meta["pm_vars"][t]]
            sp, sm = selectors[("price", t)]
            scale = rho[t] * meta["tau"] * err
            m.add_to_row(row, {sp: -scale, sm: scale})

    m.set_objective(obj, "max", dual.objective_constant)
    m.meta.update(selectors=selectors, budget_rows=budget_rows)
    return m


def realization_from(selectors: dict, x: np.ndarray, spec: UncertaintySpec,
                     horizon: int) -> UncertainRealization:
    dev = {c: np.zeros(horizon) for c in CATEGORIES}
    for (cat, t), (sp, sm) in selectors.items():
        dev[cat][t] = spec.error(cat) * (round(x[sp]) - round(x[sm]))
    return UncertainRealization(dev["load"], dev["solar"], dev["price"])


def extract_worst_case(solution, wc_model: Model, recourse: BuiltProblem, ramp_base: RampPolicy,
                       feeder: FeederProfile, spec: UncertaintySpec, backend="builtin") -> WorstCase:
    """Read the realization off the selectors and confirm it by a primal solve."""
    if solution.status != OPTIMAL:
        raise ConsistencyError(f"worst-case MILP not solved to optimality ({solution.status})")
    T = recourse.config.horizon
    real = realization_from(wc_model.meta["selectors"], solution.x, spec, T)
    at_wc = recourse_at(recourse, ramp_base, feeder, real)
    lp = solve_lp(at_wc, backend)
    if lp.status != OPTIMAL:
        raise ConsistencyError(f"confirming recourse solve returned {lp.status}")
    gap = abs(lp.objective - solution.objective)
    if gap > CONFIRM_RTOL * max(1.0, abs(lp.objective)):
        hours = _deviating_hours(real)
        raise ConsistencyError(
            f"worst-case MILP value {solution.objective:.6f} differs from recourse value "
            f"{lp.objective:.6f} at realization with deviating hours {hours}; big-M too small?")
    return WorstCase(real, lp.objective, lp.duals, lp.x, solution.objective,
                     _deviating_hours(real), at_wc)


def _deviating_hours(real: UncertainRealization) -> dict:
    return {c: [int(t) + 1 for t in np.flatnonzero(real.deviation(c))] for c in CATEGORIES}


def solve_worst_case(recourse: BuiltProblem, ramp_base: RampPolicy, feeder: FeederProfile,
                     price: PriceSeries, spec: UncertaintySpec, backend="builtin",
                     tol_mipgap: float = 1e-7) -> WorstCase:
    """Dualize, build the budgeted worst-case MILP, solve it and confirm the result."""
    dual = dualize(recourse)
    wc = build_worstcase_milp(dual, spec, feeder, price)
    sol = solve_milp(wc, tol_mipgap=tol_mipgap, backend=backend)
    return extract_worst_case(sol, wc, recourse, ramp_base, feeder, spec, backend)
