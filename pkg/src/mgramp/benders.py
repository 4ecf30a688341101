"""Benders coordination: master commitment -> worst-case recourse -> optimality cut."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .domain import FeederProfile, MicrogridConfig, PriceSeries, Schedule, UncertaintySpec
from .feeder import aggregate_net_load, ramp_bounds
from .milp import GE, INFEASIBLE, OPTIMAL, dual_objective, solve_lp, solve_milp
from .robust import ConsistencyError, WorstCase, dualize, solve_worst_case
from .scheduling import (DEFAULT_SLACK_PENALTY, BuiltProblem, ConfigurationError, Cut,
                         UncertainRealization, build_master, build_recourse_lp, commitment_cost,
                         exchange_floor, realized_ramp, recourse_at)

log = logging.getLogger(__name__)

CUT_RTOL = 1e-6


@dataclass
class BendersOptions:
    tol_benders: float = 1e-4
    max_iterations: int = 50
    slack_penalty: float | None = DEFAULT_SLACK_PENALTY
    backend: object = "highs"
    # bound theta by the forecast-scenario recourse cost from the first iteration
    forecast_scenario: bool = True
    # epigraph floor; None -> cheapest conceivable exchange cost
    floor: float | None = None
    master_mipgap: float = 1e-7
    worst_case_mipgap: float = 1e-7
    time_limit: float | None = None
    # choose undominated cut multipliers among the optimal recourse duals
    pareto_cuts: bool = True
    # slack penalty of the cheap worst-case pass for load/solar uncertainty;
    # None evaluates every commitment at the full penalty
    screening_penalty: float | None = 1e3
    # also keep a dispatch copy of every worst-case realization in the master
    scenario_copies: bool = True


@dataclass
class IterationRecord:
    iteration: int
    lower_bound: float
    upper_bound: float
    gap: float
    master_objective: float
    commitment_cost: float
    worst_cost: float
    worst_hours: dict
    ramp_slack: float
    # False when the cut came from the reduced-penalty screening pass only
    exact: bool = True

    def as_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "lower_bound": self.lower_bound,
            "upper_bound": self.upper_bound,
            "gap": self.gap,
            "master_objective": self.master_objective,
            "commitment_cost": self.commitment_cost,
            "worst_cost": self.worst_cost,
            "worst_hours": {k: list(map(int, v)) for k, v in self.worst_hours.items()},
            "ramp_slack": self.ramp_slack,
            "exact": self.exact,
        }


@dataclass
class RobustResult:
    schedule: Schedule
    worst_case: WorstCase
    binaries: dict
    lower_bounds: list
    upper_bounds: list
    iterations: int
    converged: bool
    trace: list = field(default_factory=list)
    cuts: list = field(default_factory=list)

    @property
    def objective(self) -> float:
        return self.upper_bounds[-1]

    @property
    def gap(self) -> float:
        ub, lb = self.upper_bounds[-1], self.lower_bounds[-1]
        return (ub - lb) / max(1.0, abs(ub))


def relative_gap(lb: float, ub: float) -> float:
    if not (math.isfinite(lb) and math.isfinite(ub)):
        return math.inf
    return (ub - lb) / max(1.0, abs(ub))


def bounds_update(master_obj: float, subproblem_cost: float, generation_cost_at_incumbent: float,
                  previous: tuple[float, float] = (-math.inf, math.inf)) -> tuple[float, float]:
    """New (LB, UB): the master objective, and the best incumbent cost so far."""
    lb = max(previous[0], master_obj)
    ub = min(previous[1], generation_cost_at_incumbent + subproblem_cost)
    return lb, ub


def pareto_duals(worst_case: WorstCase, recourse: BuiltProblem, master_binaries: dict,
                 core: dict, backend="highs") -> np.ndarray | None:
    """Recourse duals that are optimal at ``master_binaries`` and best at ``core``.

    Degenerate recourse LPs have many optimal dual vectors; the ones with the
    largest value at an interior point of the commitment hull give cuts that
    are not dominated (Magnanti-Wong).  Returns ``None`` if the auxiliary LP
    fails, in which case the caller keeps the original duals.
    """
    if worst_case.model is None:
        return None
    dual = dualize(worst_case.model)
    row_dual = dual.meta["row_dual"]
    obj = dict(dual.objective)
    q = worst_case.worst_cost
    # keep optimality at x_hat (to solver precision)
    dual.add_constraint(obj, GE, q - dual.objective_constant - 1e-9 * max(1.0, abs(q)),
                        "optimal_at_incumbent")
    core_obj = dict(obj)
    for k, r in recourse.fix_rows.items():
        y = row_dual[r]
        core_obj.pop(y, None)
        if core[k] != 0.0:
            core_obj[y] = core[k]
    dual.set_objective(core_obj, "max", dual.objective_constant)
    sol = solve_lp(dual, backend)
    if sol.status != OPTIMAL:
        return None
    return np.array([sol.x[y] for y in row_dual])


def make_optimality_cut(worst_case: WorstCase, master_binaries: dict, recourse: BuiltProblem,
                        iteration: int = 0, certificate_model=None, duals=None) -> Cut:
    """Cut from the duals of the binary-fixing rows at the worst case.

    The recourse duals stay dual-feasible for any right-hand side, so
    ``worst_cost + sum(mu_k * (x_k - x_hat_k))`` underestimates the
    worst-case cost at every commitment and equals it at ``x_hat``.
    ``duals`` overrides the multipliers of the confirming solve (for instance
    with :func:`pareto_duals`).
    """
    y = worst_case.duals if duals is None else duals
    mu = {k: float(y[r]) for k, r in recourse.fix_rows.items()}
    if certificate_model is not None:
        cert = dual_objective(certificate_model, y, tol=1e-6)
        if abs(cert - worst_case.worst_cost) > 1e-5 * max(1.0, abs(worst_case.worst_cost)):
            raise ConsistencyError(f"dual certificate {cert:.6f} does not reproduce worst cost "
                                   f"{worst_case.worst_cost:.6f}")
    constant = worst_case.worst_cost - sum(mu[k] * master_binaries[k] for k in mu)
    coefficients = {k: a for k, a in mu.items() if a != 0.0}
    cut = Cut(constant, coefficients, iteration)
    value = cut.evaluate(master_binaries)
    if abs(value - worst_case.worst_cost) > CUT_RTOL * max(1.0, abs(worst_case.worst_cost)):
        raise ConsistencyError("cut is not tight at its generating commitment")
    return cut


def _initial_screen_penalty(opts: BendersOptions, spec: UncertaintySpec) -> float | None:
    feeder_active = any(c in spec.active_categories and spec.budget(c) > 0 and spec.error(c) > 0
                        for c in ("load", "solar"))
    pen = opts.screening_penalty
    if not feeder_active or pen is None or opts.slack_penalty is None:
        return None
    return pen if pen < opts.slack_penalty else None


def solve_robust(config: MicrogridConfig, feeder: FeederProfile, price: PriceSeries, delta: float,
                 spec: UncertaintySpec, options: BendersOptions | None = None,
                 callback=None) -> RobustResult:
    """Robust schedule for the budgeted uncertainty set ``spec``.

    ``delta = math.inf`` disables the ramp constraint.  ``callback`` is called
    with every :class:`IterationRecord`.
    """
    opts = options or BendersOptions()
    problems = spec.validate(config.horizon)
    if problems:
        raise ConfigurationError(problems)
    T = config.horizon
    net = aggregate_net_load(feeder)
    ramp = ramp_bounds(net, delta, config.initial_utility_power)
    floor = opts.floor
    if floor is None:
        err = spec.error("price") if "price" in spec.active_categories else 0.0
        floor = exchange_floor(config, price, err)
    zero = UncertainRealization.zero(T)
    base_price = price.as_array()

    cuts: list[Cut] = []
    scenarios: list = []
    lbs, ubs, trace = [], [], []
    lb, ub = -math.inf, math.inf
    best = None
    evaluated = {}     # signature -> (iteration, worst case, recourse) of exact evaluations
    screened = set()
    core = None
    converged = False
    screen_pen = _initial_screen_penalty(opts, spec)
    for k in range(1, opts.max_iterations + 1):
        master = build_master(config, price, cuts, floor,
                              ramp if opts.forecast_scenario else None, opts.slack_penalty,
                              scenarios)
        msol = solve_milp(master.model, opts.time_limit, opts.master_mipgap, opts.backend)
        if msol.status == INFEASIBLE:
            raise ConfigurationError(["master problem infeasible: no commitment can serve the load"])
        if msol.status != OPTIMAL:
            raise ConsistencyError(f"master solve ended with status {msol.status}")
        x_hat = master.binaries_from(msol.x)
        signature = tuple(sorted(x_hat.items()))
        commit = commitment_cost(config, x_hat)
        prev_lb = lb
        # master objective is a valid bound only up to its own optimality gap
        lb = max(lb, min(msol.objective, msol.bound))
        if lb < prev_lb - 1e-9 * max(1.0, abs(prev_lb)):
            raise ConsistencyError("lower bound decreased")

        repeated = signature in evaluated
        exact = True
        if repeated:
            # a tight cut already sits here, so the master must have closed the gap
            if relative_gap(lb, ub) > opts.tol_benders:
                raise ConsistencyError(f"commitment of iteration {evaluated[signature][0]} "
                                       f"repeated at iteration {k} with gap "
                                       f"{relative_gap(lb, ub):.3e}")
            _, wc, recourse = evaluated[signature]
        else:
            if screen_pen is not None:
                # cheap pass: a smaller slack penalty gives a smaller big-M; its value
                # never exceeds the true worst case, so its cut stays valid
                rec_s = build_recourse_lp(config, x_hat, zero, ramp, price, feeder, screen_pen)
                wc_s = solve_worst_case(rec_s, ramp, feeder, price, spec, opts.backend,
                                        opts.worst_case_mipgap)
                near = relative_gap(lb, min(ub, commit + wc_s.worst_cost)) <= opts.tol_benders
                exact = k == 1 or near or signature in screened
                screened.add(signature)
                wc, recourse = wc_s, rec_s
            if exact:
                recourse = build_recourse_lp(config, x_hat, zero, ramp, price, feeder,
                                             opts.slack_penalty)
                wc = solve_worst_case(recourse, ramp, feeder, price, spec, opts.backend,
                                      opts.worst_case_mipgap)
                evaluated[signature] = (k, wc, recourse)
                if screen_pen is not None and near and \
                        wc.worst_cost > wc_s.worst_cost + opts.tol_benders * max(1.0, abs(wc.worst_cost)):
                    # screening missed slack near the optimum: stop relying on it
                    screen_pen = None
                    log.info("screening disabled at iteration %d", k)
                if commit + wc.worst_cost < ub:
                    best = (x_hat, wc, recourse)
                    ub = commit + wc.worst_cost
        lbs.append(lb)
        ubs.append(ub)
        rec = IterationRecord(k, lb, ub, relative_gap(lb, ub), msol.objective, commit,
                              wc.worst_cost, wc.selected_hours,
                              float(recourse.schedule(wc.x).ramp_slack.sum()), exact)
        trace.append(rec)
        log.info("iteration %d: LB=%.4f UB=%.4f gap=%.2e%s", k, lb, ub, rec.gap,
                 "" if exact else " (screened)")
        if callback is not None:
            callback(rec)
        if rec.gap <= opts.tol_benders:
            converged = True
            break
        duals = None
        if opts.pareto_cuts:
            core = ({b: 0.5 for b in x_hat} if core is None
                    else {b: 0.5 * (core[b] + x_hat[b]) for b in x_hat})
            duals = pareto_duals(wc, recourse, x_hat, core, opts.backend)
        cuts.append(make_optimality_cut(wc, x_hat, recourse, k, wc.model, duals))
        if opts.scenario_copies:
            real = wc.realization
            scenarios.append((realized_ramp(ramp, feeder, real),
                              base_price * (1 + real.deviation("price"))))

    x_best, wc_best, rec_best = best
    schedule = rec_best.schedule(wc_best.x, ubs[-1])
    return RobustResult(schedule, wc_best, x_best, lbs, ubs, len(lbs), converged, trace, cuts)


def deterministic_binaries(built: BuiltProblem, x: np.ndarray) -> dict:
    return built.binaries_from(x)
