import math

import pytest

from helpers import enumerate_robust, toy_config, toy_feeder, toy_price
from mgramp.benders import (BendersOptions, bounds_update, make_optimality_cut, relative_gap,
                            solve_robust)
from mgramp.domain import UncertaintySpec
from mgramp.feeder import aggregate_net_load, ramp_bounds
from mgramp.milp import OPTIMAL, solve_milp
from mgramp.robust import solve_worst_case
from mgramp.scheduling import (UncertainRealization, build_master, build_monolithic,
                               build_recourse_lp)

DELTA = 1.5
RAMP = ramp_bounds(aggregate_net_load(toy_feeder()), DELTA)
CASES = {"load1": ("load", 1), "solar2": ("solar", 2), "price3": ("price", 3)}


@pytest.fixture(scope="module", params=sorted(CASES))
def enumerated(request):
    cat, budget = CASES[request.param]
    spec = UncertaintySpec(budget_hours=budget, active_categories={cat})
    best, best_x, table = enumerate_robust(toy_config(), toy_feeder(), toy_price(), DELTA, spec)
    return spec, best, table


def _check_trace(res, tol=1e-4):
    lbs, ubs = res.lower_bounds, res.upper_bounds
    assert all(b >= a - 1e-9 * max(1.0, abs(a)) for a, b in zip(lbs, lbs[1:]))
    assert all(ub >= lb - 1e-9 * max(1.0, abs(ub)) for lb, ub in zip(lbs, ubs))
    assert res.converged and res.gap <= tol


@pytest.mark.parametrize("variant", [
    {},
    {"scenario_copies": False},
    {"scenario_copies": False, "pareto_cuts": False, "forecast_scenario": False},
])
def test_robust_matches_enumeration(enumerated, variant):
    spec, best, _ = enumerated
    opts = BendersOptions(backend="builtin", tol_benders=1e-7, **variant)
    res = solve_robust(toy_config(), toy_feeder(), toy_price(), DELTA, spec, opts)
    _check_trace(res, 1e-7)
    assert res.objective == pytest.approx(best, rel=1e-5)


def test_cuts_are_valid_everywhere_and_tight(enumerated):
    spec, _, table = enumerated
    cfg, feeder, price = toy_config(), toy_feeder(), toy_price()
    zero = UncertainRealization.zero(3)
    for key in list(table)[::7]:
        x = dict(key)
        rec = build_recourse_lp(cfg, x, zero, RAMP, price, feeder)
        wc = solve_worst_case(rec, RAMP, feeder, price, spec)
        cut = make_optimality_cut(wc, x, rec)
        assert cut.evaluate(x) == pytest.approx(table[key], rel=1e-6, abs=1e-6)
        for other, worst in table.items():
            assert cut.evaluate(dict(other)) <= worst + 1e-6 * max(1.0, abs(worst))


def test_master_objective_rises_after_a_cut():
    cfg, feeder, price = toy_config(), toy_feeder(), toy_price()
    spec = UncertaintySpec(budget_hours=1, active_categories={"load"})
    first = build_master(cfg, price)
    sol1 = solve_milp(first.model)
    x = first.binaries_from(sol1.x)
    rec = build_recourse_lp(cfg, x, UncertainRealization.zero(3), RAMP, price, feeder)
    cut = make_optimality_cut(solve_worst_case(rec, RAMP, feeder, price, spec), x, rec, 1)
    second = build_master(cfg, price, [cut])
    sol2 = solve_milp(second.model)
    assert sol2.status == OPTIMAL
    assert sol2.objective >= sol1.objective - 1e-9
    theta = sol2.x[second.var("master", "theta")]
    assert theta >= cut.evaluate(second.binaries_from(sol2.x)) - 1e-6


def test_zero_budget_equals_monolithic():
    cfg, feeder, price = toy_config(), toy_feeder(), toy_price()
    mono = solve_milp(build_monolithic(cfg, price, RAMP).model)
    spec = UncertaintySpec(budget_hours=0, active_categories={"load"})
    res = solve_robust(cfg, feeder, price, DELTA, spec, BendersOptions(backend="builtin"))
    assert res.objective == pytest.approx(mono.objective, rel=1e-6)
    assert res.iterations <= 2


def test_iteration_limit_reports_gap():
    spec = UncertaintySpec(budget_hours=2, active_categories={"solar"})
    opts = BendersOptions(backend="builtin", max_iterations=1, scenario_copies=False,
                          forecast_scenario=False, pareto_cuts=False)
    res = solve_robust(toy_config(), toy_feeder(), toy_price(), DELTA, spec, opts)
    assert res.iterations == 1 and not res.converged
    assert res.gap > opts.tol_benders


def test_bounds_update_semantics():
    lb, ub = bounds_update(-50.0, 120.0, 30.0)
    assert (lb, ub) == (-50.0, 150.0)
    lb, ub = bounds_update(140.0, 130.0, 25.0, (lb, ub))
    assert (lb, ub) == (140.0, 150.0)
    assert relative_gap(lb, ub) == pytest.approx(10 / 150)
    assert relative_gap(-math.inf, ub) == math.inf
