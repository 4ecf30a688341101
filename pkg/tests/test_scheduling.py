import math

import numpy as np
import pytest

from helpers import toy_config, toy_feeder, toy_price
from mgramp.domain import (DispatchableUnit, FixedProfile, MicrogridConfig, PriceSeries,
                           RampPolicy, TimeGrid)
from mgramp.feeder import aggregate_net_load, ramp_bounds
from mgramp.milp import OPTIMAL, fix_binaries, solve_lp, solve_milp
from mgramp.scheduling import (GRID, ConfigurationError, UncertainRealization, build_master,
                               build_monolithic, build_recourse_lp, commitment_cost,
                               realized_ramp, recourse_at)

FAMILIES = [f"eq{k}" for k in range(4, 22)]


def test_bundled_binary_count(deterministic):
    built = deterministic[2.0][0]
    assert len(built.model.binary_indices) == 24 * (4 + 2 * 1 + 5) == 264


def test_every_family_tagged(deterministic):
    tags = set(deterministic[2.0][0].model.tags)
    assert set(FAMILIES) <= tags


def test_empty_entity_sets_contribute_nothing():
    cfg = MicrogridConfig(TimeGrid(3), units=toy_config().units,
                          fixed_profiles=toy_config().fixed_profiles)
    built = build_monolithic(cfg, toy_price(), RampPolicy.unbounded(3))
    tags = set(built.model.tags)
    for fam in ("eq11", "eq12", "eq13", "eq14", "eq15", "eq16", "eq17", "eq18", "eq19",
                "eq20", "eq21"):
        assert fam not in tags
    assert {"eq4", "eq6", "eq7", "eq9"} <= tags


def test_unbounded_ramp_drops_flexibility_rows(deterministic):
    built, sol, _ = deterministic[math.inf]
    assert built.rows_tagged("eq21") == []
    assert sol.objective <= deterministic[2.0][1].objective


def test_single_unit_hand_oracle():
    # unit forced on for the whole horizon; dispatch is bang-bang against the price
    unit = DispatchableUnit("G", p_min=1.0, p_max=4.0, ramp_up=5.0, ramp_down=5.0, min_up=5,
                            cost_marginal=20.0, initial_on=True, initial_on_hours=0)
    cfg = MicrogridConfig(TimeGrid(3), units=[unit],
                          fixed_profiles=[FixedProfile("L", "fixed_load", (2.0, 3.0, 2.5))])
    price = PriceSeries((30.0, 10.0, 50.0))
    built = build_monolithic(cfg, price, RampPolicy.unbounded(3))
    sol = solve_milp(built.model)
    sched = built.schedule(sol.x, sol.objective)
    assert np.allclose(sched.unit_power[0], [4.0, 1.0, 4.0])
    assert np.allclose(sched.grid_exchange, [-2.0, 2.0, -1.5])
    hand = 20 * 9.0 + (30 * -2.0 + 10 * 2.0 + 50 * -1.5)
    assert sol.objective == pytest.approx(hand)


def test_fixed_binary_lp_reproduces_objective(deterministic):
    built, sol, _ = deterministic[2.0]
    lp = fix_binaries(built.model, {j: round(sol.x[j]) for j in built.model.binary_indices})
    again = solve_lp(lp, "highs")
    assert again.objective == pytest.approx(sol.objective, rel=1e-7)


def test_zero_realization_recourse_equals_fixed_monolithic(bundled, deterministic):
    cfg, feeder, price = bundled
    built, sol, ramp = deterministic[2.0]
    binaries = built.binaries_from(sol.x)
    rec = build_recourse_lp(cfg, binaries, UncertainRealization.zero(24), ramp, price, feeder)
    assert rec.model.is_continuous
    res = solve_lp(rec.model, "highs")
    assert res.objective + commitment_cost(cfg, binaries) == pytest.approx(sol.objective,
                                                                          rel=1e-7)


def test_load_deviation_shifts_one_hours_bounds(bundled, net_load):
    _, feeder, _ = bundled
    ramp = ramp_bounds(net_load, 2.0)
    dev = np.zeros(24)
    dev[9] = 0.10
    real = UncertainRealization(dev, np.zeros(24), np.zeros(24))
    shifted = realized_ramp(ramp, feeder, real)
    extra = 0.10 * feeder.customer_load[9]
    assert shifted.lower[9] == pytest.approx(ramp.lower[9] - extra)
    assert shifted.upper[9] == pytest.approx(ramp.upper[9] - extra)
    assert shifted.lower[10] == pytest.approx(ramp.lower[10] + extra)
    untouched = [t for t in range(24) if t not in (9, 10)]
    assert np.array_equal(np.take(shifted.lower, untouched), np.take(ramp.lower, untouched))


def test_recourse_rows_carry_realized_bounds():
    cfg, feeder, price = toy_config(), toy_feeder(), toy_price()
    ramp = ramp_bounds(aggregate_net_load(feeder), 1.5)
    binaries = {("G1", "I", t): 1.0 for t in range(3)}
    binaries.update({("S1", s, t): 0.0 for s in "uv" for t in range(3)})
    base = build_recourse_lp(cfg, binaries, UncertainRealization.zero(3), ramp, price, feeder)
    real = UncertainRealization([0.0, -0.1, 0.0], [0.0, 0.2, 0.0], [0.1] * 3)
    model = recourse_at(base, ramp, feeder, real)
    shifted = realized_ramp(ramp, feeder, real)
    for t, (lo, hi) in base.ramp_rows.items():
        assert model.rhs[lo] == pytest.approx(shifted.lower[t])
        assert model.rhs[hi] == pytest.approx(shifted.upper[t])
    for t in range(3):
        j = base.var(GRID, "PM", t)
        assert model.objective[j] == pytest.approx(1.1 * base.model.objective[j])


def test_master_without_cuts_has_no_exchange_cost(bundled):
    cfg, _, price = bundled
    master = build_master(cfg, price)
    pm_cols = {j for (e, sym, _), j in master.var_map.items() if sym == "PM"}
    assert pm_cols and not pm_cols & set(master.model.objective)
    allowed = {"eq6", "eq9", "eq10", "eq11", "eq12", "eq13", "eq16", "eq17", "eq18", "eq19",
               "aux", "cut"}
    assert set(master.model.tags) <= allowed
    assert len(master.model.binary_indices) == 264


def test_master_with_units_locked_off():
    toy = toy_config()
    unit = DispatchableUnit("G1", p_min=0.5, p_max=3.0, ramp_up=2.0, ramp_down=2.0,
                            min_down=4, cost_marginal=20.0, cost_noload=4.0,
                            initial_on=False, initial_off_hours=0)
    cfg = MicrogridConfig(toy.time_grid, [unit], toy.storage, (), toy.fixed_profiles, 3.0)
    master = build_master(cfg, toy_price())
    sol = solve_milp(master.model)
    assert sol.status == OPTIMAL
    assert all(sol.x[master.var("G1", "I", t)] == 0 for t in range(3))


def test_unservable_load_is_a_configuration_fault():
    toy = toy_config()
    heavy = FixedProfile("base", "fixed_load", (20.0, 20.0, 20.0))
    cfg = MicrogridConfig(toy.time_grid, toy.units, toy.storage, (), [heavy], 3.0)
    sol = solve_milp(build_master(cfg, toy_price()).model)
    assert sol.status == "infeasible"


def test_invalid_config_rejected_before_building():
    toy = toy_config()
    bad = DispatchableUnit("G1", p_min=5.0, p_max=3.0, ramp_up=1.0, ramp_down=1.0)
    cfg = MicrogridConfig(toy.time_grid, [bad], fixed_profiles=toy.fixed_profiles)
    with pytest.raises(ConfigurationError):
        build_monolithic(cfg, toy_price(), RampPolicy.unbounded(3))
