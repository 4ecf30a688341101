"""Small instances and brute-force oracles shared by the test modules."""

from __future__ import annotations

import itertools

import numpy as np

from mgramp.domain import (AdjustableLoad, DispatchableUnit, FeederProfile, FixedProfile,
                           MicrogridConfig, PriceSeries, StorageUnit, TimeGrid, UncertaintySpec)
from mgramp.feeder import aggregate_net_load, ramp_bounds
from mgramp.milp import OPTIMAL, fix_binaries, solve_lp
from mgramp.scheduling import (UncertainRealization, build_monolithic, build_recourse_lp,
                               commitment_cost, recourse_at)


def toy_config(with_load: bool = False) -> MicrogridConfig:
    """Three hours, one unit, one storage unit and optionally one adjustable load."""
    units = [DispatchableUnit("G1", p_min=0.5, p_max=3.0, ramp_up=2.0, ramp_down=2.0,
                              min_up=2, min_down=1, cost_marginal=20.0, cost_noload=4.0,
                              cost_startup=6.0)]
    storage = [StorageUnit("S1", p_ch_min=0.0, p_ch_max=1.0, p_dch_min=0.0, p_dch_max=1.0,
                           c_min=0.0, c_max=2.0, c_initial=1.0, efficiency=0.9)]
    loads = []
    if with_load:
        loads = [AdjustableLoad("L1", (0.2,) * 3, (1.0,) * 3, 1, 1.0, 1, 3)]
    fixed = [FixedProfile("base", "fixed_load", (2.0, 3.5, 2.5))]
    return MicrogridConfig(TimeGrid(3), units, storage, loads, fixed, line_capacity=3.0)


def toy_feeder() -> FeederProfile:
    return FeederProfile((5.0, 8.0, 6.0), (0.0, 2.0, 3.0))


def toy_price() -> PriceSeries:
    return PriceSeries((30.0, 50.0, 40.0))


def budgeted_realizations(spec: UncertaintySpec, horizon: int):
    """Every extreme point of the budgeted set (zero or +-error per chosen hour)."""
    per_cat = {}
    for cat in ("load", "solar", "price"):
        g = spec.budget(cat)
        err = spec.error(cat)
        options = []
        for k in range(g + 1):
            for hours in itertools.combinations(range(horizon), k):
                for signs in itertools.product((-1.0, 1.0), repeat=k):
                    dev = np.zeros(horizon)
                    dev[list(hours)] = err * np.array(signs)
                    options.append(dev)
        per_cat[cat] = options
    for load, solar, price in itertools.product(per_cat["load"], per_cat["solar"],
                                                per_cat["price"]):
        yield UncertainRealization(load, solar, price)


def feasible_assignments(config, price, ramp):
    """Binary assignments admitting a dispatch, found by fixing the monolithic model."""
    mono = build_monolithic(config, price, ramp)
    keys = mono.binary_keys
    for bits in itertools.product((0.0, 1.0), repeat=len(keys)):
        x = dict(zip(keys, bits))
        if any(x[("S1", "u", t)] + x[("S1", "v", t)] > 1 for t in range(config.horizon)):
            continue
        lp = fix_binaries(mono.model, {mono.var_map[k]: v for k, v in x.items()})
        if solve_lp(lp, "highs").status == OPTIMAL:
            yield x


def enumerate_robust(config, feeder, price, delta, spec):
    """min over assignments of commitment cost + max over extreme realizations."""
    ramp = ramp_bounds(aggregate_net_load(feeder), delta)
    reals = list(budgeted_realizations(spec, config.horizon))
    zero = UncertainRealization.zero(config.horizon)
    best, best_x, table = np.inf, None, {}
    for x in feasible_assignments(config, price, ramp):
        base = build_recourse_lp(config, x, zero, ramp, price, feeder)
        worst = max(solve_lp(recourse_at(base, ramp, feeder, r), "highs").objective
                    for r in reals)
        total = commitment_cost(config, x) + worst
        table[tuple(sorted(x.items()))] = worst
        if total < best:
            best, best_x = total, x
    return best, best_x, table
