"""Independent schedule oracle and Monte Carlo assessment.

``check_schedule`` re-derives every equation family with plain array
arithmetic from the configuration.  It shares no code with the model
builders; minimum up/down and minimum-duration rules are checked by counting
consecutive hours in the raw binary sequences.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .domain import (CATEGORIES, FeederProfile, MicrogridConfig, PriceSeries, RampPolicy, Schedule,
                     UncertaintySpec)
from .feeder import aggregate_net_load, ramp_bounds
from .milp import OPTIMAL, solve_lp
from .scheduling import (DEFAULT_SLACK_PENALTY, GRID, UncertainRealization, binaries_from_schedule,
                         build_recourse_lp, commitment_cost, realized_ramp, recourse_at)

TAGS = tuple(f"eq{k}" for k in range(4, 22)) + ("aux",)


@dataclass(frozen=True)
class Violation:
    tag: str
    entity: str
    hour: int | None  # 1-based; None for horizon-wide rows
    lhs: float
    bound: float
    magnitude: float

    def as_dict(self) -> dict:
        return {"tag": self.tag, "entity": self.entity, "hour": self.hour,
                "lhs": self.lhs, "bound": self.bound, "magnitude": self.magnitude}


@dataclass
class ViolationReport:
    entries: list = field(default_factory=list)
    tolerance: float = 1e-6

    def __bool__(self) -> bool:
        return bool(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def ok(self) -> bool:
        return not self.entries

    def by_tag(self, tag: str) -> list:
        return [e for e in self.entries if e.tag == tag]

    @property
    def worst_magnitude(self) -> dict:
        out: dict = {}
        for e in self.entries:
            out[e.tag] = max(out.get(e.tag, 0.0), e.magnitude)
        return out

    def as_dict(self) -> dict:
        return {"ok": self.ok, "tolerance": self.tolerance,
                "worst_magnitude": self.worst_magnitude,
                "entries": [e.as_dict() for e in self.entries]}

    def to_json(self, **kw) -> str:
        return json.dumps(self.as_dict(), **kw)


class _Checker:
    def __init__(self, tol):
        self.tol = tol
        self.entries = []

    def le(self, tag, entity, hour, lhs, bound):
        """Record ``lhs <= bound`` if violated beyond tolerance."""
        if lhs > bound + self.tol:
            self.entries.append(Violation(tag, entity, hour, float(lhs), float(bound),
                                          float(lhs - bound)))

    def ge(self, tag, entity, hour, lhs, bound):
        if lhs < bound - self.tol:
            self.entries.append(Violation(tag, entity, hour, float(lhs), float(bound),
                                          float(bound - lhs)))

    def eq(self, tag, entity, hour, lhs, bound):
        if abs(lhs - bound) > self.tol:
            self.entries.append(Violation(tag, entity, hour, float(lhs), float(bound),
                                          float(abs(lhs - bound))))

    def binary(self, entity, sym, seq):
        for t, b in enumerate(seq):
            if min(abs(b), abs(b - 1.0)) > self.tol:
                self.entries.append(Violation("aux", f"{entity}.{sym}", t + 1, float(b), 1.0,
                                              float(min(abs(b), abs(b - 1.0)))))


def _runs(seq, value):
    """(start, length) of maximal runs where ``seq == value``."""
    out, start = [], None
    for t, b in enumerate(seq):
        if b == value and start is None:
            start = t
        elif b != value and start is not None:
            out.append((start, t - start))
            start = None
    if start is not None:
        out.append((start, len(seq) - start))
    return out


def _check_min_run(chk, tag, entity, seq, length, value=1, carried=0):
    """Every run of ``value`` lasts ``length`` hours or until the horizon ends.

    ``carried`` hours of the same state before hour 1 count toward a run
    starting at hour 1.
    """
    T = len(seq)
    for start, run in _runs(seq, value):
        need = length - (carried if start == 0 else 0)
        need = min(need, T - start)
        if run < need:
            chk.ge(tag, entity, start + 1, run, need)


def check_schedule(schedule: Schedule, config: MicrogridConfig, price: PriceSeries | None = None,
                   ramp: RampPolicy | None = None, tol: float = 1e-6) -> ViolationReport:
    """Check ``schedule`` against every equation family.

    ``ramp`` bounds the hour-to-hour change of the grid exchange (already
    shifted to the realization being checked); ``None`` skips eq21.  ``price``
    is accepted for symmetry with the solvers and only checked for length.
    """
    T = config.horizon
    tau = config.tau
    shapes = {
        "unit_on": (len(config.units), T), "unit_power": (len(config.units), T),
        "storage_power": (len(config.storage), T), "charging": (len(config.storage), T),
        "discharging": (len(config.storage), T), "stored_energy": (len(config.storage), T),
        "load_on": (len(config.adjustable_loads), T), "load_power": (len(config.adjustable_loads), T),
        "grid_exchange": (T,),
    }
    for name, shape in shapes.items():
        got = np.shape(getattr(schedule, name))
        if got != shape and not (0 in shape and np.size(getattr(schedule, name)) == 0):
            raise ValueError(f"schedule.{name} has shape {got}, expected {shape}")
    if price is not None and len(price) != T:
        raise ValueError(f"price has {len(price)} entries, expected {T}")
    if ramp is not None and len(ramp) != T:
        raise ValueError(f"ramp has {len(ramp)} entries, expected {T}")

    chk = _Checker(tol)
    pm = np.asarray(schedule.grid_exchange, dtype=float)

    for k, g in enumerate(config.units):
        chk.binary(g.id, "I", schedule.unit_on[k])
    for k, s in enumerate(config.storage):
        chk.binary(s.id, "v", schedule.charging[k])
        chk.binary(s.id, "u", schedule.discharging[k])
    for k, d in enumerate(config.adjustable_loads):
        chk.binary(d.id, "z", schedule.load_on[k])
    on = np.round(schedule.unit_on).astype(int)
    ch_on = np.round(schedule.charging).astype(int)
    dch_on = np.round(schedule.discharging).astype(int)
    z = np.round(schedule.load_on).astype(int)

    # eq4: supply equals demand inside the microgrid
    fixed_load = np.zeros(T)
    fixed_gen = np.zeros(T)
    for prof in config.fixed_profiles:
        if prof.kind == "fixed_load":
            fixed_load += prof.values
        else:
            fixed_gen += prof.values
    supply = pm + fixed_gen + np.sum(schedule.unit_power, axis=0) + np.sum(schedule.storage_power, axis=0)
    demand = fixed_load + np.sum(schedule.load_power, axis=0)
    for t in range(T):
        chk.eq("eq4", "microgrid", t + 1, supply[t], demand[t])
        # eq5: line capacity
        chk.le("eq5", GRID, t + 1, abs(pm[t]), config.line_capacity)

    for k, g in enumerate(config.units):
        p = schedule.unit_power[k]
        before = g.power_before
        for t in range(T):
            chk.ge("eq6", g.id, t + 1, p[t], g.p_min * on[k, t])
            chk.le("eq6", g.id, t + 1, p[t], g.p_max * on[k, t])
            prev = before if t == 0 else p[t - 1]
            chk.le("eq7", g.id, t + 1, p[t] - prev, g.ramp_up * tau)
            chk.le("eq8", g.id, t + 1, prev - p[t], g.ramp_down * tau)
        if g.initial_on:
            _check_min_run(chk, "eq9", g.id, on[k], g.min_up, 1, g.on_hours_before)
            _check_min_run(chk, "eq10", g.id, on[k], g.min_down, 0, 0)
        else:
            _check_min_run(chk, "eq9", g.id, on[k], g.min_up, 1, 0)
            _check_min_run(chk, "eq10", g.id, on[k], g.min_down, 0, g.off_hours_before)

    for k, s in enumerate(config.storage):
        p = schedule.storage_power[k]
        c = schedule.stored_energy[k]
        level = s.energy_before
        for t in range(T):
            u, v = dch_on[k, t], ch_on[k, t]
            # eq11/eq12: signed power inside the window of the active mode
            chk.le("eq11", s.id, t + 1, p[t], s.p_dch_max * u - s.p_ch_min * v)
            chk.ge("eq12", s.id, t + 1, p[t], s.p_dch_min * u - s.p_ch_max * v)
            chk.le("eq13", s.id, t + 1, u + v, 1)
            # eq14: discharge drains P/eta, charge adds |P|
            level = level - (p[t] / s.efficiency if p[t] > 0 else p[t]) * tau
            chk.eq("eq14", s.id, t + 1, c[t], level)
            level = c[t]
            chk.ge("eq15", s.id, t + 1, c[t], s.c_min)
            chk.le("eq15", s.id, t + 1, c[t], s.c_max)
        if config.storage_cyclic:
            chk.ge("eq15", s.id, T, c[T - 1], s.energy_before)
        _check_min_run(chk, "eq16", s.id, ch_on[k], s.min_charge_time)
        _check_min_run(chk, "eq17", s.id, dch_on[k], s.min_discharge_time)

    for k, d in enumerate(config.adjustable_loads):
        dp = schedule.load_power[k]
        energy = 0.0
        for t in range(T):
            inside = d.window_start <= t + 1 <= d.window_end
            chk.ge("eq18", d.id, t + 1, dp[t], d.d_min[t] * z[k, t])
            chk.le("eq18", d.id, t + 1, dp[t], d.d_max[t] * z[k, t])
            if inside:
                energy += dp[t] * tau
            else:
                chk.le("eq20", d.id, t + 1, z[k, t], 0)
        _check_min_run(chk, "eq19", d.id, z[k], d.min_on)
        chk.eq("eq20", d.id, None, energy, d.energy)

    if ramp is not None:
        for t in range(T):
            change = pm[t] - (pm[t - 1] if t > 0 else 0.0)
            if math.isfinite(ramp.lower[t]):
                chk.ge("eq21", GRID, t + 1, change, ramp.lower[t])
            if math.isfinite(ramp.upper[t]):
                chk.le("eq21", GRID, t + 1, change, ramp.upper[t])
    return ViolationReport(chk.entries, tol)


def schedule_cost(schedule: Schedule, config: MicrogridConfig, price: PriceSeries,
                  realization: UncertainRealization | None = None) -> float:
    """Generation + commitment + exchange cost of a schedule, recomputed by hand."""
    tau = config.tau
    rho = price.as_array()
    if realization is not None:
        rho = rho * (1 + realization.deviation("price"))
    total = float(np.sum(rho * schedule.grid_exchange) * tau)
    for k, g in enumerate(config.units):
        on = np.round(schedule.unit_on[k])
        total += g.cost_marginal * tau * float(np.sum(schedule.unit_power[k]))
        total += g.cost_noload * tau * float(np.sum(on))
        prev = np.concatenate([[1.0 if g.initial_on else 0.0], on[:-1]])
        total += g.cost_startup * float(np.sum(np.maximum(0, on - prev)))
        total += g.cost_shutdown * float(np.sum(np.maximum(0, prev - on)))
    return total


# ---------------------------------------------------------------------------
# recourse simulation
# ---------------------------------------------------------------------------
def _commitments(commitments, config):
    if isinstance(commitments, Schedule):
        return binaries_from_schedule(config, commitments)
    return dict(commitments)


def _default_bounds(horizon):
    return UncertaintySpec(budget_hours=horizon, active_categories=set(CATEGORIES))


@dataclass(frozen=True)
class SimulationResult:
    cost: float  # generation + commitment + exchange, slack penalty excluded
    feasible: bool  # ramp limit met without slack
    slack_used: float  # MW
    schedule: Schedule | None = None

    def __iter__(self):
        return iter((self.cost, self.feasible, self.slack_used))


class _Simulator:
    """Recourse LP built once per commitment; realizations patch rhs and costs."""

    def __init__(self, commitments, config, price, feeder, delta, slack_penalty, backend, tol):
        self.config = config
        self.feeder = feeder
        self.binaries = _commitments(commitments, config)
        net = aggregate_net_load(feeder)
        self.ramp = ramp_bounds(net, delta, config.initial_utility_power)
        zero = UncertainRealization.zero(config.horizon)
        self.base = build_recourse_lp(config, self.binaries, zero, self.ramp, price, feeder,
                                      slack_penalty)
        self.commit = commitment_cost(config, self.binaries)
        self.slack_cols = [j for (e, sym, _), j in self.base.var_map.items()
                           if e == GRID and sym in ("slack_lo", "slack_up")]
        self.penalty = slack_penalty or 0.0
        self.backend = backend
        self.tol = tol

    def run(self, realization, keep_schedule=False) -> SimulationResult:
        model = recourse_at(self.base, self.ramp, self.feeder, realization)
        sol = solve_lp(model, self.backend)
        if sol.status != OPTIMAL:
            raise RuntimeError(f"recourse solve returned {sol.status}")
        slack = float(sum(sol.x[j] for j in self.slack_cols))
        cost = self.commit + sol.objective - self.penalty * slack
        sched = self.base.schedule(sol.x, cost) if keep_schedule else None
        return SimulationResult(cost, slack <= self.tol, slack, sched)


def simulate_realization(commitments, config: MicrogridConfig, price: PriceSeries,
                         feeder: FeederProfile, delta: float, realization: UncertainRealization,
                         spec: UncertaintySpec | None = None,
                         slack_penalty: float = DEFAULT_SLACK_PENALTY, backend="highs",
                         tol: float = 1e-6) -> SimulationResult:
    """Re-dispatch fixed commitments at one realization.

    Returns ``(cost, feasible, slack_used)`` (also as attributes).  The
    realization must lie inside ``spec`` (default: every category active at
    the default error levels with an unlimited budget).
    """
    bounds = spec or _default_bounds(config.horizon)
    problems = realization.within(bounds)
    if problems:
        raise ValueError("realization outside the uncertainty set: " + "; ".join(problems))
    sim = _Simulator(commitments, config, price, feeder, delta, slack_penalty, backend, tol)
    return sim.run(realization, keep_schedule=True)


@dataclass
class McSummary:
    samples: int
    feasible_count: int
    cost_min: float
    cost_mean: float
    cost_max: float
    slack_max: float
    slack_mean: float
    slack_samples: int
    costs: np.ndarray = field(repr=False, default=None)

    def as_dict(self) -> dict:
        return {"samples": self.samples, "feasible_count": self.feasible_count,
                "cost": {"min": self.cost_min, "mean": self.cost_mean, "max": self.cost_max},
                "slack": {"max": self.slack_max, "mean": self.slack_mean,
                          "samples_with_slack": self.slack_samples}}


def sample_realization(rng: np.random.Generator, spec: UncertaintySpec,
                       horizon: int) -> UncertainRealization:
    """Pick ``budget`` hours per active category; deviations uniform in +-error."""
    dev = {c: np.zeros(horizon) for c in CATEGORIES}
    for cat in CATEGORIES:
        if cat not in spec.active_categories:
            continue
        g = spec.budget(cat)
        if g == 0:
            continue
        hours = rng.choice(horizon, size=g, replace=False)
        err = spec.error(cat)
        dev[cat][hours] = rng.uniform(-err, err, size=g)
    return UncertainRealization(dev["load"], dev["solar"], dev["price"])


def monte_carlo(commitments, config: MicrogridConfig, price: PriceSeries, feeder: FeederProfile,
                delta: float, spec: UncertaintySpec, n: int, seed: int,
                slack_penalty: float = DEFAULT_SLACK_PENALTY, backend="highs",
                tol: float = 1e-6) -> McSummary:
    """Re-dispatch ``n`` sampled realizations; sample ``i`` uses the ``i``-th spawned seed."""
    if n < 1:
        raise ValueError("n must be at least 1")
    sim = _Simulator(commitments, config, price, feeder, delta, slack_penalty, backend, tol)
    costs = np.empty(n)
    slacks = np.empty(n)
    feasible = 0
    for i, child in enumerate(np.random.SeedSequence(seed).spawn(n)):
        real = sample_realization(np.random.default_rng(child), spec, config.horizon)
        res = sim.run(real)
        costs[i] = res.cost
        slacks[i] = res.slack_used
        feasible += res.feasible
    return McSummary(n, feasible, float(costs.min()), float(costs.mean()), float(costs.max()),
                     float(slacks.max()), float(slacks.mean()), int(np.sum(slacks > tol)), costs)
