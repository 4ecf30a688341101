"""Model builders: the monolithic problem, the Benders master and the recourse LP.

Every constraint row is tagged with the equation family it encodes
(``eq4`` ... ``eq21``), ``cut`` for optimality cuts or ``aux`` for
modelling devices (power splits, binary-fixing rows, start-up costs,
feasibility copies).

Variables are addressed by ``(entity id, symbol, hour)`` keys with 0-based
hours.  Symbols: ``P`` unit or signed storage power, ``I`` commitment,
``u``/``v`` storage discharging/charging mode, ``dch``/``ch`` split storage
power, ``C`` stored energy, ``z``/``D`` adjustable-load state and power,
``PM`` grid exchange, ``slack_lo``/``slack_up`` ramp slack, ``su``/``sd``
start-up/shut-down cost, ``theta`` the master epigraph variable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .domain import (CATEGORIES, FeederProfile, MicrogridConfig, PriceSeries, RampPolicy,
                     Schedule, UncertaintySpec, validate_config)
from .milp import BINARY, EQ, GE, LE, Model

DEFAULT_SLACK_PENALTY = 1e4
GRID = "grid"
BINARY_SYMBOLS = ("I", "u", "v", "z")


class ConfigurationError(ValueError):
    """The configuration cannot be turned into a meaningful model."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass
class BuiltProblem:
    model: Model
    var_map: dict  # (entity id, symbol, hour) -> variable index
    config: MicrogridConfig
    binary_keys: list = field(default_factory=list)
    # recourse only: binary key -> row pinning its continuous copy
    fix_rows: dict = field(default_factory=dict)
    # hour -> (lower row or None, upper row or None) of the ramp constraint
    ramp_rows: dict = field(default_factory=dict)
    base_price: np.ndarray | None = None

    def var(self, entity: str, symbol: str, t: int | None = None) -> int:
        return self.var_map[(entity, symbol, t)]

    def rows_tagged(self, tag: str) -> list[int]:
        return [i for i, g in enumerate(self.model.tags) if g == tag]

    def binaries_from(self, x: np.ndarray) -> dict:
        return {k: float(round(x[self.var_map[k]])) for k in self.binary_keys}

    def schedule(self, x: np.ndarray, objective: float = math.nan) -> Schedule:
        """Assemble a :class:`Schedule` from a solution vector of this model."""
        cfg = self.config
        T = cfg.horizon

        def grab(entities, symbol, default=0.0):
            out = np.full((len(entities), T), default, dtype=float)
            for k, e in enumerate(entities):
                for t in range(T):
                    j = self.var_map.get((e.id, symbol, t))
                    if j is not None:
                        out[k, t] = x[j]
            return out

        sched = Schedule(
            unit_on=np.round(grab(cfg.units, "I")),
            unit_power=grab(cfg.units, "P"),
            storage_power=grab(cfg.storage, "P"),
            charging=np.round(grab(cfg.storage, "v")),
            discharging=np.round(grab(cfg.storage, "u")),
            stored_energy=grab(cfg.storage, "C"),
            load_on=np.round(grab(cfg.adjustable_loads, "z")),
            load_power=grab(cfg.adjustable_loads, "D"),
            grid_exchange=np.array([x[self.var_map[(GRID, "PM", t)]] for t in range(T)]),
            objective_cost=objective,
        )
        slack = np.zeros(T)
        for t in range(T):
            for sym in ("slack_lo", "slack_up"):
                j = self.var_map.get((GRID, sym, t))
                if j is not None:
                    slack[t] += x[j]
        sched.ramp_slack = slack
        return sched


def _check(config: MicrogridConfig) -> None:
    problems = validate_config(config)
    if problems:
        raise ConfigurationError(problems)


def _new_var(m: Model, vm: dict, key, lb=0.0, ub=math.inf, kind="continuous") -> int:
    entity, sym, t = key
    name = f"{sym}[{entity}]" if t is None else f"{sym}[{entity},{t + 1}]"
    j = m.add_var(name, lb, ub, kind)
    vm[key] = j
    return j


def _window(t: int, length: int, T: int) -> range:
    return range(t, min(T, t + length))


# ---------------------------------------------------------------------------
# commitment layer: binaries and the rows that involve only binaries
# ---------------------------------------------------------------------------
def _add_commitment(m: Model, vm: dict, cfg: MicrogridConfig) -> tuple[list, dict]:
    """Binaries plus min up/down, mode exclusivity and min-duration rows.

    Returns the binary keys and the objective terms of commitment-only costs.
    """
    T = cfg.horizon
    tau = cfg.tau
    keys, obj = [], {}
    for g in cfg.units:
        for t in range(T):
            keys.append((g.id, "I", t))
            j = _new_var(m, vm, (g.id, "I", t), kind=BINARY)
            if g.cost_noload:
                obj[j] = obj.get(j, 0.0) + g.cost_noload * tau
    for s in cfg.storage:
        for t in range(T):
            for sym in ("u", "v"):
                keys.append((s.id, sym, t))
                _new_var(m, vm, (s.id, sym, t), kind=BINARY)
    for d in cfg.adjustable_loads:
        for t in range(T):
            keys.append((d.id, "z", t))
            _new_var(m, vm, (d.id, "z", t), ub=1.0 if d.in_window(t) else 0.0, kind=BINARY)

    for g in cfg.units:
        I = [vm[(g.id, "I", t)] for t in range(T)]
        prev = 1.0 if g.initial_on else 0.0
        # hours the initial state must still be held
        must_on = max(0, g.min_up - g.on_hours_before) if g.initial_on else 0
        must_off = max(0, g.min_down - g.off_hours_before) if not g.initial_on else 0
        for t in range(min(must_on, T)):
            m.add_constraint({I[t]: 1}, GE, 1, f"eq9_init[{g.id},{t + 1}]", "eq9")
        for t in range(min(must_off, T)):
            m.add_constraint({I[t]: 1}, LE, 0, f"eq10_init[{g.id},{t + 1}]", "eq10")
        for t in range(T):
            win = _window(t, g.min_up, T)
            L = len(win)
            # sum_{k in window} I_k >= L * (I_t - I_{t-1})
            row = {I[k]: 1.0 for k in win}
            row[I[t]] = row.get(I[t], 0.0) - L
            if t > 0:
                row[I[t - 1]] = row.get(I[t - 1], 0.0) + L
            m.add_constraint(row, GE, -L * prev if t == 0 else 0.0, f"eq9[{g.id},{t + 1}]", "eq9")
            win = _window(t, g.min_down, T)
            L = len(win)
            # sum_{k in window} (1 - I_k) >= L * (I_{t-1} - I_t)
            row = {I[k]: -1.0 for k in win}
            row[I[t]] = row.get(I[t], 0.0) + L
            if t > 0:
                row[I[t - 1]] = row.get(I[t - 1], 0.0) - L
            rhs = -L + (L * prev if t == 0 else 0.0)
            m.add_constraint(row, GE, rhs, f"eq10[{g.id},{t + 1}]", "eq10")
        for cost, sym, sgn in ((g.cost_startup, "su", 1.0), (g.cost_shutdown, "sd", -1.0)):
            if not cost:
                continue
            for t in range(T):
                j = _new_var(m, vm, (g.id, sym, t))
                obj[j] = 1.0
                # su_t >= SU * (I_t - I_{t-1})
                row = {j: 1.0, I[t]: -sgn * cost}
                rhs = -sgn * cost * prev if t == 0 else 0.0
                if t > 0:
                    row[I[t - 1]] = sgn * cost
                m.add_constraint(row, GE, rhs, f"{sym}[{g.id},{t + 1}]", "aux")

    for s in cfg.storage:
        u = [vm[(s.id, "u", t)] for t in range(T)]
        v = [vm[(s.id, "v", t)] for t in range(T)]
        for t in range(T):
            m.add_constraint({u[t]: 1, v[t]: 1}, LE, 1, f"eq13[{s.id},{t + 1}]", "eq13")
        _min_duration(m, v, s.min_charge_time, T, 0.0, f"eq16[{s.id}", "eq16")
        _min_duration(m, u, s.min_discharge_time, T, 0.0, f"eq17[{s.id}", "eq17")

    for d in cfg.adjustable_loads:
        z = [vm[(d.id, "z", t)] for t in range(T)]
        _min_duration(m, z, d.min_on, T, 0.0, f"eq19[{d.id}", "eq19")
    return keys, obj


def _min_duration(m: Model, b: list, length: int, T: int, prev: float, name: str, tag: str):
    """Once switched on, ``b`` stays on for ``length`` hours (truncated at the horizon)."""
    for t in range(T):
        win = _window(t, length, T)
        L = len(win)
        row = {b[k]: 1.0 for k in win}
        row[b[t]] = row.get(b[t], 0.0) - L
        rhs = -L * prev if t == 0 else 0.0
        if t > 0:
            row[b[t - 1]] = row.get(b[t - 1], 0.0) + L
        m.add_constraint(row, GE, rhs, f"{name},{t + 1}]", tag)


# ---------------------------------------------------------------------------
# dispatch layer: continuous variables and rows linking them to the binaries
# ---------------------------------------------------------------------------
def _add_dispatch(m: Model, vm: dict, cfg: MicrogridConfig, binvar: Mapping, ramp: RampPolicy | None,
                  slack_penalty: float | None, prefix: str = "", tagged: bool = True,
                  families: set | None = None) -> tuple[dict, dict]:
    """Add dispatch variables and rows.

    ``binvar`` maps binary keys to the model variables standing in for them
    (true binaries or fixed continuous copies).  ``families`` restricts which
    equation families are emitted (all when None); rows outside ``tagged``
    receive the ``aux`` tag.  Returns the objective terms (marginal energy
    cost, ramp slack) and the ramp row map.
    """
    T = cfg.horizon
    tau = cfg.tau
    obj: dict[int, float] = {}
    want = (lambda f: True) if families is None else (lambda f: f in families)

    def tag(f):
        return f if tagged else "aux"

    def key(e, sym, t):
        return (prefix + e, sym, t) if prefix else (e, sym, t)

    def add(row, rel, rhs, name, fam):
        return m.add_constraint(row, rel, rhs, f"{prefix}{name}", tag(fam))

    pm = [_new_var(m, vm, key(GRID, "PM", t), -math.inf, math.inf) for t in range(T)]
    unit_p = {}
    for g in cfg.units:
        unit_p[g.id] = [_new_var(m, vm, key(g.id, "P", t)) for t in range(T)]
        if g.cost_marginal:
            for j in unit_p[g.id]:
                obj[j] = g.cost_marginal * tau
    stor_p = {}
    for s in cfg.storage:
        stor_p[s.id] = [_new_var(m, vm, key(s.id, "P", t), -math.inf, math.inf) for t in range(T)]
    load_d = {}
    for d in cfg.adjustable_loads:
        load_d[d.id] = [_new_var(m, vm, key(d.id, "D", t)) for t in range(T)]

    fixed_load = cfg.fixed_load()
    fixed_gen = cfg.fixed_generation()
    if want("eq4"):
        for t in range(T):
            row = {pm[t]: 1.0}
            for g in cfg.units:
                row[unit_p[g.id][t]] = 1.0
            for s in cfg.storage:
                row[stor_p[s.id][t]] = 1.0
            for d in cfg.adjustable_loads:
                row[load_d[d.id][t]] = -1.0
            add(row, EQ, fixed_load[t] - fixed_gen[t], f"eq4[{t + 1}]", "eq4")
    if want("eq5"):
        for t in range(T):
            add({pm[t]: 1}, LE, cfg.line_capacity, f"eq5_up[{t + 1}]", "eq5")
            add({pm[t]: 1}, GE, -cfg.line_capacity, f"eq5_lo[{t + 1}]", "eq5")

    for g in cfg.units:
        P = unit_p[g.id]
        for t in range(T):
            I = binvar[(g.id, "I", t)]
            if want("eq6"):
                add({P[t]: 1, I: -g.p_min}, GE, 0, f"eq6_lo[{g.id},{t + 1}]", "eq6")
                add({P[t]: 1, I: -g.p_max}, LE, 0, f"eq6_up[{g.id},{t + 1}]", "eq6")
            if want("eq7"):
                if t == 0:
                    add({P[0]: 1}, LE, g.ramp_up * tau + g.power_before, f"eq7[{g.id},1]", "eq7")
                else:
                    add({P[t]: 1, P[t - 1]: -1}, LE, g.ramp_up * tau, f"eq7[{g.id},{t + 1}]", "eq7")
            if want("eq8"):
                if t == 0:
                    add({P[0]: -1}, LE, g.ramp_down * tau - g.power_before, f"eq8[{g.id},1]", "eq8")
                else:
                    add({P[t - 1]: 1, P[t]: -1}, LE, g.ramp_down * tau, f"eq8[{g.id},{t + 1}]", "eq8")

    for s in cfg.storage:
        P = stor_p[s.id]
        dch = [_new_var(m, vm, key(s.id, "dch", t)) for t in range(T)]
        ch = [_new_var(m, vm, key(s.id, "ch", t)) for t in range(T)]
        C = [_new_var(m, vm, key(s.id, "C", t), -math.inf, math.inf) for t in range(T)]
        for t in range(T):
            u = binvar[(s.id, "u", t)]
            v = binvar[(s.id, "v", t)]
            if want("eq11"):
                add({P[t]: 1, u: -s.p_dch_max, v: s.p_ch_min}, LE, 0, f"eq11[{s.id},{t + 1}]", "eq11")
            if want("eq12"):
                add({P[t]: 1, u: -s.p_dch_min, v: s.p_ch_max}, GE, 0, f"eq12[{s.id},{t + 1}]", "eq12")
            if want("eq14"):
                # signed power splits into gated nonnegative parts
                m.add_constraint({P[t]: 1, dch[t]: -1, ch[t]: 1}, EQ, 0, f"{prefix}split[{s.id},{t + 1}]", "aux")
                m.add_constraint({dch[t]: 1, u: -s.p_dch_max}, LE, 0, f"{prefix}gate_dch[{s.id},{t + 1}]", "aux")
                m.add_constraint({ch[t]: 1, v: -s.p_ch_max}, LE, 0, f"{prefix}gate_ch[{s.id},{t + 1}]", "aux")
                row = {C[t]: 1.0, dch[t]: tau / s.efficiency, ch[t]: -tau}
                rhs = 0.0
                if t == 0:
                    rhs = s.energy_before
                else:
                    row[C[t - 1]] = -1.0
                add(row, EQ, rhs, f"eq14[{s.id},{t + 1}]", "eq14")
            if want("eq15"):
                add({C[t]: 1}, GE, s.c_min, f"eq15_lo[{s.id},{t + 1}]", "eq15")
                add({C[t]: 1}, LE, s.c_max, f"eq15_up[{s.id},{t + 1}]", "eq15")
        if cfg.storage_cyclic and want("eq15"):
            m.add_constraint({C[T - 1]: 1}, GE, s.energy_before, f"{prefix}cyclic[{s.id}]", "aux")

    for d in cfg.adjustable_loads:
        D = load_d[d.id]
        for t in range(T):
            z = binvar[(d.id, "z", t)]
            if want("eq18"):
                add({D[t]: 1, z: -d.d_min[t]}, GE, 0, f"eq18_lo[{d.id},{t + 1}]", "eq18")
                add({D[t]: 1, z: -d.d_max[t]}, LE, 0, f"eq18_up[{d.id},{t + 1}]", "eq18")
        if want("eq20"):
            row = {D[t]: tau for t in range(T) if d.in_window(t)}
            add(row, EQ, d.energy, f"eq20[{d.id}]", "eq20")

    ramp_rows = {}
    if ramp is not None and want("eq21"):
        for t in range(T):
            lo, hi = ramp.lower[t], ramp.upper[t]
            if not (math.isfinite(lo) or math.isfinite(hi)):
                continue
            base = {pm[t]: 1.0}
            if t > 0:
                base[pm[t - 1]] = -1.0
            r_lo = r_up = None
            if math.isfinite(lo):
                row = dict(base)
                if slack_penalty is not None:
                    j = _new_var(m, vm, key(GRID, "slack_lo", t))
                    obj[j] = slack_penalty
                    row[j] = 1.0
                r_lo = add(row, GE, lo, f"eq21_lo[{t + 1}]", "eq21")
            if math.isfinite(hi):
                row = dict(base)
                if slack_penalty is not None:
                    j = _new_var(m, vm, key(GRID, "slack_up", t))
                    obj[j] = slack_penalty
                    row[j] = -1.0
                r_up = add(row, LE, hi, f"eq21_up[{t + 1}]", "eq21")
            ramp_rows[t] = (r_lo, r_up)
    return obj, ramp_rows


def _merge(*parts: Mapping[int, float]) -> dict:
    out: dict[int, float] = {}
    for p in parts:
        for j, a in p.items():
            out[j] = out.get(j, 0.0) + a
    return out


def _price_terms(vm: dict, price: np.ndarray, tau: float, prefix: str = "") -> dict:
    return {vm[(prefix + GRID, "PM", t)]: float(price[t]) * tau for t in range(len(price))}


def commitment_cost(config: MicrogridConfig, binaries: Mapping) -> float:
    """No-load plus start-up/shut-down cost of a commitment assignment."""
    total = 0.0
    for g in config.units:
        prev = 1.0 if g.initial_on else 0.0
        for t in range(config.horizon):
            on = binaries[(g.id, "I", t)]
            total += g.cost_noload * config.tau * on
            total += g.cost_startup * max(0.0, on - prev) + g.cost_shutdown * max(0.0, prev - on)
            prev = on
    return total


# ---------------------------------------------------------------------------
# public builders
# ---------------------------------------------------------------------------
def build_monolithic(config: MicrogridConfig, price: PriceSeries, ramp: RampPolicy,
                     slack_penalty: float | None = DEFAULT_SLACK_PENALTY) -> BuiltProblem:
    """Deterministic scheduling MILP with the ramp constraint (when bounded)."""
    _check(config)
    T = config.horizon
    if len(price) != T or len(ramp) != T:
        raise ValueError(f"price ({len(price)}) and ramp ({len(ramp)}) must cover {T} hours")
    m = Model("monolithic")
    vm: dict = {}
    keys, obj_c = _add_commitment(m, vm, config)
    binvar = {k: vm[k] for k in keys}
    obj_d, ramp_rows = _add_dispatch(m, vm, config, binvar, ramp, slack_penalty)
    m.set_objective(_merge(obj_c, obj_d, _price_terms(vm, price.as_array(), config.tau)))
    return BuiltProblem(m, vm, config, keys, ramp_rows=ramp_rows, base_price=price.as_array())


def exchange_floor(config: MicrogridConfig, price: PriceSeries, price_error: float = 0.0) -> float:
    """Cheapest conceivable exchange cost: full export at the most favourable price."""
    rho = np.abs(price.as_array()) * (1 + price_error)
    return float(-np.sum(rho) * config.line_capacity * config.tau)


@dataclass
class Cut:
    """``theta >= constant + sum(coefficients[key] * binary[key])``."""

    constant: float
    coefficients: dict
    iteration: int

    def evaluate(self, binaries: Mapping) -> float:
        return self.constant + sum(a * binaries[k] for k, a in self.coefficients.items())


def build_master(config: MicrogridConfig, price_forecast: PriceSeries, cuts=(),
                 floor: float | None = None, forecast_ramp: RampPolicy | None = None,
                 slack_penalty: float | None = DEFAULT_SLACK_PENALTY,
                 scenarios=()) -> BuiltProblem:
    """Commitment MILP with an epigraph variable for the recourse cost.

    Tagged rows are exactly the binary-bearing families (eq6, eq9-13,
    eq16-19) plus ``cut`` rows.  A feasibility copy of the dispatch rows
    (tagged ``aux``) keeps only commitments for which some dispatch exists,
    so the recourse LP is never infeasible.  With ``forecast_ramp`` the copy
    also carries the forecast-scenario cost and bounds ``theta`` from below.
    ``scenarios`` is a list of ``(RampPolicy, price array)`` realizations; each
    gets its own dispatch copy whose cost also bounds ``theta`` (every such
    cost is a lower bound on the worst case, so the bound stays valid).
    """
    _check(config)
    m = Model("master")
    vm: dict = {}
    keys, obj_c = _add_commitment(m, vm, config)
    binvar = {k: vm[k] for k in keys}
    # eq6 / eq18 on master-level P and D as stated for the master
    _add_dispatch(m, vm, config, binvar, None, None, families={"eq6", "eq18"})
    # dispatch feasibility copy, untagged
    copy_obj, _ = _add_dispatch(m, vm, config, binvar, forecast_ramp, slack_penalty,
                                prefix="f:", tagged=False)
    if floor is None:
        floor = exchange_floor(config, price_forecast)
    theta = _new_var(m, vm, ("master", "theta", None), lb=floor)
    if forecast_ramp is not None:
        row = _merge(copy_obj, _price_terms(vm, price_forecast.as_array(), config.tau, "f:"))
        row = {j: -a for j, a in row.items()}
        row[theta] = 1.0
        m.add_constraint(row, GE, 0.0, "forecast_bound", "aux")
    for i, (ramp_i, price_i) in enumerate(scenarios):
        pre = f"w{i}:"
        obj_i, _ = _add_dispatch(m, vm, config, binvar, ramp_i, slack_penalty,
                                 prefix=pre, tagged=False)
        row = _merge(obj_i, _price_terms(vm, np.asarray(price_i, float), config.tau, pre))
        row = {j: -a for j, a in row.items()}
        row[theta] = 1.0
        m.add_constraint(row, GE, 0.0, f"scenario_bound[{i}]", "aux")
    for cut in cuts:
        row = {theta: 1.0}
        for k, a in cut.coefficients.items():
            row[vm[k]] = row.get(vm[k], 0.0) - a
        m.add_constraint(row, GE, cut.constant, f"cut[{cut.iteration}]", "cut")
    m.set_objective(_merge(obj_c, {theta: 1.0}))
    return BuiltProblem(m, vm, config, keys, base_price=price_forecast.as_array())


@dataclass(frozen=True)
class UncertainRealization:
    """Relative deviations per hour; e.g. load_deviation[t] = 0.1 means +10 %."""

    load_deviation: tuple
    solar_deviation: tuple
    price_deviation: tuple

    def __post_init__(self):
        for name in ("load_deviation", "solar_deviation", "price_deviation"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))

    @classmethod
    def zero(cls, horizon: int) -> "UncertainRealization":
        z = (0.0,) * horizon
        return cls(z, z, z)

    def deviation(self, category: str) -> np.ndarray:
        return np.asarray(getattr(self, f"{category}_deviation"), dtype=float)

    def within(self, spec: UncertaintySpec, tol: float = 1e-9) -> list[str]:
        """Reasons this realization lies outside the budgeted set (empty if inside)."""
        out = []
        for cat in CATEGORIES:
            dev = self.deviation(cat)
            if cat not in spec.active_categories:
                if np.any(np.abs(dev) > tol):
                    out.append(f"{cat}: category inactive but deviation nonzero")
                continue
            if np.any(np.abs(dev) > spec.error(cat) + tol):
                out.append(f"{cat}: deviation exceeds ±{spec.error(cat)}")
            if int(np.sum(np.abs(dev) > tol)) > spec.budget(cat):
                out.append(f"{cat}: more than {spec.budget(cat)} deviating hours")
        return out


def net_load_shift(feeder: FeederProfile, realization: UncertainRealization) -> np.ndarray:
    """Change of the feeder net load (MW per hour) caused by a realization."""
    load = np.asarray(feeder.customer_load)
    solar = np.asarray(feeder.customer_solar)
    return load * realization.deviation("load") - solar * realization.deviation("solar")


def realized_ramp(ramp_base: RampPolicy, feeder: FeederProfile,
                  realization: UncertainRealization) -> RampPolicy:
    dev = net_load_shift(feeder, realization)
    shift = np.diff(np.concatenate([[0.0], dev]))
    lower = np.asarray(ramp_base.lower) - shift
    upper = np.asarray(ramp_base.upper) - shift
    return RampPolicy(ramp_base.delta, tuple(lower), tuple(upper))


def build_recourse_lp(config: MicrogridConfig, fixed_binaries: Mapping,
                      realization: UncertainRealization, ramp_base: RampPolicy,
                      price: PriceSeries, feeder: FeederProfile,
                      slack_penalty: float | None = DEFAULT_SLACK_PENALTY) -> BuiltProblem:
    """Dispatch LP for fixed binaries at one realization.

    Each binary enters through a free continuous copy pinned by an equality
    row; the duals of those rows are the optimality-cut coefficients.  The
    objective is marginal generation cost + exchange cost + ramp slack.
    """
    _check(config)
    T = config.horizon
    missing = [k for k in _binary_keys(config) if k not in fixed_binaries]
    if missing:
        raise ValueError(f"fixed_binaries misses {len(missing)} entries, e.g. {missing[0]}")
    for name in ("load_deviation", "solar_deviation", "price_deviation"):
        if len(getattr(realization, name)) != T:
            raise ValueError(f"realization.{name} must have {T} entries")
    m = Model("recourse")
    vm: dict = {}
    binvar, fix_rows = {}, {}
    for k in _binary_keys(config):
        j = _new_var(m, vm, k, -math.inf, math.inf)
        binvar[k] = j
        ent, sym, t = k
        fix_rows[k] = m.add_constraint({j: 1.0}, EQ, float(fixed_binaries[k]),
                                       f"fix_{sym}[{ent},{t + 1}]", "aux")
    ramp = realized_ramp(ramp_base, feeder, realization)
    obj_d, ramp_rows = _add_dispatch(m, vm, config, binvar, ramp, slack_penalty)
    rho = price.as_array() * (1 + realization.deviation("price"))
    m.set_objective(_merge(obj_d, _price_terms(vm, rho, config.tau)))
    return BuiltProblem(m, vm, config, list(binvar), fix_rows, ramp_rows, price.as_array())


def recourse_at(base: BuiltProblem, ramp_base: RampPolicy, feeder: FeederProfile,
                realization: UncertainRealization) -> Model:
    """Re-target an existing recourse model to another realization (rhs and costs only)."""
    ramp = realized_ramp(ramp_base, feeder, realization)
    rhs = {}
    for t, (r_lo, r_up) in base.ramp_rows.items():
        if r_lo is not None:
            rhs[r_lo] = ramp.lower[t]
        if r_up is not None:
            rhs[r_up] = ramp.upper[t]
    tau = base.config.tau
    rho = base.base_price * (1 + realization.deviation("price"))
    coefs = {base.var_map[(GRID, "PM", t)]: float(rho[t]) * tau for t in range(len(rho))}
    return base.model.with_rhs(rhs).with_objective_coefs(coefs)


def _binary_keys(config: MicrogridConfig) -> list:
    T = config.horizon
    keys = [(g.id, "I", t) for g in config.units for t in range(T)]
    keys += [(s.id, sym, t) for s in config.storage for t in range(T) for sym in ("u", "v")]
    keys += [(d.id, "z", t) for d in config.adjustable_loads for t in range(T)]
    return keys


def binaries_from_schedule(config: MicrogridConfig, schedule: Schedule) -> dict:
    out = {}
    for i, g in enumerate(config.units):
        for t in range(config.horizon):
            out[(g.id, "I", t)] = float(schedule.unit_on[i, t])
    for i, s in enumerate(config.storage):
        for t in range(config.horizon):
            out[(s.id, "u", t)] = float(schedule.discharging[i, t])
            out[(s.id, "v", t)] = float(schedule.charging[i, t])
    for i, d in enumerate(config.adjustable_loads):
        for t in range(config.horizon):
            out[(d.id, "z", t)] = float(schedule.load_on[i, t])
    return out
