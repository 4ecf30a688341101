"""Core data model for microgrid scheduling.

All types are frozen dataclasses holding plain tuples, so a configuration can
be shared between concurrent solves without copying.  Hours are 1-based in
user-facing fields (``window_start``/``window_end``) and 0-based everywhere
an array is indexed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Mapping, Sequence

import numpy as np

CATEGORIES = ("load", "solar", "price")


def _floats(values) -> tuple[float, ...]:
    return tuple(float(v) for v in values)


@dataclass(frozen=True)
class TimeGrid:
    horizon_hours: int
    step_hours: float = 1.0


@dataclass(frozen=True)
class DispatchableUnit:
    id: str
    p_min: float
    p_max: float
    ramp_up: float
    ramp_down: float
    min_up: int = 1
    min_down: int = 1
    cost_marginal: float = 0.0
    cost_noload: float = 0.0
    cost_startup: float = 0.0
    cost_shutdown: float = 0.0
    initial_on: bool = False
    # None means "long enough": at least min_up (on) / min_down (off) hours
    initial_on_hours: int | None = None
    initial_off_hours: int | None = None
    # output in the hour before the horizon; defaults to p_min when on
    initial_power: float | None = None

    @property
    def power_before(self) -> float:
        if self.initial_power is not None:
            return float(self.initial_power)
        return self.p_min if self.initial_on else 0.0

    @property
    def on_hours_before(self) -> int:
        if not self.initial_on:
            return 0
        return self.min_up if self.initial_on_hours is None else self.initial_on_hours

    @property
    def off_hours_before(self) -> int:
        if self.initial_on:
            return 0
        return self.min_down if self.initial_off_hours is None else self.initial_off_hours


@dataclass(frozen=True)
class StorageUnit:
    id: str
    p_ch_min: float
    p_ch_max: float
    p_dch_min: float
    p_dch_max: float
    c_min: float
    c_max: float
    c_initial: float | None = None
    efficiency: float = 1.0
    min_charge_time: int = 1
    min_discharge_time: int = 1

    @property
    def energy_before(self) -> float:
        return self.c_min if self.c_initial is None else float(self.c_initial)


@dataclass(frozen=True)
class AdjustableLoad:
    id: str
    d_min: tuple[float, ...]
    d_max: tuple[float, ...]
    min_on: int
    energy: float
    window_start: int
    window_end: int

    def __post_init__(self):
        object.__setattr__(self, "d_min", _floats(self.d_min))
        object.__setattr__(self, "d_max", _floats(self.d_max))

    def in_window(self, t: int) -> bool:
        """``t`` is a 0-based hour index."""
        return self.window_start - 1 <= t <= self.window_end - 1


@dataclass(frozen=True)
class FixedProfile:
    id: str
    kind: str  # "fixed_load" or "nondispatchable_gen"
    values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", _floats(self.values))


@dataclass(frozen=True)
class MicrogridConfig:
    time_grid: TimeGrid
    units: tuple[DispatchableUnit, ...] = ()
    storage: tuple[StorageUnit, ...] = ()
    adjustable_loads: tuple[AdjustableLoad, ...] = ()
    fixed_profiles: tuple[FixedProfile, ...] = ()
    line_capacity: float = 10.0
    # utility power in the hour before the horizon; activates a ramp bound at hour 1
    initial_utility_power: float | None = None
    # require stored energy at the end of the horizon to be at least c_initial
    storage_cyclic: bool = False

    def __post_init__(self):
        for name in ("units", "storage", "adjustable_loads", "fixed_profiles"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    @property
    def horizon(self) -> int:
        return self.time_grid.horizon_hours

    @property
    def tau(self) -> float:
        return self.time_grid.step_hours

    def fixed_load(self) -> np.ndarray:
        out = np.zeros(self.horizon)
        for p in self.fixed_profiles:
            if p.kind == "fixed_load":
                out += np.asarray(p.values[: self.horizon])
        return out

    def fixed_generation(self) -> np.ndarray:
        out = np.zeros(self.horizon)
        for p in self.fixed_profiles:
            if p.kind == "nondispatchable_gen":
                out += np.asarray(p.values[: self.horizon])
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> "MicrogridConfig":
        grid = data.get("time_grid", {})
        if isinstance(grid, Mapping):
            time_grid = TimeGrid(int(grid["horizon_hours"]), float(grid.get("step_hours", 1.0)))
        else:
            time_grid = TimeGrid(int(grid))
        return cls(
            time_grid=time_grid,
            units=tuple(DispatchableUnit(**u) for u in data.get("dispatchable_units", ())),
            storage=tuple(StorageUnit(**s) for s in data.get("storage_units", ())),
            adjustable_loads=tuple(AdjustableLoad(**d) for d in data.get("adjustable_loads", ())),
            fixed_profiles=tuple(FixedProfile(**p) for p in data.get("fixed_profiles", ())),
            line_capacity=float(data.get("line_capacity", 10.0)),
            initial_utility_power=data.get("initial_utility_power"),
            storage_cyclic=bool(data.get("storage_cyclic", False)),
        )

    def to_dict(self) -> dict:
        def plain(obj):
            return {f.name: (list(v) if isinstance(v := getattr(obj, f.name), tuple) else v)
                    for f in fields(obj)}

        return {
            "time_grid": plain(self.time_grid),
            "dispatchable_units": [plain(u) for u in self.units],
            "storage_units": [plain(s) for s in self.storage],
            "adjustable_loads": [plain(d) for d in self.adjustable_loads],
            "fixed_profiles": [plain(p) for p in self.fixed_profiles],
            "line_capacity": self.line_capacity,
            "initial_utility_power": self.initial_utility_power,
            "storage_cyclic": self.storage_cyclic,
        }


@dataclass(frozen=True)
class FeederProfile:
    customer_load: tuple[float, ...]
    customer_solar: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "customer_load", _floats(self.customer_load))
        object.__setattr__(self, "customer_solar", _floats(self.customer_solar))

    def __len__(self):
        return len(self.customer_load)


@dataclass(frozen=True)
class PriceSeries:
    values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", _floats(self.values))

    def __len__(self):
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


@dataclass(frozen=True)
class UncertaintySpec:
    """Forecast-error fractions and the per-category budget of uncertain hours.

    ``budget_hours`` is either one integer applied to every active category or
    a mapping ``{category: hours}``.
    """

    load_error: float = 0.10
    solar_error: float = 0.20
    price_error: float = 0.10
    budget_hours: int | Mapping[str, int] = 12
    active_categories: frozenset = frozenset({"load"})

    def __post_init__(self):
        object.__setattr__(self, "active_categories", frozenset(self.active_categories))
        if isinstance(self.budget_hours, Mapping):
            object.__setattr__(self, "budget_hours", dict(self.budget_hours))

    def error(self, category: str) -> float:
        return {"load": self.load_error, "solar": self.solar_error,
                "price": self.price_error}[category]

    def budget(self, category: str) -> int:
        if category not in self.active_categories:
            return 0
        if isinstance(self.budget_hours, Mapping):
            return int(self.budget_hours.get(category, 0))
        return int(self.budget_hours)

    def validate(self, horizon: int) -> list[str]:
        out = []
        for cat in CATEGORIES:
            err = self.error(cat)
            if not 0 <= err < 1:
                out.append(f"uncertainty.{cat}_error: 0 <= error < 1 (got {err})")
        for cat in self.active_categories:
            if cat not in CATEGORIES:
                out.append(f"uncertainty.active_categories: unknown category {cat!r}")
                continue
            g = self.budget(cat)
            if not 0 <= g <= horizon:
                out.append(f"uncertainty.budget_hours[{cat}]: 0 <= budget <= horizon (got {g})")
        return out


@dataclass(frozen=True)
class RampPolicy:
    """Per-hour bounds on the change of the microgrid exchange power.

    ``lower[t]``/``upper[t]`` bound ``P^M_t - P^M_{t-1}``; entries are +-inf
    for hours without a bound (hour 1 unless an initial utility power is set).
    """

    delta: float
    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "lower", _floats(self.lower))
        object.__setattr__(self, "upper", _floats(self.upper))

    def __len__(self):
        return len(self.lower)

    @property
    def is_active(self) -> bool:
        return any(math.isfinite(v) for v in self.lower + self.upper)

    @classmethod
    def unbounded(cls, horizon: int) -> "RampPolicy":
        return cls(math.inf, (-math.inf,) * horizon, (math.inf,) * horizon)


@dataclass
class Schedule:
    """One horizon of decisions.  Arrays are indexed ``[entity, hour]``."""

    unit_on: np.ndarray
    unit_power: np.ndarray
    storage_power: np.ndarray  # + discharge, - charge
    charging: np.ndarray
    discharging: np.ndarray
    stored_energy: np.ndarray
    load_on: np.ndarray
    load_power: np.ndarray
    grid_exchange: np.ndarray  # + import into the microgrid
    objective_cost: float = math.nan
    ramp_slack: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.ramp_slack is None:
            self.ramp_slack = np.zeros_like(self.grid_exchange)

    @property
    def horizon(self) -> int:
        return len(self.grid_exchange)

    def binaries(self) -> dict[str, np.ndarray]:
        return {"I": self.unit_on, "u": self.discharging, "v": self.charging, "z": self.load_on}


def validate_config(config: MicrogridConfig) -> list[str]:
    """Return one message per violated invariant; an empty list means valid."""
    out: list[str] = []
    T = config.horizon
    tau = config.tau
    if T < 2:
        out.append(f"time_grid.horizon_hours: horizon >= 2 (got {T})")
    if not tau > 0:
        out.append(f"time_grid.step_hours: step > 0 (got {tau})")
    if not config.line_capacity > 0:
        out.append(f"microgrid.line_capacity: capacity > 0 (got {config.line_capacity})")

    ids = [e.id for e in (*config.units, *config.storage, *config.adjustable_loads,
                          *config.fixed_profiles)]
    for dup in sorted({i for i in ids if ids.count(i) > 1}):
        out.append(f"{dup}.id: ids unique")

    for g in config.units:
        if not 0 <= g.p_min:
            out.append(f"{g.id}.p_min: 0 <= p_min")
        if not g.p_min <= g.p_max:
            out.append(f"{g.id}.p_min: p_min ≤ p_max")
        if not g.ramp_up > 0:
            out.append(f"{g.id}.ramp_up: ramp_up > 0")
        if not g.ramp_down > 0:
            out.append(f"{g.id}.ramp_down: ramp_down > 0")
        if not g.min_up >= 1:
            out.append(f"{g.id}.min_up: min_up >= 1")
        if not g.min_down >= 1:
            out.append(f"{g.id}.min_down: min_down >= 1")
        for name in ("cost_marginal", "cost_noload", "cost_startup", "cost_shutdown"):
            if not getattr(g, name) >= 0:
                out.append(f"{g.id}.{name}: costs >= 0")
        if g.on_hours_before < 0 or g.off_hours_before < 0:
            out.append(f"{g.id}.initial_on_hours: initial hours >= 0")

    for s in config.storage:
        if not 0 <= s.p_ch_min <= s.p_ch_max:
            out.append(f"{s.id}.p_ch_min: 0 <= p_ch_min <= p_ch_max")
        if not 0 <= s.p_dch_min <= s.p_dch_max:
            out.append(f"{s.id}.p_dch_min: 0 <= p_dch_min <= p_dch_max")
        if not 0 <= s.c_min <= s.energy_before <= s.c_max:
            out.append(f"{s.id}.c_initial: 0 <= c_min <= c_initial <= c_max")
        if not 0 < s.efficiency <= 1:
            out.append(f"{s.id}.efficiency: 0 < efficiency <= 1")
        if not s.min_charge_time >= 1:
            out.append(f"{s.id}.min_charge_time: min_charge_time >= 1")
        if not s.min_discharge_time >= 1:
            out.append(f"{s.id}.min_discharge_time: min_discharge_time >= 1")

    for d in config.adjustable_loads:
        if len(d.d_min) != T or len(d.d_max) != T:
            out.append(f"{d.id}.d_max: profile length = horizon ({T})")
            continue
        if any(not 0 <= lo <= hi for lo, hi in zip(d.d_min, d.d_max)):
            out.append(f"{d.id}.d_min: 0 <= d_min <= d_max every hour")
        if not d.window_start <= d.window_end:
            out.append(f"{d.id}.window_start: α ≤ β")
        elif not (1 <= d.window_start and d.window_end <= T):
            out.append(f"{d.id}.window_end: 1 <= α <= β <= horizon")
        if not d.min_on >= 1:
            out.append(f"{d.id}.min_on: min_on >= 1")
        if not d.energy >= 0:
            out.append(f"{d.id}.energy: energy >= 0")
        elif d.window_start <= d.window_end:
            window = range(max(d.window_start, 1) - 1, min(d.window_end, T))
            capacity = sum(d.d_max[t] for t in window) * tau
            if capacity < d.energy - 1e-9:
                out.append(f"{d.id}.energy: window capacity >= energy "
                           f"({capacity:g} < {d.energy:g})")

    for p in config.fixed_profiles:
        if p.kind not in ("fixed_load", "nondispatchable_gen"):
            out.append(f"{p.id}.kind: kind in {{fixed_load, nondispatchable_gen}}")
        if len(p.values) != T:
            out.append(f"{p.id}.values: length = horizon ({T})")
        if not all(math.isfinite(v) for v in p.values):
            out.append(f"{p.id}.values: values finite")
    return out


def validate_feeder(profile: FeederProfile, horizon: int) -> list[str]:
    out = []
    if len(profile.customer_load) != horizon or len(profile.customer_solar) != horizon:
        out.append(f"feeder: length = horizon ({horizon})")
    for t, v in enumerate(profile.customer_load, 1):
        if not (math.isfinite(v) and v >= 0):
            out.append(f"feeder.load_mw[hour {t}]: load >= 0 (got {v})")
    for t, v in enumerate(profile.customer_solar, 1):
        if not (math.isfinite(v) and v >= 0):
            out.append(f"feeder.solar_mw[hour {t}]: solar >= 0 (got {v})")
    return out


def validate_price(price: PriceSeries, horizon: int) -> list[str]:
    out = []
    if len(price) != horizon:
        out.append(f"price: length = horizon ({horizon})")
    for t, v in enumerate(price.values, 1):
        if not math.isfinite(v):
            out.append(f"price[hour {t}]: finite (got {v})")
    return out


def as_series(values: Sequence[float] | np.ndarray) -> np.ndarray:
    return np.asarray(values, dtype=float).reshape(-1)
