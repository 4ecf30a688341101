"""Feeder net load and the translation of the utility ramp limit."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .domain import FeederProfile, RampPolicy, as_series


@dataclass(frozen=True)
class FeederStats:
    net_load: tuple[float, ...]
    max_1h_ramp: float
    argmax_1h: int  # 1-based hour at which the largest change lands
    max_kh_avg_ramp: dict = field(default_factory=dict)  # k -> MW/h
    argmax_kh: dict = field(default_factory=dict)  # k -> (start hour, end hour), 1-based


def aggregate_net_load(profile: FeederProfile) -> np.ndarray:
    load = as_series(profile.customer_load)
    solar = as_series(profile.customer_solar)
    if load.shape != solar.shape:
        raise ValueError(f"load has {load.size} hours but solar has {solar.size}")
    return load - solar


def ramp_bounds(net_load: Sequence[float], delta: float,
                initial_utility_power: float | None = None) -> RampPolicy:
    """Bounds on ``P^M_t - P^M_{t-1}`` keeping utility ramps within ``delta``.

    Hour 1 is unbounded unless the utility power of the hour before the
    horizon is given; the hour-1 entries then bound ``P^M_1`` itself
    (``P^M_0`` is taken as 0).
    """
    net = as_series(net_load)
    if net.size < 2:
        raise ValueError("ramp bounds need at least two hours")
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    change = np.diff(net)
    lower = np.concatenate([[-math.inf], -delta - change])
    upper = np.concatenate([[math.inf], delta - change])
    if initial_utility_power is not None and math.isfinite(delta):
        lower[0] = initial_utility_power - delta - net[0]
        upper[0] = initial_utility_power + delta - net[0]
    return RampPolicy(delta, tuple(lower), tuple(upper))


def ramp_stats(net_load: Sequence[float], windows: Sequence[int] = (3,)) -> FeederStats:
    net = as_series(net_load)
    for k in windows:
        if not 1 <= k < net.size:
            raise ValueError(f"window {k} must satisfy 1 <= k < {net.size}")
    if net.size < 2:
        raise ValueError("ramp statistics need at least two hours")
    step = np.abs(np.diff(net))
    i = int(np.argmax(step))
    avg, where = {}, {}
    for k in windows:
        rates = np.abs(net[k:] - net[:-k]) / k
        j = int(np.argmax(rates))
        avg[k] = float(rates[j])
        where[k] = (j + 1, j + 1 + k)
    return FeederStats(tuple(net), float(step[i]), i + 2, avg, where)


def utility_power(grid_exchange: Sequence[float], net_load: Sequence[float]) -> np.ndarray:
    pm = as_series(grid_exchange)
    net = as_series(net_load)
    if pm.shape != net.shape:
        raise ValueError(f"exchange has {pm.size} hours but net load has {net.size}")
    return pm + net
