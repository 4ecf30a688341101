import dataclasses

from mgramp.domain import (AdjustableLoad, DispatchableUnit, MicrogridConfig, StorageUnit,
                           TimeGrid, UncertaintySpec, validate_config)


def _unit(**kw):
    base = dict(id="G", p_min=1.0, p_max=3.0, ramp_up=1.0, ramp_down=1.0)
    base.update(kw)
    return DispatchableUnit(**base)


def test_bundled_config_is_valid(bundled):
    cfg = bundled[0]
    assert validate_config(cfg) == []
    assert (len(cfg.units), len(cfg.storage), len(cfg.adjustable_loads)) == (4, 1, 5)
    assert cfg.horizon == 24


def test_dict_round_trip(bundled):
    cfg = bundled[0]
    again = MicrogridConfig.from_dict(cfg.to_dict())
    assert again == cfg
    assert again.to_dict() == cfg.to_dict()


def test_unit_min_above_max():
    cfg = MicrogridConfig(TimeGrid(3), units=[_unit(p_min=5.0, p_max=3.0)])
    problems = validate_config(cfg)
    assert len(problems) == 1
    assert "p_min ≤ p_max" in problems[0]


def test_load_window_reversed():
    load = AdjustableLoad("L", (0.0,) * 12, (1.0,) * 12, 1, 1.0, 10, 8)
    problems = validate_config(MicrogridConfig(TimeGrid(12), adjustable_loads=[load]))
    assert len(problems) == 1
    assert "α ≤ β" in problems[0]


def test_energy_beyond_window_capacity():
    load = AdjustableLoad("L", (0.0,) * 4, (1.0,) * 4, 1, 3.5, 2, 4)
    problems = validate_config(MicrogridConfig(TimeGrid(4), adjustable_loads=[load]))
    assert problems == ["L.energy: window capacity >= energy (3 < 3.5)"]


def test_duplicate_ids_and_storage_bounds():
    s = StorageUnit("G", 0.0, 1.0, 0.0, 1.0, 0.0, 2.0, c_initial=3.0)
    problems = validate_config(MicrogridConfig(TimeGrid(3), units=[_unit()], storage=[s]))
    assert "G.id: ids unique" in problems
    assert any(p.startswith("G.c_initial") for p in problems)


def test_validation_is_order_stable():
    cfg = MicrogridConfig(TimeGrid(3), units=[_unit(p_min=5.0, p_max=3.0, ramp_up=0.0),
                                              _unit(id="H", min_up=0)])
    first = validate_config(cfg)
    assert first == validate_config(cfg)
    assert len(first) == 3


def test_uncertainty_spec_budget_and_validation():
    spec = UncertaintySpec(budget_hours={"load": 4}, active_categories={"load", "solar"})
    assert spec.budget("load") == 4 and spec.budget("solar") == 0 and spec.budget("price") == 0
    bad = dataclasses.replace(spec, budget_hours=30, load_error=1.5)
    msgs = bad.validate(24)
    assert any("load_error" in m for m in msgs)
    assert sum("budget" in m for m in msgs) == 2
