"""Scenario runner: ingest CSV/JSON data, solve, write schedule.csv / report.json / sweep.csv.

Exit codes: 0 success, 2 input or validation failure (including an
unservable configuration), 3 robust loop did not converge.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .benders import BendersOptions, RobustResult, solve_robust
from .domain import (CATEGORIES, FeederProfile, MicrogridConfig, PriceSeries, UncertaintySpec,
                     validate_config, validate_feeder, validate_price)
from .feeder import aggregate_net_load, ramp_bounds, ramp_stats, utility_power
from .milp import INFEASIBLE, OPTIMAL, solve_milp
from .scheduling import ConfigurationError, build_monolithic, realized_ramp
from .validate import check_schedule, monte_carlo

EXIT_OK, EXIT_INPUT, EXIT_NOT_CONVERGED = 0, 2, 3
MODES = ("deterministic", "robust", "sweep", "analyze-feeder", "validate")
DEFAULT_SWEEP = (0, 3, 6, 9, 12)


class InputError(Exception):
    """Unreadable or invalid input; ``messages`` lists every problem found."""

    def __init__(self, messages):
        self.messages = list(messages)
        super().__init__("; ".join(self.messages))


@dataclass
class RunSpec:
    mode: str = "robust"
    config: Path | None = None
    feeder: Path | None = None
    price: Path | None = None
    delta: float = 2.0
    budgets: tuple = (12,)
    uncertain: tuple = ("load",)
    errors: tuple = (0.10, 0.20, 0.10)
    mc_samples: int = 0
    seed: int = 0
    out: Path = Path("out")
    options: BendersOptions = field(default_factory=BendersOptions)

    def uncertainty(self, categories=None, budget=None) -> UncertaintySpec:
        cats = self.uncertain if categories is None else categories
        return UncertaintySpec(*self.errors, budget_hours=self.budgets[-1] if budget is None else budget,
                               active_categories=set(cats))


# ---------------------------------------------------------------------------
# ingestion
# ---------------------------------------------------------------------------
def bundled_path(name: str) -> Path:
    return Path(str(resources.files("mgramp") / "data" / name))


def _read_table(path: Path, columns: tuple) -> list[tuple]:
    """Rows of ``columns`` as floats, with hours checked to run 1..T in order."""
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise InputError([f"{path}: {exc.strerror}"]) from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise InputError([f"{path}: empty file"]) from None
        missing = [c for c in ("hour",) + columns if c not in header]
        if missing:
            raise InputError([f"{path}:1: missing column(s) {', '.join(missing)}"])
        idx = [header.index(c) for c in ("hour",) + columns]
        rows, errors = [], []
        expected = 1
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not f.strip() for f in rec):
                continue
            values = []
            for c, i in zip(("hour",) + columns, idx):
                if i >= len(rec):
                    errors.append(f"{path}:{lineno}:{i + 1}: missing value for {c}")
                    break
                try:
                    values.append(float(rec[i]))
                except ValueError:
                    errors.append(f"{path}:{lineno}:{i + 1}: {c} is not a number ({rec[i]!r})")
                    break
            else:
                hour = values[0]
                if hour != int(hour):
                    errors.append(f"{path}:{lineno}:{idx[0] + 1}: hour must be an integer")
                elif int(hour) != expected:
                    if int(hour) > expected:
                        gap = (f"hour {expected}" if int(hour) == expected + 1
                               else f"hours {expected}-{int(hour) - 1}")
                        errors.append(f"{path}:{lineno}: {gap} missing before hour {int(hour)}")
                    else:
                        errors.append(f"{path}:{lineno}: hour {int(hour)} out of order "
                                      f"(expected {expected})")
                    expected = int(hour) + 1
                else:
                    expected += 1
                rows.append(tuple(values[1:]))
        if errors:
            raise InputError(errors)
        if not rows:
            raise InputError([f"{path}: no data rows"])
        return rows


def read_feeder(path: Path) -> FeederProfile:
    rows = _read_table(path, ("load_mw", "solar_mw"))
    return FeederProfile([r[0] for r in rows], [r[1] for r in rows])


def read_price(path: Path) -> PriceSeries:
    return PriceSeries([r[0] for r in _read_table(path, ("price_usd_per_mwh",))])


def read_config(path: Path) -> MicrogridConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError([f"{path}: {exc.strerror}"]) from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError([f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}"]) from exc
    try:
        return MicrogridConfig.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError([f"{path}: malformed configuration ({exc})"]) from exc


def ingest(config_path=None, feeder_path=None, price_path=None
           ) -> tuple[MicrogridConfig, FeederProfile, PriceSeries]:
    """Read and validate the three inputs; bundled data stands in for missing paths."""
    cfg = read_config(config_path or bundled_path("microgrid.json"))
    feeder = read_feeder(feeder_path or bundled_path("feeder.csv"))
    price = read_price(price_path or bundled_path("price.csv"))
    problems = (validate_config(cfg) + validate_feeder(feeder, cfg.horizon)
                + validate_price(price, cfg.horizon))
    if problems:
        raise InputError(problems)
    return cfg, feeder, price


def load_bundled() -> tuple[MicrogridConfig, FeederProfile, PriceSeries]:
    return ingest()


# ---------------------------------------------------------------------------
# artifacts
# ---------------------------------------------------------------------------
def _num(v: float) -> str:
    """Stable text for a float: 10 significant digits, no negative zero."""
    v = float(v)
    if not math.isfinite(v):
        return str(v)
    s = f"{v:.10g}"
    return "0" if s in ("-0", "0") else s


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return float(f"{v:.12g}") if math.isfinite(v) else str(v)
    return obj


def write_json(path: Path, data: dict) -> None:
    path.write_text(json.dumps(_clean(data), indent=2, sort_keys=True) + "\n")


def write_schedule_csv(path: Path, schedule, config: MicrogridConfig, feeder: FeederProfile) -> None:
    net = aggregate_net_load(feeder)
    pu = utility_power(schedule.grid_exchange, net)
    header = ["hour"]
    header += [f"P_{g.id}" for g in config.units]
    header += [f"I_{g.id}" for g in config.units]
    for s in config.storage:
        header += [f"P_{s.id}", f"C_{s.id}"]
    header += [f"D_{d.id}" for d in config.adjustable_loads]
    header += ["P_M", "P_u", "net_load", "ramp_slack"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for t in range(config.horizon):
            row = [t + 1]
            row += [_num(schedule.unit_power[k, t]) for k in range(len(config.units))]
            row += [int(schedule.unit_on[k, t]) for k in range(len(config.units))]
            for k in range(len(config.storage)):
                row += [_num(schedule.storage_power[k, t]), _num(schedule.stored_energy[k, t])]
            row += [_num(schedule.load_power[k, t]) for k in range(len(config.adjustable_loads))]
            row += [_num(schedule.grid_exchange[t]), _num(pu[t]), _num(net[t]),
                    _num(schedule.ramp_slack[t])]
            w.writerow(row)


def _realization_dict(real) -> dict:
    return {c: real.deviation(c).tolist() for c in CATEGORIES}


# ---------------------------------------------------------------------------
# modes
# ---------------------------------------------------------------------------
def _analyze(spec: RunSpec, cfg, feeder, price) -> tuple[int, dict]:
    stats = ramp_stats(aggregate_net_load(feeder), windows=(3,))
    return EXIT_OK, {
        "mode": "analyze-feeder",
        "net_load": stats.net_load,
        "max_1h_ramp": round(stats.max_1h_ramp, 6),
        "max_1h_ramp_hours": [stats.argmax_1h - 1, stats.argmax_1h],
        "max_3h_avg": round(stats.max_kh_avg_ramp[3], 6),
        "max_3h_avg_hours": list(stats.argmax_kh[3]),
    }


def _mc(spec, commitments, cfg, price, feeder):
    if spec.mc_samples <= 0:
        return None
    return monte_carlo(commitments, cfg, price, feeder, spec.delta, spec.uncertainty(),
                       spec.mc_samples, spec.seed, backend=spec.options.backend).as_dict()


def _deterministic(spec: RunSpec, cfg, feeder, price) -> tuple[int, dict]:
    net = aggregate_net_load(feeder)
    ramp = ramp_bounds(net, spec.delta, cfg.initial_utility_power)
    built = build_monolithic(cfg, price, ramp, spec.options.slack_penalty)
    sol = solve_milp(built.model, spec.options.time_limit, backend=spec.options.backend)
    if sol.status == INFEASIBLE:
        raise ConfigurationError(["deterministic problem infeasible"])
    if sol.status != OPTIMAL:
        raise ConfigurationError([f"deterministic solve ended with status {sol.status}"])
    sched = built.schedule(sol.x, sol.objective)
    write_schedule_csv(spec.out / "schedule.csv", sched, cfg, feeder)
    report = {
        "mode": "deterministic",
        "delta": spec.delta,
        "objective": sol.objective,
        "ramp_slack_total": float(sched.ramp_slack.sum()),
        "violations": check_schedule(sched, cfg, price, ramp).as_dict(),
    }
    mc = _mc(spec, sched, cfg, price, feeder)
    if mc is not None:
        report["monte_carlo"] = mc
    return EXIT_OK, report


def _robust_report(res: RobustResult, spec: RunSpec, cfg, feeder, price) -> dict:
    net = aggregate_net_load(feeder)
    ramp = realized_ramp(ramp_bounds(net, spec.delta, cfg.initial_utility_power), feeder,
                         res.worst_case.realization)
    return {
        "objective": res.objective,
        "lower_bound": res.lower_bounds[-1],
        "gap": res.gap,
        "converged": res.converged,
        "iterations": res.iterations,
        "lower_bounds": res.lower_bounds,
        "upper_bounds": res.upper_bounds,
        "trace": [r.as_dict() for r in res.trace],
        "worst_case": {"cost": res.worst_case.worst_cost,
                       "hours": {k: list(map(int, v)) for k, v in
                                 res.worst_case.selected_hours.items()},
                       "deviation": _realization_dict(res.worst_case.realization)},
        "ramp_slack_total": float(res.schedule.ramp_slack.sum()),
        "violations": check_schedule(res.schedule, cfg, price, ramp).as_dict(),
    }


def _robust(spec: RunSpec, cfg, feeder, price) -> tuple[int, dict]:
    unc = spec.uncertainty()
    res = solve_robust(cfg, feeder, price, spec.delta, unc, spec.options)
    write_schedule_csv(spec.out / "schedule.csv", res.schedule, cfg, feeder)
    report = {"mode": "robust", "delta": spec.delta,
              "uncertain": sorted(unc.active_categories), "budget": spec.budgets[-1],
              "errors": dict(zip(CATEGORIES, spec.errors))}
    report.update(_robust_report(res, spec, cfg, feeder, price))
    mc = _mc(spec, res.binaries, cfg, price, feeder)
    if mc is not None:
        report["monte_carlo"] = mc
    return (EXIT_OK if res.converged else EXIT_NOT_CONVERGED), report


def _sweep(spec: RunSpec, cfg, feeder, price) -> tuple[int, dict]:
    budgets = spec.budgets if len(spec.budgets) > 1 else DEFAULT_SWEEP
    rows, runs = [], []
    code = EXIT_OK
    for cat in spec.uncertain:
        for g in budgets:
            res = solve_robust(cfg, feeder, price, spec.delta, spec.uncertainty((cat,), g),
                               spec.options)
            if not res.converged:
                code = EXIT_NOT_CONVERGED
            rows.append([cat, g, _num(res.objective), _num(res.lower_bounds[-1]),
                         _num(res.gap), res.iterations, int(res.converged)])
            runs.append({"category": cat, "budget": g, "objective": res.objective,
                         "gap": res.gap, "iterations": res.iterations,
                         "converged": res.converged})
    with open(spec.out / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["category", "budget", "objective", "lower_bound", "gap", "iterations",
                    "converged"])
        w.writerows(rows)
    return code, {"mode": "sweep", "delta": spec.delta, "budgets": list(budgets), "runs": runs}


def _validate(spec: RunSpec, cfg, feeder, price) -> tuple[int, dict]:
    # ingest already rejected invalid inputs; reaching here means all checks passed
    return EXIT_OK, {"mode": "validate", "valid": True, "violations": [],
                     "horizon": cfg.horizon}


_RUNNERS = {"deterministic": _deterministic, "robust": _robust, "sweep": _sweep,
            "analyze-feeder": _analyze, "validate": _validate}


def run(spec: RunSpec) -> int:
    """Execute one run; artifacts go to ``spec.out``.  Returns the exit code."""
    spec.out.mkdir(parents=True, exist_ok=True)
    try:
        cfg, feeder, price = ingest(spec.config, spec.feeder, spec.price)
    except InputError as exc:
        write_json(spec.out / "report.json", {"mode": spec.mode, "valid": False,
                                              "violations": exc.messages})
        for m in exc.messages:
            print(f"error: {m}", file=sys.stderr)
        return EXIT_INPUT
    if spec.mode in ("robust", "sweep") or spec.mc_samples > 0:
        problems = sorted({m for g in spec.budgets
                           for m in spec.uncertainty(budget=g).validate(cfg.horizon)})
        if problems:
            write_json(spec.out / "report.json", {"mode": spec.mode, "valid": False,
                                                  "violations": problems})
            for m in problems:
                print(f"error: {m}", file=sys.stderr)
            return EXIT_INPUT
    try:
        code, report = _RUNNERS[spec.mode](spec, cfg, feeder, price)
    except ConfigurationError as exc:
        msgs = list(getattr(exc, "violations", [str(exc)]))
        write_json(spec.out / "report.json", {"mode": spec.mode, "valid": False,
                                              "violations": msgs})
        for m in msgs:
            print(f"error: {m}", file=sys.stderr)
        return EXIT_INPUT
    write_json(spec.out / "report.json", report)
    if code == EXIT_NOT_CONVERGED:
        print(f"warning: robust loop stopped at gap {report.get('gap', 'see report')}",
              file=sys.stderr)
    return code


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------
def _positive_delta(text: str) -> float:
    if text.strip().lower() in ("inf", "infinity", "none"):
        return math.inf
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError("delta must be > 0 (use 'inf' to disable)")
    return v


def _budgets(text: str) -> tuple:
    try:
        out = tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError("budget must be integers, e.g. 12 or 0,3,6,9,12") from None
    if not out or any(g < 0 for g in out):
        raise argparse.ArgumentTypeError("budget must be nonnegative integers")
    return out


def _errors(text: str) -> tuple:
    try:
        vals = tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("errors must be three numbers L,S,P") from None
    if len(vals) != 3 or any(not 0 <= v < 1 for v in vals):
        raise argparse.ArgumentTypeError("errors must be three fractions in [0, 1): L,S,P")
    return vals


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="mgramp", allow_abbrev=False,
        description="Microgrid scheduling with a cap on feeder net-load ramping.")
    p.add_argument("--mode", choices=MODES, default="robust")
    p.add_argument("--config", type=Path, help="microgrid JSON (default: bundled)")
    p.add_argument("--feeder", type=Path, help="CSV with hour,load_mw,solar_mw (default: bundled)")
    p.add_argument("--price", type=Path, help="CSV with hour,price_usd_per_mwh (default: bundled)")
    p.add_argument("--delta", type=_positive_delta, default=2.0,
                   help="ramping limit in MW/h; 'inf' disables it (default 2)")
    p.add_argument("--budget", type=_budgets, default=(12,),
                   help="uncertainty budget in hours; a comma list for --mode sweep")
    p.add_argument("--uncertain", nargs="+", choices=CATEGORIES, default=["load"],
                   help="uncertain categories (default: load)")
    p.add_argument("--errors", type=_errors, default=(0.10, 0.20, 0.10),
                   help="forecast errors for load,solar,price (default 0.1,0.2,0.1)")
    p.add_argument("--mc-samples", type=int, default=0,
                   help="Monte Carlo samples on the final commitments (default 0)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=Path("out"))
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.mc_samples < 0:
        print("error: --mc-samples must be >= 0", file=sys.stderr)
        return EXIT_INPUT
    spec = RunSpec(mode=args.mode, config=args.config, feeder=args.feeder, price=args.price,
                   delta=args.delta, budgets=args.budget, uncertain=tuple(args.uncertain),
                   errors=args.errors, mc_samples=args.mc_samples, seed=args.seed, out=args.out)
    return run(spec)


if __name__ == "__main__":
    sys.exit(main())
