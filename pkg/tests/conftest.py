import math

import pytest

from mgramp.cli import load_bundled
from mgramp.feeder import aggregate_net_load, ramp_bounds
from mgramp.milp import OPTIMAL, solve_milp
from mgramp.scheduling import build_monolithic


@pytest.fixture(scope="session")
def bundled():
    """(config, feeder, price) shipped with the package."""
    return load_bundled()


@pytest.fixture(scope="session")
def net_load(bundled):
    return aggregate_net_load(bundled[1])


@pytest.fixture(scope="session")
def deterministic(bundled, net_load):
    """Monolithic solves at delta=2 and delta=inf: {delta: (built, solution, ramp)}."""
    cfg, _, price = bundled
    out = {}
    for delta in (2.0, math.inf):
        ramp = ramp_bounds(net_load, delta, cfg.initial_utility_power)
        built = build_monolithic(cfg, price, ramp)
        sol = solve_milp(built.model, backend="highs")
        assert sol.status == OPTIMAL
        out[delta] = (built, sol, ramp)
    return out


# acceptance verdicts, printed once at the end of the run
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, text = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {text}")
