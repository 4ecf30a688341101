# %% [markdown]
# # Checking the decomposition against brute force
#
# On a three-hour microgrid with one unit and one battery there are few
# enough commitment patterns to try them all, and few enough extreme
# realizations to evaluate each.  The decomposition, run on the package's
# own simplex and branch-and-bound, has to land on the same number.

# %%
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from helpers import enumerate_robust, toy_config, toy_feeder, toy_price  # noqa: E402

from mgramp.benders import BendersOptions, solve_robust  # noqa: E402
from mgramp.domain import UncertaintySpec  # noqa: E402

for cat, budget in (("load", 1), ("solar", 2), ("price", 3)):
    spec = UncertaintySpec(budget_hours=budget, active_categories={cat})
    best, best_x, table = enumerate_robust(toy_config(), toy_feeder(), toy_price(), 1.5, spec)
    res = solve_robust(toy_config(), toy_feeder(), toy_price(), 1.5, spec,
                       BendersOptions(backend="builtin"))
    on = [int(best_x[("G1", "I", t)]) for t in range(3)]
    print(f"{cat:5s} budget {budget}: enumeration {best:9.4f} over {len(table)} commitments "
          f"(unit on {on});  decomposition {res.objective:9.4f} in {res.iterations} iterations")
