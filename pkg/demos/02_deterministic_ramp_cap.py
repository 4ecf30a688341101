# %% [markdown]
# # What capping the ramp costs the microgrid
#
# First the schedule without any ramp limit (pure economic dispatch against
# the price), then the same microgrid asked to keep the utility ramp within
# 2 MW/h.  The difference is the price of the flexibility it provides.

# %%
import math
import time

import numpy as np

from mgramp.cli import load_bundled
from mgramp.feeder import aggregate_net_load, ramp_bounds, utility_power
from mgramp.milp import solve_milp
from mgramp.scheduling import build_monolithic
from mgramp.validate import check_schedule

config, feeder, price = load_bundled()
net = aggregate_net_load(feeder)

results = {}
for delta in (math.inf, 2.0):
    ramp = ramp_bounds(net, delta)
    built = build_monolithic(config, price, ramp)
    t0 = time.perf_counter()
    sol = solve_milp(built.model, backend="highs")
    sched = built.schedule(sol.x, sol.objective)
    results[delta] = sched
    pu = utility_power(sched.grid_exchange, net)
    print(f"delta={delta}: cost {sol.objective:9.2f} $  "
          f"max utility ramp {np.abs(np.diff(pu)).max():5.2f} MW/h  "
          f"({time.perf_counter() - t0:.1f} s, {len(built.model.binary_indices)} binaries)")
    print("  independent check:", "clean" if check_schedule(sched, config, price, ramp).ok
          else "VIOLATIONS")

# %% [markdown]
# How the schedule changes: the exchange is reshaped so that P^u = P^M + net
# moves by at most 2 MW/h.

# %%
free, capped = results[math.inf], results[2.0]
print("hour  P^M free  P^M capped  P^u capped")
for t in range(24):
    print(f"{t + 1:4d}  {free.grid_exchange[t]:8.2f}  {capped.grid_exchange[t]:10.2f}  "
          f"{capped.grid_exchange[t] + net[t]:10.2f}")

# %%
print("unit output (capped), MW:")
for k, g in enumerate(config.units):
    print(f"  {g.id}: " + " ".join(f"{v:4.1f}" for v in capped.unit_power[k]))
print("storage energy (capped), MWh:",
      " ".join(f"{v:4.1f}" for v in capped.stored_energy[0]))
