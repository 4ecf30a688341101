# %% [markdown]
# # Feeder net load and the utility ramp limit
#
# Customers on the feeder consume power and some of them own rooftop solar.
# The utility only sees the difference, the net load.  Around midday the
# solar output hollows the net load out; in the evening it climbs back
# steeply.  This script looks at that curve and at what a ramp limit on the
# utility side means for the microgrid sitting on the same feeder.

# %%
import numpy as np

from mgramp.cli import load_bundled
from mgramp.feeder import aggregate_net_load, ramp_bounds, ramp_stats

config, feeder, price = load_bundled()
net = aggregate_net_load(feeder)
for hour, (load, solar, n) in enumerate(zip(feeder.customer_load, feeder.customer_solar, net), 1):
    print(f"hour {hour:2d}  load {load:6.2f}  solar {solar:6.2f}  net {n:6.2f}")

# %% [markdown]
# The largest single-hour change and the steepest three-hour average:

# %%
stats = ramp_stats(net, windows=(3,))
print(f"max 1h ramp   {stats.max_1h_ramp:.2f} MW/h, landing at hour {stats.argmax_1h}")
start, end = stats.argmax_kh[3]
print(f"max 3h average {stats.max_kh_avg_ramp[3]:.2f} MW/h, hours {start} -> {end}")

# %% [markdown]
# The utility power is the microgrid exchange plus the net load.  Asking
# the utility ramp to stay within delta turns into per-hour bounds on the
# change of the exchange: the microgrid must absorb whatever the feeder
# ramps beyond delta.  In the evening the bounds are all negative, i.e. the
# microgrid has to cut its imports hour after hour.

# %%
ramp = ramp_bounds(net, 2.0)
change = np.diff(net, prepend=np.nan)
for t in range(15, 21):
    print(f"hour {t + 1}: net change {change[t]:+5.2f}  "
          f"exchange change in [{ramp.lower[t]:+5.2f}, {ramp.upper[t]:+5.2f}]")
