"""Vorticity, the gradient split and the blow-up functional.

The velocity gradient is rebuilt from the vorticity through Riesz
transforms.  The time integral of the vorticity seminorm is the quantity
that controls continuation of the solution.
"""
# %%
import numpy as np

from herzflow import TimeSeries, bkm_functional, make_grid, vorticity
from herzflow.data import vortex_pair
from herzflow.diagnostics import check_grad_decomposition

g = make_grid(2, 64, 16.0)
u = vortex_pair(g, 2.0)
w = vorticity(u)
print("max vorticity:", w.sup())

# %%
rep = check_grad_decomposition(u)
print("gradient reconstruction error:", rep.lhs)

# %% a velocity that grows linearly in time
ts = np.linspace(0.0, 1.0, 11)
series = TimeSeries(ts, [u * (1 + t) for t in ts])
bkm = bkm_functional(series)
print("integral:", bkm.total, "nondecreasing:", bkm.nondecreasing)
