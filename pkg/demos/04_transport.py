"""Semi-Lagrangian transport of a density by a rotating flow.

A bump is carried once around a rigid rotation.  Because the flow is a
rotation, the bump comes back to where it started, and the norm stays
within the transport estimate.
"""
# %%
import math

import numpy as np

from herzflow import NormParams, make_grid
from herzflow.grid import Field
from herzflow.transport import cfl_limit, check_transport_estimate, rotation_velocity, solve_transport

g = make_grid(2, 128, 16.0)
v = rotation_velocity(g, radius=4.0, width=0.75)
x, y = g.mesh
a0 = Field(g, np.exp(-((x - 1.0) ** 2 + y ** 2) / 0.5 ** 2)[None])

# %% a quarter turn should map (1, 0) to (0, 1)
T = math.pi / 2
a = solve_transport(a0, v, T, dt=cfl_limit(g, v.sup()), out_times=np.linspace(0, T, 5))
rotated = Field(g, np.exp(-(x ** 2 + (y - 1.0) ** 2) / 0.5 ** 2)[None])
print("quarter-turn error:", np.max(np.abs(a.fields[-1].values - rotated.values)))

# %%
rep = check_transport_estimate(a, v, NormParams())
print("fitted C:", round(rep.extra["C"], 4), "pass:", rep.passed)
