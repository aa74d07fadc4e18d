"""Bony decomposition and the transport commutator.

The product of two fields splits into two paraproducts and a remainder.
The commutator between a frequency block and advection is smaller than
either term on its own, which is what the commutator estimate measures.
"""
# %%
import numpy as np

from herzflow import NormParams, make_grid, random_field
from herzflow.paraproduct import bony_parts, check_commutator_transport

g = make_grid(2, 64, 16.0)
rng = np.random.default_rng(1)
u = random_field(g, rng, kmax=5.0)
v = random_field(g, rng, kmax=5.0)

# %%
Tuv, Tvu, rem, _ = bony_parts(u, v)
total = Tuv + Tvu + rem
print("reconstruction error:", np.max(np.abs(total.values - u.values * v.values)))

# %%
vel = random_field(g, rng, 2, kmax=5.0, solenoidal=True)
w = random_field(g, rng, 2, kmax=5.0)
P = NormParams(s=2.0)
for variant in ("i", "ii", "s_minus_1"):
    rep = check_commutator_transport(vel, w, P, variant)
    print(f"variant {variant:10s} fitted C = {rep.fitted_constant:.3f}  pass = {rep.passed}")
