"""Herz and Besov-Herz norms of a localized bump.

The Herz norm weights dyadic shells in physical space by 2^(k alpha).  The
Besov-Herz norm applies that norm to each frequency block and sums the
blocks with weight 2^(j s).
"""
# %%
import math

from herzflow import NormParams, besov_herz_norm, herz_norm, make_grid
from herzflow.data import density_bump

g = make_grid(2, 128, 16.0)
a = density_bump(g, amplitude=0.2, width=2.0)

# %%
for alpha in (0.0, 0.5, 1.0):
    P = NormParams(alpha=alpha)
    print(f"alpha = {alpha}:  Herz = {herz_norm(a, P):.4f}")

# %% the breakdown shows which frequency blocks carry the norm
P = NormParams()
norm, bd = besov_herz_norm(a, P)
print("Besov-Herz norm:", round(norm, 4))
for row in bd.to_json():
    print(row)

# %% larger s moves the weight to high frequencies
for s in (1.0, 2.0, 3.0):
    print(f"s = {s}:  {bd.reweighted(s).norm:.4f}")
print("q = inf:", besov_herz_norm(a, NormParams(q=math.inf))[0])
