"""Reusable smooth initial data for experiments and tests."""
from __future__ import annotations

from typing import Optional

import numpy as np

from .grid import Field, Grid, derivative, leray_project, random_field, truncate


def vortex_pair(grid: Grid, width: float = 2.0, amplitude: float = 1.0,
                ratio: float = -0.7, offset: float = 1.0) -> Field:
    """Divergence-free velocity of two offset Gaussian vortices.

    The stream function is ``exp(-|x - c1|^2/w^2) + ratio exp(-|x - c2|^2/w^2)``
    with ``c1 = (offset, 0)`` and ``c2 = (-offset, offset/2)`` in the first two
    coordinates; in 3-D the velocity lies in the (x1, x2) plane and the
    vortices are also localized in x3.  ``amplitude`` multiplies the stream
    function.
    """
    x = grid.mesh
    r1 = (x[0] - offset) ** 2 + x[1] ** 2
    r2 = (x[0] + offset) ** 2 + (x[1] - 0.5 * offset) ** 2
    if grid.n == 3:
        r1 = r1 + x[2] ** 2
        r2 = r2 + x[2] ** 2
    psi = amplitude * (np.exp(-r1 / width ** 2) + ratio * np.exp(-r2 / width ** 2))
    ps = Field(grid, psi[None])
    d0, d1 = derivative(ps, 0).values[0], derivative(ps, 1).values[0]
    comps = [d1, -d0] + ([np.zeros_like(d0)] if grid.n == 3 else [])
    return leray_project(Field(grid, np.stack(comps)))


def density_bump(grid: Grid, amplitude: float = 0.2, width: float = 2.0,
                 center=(0.5, -0.5)) -> Field:
    """Gaussian density perturbation a = 1/rho - 1."""
    x = grid.mesh
    r2 = sum((x[i] - (center[i] if i < len(center) else 0.0)) ** 2 for i in range(grid.n))
    return Field(grid, (amplitude * np.exp(-r2 / width ** 2))[None])


def smooth_random(grid: Grid, seed: int, components: int = 1, sigma: Optional[float] = None,
                  s: float = 2.0, solenoidal: bool = False, envelope: Optional[float] = 2.0,
                  amplitude: float = 1.0, kmax: Optional[float] = None) -> Field:
    """Seeded random field; the default decay is sigma = s + n/2 + 1."""
    if sigma is None:
        sigma = s + grid.n / 2.0 + 1.0
    rng = np.random.default_rng(seed)
    return random_field(grid, rng, components, sigma=sigma, kmax=kmax, solenoidal=solenoidal,
                        mean_zero=solenoidal, envelope=envelope, amplitude=amplitude)


def band_limited(u: Field, kmax: float) -> Field:
    return truncate(u, kmax)
