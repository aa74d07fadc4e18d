"""Littlewood-Paley filter bank on the periodic lattice.

The radial cutoff ``chi`` equals 1 on [0, 3/4] and 0 on [1, inf) with a
C-infinity transition built from exp(-1/t).  With ``chi_j(xi) = chi(2^-j |xi|)``:

* ring multipliers ``phi_j = chi_{j+1} - chi_j`` live on [3/4, 2] * 2^j,
  satisfy ``phi_j(2^j) = 1`` and ``phi_j = phi(2^-j .)``;
* the base multiplier is ``psi = chi_{j_min+1}``;
* the low-pass ``S_j`` is the multiplier ``chi_j`` (zero for j <= j_min).

Bank indices are physical: block j lives at |xi| ~ 2^j in units of the
lattice wavevectors.  The base block sits at j = j_min, which plays the
role of the index -1 in the usual nonhomogeneous numbering; the helper
:meth:`DyadicFilterBank.shifted_index` converts (``jp = j - j_min - 1``).
"""
from __future__ import annotations

import math
from functools import lru_cache
from typing import List

import numpy as np

from .errors import FilterBankError, GridError
from .grid import Field, Grid, _from_rspec

HOMOGENEOUS = "homogeneous"
NONHOMOGENEOUS = "nonhomogeneous"
_MODES = (HOMOGENEOUS, NONHOMOGENEOUS)

__all__ = ["chi_profile", "phi_profile", "DyadicFilterBank", "build_filter_bank",
           "default_bank", "block", "low_pass", "reconstruct", "HOMOGENEOUS",
           "NONHOMOGENEOUS"]


def _smooth_step(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1."""
    x = np.asarray(x, dtype=float)
    a = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
    y = 1.0 - x
    b = np.where(y > 0, np.exp(-1.0 / np.where(y > 0, y, 1.0)), 0.0)
    return a / (a + b)


def chi_profile(t):
    """Radial cutoff: 1 for t <= 3/4, 0 for t >= 1."""
    return 1.0 - _smooth_step((np.asarray(t, dtype=float) - 0.75) * 4.0)


def phi_profile(t):
    """Ring profile chi(t/2) - chi(t), supported in [3/4, 2]."""
    t = np.asarray(t, dtype=float)
    return chi_profile(0.5 * t) - chi_profile(t)


def _check_mode(mode):
    if mode not in _MODES:
        raise ValueError(f"mode must be one of {_MODES}, got {mode!r}")


class DyadicFilterBank:
    """Multipliers psi, phi_j (j_min <= j <= j_max) sampled on a grid lattice."""

    def __init__(self, grid: Grid, j_min: int, j_max: int):
        j_min, j_max = int(j_min), int(j_max)
        if j_max - j_min < 4:
            raise FilterBankError(f"need j_max - j_min >= 4, got {j_min}..{j_max}")
        if 2.0 ** j_max * 8.0 / 3.0 > grid.nyquist * (1 + 1e-12):
            raise FilterBankError(
                f"ring 2^{j_max} does not fit below the Nyquist wavenumber {grid.nyquist:.4g}")
        if 2.0 ** j_min > grid.k0 * (1 + 1e-12):
            raise FilterBankError(
                f"base scale 2^{j_min} exceeds the lowest lattice wavenumber {grid.k0:.4g}")
        self.grid = grid
        self.j_min = j_min
        self.j_max = j_max
        kk = grid.rkmag
        # chi_j for j = j_min .. j_max+1
        self._chi = {j: chi_profile(kk * 2.0 ** (-j)) for j in range(j_min, j_max + 2)}
        for a in self._chi.values():
            a.flags.writeable = False

    # -- index helpers ---------------------------------------------------
    def shifted_index(self, j: int) -> int:
        return j - self.j_min - 1

    def bank_index(self, jp: int) -> int:
        return jp + self.j_min + 1

    @property
    def coverage_radius(self) -> float:
        """Largest |xi| where the bank reproduces the identity exactly."""
        return 1.5 * 2.0 ** self.j_max

    def indices(self, mode: str = NONHOMOGENEOUS) -> List[int]:
        _check_mode(mode)
        return list(range(self.j_min, self.j_max + 1))

    # -- multipliers ------------------------------------------------------
    @property
    def psi_hat(self) -> np.ndarray:
        return self._chi[self.j_min + 1]

    def phi_hat(self, j: int) -> np.ndarray:
        if not self.j_min <= j <= self.j_max:
            raise FilterBankError(f"block index {j} outside {self.j_min}..{self.j_max}")
        return self._chi[j + 1] - self._chi[j]

    def chi_hat(self, j: int) -> np.ndarray:
        """Low-pass multiplier of S_j, clamped to the bank's range."""
        if j <= self.j_min:
            return np.zeros_like(self._chi[self.j_min])
        return self._chi[min(j, self.j_max + 1)]

    def block_multiplier(self, j: int, mode: str = NONHOMOGENEOUS) -> np.ndarray:
        _check_mode(mode)
        if mode == NONHOMOGENEOUS and j == self.j_min:
            return self.psi_hat
        return self.phi_hat(j)

    def block_support(self, j: int, mode: str = NONHOMOGENEOUS):
        """(inner, outer) radius of the block's spectral support."""
        if mode == NONHOMOGENEOUS and j == self.j_min:
            return 0.0, 2.0 ** (j + 1)
        return 0.75 * 2.0 ** j, 2.0 ** (j + 1)

    # -- operators ----------------------------------------------------------
    def _check_grid(self, u: Field):
        if u.grid != self.grid:
            raise GridError("field and filter bank live on different grids")

    def block(self, u: Field, j: int, mode: str = NONHOMOGENEOUS) -> Field:
        """Delta_j u (nonhomogeneous) or the ring block phi_j (homogeneous)."""
        self._check_grid(u)
        if not self.j_min <= j <= self.j_max:
            raise FilterBankError(f"block index {j} outside {self.j_min}..{self.j_max}")
        return _from_rspec(self.grid, u.rspec() * self.block_multiplier(j, mode))

    def blocks(self, u: Field, mode: str = NONHOMOGENEOUS) -> List[Field]:
        return [self.block(u, j, mode) for j in self.indices(mode)]

    def low_pass(self, u: Field, j: int) -> Field:
        """S_j u = sum of blocks below j (j_max+1 gives the full bank)."""
        self._check_grid(u)
        if j > self.j_max + 1:
            raise FilterBankError(f"low-pass index {j} above {self.j_max + 1}")
        return _from_rspec(self.grid, u.rspec() * self.chi_hat(j))

    def low_pass_clamped(self, u: Field, j: int) -> Field:
        """As :meth:`low_pass`, treating j > j_max+1 as the full bank."""
        self._check_grid(u)
        return _from_rspec(self.grid, u.rspec() * self.chi_hat(j))

    def reconstruct(self, u: Field, mode: str = NONHOMOGENEOUS) -> Field:
        """Sum of all blocks, evaluated block by block."""
        self._check_grid(u)
        spec = u.rspec()
        acc = np.zeros_like(spec)
        for j in self.indices(mode):
            acc = acc + spec * self.block_multiplier(j, mode)
        return _from_rspec(self.grid, acc)

    def leakage(self, u: Field) -> float:
        """Relative L2 size of the part of u the bank does not represent."""
        s = u.rspec()
        miss = 1.0 - self._chi[self.j_max + 1]
        num = _weighted_energy(self.grid, s * miss)
        den = _weighted_energy(self.grid, s)
        return float(np.sqrt(num / den)) if den > 0 else 0.0

    def max_partition_error(self) -> float:
        """Largest |psi + sum phi_j - 1| over lattice points within 3/4 * 2^j_max."""
        tot = self.psi_hat.copy()
        for j in range(self.j_min + 1, self.j_max + 1):
            tot = tot + self.phi_hat(j)
        sel = self.grid.rkmag <= 0.75 * 2.0 ** self.j_max
        return float(np.max(np.abs(tot[sel] - 1.0)))

    def describe(self) -> dict:
        return {"j_min": self.j_min, "j_max": self.j_max,
                "coverage_radius": self.coverage_radius}


def _weighted_energy(grid: Grid, spec: np.ndarray) -> float:
    # rfft half lattice: interior columns of the last axis count twice
    w = np.full(spec.shape[-1], 2.0)
    w[0] = 1.0
    if grid.N % 2 == 0:
        w[-1] = 1.0
    return float(np.sum(np.abs(spec) ** 2 * w))


def default_indices(grid: Grid):
    j_min = math.floor(math.log2(grid.k0) + 1e-12)
    j_max = math.floor(math.log2(3.0 * grid.nyquist / 8.0) + 1e-12)
    return j_min, j_max


def build_filter_bank(grid: Grid, j_min: int = None, j_max: int = None) -> DyadicFilterBank:
    """Build a bank; omitted indices default to the widest range the lattice hosts."""
    d_min, d_max = default_indices(grid)
    return DyadicFilterBank(grid, d_min if j_min is None else j_min,
                            d_max if j_max is None else j_max)


@lru_cache(maxsize=16)
def default_bank(grid: Grid) -> DyadicFilterBank:
    return build_filter_bank(grid)


def block(u: Field, j: int, mode: str = NONHOMOGENEOUS, bank: DyadicFilterBank = None) -> Field:
    return (bank or default_bank(u.grid)).block(u, j, mode)


def low_pass(u: Field, j: int, bank: DyadicFilterBank = None) -> Field:
    return (bank or default_bank(u.grid)).low_pass(u, j)


def reconstruct(u: Field, mode: str = NONHOMOGENEOUS, bank: DyadicFilterBank = None) -> Field:
    return (bank or default_bank(u.grid)).reconstruct(u, mode)
