"""Six-point-per-axis Lagrange interpolation on periodic grids (numba kernels)."""
from __future__ import annotations

import numpy as np
from numba import njit

PAD = 3


@njit(cache=True, fastmath=True, inline="always")
def _w6(f, w):
    # Lagrange weights for nodes -2..3 at offset f in [0, 1)
    p0 = f + 2.0
    p1 = f + 1.0
    p2 = f
    p3 = f - 1.0
    p4 = f - 2.0
    p5 = f - 3.0
    w[0] = p1 * p2 * p3 * p4 * p5 / -120.0
    w[1] = p0 * p2 * p3 * p4 * p5 / 24.0
    w[2] = p0 * p1 * p3 * p4 * p5 / -12.0
    w[3] = p0 * p1 * p2 * p4 * p5 / 12.0
    w[4] = p0 * p1 * p2 * p3 * p5 / -24.0
    w[5] = p0 * p1 * p2 * p3 * p4 / 120.0


@njit(cache=True, inline="always")
def _wrap(x, N):
    x = x - N * np.floor(x / N)
    i = int(x)
    if i >= N:
        i -= N
        x -= N
    return x, i


@njit(cache=True, fastmath=True)
def _lag6_2d(padded, cx, cy, N, out):
    C = padded.shape[0]
    M = cx.shape[0]
    wx = np.empty(6)
    wy = np.empty(6)
    for m in range(M):
        x, ix = _wrap(cx[m], N)
        y, iy = _wrap(cy[m], N)
        _w6(x - ix, wx)
        _w6(y - iy, wy)
        for c in range(C):
            s = 0.0
            for a in range(6):
                row = padded[c, ix + a + 1]
                t = (wy[0] * row[iy + 1] + wy[1] * row[iy + 2] + wy[2] * row[iy + 3]
                     + wy[3] * row[iy + 4] + wy[4] * row[iy + 5] + wy[5] * row[iy + 6])
                s += wx[a] * t
            out[c, m] = s


@njit(cache=True, fastmath=True)
def _lag6_3d(padded, cx, cy, cz, N, out):
    C = padded.shape[0]
    M = cx.shape[0]
    wx = np.empty(6)
    wy = np.empty(6)
    wz = np.empty(6)
    for m in range(M):
        x, ix = _wrap(cx[m], N)
        y, iy = _wrap(cy[m], N)
        z, iz = _wrap(cz[m], N)
        _w6(x - ix, wx)
        _w6(y - iy, wy)
        _w6(z - iz, wz)
        for c in range(C):
            s = 0.0
            for a in range(6):
                sa = 0.0
                for b in range(6):
                    row = padded[c, ix + a + 1, iy + b + 1]
                    t = (wz[0] * row[iz + 1] + wz[1] * row[iz + 2] + wz[2] * row[iz + 3]
                         + wz[3] * row[iz + 4] + wz[4] * row[iz + 5] + wz[5] * row[iz + 6])
                    sa += wy[b] * t
                s += wx[a] * sa
            out[c, m] = s


class PeriodicInterpolator:
    """Evaluate a sampled periodic array at arbitrary physical points.

    Args:
        values: array of shape (c, N, ..., N) sampled at x_i = -L/2 + i h.
        L: period.
    """

    def __init__(self, values: np.ndarray, L: float):
        values = np.asarray(values, dtype=np.float64)
        self.n = values.ndim - 1
        self.N = values.shape[1]
        self.L = float(L)
        self.h = self.L / self.N
        pad = ((0, 0),) + ((PAD, PAD),) * self.n
        self.padded = np.ascontiguousarray(np.pad(values, pad, mode="wrap"))
        self.components = values.shape[0]

    def __call__(self, points: np.ndarray) -> np.ndarray:
        """Points of shape (n, M) -> values of shape (c, M)."""
        idx = (np.asarray(points, dtype=np.float64) + 0.5 * self.L) / self.h
        out = np.empty((self.components, idx.shape[1]))
        if self.n == 2:
            _lag6_2d(self.padded, np.ascontiguousarray(idx[0]),
                     np.ascontiguousarray(idx[1]), self.N, out)
        else:
            _lag6_3d(self.padded, np.ascontiguousarray(idx[0]), np.ascontiguousarray(idx[1]),
                     np.ascontiguousarray(idx[2]), self.N, out)
        return out


def interpolate(values: np.ndarray, L: float, points: np.ndarray) -> np.ndarray:
    return PeriodicInterpolator(values, L)(points)
