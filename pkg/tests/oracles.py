"""Independent brute-force evaluations used to derive reference values.

Nothing here imports the package's spectral or norm code; these are slow,
direct implementations of the defining formulas.
"""
import math

import mpmath
import numpy as np


def direct_dft(values, L):
    """Coefficients c_k with u(x) = sum_k c_k exp(i 2 pi k.x / L), by explicit sums.

    ``values`` is a 2-D array sampled at x_i = -L/2 + i h.  Returns a dict
    keyed by integer wavevector for |k_i| <= N/2.
    """
    N = values.shape[0]
    x = -L / 2 + np.arange(N) * (L / N)
    out = {}
    ks = range(-N // 2 + 1, N // 2 + 1)
    for k1 in ks:
        e1 = np.exp(-2j * np.pi * k1 * x / L)
        row = e1 @ values
        for k2 in ks:
            e2 = np.exp(-2j * np.pi * k2 * x / L)
            out[(k1, k2)] = complex(row @ e2) / N ** 2
    return out


def smooth_step(t):
    """0 for t <= 0, 1 for t >= 1, exp(-1/t)-based transition, in mpmath."""
    t = mpmath.mpf(t)
    if t <= 0:
        return mpmath.mpf(0)
    if t >= 1:
        return mpmath.mpf(1)
    a = mpmath.exp(-1 / t)
    b = mpmath.exp(-1 / (1 - t))
    return a / (a + b)


def chi(t):
    """Low-pass profile: 1 on [0, 3/4], 0 on [1, inf)."""
    return 1 - smooth_step((mpmath.mpf(t) - mpmath.mpf(3) / 4) * 4)


def herz_norm_loops(values, L, alpha, p, q):
    """Herz norm by looping over points and assigning rings from the definition.

    Ring -1 is |x| < 1/2, ring k >= 0 is 2^(k-1) <= |x| < 2^k; points beyond
    the last full ring 2^kmax <= L/2 are counted in ring kmax.
    """
    N = values.shape[-1]
    h = L / N
    kmax = int(math.floor(math.log2(L / 2)))
    acc = {k: 0.0 for k in range(-1, kmax + 1)}
    sup = {k: 0.0 for k in range(-1, kmax + 1)}
    x = -L / 2 + np.arange(N) * h
    for i in range(N):
        for j in range(N):
            r = math.hypot(x[i], x[j])
            if r < 0.5:
                k = -1
            else:
                k = -1
                while k < kmax and not (2.0 ** (k - 1) <= r < 2.0 ** k):
                    k += 1
            val = abs(values[i, j])
            acc[k] += val ** p * h * h if math.isfinite(p) else 0.0
            sup[k] = max(sup[k], val)
    terms = []
    for k in range(-1, kmax + 1):
        ring = acc[k] ** (1.0 / p) if math.isfinite(p) else sup[k]
        terms.append(2.0 ** (alpha * k) * ring)
    terms = np.array(terms)
    if math.isinf(q):
        return float(terms.max())
    return float(np.sum(terms ** q) ** (1.0 / q))


def periodic_convolution(phi, u, h):
    """(phi * u)(x_i) = sum_j phi(x_i - x_j) u(x_j) h^2 with phi centred at the origin index."""
    N = phi.shape[0]
    c = N // 2
    out = np.zeros_like(u)
    idx = np.arange(N)
    for i in range(N):
        for j in range(N):
            di = (i - idx + c) % N
            dj = (j - idx + c) % N
            out[i, j] = np.sum(phi[np.ix_(di, dj)] * u) * h * h
    return out


def fd4_derivative(f, axis, h):
    """Fourth-order periodic central difference."""
    return (-np.roll(f, -2, axis) + 8 * np.roll(f, -1, axis)
            - 8 * np.roll(f, 1, axis) + np.roll(f, 2, axis)) / (12 * h)
