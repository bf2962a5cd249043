"""Numba kernels for spreading nonuniform samples onto an oversampled grid.

Fast Gaussian gridding: the per-tap kernel value exp(-(frac - d)^2 / (4*tau))
is factored as exp(-frac^2/(4*tau)) * rho^d * exp(-d^2/(4*tau)) with
rho = exp(frac/(2*tau)), so the inner loop runs on multiplies only.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def spread_real(points, values, grid_len, width, tau_g):
    grid = np.zeros(grid_len)
    c1 = 1.0 / (4.0 * tau_g)
    c2 = 1.0 / (2.0 * tau_g)
    ntap = 2 * width
    taps = np.empty(ntap)
    for i in range(ntap):
        d = i - width + 1
        taps[i] = np.exp(-d * d * c1)
    for m in range(points.shape[0]):
        x = points[m] * grid_len
        i0 = int(x)
        frac = x - i0
        base = np.exp(-frac * frac * c1 + frac * c2 * (1 - width)) * values[m]
        rho = np.exp(frac * c2)
        j = i0 - width + 1
        if j < 0:
            j += grid_len
        for i in range(ntap):
            grid[j] += base * taps[i]
            base *= rho
            j += 1
            if j == grid_len:
                j = 0
    return grid


@njit(cache=True, nogil=True)
def spread_complex(points, values_re, values_im, grid_len, width, tau_g):
    grid_re = np.zeros(grid_len)
    grid_im = np.zeros(grid_len)
    c1 = 1.0 / (4.0 * tau_g)
    c2 = 1.0 / (2.0 * tau_g)
    ntap = 2 * width
    taps = np.empty(ntap)
    for i in range(ntap):
        d = i - width + 1
        taps[i] = np.exp(-d * d * c1)
    for m in range(points.shape[0]):
        x = points[m] * grid_len
        i0 = int(x)
        frac = x - i0
        scale = np.exp(-frac * frac * c1 + frac * c2 * (1 - width))
        rho = np.exp(frac * c2)
        br = scale * values_re[m]
        bi = scale * values_im[m]
        j = i0 - width + 1
        if j < 0:
            j += grid_len
        for i in range(ntap):
            grid_re[j] += br * taps[i]
            grid_im[j] += bi * taps[i]
            br *= rho
            bi *= rho
            j += 1
            if j == grid_len:
                j = 0
    return grid_re, grid_im
