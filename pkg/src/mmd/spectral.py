"""Fourier machinery: centered DFT, aliasing/subsampling operators, type-1 NUFFT.

DFT convention: forward sum_l x[l] exp(-2*pi*i*xi*l/L) with no prefactor,
frequencies centered -L/2 .. L/2-1; the inverse carries 1/L.  With this pair
the downsampling identity F(D_N(x)) = (1/N) A_N(F(x)) holds in standard
(unshifted) frequency order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _gridding
from .errors import ValidationError

Array = np.ndarray

#: oversampled grid size = oversampling * out_len (never below this)
_MIN_GRID = 32


@dataclass(frozen=True)
class SpectrumL:
    """Complex Fourier coefficients indexed by centered frequencies."""

    coeffs: Array

    def __post_init__(self):
        arr = np.ascontiguousarray(self.coeffs, dtype=np.complex128)
        if arr.ndim != 1 or arr.size < 2:
            raise ValidationError("spectrum needs at least 2 coefficients")
        arr.flags.writeable = False
        object.__setattr__(self, "coeffs", arr)

    @property
    def L(self) -> int:
        return self.coeffs.size

    def frequencies(self) -> Array:
        n = self.L
        return np.arange(-(n // 2), n - n // 2)

    def to_standard_order(self) -> Array:
        """Coefficients reordered to the plain FFT layout 0, 1, ..., -1."""
        return np.fft.ifftshift(self.coeffs)

    @classmethod
    def from_standard_order(cls, arr: Array) -> "SpectrumL":
        return cls(np.fft.fftshift(np.asarray(arr, dtype=np.complex128)))


def dft(x: Array) -> SpectrumL:
    """Forward transform with centered frequency order."""
    x = np.asarray(x)
    if x.ndim != 1 or x.size < 2:
        raise ValidationError("dft input must be a 1-d array of length >= 2")
    return SpectrumL(np.fft.fftshift(np.fft.fft(x)))


def idft(spec: SpectrumL) -> Array:
    """Inverse transform (carries the 1/L factor); returns a complex array."""
    return np.fft.ifft(np.fft.ifftshift(spec.coeffs))


def _check_divisor(L: int, N: int) -> None:
    if N < 1 or L % N != 0:
        raise ValidationError(f"factor {N} does not divide length {L}")


def downsample(x: Array, N: int) -> Array:
    """Keep every N-th entry: y[n] = x[n*N]."""
    x = np.asarray(x)
    _check_divisor(x.size, N)
    return x[::N].copy()


def alias(x: Array, N: int) -> Array:
    """Fold an array onto length L/N: y[n] = sum_j x[n + j*L/N]."""
    x = np.asarray(x)
    _check_divisor(x.size, N)
    return x.reshape(N, x.size // N).sum(axis=0)


def scale_subsample_T(g: SpectrumL, N: int, enforce_zero_mean: bool = False) -> SpectrumL:
    """Frequency-domain scaling: out(xi) = g(N*xi) on the centered L/N range."""
    _check_divisor(g.L, N)
    out_len = g.L // N
    xi = np.arange(-(out_len // 2), out_len - out_len // 2)
    mid = g.L // 2
    out = g.coeffs[mid + N * xi].copy()
    if enforce_zero_mean:
        out[out_len // 2] = 0.0
    return SpectrumL(out)


def kernel_width_for(tolerance: float, oversampling: float = 2.0) -> int:
    """Spreading half-width needed for a target relative accuracy.

    Truncation and aliasing errors balance at exp(-pi*w*sqrt(1 - 1/sigma));
    two extra taps of safety margin.
    """
    rate = np.pi * np.sqrt(1.0 - 1.0 / oversampling)
    return max(3, int(np.ceil(-np.log(tolerance) / rate)) + 2)


@dataclass(frozen=True)
class NufftPlan:
    """Precomputed geometry for type-1 transforms off one set of points.

    Immutable and shareable between threads; each execution allocates its own
    scratch grid.
    """

    points: Array
    oversampling: float = 2.0
    kernel_width: Optional[int] = None
    tolerance: float = 1e-9

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=np.float64)
        if pts.ndim != 1 or pts.size == 0:
            raise ValidationError("plan needs a 1-d nonempty point set")
        if np.any(pts < 0.0) or np.any(pts >= 1.0) or not np.all(np.isfinite(pts)):
            raise ValidationError("points must lie in [0, 1)")
        if not (1e-14 <= self.tolerance <= 1e-4):
            raise ValidationError("tolerance must lie in [1e-14, 1e-4]")
        if self.oversampling < 2.0:
            raise ValidationError("oversampling must be >= 2")
        needed = kernel_width_for(self.tolerance, self.oversampling)
        if self.kernel_width is None:
            object.__setattr__(self, "kernel_width", needed)
        elif self.kernel_width < needed:
            raise ValidationError(
                f"kernel width {self.kernel_width} cannot reach tolerance "
                f"{self.tolerance:g} (needs {needed})"
            )
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "oversampling", float(self.oversampling))
        object.__setattr__(self, "tolerance", float(self.tolerance))


def nufft_type1(plan: NufftPlan, values: Array, out_len: int) -> SpectrumL:
    """Type-1 transform: h(xi) = sum_l values[l] exp(-2*pi*i*xi*points[l]).

    Kernel gridding: spread with a truncated Gaussian onto an oversampled
    uniform grid, FFT, then deconvolve by the kernel transform.  Relative
    l2 error against the direct sum is bounded by plan.tolerance.
    """
    values = np.asarray(values)
    if values.shape != plan.points.shape:
        raise ValidationError("values and plan points must have equal length")
    if out_len < 2:
        raise ValidationError("out_len must be >= 2")
    w = plan.kernel_width
    G = int(np.ceil(plan.oversampling * out_len / 2.0)) * 2
    G = max(G, _MIN_GRID, 4 * w)
    tau_g = w / (4.0 * np.pi * np.sqrt(1.0 - 1.0 / plan.oversampling))
    if np.iscomplexobj(values):
        gr, gi = _gridding.spread_complex(
            plan.points, np.ascontiguousarray(values.real),
            np.ascontiguousarray(values.imag), G, w, tau_g)
        grid = gr + 1j * gi
    else:
        grid = _gridding.spread_real(
            plan.points, np.ascontiguousarray(values, dtype=np.float64), G, w, tau_g)
    spec = np.fft.fft(grid)
    ks = np.arange(-(out_len // 2), out_len - out_len // 2)
    picked = spec[np.mod(ks, G)]
    tau = tau_g / (G * G)
    kernel_hat = 2.0 * np.sqrt(np.pi * tau) * np.exp(-4.0 * np.pi**2 * tau * ks.astype(float) ** 2)
    return SpectrumL(picked / (G * kernel_hat))


def nufft_type1_direct(points: Array, values: Array, out_len: int) -> SpectrumL:
    """O(L * out_len) direct summation; the accuracy oracle for nufft_type1."""
    points = np.asarray(points, dtype=np.float64)
    values = np.asarray(values)
    ks = np.arange(-(out_len // 2), out_len - out_len // 2)
    out = np.empty(ks.size, dtype=np.complex128)
    # chunk the frequency loop so the Vandermonde block stays cache-sized
    step = max(1, int(4e6 // max(points.size, 1)))
    for i in range(0, ks.size, step):
        kk = ks[i : i + step]
        out[i : i + step] = np.exp(-2j * np.pi * np.outer(kk, points)) @ values
    return SpectrumL(out)
