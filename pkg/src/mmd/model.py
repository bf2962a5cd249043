"""Domain types for signals, phases, shapes, and multiresolution expansions.

Conventions used throughout the package:

* signals live on the uniform grid t_l = l/L of [0, 1);
* a phase track holds p(t_l) = N * phi(t_l) for a strictly increasing phi;
* a shape is a 2*pi-periodic waveform tabulated at 2*pi*k/L_s, zero-mean,
  and (when flagged) unit-norm in the discrete L2([0, 2*pi]) sense;
* discrete norms: ||shape|| = sqrt(2*pi/L_s) * ||values||_2 and
  ||signal|| = ||samples||_2 / sqrt(L), so relative residuals do not depend
  on the grid size.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .errors import ValidationError

MIN_SIGNAL_LEN = 16
MIN_PHASE_SPAN = 2.0  # fewer than two full cycles makes decomposition meaningless
MEAN_TOL = 1e-10
NORM_TOL = 1e-10

Array = np.ndarray


def _frozen_array(values, dtype=np.float64) -> Array:
    arr = np.ascontiguousarray(values, dtype=dtype)
    arr.flags.writeable = False
    return arr


def signal_norm(samples: Array) -> float:
    """Grid-independent discrete L2 norm of a sampled signal on [0, 1)."""
    samples = np.asarray(samples)
    return float(np.linalg.norm(samples) / np.sqrt(samples.size))


def shape_norm(values: Array) -> float:
    """Discrete L2([0, 2*pi]) norm of a tabulated shape."""
    values = np.asarray(values)
    return float(np.sqrt(2.0 * np.pi / values.size) * np.linalg.norm(values))


def periodic_interp(table: Array, positions: Array) -> Array:
    """Linearly interpolate a periodic table at fractional positions in cycles.

    ``positions`` are measured in periods (an argument of x means angle
    2*pi*x); they may be any real numbers and are wrapped into [0, 1).
    """
    table = np.asarray(table)
    n = table.size
    x = np.mod(positions, 1.0) * n
    i0 = x.astype(np.int64)  # x >= 0, truncation == floor
    frac = x - i0
    i0 = np.mod(i0, n)  # guard x == n after rounding
    i1 = i0 + 1
    i1[i1 == n] = 0
    return table[i0] * (1.0 - frac) + table[i1] * frac


@dataclass(frozen=True)
class UniformSignal:
    """Real samples on the uniform grid t_l = l/L of [0, 1)."""

    samples: Array

    def __post_init__(self):
        arr = _frozen_array(self.samples)
        if arr.ndim != 1 or arr.size < MIN_SIGNAL_LEN:
            raise ValidationError(f"signal needs >= {MIN_SIGNAL_LEN} samples, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("signal samples must be finite")
        object.__setattr__(self, "samples", arr)

    @property
    def L(self) -> int:
        return self.samples.size

    def norm(self) -> float:
        return signal_norm(self.samples)


@dataclass(frozen=True)
class PhaseTrack:
    """Samples of an instantaneous phase p(t) = N*phi(t), strictly increasing.

    ``fundamental`` is N, the nominal cycle count over [0, 1]; phi is
    recovered as values/fundamental wherever the scale modulations
    cos(2*pi*n*phi) are needed.
    """

    values: Array
    fundamental: float

    def __post_init__(self):
        arr = _frozen_array(self.values)
        if arr.ndim != 1 or arr.size < MIN_SIGNAL_LEN:
            raise ValidationError("phase track too short")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("phase values must be finite")
        if not np.all(np.diff(arr) > 0):
            raise ValidationError("phase must be strictly increasing")
        if arr[-1] - arr[0] < MIN_PHASE_SPAN:
            raise ValidationError(
                f"phase spans {arr[-1] - arr[0]:.3g} cycles; need at least {MIN_PHASE_SPAN}"
            )
        if not (float(self.fundamental) > 0):
            raise ValidationError("fundamental must be positive")
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "fundamental", float(self.fundamental))

    @property
    def L(self) -> int:
        return self.values.size

    def phi(self) -> Array:
        return self.values / self.fundamental

    def slope_within(self, bound: float) -> bool:
        """Diagnostic: check 1/bound <= |phi'| <= bound on the sampled grid.

        Optional well-posedness probe; nothing in the pipeline enforces it.
        """
        if bound <= 0:
            raise ValidationError("bound must be positive")
        L = self.L
        slopes = np.diff(self.phi()) * L
        return bool(np.all(slopes >= 1.0 / bound) and np.all(slopes <= bound))


@dataclass(frozen=True)
class ShapeTable:
    """A 2*pi-periodic waveform sampled at s(2*pi*k/L_s), k = 0..L_s-1.

    Tables are zero-mean by construction; set ``normalized`` if the table is
    supposed to be unit-norm, which is then validated.
    """

    values: Array
    normalized: bool = False

    def __post_init__(self):
        arr = _frozen_array(self.values)
        if arr.ndim != 1 or arr.size < 4:
            raise ValidationError("shape table needs at least 4 points")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("shape values must be finite")
        scale = float(np.max(np.abs(arr))) if arr.size else 0.0
        if abs(float(arr.sum())) > MEAN_TOL * max(scale, 1e-300) * arr.size:
            raise ValidationError("shape table is not zero-mean")
        if self.normalized and abs(shape_norm(arr) - 1.0) > NORM_TOL:
            raise ValidationError("shape flagged normalized but norm != 1")
        object.__setattr__(self, "values", arr)

    @property
    def size(self) -> int:
        return self.values.size

    def norm(self) -> float:
        return shape_norm(self.values)

    def eval_at(self, positions: Array) -> Array:
        """Evaluate the shape at positions given in cycles (periodic linear interp)."""
        return periodic_interp(self.values, positions)

    @classmethod
    def zeros(cls, size: int) -> "ShapeTable":
        return cls(np.zeros(size))


@dataclass(frozen=True)
class ShapeSpectrum:
    """Centered Fourier coefficients of a shape, frequencies -L_s/2 .. L_s/2-1.

    The zero-frequency entry must vanish (shapes are zero-mean).
    """

    coeffs: Array

    def __post_init__(self):
        arr = _frozen_array(self.coeffs, dtype=np.complex128)
        if arr.ndim != 1 or arr.size < 4:
            raise ValidationError("spectrum needs at least 4 coefficients")
        scale = float(np.max(np.abs(arr))) if arr.size else 0.0
        if abs(arr[arr.size // 2]) > 1e-10 * max(scale, 1e-300):
            raise ValidationError("shape spectrum must have zero mean (coeff at 0 frequency)")
        object.__setattr__(self, "coeffs", arr)

    @property
    def size(self) -> int:
        return self.coeffs.size

    def frequencies(self) -> Array:
        n = self.size
        return np.arange(-(n // 2), n - n // 2)

    def is_real_symmetric(self, tol: float = 1e-10) -> bool:
        """Whether the coefficients are conjugate-symmetric (a real shape)."""
        mid = self.size // 2
        scale = max(float(np.max(np.abs(self.coeffs))), 1e-300)
        pos = self.coeffs[mid + 1 :]
        neg = self.coeffs[mid - 1 :: -1][: pos.size]
        return bool(np.all(np.abs(pos - np.conj(neg)) <= tol * scale))

    def table(self) -> ShapeTable:
        """Inverse transform to an L_s-point table (real part)."""
        n = self.size
        vals = np.fft.ifft(np.fft.ifftshift(self.coeffs)) * n
        return ShapeTable(vals.real - vals.real.mean())


def table_spectrum(table: ShapeTable) -> ShapeSpectrum:
    """Forward transform of a table to centered coefficients with the 1/L_s average."""
    coeffs = np.fft.fftshift(np.fft.fft(table.values)) / table.size
    coeffs[table.size // 2] = 0.0
    return ShapeSpectrum(coeffs)


class StopReason(str, enum.Enum):
    TOLERANCE_MET = "tolerance_met"
    STAGNATED = "stagnated"
    MAX_ITERATIONS = "max_iterations"


@dataclass(frozen=True)
class ConvergenceTrace:
    """Relative residual history of a recursive run.

    ``relative_residuals`` starts at the initial value 1.0 (= ||r^(0)||/||f||)
    followed by one entry per outer iteration; ``eta`` holds the successive
    log-decrement differences eta_j = mu_j - mu_{j+1} with
    mu_j = log|eps^(j-1) - eps^(j)|.
    """

    relative_residuals: tuple
    eta: tuple
    stop_reason: StopReason

    def __post_init__(self):
        object.__setattr__(self, "relative_residuals", tuple(float(v) for v in self.relative_residuals))
        object.__setattr__(self, "eta", tuple(float(v) for v in self.eta))


@dataclass(frozen=True)
class MimfExpansion:
    """Per-component multiresolution expansion: coefficients and unit shapes.

    Coefficients are nonnegative (signs are absorbed into the shapes during
    normalization); every shape stored for a nonzero coefficient is unit-norm.
    """

    scale_indices: tuple
    a: Mapping[int, float]
    b: Mapping[int, float]
    s_c: Mapping[int, ShapeTable]
    s_s: Mapping[int, ShapeTable]
    fundamental: float

    def __post_init__(self):
        idx = tuple(sorted(int(n) for n in self.scale_indices))
        object.__setattr__(self, "scale_indices", idx)
        for name, coeffs in (("a", self.a), ("b", self.b)):
            for n, v in coeffs.items():
                if n not in idx:
                    raise ValidationError(f"coefficient {name}[{n}] outside the scale set")
                if v < 0:
                    raise ValidationError(f"coefficient {name}[{n}] must be nonnegative")
        for coeffs, shapes in ((self.a, self.s_c), (self.b, self.s_s)):
            for n, tab in shapes.items():
                if coeffs.get(n, 0.0) > 0 and abs(tab.norm() - 1.0) > 1e-8:
                    raise ValidationError(f"shape at scale {n} with nonzero coefficient is not unit-norm")

    @property
    def max_scale(self) -> int:
        return max(abs(n) for n in self.scale_indices) if self.scale_indices else 0

    def product(self, n: int, parity: str) -> Array:
        """The signed product coefficient * shape at one scale, as raw table values."""
        coeffs, shapes = (self.a, self.s_c) if parity == "cos" else (self.b, self.s_s)
        if n not in shapes or coeffs.get(n, 0.0) == 0.0:
            any_shape = {**self.s_c, **self.s_s}
            if not any_shape:
                raise ValidationError("expansion holds no shape tables")
            return np.zeros(next(iter(any_shape.values())).size)
        return coeffs[n] * shapes[n].values

    def tail_bounds(self, m0: int) -> tuple:
        """Diagnostic sums (total, outside-|m0| band) for the a and b coefficients."""
        ta = sum(self.a.values())
        tb = sum(self.b.values())
        ea = sum(v for n, v in self.a.items() if abs(n) > m0)
        eb = sum(v for n, v in self.b.items() if abs(n) > m0)
        return (ta, ea), (tb, eb)


@dataclass(frozen=True)
class DecompositionResult:
    """Output of a recursive decomposition run.

    ``components[k]`` is the reconstructed signal of expansion k; the residual
    is defined by subtraction, so sum(components) + residual == input exactly.
    Components are ordered by ascending effective fundamental.
    """

    expansions: tuple
    components: tuple
    residual: UniformSignal
    trace: ConvergenceTrace
    raw_products: Optional[tuple] = field(default=None, repr=False, compare=False)


def synthesize_mimf(expansion: MimfExpansion, phase: PhaseTrack, L: Optional[int] = None) -> UniformSignal:
    """Evaluate a multiresolution expansion along a phase track.

    Returns sum_n a_n cos(2*pi*n*phi) s_cn(2*pi*N*phi)
          + sum_n b_n sin(2*pi*n*phi) s_sn(2*pi*N*phi)
    with phi = phase.values / phase.fundamental, shapes evaluated by periodic
    linear interpolation at the raw fold mod(p, 1).
    """
    if L is None:
        L = phase.L
    if phase.L != L:
        raise ValidationError(f"phase length {phase.L} != requested length {L}")
    fold = np.mod(phase.values, 1.0)
    phi = phase.phi()
    out = np.zeros(L)
    for n in expansion.scale_indices:
        a = expansion.a.get(n, 0.0)
        if a > 0 and n in expansion.s_c:
            out += a * np.cos(2.0 * np.pi * n * phi) * expansion.s_c[n].eval_at(fold)
        b = expansion.b.get(n, 0.0)
        if b > 0 and n in expansion.s_s:
            out += b * np.sin(2.0 * np.pi * n * phi) * expansion.s_s[n].eval_at(fold)
    return UniformSignal(out)


def _restrict(expansion: MimfExpansion, band: int) -> MimfExpansion:
    keep = tuple(n for n in expansion.scale_indices if abs(n) <= band)
    pick = lambda m: {n: v for n, v in m.items() if abs(n) <= band}
    return MimfExpansion(keep, pick(expansion.a), pick(expansion.b),
                         pick(expansion.s_c), pick(expansion.s_s), expansion.fundamental)


def banded_approximation(
    source: Union[MimfExpansion, DecompositionResult],
    phase: PhaseTrack,
    band: int,
    component: Optional[int] = None,
) -> UniformSignal:
    """The band-limited approximation: synthesis restricted to |n| <= band."""
    if isinstance(source, DecompositionResult):
        if component is None:
            if len(source.expansions) != 1:
                raise ValidationError("give a component index for multi-component results")
            component = 0
        expansion = source.expansions[component]
    else:
        expansion = source
    if band < 0:
        raise ValidationError("band must be nonnegative")
    if expansion.scale_indices and band > expansion.max_scale:
        raise ValidationError(
            f"band {band} exceeds stored scale indices (max |n| = {expansion.max_scale})"
        )
    return synthesize_mimf(_restrict(expansion, band), phase)


def residual_operator(f: UniformSignal, approx: UniformSignal) -> UniformSignal:
    """Pointwise difference f - approx."""
    if f.L != approx.L:
        raise ValidationError(f"length mismatch: {f.L} vs {approx.L}")
    return UniformSignal(f.samples - approx.samples)


def normalize_shape(raw: Union[ShapeTable, Array], amplitude_floor: float = 0.0):
    """Split a raw (amplitude-carrying) table into (coefficient, unit shape).

    The coefficient is the discrete L2([0, 2*pi]) norm; below
    ``amplitude_floor`` the pair degenerates to (0, zero table) so that exact
    arithmetic zero-coefficient branches stay meaningful in floating point.
    """
    values = raw.values if isinstance(raw, ShapeTable) else np.asarray(raw, dtype=float)
    coefficient = shape_norm(values)
    if coefficient <= max(amplitude_floor, 0.0) or coefficient == 0.0:
        return 0.0, ShapeTable.zeros(values.size)
    return coefficient, ShapeTable(values / coefficient, normalized=True)
