"""Synthetic test-signal generators with exact ground truth.

Every generator returns the mixture together with its true components,
phases, and per-component expansion products, so tests can measure true
errors rather than residuals only.

Product convention: an amplitude alpha(phi) = c0 + sum_q A_q cos(2*pi*q*phi)
+ B_q sin(2*pi*q*phi) multiplying a shape s splits symmetrically over the
+-q scale pairs — cos products A_q/2 at both +q and -q, sin products +B_q/2
at +q and -B_q/2 at -q — which is the combination the extractors identify.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from .errors import ValidationError
from .model import PhaseTrack, ShapeTable, UniformSignal, shape_norm

Array = np.ndarray

#: canonical piecewise-linear knot sets for the two-component benchmark
#: signal: asymmetric single-spike profiles, fixed once and for all so the
#: convergence-trend behavior of the benchmark is reproducible
EX2_S1_KNOTS = (
    (0.06, -0.39), (0.14, -0.61), (0.18, 1.36), (0.34, -0.87), (0.82, -0.87),
)
EX2_S2_KNOTS = (
    (0.12, -0.86), (0.20, 0.51), (0.70, 1.19), (0.88, 0.46), (0.93, 1.64),
)

#: canonical heartbeat-like lobes (center, height, width), one trough-peak-trough triple each
ECG_LOBES_1 = ((0.4, -0.6, 0.03), (0.5, 2.5, 0.015), (0.6, -0.9, 0.03))
ECG_LOBES_2 = ((0.35, -0.8, 0.04), (0.5, 2.2, 0.02), (0.62, -0.5, 0.035))

EX3_N1 = 150
EX3_N2 = 220
EX3_MIN_LEN = 2**14


@dataclass(frozen=True)
class ShapeSpec:
    """Recipe for one canonical waveform.

    kind: "piecewise_linear" (knots, or seeded random knots),
    "ecg_like" (lobes), or "harmonic" (list of (n, cos_amp, sin_amp)).
    """

    kind: str
    knots: Optional[Tuple[Tuple[float, float], ...]] = None
    lobes: Optional[Tuple[Tuple[float, float, float], ...]] = None
    harmonics: Optional[Tuple[Tuple[int, float, float], ...]] = None
    seed: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ("piecewise_linear", "ecg_like", "harmonic"):
            raise ValidationError(f"unknown shape kind {self.kind!r}")


def _normalize_table(values: Array) -> ShapeTable:
    values = values - values.mean()
    nrm = shape_norm(values)
    if nrm <= 1e-14 * max(1.0, float(np.max(np.abs(values))) if values.size else 1.0):
        raise ValidationError("degenerate shape spec (constant function)")
    return ShapeTable(values / nrm, normalized=True)


def _pwl_table(knots, shape_len: int) -> Array:
    pts = sorted((float(p) % 1.0, float(v)) for p, v in knots)
    if len(pts) < 2:
        raise ValidationError("piecewise-linear shape needs at least 2 knots")
    xs = np.array([p for p, _ in pts] + [pts[0][0] + 1.0])
    if np.any(np.diff(xs) <= 0):
        raise ValidationError("knot positions must be distinct")
    ys = np.array([v for _, v in pts] + [pts[0][1]])
    theta = np.arange(shape_len) / shape_len
    # shift left of the first knot wraps around the period
    theta_u = np.where(theta < xs[0], theta + 1.0, theta)
    return np.interp(theta_u, xs, ys)


def _ecg_table(lobes, shape_len: int) -> Array:
    theta = np.arange(shape_len) / shape_len
    out = np.zeros(shape_len)
    for center, height, width in lobes:
        d = np.abs(theta - float(center) % 1.0)
        d = np.minimum(d, 1.0 - d)  # circular distance
        out += height * np.exp(-0.5 * (d / width) ** 2)
    return out


def _harmonic_table(harmonics, shape_len: int) -> Array:
    active = [abs(int(n)) for n, a, b in harmonics if (a != 0 or b != 0) and n != 0]
    if not active:
        raise ValidationError("harmonic shape needs at least one nonzero harmonic")
    if math.gcd(*active) != 1:
        raise ValidationError(
            f"nonzero harmonics {sorted(set(active))} share a common divisor; "
            "the waveform period would divide 2*pi"
        )
    theta = 2.0 * np.pi * np.arange(shape_len) / shape_len
    out = np.zeros(shape_len)
    for n, a, b in harmonics:
        if n == 0:
            continue
        out += a * np.cos(n * theta) + b * np.sin(n * theta)
    return out


def gen_shape(spec: ShapeSpec, shape_len: int = 2000) -> ShapeTable:
    """Build a zero-mean, unit-norm shape table from a spec."""
    if shape_len < 8:
        raise ValidationError("shape_len too small")
    if spec.kind == "piecewise_linear":
        knots = spec.knots
        if knots is None:
            if spec.seed is None:
                raise ValidationError("piecewise_linear needs knots or a seed")
            rng = np.random.default_rng(spec.seed)
            n_knots = int(rng.integers(5, 9))
            pos = np.sort(rng.uniform(0.0, 1.0, n_knots))
            while np.min(np.diff(np.concatenate([pos, [pos[0] + 1.0]]))) < 0.03:
                pos = np.sort(rng.uniform(0.0, 1.0, n_knots))
            vals = rng.uniform(-1.2, 1.2, n_knots)
            vals[rng.integers(0, n_knots)] = rng.uniform(1.2, 1.8)
            knots = tuple(zip(pos, vals))
        table = _pwl_table(knots, shape_len)
    elif spec.kind == "ecg_like":
        table = _ecg_table(spec.lobes or ECG_LOBES_1, shape_len)
    else:
        if spec.harmonics is None:
            raise ValidationError("harmonic shape needs coefficients")
        table = _harmonic_table(spec.harmonics, shape_len)
    return _normalize_table(table)


@dataclass(frozen=True)
class MimfTruth:
    """Ground-truth expansion of one generated component.

    ``cos_products``/``sin_products`` map scale index to the signed scalar
    multiplying the unit shape; the true product table at scale n is
    coefficient * shape.values.  ``fold_offset`` is mod(p(t_0), 1), the
    rotation between this table gauge and the one an extractor working in
    normalized warped coordinates reports.
    """

    fundamental: float
    shape: ShapeTable
    cos_products: Dict[int, float]
    sin_products: Dict[int, float]
    fold_offset: float

    def product_table(self, n: int, parity: str, gauge: bool = False) -> Array:
        coeffs = self.cos_products if parity == "cos" else self.sin_products
        c = coeffs.get(n, 0.0)
        grid = np.arange(self.shape.size) / self.shape.size
        offset = self.fold_offset if gauge else 0.0
        return c * self.shape.eval_at(grid + offset)


@dataclass(frozen=True)
class GeneratedMixture:
    signal: UniformSignal
    phases: Tuple[PhaseTrack, ...]
    components: Tuple[UniformSignal, ...]
    truth: Tuple[MimfTruth, ...]


def _warp_sin(t: Array) -> Array:
    return t + 0.006 * np.sin(2.0 * np.pi * t)


def _warp_cos(t: Array) -> Array:
    return t + 0.006 * np.cos(2.0 * np.pi * t)


def gen_ex2(
    n_cycles: float,
    length: int,
    shape1: Optional[ShapeTable] = None,
    shape2: Optional[ShapeTable] = None,
    shape_len: int = 2000,
) -> GeneratedMixture:
    """Two constant-amplitude components on the standard sin/cos warps."""
    if n_cycles < 2:
        raise ValidationError("need at least 2 cycles")
    if shape1 is None:
        shape1 = gen_shape(ShapeSpec("piecewise_linear", knots=EX2_S1_KNOTS), shape_len)
    if shape2 is None:
        shape2 = gen_shape(ShapeSpec("piecewise_linear", knots=EX2_S2_KNOTS), shape_len)
    t = np.arange(length) / length
    phis = (_warp_sin(t), _warp_cos(t))
    phases = tuple(PhaseTrack(n_cycles * phi, n_cycles) for phi in phis)
    comps = []
    truths = []
    for phase, shape in zip(phases, (shape1, shape2)):
        comps.append(UniformSignal(shape.eval_at(phase.values)))
        truths.append(MimfTruth(
            fundamental=n_cycles, shape=shape,
            cos_products={0: 1.0}, sin_products={},
            fold_offset=float(np.mod(phase.values[0], 1.0))))
    signal = UniformSignal(comps[0].samples + comps[1].samples)
    return GeneratedMixture(signal, phases, tuple(comps), tuple(truths))


def _amplitude_products(c0: float, a1: float, b1: float, shape: ShapeTable, phase: PhaseTrack):
    cos_products = {0: c0, 1: a1 / 2.0, -1: a1 / 2.0}
    sin_products = {1: b1 / 2.0, -1: -b1 / 2.0}
    return MimfTruth(
        fundamental=phase.fundamental, shape=shape,
        cos_products=cos_products, sin_products=sin_products,
        fold_offset=float(np.mod(phase.values[0], 1.0)))


def gen_ex3(length: int, shape_len: int = 1000) -> GeneratedMixture:
    """Two amplitude-modulated heartbeat-like components (fundamentals 150, 220)."""
    if length < EX3_MIN_LEN:
        raise ValidationError(f"length must be >= {EX3_MIN_LEN}")
    s1 = gen_shape(ShapeSpec("ecg_like", lobes=ECG_LOBES_1), shape_len)
    s2 = gen_shape(ShapeSpec("ecg_like", lobes=ECG_LOBES_2), shape_len)
    t = np.arange(length) / length
    phi1, phi2 = _warp_sin(t), _warp_cos(t)
    p1 = PhaseTrack(EX3_N1 * phi1, EX3_N1)
    p2 = PhaseTrack(EX3_N2 * phi2, EX3_N2)
    alpha1 = 1.0 + 0.2 * np.cos(2.0 * np.pi * phi1) + 0.1 * np.sin(2.0 * np.pi * phi1)
    alpha2 = 1.0 + 0.1 * np.cos(2.0 * np.pi * phi2) + 0.2 * np.sin(2.0 * np.pi * phi2)
    f1 = UniformSignal(alpha1 * s1.eval_at(p1.values))
    f2 = UniformSignal(alpha2 * s2.eval_at(p2.values))
    truth = (
        _amplitude_products(1.0, 0.2, 0.1, s1, p1),
        _amplitude_products(1.0, 0.1, 0.2, s2, p2),
    )
    signal = UniformSignal(f1.samples + f2.samples)
    return GeneratedMixture(signal, (p1, p2), (f1, f2), truth)


def add_noise(f: UniformSignal, sigma: float, seed: int) -> UniformSignal:
    """Add seeded Gaussian noise of standard deviation sigma."""
    if sigma < 0:
        raise ValidationError("sigma must be nonnegative")
    if sigma == 0:
        return f
    rng = np.random.default_rng(seed)
    return UniformSignal(f.samples + rng.normal(0.0, sigma, f.L))
