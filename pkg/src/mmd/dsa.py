"""Single-pass spectral extraction of expansion coefficients and shapes.

One extraction at scale n and parity cos/sin:

1. modulate the signal with trig(2*pi*n*phi);
2. transform off the warped, normalized sample positions with the type-1
   NUFFT, evaluated directly at the folded target frequencies N_eff * k
   for k = -L_s/2 .. L_s/2-1 (the spectral subsampling step);
3. zero the k = 0 bin (shapes are zero-mean) and every row whose source
   frequency |N_eff * k| exceeds the signal Nyquist L/2 (those rows do not
   exist in a length-L spectrum; keeping them aliases);
4. inverse transform to an L_s-point raw table and split it into a
   nonnegative coefficient and a unit shape.

The per-scale product estimates carry half of each +-n pair, so summing the
synthesized terms over a symmetric scale set reproduces the signal content
exactly; the recursive driver in `rdsa` relies on this closure.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from .errors import SolverError, ValidationError
from .model import PhaseTrack, ShapeTable, UniformSignal, normalize_shape, periodic_interp, signal_norm
from .spectral import NufftPlan, nufft_type1

Array = np.ndarray

#: coefficients below EPS_AMP * (signal norm) collapse to the zero branch
EPS_AMP = 1e-8

_THREAD_ENV = "MMD_THREADS"


def worker_count() -> int:
    """Worker cap from the MMD_THREADS environment variable (default 1)."""
    raw = os.environ.get(_THREAD_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def effective_fundamental(phase: PhaseTrack) -> int:
    """Integer cycle count of a track: round(p(1) - p(0)) with the final
    sample spacing extrapolating the half-open grid to t = 1."""
    v = phase.values
    span = float(v[-1] - v[0] + (v[-1] - v[-2]))
    n_eff = int(round(span))
    if n_eff < 2:
        raise SolverError(f"effective fundamental {n_eff} < 2 (span {span:.3g})")
    return n_eff


def phase_span(phase: PhaseTrack) -> float:
    """Extrapolated total cycle span p(1) - p(0) (not rounded)."""
    v = phase.values
    return float(v[-1] - v[0] + (v[-1] - v[-2]))


@dataclass(frozen=True)
class DsaRequest:
    """Inputs of one extraction pass over a scale-index set."""

    signal: UniformSignal
    phase: PhaseTrack
    fundamental: Optional[float] = None
    shape_len: int = 2000
    scale_set: Tuple[int, ...] = (0,)
    nufft_tolerance: float = 1e-9

    def __post_init__(self):
        if self.signal.L != self.phase.L:
            raise ValidationError(f"signal length {self.signal.L} != phase length {self.phase.L}")
        if self.shape_len < 4 or self.shape_len % 2 != 0:
            raise ValidationError("shape_len must be an even count >= 4")
        idx = tuple(sorted(set(int(n) for n in self.scale_set)))
        object.__setattr__(self, "scale_set", idx)
        if self.fundamental is None:
            object.__setattr__(self, "fundamental", self.phase.fundamental)
        n_eff = effective_fundamental(self.phase)
        if idx and 2 * max(abs(n) for n in idx) >= n_eff:
            raise ValidationError(
                f"max scale index {max(abs(n) for n in idx)} must stay below N_eff/2 = {n_eff / 2:g}"
            )


@dataclass(frozen=True)
class DsaOutput:
    """Coefficients, unit shapes, and the two synthesized partial sums."""

    a: Dict[int, float]
    b: Dict[int, float]
    s_c: Dict[int, ShapeTable]
    s_s: Dict[int, ShapeTable]
    f_c: UniformSignal
    f_s: UniformSignal
    raw_cos: Dict[int, Array] = field(repr=False, default_factory=dict)
    raw_sin: Dict[int, Array] = field(repr=False, default_factory=dict)


class _WarpContext:
    """Shared per-track geometry: normalized warp, folded NUFFT points, guard."""

    def __init__(self, phase: PhaseTrack, fundamental: float, shape_len: int, tolerance: float):
        self.L = phase.L
        self.span = phase_span(phase)
        self.n_eff = effective_fundamental(phase)
        self.shape_len = shape_len
        u = (phase.values - phase.values[0]) / self.span
        self.fold = np.mod(self.n_eff * u, 1.0)
        self.fold[self.fold >= 1.0] = 0.0  # rounding guard at the right edge
        self.plan = NufftPlan(self.fold, tolerance=tolerance)
        self.phi = phase.values / fundamental
        ks = np.arange(-(shape_len // 2), shape_len - shape_len // 2)
        self.keep = np.abs(ks * self.n_eff) <= self.L // 2

    def modulation(self, n: int, parity: str) -> Array:
        if parity == "cos":
            return np.cos((2.0 * np.pi * n) * self.phi)
        return np.sin((2.0 * np.pi * n) * self.phi)

    def raw_table(self, samples: Array, n: int, parity: str) -> Array:
        """One modulate -> transform -> subsample -> invert pass."""
        values = self.modulation(n, parity) * samples
        spec = nufft_type1(self.plan, values, self.shape_len).coeffs / self.L
        spec = np.where(self.keep, spec, 0.0)
        spec[self.shape_len // 2] = 0.0
        table = np.fft.ifft(np.fft.ifftshift(spec)) * self.shape_len
        return np.ascontiguousarray(table.real)


def _parity_tasks(scale_set):
    for n in scale_set:
        yield n, "cos"
        if n != 0:  # sin(0) == 0 identically; nothing to extract
            yield n, "sin"


def extract_single(req: DsaRequest, n: int, parity: str) -> Tuple[float, ShapeTable]:
    """Extract one (scale, parity) pair: returns (coefficient, unit shape)."""
    if parity not in ("cos", "sin"):
        raise ValidationError(f"parity must be 'cos' or 'sin', got {parity!r}")
    if n not in req.scale_set:
        req = DsaRequest(req.signal, req.phase, req.fundamental, req.shape_len,
                         req.scale_set + (n,), req.nufft_tolerance)
    if parity == "sin" and n == 0:
        return 0.0, ShapeTable.zeros(req.shape_len)
    ctx = _WarpContext(req.phase, req.fundamental, req.shape_len, req.nufft_tolerance)
    raw = ctx.raw_table(req.signal.samples, n, parity)
    return normalize_shape(raw, amplitude_floor=EPS_AMP * req.signal.norm())


def run_dsa(req: DsaRequest) -> DsaOutput:
    """Extract every scale in the request and form the two partial sums.

    The scale extractions are independent reads of the same immutable signal;
    with MMD_THREADS > 1 they run on a thread pool (the spreading kernels
    release the GIL).  Results are reduced in a fixed order either way.
    """
    ctx = _WarpContext(req.phase, req.fundamental, req.shape_len, req.nufft_tolerance)
    samples = req.signal.samples
    floor = EPS_AMP * req.signal.norm()
    tasks = list(_parity_tasks(req.scale_set))

    workers = min(worker_count(), len(tasks)) if tasks else 1
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            raw_tables = list(pool.map(lambda t: ctx.raw_table(samples, *t), tasks))
    else:
        raw_tables = [ctx.raw_table(samples, n, parity) for n, parity in tasks]

    zero = ShapeTable.zeros(req.shape_len)
    a = {n: 0.0 for n in req.scale_set}
    b = {n: 0.0 for n in req.scale_set}
    s_c = {n: zero for n in req.scale_set}
    s_s = {n: zero for n in req.scale_set}
    raw_cos = {n: np.zeros(req.shape_len) for n in req.scale_set}
    raw_sin = {n: np.zeros(req.shape_len) for n in req.scale_set}
    f_c = np.zeros(ctx.L)
    f_s = np.zeros(ctx.L)
    for (n, parity), raw in zip(tasks, raw_tables):
        coeff, unit = normalize_shape(raw, amplitude_floor=floor)
        if coeff == 0.0:
            continue  # below the amplitude floor: the whole pair stays zero
        if parity == "cos":
            a[n], s_c[n], raw_cos[n] = coeff, unit, raw
            f_c += ctx.modulation(n, "cos") * periodic_interp(raw, ctx.fold)
        else:
            b[n], s_s[n], raw_sin[n] = coeff, unit, raw
            f_s += ctx.modulation(n, "sin") * periodic_interp(raw, ctx.fold)
    return DsaOutput(a, b, s_c, s_s, UniformSignal(f_c), UniformSignal(f_s),
                     raw_cos=raw_cos, raw_sin=raw_sin)
