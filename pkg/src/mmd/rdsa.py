"""Recursive residual-correction drivers over components and scale blocks.

``rdsa1`` sweeps a fixed scale set over all components per iteration,
accumulating raw (amplitude-carrying) shape tables additively and updating
the running residual; coefficients and unit shapes come from one final
normalization pass.  ``rdsa2`` wraps rdsa1 over scale-index blocks: block m
handles the ring {-(m+b)+1 .. -m} u {m .. m+b-1}, eliminating small |n|
content from the residual before larger scales are estimated.

Both stop on tolerance (||r||/c <= eps), stagnation (||r||/c >= e - eps,
where e tracks the previous value), or the iteration budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .dsa import DsaRequest, effective_fundamental, run_dsa
from .errors import SolverError, ValidationError
from .model import (
    ConvergenceTrace,
    DecompositionResult,
    MimfExpansion,
    PhaseTrack,
    ShapeTable,
    StopReason,
    UniformSignal,
    normalize_shape,
    signal_norm,
)

Array = np.ndarray

#: residual decrements at or below this are numerical noise for the eta diagnostic
ETA_UNDERFLOW = 1e-15


@dataclass(frozen=True)
class RdsaConfig:
    """Solver parameters (names follow the conventional parameter table).

    j1/j2 are the inner/outer iteration budgets, m0/m1 the band parameters,
    block the ring width b of the outer driver, epsilon the accuracy and
    stagnation threshold (epsilon1/epsilon2 default to it), shape_len the
    shape bandwidth L_s.
    """

    j1: int = 10
    j2: int = 200
    m0: int = 0
    m1: Optional[int] = None
    block: int = 1
    epsilon: float = 1e-6
    epsilon1: Optional[float] = None
    epsilon2: Optional[float] = None
    shape_len: int = 2000
    nufft_tolerance: float = 1e-9

    def __post_init__(self):
        if self.j1 < 1 or self.j2 < 1:
            raise ValidationError("iteration budgets j1, j2 must be >= 1")
        if self.m0 < 0:
            raise ValidationError("m0 must be nonnegative")
        if self.m1 is not None and self.m1 <= self.m0:
            raise ValidationError("m1 must exceed m0 when given")
        if self.block < 1:
            raise ValidationError("block size must be >= 1")
        if self.epsilon <= 0:
            raise ValidationError("epsilon must be positive")
        for name in ("epsilon1", "epsilon2"):
            v = getattr(self, name)
            if v is None:
                object.__setattr__(self, name, self.epsilon)
            elif v <= 0:
                raise ValidationError(f"{name} must be positive")

    def tolerances(self) -> Tuple[float, float]:
        return float(self.epsilon1), float(self.epsilon2)


BandArg = Union[None, int, Tuple[int, int]]


def scale_set_for(m0: int, m1: Optional[int] = None) -> Tuple[int, ...]:
    """The full band {-m0..m0}, or the ring {-m1+1..-m0} u {m0..m1-1}."""
    if m1 is None:
        return tuple(range(-m0, m0 + 1))
    if m1 <= m0:
        raise ValidationError(f"ring needs m1 > m0 (got {m0}, {m1})")
    ring = set(range(-m1 + 1, -m0 + 1)) | set(range(m0, m1))
    return tuple(sorted(ring))


def _resolve_band(cfg: RdsaConfig, band: BandArg) -> Tuple[int, ...]:
    if band is None:
        return scale_set_for(cfg.m0, cfg.m1)
    if isinstance(band, int):
        return scale_set_for(band)
    m0, m1 = band
    return scale_set_for(m0, m1)


def convergence_eta(trace: Union[ConvergenceTrace, Sequence[float]]) -> Array:
    """Successive log-decrement differences eta_j = mu_j - mu_{j+1}.

    mu_j = log|eps^(j-1) - eps^(j)| over consecutive residual entries; the
    sequence is truncated at the first decrement that underflows.
    """
    residuals = trace.relative_residuals if isinstance(trace, ConvergenceTrace) else trace
    residuals = np.asarray(residuals, dtype=float)
    if residuals.size < 3:
        raise ValidationError("need at least 3 residual entries for the eta diagnostic")
    diffs = np.abs(np.diff(residuals))
    cut = np.nonzero(diffs <= ETA_UNDERFLOW)[0]
    if cut.size:
        diffs = diffs[: cut[0]]
    if diffs.size < 2:
        return np.empty(0)
    mu = np.log(diffs)
    return mu[:-1] - mu[1:]


def _zero_result(f: UniformSignal, phases, order, scale_set, shape_len) -> DecompositionResult:
    zero = ShapeTable.zeros(shape_len)
    expansions = []
    components = []
    raws = []
    for k in order:
        expansions.append(MimfExpansion(
            scale_set,
            {n: 0.0 for n in scale_set}, {n: 0.0 for n in scale_set},
            {n: zero for n in scale_set}, {n: zero for n in scale_set},
            phases[k].fundamental))
        components.append(UniformSignal(np.zeros(f.L)))
        raws.append(({n: np.zeros(shape_len) for n in scale_set},
                     {n: np.zeros(shape_len) for n in scale_set}))
    trace = ConvergenceTrace((0.0,), (), StopReason.TOLERANCE_MET)
    return DecompositionResult(tuple(expansions), tuple(components), f, trace,
                               raw_products=tuple(raws))


def _finalize(scale_set, raw_cos, raw_sin, phases, order, fest, residual, trace, c):
    floor = 1e-15 * max(c, 1e-300)
    expansions = []
    raws = []
    for i, k in enumerate(order):
        a, b, s_c, s_s = {}, {}, {}, {}
        for n in scale_set:
            a[n], s_c[n] = normalize_shape(raw_cos[i][n], amplitude_floor=floor)
            b[n], s_s[n] = normalize_shape(raw_sin[i][n], amplitude_floor=floor)
        expansions.append(MimfExpansion(scale_set, a, b, s_c, s_s, phases[k].fundamental))
        raws.append((raw_cos[i], raw_sin[i]))
    return DecompositionResult(
        tuple(expansions),
        tuple(UniformSignal(v) for v in fest),
        UniformSignal(residual),
        trace,
        raw_products=tuple(raws),
    )


def _sorted_component_order(phases) -> List[int]:
    n_effs = [effective_fundamental(p) for p in phases]
    return sorted(range(len(phases)), key=lambda k: n_effs[k])  # stable for ties


def rdsa1(
    f: UniformSignal,
    phases: Sequence[PhaseTrack],
    cfg: RdsaConfig,
    band: BandArg = None,
) -> DecompositionResult:
    """First recursive driver: per iteration, apply the extraction pass to the
    running residual for every component (ascending effective fundamental) on
    one fixed scale set.

    Components in the result are ordered by ascending effective fundamental
    (ties keep the input order).
    """
    if not phases:
        raise ValidationError("need at least one phase track")
    for p in phases:
        if p.L != f.L:
            raise ValidationError("every phase track must match the signal length")
    scale_set = _resolve_band(cfg, band)
    if not scale_set:
        raise ValidationError("empty scale set")
    order = _sorted_component_order(phases)

    c = f.norm()
    if c == 0.0:
        return _zero_result(f, phases, order, scale_set, cfg.shape_len)

    eps1, _ = cfg.tolerances()
    requests = [
        DsaRequest(f, phases[k], None, cfg.shape_len, scale_set, cfg.nufft_tolerance)
        for k in order
    ]
    raw_cos = [{n: np.zeros(cfg.shape_len) for n in scale_set} for _ in order]
    raw_sin = [{n: np.zeros(cfg.shape_len) for n in scale_set} for _ in order]
    fest = [np.zeros(f.L) for _ in order]
    residual = f.samples.copy()
    e = 1.0
    history = [1.0]
    stop = StopReason.MAX_ITERATIONS
    for _ in range(cfg.j1):
        for i, req in enumerate(requests):
            out = run_dsa(replace(req, signal=UniformSignal(residual)))
            for n in scale_set:
                raw_cos[i][n] += out.raw_cos[n]
                raw_sin[i][n] += out.raw_sin[n]
            step = out.f_c.samples + out.f_s.samples
            fest[i] += step
            residual = residual - step
        rel = signal_norm(residual) / c
        history.append(rel)
        if rel <= eps1:
            stop = StopReason.TOLERANCE_MET
            break
        if rel >= e - eps1:
            stop = StopReason.STAGNATED
            break
        e = rel

    eta = convergence_eta(history) if len(history) >= 3 else np.empty(0)
    trace = ConvergenceTrace(tuple(history), tuple(eta), stop)
    return _finalize(scale_set, raw_cos, raw_sin, phases, order, fest, residual, trace, c)


def rdsa2(f: UniformSignal, phases: Sequence[PhaseTrack], cfg: RdsaConfig) -> DecompositionResult:
    """Second recursive driver: per outer iteration, run rdsa1 on the running
    residual over ring blocks m = 0, b, 2b, ... covering {-m0..m0}.

    With block = m0+1 and j2 = 1 this collapses to a single full-band rdsa1
    call.  A final block shorter than b is truncated rather than rejected.
    Components are ordered by ascending effective fundamental.
    """
    if not phases:
        raise ValidationError("need at least one phase track")
    scale_set = scale_set_for(cfg.m0)
    order = _sorted_component_order(phases)
    c = f.norm()
    if c == 0.0:
        return _zero_result(f, phases, order, scale_set, cfg.shape_len)

    eps1, eps2 = cfg.tolerances()
    blocks = []
    n_blocks = math.ceil((cfg.m0 + 1) / cfg.block)
    for ell in range(n_blocks):
        m = ell * cfg.block
        blocks.append((m, min(m + cfg.block, cfg.m0 + 1)))

    sub_cfg = replace(cfg, epsilon=eps2, epsilon1=eps2, epsilon2=eps2)
    raw_cos = [{n: np.zeros(cfg.shape_len) for n in scale_set} for _ in order]
    raw_sin = [{n: np.zeros(cfg.shape_len) for n in scale_set} for _ in order]
    fest = [np.zeros(f.L) for _ in order]
    residual = f.samples.copy()
    e = 1.0
    history = [1.0]
    stop = StopReason.MAX_ITERATIONS
    for _ in range(cfg.j2):
        for m, hi in blocks:
            sub = rdsa1(UniformSignal(residual), phases, sub_cfg, band=(m, hi))
            for i in range(len(order)):
                sub_raw_cos, sub_raw_sin = sub.raw_products[i]
                for n in sub.expansions[i].scale_indices:
                    raw_cos[i][n] += sub_raw_cos[n]
                    raw_sin[i][n] += sub_raw_sin[n]
                fest[i] += sub.components[i].samples
            residual = sub.residual.samples.copy()
        rel = signal_norm(residual) / c
        history.append(rel)
        if rel <= eps1:
            stop = StopReason.TOLERANCE_MET
            break
        if rel >= e - eps1:
            stop = StopReason.STAGNATED
            break
        e = rel

    eta = convergence_eta(history) if len(history) >= 3 else np.empty(0)
    trace = ConvergenceTrace(tuple(history), tuple(eta), stop)
    return _finalize(scale_set, raw_cos, raw_sin, phases, order, fest, residual, trace, c)
