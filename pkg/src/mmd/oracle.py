"""Partition-based regression on folded phase coordinates.

This is the independent estimation route used to cross-check the spectral
extractor and to benchmark against: fold the samples by mod(p, 1), average
the (modulated) responses inside uniform bins, and read the bin values as a
piecewise-constant shape estimate.  On exactly uniform warped coverage with
bin step N/L the two routes agree to transform accuracy.

Also hosts the joint-occupancy diagnostics of phase pairs (the gamma/beta
quantities controlling whether the recursion contracts).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .dsa import effective_fundamental
from .errors import SolverError, ValidationError
from .model import PhaseTrack, UniformSignal

Array = np.ndarray


@dataclass(frozen=True)
class FoldedSamples:
    """Abscissae folded into [0, 1) with their responses and the bin count."""

    x: Array
    y: Array
    n_bins: int

    def __post_init__(self):
        x = np.ascontiguousarray(self.x, dtype=np.float64)
        y = np.ascontiguousarray(self.y, dtype=np.float64)
        if x.shape != y.shape or x.ndim != 1 or x.size == 0:
            raise ValidationError("folded samples need matching 1-d x and y")
        if np.any(x < 0.0) or np.any(x >= 1.0):
            raise ValidationError("folded abscissae must lie in [0, 1)")
        if self.n_bins < 2:
            raise ValidationError("need at least 2 bins")
        x.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def h(self) -> float:
        return 1.0 / self.n_bins


@dataclass(frozen=True)
class PartitionEstimate:
    """Piecewise-constant bin values plus which bins actually held samples."""

    values: Array
    occupied: Array

    @property
    def n_bins(self) -> int:
        return self.values.size


def fold(phase: PhaseTrack, responses: Array, n_bins: int = 128) -> FoldedSamples:
    """Fold (p(t_l), y_l) to (mod(p(t_l), 1), y_l)."""
    responses = np.asarray(responses, dtype=np.float64)
    if responses.shape != phase.values.shape:
        raise ValidationError("responses must match the phase length")
    x = np.mod(phase.values, 1.0)
    x[x >= 1.0] = 0.0
    return FoldedSamples(x, responses, n_bins)


def _bin_indices(x: Array, n_bins: int) -> Array:
    idx = (x * n_bins).astype(np.int64)
    np.clip(idx, 0, n_bins - 1, out=idx)
    return idx


def _fill_empty_periodic(values: Array, occupied: Array) -> Array:
    """Fill empty bins by periodic linear interpolation between occupied neighbors."""
    n = values.size
    occ = np.nonzero(occupied)[0]
    filled = values.copy()
    centers = np.arange(n, dtype=float)
    # unwrap the periodic gap: np.interp with the occupied set tiled once each side
    xp = np.concatenate([occ - n, occ, occ + n]).astype(float)
    fp = np.tile(values[occ], 3)
    holes = np.nonzero(~occupied)[0]
    filled[holes] = np.interp(centers[holes], xp, fp)
    return filled


def partition_regress(samples: FoldedSamples) -> PartitionEstimate:
    """Bin-average estimate: bin k holds the mean response over [k*h, (k+1)*h)."""
    idx = _bin_indices(samples.x, samples.n_bins)
    counts = np.bincount(idx, minlength=samples.n_bins)
    sums = np.bincount(idx, weights=samples.y, minlength=samples.n_bins)
    occupied = counts > 0
    if not occupied.any():
        raise SolverError("every partition bin is empty")
    values = np.zeros(samples.n_bins)
    values[occupied] = sums[occupied] / counts[occupied]
    if not occupied.all():
        values = _fill_empty_periodic(values, occupied)
    return PartitionEstimate(values, occupied)


def rdbr_extract(
    signal: UniformSignal,
    phase: PhaseTrack,
    fundamental: Optional[float] = None,
    n: int = 0,
    parity: str = "cos",
    n_bins: Optional[int] = None,
) -> PartitionEstimate:
    """Partition-regression estimate of one product shape.

    Responses are trig(2*pi*n*phi) * f folded at mod(p, 1); the default bin
    count is the equivalence step round(L/N_eff).  Like the spectral route,
    the estimate at scale n carries half of the +-n pair content.
    """
    if parity not in ("cos", "sin"):
        raise ValidationError(f"parity must be 'cos' or 'sin', got {parity!r}")
    if signal.L != phase.L:
        raise ValidationError("signal and phase lengths differ")
    if fundamental is None:
        fundamental = phase.fundamental
    if n_bins is None:
        n_bins = max(2, int(round(signal.L / effective_fundamental(phase))))
    phi = phase.values / fundamental
    trig = np.cos if parity == "cos" else np.sin
    responses = trig((2.0 * np.pi * n) * phi) * signal.samples
    return partition_regress(fold(phase, responses, n_bins))


@dataclass(frozen=True)
class WellDiffReport:
    """Joint-occupancy diagnostics of a phase collection.

    gamma is the minimum joint bin count over all ordered pairs; beta the
    worst normalized deviation of the joint histograms from flat; contraction
    the rate factor beta * (2*m0 + 1) * (K - 1) — below 1 the recursion
    provably contracts.
    """

    gamma: int
    beta: float
    beta_pairs: Dict[Tuple[int, int], float]
    joint_counts: Dict[Tuple[int, int], Array]
    marginal_counts: Dict[int, Array]
    contraction: float
    n_bins: int

    def degenerate(self) -> bool:
        return self.gamma == 0


def well_diff_report(phases: Sequence[PhaseTrack], h: float, m0: int = 0) -> WellDiffReport:
    """Count joint fold-bin occupancies for every ordered phase pair.

    ``h`` must be 1/n_bins for an integer n_bins.
    """
    K = len(phases)
    if K < 2:
        raise ValidationError("well-differentiation needs at least 2 components")
    if not (0 < h <= 0.5):
        raise ValidationError("bin step h must lie in (0, 1/2]")
    n_bins = int(round(1.0 / h))
    if abs(n_bins * h - 1.0) > 1e-9:
        raise ValidationError(f"1/h must be an integer (got h={h!r})")
    if m0 < 0:
        raise ValidationError("m0 must be nonnegative")
    L = phases[0].L
    for p in phases:
        if p.L != L:
            raise ValidationError("phase tracks must share one grid")

    folds = [np.mod(p.values, 1.0) for p in phases]
    bins = [_bin_indices(np.where(x >= 1.0, 0.0, x), n_bins) for x in folds]
    marginal = {i: np.bincount(bins[i], minlength=n_bins) for i in range(K)}
    joint: Dict[Tuple[int, int], Array] = {}
    for i in range(K):
        for j in range(K):
            if i == j:
                continue
            flat = np.bincount(bins[i] * n_bins + bins[j], minlength=n_bins * n_bins)
            joint[(i, j)] = flat.reshape(n_bins, n_bins)

    gamma = int(min(counts.min() for counts in joint.values()))
    beta_pairs: Dict[Tuple[int, int], float] = {}
    for key, counts in joint.items():
        i, _ = key
        dev = (counts.astype(float) - gamma) ** 2
        row = dev.sum(axis=1)
        m = marginal[i].astype(float)
        valid = m > 0
        beta_pairs[key] = float(np.sqrt(np.sum(row[valid] / m[valid])))
    beta = max(beta_pairs.values())
    contraction = beta * (2 * m0 + 1) * (K - 1)
    return WellDiffReport(gamma, beta, beta_pairs, joint, marginal, contraction, n_bins)
