"""Multiresolution mode decomposition of sampled signals.

Separates a time series into oscillatory components built from scale-indexed
cosine/sine-modulated periodic waveforms, recovering each component's
expansion coefficients and shape tables by recursive diffeomorphism-based
spectral analysis, with an independent partition-regression estimator for
cross-checks and benchmarking.
"""

from .errors import MmdError, SolverError, ValidationError
from .model import (
    ConvergenceTrace,
    DecompositionResult,
    MimfExpansion,
    PhaseTrack,
    ShapeSpectrum,
    ShapeTable,
    StopReason,
    UniformSignal,
    banded_approximation,
    normalize_shape,
    residual_operator,
    signal_norm,
    shape_norm,
    synthesize_mimf,
)
from .spectral import (
    NufftPlan,
    SpectrumL,
    alias,
    dft,
    downsample,
    idft,
    nufft_type1,
    nufft_type1_direct,
    scale_subsample_T,
)
from .dsa import DsaOutput, DsaRequest, effective_fundamental, extract_single, run_dsa
from .rdsa import RdsaConfig, convergence_eta, rdsa1, rdsa2, scale_set_for
from .oracle import (
    FoldedSamples,
    PartitionEstimate,
    WellDiffReport,
    fold,
    partition_regress,
    rdbr_extract,
    well_diff_report,
)
from .siggen import (
    GeneratedMixture,
    MimfTruth,
    ShapeSpec,
    add_noise,
    gen_ex2,
    gen_ex3,
    gen_shape,
)

__version__ = "0.1.0"

__all__ = [
    "MmdError", "SolverError", "ValidationError",
    "UniformSignal", "PhaseTrack", "ShapeTable", "ShapeSpectrum",
    "MimfExpansion", "DecompositionResult", "ConvergenceTrace", "StopReason",
    "synthesize_mimf", "banded_approximation", "residual_operator",
    "normalize_shape", "signal_norm", "shape_norm",
    "SpectrumL", "dft", "idft", "downsample", "alias", "scale_subsample_T",
    "NufftPlan", "nufft_type1", "nufft_type1_direct",
    "DsaRequest", "DsaOutput", "effective_fundamental", "extract_single", "run_dsa",
    "RdsaConfig", "rdsa1", "rdsa2", "convergence_eta", "scale_set_for",
    "FoldedSamples", "PartitionEstimate", "fold", "partition_regress",
    "rdbr_extract", "WellDiffReport", "well_diff_report",
    "ShapeSpec", "gen_shape", "gen_ex2", "gen_ex3", "add_noise",
    "GeneratedMixture", "MimfTruth",
    "__version__",
]
