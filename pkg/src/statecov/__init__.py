"""Structured state-covariance analysis.

Validation of state covariances against their generating filter pair,
optimal prediction and postdiction, singleton-spectrum detection, the
central positive-real spectrum with spectral-line extraction, and convex
signal-plus-noise covariance decompositions.
"""

from .central import (
    CentralSpectrum,
    LosslessPart,
    Realization,
    RightFunctions,
    central_spectrum,
    density,
    gauge_sensitivity,
    interpolation_matrix,
    lossless_split,
    reconstruct,
    residues,
    second_kind_right,
)
from .covariance import (
    AdmissionReport,
    StructuredCovariance,
    displacement,
    dual_displacement,
    project_to_structure,
    sample_covariance,
    structured,
    toeplitz_assemble,
    toeplitz_blocks,
    validate,
)
from .decompose import (
    NoiseDecomposition,
    SdpProblem,
    correlation_range_check,
    ma_decompose,
    scalar_white,
    sdp_solve,
    white_decompose,
)
from .errors import (
    ConsistencyError,
    DimensionError,
    InfeasibleError,
    NotStateCovarianceError,
    RankDeficientError,
    SolverError,
    StatecovError,
    ToleranceAmbiguityError,
    UnstableSystemError,
)
from .prediction import (
    PredictorSolution,
    SingletonReport,
    SpectralLine,
    line_spectrum,
    predict_backward,
    predict_forward,
    singleton_test,
)
from .system import (
    InnerCompletion,
    SystemPair,
    block_toeplitz_pair,
    eval_G,
    eval_Gr,
    eval_V,
    inner_complete,
    new_pair,
    normalize,
    pair_from_json,
    pair_to_json,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
