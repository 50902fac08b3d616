"""Data collaboration: anchor-based basis alignment, cost models and benchmarks."""

from .alignment import (
    AlignmentResult,
    ConcordanceReport,
    Method,
    align,
    align_imakura,
    align_kawakami,
    align_odc,
    aligned_representations,
    common_rotation_residual,
    concordance_report,
)
from .costmodel import CostParams, FlopBreakdown
from .errors import (
    DCError,
    DimensionError,
    FitError,
    IoError,
    NumericalError,
    RankError,
    SingularError,
    SkippedError,
    ValidationError,
)
from .protocol import Condition, IntermediateBundle, ScenarioSpec, UserPrivate, make_scenario

__version__ = "0.1.0"
