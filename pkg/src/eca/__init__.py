"""Endoscopic content area estimation.

Estimates the circular content area of endoscopic frames by scoring edge
candidates on sigmoid-placed horizontal strips (handcrafted features or a
shallow learned scorer) and fitting a circle with RANSAC plus iterated
least squares.  Includes the evaluation metric, annotation tooling, a
synthetic benchmark renderer, and a CLI.
"""

from .config import EcaConfig, apply_overrides, config_default, load_config, save_config
from .edgenet import (
    ChannelStats,
    CorruptWeightsError,
    EdgeNet,
    TrainConfig,
    TrainingDivergedError,
    compute_channel_stats,
    load_weights,
    load_weights_file,
    make_rgbxy,
    save_weights,
    save_weights_file,
    train,
)
from .estimator import (
    HANDCRAFTED,
    EstimatorVariant,
    FrameError,
    Handcrafted,
    Learned,
    estimate,
    estimate_batch,
)
from .fitting import (
    Accepted,
    FitResult,
    Rejected,
    RejectionReason,
    circle_from_triplet,
    filter_candidates,
    least_squares_circle,
    ransac_fit,
)
from .geometry import (
    FULL_FRAME,
    Circle,
    CircularArea,
    ContentArea,
    EdgeCandidate,
    FullFrame,
    Side,
    circle_contains,
    frame_center,
)
from .metrics import (
    EvalReport,
    MissClass,
    area_error_px,
    boundary_points,
    evaluate_dataset,
    hausdorff,
    normalized_hausdorff,
    report_markdown,
)
from .strips import extract_strips, strip_heights

__version__ = "0.1.0"

__all__ = [
    "Accepted",
    "ChannelStats",
    "Circle",
    "CircularArea",
    "ContentArea",
    "CorruptWeightsError",
    "EcaConfig",
    "EdgeCandidate",
    "EdgeNet",
    "EstimatorVariant",
    "EvalReport",
    "FitResult",
    "FrameError",
    "FullFrame",
    "FULL_FRAME",
    "HANDCRAFTED",
    "Handcrafted",
    "Learned",
    "MissClass",
    "Rejected",
    "RejectionReason",
    "Side",
    "TrainConfig",
    "TrainingDivergedError",
    "apply_overrides",
    "area_error_px",
    "boundary_points",
    "circle_contains",
    "circle_from_triplet",
    "compute_channel_stats",
    "config_default",
    "estimate",
    "estimate_batch",
    "evaluate_dataset",
    "extract_strips",
    "filter_candidates",
    "frame_center",
    "hausdorff",
    "least_squares_circle",
    "load_config",
    "load_weights",
    "load_weights_file",
    "make_rgbxy",
    "normalized_hausdorff",
    "ransac_fit",
    "report_markdown",
    "save_config",
    "save_weights",
    "save_weights_file",
    "strip_heights",
    "train",
]
