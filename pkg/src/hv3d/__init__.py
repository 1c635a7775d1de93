"""Full-reference stereoscopic video quality assessment.

The score of a distorted stereo sequence against its pristine reference
combines per-view fidelity (VIF on luma and chroma of both views), the
quality of the fused cyclopean view, and the quality of the depth map,
pooled over frames. See the module docstrings for the individual stages.
"""

from .aggregate import (
    DEFAULT_WEIGHTS,
    HV3DScorer,
    QualityBreakdown,
    SequenceScore,
    Weights,
    hv3d_frame,
    hv3d_sequence,
    view_term,
)
from .cyclopean import (
    BlockCorrespondence,
    BlockGrid,
    CsfMask,
    apply_csf,
    build_csf_mask,
    build_grid,
    cyclopean_quality,
    dct3_pair,
    fuse_3d_dct,
    idct2,
    idct3_pair,
    match_blocks,
)
from .depth import (
    DepthVarianceField,
    depth_quality,
    local_depth_variance,
    normalize_depth,
)
from .distortions import (
    DistortionSpec,
    add_gaussian_noise,
    apply_distortion,
    blur_kernel,
    gaussian_blur,
    load_distortion_specs,
    mean_shift,
)
from .errors import (
    CalibrationError,
    ConfigError,
    ContractError,
    EvaluationError,
    Hv3dError,
    IngestionError,
    ManifestError,
)
from .evaluation import (
    FeatureRow,
    LogisticCurve,
    LogisticFit,
    MosRecord,
    ScoreRecord,
    WeightCalibrator,
    fit_weights,
    load_mos_csv,
    load_scores_csv,
    logistic_curve,
    logistic_fit,
    spearman,
)
from .metrics2d import ssim_block, ssim_plane, vif
from .video_io import (
    Frame,
    Manifest,
    ManifestEntry,
    StereoFrame,
    StereoSequence,
    load_manifest,
    read_depth_sequence,
    read_yuv420_sequence,
    write_depth_sequence,
    write_manifest,
    write_yuv420_sequence,
)

__version__ = "0.1.0"

__all__ = [
    "BlockCorrespondence",
    "BlockGrid",
    "CalibrationError",
    "ConfigError",
    "ContractError",
    "CsfMask",
    "DEFAULT_WEIGHTS",
    "DepthVarianceField",
    "DistortionSpec",
    "EvaluationError",
    "FeatureRow",
    "Frame",
    "HV3DScorer",
    "Hv3dError",
    "IngestionError",
    "LogisticCurve",
    "LogisticFit",
    "Manifest",
    "ManifestEntry",
    "ManifestError",
    "MosRecord",
    "QualityBreakdown",
    "ScoreRecord",
    "SequenceScore",
    "StereoFrame",
    "StereoSequence",
    "WeightCalibrator",
    "Weights",
    "add_gaussian_noise",
    "apply_csf",
    "apply_distortion",
    "blur_kernel",
    "build_csf_mask",
    "build_grid",
    "cyclopean_quality",
    "dct3_pair",
    "depth_quality",
    "fit_weights",
    "fuse_3d_dct",
    "gaussian_blur",
    "hv3d_frame",
    "hv3d_sequence",
    "idct2",
    "idct3_pair",
    "load_distortion_specs",
    "load_manifest",
    "load_mos_csv",
    "load_scores_csv",
    "local_depth_variance",
    "logistic_curve",
    "logistic_fit",
    "match_blocks",
    "mean_shift",
    "normalize_depth",
    "read_depth_sequence",
    "read_yuv420_sequence",
    "spearman",
    "ssim_block",
    "ssim_plane",
    "vif",
    "view_term",
    "write_depth_sequence",
    "write_manifest",
    "write_yuv420_sequence",
]
