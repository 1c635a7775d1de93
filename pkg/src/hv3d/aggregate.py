"""Frame and sequence scoring: combine the per-view, cyclopean, and depth terms.

The score of one stereo frame is a weighted sum

    hv3d = w1 * (vif_y_left + vif_y_right)
         + w4 * (vif_u_left + vif_v_left + vif_u_right + vif_v_right)
         + w2 * q_rl
         + w3 * q_d

where q_rl is the cyclopean-view quality and q_d the depth quality. The
default weights were calibrated against subjective study scores on a 1-10
scale divided by 10, so a perfect frame scores w1*2 + w4*4 + w2 + w3 = 0.992.
Sequence scores are the arithmetic mean over frames.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np
from sklearn.base import BaseEstimator

from .cyclopean import build_csf_mask, build_grid, cyclopean_quality, CsfMask
from .depth import DEFAULT_FOVEA, depth_quality
from .errors import ConfigError, ContractError
from .metrics2d import vif
from .video_io import Frame, StereoFrame, StereoSequence

DEFAULT_BETA = 0.7
DEFAULT_BLOCK_SIZE = 16
DEFAULT_SEARCH = (64, 4)


@dataclass(frozen=True)
class Weights:
    """Combination weights; defaults are the published calibration."""

    w1: float = 0.14
    w2: float = 0.1208
    w3: float = 0.05
    w4: float = 0.1353

    def __post_init__(self) -> None:
        for field in fields(self):
            value = getattr(self, field.name)
            if not np.isfinite(value):
                raise ConfigError(f"weight {field.name} must be finite, got {value}")

    def as_array(self) -> np.ndarray:
        return np.array([self.w1, self.w2, self.w3, self.w4], dtype=np.float64)

    @classmethod
    def from_array(cls, values) -> "Weights":
        arr = np.asarray(values, dtype=np.float64)
        if arr.shape != (4,):
            raise ConfigError(f"expected 4 weights, got shape {arr.shape}")
        return cls(w1=float(arr[0]), w2=float(arr[1]), w3=float(arr[2]), w4=float(arr[3]))


DEFAULT_WEIGHTS = Weights()


@dataclass(frozen=True)
class QualityBreakdown:
    """All components of one frame's score, in report column order."""

    vif_y_left: float
    vif_u_left: float
    vif_v_left: float
    vif_y_right: float
    vif_u_right: float
    vif_v_right: float
    q_rl: float
    q_d: float
    hv3d: float

    def features(self) -> tuple[float, float, float, float]:
        """Weight-free regressors: (luma sum, q_rl, q_d, chroma sum)."""
        return (
            self.vif_y_left + self.vif_y_right,
            self.q_rl,
            self.q_d,
            self.vif_u_left + self.vif_v_left + self.vif_u_right + self.vif_v_right,
        )

    def recombine(self, weights: Weights) -> float:
        """Score under different weights; components are linear in them."""
        f1, f2, f3, f4 = self.features()
        return _combine(f1, f2, f3, f4, weights)


def _combine(f1: float, f2: float, f3: float, f4: float, weights: Weights) -> float:
    return weights.w1 * f1 + weights.w4 * f4 + weights.w2 * f2 + weights.w3 * f3


@dataclass(frozen=True)
class SequenceScore:
    """Per-frame breakdowns plus the pooled (mean) sequence score."""

    breakdowns: tuple[QualityBreakdown, ...]
    pooled: float

    def __len__(self) -> int:
        return len(self.breakdowns)


def view_term(ref: Frame, dist: Frame, weights: Weights = DEFAULT_WEIGHTS) -> float:
    """Weighted single-view fidelity: w1 * VIF(Y) + w4 * (VIF(U) + VIF(V))."""
    luma = vif(ref.y, dist.y)
    chroma = vif(ref.u, dist.u) + vif(ref.v, dist.v)
    return weights.w1 * luma + weights.w4 * chroma


def hv3d_frame(
    ref: StereoFrame,
    dist: StereoFrame,
    weights: Weights = DEFAULT_WEIGHTS,
    *,
    block_size: int = DEFAULT_BLOCK_SIZE,
    fovea: int = DEFAULT_FOVEA,
    beta: float = DEFAULT_BETA,
    search: tuple[int, int] = DEFAULT_SEARCH,
    matching_cost: str = "sad",
    mask: CsfMask | None = None,
) -> QualityBreakdown:
    """Score one distorted stereo frame against its reference."""
    if ref.left.y.shape != dist.left.y.shape:
        raise ContractError(
            f"reference {ref.left.y.shape} and distorted {dist.left.y.shape} frames differ"
        )
    if mask is None:
        mask = build_csf_mask(block_size)
    grid = build_grid(ref.width, ref.height, block_size)

    vif_y_left = vif(ref.left.y, dist.left.y)
    vif_u_left = vif(ref.left.u, dist.left.u)
    vif_v_left = vif(ref.left.v, dist.left.v)
    vif_y_right = vif(ref.right.y, dist.right.y)
    vif_u_right = vif(ref.right.u, dist.right.u)
    vif_v_right = vif(ref.right.v, dist.right.v)
    q_rl = cyclopean_quality(
        (ref.left.y, ref.right.y),
        (dist.left.y, dist.right.y),
        ref.depth,
        dist.depth,
        mask,
        grid,
        search=search,
        beta=beta,
        matching_cost=matching_cost,
    )
    q_d = depth_quality(ref.depth, dist.depth, grid, beta=beta, fovea=fovea)

    score = _combine(
        vif_y_left + vif_y_right,
        q_rl,
        q_d,
        vif_u_left + vif_v_left + vif_u_right + vif_v_right,
        weights,
    )
    return QualityBreakdown(
        vif_y_left=vif_y_left,
        vif_u_left=vif_u_left,
        vif_v_left=vif_v_left,
        vif_y_right=vif_y_right,
        vif_u_right=vif_u_right,
        vif_v_right=vif_v_right,
        q_rl=q_rl,
        q_d=q_d,
        hv3d=score,
    )


def hv3d_sequence(
    ref_seq: StereoSequence,
    dist_seq: StereoSequence,
    weights: Weights = DEFAULT_WEIGHTS,
    **frame_options,
) -> SequenceScore:
    """Score a distorted sequence frame by frame and pool with the mean."""
    if (ref_seq.width, ref_seq.height) != (dist_seq.width, dist_seq.height):
        raise ContractError(
            f"sequence geometries differ: {ref_seq.width}x{ref_seq.height}"
            f" vs {dist_seq.width}x{dist_seq.height}"
        )
    if ref_seq.frame_count != dist_seq.frame_count:
        raise ContractError(
            f"frame counts differ: {ref_seq.frame_count} vs {dist_seq.frame_count}"
        )
    if "mask" not in frame_options:
        frame_options = dict(frame_options)
        frame_options["mask"] = build_csf_mask(
            frame_options.get("block_size", DEFAULT_BLOCK_SIZE)
        )
    breakdowns = [
        hv3d_frame(ref, dist, weights, **frame_options)
        for ref, dist in zip(ref_seq.iter_frames(), dist_seq.iter_frames())
    ]
    pooled = sum(b.hv3d for b in breakdowns) / len(breakdowns)
    return SequenceScore(breakdowns=tuple(breakdowns), pooled=pooled)


class HV3DScorer(BaseEstimator):
    """Configured scoring front end with scikit-learn parameter handling.

    Holding every knob as a constructor parameter makes scorers cloneable
    and sweepable with the usual get_params/set_params machinery; the object
    itself is stateless between calls.
    """

    def __init__(
        self,
        block_size: int = DEFAULT_BLOCK_SIZE,
        fovea: int = DEFAULT_FOVEA,
        beta: float = DEFAULT_BETA,
        search_x: int = DEFAULT_SEARCH[0],
        search_y: int = DEFAULT_SEARCH[1],
        matching_cost: str = "sad",
        w1: float = DEFAULT_WEIGHTS.w1,
        w2: float = DEFAULT_WEIGHTS.w2,
        w3: float = DEFAULT_WEIGHTS.w3,
        w4: float = DEFAULT_WEIGHTS.w4,
    ) -> None:
        self.block_size = block_size
        self.fovea = fovea
        self.beta = beta
        self.search_x = search_x
        self.search_y = search_y
        self.matching_cost = matching_cost
        self.w1 = w1
        self.w2 = w2
        self.w3 = w3
        self.w4 = w4

    def weights(self) -> Weights:
        return Weights(w1=self.w1, w2=self.w2, w3=self.w3, w4=self.w4)

    def _frame_options(self) -> dict:
        return dict(
            block_size=self.block_size,
            fovea=self.fovea,
            beta=self.beta,
            search=(self.search_x, self.search_y),
            matching_cost=self.matching_cost,
        )

    def score_frame(self, ref: StereoFrame, dist: StereoFrame) -> QualityBreakdown:
        return hv3d_frame(ref, dist, self.weights(), **self._frame_options())

    def score_sequence(self, ref_seq: StereoSequence, dist_seq: StereoSequence) -> SequenceScore:
        return hv3d_sequence(ref_seq, dist_seq, self.weights(), **self._frame_options())
