"""Depth-map quality: fidelity of the distorted depth weighted by scene relief.

A depth map that is faithful but nearly flat contributes little to the 3-D
experience, so depth fidelity is attenuated by how unevenly the reference
depth varies across the scene: the mean of per-block local depth variances
over their maximum. Variances are measured on the normalized reference depth
inside a fovea-sized window centered on each block, mirroring how much depth
structure a viewer can fixate at once.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .cyclopean import BlockGrid
from .errors import ConfigError, ContractError
from .metrics2d import vif
from .validation import as_float_plane, as_plane

logger = logging.getLogger(__name__)

DEFAULT_FOVEA = 64
_FLAT_VARIANCE = 1e-12


def normalize_depth(depth) -> np.ndarray:
    """Scale a depth plane by its own maximum into [0, 1].

    An all-zero plane cannot be normalized; it is returned as zeros and
    logged, because a flat scene is a degenerate but legal input.
    """
    plane = as_float_plane(depth, "depth")
    peak = plane.max()
    if peak == 0.0:
        logger.warning("all-zero depth plane; normalization skipped")
        return plane
    return plane / peak


@dataclass(frozen=True)
class DepthVarianceField:
    """Per-block local depth variances, row-major, with their maximum."""

    variances: np.ndarray
    max_variance: float

    def __post_init__(self) -> None:
        if self.variances.ndim != 1 or self.variances.size == 0:
            raise ContractError("variance field must be a non-empty 1-D array")


def local_depth_variance(
    normalized_depth, grid: BlockGrid, fovea: int = DEFAULT_FOVEA
) -> DepthVarianceField:
    """Sample variance of the depth inside a fovea window around each block.

    Each window is ``fovea x fovea``, centered on its block and shifted
    inward at the borders so it always stays full size. The variance uses
    the ``n - 1`` divisor.
    """
    depth = as_plane(normalized_depth, "normalized depth")
    if depth.shape != (grid.plane_height, grid.plane_width):
        raise ContractError(
            f"depth {depth.shape} does not match grid geometry"
            f" {(grid.plane_height, grid.plane_width)}"
        )
    if fovea < grid.block_size:
        raise ConfigError(f"fovea {fovea} smaller than block size {grid.block_size}")
    height, width = depth.shape
    if fovea > height or fovea > width:
        raise ConfigError(f"fovea {fovea} does not fit in plane {width}x{height}")

    half_block = grid.block_size // 2
    variances = np.empty(grid.n, dtype=np.float64)
    for i, (x, y) in enumerate(grid.origins()):
        wx = min(max(x + half_block - fovea // 2, 0), width - fovea)
        wy = min(max(y + half_block - fovea // 2, 0), height - fovea)
        window = depth[wy : wy + fovea, wx : wx + fovea]
        variances[i] = np.var(window, ddof=1)
    return DepthVarianceField(variances=variances, max_variance=float(variances.max()))


def depth_quality(
    ref_depth, dist_depth, grid: BlockGrid, beta: float = 0.7, fovea: int = DEFAULT_FOVEA
) -> float:
    """Depth fidelity ``vif ** beta`` scaled by the relief ratio mean/max.

    The relief ratio comes from the reference depth only. A flat reference
    (max variance below 1e-12) takes ratio 1 so the term degrades to pure
    depth fidelity instead of dividing by noise.
    """
    if beta <= 0:
        raise ConfigError(f"beta must be positive, got {beta}")
    fidelity = vif(ref_depth, dist_depth) ** beta
    field = local_depth_variance(normalize_depth(ref_depth), grid, fovea)
    if field.max_variance < _FLAT_VARIANCE:
        return fidelity
    ratio = float(field.variances.mean()) / field.max_variance
    return fidelity * ratio
