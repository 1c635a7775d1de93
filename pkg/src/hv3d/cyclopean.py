"""Cyclopean-view fusion quality for a stereo pair.

The perceived "cyclopean" image a viewer fuses from the two eyes is modeled
block-wise: every block of the left view is paired with its best-matching
block in the right view, the pair is transformed with a 3-D DCT across
(view, row, column), and the view-axis DC slice, which holds the energy the
two views share, is kept as the cyclopean block. Contrast sensitivity
weighting is applied to that slice in the frequency domain, and the weighted
block is brought back to pixels with an inverse 2-D DCT.

Block correspondences are always computed on the reference pair and reused
for the distorted pair, so both cyclopean views are built from the same
scene geometry and blocks are compared like for like.

Conventions fixed here:

* the left view hosts the block grid; a correspondence's displacement maps
  the left block origin to the right block origin
  (``right = left + (dx, dy)``),
* candidate displacements are scanned row-major (dy ascending outer, dx
  ascending inner) and a candidate must be strictly better to replace the
  current best, with ties on cost broken by smaller ``|dx|``, then smaller
  ``|dy|``, then scan order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np
from scipy import fft

from .errors import ConfigError, ContractError
from .metrics2d import ssim_block, vif
from .validation import as_float_plane, as_plane, check_same_shape

# Standard JPEG 8x8 luminance quantization table (Annex K). Step sizes grow
# with spatial frequency roughly inversely to contrast sensitivity, so the
# reciprocal of this table is a ready-made sensitivity profile.
LUMA_QUANT_TABLE = np.array(
    [
        [16, 11, 10, 16, 24, 40, 51, 61],
        [12, 12, 14, 19, 26, 58, 60, 55],
        [14, 13, 16, 24, 40, 57, 69, 56],
        [14, 17, 22, 29, 51, 87, 80, 62],
        [18, 22, 37, 56, 68, 109, 103, 77],
        [24, 35, 55, 64, 81, 104, 113, 92],
        [49, 64, 78, 87, 103, 121, 120, 101],
        [72, 92, 95, 98, 112, 100, 103, 99],
    ],
    dtype=np.float64,
)


@dataclass(frozen=True)
class CsfMask:
    """Positive frequency-domain weights with mean exactly one."""

    weights: np.ndarray

    def __post_init__(self) -> None:
        w = self.weights
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ContractError(f"mask must be square, got shape {w.shape}")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ContractError("mask weights must be finite and positive")

    @property
    def size(self) -> int:
        return self.weights.shape[0]


def _catmull_rom_axis(samples: np.ndarray, n_out: int) -> np.ndarray:
    """Catmull-Rom resampling along axis 0, edges clamped, pixel centers aligned."""
    n = samples.shape[0]
    coords = (np.arange(n_out) + 0.5) * (n / n_out) - 0.5
    base = np.floor(coords).astype(int)
    t = (coords - base)[:, np.newaxis]

    def tap(offset: int) -> np.ndarray:
        return samples[np.clip(base + offset, 0, n - 1)]

    p0, p1, p2, p3 = tap(-1), tap(0), tap(1), tap(2)
    return 0.5 * (
        2.0 * p1
        + (p2 - p0) * t
        + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t**2
        + (3.0 * (p1 - p2) + p3 - p0) * t**3
    )


def _resample_square(grid: np.ndarray, n_out: int) -> np.ndarray:
    rows = _catmull_rom_axis(grid, n_out)
    return _catmull_rom_axis(rows.T, n_out).T


def build_csf_mask(block_size: int) -> CsfMask:
    """Contrast sensitivity mask for DCT blocks of the given size.

    The reciprocal of the 8x8 JPEG luminance quantization table supplies the
    sensitivity shape; for 16x16 blocks it is bicubically resampled. The
    weights are scaled to mean exactly one so masking is energy-neutral on
    flat spectra.
    """
    if block_size not in (8, 16):
        raise ConfigError(f"unsupported block size {block_size}; expected 8 or 16")
    sensitivity = 1.0 / LUMA_QUANT_TABLE
    if block_size == 16:
        sensitivity = _resample_square(sensitivity, 16)
    return CsfMask(weights=sensitivity / sensitivity.mean())


@dataclass(frozen=True)
class BlockGrid:
    """Non-overlapping block tiling of a plane, truncated at the borders."""

    block_size: int
    plane_width: int
    plane_height: int
    cols: int
    rows: int

    @property
    def n(self) -> int:
        return self.rows * self.cols

    def origins(self) -> Iterator[tuple[int, int]]:
        """Block origins (x, y) in row-major order."""
        b = self.block_size
        for r in range(self.rows):
            for c in range(self.cols):
                yield (c * b, r * b)


def build_grid(width: int, height: int, block_size: int) -> BlockGrid:
    if block_size < 1:
        raise ConfigError(f"block size must be positive, got {block_size}")
    cols = width // block_size
    rows = height // block_size
    if cols < 1 or rows < 1:
        raise ContractError(
            f"plane {width}x{height} holds no full {block_size}x{block_size} block"
        )
    return BlockGrid(
        block_size=block_size, plane_width=width, plane_height=height, cols=cols, rows=rows
    )


@dataclass(frozen=True)
class BlockCorrespondence:
    """One matched block pair: left origin (x, y), displacement (dx, dy), cost."""

    left_origin: tuple[int, int]
    displacement: tuple[int, int]
    cost: int


def match_blocks(
    left_luma,
    right_luma,
    grid: BlockGrid,
    search: tuple[int, int] = (64, 4),
    matching_cost: str = "sad",
) -> list[BlockCorrespondence]:
    """Exhaustive block matching of every grid block into the right view.

    ``search`` is (range_x, range_y): displacements run over
    ``dx in [-range_x, range_x]`` and ``dy in [-range_y, range_y]``, keeping
    only candidates whose target block lies fully inside the right plane.
    ``matching_cost`` selects the per-pixel cost: ``"sad"`` (absolute
    difference) or ``"mse"`` (squared difference; same ranking as mean
    squared error since block area is constant). The zero displacement is
    always a candidate, so every block gets matched.

    Returns correspondences in row-major grid order.
    """
    left = as_plane(left_luma, "left luma")
    right = as_plane(right_luma, "right luma")
    check_same_shape(left, right, "views")
    if left.shape != (grid.plane_height, grid.plane_width):
        raise ContractError(
            f"plane {left.shape} does not match grid geometry"
            f" {(grid.plane_height, grid.plane_width)}"
        )
    range_x, range_y = search
    if range_x < 0 or range_y < 0:
        raise ConfigError(f"search ranges must be non-negative, got {search}")
    if matching_cost not in ("sad", "mse"):
        raise ConfigError(f"unknown matching cost {matching_cost!r}")

    b = grid.block_size
    height, width = left.shape
    li = left.astype(np.int64)
    ri = right.astype(np.int64)

    sentinel = np.iinfo(np.int64).max
    best_cost = np.full((grid.rows, grid.cols), sentinel, dtype=np.int64)
    best_abs_dx = np.full_like(best_cost, sentinel)
    best_abs_dy = np.full_like(best_cost, sentinel)
    best_dx = np.zeros_like(best_cost)
    best_dy = np.zeros_like(best_cost)

    for dy in range(-range_y, range_y + 1):
        r0 = max(0, -(dy // b))
        r1 = min(grid.rows - 1, (height - b - dy) // b)
        if r0 > r1:
            continue
        for dx in range(-range_x, range_x + 1):
            c0 = max(0, -(dx // b))
            c1 = min(grid.cols - 1, (width - b - dx) // b)
            if c0 > c1:
                continue
            ly0, ly1 = r0 * b, (r1 + 1) * b
            lx0, lx1 = c0 * b, (c1 + 1) * b
            diff = li[ly0:ly1, lx0:lx1] - ri[ly0 + dy : ly1 + dy, lx0 + dx : lx1 + dx]
            per_pixel = np.abs(diff) if matching_cost == "sad" else diff * diff
            nr, nc = r1 - r0 + 1, c1 - c0 + 1
            cost = per_pixel.reshape(nr, b, nc, b).sum(axis=(1, 3))

            view = np.s_[r0 : r1 + 1, c0 : c1 + 1]
            abs_dx, abs_dy = abs(dx), abs(dy)
            tied = cost == best_cost[view]
            better = cost < best_cost[view]
            better |= tied & (abs_dx < best_abs_dx[view])
            better |= tied & (abs_dx == best_abs_dx[view]) & (abs_dy < best_abs_dy[view])
            best_cost[view][better] = cost[better]
            best_abs_dx[view][better] = abs_dx
            best_abs_dy[view][better] = abs_dy
            best_dx[view][better] = dx
            best_dy[view][better] = dy

    return [
        BlockCorrespondence(
            left_origin=(c * b, r * b),
            displacement=(int(best_dx[r, c]), int(best_dy[r, c])),
            cost=int(best_cost[r, c]),
        )
        for r in range(grid.rows)
        for c in range(grid.cols)
    ]


def dct3_pair(left_block, right_block) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal 3-D DCT of the (view, row, column) stack of two blocks.

    Returns the two slices along the view axis. Slice 0 (the view-axis DC)
    equals ``(dct2(left) + dct2(right)) / sqrt(2)``, the energy common to
    both views.
    """
    lb = as_float_plane(left_block, "left block")
    rb = as_float_plane(right_block, "right block")
    check_same_shape(lb, rb, "blocks")
    coeffs = fft.dctn(np.stack((lb, rb)), norm="ortho")
    return coeffs[0], coeffs[1]


def idct3_pair(dc_slice, second_slice) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`dct3_pair`: reconstruct the two pixel blocks."""
    first = as_float_plane(dc_slice, "dc slice")
    second = as_float_plane(second_slice, "second slice")
    check_same_shape(first, second, "slices")
    stack = fft.idctn(np.stack((first, second)), norm="ortho")
    return stack[0], stack[1]


def fuse_3d_dct(left_block, right_block) -> np.ndarray:
    """Cyclopean block spectrum: the view-axis DC slice of the pair's 3-D DCT."""
    return dct3_pair(left_block, right_block)[0]


def idct2(block) -> np.ndarray:
    """Orthonormal inverse 2-D DCT."""
    return fft.idctn(as_float_plane(block, "block"), norm="ortho")


def apply_csf(block, mask: CsfMask) -> np.ndarray:
    """Weight a frequency-domain block elementwise by the sensitivity mask."""
    coeffs = as_float_plane(block, "block")
    if coeffs.shape != mask.weights.shape:
        raise ContractError(f"block {coeffs.shape} does not match mask {mask.weights.shape}")
    return coeffs * mask.weights


def cyclopean_quality(
    ref_pair: tuple,
    dist_pair: tuple,
    ref_depth,
    dist_depth,
    mask: CsfMask,
    grid: BlockGrid,
    search: tuple[int, int] = (64, 4),
    beta: float = 0.7,
    matching_cost: str = "sad",
) -> float:
    """Cyclopean-view quality of a distorted stereo pair against its reference.

    Per block: fuse reference and distorted pairs (reference correspondences
    for both), weight each fused spectrum with the mask, return to pixels,
    and take the single-window block SSIM. The block average is scaled by
    the depth-map fidelity ``vif(ref_depth, dist_depth) ** beta``.
    """
    if beta <= 0:
        raise ConfigError(f"beta must be positive, got {beta}")
    ref_left = as_plane(ref_pair[0], "reference left luma")
    ref_right = as_plane(ref_pair[1], "reference right luma")
    dist_left = as_plane(dist_pair[0], "distorted left luma")
    dist_right = as_plane(dist_pair[1], "distorted right luma")
    for other in (ref_right, dist_left, dist_right):
        check_same_shape(ref_left, other, "lumas")
    if mask.size != grid.block_size:
        raise ContractError(f"mask size {mask.size} does not match grid block {grid.block_size}")

    b = grid.block_size
    correspondences = match_blocks(ref_left, ref_right, grid, search, matching_cost)
    total = 0.0
    for corr in correspondences:
        x, y = corr.left_origin
        dx, dy = corr.displacement
        rx, ry = x + dx, y + dy
        ref_fused = fuse_3d_dct(ref_left[y : y + b, x : x + b], ref_right[ry : ry + b, rx : rx + b])
        dist_fused = fuse_3d_dct(
            dist_left[y : y + b, x : x + b], dist_right[ry : ry + b, rx : rx + b]
        )
        ref_block = idct2(apply_csf(ref_fused, mask))
        dist_block = idct2(apply_csf(dist_fused, mask))
        total += ssim_block(ref_block, dist_block)
    block_term = total / len(correspondences)
    return vif(ref_depth, dist_depth) ** beta * block_term
