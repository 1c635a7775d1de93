"""Planar fidelity primitives: SSIM and visual information fidelity (VIF).

Both metrics run on single planes (luma, chroma, or depth) in float64 on the
8-bit intensity range. The VIF here is the pixel-domain multi-scale variant:

* up to four scales; each step after the first low-pass filters with the
  same Gaussian window and decimates by two in both axes,
* local statistics from an 11x11 Gaussian window (sigma 1.5), valid region
  only (no padding),
* a scalar Gaussian-scale-mixture channel model with receiver noise
  variance 2.0,
* scales whose input is smaller than the window are skipped, so small
  planes are scored from the scales that fit; a plane too small for even
  one scale is a contract violation.

The information ratio uses natural logs (any base cancels). A reference
plane that carries no measurable information at all (flat: the denominator
is exactly zero) returns 1.0, because there is no evidence of fidelity loss
either way; that convention also keeps flat depth maps scoreable.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .errors import ContractError
from .validation import as_float_plane, check_same_shape

WINDOW_SIZE = 11
WINDOW_SIGMA = 1.5
DYNAMIC_RANGE = 255.0
SSIM_K1 = 0.01
SSIM_K2 = 0.03
SSIM_C1 = (SSIM_K1 * DYNAMIC_RANGE) ** 2
SSIM_C2 = (SSIM_K2 * DYNAMIC_RANGE) ** 2
VIF_SCALES = 4
VIF_NOISE_VARIANCE = 2.0
_STAB_EPS = 1e-10


def gaussian_window(size: int = WINDOW_SIZE, sigma: float = WINDOW_SIGMA) -> np.ndarray:
    """Normalized 1-D Gaussian tap vector; the 2-D window is its outer product."""
    offsets = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    taps = np.exp(-(offsets**2) / (2.0 * sigma * sigma))
    return taps / taps.sum()


def _filter_valid(plane: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """Separable filtering, keeping only fully-supported (valid) output."""
    r = taps.size // 2
    out = ndimage.convolve1d(plane, taps, axis=0, mode="constant")
    out = out[r : plane.shape[0] - r, :]
    out = ndimage.convolve1d(out, taps, axis=1, mode="constant")
    return out[:, r : plane.shape[1] - r]


def ssim_plane(reference, distorted) -> float:
    """Mean SSIM over all valid 11x11 Gaussian windows of two planes."""
    ref = as_float_plane(reference, "reference")
    dist = as_float_plane(distorted, "distorted")
    check_same_shape(ref, dist)
    if min(ref.shape) < WINDOW_SIZE:
        raise ContractError(
            f"plane {ref.shape} too small for the {WINDOW_SIZE}x{WINDOW_SIZE} window"
        )
    taps = gaussian_window()
    mu1 = _filter_valid(ref, taps)
    mu2 = _filter_valid(dist, taps)
    var1 = _filter_valid(ref * ref, taps) - mu1 * mu1
    var2 = _filter_valid(dist * dist, taps) - mu2 * mu2
    cov = _filter_valid(ref * dist, taps) - mu1 * mu2
    ssim_map = ((2.0 * mu1 * mu2 + SSIM_C1) * (2.0 * cov + SSIM_C2)) / (
        (mu1 * mu1 + mu2 * mu2 + SSIM_C1) * (var1 + var2 + SSIM_C2)
    )
    return float(ssim_map.mean())


def ssim_block(reference_block, distorted_block) -> float:
    """SSIM of two equally sized blocks as one uniform window.

    Means, population variances, and the covariance come from the whole
    block, so there is no sliding and no Gaussian weighting.
    """
    a = as_float_plane(reference_block, "reference block")
    b = as_float_plane(distorted_block, "distorted block")
    check_same_shape(a, b, "blocks")
    mu1 = a.mean()
    mu2 = b.mean()
    da = a - mu1
    db = b - mu2
    var1 = float((da * da).mean())
    var2 = float((db * db).mean())
    cov = float((da * db).mean())
    return float(
        ((2.0 * mu1 * mu2 + SSIM_C1) * (2.0 * cov + SSIM_C2))
        / ((mu1 * mu1 + mu2 * mu2 + SSIM_C1) * (var1 + var2 + SSIM_C2))
    )


def vif(reference, distorted) -> float:
    """Visual information fidelity of ``distorted`` against ``reference``.

    Identity scores 1; values above 1 are legitimate (e.g. contrast
    enhancement). See the module docstring for the exact variant.
    """
    ref = as_float_plane(reference, "reference")
    dist = as_float_plane(distorted, "distorted")
    check_same_shape(ref, dist)
    taps = gaussian_window()
    num = 0.0
    den = 0.0
    scales_used = 0
    for scale in range(VIF_SCALES):
        if scale > 0:
            if min(ref.shape) < WINDOW_SIZE:
                break
            ref = _filter_valid(ref, taps)[::2, ::2]
            dist = _filter_valid(dist, taps)[::2, ::2]
        if min(ref.shape) < WINDOW_SIZE:
            break
        mu1 = _filter_valid(ref, taps)
        mu2 = _filter_valid(dist, taps)
        sigma1 = _filter_valid(ref * ref, taps) - mu1 * mu1
        sigma2 = _filter_valid(dist * dist, taps) - mu2 * mu2
        sigma12 = _filter_valid(ref * dist, taps) - mu1 * mu2
        np.maximum(sigma1, 0.0, out=sigma1)
        np.maximum(sigma2, 0.0, out=sigma2)

        gain = sigma12 / (sigma1 + _STAB_EPS)
        noise = sigma2 - gain * sigma12

        # Stabilization ladder: windows with (nearly) no reference signal carry
        # no information; no distorted signal means everything was lost; a
        # negative gain is treated as total loss as well.
        flat_ref = sigma1 < _STAB_EPS
        gain[flat_ref] = 0.0
        noise[flat_ref] = sigma2[flat_ref]
        sigma1[flat_ref] = 0.0

        flat_dist = sigma2 < _STAB_EPS
        gain[flat_dist] = 0.0
        noise[flat_dist] = 0.0

        negative = gain < 0.0
        noise[negative] = sigma2[negative]
        gain[negative] = 0.0

        np.maximum(noise, _STAB_EPS, out=noise)

        num += float(np.log(1.0 + gain * gain * sigma1 / (noise + VIF_NOISE_VARIANCE)).sum())
        den += float(np.log(1.0 + sigma1 / VIF_NOISE_VARIANCE).sum())
        scales_used += 1

    if scales_used == 0:
        raise ContractError(
            f"plane {ref.shape} too small for even one VIF scale"
            f" ({WINDOW_SIZE}x{WINDOW_SIZE} window)"
        )
    if den == 0.0:
        return 1.0
    return num / den
