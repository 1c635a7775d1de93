"""Synthetic degradations for building test corpora.

Every generator wraps a sequence lazily: frames are transformed during
iteration, dimensions and frame counts are preserved, and the depth stream
passes through bit-exactly (degradations act on the views, not the scene
geometry). Outputs are rounded to the nearest integer and clipped back to
8 bits.

Noise is reproducible and order-independent: frame ``i`` seeds its own
generator from ``(seed, i)``, so scoring a few frames or distorting the
whole sequence twice gives identical pixels.

A distortion spec file is JSON::

    {"distortions": [
        {"name": "noise", "kind": "gaussian_noise", "variance": 0.01, "seed": 7},
        {"name": "blur", "kind": "gaussian_blur", "kernel_size": 4, "sigma": 4.0},
        {"name": "shift", "kind": "mean_shift", "delta": 20},
        {"name": "qp35", "kind": "external", "source_dir": "decoded/qp35"}
    ]}

``external`` entries point at pre-produced raw YUV files (codec round trips
happen outside this package); the distortion driver picks them up by name.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import convolve2d

from .errors import ConfigError, IngestionError
from .video_io import Frame, StereoFrame, StereoSequence

KINDS = ("gaussian_noise", "gaussian_blur", "mean_shift", "external")

DEFAULT_NOISE_VARIANCE = 0.01
DEFAULT_BLUR_KERNEL = 4
DEFAULT_BLUR_SIGMA = 4.0
DEFAULT_MEAN_DELTA = 20


def _to_uint8(plane: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(plane), 0, 255).astype(np.uint8)


def add_gaussian_noise(
    seq: StereoSequence,
    variance: float = DEFAULT_NOISE_VARIANCE,
    seed: int = 0,
    planes: str = "all",
    label: str | None = None,
) -> StereoSequence:
    """Additive white Gaussian noise on both views.

    ``variance`` is on the [0, 1] intensity scale, so the 8-bit standard
    deviation is ``255 * sqrt(variance)``. ``planes`` selects ``"all"``
    (Y, U and V) or ``"luma"`` only.
    """
    if variance <= 0:
        raise ConfigError(f"noise variance must be positive, got {variance}")
    if planes not in ("all", "luma"):
        raise ConfigError(f"planes must be 'all' or 'luma', got {planes!r}")
    if seed < 0:
        raise ConfigError(f"seed must be non-negative, got {seed}")
    sigma = 255.0 * math.sqrt(variance)

    def distort(index: int, frame: StereoFrame) -> StereoFrame:
        rng = np.random.default_rng((seed, index))

        def noisy(plane: np.ndarray) -> np.ndarray:
            return _to_uint8(plane.astype(np.float64) + rng.normal(0.0, sigma, plane.shape))

        views = []
        for view in (frame.left, frame.right):
            if planes == "all":
                views.append(Frame(y=noisy(view.y), u=noisy(view.u), v=noisy(view.v)))
            else:
                views.append(Frame(y=noisy(view.y), u=view.u, v=view.v))
        return StereoFrame(left=views[0], right=views[1], depth=frame.depth)

    return seq.map_frames(distort, label=label)


def blur_kernel(kernel_size: int = DEFAULT_BLUR_KERNEL, sigma: float = DEFAULT_BLUR_SIGMA) -> np.ndarray:
    """Normalized 2-D Gaussian kernel sampled at integer offsets from the anchor.

    The anchor sits at index ``kernel_size // 2``; even sizes are therefore
    half a pixel off center, which is part of the degradation.
    """
    if kernel_size < 2:
        raise ConfigError(f"kernel size must be at least 2, got {kernel_size}")
    if sigma <= 0:
        raise ConfigError(f"sigma must be positive, got {sigma}")
    offsets = np.arange(kernel_size, dtype=np.float64) - (kernel_size // 2)
    taps = np.exp(-(offsets**2) / (2.0 * sigma * sigma))
    kernel = np.outer(taps, taps)
    return kernel / kernel.sum()


def _convolve_anchored(plane: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Convolve with edge replication so out[y, x] = sum k[i, j] * in[y+c-i, x+c-j]."""
    k = kernel.shape[0]
    c = k // 2
    padded = np.pad(plane.astype(np.float64), ((k - 1 - c, c), (k - 1 - c, c)), mode="edge")
    return convolve2d(padded, kernel, mode="valid")


def gaussian_blur(
    seq: StereoSequence,
    kernel_size: int = DEFAULT_BLUR_KERNEL,
    sigma: float = DEFAULT_BLUR_SIGMA,
    label: str | None = None,
) -> StereoSequence:
    """Gaussian low-pass on every plane of both views, edges replicated."""
    kernel = blur_kernel(kernel_size, sigma)

    def distort(index: int, frame: StereoFrame) -> StereoFrame:
        def blurred(view: Frame) -> Frame:
            return Frame(
                y=_to_uint8(_convolve_anchored(view.y, kernel)),
                u=_to_uint8(_convolve_anchored(view.u, kernel)),
                v=_to_uint8(_convolve_anchored(view.v, kernel)),
            )

        return StereoFrame(left=blurred(frame.left), right=blurred(frame.right), depth=frame.depth)

    return seq.map_frames(distort, label=label)


def mean_shift(
    seq: StereoSequence, delta: int = DEFAULT_MEAN_DELTA, label: str | None = None
) -> StereoSequence:
    """Add a constant to the luma of both views; chroma stays untouched."""
    delta = int(delta)
    if abs(delta) >= 255:
        raise ConfigError(f"delta must stay within (-255, 255), got {delta}")

    def distort(index: int, frame: StereoFrame) -> StereoFrame:
        def shifted(view: Frame) -> Frame:
            y = np.clip(view.y.astype(np.int16) + delta, 0, 255).astype(np.uint8)
            return Frame(y=y, u=view.u, v=view.v)

        return StereoFrame(left=shifted(frame.left), right=shifted(frame.right), depth=frame.depth)

    return seq.map_frames(distort, label=label)


@dataclass(frozen=True)
class DistortionSpec:
    """One named degradation; fields beyond its kind are ignored."""

    name: str
    kind: str
    variance: float = DEFAULT_NOISE_VARIANCE
    seed: int | None = None
    planes: str = "all"
    kernel_size: int = DEFAULT_BLUR_KERNEL
    sigma: float = DEFAULT_BLUR_SIGMA
    delta: int = DEFAULT_MEAN_DELTA
    source_dir: str | None = None

    def __post_init__(self) -> None:
        if not self.name:
            raise ConfigError("distortion name must be non-empty")
        if self.kind not in KINDS:
            raise ConfigError(f"unknown distortion kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "external" and not self.source_dir:
            raise ConfigError(f"{self.name}: external distortion needs source_dir")


def load_distortion_specs(path) -> list[DistortionSpec]:
    """Read a JSON distortion spec file; names must be unique."""
    path = Path(path)
    if not path.is_file():
        raise IngestionError(f"{path}: no such spec file")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    entries = payload.get("distortions")
    if not isinstance(entries, list) or not entries:
        raise ConfigError(f"{path}: expected a non-empty 'distortions' list")
    known = {f for f in DistortionSpec.__dataclass_fields__}
    specs = []
    for entry in entries:
        unknown = set(entry) - known
        if unknown:
            raise ConfigError(f"{path}: unknown spec field(s) {sorted(unknown)}")
        specs.append(DistortionSpec(**entry))
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        raise ConfigError(f"{path}: duplicate distortion names")
    return specs


def apply_distortion(
    seq: StereoSequence, spec: DistortionSpec, default_seed: int | None = None
) -> StereoSequence:
    """Apply a synthetic spec to a sequence; external kinds are file-based."""
    label = f"{seq.label}__{spec.name}"
    if spec.kind == "gaussian_noise":
        seed = spec.seed if spec.seed is not None else default_seed
        if seed is None:
            raise ConfigError(f"{spec.name}: gaussian noise needs a seed")
        return add_gaussian_noise(seq, spec.variance, seed, spec.planes, label=label)
    if spec.kind == "gaussian_blur":
        return gaussian_blur(seq, spec.kernel_size, spec.sigma, label=label)
    if spec.kind == "mean_shift":
        return mean_shift(seq, spec.delta, label=label)
    raise ConfigError(
        f"{spec.name}: external distortions are pre-produced files; apply them via the corpus driver"
    )
