"""Shared synthetic-scene builders for the test suite."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from hv3d import (
    Frame,
    ManifestEntry,
    StereoFrame,
    StereoSequence,
    write_depth_sequence,
    write_manifest,
    write_yuv420_sequence,
)


def textured_plane(
    rng: np.random.Generator,
    height: int,
    width: int,
    amplitude: float = 50.0,
    noise: float = 18.0,
) -> np.ndarray:
    """Mid-gray plane with sinusoidal structure plus noise; plenty of variance."""
    yy, xx = np.mgrid[0:height, 0:width]
    base = 128.0 + amplitude * np.sin(2.0 * np.pi * xx / 17.0) * np.cos(2.0 * np.pi * yy / 23.0)
    base = base + rng.normal(0.0, noise, (height, width))
    return np.clip(np.rint(base), 0, 255).astype(np.uint8)


def make_frame(rng: np.random.Generator, width: int, height: int) -> Frame:
    return Frame(
        y=textured_plane(rng, height, width),
        u=textured_plane(rng, height // 2, width // 2),
        v=textured_plane(rng, height // 2, width // 2),
    )


def make_stereo_frame(
    rng: np.random.Generator, width: int, height: int, disparity: int = 4
) -> StereoFrame:
    """Left view plus a horizontally shifted right view and a textured depth map."""
    left = make_frame(rng, width, height)
    right = Frame(
        y=np.roll(left.y, -disparity, axis=1),
        u=np.roll(left.u, -disparity // 2, axis=1),
        v=np.roll(left.v, -disparity // 2, axis=1),
    )
    depth = textured_plane(rng, height, width, amplitude=40.0, noise=8.0)
    return StereoFrame(left=left, right=right, depth=depth)


def make_sequence(
    label: str,
    width: int = 64,
    height: int = 64,
    frames: int = 2,
    seed: int = 0,
    disparity: int = 4,
) -> StereoSequence:
    rng = np.random.default_rng(seed)
    stereo = [make_stereo_frame(rng, width, height, disparity) for _ in range(frames)]
    return StereoSequence.from_frames(label, stereo, fps=30.0)


def write_sequence_files(directory: Path, seq: StereoSequence) -> ManifestEntry:
    """Materialize a sequence as raw files and return its manifest entry."""
    directory.mkdir(parents=True, exist_ok=True)
    left = directory / f"{seq.label}_left.yuv"
    right = directory / f"{seq.label}_right.yuv"
    depth = directory / f"{seq.label}_depth.yuv"
    write_yuv420_sequence(left, (sf.left for sf in seq.iter_frames()))
    write_yuv420_sequence(right, (sf.right for sf in seq.iter_frames()))
    write_depth_sequence(depth, (sf.depth for sf in seq.iter_frames()))
    return ManifestEntry(
        label=seq.label,
        left_path=left,
        right_path=right,
        depth_path=depth,
        width=seq.width,
        height=seq.height,
        fps=seq.fps,
        frame_count=seq.frame_count,
    )


def write_corpus(directory: Path, sequences: list[StereoSequence]) -> Path:
    """Write sequences plus a manifest; returns the manifest path."""
    entries = [write_sequence_files(directory, seq) for seq in sequences]
    manifest_path = directory / "manifest.txt"
    write_manifest(manifest_path, entries)
    return manifest_path


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
