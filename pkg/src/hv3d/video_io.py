"""Raw video ingestion and the frame/sequence data model.

All pixel data is 8-bit planar. A video frame is YUV 4:2:0: a full-resolution
luma plane followed by the half-resolution U and V planes. A depth map is a
single full-resolution plane. Files are headerless and frame-sequential, so
frame ``k`` of a W x H video starts at byte ``k * W * H * 3 / 2`` (``k * W * H``
for depth).

A dataset is described by a manifest: a UTF-8 text file with one record per
sequence. Records are blocks of ``key: value`` lines separated by blank lines;
``#`` starts a comment. Every record carries the eight required keys::

    label: soccer2
    left: soccer2_left.yuv
    right: soccer2_right.yuv
    depth: soccer2_depth.yuv
    width: 1920
    height: 1080
    fps: 30
    frames: 120

Relative paths resolve against the manifest's own directory. Sequences are
streamed frame by frame; nothing here ever holds a whole video in memory.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .errors import ConfigError, ContractError, IngestionError, ManifestError
from .validation import check_uint8

MANIFEST_FIELDS = ("label", "left", "right", "depth", "width", "height", "fps", "frames")


@dataclass(frozen=True)
class Frame:
    """One decoded YUV 4:2:0 frame; chroma planes are half size in both axes."""

    y: np.ndarray
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self) -> None:
        for name in ("y", "u", "v"):
            plane = getattr(self, name)
            if not isinstance(plane, np.ndarray) or plane.ndim != 2:
                raise ContractError(f"frame plane {name} must be a 2-D array")
            check_uint8(plane, f"frame plane {name}")
        h, w = self.y.shape
        if h % 2 or w % 2:
            raise ContractError(f"luma dimensions must be even for 4:2:0, got {w}x{h}")
        expected = (h // 2, w // 2)
        if self.u.shape != expected or self.v.shape != expected:
            raise ContractError(
                f"chroma planes must be {expected}, got u={self.u.shape} v={self.v.shape}"
            )

    @property
    def width(self) -> int:
        return self.y.shape[1]

    @property
    def height(self) -> int:
        return self.y.shape[0]


@dataclass(frozen=True)
class StereoFrame:
    """A left/right frame pair plus the per-pixel depth map for the same instant."""

    left: Frame
    right: Frame
    depth: np.ndarray

    def __post_init__(self) -> None:
        if self.left.y.shape != self.right.y.shape:
            raise ContractError(
                f"left and right views differ: {self.left.y.shape} vs {self.right.y.shape}"
            )
        if not isinstance(self.depth, np.ndarray) or self.depth.ndim != 2:
            raise ContractError("depth must be a 2-D array")
        check_uint8(self.depth, "depth")
        if self.depth.shape != self.left.y.shape:
            raise ContractError(
                f"depth dimensions {self.depth.shape} do not match luma {self.left.y.shape}"
            )

    @property
    def width(self) -> int:
        return self.left.width

    @property
    def height(self) -> int:
        return self.left.height


def _check_geometry(width: int, height: int, frame_count: int) -> None:
    if width <= 0 or height <= 0:
        raise ConfigError(f"dimensions must be positive, got {width}x{height}")
    if width % 2 or height % 2:
        raise ConfigError(f"4:2:0 requires even dimensions, got {width}x{height}")
    if frame_count < 1:
        raise ConfigError(f"frame count must be at least 1, got {frame_count}")


def _check_file_length(path: Path, frame_bytes: int, frame_count: int, kind: str) -> None:
    if not path.is_file():
        raise IngestionError(f"{path}: no such file")
    size = os.path.getsize(path)
    needed = frame_bytes * frame_count
    if size < needed:
        raise IngestionError(
            f"{path}: {kind} file truncated: need {needed} bytes for {frame_count} frames,"
            f" file ends at byte {size} (inside frame {size // frame_bytes})"
        )


def read_yuv420_sequence(path, width: int, height: int, frame_count: int) -> Iterator[Frame]:
    """Stream ``frame_count`` frames from a headerless planar YUV 4:2:0 file.

    Geometry problems raise ConfigError; missing or short files raise
    IngestionError before the first frame is yielded.
    """
    path = Path(path)
    _check_geometry(width, height, frame_count)
    luma = width * height
    chroma = luma // 4
    frame_bytes = luma * 3 // 2
    _check_file_length(path, frame_bytes, frame_count, "video")

    def frames() -> Iterator[Frame]:
        with open(path, "rb") as f:
            for index in range(frame_count):
                buf = f.read(frame_bytes)
                if len(buf) < frame_bytes:
                    raise IngestionError(
                        f"{path}: short read at byte {index * frame_bytes + len(buf)}"
                        f" (frame {index})"
                    )
                raw = np.frombuffer(buf, dtype=np.uint8)
                yield Frame(
                    y=raw[:luma].reshape(height, width).copy(),
                    u=raw[luma : luma + chroma].reshape(height // 2, width // 2).copy(),
                    v=raw[luma + chroma :].reshape(height // 2, width // 2).copy(),
                )

    return frames()


def read_depth_sequence(path, width: int, height: int, frame_count: int) -> Iterator[np.ndarray]:
    """Stream ``frame_count`` single-plane 8-bit depth maps from a raw file."""
    path = Path(path)
    _check_geometry(width, height, frame_count)
    frame_bytes = width * height
    _check_file_length(path, frame_bytes, frame_count, "depth")

    def planes() -> Iterator[np.ndarray]:
        with open(path, "rb") as f:
            for index in range(frame_count):
                buf = f.read(frame_bytes)
                if len(buf) < frame_bytes:
                    raise IngestionError(
                        f"{path}: short read at byte {index * frame_bytes + len(buf)}"
                        f" (frame {index})"
                    )
                yield np.frombuffer(buf, dtype=np.uint8).reshape(height, width).copy()

    return planes()


def write_yuv420_sequence(path, frames: Iterable[Frame]) -> int:
    """Write frames as headerless planar YUV 4:2:0; returns the frame count."""
    path = Path(path)
    count = 0
    try:
        with open(path, "wb") as f:
            for frame in frames:
                f.write(frame.y.tobytes())
                f.write(frame.u.tobytes())
                f.write(frame.v.tobytes())
                count += 1
    except OSError as exc:
        raise IngestionError(f"{path}: write failed: {exc}") from exc
    return count


def write_depth_sequence(path, planes: Iterable[np.ndarray]) -> int:
    """Write 8-bit depth planes back to back; returns the plane count."""
    path = Path(path)
    count = 0
    try:
        with open(path, "wb") as f:
            for plane in planes:
                check_uint8(plane, "depth plane")
                f.write(plane.tobytes())
                count += 1
    except OSError as exc:
        raise IngestionError(f"{path}: write failed: {exc}") from exc
    return count


@dataclass(frozen=True)
class ManifestEntry:
    label: str
    left_path: Path
    right_path: Path
    depth_path: Path
    width: int
    height: int
    fps: float
    frame_count: int


@dataclass(frozen=True)
class Manifest:
    """An ordered set of sequence records with unique labels."""

    path: Path
    entries: tuple[ManifestEntry, ...]

    def __iter__(self) -> Iterator[ManifestEntry]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def labels(self) -> list[str]:
        return [e.label for e in self.entries]

    def get(self, label: str) -> ManifestEntry:
        for entry in self.entries:
            if entry.label == label:
                return entry
        raise ConfigError(f"label {label!r} not present in {self.path}")


def _parse_record(block: list[tuple[int, str, str]], path: Path, index: int) -> dict[str, str]:
    record: dict[str, str] = {}
    for lineno, key, value in block:
        if key not in MANIFEST_FIELDS:
            raise ManifestError(f"{path}:{lineno}: unknown manifest key {key!r}")
        if key in record:
            raise ManifestError(f"{path}:{lineno}: duplicate key {key!r} in record {index}")
        record[key] = value
    missing = [k for k in MANIFEST_FIELDS if k not in record]
    if missing:
        name = record.get("label", f"record {index}")
        raise ManifestError(f"{path}: {name}: missing field(s) {', '.join(missing)}")
    return record


def _entry_from_record(record: dict[str, str], path: Path, index: int) -> ManifestEntry:
    label = record["label"]
    try:
        width = int(record["width"])
        height = int(record["height"])
        frames = int(record["frames"])
        fps = float(record["fps"])
    except ValueError as exc:
        raise ManifestError(f"{path}: {label}: non-numeric field: {exc}") from exc
    if width <= 0 or height <= 0:
        raise ManifestError(f"{path}: {label}: dimensions must be positive, got {width}x{height}")
    if frames < 1:
        raise ManifestError(f"{path}: {label}: frames must be at least 1, got {frames}")
    if fps <= 0:
        raise ManifestError(f"{path}: {label}: fps must be positive, got {fps}")
    base = path.parent
    paths = {}
    for key in ("left", "right", "depth"):
        p = Path(record[key])
        if not p.is_absolute():
            p = base / p
        if not p.is_file():
            raise ManifestError(f"{path}: {label}: {key} file does not exist: {p}")
        paths[key] = p
    return ManifestEntry(
        label=label,
        left_path=paths["left"],
        right_path=paths["right"],
        depth_path=paths["depth"],
        width=width,
        height=height,
        fps=fps,
        frame_count=frames,
    )


def load_manifest(path) -> Manifest:
    """Parse a dataset manifest, resolving paths and rejecting broken records."""
    path = Path(path)
    if not path.is_file():
        raise IngestionError(f"{path}: no such manifest")
    blocks: list[list[tuple[int, str, str]]] = []
    current: list[tuple[int, str, str]] = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            if current:
                blocks.append(current)
                current = []
            continue
        if ":" not in text:
            raise ManifestError(f"{path}:{lineno}: expected 'key: value', got {line!r}")
        key, _, value = text.partition(":")
        current.append((lineno, key.strip(), value.strip()))
    if current:
        blocks.append(current)
    if not blocks:
        raise ManifestError(f"{path}: manifest holds no records")

    entries = []
    seen: set[str] = set()
    for index, block in enumerate(blocks):
        record = _parse_record(block, path, index)
        entry = _entry_from_record(record, path, index)
        if entry.label in seen:
            raise ManifestError(f"{path}: duplicate label {entry.label!r}")
        seen.add(entry.label)
        entries.append(entry)
    return Manifest(path=path, entries=tuple(entries))


def write_manifest(path, entries: Sequence[ManifestEntry]) -> None:
    """Write records in manifest format, with paths relative to the manifest."""
    path = Path(path)
    base = path.parent.resolve()

    def rel(p: Path) -> str:
        try:
            return os.path.relpath(p.resolve(), base)
        except ValueError:
            return str(p)

    lines: list[str] = []
    for entry in entries:
        lines.append(f"label: {entry.label}")
        lines.append(f"left: {rel(entry.left_path)}")
        lines.append(f"right: {rel(entry.right_path)}")
        lines.append(f"depth: {rel(entry.depth_path)}")
        lines.append(f"width: {entry.width}")
        lines.append(f"height: {entry.height}")
        fps = entry.fps
        lines.append(f"fps: {int(fps) if float(fps).is_integer() else fps}")
        lines.append(f"frames: {entry.frame_count}")
        lines.append("")
    try:
        path.write_text("\n".join(lines), encoding="utf-8")
    except OSError as exc:
        raise IngestionError(f"{path}: write failed: {exc}") from exc


class StereoSequence:
    """Paired left/right video streams plus a depth stream, streamed on demand.

    ``iter_frames`` re-reads the underlying source on every call, so a
    sequence can be scored, distorted, and written out repeatedly without
    keeping frames around.
    """

    def __init__(
        self,
        label: str,
        width: int,
        height: int,
        fps: float,
        frame_count: int,
        source: Callable[[], Iterator[StereoFrame]],
    ) -> None:
        if frame_count < 1:
            raise ConfigError(f"frame count must be at least 1, got {frame_count}")
        self.label = label
        self.width = width
        self.height = height
        self.fps = fps
        self.frame_count = frame_count
        self._source = source

    def iter_frames(self) -> Iterator[StereoFrame]:
        produced = 0
        for frame in self._source():
            if frame.width != self.width or frame.height != self.height:
                raise ContractError(
                    f"{self.label}: frame {produced} is {frame.width}x{frame.height},"
                    f" sequence is {self.width}x{self.height}"
                )
            produced += 1
            if produced > self.frame_count:
                raise ContractError(f"{self.label}: source yielded more than {self.frame_count} frames")
            yield frame
        if produced != self.frame_count:
            raise IngestionError(
                f"{self.label}: source yielded {produced} of {self.frame_count} frames"
            )

    def map_frames(self, fn: Callable[[int, StereoFrame], StereoFrame], label: str | None = None) -> "StereoSequence":
        """Derived sequence applying ``fn(index, frame)`` lazily during iteration."""
        inner = self

        def source() -> Iterator[StereoFrame]:
            for index, frame in enumerate(inner.iter_frames()):
                yield fn(index, frame)

        return StereoSequence(
            label=label if label is not None else self.label,
            width=self.width,
            height=self.height,
            fps=self.fps,
            frame_count=self.frame_count,
            source=source,
        )

    @classmethod
    def from_files(
        cls,
        label: str,
        left_path,
        right_path,
        depth_path,
        width: int,
        height: int,
        fps: float,
        frame_count: int,
    ) -> "StereoSequence":
        def source() -> Iterator[StereoFrame]:
            lefts = read_yuv420_sequence(left_path, width, height, frame_count)
            rights = read_yuv420_sequence(right_path, width, height, frame_count)
            depths = read_depth_sequence(depth_path, width, height, frame_count)
            for left, right, depth in zip(lefts, rights, depths):
                yield StereoFrame(left=left, right=right, depth=depth)

        return cls(label, width, height, fps, frame_count, source)

    @classmethod
    def from_entry(cls, entry: ManifestEntry) -> "StereoSequence":
        return cls.from_files(
            entry.label,
            entry.left_path,
            entry.right_path,
            entry.depth_path,
            entry.width,
            entry.height,
            entry.fps,
            entry.frame_count,
        )

    @classmethod
    def from_frames(cls, label: str, frames: Sequence[StereoFrame], fps: float = 30.0) -> "StereoSequence":
        if not frames:
            raise ContractError("a sequence needs at least one frame")
        first = frames[0]
        kept = tuple(frames)
        return cls(label, first.width, first.height, fps, len(kept), lambda: iter(kept))
