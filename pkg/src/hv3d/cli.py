"""Command-line front end.

Subcommands:

* ``score``      score one distorted sequence against its reference
* ``distort``    build a distorted corpus plus manifest from a spec file
* ``calibrate``  refit combination weights against a MOS table
* ``evaluate``   correlation statistics for a finished score set
* ``dump-mask``  print the contrast sensitivity mask as CSV

Exit codes: 0 success, 2 configuration problems, 3 ingestion problems
(missing or broken input files), 4 computation problems. All output files
are written to a temporary name and renamed into place, so a crashed run
never leaves a half-written report.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

from .aggregate import (
    DEFAULT_BETA,
    DEFAULT_BLOCK_SIZE,
    DEFAULT_SEARCH,
    DEFAULT_WEIGHTS,
    HV3DScorer,
    SequenceScore,
    Weights,
)
from .cyclopean import build_csf_mask
from .depth import DEFAULT_FOVEA
from .distortions import apply_distortion, load_distortion_specs
from .errors import (
    CalibrationError,
    ConfigError,
    EvaluationError,
    Hv3dError,
    IngestionError,
)
from .evaluation import (
    FeatureRow,
    fit_weights,
    load_mos_csv,
    load_scores_csv,
    logistic_curve,
    logistic_fit,
    spearman,
)
from .video_io import (
    Manifest,
    ManifestEntry,
    StereoSequence,
    load_manifest,
    write_manifest,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INGEST = 3
EXIT_COMPUTE = 4

REPORT_COLUMNS = (
    "frame",
    "vif_y_l",
    "vif_u_l",
    "vif_v_l",
    "vif_y_r",
    "vif_u_r",
    "vif_v_r",
    "q_rl",
    "q_d",
    "hv3d",
)

PROFILES = {"hd": (16, 64), "sd": (8, 32)}


def _atomic_write_text(path: Path, text: str) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
                f.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise IngestionError(f"{path}: write failed: {exc}") from exc


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


@dataclass(frozen=True)
class RunConfig:
    """Scoring knobs assembled from CLI flags; a profile fills the defaults."""

    block_size: int = DEFAULT_BLOCK_SIZE
    fovea: int = DEFAULT_FOVEA
    beta: float = DEFAULT_BETA
    search_x: int = DEFAULT_SEARCH[0]
    search_y: int = DEFAULT_SEARCH[1]
    matching_cost: str = "sad"
    weights: Weights = DEFAULT_WEIGHTS

    def __post_init__(self) -> None:
        if self.block_size not in (8, 16):
            raise ConfigError(f"unsupported block size {self.block_size}; expected 8 or 16")
        if self.fovea < self.block_size:
            raise ConfigError(f"fovea {self.fovea} smaller than block size {self.block_size}")
        if self.beta <= 0:
            raise ConfigError(f"beta must be positive, got {self.beta}")
        if self.search_x < 0 or self.search_y < 0:
            raise ConfigError("search ranges must be non-negative")

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        block_size, fovea = DEFAULT_BLOCK_SIZE, DEFAULT_FOVEA
        if getattr(args, "profile", None):
            block_size, fovea = PROFILES[args.profile]
        if getattr(args, "block_size", None) is not None:
            block_size = args.block_size
        if getattr(args, "fovea", None) is not None:
            fovea = args.fovea
        weights = DEFAULT_WEIGHTS
        if getattr(args, "weights", None):
            weights = _parse_weights(args.weights)
        return cls(
            block_size=block_size,
            fovea=fovea,
            beta=args.beta if getattr(args, "beta", None) is not None else DEFAULT_BETA,
            search_x=args.search_x if getattr(args, "search_x", None) is not None else DEFAULT_SEARCH[0],
            search_y=args.search_y if getattr(args, "search_y", None) is not None else DEFAULT_SEARCH[1],
            matching_cost=getattr(args, "matching_cost", None) or "sad",
            weights=weights,
        )

    def scorer(self) -> HV3DScorer:
        w = self.weights
        return HV3DScorer(
            block_size=self.block_size,
            fovea=self.fovea,
            beta=self.beta,
            search_x=self.search_x,
            search_y=self.search_y,
            matching_cost=self.matching_cost,
            w1=w.w1,
            w2=w.w2,
            w3=w.w3,
            w4=w.w4,
        )


def _parse_weights(text: str) -> Weights:
    """Accept either 'w1,w2,w3,w4' inline or a path to a weights JSON file."""
    if "," in text:
        parts = text.split(",")
        if len(parts) != 4:
            raise ConfigError(f"expected 4 comma-separated weights, got {len(parts)}")
        try:
            return Weights.from_array([float(p) for p in parts])
        except ValueError as exc:
            raise ConfigError(f"bad weight value in {text!r}: {exc}") from exc
    path = Path(text)
    if not path.is_file():
        raise ConfigError(f"weights {text!r} is neither a 4-tuple nor an existing file")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
        return Weights(
            w1=float(payload["w1"]),
            w2=float(payload["w2"]),
            w3=float(payload["w3"]),
            w4=float(payload["w4"]),
        )
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: bad weights file: {exc}") from exc


def _split_label(label: str) -> tuple[str, str]:
    base, sep, distortion = label.partition("__")
    return (base, distortion) if sep else (label, "none")


def _report_rows(score: SequenceScore) -> list[list]:
    rows = []
    for index, b in enumerate(score.breakdowns):
        rows.append(
            [
                index,
                b.vif_y_left,
                b.vif_u_left,
                b.vif_v_left,
                b.vif_y_right,
                b.vif_u_right,
                b.vif_v_right,
                b.q_rl,
                b.q_d,
                b.hv3d,
            ]
        )
    return rows


def _append_score_row(path: Path, label: str, pooled: float) -> None:
    """Accumulate pooled scores across runs; rewritten atomically each time."""
    path = Path(path)
    rows: list[list[str]] = []
    if path.is_file():
        existing = load_scores_csv(path)
        rows = [[r.label, r.distortion, repr(r.score)] for r in existing]
    base, distortion = _split_label(label)
    rows.append([base, distortion, repr(pooled)])
    _atomic_write_text(path, _csv_text(("label", "distortion", "score"), rows))


def cmd_score(args: argparse.Namespace) -> int:
    config = RunConfig.from_args(args)
    manifest = load_manifest(args.manifest)
    ref = StereoSequence.from_entry(manifest.get(args.ref))
    dist = StereoSequence.from_entry(manifest.get(args.dist))
    score = config.scorer().score_sequence(ref, dist)
    _atomic_write_text(Path(args.out), _csv_text(REPORT_COLUMNS, _report_rows(score)))
    if args.scores_csv:
        _append_score_row(Path(args.scores_csv), dist.label, score.pooled)
    print(f"ref={args.ref} dist={args.dist} frames={len(score)} pooled_hv3d={score.pooled!r}")
    return EXIT_OK


def _write_pair_files(seq: StereoSequence, left_path: Path, right_path: Path) -> None:
    """Stream one pass over the frames into both view files, then rename."""
    fd_l, tmp_l = tempfile.mkstemp(dir=left_path.parent, prefix=f".{left_path.name}.")
    fd_r, tmp_r = tempfile.mkstemp(dir=right_path.parent, prefix=f".{right_path.name}.")
    try:
        with os.fdopen(fd_l, "wb") as fl, os.fdopen(fd_r, "wb") as fr:
            for frame in seq.iter_frames():
                fl.write(frame.left.y.tobytes())
                fl.write(frame.left.u.tobytes())
                fl.write(frame.left.v.tobytes())
                fr.write(frame.right.y.tobytes())
                fr.write(frame.right.u.tobytes())
                fr.write(frame.right.v.tobytes())
        os.replace(tmp_l, left_path)
        os.replace(tmp_r, right_path)
    except BaseException as exc:
        for tmp in (tmp_l, tmp_r):
            if os.path.exists(tmp):
                os.unlink(tmp)
        if isinstance(exc, OSError):
            raise IngestionError(f"{left_path.parent}: write failed: {exc}") from exc
        raise


def _external_entry(entry: ManifestEntry, spec, label: str, spec_dir: Path) -> ManifestEntry:
    source = Path(spec.source_dir)
    if not source.is_absolute():
        source = spec_dir / source
    left = source / f"{label}_left.yuv"
    right = source / f"{label}_right.yuv"
    depth = source / f"{label}_depth.yuv"
    if not depth.is_file():
        depth = entry.depth_path
    needed = entry.width * entry.height * 3 // 2 * entry.frame_count
    for path in (left, right):
        if not path.is_file():
            raise IngestionError(f"{path}: external distortion file missing")
        if os.path.getsize(path) < needed:
            raise IngestionError(
                f"{path}: external file too short: need {needed} bytes,"
                f" have {os.path.getsize(path)}"
            )
    return ManifestEntry(
        label=label,
        left_path=left,
        right_path=right,
        depth_path=depth,
        width=entry.width,
        height=entry.height,
        fps=entry.fps,
        frame_count=entry.frame_count,
    )


def cmd_distort(args: argparse.Namespace) -> int:
    manifest = load_manifest(args.manifest)
    specs = load_distortion_specs(args.spec)
    spec_dir = Path(args.spec).parent
    out_dir = Path(args.out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IngestionError(f"{out_dir}: cannot create: {exc}") from exc

    new_entries: list[ManifestEntry] = list(manifest)
    written = 0
    for entry in manifest:
        if "__" in entry.label:
            raise ConfigError(f"reference label {entry.label!r} must not contain '__'")
        for spec in specs:
            label = f"{entry.label}__{spec.name}"
            if spec.kind == "external":
                new_entries.append(_external_entry(entry, spec, label, spec_dir))
                continue
            distorted = apply_distortion(StereoSequence.from_entry(entry), spec, args.seed)
            left_path = out_dir / f"{label}_left.yuv"
            right_path = out_dir / f"{label}_right.yuv"
            _write_pair_files(distorted, left_path, right_path)
            new_entries.append(
                ManifestEntry(
                    label=label,
                    left_path=left_path,
                    right_path=right_path,
                    depth_path=entry.depth_path,
                    width=entry.width,
                    height=entry.height,
                    fps=entry.fps,
                    frame_count=entry.frame_count,
                )
            )
            written += 1

    manifest_path = out_dir / "manifest.txt"
    tmp_path = out_dir / f".manifest.{os.getpid()}.tmp"
    write_manifest(tmp_path, new_entries)
    os.replace(tmp_path, manifest_path)
    print(
        f"references={len(manifest)} distortions={len(specs)}"
        f" distorted={len(new_entries) - len(manifest)} written={written}"
    )
    print(f"manifest={manifest_path}")
    return EXIT_OK


def _calibration_pairs(manifest: Manifest, mos_records) -> list[tuple[str, str, float]]:
    labels = set(manifest.labels())
    seen: dict[tuple[str, str], float] = {}
    for record in mos_records:
        key = (record.label, record.distortion)
        if key in seen:
            raise CalibrationError(f"duplicate MOS row for {record.label}/{record.distortion}")
        seen[key] = record.mos
    missing = [
        entry.label
        for entry in manifest
        if "__" in entry.label and tuple(entry.label.split("__", 1)) not in seen
    ]
    if missing:
        raise CalibrationError(f"missing MOS row(s) for: {', '.join(sorted(missing))}")
    pairs = []
    for (label, distortion), mos in seen.items():
        dist_label = f"{label}__{distortion}"
        for needed in (label, dist_label):
            if needed not in labels:
                raise CalibrationError(f"MOS table references unknown sequence {needed!r}")
        pairs.append((label, dist_label, mos))
    return pairs


def cmd_calibrate(args: argparse.Namespace) -> int:
    config = RunConfig.from_args(args)
    manifest = load_manifest(args.manifest)
    mos_records = load_mos_csv(args.mos)
    pairs = _calibration_pairs(manifest, mos_records)

    scorer = config.scorer()
    rows: list[tuple[str, str, FeatureRow]] = []
    for ref_label, dist_label, mos in pairs:
        ref = StereoSequence.from_entry(manifest.get(ref_label))
        dist = StereoSequence.from_entry(manifest.get(dist_label))
        sequence_score = scorer.score_sequence(ref, dist)
        rows.append((ref_label, dist_label, FeatureRow.from_sequence(sequence_score, mos)))

    weights = fit_weights([row for _, _, row in rows])
    weights_payload = json.dumps(
        {"w1": weights.w1, "w2": weights.w2, "w3": weights.w3, "w4": weights.w4}, indent=2
    )
    _atomic_write_text(Path(args.weights_out), weights_payload + "\n")

    report_rows = []
    squared = 0.0
    for ref_label, dist_label, row in rows:
        score = (
            weights.w1 * row.f1 + weights.w2 * row.f2 + weights.w3 * row.f3 + weights.w4 * row.f4
        )
        residual = score - row.target
        squared += residual * residual
        _, distortion = _split_label(dist_label)
        report_rows.append(
            [ref_label, distortion, repr(score), repr(row.target * 10.0), repr(row.target), repr(residual)]
        )
    _atomic_write_text(
        Path(args.report_out),
        _csv_text(("label", "distortion", "score", "mos", "target", "residual"), report_rows),
    )
    rmse = (squared / len(rows)) ** 0.5
    print(
        f"w1={weights.w1!r} w2={weights.w2!r} w3={weights.w3!r} w4={weights.w4!r}"
        f" rmse={rmse!r} rows={len(rows)}"
    )
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    score_records = load_scores_csv(args.scores)
    mos_index = {(r.label, r.distortion): r.mos for r in load_mos_csv(args.mos)}
    matched = [
        (record.score, mos_index[(record.label, record.distortion)])
        for record in score_records
        if (record.label, record.distortion) in mos_index
    ]
    if not matched:
        raise EvaluationError("no (label, distortion) overlap between scores and MOS")
    scores = [m[0] for m in matched]
    mos = [m[1] for m in matched]

    print(f"pairs={len(matched)}")
    print(f"spearman={spearman(scores, mos)!r}")

    try:
        fit = logistic_fit(scores, mos)
        fitted = fit.fitted
        print(f"logistic_a={fit.a!r} logistic_b={fit.b!r} logistic_c={fit.c!r} logistic_d={fit.d!r}")
        print(f"logistic_rmse={fit.rmse!r}")
        print(f"pearson={fit.pearson!r}")
        if fit.degenerate:
            print("degenerate=true (flat MOS curve)")
    except EvaluationError as exc:
        if not hasattr(exc, "best_params"):
            raise
        # Keep the Spearman result useful even when the curve fit stalls:
        # report the best-so-far parameters instead of failing the run.
        params = exc.best_params
        fitted = logistic_curve(params, scores)
        print(f"warning: {exc}", file=sys.stderr)
        print(
            f"logistic_a={params[0]!r} logistic_b={params[1]!r}"
            f" logistic_c={params[2]!r} logistic_d={params[3]!r} (not converged)"
        )

    if args.out:
        rows = [
            [repr(s), repr(m), repr(float(f))] for (s, m), f in zip(matched, fitted)
        ]
        _atomic_write_text(Path(args.out), _csv_text(("score", "mos", "fitted"), rows))
    return EXIT_OK


def cmd_dump_mask(args: argparse.Namespace) -> int:
    mask = build_csf_mask(args.block_size)
    rows = [[repr(float(v)) for v in row] for row in mask.weights]
    text = _csv_text([f"c{i}" for i in range(mask.size)], rows)
    mean_line = f"mask_size={mask.size} mask_mean={float(mask.weights.mean())!r}"
    if args.out:
        _atomic_write_text(Path(args.out), text)
        print(mean_line)
    else:
        sys.stdout.write(text)
        print(mean_line, file=sys.stderr)
    return EXIT_OK


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--weights", help="'w1,w2,w3,w4' or a weights JSON file")
    parser.add_argument("--beta", type=float, help="depth-fidelity exponent (default 0.7)")
    parser.add_argument("--block-size", type=int, help="fusion block size, 8 or 16")
    parser.add_argument("--fovea", type=int, help="depth variance window size")
    parser.add_argument("--search-x", type=int, help="horizontal matching range (default 64)")
    parser.add_argument("--search-y", type=int, help="vertical matching range (default 4)")
    parser.add_argument(
        "--matching-cost", choices=("sad", "mse"), help="block matching cost (default sad)"
    )
    parser.add_argument(
        "--profile",
        choices=tuple(PROFILES),
        help="hd: 16px blocks / 64px fovea; sd: 8px blocks / 32px fovea",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hv3d", description="Full-reference stereoscopic video quality assessment."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="score a distorted sequence against its reference")
    p.add_argument("--manifest", required=True)
    p.add_argument("--ref", required=True, help="reference sequence label")
    p.add_argument("--dist", required=True, help="distorted sequence label")
    p.add_argument("--out", required=True, help="per-frame report CSV")
    p.add_argument("--scores-csv", help="append the pooled score to this CSV")
    _add_config_flags(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("distort", help="build a distorted corpus from a spec file")
    p.add_argument("--manifest", required=True)
    p.add_argument("--spec", required=True, help="distortion spec JSON")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, help="fallback seed for noise entries without one")
    p.set_defaults(func=cmd_distort)

    p = sub.add_parser("calibrate", help="refit combination weights against MOS")
    p.add_argument("--manifest", required=True)
    p.add_argument("--mos", required=True, help="CSV with label,distortion,mos")
    p.add_argument("--weights-out", required=True, help="fitted weights JSON")
    p.add_argument("--report-out", required=True, help="per-sequence residual CSV")
    _add_config_flags(p)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("evaluate", help="correlation statistics for a score set")
    p.add_argument("--scores", required=True, help="CSV with label,distortion,score")
    p.add_argument("--mos", required=True, help="CSV with label,distortion,mos")
    p.add_argument("--out", help="plot-ready CSV of score,mos,fitted")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("dump-mask", help="print the contrast sensitivity mask")
    p.add_argument("--block-size", type=int, default=8)
    p.add_argument("--out", help="write CSV here instead of stdout")
    p.set_defaults(func=cmd_dump_mask)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IngestionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INGEST
    except Hv3dError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main(None))
