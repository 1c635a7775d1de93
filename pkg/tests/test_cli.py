"""End-to-end command-line runs against tiny synthetic corpora."""

import json
import subprocess
import sys

import numpy as np
import pytest

import hv3d
from hv3d.cli import main
from hv3d.evaluation import FeatureRow

from conftest import make_sequence, write_corpus, write_sequence_files

FAST = ["--search-x", "8", "--search-y", "2"]


def stdout_value(capsys, key):
    out = capsys.readouterr().out
    for token in out.split():
        if token.startswith(f"{key}="):
            return token[len(key) + 1 :]
    raise AssertionError(f"{key}= not found in output: {out!r}")


@pytest.fixture()
def corpus(tmp_path):
    sequences = [
        make_sequence("alpha", frames=2, seed=10),
        make_sequence("bravo", frames=2, seed=20),
    ]
    return write_corpus(tmp_path, sequences)


class TestDumpMask:
    def test_block_8_to_file(self, tmp_path, capsys):
        out = tmp_path / "mask.csv"
        assert main(["dump-mask", "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == ",".join(f"c{i}" for i in range(8))
        values = [float(v) for line in lines[1:] for v in line.split(",")]
        assert len(values) == 64
        assert abs(np.mean(values) - 1.0) < 1e-9
        assert "mask_size=8" in capsys.readouterr().out

    def test_block_16_to_stdout(self, capsys):
        assert main(["dump-mask", "--block-size", "16"]) == 0
        captured = capsys.readouterr()
        lines = captured.out.splitlines()
        values = [float(v) for line in lines[1:] for v in line.split(",")]
        assert len(values) == 256
        assert abs(np.mean(values) - 1.0) < 1e-9
        assert "mask_size=16" in captured.err

    def test_block_12_is_config_error(self, capsys):
        assert main(["dump-mask", "--block-size", "12"]) == 2
        assert "error:" in capsys.readouterr().err


class TestScore:
    def test_self_score_hits_nominal_value(self, corpus, tmp_path, capsys):
        out = tmp_path / "report.csv"
        code = main(
            ["score", "--manifest", str(corpus), "--ref", "alpha", "--dist", "alpha",
             "--out", str(out)] + FAST
        )
        assert code == 0
        pooled = float(stdout_value(capsys, "pooled_hv3d"))
        assert pooled == pytest.approx(0.9920, abs=1e-6)
        lines = out.read_text().splitlines()
        assert lines[0] == "frame,vif_y_l,vif_u_l,vif_v_l,vif_y_r,vif_u_r,vif_v_r,q_rl,q_d,hv3d"
        assert len(lines) == 3  # header + one row per frame
        last = lines[1].split(",")
        assert last[0] == "0"
        assert float(last[-1]) == pytest.approx(0.9920, abs=1e-6)

    def test_rerun_is_bit_identical(self, corpus, tmp_path, capsys):
        args = ["score", "--manifest", str(corpus), "--ref", "alpha", "--dist", "bravo"] + FAST
        first = tmp_path / "a.csv"
        second = tmp_path / "b.csv"
        assert main(args + ["--out", str(first)]) == 0
        out_a = capsys.readouterr().out
        assert main(args + ["--out", str(second)]) == 0
        out_b = capsys.readouterr().out
        assert first.read_bytes() == second.read_bytes()
        assert out_a == out_b

    def test_zero_weights_zero_score(self, corpus, tmp_path, capsys):
        out = tmp_path / "report.csv"
        code = main(
            ["score", "--manifest", str(corpus), "--ref", "alpha", "--dist", "alpha",
             "--out", str(out), "--weights", "0,0,0,0"] + FAST
        )
        assert code == 0
        assert float(stdout_value(capsys, "pooled_hv3d")) == 0.0

    def test_weights_file_override(self, corpus, tmp_path, capsys):
        weights_path = tmp_path / "w.json"
        weights_path.write_text(json.dumps({"w1": 0.07, "w2": 0.0604, "w3": 0.025, "w4": 0.06765}))
        out = tmp_path / "report.csv"
        code = main(
            ["score", "--manifest", str(corpus), "--ref", "alpha", "--dist", "alpha",
             "--out", str(out), "--weights", str(weights_path)] + FAST
        )
        assert code == 0
        assert float(stdout_value(capsys, "pooled_hv3d")) == pytest.approx(0.4960, abs=1e-6)

    def test_scores_csv_accumulates(self, corpus, tmp_path, capsys):
        scores_csv = tmp_path / "scores.csv"
        for dist in ("alpha", "bravo"):
            main(
                ["score", "--manifest", str(corpus), "--ref", "alpha", "--dist", dist,
                 "--out", str(tmp_path / f"{dist}.csv"), "--scores-csv", str(scores_csv)] + FAST
            )
        records = hv3d.load_scores_csv(scores_csv)
        assert [(r.label, r.distortion) for r in records] == [("alpha", "none"), ("bravo", "none")]
        assert records[0].score == pytest.approx(0.9920, abs=1e-6)

    def test_frame_count_mismatch_is_compute_error(self, tmp_path, capsys):
        manifest = write_corpus(
            tmp_path,
            [make_sequence("long", frames=2, seed=1), make_sequence("short", frames=1, seed=1)],
        )
        code = main(
            ["score", "--manifest", str(manifest), "--ref", "long", "--dist", "short",
             "--out", str(tmp_path / "r.csv")] + FAST
        )
        assert code == 4
        assert "frame" in capsys.readouterr().err

    def test_missing_manifest_is_ingest_error(self, tmp_path, capsys):
        code = main(
            ["score", "--manifest", str(tmp_path / "none.txt"), "--ref", "a", "--dist", "a",
             "--out", str(tmp_path / "r.csv")]
        )
        assert code == 3

    def test_unknown_label_is_config_error(self, corpus, tmp_path, capsys):
        code = main(
            ["score", "--manifest", str(corpus), "--ref", "alpha", "--dist", "zulu",
             "--out", str(tmp_path / "r.csv")]
        )
        assert code == 2
        assert "zulu" in capsys.readouterr().err

    def test_config_flag_validation(self, corpus, tmp_path, capsys):
        base = ["score", "--manifest", str(corpus), "--ref", "alpha", "--dist", "alpha",
                "--out", str(tmp_path / "r.csv")]
        assert main(base + ["--block-size", "12"]) == 2
        assert main(base + ["--fovea", "8"]) == 2
        assert main(base + ["--beta", "0"]) == 2
        capsys.readouterr()

    def test_sd_profile_matches_library(self, corpus, tmp_path, capsys):
        # fovea 32 on a 64 px plane leaves the relief ratio below one, so the
        # self-score lands under the nominal value; it must equal the library.
        out = tmp_path / "report.csv"
        code = main(
            ["score", "--manifest", str(corpus), "--ref", "alpha", "--dist", "alpha",
             "--out", str(out), "--profile", "sd"] + FAST
        )
        assert code == 0
        seq = hv3d.StereoSequence.from_entry(hv3d.load_manifest(corpus).get("alpha"))
        again = hv3d.StereoSequence.from_entry(hv3d.load_manifest(corpus).get("alpha"))
        expected = hv3d.HV3DScorer(
            block_size=8, fovea=32, search_x=8, search_y=2
        ).score_sequence(seq, again)
        pooled = float(stdout_value(capsys, "pooled_hv3d"))
        assert pooled == expected.pooled
        assert pooled < 0.9920

    def test_console_script_entry_point(self, corpus, tmp_path):
        result = subprocess.run(
            [sys.executable, "-m", "hv3d.cli", "score", "--manifest", str(corpus),
             "--ref", "alpha", "--dist", "alpha", "--out", str(tmp_path / "r.csv")] + FAST,
            capture_output=True,
            text=True,
        )
        assert result.returncode == 0
        assert "pooled_hv3d=" in result.stdout


def spec_file(tmp_path, entries):
    path = tmp_path / "distortions.json"
    path.write_text(json.dumps({"distortions": entries}))
    return path


class TestDistort:
    def test_corpus_expansion_and_rerun_identity(self, corpus, tmp_path, capsys):
        spec = spec_file(
            tmp_path,
            [
                {"name": "noisy", "kind": "gaussian_noise", "variance": 0.01, "seed": 3},
                {"name": "soft", "kind": "gaussian_blur"},
            ],
        )
        out_a = tmp_path / "out_a"
        out_b = tmp_path / "out_b"
        for out_dir in (out_a, out_b):
            assert main(
                ["distort", "--manifest", str(corpus), "--spec", str(spec),
                 "--out-dir", str(out_dir)]
            ) == 0
            captured = capsys.readouterr().out
            assert "references=2 distortions=2 distorted=4 written=4" in captured
        produced = sorted(p.name for p in out_a.glob("*.yuv"))
        assert produced == sorted(
            f"{label}__{name}_{view}.yuv"
            for label in ("alpha", "bravo")
            for name in ("noisy", "soft")
            for view in ("left", "right")
        )
        for name in produced:
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()
        new_manifest = hv3d.load_manifest(out_a / "manifest.txt")
        assert len(list(new_manifest)) == 6
        assert new_manifest.get("alpha__noisy").frame_count == 2

    def test_distorted_corpus_scores_lower(self, corpus, tmp_path, capsys):
        spec = spec_file(
            tmp_path, [{"name": "noisy", "kind": "gaussian_noise", "variance": 0.02, "seed": 1}]
        )
        out_dir = tmp_path / "out"
        assert main(
            ["distort", "--manifest", str(corpus), "--spec", str(spec), "--out-dir", str(out_dir)]
        ) == 0
        capsys.readouterr()
        assert main(
            ["score", "--manifest", str(out_dir / "manifest.txt"), "--ref", "alpha",
             "--dist", "alpha__noisy", "--out", str(tmp_path / "r.csv")] + FAST
        ) == 0
        assert float(stdout_value(capsys, "pooled_hv3d")) < 0.9

    def test_unknown_kind_is_config_error(self, corpus, tmp_path, capsys):
        spec = spec_file(tmp_path, [{"name": "x", "kind": "salt_and_pepper"}])
        code = main(
            ["distort", "--manifest", str(corpus), "--spec", str(spec),
             "--out-dir", str(tmp_path / "out")]
        )
        assert code == 2
        assert "kind" in capsys.readouterr().err

    def test_noise_without_seed_needs_fallback(self, corpus, tmp_path, capsys):
        spec = spec_file(tmp_path, [{"name": "noisy", "kind": "gaussian_noise"}])
        out_dir = tmp_path / "out"
        assert main(
            ["distort", "--manifest", str(corpus), "--spec", str(spec), "--out-dir", str(out_dir)]
        ) == 2
        assert "seed" in capsys.readouterr().err
        assert main(
            ["distort", "--manifest", str(corpus), "--spec", str(spec),
             "--out-dir", str(out_dir), "--seed", "11"]
        ) == 0

    def test_external_distortion_ingested(self, tmp_path, capsys):
        seq = make_sequence("scene", frames=1, seed=5)
        manifest = write_corpus(tmp_path, [seq])
        clips = tmp_path / "clips"
        clips.mkdir()
        entry = hv3d.load_manifest(manifest).get("scene")
        for view, path in (("left", entry.left_path), ("right", entry.right_path)):
            (clips / f"scene__coded_{view}.yuv").write_bytes(path.read_bytes())
        spec = spec_file(tmp_path, [{"name": "coded", "kind": "external", "source_dir": "clips"}])
        out_dir = tmp_path / "out"
        assert main(
            ["distort", "--manifest", str(manifest), "--spec", str(spec),
             "--out-dir", str(out_dir)]
        ) == 0
        capsys.readouterr()
        assert main(
            ["score", "--manifest", str(out_dir / "manifest.txt"), "--ref", "scene",
             "--dist", "scene__coded", "--out", str(tmp_path / "r.csv")] + FAST
        ) == 0
        # Byte-identical external files score as the identity.
        assert float(stdout_value(capsys, "pooled_hv3d")) == pytest.approx(0.9920, abs=1e-6)

    def test_external_missing_file_is_ingest_error(self, corpus, tmp_path, capsys):
        spec = spec_file(
            tmp_path, [{"name": "coded", "kind": "external", "source_dir": "missing"}]
        )
        code = main(
            ["distort", "--manifest", str(corpus), "--spec", str(spec),
             "--out-dir", str(tmp_path / "out")]
        )
        assert code == 3
        assert "missing" in capsys.readouterr().err

    def test_distorted_reference_label_rejected(self, tmp_path, capsys):
        seq = make_sequence("bad__name", frames=1)
        manifest = write_corpus(tmp_path, [seq])
        spec = spec_file(tmp_path, [{"name": "soft", "kind": "gaussian_blur"}])
        code = main(
            ["distort", "--manifest", str(manifest), "--spec", str(spec),
             "--out-dir", str(tmp_path / "out")]
        )
        assert code == 2


class TestCalibrate:
    def build_calibration_corpus(self, tmp_path):
        specs = [
            {"name": "noise_low", "kind": "gaussian_noise", "variance": 0.002, "seed": 1},
            {"name": "noise_high", "kind": "gaussian_noise", "variance": 0.02, "seed": 2},
            {"name": "noise_luma", "kind": "gaussian_noise", "variance": 0.01, "seed": 3,
             "planes": "luma"},
            {"name": "soft", "kind": "gaussian_blur", "kernel_size": 4, "sigma": 4.0},
            {"name": "bright", "kind": "mean_shift", "delta": 30},
        ]
        manifest = write_corpus(tmp_path, [make_sequence("scene", frames=1, seed=9)])
        spec = spec_file(tmp_path, specs)
        out_dir = tmp_path / "out"
        assert main(
            ["distort", "--manifest", str(manifest), "--spec", str(spec),
             "--out-dir", str(out_dir)]
        ) == 0
        return out_dir / "manifest.txt", [s["name"] for s in specs]

    def mos_from_default_weights(self, manifest_path, names):
        manifest = hv3d.load_manifest(manifest_path)
        scorer = hv3d.HV3DScorer(search_x=8, search_y=2)
        rows = ["label,distortion,mos"]
        for name in names:
            ref = hv3d.StereoSequence.from_entry(manifest.get("scene"))
            dist = hv3d.StereoSequence.from_entry(manifest.get(f"scene__{name}"))
            score = scorer.score_sequence(ref, dist)
            row = FeatureRow.from_sequence(score, mos=5.0)  # placeholder target
            mos = 10.0 * (
                0.14 * row.f1 + 0.1208 * row.f2 + 0.05 * row.f3 + 0.1353 * row.f4
            )
            rows.append(f"scene,{name},{mos!r}")
        return "\n".join(rows) + "\n"

    def test_closed_loop_recovers_default_weights(self, tmp_path, capsys):
        manifest_path, names = self.build_calibration_corpus(tmp_path)
        mos_path = tmp_path / "mos.csv"
        mos_path.write_text(self.mos_from_default_weights(manifest_path, names))
        capsys.readouterr()
        weights_out = tmp_path / "weights.json"
        report_out = tmp_path / "report.csv"
        code = main(
            ["calibrate", "--manifest", str(manifest_path), "--mos", str(mos_path),
             "--weights-out", str(weights_out), "--report-out", str(report_out)] + FAST
        )
        assert code == 0
        fitted = json.loads(weights_out.read_text())
        assert fitted["w1"] == pytest.approx(0.14, abs=1e-6)
        assert fitted["w2"] == pytest.approx(0.1208, abs=1e-6)
        assert fitted["w3"] == pytest.approx(0.05, abs=1e-6)
        assert fitted["w4"] == pytest.approx(0.1353, abs=1e-6)
        report = report_out.read_text().splitlines()
        assert report[0] == "label,distortion,score,mos,target,residual"
        assert len(report) == 1 + len(names)
        for line in report[1:]:
            assert abs(float(line.split(",")[-1])) < 1e-9
        assert float(stdout_value(capsys, "rmse")) < 1e-9

    def test_missing_mos_row_named(self, tmp_path, capsys):
        manifest_path, names = self.build_calibration_corpus(tmp_path)
        mos_path = tmp_path / "mos.csv"
        body = ["label,distortion,mos"]
        body += [f"scene,{name},5.0" for name in names if name != "soft"]
        mos_path.write_text("\n".join(body) + "\n")
        capsys.readouterr()
        code = main(
            ["calibrate", "--manifest", str(manifest_path), "--mos", str(mos_path),
             "--weights-out", str(tmp_path / "w.json"),
             "--report-out", str(tmp_path / "r.csv")] + FAST
        )
        assert code == 4
        assert "scene__soft" in capsys.readouterr().err

    def test_empty_mos_is_ingest_error(self, tmp_path, capsys):
        manifest_path, _ = self.build_calibration_corpus(tmp_path)
        mos_path = tmp_path / "mos.csv"
        mos_path.write_text("label,distortion,mos\n")
        capsys.readouterr()
        code = main(
            ["calibrate", "--manifest", str(manifest_path), "--mos", str(mos_path),
             "--weights-out", str(tmp_path / "w.json"),
             "--report-out", str(tmp_path / "r.csv")] + FAST
        )
        assert code == 3


class TestEvaluate:
    def write_tables(self, tmp_path, mos_values, scores=None):
        mos_lines = ["label,distortion,mos"]
        score_lines = ["label,distortion,score"]
        for i, mos in enumerate(mos_values):
            score = scores[i] if scores is not None else mos / 10.0
            mos_lines.append(f"s{i},noise,{mos}")
            score_lines.append(f"s{i},noise,{score}")
        mos_path = tmp_path / "mos.csv"
        scores_path = tmp_path / "scores.csv"
        mos_path.write_text("\n".join(mos_lines) + "\n")
        scores_path.write_text("\n".join(score_lines) + "\n")
        return scores_path, mos_path

    def test_perfect_agreement(self, tmp_path, capsys):
        scores_path, mos_path = self.write_tables(tmp_path, [2, 3, 4, 5, 6, 7, 8, 9])
        out = tmp_path / "plot.csv"
        code = main(
            ["evaluate", "--scores", str(scores_path), "--mos", str(mos_path), "--out", str(out)]
        )
        assert code == 0
        captured = capsys.readouterr().out
        assert "pairs=8" in captured
        assert "spearman=1.0" in captured
        assert "logistic_a=" in captured and "pearson=" in captured
        lines = out.read_text().splitlines()
        assert lines[0] == "score,mos,fitted"
        assert len(lines) == 9
        assert all(np.isfinite(float(line.split(",")[2])) for line in lines[1:])

    def test_reversed_ranking(self, tmp_path, capsys):
        mos = [2, 3, 4, 5, 6, 7, 8, 9]
        scores = [m / 10.0 for m in reversed(mos)]
        scores_path, mos_path = self.write_tables(tmp_path, mos, scores)
        assert main(["evaluate", "--scores", str(scores_path), "--mos", str(mos_path)]) == 0
        assert "spearman=-1.0" in capsys.readouterr().out

    def test_no_overlap_is_compute_error(self, tmp_path, capsys):
        mos_path = tmp_path / "mos.csv"
        mos_path.write_text("label,distortion,mos\na,blur,5\n")
        scores_path = tmp_path / "scores.csv"
        scores_path.write_text("label,distortion,score\nb,noise,0.5\n")
        code = main(["evaluate", "--scores", str(scores_path), "--mos", str(mos_path)])
        assert code == 4
        assert "overlap" in capsys.readouterr().err

    def test_constant_mos_is_compute_error(self, tmp_path, capsys):
        scores = [0.2, 0.3, 0.4, 0.5, 0.6]
        scores_path, mos_path = self.write_tables(tmp_path, [5, 5, 5, 5, 5], scores)
        code = main(["evaluate", "--scores", str(scores_path), "--mos", str(mos_path)])
        assert code == 4
        assert "constant" in capsys.readouterr().err
