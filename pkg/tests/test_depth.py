"""Depth normalization, foveal variance sampling, and the depth-quality term."""

import logging

import numpy as np
import pytest

import hv3d
from hv3d import ConfigError, ContractError

from conftest import textured_plane
import oracles


def test_normalize_scales_by_peak():
    depth = np.array([[0, 100], [150, 200]], dtype=np.uint8)
    out = hv3d.normalize_depth(depth)
    assert out.max() == 1.0
    assert np.array_equal(out, depth / 200.0)


def test_normalize_two_level_plane():
    depth = np.where(np.arange(64) < 32, 50, 250).astype(np.uint8)
    depth = np.tile(depth, (64, 1))
    out = hv3d.normalize_depth(depth)
    assert set(np.unique(out)) == {0.2, 1.0}


def test_normalize_zero_plane_warns_and_passes_through(caplog):
    with caplog.at_level(logging.WARNING, logger="hv3d.depth"):
        out = hv3d.normalize_depth(np.zeros((16, 16), dtype=np.uint8))
    assert np.all(out == 0.0)
    assert any("depth" in record.message for record in caplog.records)


def test_constant_depth_has_zero_variance():
    grid = hv3d.build_grid(64, 64, 16)
    field = hv3d.local_depth_variance(np.full((64, 64), 0.5), grid, fovea=32)
    assert field.variances.shape == (grid.n,)
    assert np.all(field.variances == 0.0)
    assert field.max_variance == 0.0


def test_half_step_plane_variance_exact():
    # 64x64 plane, left half 0 and right half 1: mean 1/2, squared
    # deviations sum to 1024, sample divisor 4095.
    depth = np.zeros((64, 64))
    depth[:, 32:] = 1.0
    grid = hv3d.build_grid(64, 64, 16)
    field = hv3d.local_depth_variance(depth, grid, fovea=64)
    assert np.all(field.variances == 1024.0 / 4095.0)
    assert field.max_variance == 1024.0 / 4095.0


def test_variances_match_oracle(rng):
    depth = hv3d.normalize_depth(textured_plane(rng, 64, 64, amplitude=40, noise=8))
    grid = hv3d.build_grid(64, 64, 16)
    for fovea in (16, 32, 64):
        field = hv3d.local_depth_variance(depth, grid, fovea=fovea)
        expected = oracles.depth_variance_oracle(depth, 16, fovea)
        assert np.allclose(field.variances, expected, atol=1e-12, rtol=0.0)


def test_window_clamping_keeps_full_windows(rng):
    # With fovea 48 on a 64-wide plane the corner windows must shift inward
    # rather than shrink; every variance then comes from a 48x48 sample.
    depth = hv3d.normalize_depth(textured_plane(rng, 64, 64))
    grid = hv3d.build_grid(64, 64, 16)
    field = hv3d.local_depth_variance(depth, grid, fovea=48)
    expected = oracles.depth_variance_oracle(depth, 16, 48)
    assert np.allclose(field.variances, expected, atol=1e-12, rtol=0.0)


def test_depth_quality_identity_on_full_plane_fovea(rng):
    depth = textured_plane(rng, 64, 64, amplitude=40, noise=8)
    grid = hv3d.build_grid(64, 64, 16)
    # fovea == plane size: every window sees the whole plane, so the relief
    # ratio is exactly one and only the fidelity term remains.
    assert hv3d.depth_quality(depth, depth, grid, fovea=64) == pytest.approx(1.0, abs=1e-9)


def test_depth_quality_flat_reference_skips_ratio():
    flat = np.full((64, 64), 100, dtype=np.uint8)
    grid = hv3d.build_grid(64, 64, 16)
    assert hv3d.depth_quality(flat, flat, grid) == 1.0


def test_depth_quality_single_textured_block(rng):
    # One active block out of 16 with block-sized fovea: relief ratio 1/16.
    depth = np.full((64, 64), 128, dtype=np.uint8)
    depth[16:32, 16:32] = textured_plane(rng, 16, 16)
    grid = hv3d.build_grid(64, 64, 16)
    value = hv3d.depth_quality(depth, depth, grid, fovea=16)
    fidelity = hv3d.vif(depth, depth) ** 0.7
    assert value == pytest.approx(fidelity / 16.0, abs=1e-12)


def test_depth_quality_matches_oracle(rng):
    ref = textured_plane(rng, 64, 64, amplitude=40, noise=8)
    dist = np.clip(
        np.rint(ref.astype(np.float64) + rng.normal(0, 6, ref.shape)), 0, 255
    ).astype(np.uint8)
    grid = hv3d.build_grid(64, 64, 16)
    for fovea in (32, 64):
        value = hv3d.depth_quality(ref, dist, grid, fovea=fovea)
        expected = oracles.depth_quality_oracle(ref, dist, 16, fovea, 0.7)
        assert value == pytest.approx(expected, abs=1e-12)


def test_depth_quality_degrades_under_noise(rng):
    ref = textured_plane(rng, 64, 64, amplitude=40, noise=8)
    dist = np.clip(
        np.rint(ref.astype(np.float64) + rng.normal(0, 20, ref.shape)), 0, 255
    ).astype(np.uint8)
    grid = hv3d.build_grid(64, 64, 16)
    assert hv3d.depth_quality(ref, dist, grid, fovea=64) < hv3d.depth_quality(
        ref, ref, grid, fovea=64
    )


def test_fovea_validation(rng):
    depth = hv3d.normalize_depth(textured_plane(rng, 64, 64))
    grid = hv3d.build_grid(64, 64, 16)
    with pytest.raises(ConfigError, match="fovea"):
        hv3d.local_depth_variance(depth, grid, fovea=8)
    with pytest.raises(ConfigError, match="fovea"):
        hv3d.local_depth_variance(depth, grid, fovea=80)


def test_geometry_mismatch_rejected(rng):
    grid = hv3d.build_grid(64, 64, 16)
    with pytest.raises(ContractError, match="grid"):
        hv3d.local_depth_variance(np.zeros((32, 64)), grid)


def test_bad_beta_rejected(rng):
    depth = textured_plane(rng, 64, 64)
    grid = hv3d.build_grid(64, 64, 16)
    with pytest.raises(ConfigError, match="beta"):
        hv3d.depth_quality(depth, depth, grid, beta=-1.0)
