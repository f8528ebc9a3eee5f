"""Tests for radial profiles, spectral statistics, and feature extraction."""

import math

import numpy as np
import pytest

from specfor.errors import DegenerateProfileError
from specfor.features import (
    HIGH_BAND_SPLIT,
    POOL_GRID,
    SCHEMA_DIMS,
    FeatureVector,
    RadialProfile,
    band_energy_ratio,
    extract_freq_features,
    extract_spatial_features,
    pool_grid,
    radial_profile,
    replica_peak_score,
    spectral_slope,
)
from specfor.imagio import ImageTensor
from specfor.spectrum import transform_image


def brute_profile(m, center):
    """Literal per-pixel radial binning used as an oracle."""
    h, w = m.shape
    n = min(h, w) // 2
    sums = [0.0] * n
    counts = [0] * n
    for i in range(h):
        for j in range(w):
            r = int(math.floor(math.hypot(i - center[0], j - center[1])))
            if r < n:
                sums[r] += float(m[i, j])
                counts[r] += 1
    means = [s / c if c else 0.0 for s, c in zip(sums, counts)]
    return means, counts


def make_profile(values, counts=None):
    values = np.asarray(values, dtype=np.float32)
    n = len(values)
    if counts is None:
        counts = np.ones(n, dtype=np.uint32)
    else:
        counts = np.asarray(counts, dtype=np.uint32)
    return RadialProfile(
        radius=np.arange(n, dtype=np.int32), mean_value=values, count=counts
    )


# ---------------------------------------------------------------------------
# radial_profile
# ---------------------------------------------------------------------------


def test_radial_profile_of_ones_is_flat():
    m = np.ones((8, 8), dtype=np.float32)
    prof = radial_profile(m, (4, 4))
    assert prof.n_bins == 4
    assert np.allclose(prof.mean_value, 1.0, atol=1e-7)
    _, counts = brute_profile(m, (4, 4))
    assert list(prof.count) == counts[:4]


def test_radial_profile_center_impulse():
    m = np.zeros((8, 8), dtype=np.float32)
    m[4, 4] = 1.0
    prof = radial_profile(m, (4, 4))
    assert abs(float(prof.mean_value[0]) - 1.0) < 1e-7
    assert prof.count[0] == 1
    assert np.allclose(prof.mean_value[1:], 0.0, atol=1e-7)


def test_radial_profile_exact_distance_two_ring():
    # Ones at Euclidean distance exactly 2 from the center. Bin 2 also
    # collects distances in [2, 3), so its mean is 4 / count(bin 2).
    m = np.zeros((8, 8), dtype=np.float32)
    for di, dj in ((2, 0), (-2, 0), (0, 2), (0, -2)):
        m[4 + di, 4 + dj] = 1.0
    prof = radial_profile(m, (4, 4))
    means, counts = brute_profile(m, (4, 4))
    assert abs(float(prof.mean_value[2]) - 4.0 / counts[2]) < 1e-7
    assert np.allclose(prof.mean_value, np.array(means, dtype=np.float32), atol=1e-6)


def test_radial_profile_matches_brute_force_on_random_input():
    rng = np.random.default_rng(0)
    for shape, center in (((8, 8), (4, 4)), ((8, 12), (4, 6)), ((16, 16), (8, 8))):
        m = rng.random(shape)
        prof = radial_profile(m, center)
        means, counts = brute_profile(m, center)
        n = prof.n_bins
        assert n == min(shape) // 2
        assert np.allclose(prof.mean_value, np.array(means[:n]), atol=1e-5)
        assert list(prof.count) == counts[:n]


def test_radial_profile_counts_depend_only_on_geometry():
    rng = np.random.default_rng(1)
    a = radial_profile(rng.random((16, 16)), (8, 8))
    b = radial_profile(rng.random((16, 16)), (8, 8))
    assert np.array_equal(a.count, b.count)
    assert np.array_equal(a.radius, np.arange(8, dtype=np.int32))


def test_radial_profile_input_validation():
    with pytest.raises(ValueError):
        radial_profile(np.ones((1, 8)), (0, 4))
    with pytest.raises(ValueError):
        radial_profile(np.ones((8, 8)), (9, 4))
    with pytest.raises(ValueError):
        radial_profile(np.ones((8, 8)), (-1, 0))


# ---------------------------------------------------------------------------
# spectral_slope
# ---------------------------------------------------------------------------


def test_spectral_slope_recovers_exact_power_laws():
    r = np.arange(16)
    for alpha in (0.5, 1.0, 2.0):
        vals = np.zeros(16)
        vals[1:] = r[1:].astype(np.float64) ** (-alpha)
        prof = make_profile(vals)
        assert abs(spectral_slope(prof) + alpha) < 1e-6


def test_spectral_slope_positive_law():
    r = np.arange(1, 20, dtype=np.float64)
    vals = np.concatenate([[0.0], r ** 1.5])
    prof = make_profile(vals)
    assert abs(spectral_slope(prof) - 1.5) < 1e-6


def test_spectral_slope_ignores_radius_zero_and_nonpositive_bins():
    # Bin 0 and zero-valued bins carry no usable log-log point.
    vals = np.array([9.0, 1.0, 0.0, 1.0 / 3.0**2, 1.0 / 4.0**2], dtype=np.float64)
    prof = make_profile(vals)
    assert abs(spectral_slope(prof) + 2.0) < 1e-6


def test_spectral_slope_needs_three_usable_points():
    with pytest.raises(DegenerateProfileError):
        spectral_slope(make_profile([5.0, 1.0, 2.0]))  # only r=1,2 usable
    with pytest.raises(DegenerateProfileError):
        spectral_slope(make_profile([1.0, 1.0, 0.0, 0.0]))


def test_spectral_slope_matches_polyfit_oracle():
    rng = np.random.default_rng(2)
    r = np.arange(32)
    vals = np.zeros(32)
    vals[1:] = r[1:].astype(np.float64) ** (-1.2) * np.exp(
        rng.normal(0.0, 0.05, size=31)
    )
    prof = make_profile(vals)
    usable = r >= 1
    oracle = np.polyfit(np.log(r[usable]), np.log(vals[usable]), 1)[0]
    assert abs(spectral_slope(prof) - oracle) < 1e-6


# ---------------------------------------------------------------------------
# band_energy_ratio
# ---------------------------------------------------------------------------


def test_band_energy_ratio_all_energy_high():
    vals = np.zeros(8)
    vals[6] = 3.0
    prof = make_profile(vals)
    assert abs(band_energy_ratio(prof, 0.5) - 1.0) < 1e-7


def test_band_energy_ratio_all_energy_low():
    vals = np.zeros(8)
    vals[1] = 3.0
    prof = make_profile(vals)
    assert abs(band_energy_ratio(prof, 0.5) - 0.0) < 1e-7


def test_band_energy_ratio_uniform_counts_weighting():
    # Energy per bin is mean * count, so counts weight the ratio.
    vals = np.ones(8)
    counts = np.array([1, 8, 16, 24, 32, 40, 48, 56], dtype=np.uint32)
    prof = make_profile(vals, counts)
    total = counts.sum()
    high = counts[4:].sum()  # split 0.5 of n_bins=8 -> radii >= 4
    assert abs(band_energy_ratio(prof, 0.5) - high / total) < 1e-6


def test_band_energy_ratio_uniform_profile_brute_force():
    rng = np.random.default_rng(3)
    m = rng.random((16, 16))
    prof = radial_profile(m, (8, 8))
    means, counts = brute_profile(m, (8, 8))
    cutoff = int(HIGH_BAND_SPLIT * prof.n_bins)
    energies = [mu * c for mu, c in zip(means[: prof.n_bins], counts[: prof.n_bins])]
    oracle = sum(e for r, e in enumerate(energies) if r >= cutoff) / sum(energies)
    assert abs(band_energy_ratio(prof, HIGH_BAND_SPLIT) - oracle) < 1e-6


def test_band_energy_ratio_zero_total_is_zero():
    prof = make_profile(np.zeros(6))
    assert band_energy_ratio(prof, 0.5) == 0.0


def test_band_energy_ratio_split_validation():
    prof = make_profile(np.ones(6))
    for bad in (0.0, 1.0, -0.5, 2.0):
        with pytest.raises(ValueError):
            band_energy_ratio(prof, bad)


# ---------------------------------------------------------------------------
# replica_peak_score
# ---------------------------------------------------------------------------


def test_replica_score_zero_for_linear_profiles():
    # Values in exact quarter steps so float32 storage keeps the second
    # differences exactly zero.
    down = 5.0 - 0.25 * np.arange(16)
    up = 0.25 * np.arange(16)
    assert replica_peak_score(make_profile(down)) == 0.0
    assert replica_peak_score(make_profile(up)) == 0.0


def test_replica_score_zero_for_convex_decay():
    vals = 1.0 / (1.0 + np.arange(16, dtype=np.float64))
    assert replica_peak_score(make_profile(vals)) < 1e-6


def test_replica_score_single_bump_prominence():
    # A lone bump of height h over a flat floor scores 2h - (0 + 0) ... the
    # second difference at the bump is v - (left + right)/2 = h.
    vals = np.full(16, 1.0)
    vals[10] += 0.25
    score = replica_peak_score(make_profile(vals))
    assert abs(score - 0.25) < 1e-6


def test_replica_score_ignores_low_radius_bumps():
    # Interior radii at or below n/4 are excluded from the scan.
    n = 16
    vals = np.full(n, 1.0)
    vals[4] += 0.5  # 4 <= 16/4, excluded
    assert replica_peak_score(make_profile(vals)) == 0.0
    vals = np.full(n, 1.0)
    vals[5] += 0.5  # 5 > 16/4, included
    assert abs(replica_peak_score(make_profile(vals)) - 0.5) < 1e-6


def test_replica_score_sums_positive_prominences():
    vals = np.full(20, 2.0)
    vals[8] += 0.5
    vals[14] += 0.25
    score = replica_peak_score(make_profile(vals))
    assert abs(score - 0.75) < 1e-5


def test_replica_score_dip_shoulders_register():
    # A downward notch makes both neighbors locally prominent: each
    # shoulder scores half the notch depth.
    vals = np.full(20, 2.0)
    vals[17] -= 1.0
    score = replica_peak_score(make_profile(vals))
    assert abs(score - 1.0) < 1e-5


def test_replica_score_short_profiles_are_zero():
    assert replica_peak_score(make_profile([1.0])) == 0.0
    assert replica_peak_score(make_profile([1.0, 2.0])) == 0.0


def test_replica_score_never_negative():
    rng = np.random.default_rng(4)
    for _ in range(50):
        vals = rng.random(rng.integers(1, 30))
        assert replica_peak_score(make_profile(vals)) >= 0.0


# ---------------------------------------------------------------------------
# pool_grid
# ---------------------------------------------------------------------------


def test_pool_grid_constant():
    m = np.full((16, 16), 0.3, dtype=np.float64)
    out = pool_grid(m, 4)
    assert out.shape == (16,)
    assert np.allclose(out, 0.3, atol=1e-7)


def test_pool_grid_identity_when_cells_are_pixels():
    rng = np.random.default_rng(5)
    m = rng.random((4, 4))
    out = pool_grid(m, 4)
    assert np.allclose(out, m.reshape(-1), atol=1e-7)


def test_pool_grid_quadrant_means():
    m = np.array(
        [
            [1.0, 1.0, 2.0, 2.0],
            [1.0, 1.0, 2.0, 2.0],
            [3.0, 3.0, 4.0, 4.0],
            [3.0, 3.0, 4.0, 4.0],
        ]
    )
    out = pool_grid(m, 2)
    assert np.allclose(out, [1.0, 2.0, 3.0, 4.0], atol=1e-7)


def test_pool_grid_non_divisible_dimensions():
    # 5x5 with g=2: row/col boundaries at [0, 2, 5).
    m = np.arange(25, dtype=np.float64).reshape(5, 5)
    out = pool_grid(m, 2)
    expected = []
    bounds = [(0, 2), (2, 5)]
    for r0, r1 in bounds:
        for c0, c1 in bounds:
            expected.append(m[r0:r1, c0:c1].mean())
    assert np.allclose(out, expected, atol=1e-12)


def test_pool_grid_rejects_small_inputs():
    with pytest.raises(ValueError):
        pool_grid(np.ones((3, 8)), 4)
    with pytest.raises(ValueError):
        pool_grid(np.ones((8, 8)), 0)


# ---------------------------------------------------------------------------
# Feature extraction
# ---------------------------------------------------------------------------


def _random_image(seed, size=32, channels=3):
    rng = np.random.default_rng(seed)
    return ImageTensor(rng.random((size, size, channels), dtype=np.float32))


def test_freq_features_layout_and_recomposition():
    img = _random_image(6)
    spec = transform_image(img)
    fv = extract_freq_features(spec)
    assert fv.schema_id == "freq-v1"
    assert fv.values.dtype == np.float32
    assert len(fv.values) == SCHEMA_DIMS["freq-v1"] == POOL_GRID * POOL_GRID + 3

    mean_plane = spec.data.mean(axis=2, dtype=np.float64)
    h, w = mean_plane.shape
    prof = radial_profile(mean_plane, (h // 2, w // 2))
    expected = np.concatenate(
        [
            pool_grid(mean_plane, POOL_GRID),
            [
                spectral_slope(prof),
                band_energy_ratio(prof, HIGH_BAND_SPLIT),
                replica_peak_score(prof),
            ],
        ]
    ).astype(np.float32)
    assert np.array_equal(fv.values, expected)


def test_freq_features_deterministic():
    img = _random_image(7)
    a = extract_freq_features(transform_image(img))
    b = extract_freq_features(transform_image(img))
    assert np.array_equal(a.values, b.values)


def test_freq_features_require_shifted_spectrum():
    img = _random_image(8)
    spec = transform_image(img)
    unshifted = type(spec)(data=spec.data, shifted=False)
    with pytest.raises(ValueError):
        extract_freq_features(unshifted)


def test_spatial_features_constant_image():
    img = ImageTensor(np.full((32, 32, 3), 0.5, dtype=np.float32))
    fv = extract_spatial_features(img)
    assert fv.schema_id == "spatial-v1"
    assert len(fv.values) == SCHEMA_DIMS["spatial-v1"] == POOL_GRID * POOL_GRID
    assert np.allclose(fv.values, 0.5, atol=1e-6)


def test_spatial_features_horizontal_flip_reverses_cell_rows():
    img = _random_image(9)
    flipped = ImageTensor(img.data[:, ::-1, :].copy())
    a = extract_spatial_features(img).values.reshape(POOL_GRID, POOL_GRID)
    b = extract_spatial_features(flipped).values.reshape(POOL_GRID, POOL_GRID)
    assert np.allclose(a, b[:, ::-1], atol=1e-6)


def test_feature_vector_validation():
    with pytest.raises(ValueError):
        FeatureVector("freq-v1", np.zeros(10, dtype=np.float32))
    with pytest.raises(ValueError):
        FeatureVector("nope", np.zeros(256, dtype=np.float32))
    with pytest.raises(ValueError):
        FeatureVector("spatial-v1", np.full(256, np.nan, dtype=np.float32))
    fv = FeatureVector("spatial-v1", np.zeros(256, dtype=np.float32))
    assert fv.schema_id == "spatial-v1"
