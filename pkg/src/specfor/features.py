"""Feature extraction from spectra and raw pixels.

The frequency schema ("freq-v1", 259 values) concatenates a 16x16
average-pooled grid of the channel-mean spectrum with three radial
statistics: the log-log spectral slope, the high-band energy share,
and a bump-prominence score that lights up on upsampling replicas.
The spatial baseline ("spatial-v1", 256 values) is the same pooled
grid taken over grayscale pixels instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateProfileError
from .imagio import ImageTensor, to_grayscale
from .spectrum import Spectrum

POOL_GRID = 16
HIGH_BAND_SPLIT = 0.75

SCHEMA_DIMS = {
    "freq-v1": POOL_GRID * POOL_GRID + 3,
    "spatial-v1": POOL_GRID * POOL_GRID,
}


@dataclass(frozen=True)
class FeatureVector:
    """Schema-tagged flat feature array (float32, finite)."""

    schema_id: str
    values: np.ndarray

    def __post_init__(self) -> None:
        if self.schema_id not in SCHEMA_DIMS:
            raise ValueError(f"unknown schema {self.schema_id!r}")
        v = self.values
        if v.ndim != 1 or v.dtype != np.float32 or len(v) != SCHEMA_DIMS[self.schema_id]:
            raise ValueError(
                f"schema {self.schema_id!r} wants {SCHEMA_DIMS[self.schema_id]} "
                f"float32 values, got {v.dtype} x {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("feature values must be finite")


@dataclass(frozen=True)
class RadialProfile:
    """Per-ring means of a matrix around a center point.

    Bin r collects every cell whose Euclidean distance d from the
    center satisfies floor(d) == r, for r < n_bins = min(H, W) // 2.
    Counts depend only on the geometry, never on the matrix values.
    """

    radius: np.ndarray
    mean_value: np.ndarray
    count: np.ndarray

    @property
    def n_bins(self) -> int:
        return len(self.radius)


def radial_profile(m: np.ndarray, center: tuple[int, int]) -> RadialProfile:
    h, w = m.shape
    if h < 2 or w < 2:
        raise ValueError("matrix must be at least 2x2")
    cr, cc = center
    if not (0 <= cr < h and 0 <= cc < w):
        raise ValueError(f"center {center} outside {h}x{w} matrix")
    n_bins = min(h, w) // 2
    di = (np.arange(h, dtype=np.float64) - cr)[:, None]
    dj = (np.arange(w, dtype=np.float64) - cc)[None, :]
    rad = np.floor(np.sqrt(di * di + dj * dj)).astype(np.intp)
    keep = rad < n_bins
    counts = np.bincount(rad[keep], minlength=n_bins)
    sums = np.bincount(rad[keep], weights=np.asarray(m, dtype=np.float64)[keep], minlength=n_bins)
    return RadialProfile(
        radius=np.arange(n_bins, dtype=np.int32),
        mean_value=(sums / counts).astype(np.float32),
        count=counts.astype(np.uint32),
    )


def spectral_slope(p: RadialProfile) -> float:
    """Least-squares slope of ln(mean) against ln(radius), DC excluded.

    Uses bins with radius >= 1 and strictly positive mean; fewer than
    three such bins leave nothing to fit.
    """
    usable = (p.radius >= 1) & (p.mean_value > 0)
    if int(usable.sum()) < 3:
        raise DegenerateProfileError(f"only {int(usable.sum())} usable bins")
    x = np.log(p.radius[usable].astype(np.float64))
    y = np.log(p.mean_value[usable].astype(np.float64))
    x = x - x.mean()
    return float((x * (y - y.mean())).sum() / (x * x).sum())


def band_energy_ratio(p: RadialProfile, split: float) -> float:
    """Share of ring energy (mean * count) at radii >= split * n_bins."""
    if not 0.0 < split < 1.0:
        raise ValueError(f"split must be in (0, 1), got {split}")
    energy = p.mean_value.astype(np.float64) * p.count
    total = energy.sum()
    if total == 0.0:
        return 0.0
    outer = energy[p.radius >= split * p.n_bins].sum()
    return float(outer / total)


def replica_peak_score(p: RadialProfile) -> float:
    """Summed positive prominence of ring means over their neighbors.

    For every interior bin with radius r > n_bins / 4 the score adds
    max(0, mean(r) - (mean(r-1) + mean(r+1)) / 2). Smooth monotone
    decay contributes nothing; periodic replica rings pile up bumps.
    """
    m = p.mean_value.astype(np.float64)
    n = p.n_bins
    if n < 3:
        return 0.0
    r = np.arange(1, n - 1)
    prominence = m[r] - (m[r - 1] + m[r + 1]) / 2.0
    prominence = prominence[r > n / 4.0]
    return float(np.maximum(prominence, 0.0).sum())


def pool_grid(m: np.ndarray, g: int) -> np.ndarray:
    """Average-pool a matrix onto a g x g grid, flattened row-major.

    Cell (k, l) covers rows [floor(k*H/g), floor((k+1)*H/g)) and the
    matching column range, so uneven divisions spread the remainder.
    """
    h, w = m.shape
    if g < 1 or h < g or w < g:
        raise ValueError(f"grid {g} needs at least {g}x{g} input, got {h}x{w}")
    rb = (np.arange(g + 1) * h) // g
    cb = (np.arange(g + 1) * w) // g
    m64 = np.asarray(m, dtype=np.float64)
    sums = np.add.reduceat(np.add.reduceat(m64, rb[:-1], axis=0), cb[:-1], axis=1)
    areas = np.outer(np.diff(rb), np.diff(cb))
    return (sums / areas).ravel().astype(np.float32)


def extract_freq_features(s: Spectrum) -> FeatureVector:
    """freq-v1 vector from a shifted spectrum.

    Channels are averaged into one matrix M; the vector is
    pool_grid(M, 16) followed by [spectral_slope, band_energy_ratio
    at 0.75, replica_peak_score] of M's radial profile around center.
    """
    if not s.shifted:
        raise ValueError("spectrum must be shifted before feature extraction")
    m = s.data.mean(axis=2, dtype=np.float64)
    prof = radial_profile(m, (s.height // 2, s.width // 2))
    scalars = np.array(
        [
            spectral_slope(prof),
            band_energy_ratio(prof, HIGH_BAND_SPLIT),
            replica_peak_score(prof),
        ],
        dtype=np.float32,
    )
    return FeatureVector("freq-v1", np.concatenate([pool_grid(m, POOL_GRID), scalars]))


def extract_spatial_features(img: ImageTensor) -> FeatureVector:
    """spatial-v1 vector: the pooled 16x16 grid of grayscale pixels."""
    gray = to_grayscale(img).data[:, :, 0]
    return FeatureVector("spatial-v1", pool_grid(gray, POOL_GRID))
