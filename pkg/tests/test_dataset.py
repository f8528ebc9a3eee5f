"""Tests for split assignment, manifest I/O, and the synthetic corpora."""

import os
from pathlib import Path

import numpy as np
import pytest

from specfor.errors import BadRatiosError, EmptyInputError, MalformedRowError
from specfor.dataset import (
    DatasetManifest,
    ManifestEntry,
    entry_abspath,
    image_rng,
    load_manifest,
    mix64,
    save_manifest,
    split_manifest,
    synth_fake,
    synth_real,
)
from specfor.features import band_energy_ratio, radial_profile
from specfor.spectrum import dft2d, transform_image

RATIOS = (0.70, 0.15, 0.15)


def _items(n_real, n_fake):
    items = [(f"real_{i:04d}.ppm", 0) for i in range(n_real)]
    items += [(f"fake_{i:04d}.ppm", 1) for i in range(n_fake)]
    return items


def _counts(manifest):
    out = {}
    for e in manifest.entries:
        out[(e.split, e.label)] = out.get((e.split, e.label), 0) + 1
    return out


# ---------------------------------------------------------------------------
# split_manifest
# ---------------------------------------------------------------------------


def test_split_counts_at_corpus_scale():
    m = split_manifest(_items(5000, 5000), RATIOS, seed=3)
    c = _counts(m)
    assert c[("train", 0)] == c[("train", 1)] == 3500
    assert c[("val", 0)] == c[("val", 1)] == 750
    assert c[("test", 0)] == c[("test", 1)] == 750


def test_split_rounds_half_up_on_small_sets():
    # 10 items, 15% -> 1.5 rounds up to 2 for both val and test.
    m = split_manifest([(f"x{i}.ppm", 0) for i in range(10)], RATIOS, seed=0)
    c = _counts(m)
    assert c[("train", 0)] == 6
    assert c[("val", 0)] == 2
    assert c[("test", 0)] == 2


def test_split_is_deterministic_and_seed_sensitive():
    items = _items(40, 40)
    a = split_manifest(items, RATIOS, seed=9)
    b = split_manifest(items, RATIOS, seed=9)
    assert a.entries == b.entries
    assert a.seed == 9
    d = split_manifest(items, RATIOS, seed=10)
    assert d.entries != a.entries


def test_split_preserves_item_order_and_paths():
    items = _items(12, 12)
    m = split_manifest(items, RATIOS, seed=1)
    assert [(e.path, e.label) for e in m.entries] == items


def test_split_is_exhaustive_and_stratified():
    items = _items(33, 17)
    m = split_manifest(items, (0.6, 0.2, 0.2), seed=4)
    c = _counts(m)
    assert sum(v for (s, l), v in c.items() if l == 0) == 33
    assert sum(v for (s, l), v in c.items() if l == 1) == 17
    # Each label's split sizes stay within one item of the exact ratio.
    for label, total in ((0, 33), (1, 17)):
        for split, ratio in zip(("train", "val", "test"), (0.6, 0.2, 0.2)):
            got = c.get((split, label), 0)
            assert abs(got - ratio * total) <= 1.0, (label, split, got)


def test_split_input_validation():
    with pytest.raises(EmptyInputError):
        split_manifest([], RATIOS, seed=0)
    with pytest.raises(BadRatiosError):
        split_manifest(_items(4, 4), (0.5, 0.2, 0.2), seed=0)
    with pytest.raises(BadRatiosError):
        split_manifest(_items(4, 4), (0.8, 0.3, -0.1), seed=0)
    with pytest.raises(ValueError):
        split_manifest([("a.ppm", 2)], RATIOS, seed=0)


# ---------------------------------------------------------------------------
# Manifest entries and file round-trip
# ---------------------------------------------------------------------------


def test_entry_validation():
    with pytest.raises(ValueError):
        ManifestEntry("a.ppm", 3, "train")
    with pytest.raises(ValueError):
        ManifestEntry("a.ppm", 0, "holdout")


def test_manifest_roundtrip(tmp_path):
    m = DatasetManifest(
        entries=[
            ManifestEntry("img/a.ppm", 0, "train"),
            ManifestEntry("img/b.ppm", 1, "val"),
            ManifestEntry("c.ppm", 1, "test"),
        ],
        seed=42,
    )
    path = tmp_path / "m.csv"
    save_manifest(m, path)
    back = load_manifest(path)
    assert back.entries == m.entries
    assert back.seed == 42


def test_manifest_file_layout(tmp_path):
    m = DatasetManifest([ManifestEntry("a.ppm", 1, "train")], seed=7)
    path = tmp_path / "m.csv"
    save_manifest(m, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "# seed=7"
    assert lines[1] == "path,label,split"
    assert lines[2] == "a.ppm,1,train"


def test_load_manifest_parses_minimal_file(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("# seed=5\npath,label,split\nimg/a.png,1,train\n")
    m = load_manifest(path)
    assert m.seed == 5
    assert m.entries == [ManifestEntry("img/a.png", 1, "train")]


def test_load_manifest_rejects_bad_rows(tmp_path):
    head = "# seed=0\npath,label,split\n"
    cases = [
        head + "a.ppm,2,train\n",  # bad label
        head + "a.ppm,1\n",  # missing field
        head + "a.ppm,1,train,extra\n",  # extra field
        head + "a.ppm,one,train\n",  # non-integer label
        head + "a.ppm,1,holdout\n",  # unknown split
        "path,split\n",  # wrong header
    ]
    for i, text in enumerate(cases):
        p = tmp_path / f"bad{i}.csv"
        p.write_text(text)
        with pytest.raises(MalformedRowError):
            load_manifest(p)


def test_entry_abspath_resolves_relative_to_manifest(tmp_path):
    entry = ManifestEntry("img/a.ppm", 0, "train")
    got = entry_abspath(tmp_path / "sub" / "m.csv", entry)
    assert got == (tmp_path / "sub" / "img" / "a.ppm").resolve()
    absolute = ManifestEntry(str(tmp_path / "x.ppm"), 0, "train")
    assert entry_abspath(tmp_path / "sub" / "m.csv", absolute) == tmp_path / "x.ppm"


# ---------------------------------------------------------------------------
# Per-image RNG derivation
# ---------------------------------------------------------------------------


def test_mix64_is_deterministic_and_spreads_inputs():
    assert mix64(12345) == mix64(12345)
    seen = {mix64(i) for i in range(100)}
    assert len(seen) == 100
    assert all(0 <= v < 2**64 for v in seen)


def test_image_rng_streams_are_independent():
    a = float(image_rng(7, 0).uniform())
    b = float(image_rng(7, 1).uniform())
    c = float(image_rng(8, 0).uniform())
    assert a != b
    assert a != c
    assert float(image_rng(7, 0).uniform()) == a


# ---------------------------------------------------------------------------
# Synthetic corpora
# ---------------------------------------------------------------------------


def test_synth_real_contract():
    imgs = synth_real(3, 32, 1.0, seed=0)
    assert len(imgs) == 3
    for img in imgs:
        assert img.data.shape == (32, 32, 3)
        assert img.data.dtype == np.float32
        assert float(img.data.min()) >= 0.0
        assert float(img.data.max()) <= 1.0
        # Grayscale content replicated across channels.
        assert np.array_equal(img.data[:, :, 0], img.data[:, :, 1])
        assert np.array_equal(img.data[:, :, 0], img.data[:, :, 2])


def test_synth_real_deterministic_and_seed_sensitive():
    a = synth_real(2, 32, 1.0, seed=5)
    b = synth_real(2, 32, 1.0, seed=5)
    c = synth_real(2, 32, 1.0, seed=6)
    assert all(np.array_equal(x.data, y.data) for x, y in zip(a, b))
    assert not np.array_equal(a[0].data, c[0].data)
    # Images within one corpus differ from each other.
    assert not np.array_equal(a[0].data, a[1].data)


def test_synth_real_argument_validation():
    with pytest.raises(EmptyInputError):
        synth_real(0, 32, 1.0, seed=0)
    with pytest.raises(ValueError):
        synth_real(1, 48, 1.0, seed=0)  # not a power of two
    with pytest.raises(ValueError):
        synth_real(1, 32, -0.5, seed=0)


def test_synth_real_alpha_zero_has_flat_spectrum():
    # With alpha = 0 the spectral field is white, so the expected
    # high-band energy share reduces to the share of ring counts, a
    # purely geometric number.
    n, size, split = 50, 64, 0.75
    geom = radial_profile(np.ones((size, size)), (size // 2, size // 2))
    counts = geom.count.astype(np.float64)
    cutoff = split * geom.n_bins
    geometric_share = counts[geom.radius >= cutoff].sum() / counts.sum()

    shares = []
    for img in synth_real(n, size, 0.0, seed=21):
        spec = transform_image(img)
        prof = radial_profile(
            spec.data.mean(axis=2, dtype=np.float64), (size // 2, size // 2)
        )
        shares.append(band_energy_ratio(prof, split))
    assert abs(float(np.mean(shares)) - geometric_share) <= 0.1


def test_synth_fake_contract_and_determinism():
    a = synth_fake(2, 32, 1.0, seed=3)
    b = synth_fake(2, 32, 1.0, seed=3)
    assert len(a) == 2
    for img in a:
        assert img.data.shape == (32, 32, 3)
        assert img.data.dtype == np.float32
        assert float(img.data.min()) >= 0.0
        assert float(img.data.max()) <= 1.0
    assert all(np.array_equal(x.data, y.data) for x, y in zip(a, b))
    with pytest.raises(ValueError):
        synth_fake(1, 2, 1.0, seed=0)


def test_synth_fake_attenuates_high_band():
    # Zero-insertion upsampling plus the fixed 3-tap smoothing kernel
    # suppresses energy near the band edge relative to a directly
    # synthesized field of the same size.
    size = 64
    reals = synth_real(10, size, 1.0, seed=17)
    fakes = synth_fake(10, size, 1.0, seed=17)

    def mean_share(imgs):
        vals = []
        for img in imgs:
            prof = radial_profile(
                transform_image(img).data.mean(axis=2, dtype=np.float64),
                (size // 2, size // 2),
            )
            vals.append(band_energy_ratio(prof, 0.75))
        return float(np.mean(vals))

    assert mean_share(fakes) < mean_share(reals)


def test_zero_insertion_replicates_spectrum():
    # Doubling a length-8 row by zero insertion tiles its DFT: the
    # 16-point transform repeats the 8-point transform twice.
    rng = np.random.default_rng(2)
    row = rng.random(8)
    base = dft2d(row.reshape(1, 8)).astype(np.complex128)[0]
    up = np.zeros(16)
    up[::2] = row
    doubled = dft2d(up.reshape(1, 16)).astype(np.complex128)[0]
    assert np.max(np.abs(doubled - np.tile(base, 2))) < 1e-4
