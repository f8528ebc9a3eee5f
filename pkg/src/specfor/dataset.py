"""Dataset manifests, deterministic splits, and synthetic corpora.

The synthetic generators provide a self-contained stand-in for a real
photo/GAN corpus. "Real" images are Gaussian noise fields shaped to a
radial power law, mimicking the spectral decay of natural images.
"Fake" images take a half-size real field through zero-insertion 2x
upsampling plus a small smoothing kernel, the transposed-convolution
analogue that stamps periodic replicas into the spectrum.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BadRatiosError, EmptyInputError, MalformedRowError
from .imagio import ImageTensor
from .spectrum import dft2d, normalize01

SPLITS = ("train", "val", "test")

_MASK64 = (1 << 64) - 1

UPSAMPLE_KERNEL_1D = np.array([0.25, 0.5, 0.25])


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    label: int  # 0 = real, 1 = fake
    split: str

    def __post_init__(self) -> None:
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")
        if self.split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}, got {self.split!r}")


@dataclass
class DatasetManifest:
    entries: list[ManifestEntry] = field(default_factory=list)
    seed: int = 0


def mix64(x: int) -> int:
    """SplitMix64 finalizer; spreads nearby seeds across the full range."""
    x &= _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def image_rng(seed: int, index: int) -> np.random.Generator:
    """Independent per-image generator derived from (corpus seed, index)."""
    return np.random.default_rng(mix64(seed ^ index))


def split_manifest(
    items: list[tuple[str, int]],
    ratios: tuple[float, float, float],
    seed: int,
) -> DatasetManifest:
    """Assign train/val/test splits, stratified by label.

    Within each label the items are shuffled by a generator seeded with
    seed, then handed out contiguously. Counts follow
    val = round(r_val * n), test = round(r_test * n) (half-up), with the
    remainder going to train, so per-label fractions stay within one
    item of the requested ratios.
    """
    if not items:
        raise EmptyInputError("no items to split")
    if len(ratios) != 3 or min(ratios) < 0 or abs(sum(ratios) - 1.0) > 1e-6:
        raise BadRatiosError(f"ratios must be non-negative and sum to 1, got {ratios}")
    bad = [lab for _, lab in items if lab not in (0, 1)]
    if bad:
        raise ValueError(f"labels must be 0 or 1, got {bad[0]!r}")
    rng = np.random.default_rng(seed)
    assigned: list[str | None] = [None] * len(items)
    for label in (0, 1):
        idx = np.array([k for k, (_, lab) in enumerate(items) if lab == label], dtype=np.intp)
        if len(idx) == 0:
            continue
        idx = idx[rng.permutation(len(idx))]
        n = len(idx)
        n_val = int(np.floor(ratios[1] * n + 0.5))
        n_test = int(np.floor(ratios[2] * n + 0.5))
        n_train = n - n_val - n_test
        if n_train < 0:
            raise BadRatiosError(f"ratios {ratios} round past {n} items for label {label}")
        for pos, k in enumerate(idx):
            if pos < n_train:
                assigned[k] = "train"
            elif pos < n_train + n_val:
                assigned[k] = "val"
            else:
                assigned[k] = "test"
    entries = [
        ManifestEntry(path, label, split)
        for (path, label), split in zip(items, assigned)
    ]
    return DatasetManifest(entries, seed)


def save_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    """Write CSV with header path,label,split; the seed rides in a comment."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# seed={manifest.seed}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["path", "label", "split"])
        for e in manifest.entries:
            writer.writerow([e.path, e.label, e.split])


def load_manifest(path: str | Path) -> DatasetManifest:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(str(path))
    seed = 0
    rows: list[list[str]] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        plain = []
        for line in fh:
            if line.startswith("#"):
                stripped = line[1:].strip()
                if stripped.startswith("seed="):
                    seed = int(stripped[len("seed=") :])
                continue
            plain.append(line)
        rows = [r for r in csv.reader(plain) if r]
    if not rows or rows[0] != ["path", "label", "split"]:
        raise MalformedRowError(f"expected header path,label,split in {path}")
    entries = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 3:
            raise MalformedRowError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
        p, label_s, split = row
        if label_s not in ("0", "1"):
            raise MalformedRowError(f"{path}:{lineno}: bad label {label_s!r}")
        if split not in SPLITS:
            raise MalformedRowError(f"{path}:{lineno}: bad split {split!r}")
        entries.append(ManifestEntry(p, int(label_s), split))
    return DatasetManifest(entries, seed)


def entry_abspath(manifest_path: str | Path, entry: ManifestEntry) -> Path:
    """Resolve an entry path relative to the manifest's directory."""
    p = Path(entry.path)
    return p if p.is_absolute() else Path(manifest_path).parent / p


def _power_law_field(size: int, alpha: float, rng: np.random.Generator) -> np.ndarray:
    """Noise field whose DFT magnitudes are shaped to r^(-alpha), in [0, 1]."""
    noise = rng.standard_normal((size, size))
    f = dft2d(noise).astype(np.complex128)
    freq = np.minimum(np.arange(size), size - np.arange(size)).astype(np.float64)
    r = np.sqrt(freq[:, None] ** 2 + freq[None, :] ** 2)
    scale = np.ones_like(r)
    nonzero = r > 0
    scale[nonzero] = r[nonzero] ** (-alpha)  # DC stays untouched
    f *= scale
    # Inverse DFT via the conjugate trick: idft(F) = conj(dft(conj(F))) / (H*W)
    spatial = np.conj(dft2d(np.conj(f)).astype(np.complex128)) / (size * size)
    return normalize01(spatial.real.astype(np.float32))


def _gray_to_rgb(plane: np.ndarray) -> ImageTensor:
    return ImageTensor(np.repeat(plane[:, :, None], 3, axis=2).astype(np.float32))


def synth_real(n: int, size: int, alpha: float, seed: int) -> list[ImageTensor]:
    """n pseudo-natural images: power-law noise, grayscale copied to RGB.

    size must be a power of two; alpha = 1.0 gives the roughly -2
    power-spectrum slope of natural photographs, alpha = 0 gives flat
    white noise. Image i depends only on (seed, i).
    """
    _check_synth_args(n, size, alpha)
    return [
        _gray_to_rgb(_power_law_field(size, alpha, image_rng(seed, i))) for i in range(n)
    ]


def synth_fake(n: int, size: int, alpha: float, seed: int) -> list[ImageTensor]:
    """n upsampled counterfeits carrying a spectral replica fingerprint.

    Each image is a half-size synth_real field, zero-insertion upsampled
    2x, then smoothed with the separable [0.25, 0.5, 0.25] kernel and
    rescaled to [0, 1].
    """
    _check_synth_args(n, size, alpha)
    if size < 4:
        raise ValueError("fake synthesis needs size >= 4")
    out = []
    for i in range(n):
        half = _power_law_field(size // 2, alpha, image_rng(seed, i))
        up = np.zeros((size, size))
        up[::2, ::2] = half
        out.append(_gray_to_rgb(normalize01(_smooth3(up).astype(np.float32))))
    return out


def _check_synth_args(n: int, size: int, alpha: float) -> None:
    if n < 1:
        raise EmptyInputError("need n >= 1 images")
    if size < 2 or (size & (size - 1)) != 0:
        raise ValueError(f"size must be a power of two >= 2, got {size}")
    if alpha < 0:
        raise ValueError(f"alpha must be non-negative, got {alpha}")


def _smooth3(m: np.ndarray) -> np.ndarray:
    """Separable 3x3 blur with circular wrap, kernel UPSAMPLE_KERNEL_1D^2."""
    k = UPSAMPLE_KERNEL_1D
    acc = np.zeros_like(m)
    for a in (-1, 0, 1):
        row = np.roll(m, a, axis=0) * k[a + 1]
        for b in (-1, 0, 1):
            acc += np.roll(row, b, axis=1) * k[b + 1]
    return acc
