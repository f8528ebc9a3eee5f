"""Training-time geometric augmentation.

A draw of flip / zoom / rotation / shift is composed into a single
2x3 affine map and applied with one bilinear resample, so the image
is interpolated exactly once. Out-of-range samples reflect at the
borders with the edge pixel duplicated (... c b a | a b c d | d c b ...),
which preserves edge continuity instead of smearing in a fill color.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .imagio import ImageTensor, tensor_from_array

RNG_DRAWS_PER_CALL = 5  # rotation, shift x, shift y, zoom, flip


@dataclass(frozen=True)
class AugmentConfig:
    max_rotation_deg: float = 15.0
    max_shift_frac: float = 0.10
    max_zoom_frac: float = 0.10
    hflip_prob: float = 0.5
    enabled: bool = True

    def __post_init__(self) -> None:
        if self.max_rotation_deg < 0 or self.max_shift_frac < 0 or self.max_zoom_frac < 0:
            raise ValueError("augmentation ranges must be non-negative")
        if self.max_zoom_frac >= 1.0:
            raise ValueError("max_zoom_frac must stay below 1")
        if not 0.0 <= self.hflip_prob <= 1.0:
            raise ValueError("hflip_prob must lie in [0, 1]")


def reflect_index(i: int, n: int) -> int:
    """Map a signed index into [0, n) by reflecting at both edges.

    The edge sample is duplicated: for n=4 the extension reads
    ... 1 0 | 0 1 2 3 | 3 2 ... so reflect_index(-1, 4) == 0 and
    reflect_index(4, 4) == 3. Equivalent to iterating the reflection
    until the index is in range.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    j = i % (2 * n)
    return j if j < n else 2 * n - 1 - j


def _reflect_array(idx: np.ndarray, n: int) -> np.ndarray:
    j = idx % (2 * n)
    return np.where(j < n, j, 2 * n - 1 - j)


def affine_sample(img: ImageTensor, t: np.ndarray) -> ImageTensor:
    """Resample an image through a 2x3 affine map of output to input coords.

    t maps homogeneous output pixel coordinates (x, y, 1), x = column and
    y = row, to source coordinates; each output pixel is the bilinear
    blend of the four surrounding source pixels, with the neighbor
    indices reflected back into range. Identity t copies the image.
    """
    t = np.asarray(t, dtype=np.float64)
    if t.shape != (2, 3):
        raise ValueError(f"expected a 2x3 matrix, got {t.shape}")
    h, w = img.height, img.width
    ys, xs = np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij")
    sx = t[0, 0] * xs + t[0, 1] * ys + t[0, 2]
    sy = t[1, 0] * xs + t[1, 1] * ys + t[1, 2]
    x0 = np.floor(sx).astype(np.int64)
    y0 = np.floor(sy).astype(np.int64)
    fx = (sx - x0)[:, :, None]
    fy = (sy - y0)[:, :, None]
    x0r = _reflect_array(x0, w)
    x1r = _reflect_array(x0 + 1, w)
    y0r = _reflect_array(y0, h)
    y1r = _reflect_array(y0 + 1, h)
    d = img.data.astype(np.float64)
    top = (1.0 - fx) * d[y0r, x0r] + fx * d[y0r, x1r]
    bot = (1.0 - fx) * d[y1r, x0r] + fx * d[y1r, x1r]
    return tensor_from_array((1.0 - fy) * top + fy * bot)


def _translate(tx: float, ty: float) -> np.ndarray:
    return np.array([[1.0, 0.0, tx], [0.0, 1.0, ty], [0.0, 0.0, 1.0]])


def random_augment(img: ImageTensor, cfg: AugmentConfig, rng: np.random.Generator) -> ImageTensor:
    """Apply one random flip/zoom/rotate/shift combination.

    Always consumes exactly RNG_DRAWS_PER_CALL uniforms from rng, even
    when a range is zero or cfg.enabled is off, so callers can rely on
    stream alignment. The four operations act about the image center
    and are fused into a single affine_sample call.
    """
    theta_deg = rng.uniform(-cfg.max_rotation_deg, cfg.max_rotation_deg)
    dx = rng.uniform(-cfg.max_shift_frac, cfg.max_shift_frac) * img.width
    dy = rng.uniform(-cfg.max_shift_frac, cfg.max_shift_frac) * img.height
    zoom = rng.uniform(1.0 - cfg.max_zoom_frac, 1.0 + cfg.max_zoom_frac)
    flip = rng.uniform(0.0, 1.0) < cfg.hflip_prob
    if not cfg.enabled:
        return ImageTensor(img.data.copy())

    cx = (img.width - 1) / 2.0
    cy = (img.height - 1) / 2.0
    center = _translate(cx, cy)
    uncenter = _translate(-cx, -cy)

    # Content moves through flip -> zoom -> rotate -> shift; sampling
    # needs the inverse, so invert each step and compose in reverse.
    inv_flip = np.eye(3)
    if flip:
        inv_flip = center @ np.diag([-1.0, 1.0, 1.0]) @ uncenter
    inv_zoom = center @ np.diag([1.0 / zoom, 1.0 / zoom, 1.0]) @ uncenter
    theta = np.deg2rad(theta_deg)
    rot = np.array(
        [
            [np.cos(theta), np.sin(theta), 0.0],
            [-np.sin(theta), np.cos(theta), 0.0],
            [0.0, 0.0, 1.0],
        ]
    )
    inv_rot = center @ rot @ uncenter
    inv_shift = _translate(-dx, -dy)

    t = inv_flip @ inv_zoom @ inv_rot @ inv_shift
    return affine_sample(img, t[:2, :])
