"""Image decode/encode and the canonical float tensor.

Every pipeline stage exchanges ImageTensor values: float32 pixels in
[0, 1], shape (height, width, channels) with channels in {1, 3}.
PNG is read-only (decoded via Pillow); PGM/PPM are read and written
with a hand-rolled binary codec so output bytes are fully pinned down.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import CorruptImageError, UnsupportedFormatError

# Rec. 601 luma weights, the classic "0.299 R + 0.587 G + 0.114 B".
LUMA_WEIGHTS = (0.299, 0.587, 0.114)

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


@dataclass(frozen=True)
class ImageTensor:
    """Decoded raster: float32 array of shape (height, width, channels).

    All values lie in [0, 1]; channels is 1 (grayscale) or 3 (RGB),
    interleaved in the last axis with rows in the first.
    """

    data: np.ndarray

    def __post_init__(self) -> None:
        d = self.data
        if not isinstance(d, np.ndarray) or d.ndim != 3:
            raise ValueError("image data must be a (H, W, C) array")
        if d.shape[0] < 1 or d.shape[1] < 1 or d.shape[2] not in (1, 3):
            raise ValueError(f"bad image shape {d.shape}")
        if d.dtype != np.float32:
            raise ValueError(f"image data must be float32, got {d.dtype}")
        lo = float(d.min())
        hi = float(d.max())
        if not (np.isfinite(lo) and np.isfinite(hi) and 0.0 <= lo and hi <= 1.0):
            raise ValueError(f"pixel values outside [0, 1]: min={lo} max={hi}")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


def tensor_from_array(arr: np.ndarray) -> ImageTensor:
    """Clamp interpolation dust to [0, 1], cast to float32 and wrap."""
    return ImageTensor(np.clip(arr, 0.0, 1.0).astype(np.float32))


def load_image(path: str | Path) -> ImageTensor:
    """Decode a PNG, PGM (P5) or PPM (P6) file.

    PNG alpha channels are dropped; 16-bit samples are scaled by their
    maxval (65535 for PNG, the header maxval for PNM) so all formats
    land on the same [0, 1] range.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(str(path))
    data = path.read_bytes()
    if data.startswith(_PNG_MAGIC):
        return _decode_png(data)
    if data[:2] in (b"P5", b"P6"):
        return _decode_pnm(data)
    raise UnsupportedFormatError(f"not a PNG/PGM/PPM file: {path}")


def save_image(img: ImageTensor, path: str | Path) -> None:
    """Write a binary PGM (1 channel) or PPM (3 channels), maxval 255.

    Quantization is round-half-up: byte = floor(v * 255 + 0.5), so an
    8-bit image read back in and written out again is byte-identical.
    """
    quant = np.floor(img.data.astype(np.float64) * 255.0 + 0.5).astype(np.uint8)
    magic = "P5" if img.channels == 1 else "P6"
    header = f"{magic}\n{img.width} {img.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + quant.tobytes())


def to_grayscale(img: ImageTensor) -> ImageTensor:
    """Collapse RGB to one luma channel; grayscale input passes through."""
    if img.channels == 1:
        return ImageTensor(img.data.copy())
    r, g, b = (img.data[:, :, k].astype(np.float64) for k in range(3))
    luma = LUMA_WEIGHTS[0] * r + LUMA_WEIGHTS[1] * g + LUMA_WEIGHTS[2] * b
    return tensor_from_array(luma[:, :, None])


def resize_bilinear(img: ImageTensor, out_h: int, out_w: int) -> ImageTensor:
    """Bilinear resample onto an out_h x out_w grid.

    Sample positions follow the half-pixel-center convention
    src = (dst + 0.5) * (in / out) - 0.5, clamped to the valid range,
    which makes a same-size resize an exact identity.
    """
    if out_h < 1 or out_w < 1:
        raise ValueError("output dimensions must be >= 1")
    in_h, in_w = img.height, img.width
    src_y = np.clip((np.arange(out_h) + 0.5) * (in_h / out_h) - 0.5, 0.0, in_h - 1.0)
    src_x = np.clip((np.arange(out_w) + 0.5) * (in_w / out_w) - 0.5, 0.0, in_w - 1.0)
    y0 = np.floor(src_y).astype(np.intp)
    x0 = np.floor(src_x).astype(np.intp)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    fy = (src_y - y0)[:, None, None]
    fx = (src_x - x0)[None, :, None]
    d = img.data.astype(np.float64)
    top = (1.0 - fx) * d[y0][:, x0] + fx * d[y0][:, x1]
    bot = (1.0 - fx) * d[y1][:, x0] + fx * d[y1][:, x1]
    return tensor_from_array((1.0 - fy) * top + fy * bot)


def _decode_png(data: bytes) -> ImageTensor:
    try:
        with Image.open(io.BytesIO(data)) as im:
            im.load()
            mode = im.mode
            if mode in ("I", "I;16", "I;16B", "I;16L", "I;16N"):
                # 16-bit grayscale: scale by the full 16-bit range
                arr = np.asarray(im, dtype=np.float64) / 65535.0
                return tensor_from_array(arr[:, :, None])
            if mode == "1":
                im = im.convert("L")
            elif mode in ("LA", "La"):
                im = im.convert("L")
            elif mode not in ("L", "RGB"):
                # palette, RGBA and anything exotic land on plain RGB
                im = im.convert("RGB")
            arr = np.asarray(im, dtype=np.float64) / 255.0
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise CorruptImageError(f"PNG decode failed: {exc}") from exc
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return tensor_from_array(arr)


def _decode_pnm(data: bytes) -> ImageTensor:
    """Parse binary PGM (P5) / PPM (P6), maxval 1..65535, '#' comments."""
    channels = 1 if data[:2] == b"P5" else 3
    pos = 2
    fields: list[int] = []
    try:
        while len(fields) < 3:
            # skip whitespace, treating '#'-to-newline as whitespace too
            while data[pos : pos + 1].isspace():
                pos += 1
            if data[pos : pos + 1] == b"#":
                while data[pos : pos + 1] not in (b"\n", b"\r", b""):
                    pos += 1
                continue
            start = pos
            while not data[pos : pos + 1].isspace():
                pos += 1
            fields.append(int(data[start:pos]))
        pos += 1  # single whitespace byte separates header from raster
    except (ValueError, IndexError) as exc:
        raise CorruptImageError(f"bad PNM header: {exc}") from exc
    width, height, maxval = fields
    if width < 1 or height < 1 or not 1 <= maxval <= 65535:
        raise CorruptImageError(f"bad PNM dimensions {width}x{height} maxval {maxval}")
    dtype = np.dtype(np.uint8) if maxval < 256 else np.dtype(">u2")
    need = height * width * channels * dtype.itemsize
    raw = data[pos : pos + need]
    if len(raw) < need:
        raise CorruptImageError(f"truncated PNM raster: {len(raw)} of {need} bytes")
    arr = np.frombuffer(raw, dtype=dtype).reshape(height, width, channels)
    return tensor_from_array(arr.astype(np.float64) / maxval)
