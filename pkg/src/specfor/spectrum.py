"""Fourier-domain transform chain: DFT, center shift, log compression, normalization.

The normalized log-magnitude spectrum is the detector's working
representation. Upsampling layers in generators imprint periodic
replicas of low-frequency content there, and the log transform keeps
those visible next to the dominant DC term.

Transforms are unnormalized and follow

    F(u, v) = sum_x sum_y f(x, y) * exp(-2*pi*i*(u*x/H + v*y/W))

so Parseval reads sum|f|^2 = (1/(H*W)) * sum|F|^2. Complex spectra are
stored as complex64, magnitudes as float32.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputTooLargeError, NonFiniteInputError
from .imagio import ImageTensor

# Hard guard for the O(N^4)-style direct evaluation.
NAIVE_MAX_ELEMENTS = 64 * 64

_bitrev_cache: dict[int, np.ndarray] = {}


@dataclass(frozen=True)
class Spectrum:
    """Per-channel normalized log-magnitude spectrum of an image.

    data is float32 of shape (H, W, C) with values in [0, 1];
    shifted records whether DC has been moved to the center.
    """

    data: np.ndarray
    shifted: bool

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def _bit_reverse_indices(n: int) -> np.ndarray:
    if n not in _bitrev_cache:
        levels = n.bit_length() - 1
        idx = np.arange(n)
        rev = np.zeros(n, dtype=np.intp)
        for _ in range(levels):
            rev = (rev << 1) | (idx & 1)
            idx = idx >> 1
        _bitrev_cache[n] = rev
    return _bitrev_cache[n]


def _fft_rows(x: np.ndarray) -> np.ndarray:
    """Radix-2 decimation-in-time FFT along the last axis of a 2D batch.

    x: (batch, n) with n a power of two. Works in complex128 and
    processes all rows of the batch through each butterfly stage at once.
    """
    n = x.shape[-1]
    y = x[:, _bit_reverse_indices(n)].astype(np.complex128)
    size = 2
    while size <= n:
        half = size // 2
        twiddle = np.exp((-2j * np.pi / size) * np.arange(half))
        blocks = y.reshape(-1, n // size, size)
        even = blocks[:, :, :half].copy()
        odd = blocks[:, :, half:] * twiddle
        blocks[:, :, :half] = even + odd
        blocks[:, :, half:] = even - odd
        size *= 2
    return y


def dft2d(channel: np.ndarray) -> np.ndarray:
    """2D DFT of one real or complex channel, returned as complex64.

    Power-of-two dimensions take the fast row-column FFT path; anything
    else falls back to direct evaluation (and inherits its size guard).
    """
    c = np.asarray(channel)
    if c.ndim != 2 or c.shape[0] < 1 or c.shape[1] < 1:
        raise ValueError(f"expected a 2D matrix, got shape {c.shape}")
    if not np.all(np.isfinite(c)):
        raise NonFiniteInputError("input contains NaN or infinity")
    h, w = c.shape
    if not (_is_pow2(h) and _is_pow2(w)):
        return dft2d_naive(c)
    rows = _fft_rows(c.astype(np.complex128))
    full = _fft_rows(rows.T.copy()).T
    return full.astype(np.complex64)


def dft2d_naive(channel: np.ndarray) -> np.ndarray:
    """Direct double-sum DFT in double precision; the oracle for dft2d.

    No recursion, no butterflies: the exponential factors are tabulated
    and the two sums are evaluated as plain matrix products. Guarded to
    H*W <= 64*64 because cost grows with the square of the element count.
    """
    c = np.asarray(channel)
    if c.ndim != 2 or c.shape[0] < 1 or c.shape[1] < 1:
        raise ValueError(f"expected a 2D matrix, got shape {c.shape}")
    h, w = c.shape
    if h * w > NAIVE_MAX_ELEMENTS:
        raise InputTooLargeError(f"{h}x{w} exceeds the {NAIVE_MAX_ELEMENTS}-element guard")
    eu = np.exp((-2j * np.pi / h) * np.outer(np.arange(h), np.arange(h)))
    ev = np.exp((-2j * np.pi / w) * np.outer(np.arange(w), np.arange(w)))
    return (eu @ c.astype(np.complex128) @ ev.T).astype(np.complex64)


def fftshift(m: np.ndarray) -> np.ndarray:
    """Roll a 2D matrix so the zero-frequency bin lands at (H//2, W//2).

    [0, 1, 2, 3] -> [2, 3, 0, 1]; [0, 1, 2] -> [2, 0, 1]. For even
    dimensions the shift is its own inverse.
    """
    if m.ndim != 2:
        raise ValueError(f"expected a 2D matrix, got shape {m.shape}")
    return np.roll(m, (m.shape[0] // 2, m.shape[1] // 2), axis=(0, 1))


def log_magnitude(m: np.ndarray) -> np.ndarray:
    """ln(1 + |F|) as float32; keeps zeros at zero and compresses DC."""
    return np.log1p(np.abs(m)).astype(np.float32)


def normalize01(m: np.ndarray) -> np.ndarray:
    """Min-max rescale to [0, 1]; a constant matrix maps to all zeros."""
    m = np.asarray(m, dtype=np.float32)
    lo = m.min()
    hi = m.max()
    if hi == lo:
        return np.zeros_like(m)
    return (m - lo) / (hi - lo)


def transform_image(img: ImageTensor) -> Spectrum:
    """Full per-channel chain: DFT -> center shift -> ln(1+|F|) -> [0, 1].

    Output has the same (H, W, C) as the input; each channel is
    normalized independently against its own min and max.
    """
    planes = []
    for k in range(img.channels):
        f = dft2d(img.data[:, :, k])
        planes.append(normalize01(log_magnitude(fftshift(f))))
    return Spectrum(np.stack(planes, axis=-1), shifted=True)
