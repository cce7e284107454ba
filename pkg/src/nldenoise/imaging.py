"""Grayscale image I/O, synthetic test images, noise, and SSIM.

Images are stored as float64 arrays in raster order on the canonical
[0, 255] gray scale: 16-bit PGM samples are rescaled by 255/65535 on
load, and saving always clamps, rounds, and writes 8-bit samples.  Only
binary PGM (P5) is supported on disk.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter

from .errors import (
    MalformedHeaderError,
    TruncatedPayloadError,
    UnsupportedFormatError,
)

SSIM_C1 = (0.01 * 255.0) ** 2
SSIM_C2 = (0.03 * 255.0) ** 2
SSIM_WINDOW = 8


@dataclass
class GrayImage:
    """A grayscale image: float64 pixels plus the declared maximum value."""

    pixels: np.ndarray
    maxval: int = 255

    def __post_init__(self):
        p = np.asarray(self.pixels, dtype=np.float64)
        if p.ndim != 2:
            raise ValueError(f"image must be 2-d, got shape {p.shape}")
        self.pixels = p

    @property
    def shape(self):
        return self.pixels.shape

    @property
    def size(self) -> int:
        return self.pixels.size

    def ravel(self) -> np.ndarray:
        return self.pixels.ravel()

    def clipped(self) -> "GrayImage":
        return GrayImage(np.clip(self.pixels, 0.0, self.maxval), self.maxval)


@dataclass(frozen=True)
class NoiseSpec:
    """Additive zero-mean Gaussian noise with a deterministic counter RNG."""

    sigma: float
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("noise level must be nonnegative")


_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _read_token(buf: bytes, pos: int):
    m = _TOKEN.match(buf, pos)
    if m is None:
        raise MalformedHeaderError("unexpected end of PGM header")
    return m.group(1), m.end()


def load_pgm(path) -> GrayImage:
    """Read a binary (P5) PGM file with 8-bit or 16-bit samples.

    16-bit samples are mapped onto the [0, 255] scale (65535 -> 255.0),
    so every loaded image uses the same gray range.
    """
    with open(path, "rb") as fh:
        buf = fh.read()
    magic, pos = _read_token(buf, 0)
    if magic == b"P2":
        raise UnsupportedFormatError("ASCII (P2) PGM is not supported")
    if magic != b"P5":
        raise MalformedHeaderError(f"not a P5 PGM file (magic {magic!r})")
    fields = []
    for _ in range(3):
        tok, pos = _read_token(buf, pos)
        if not tok.isdigit():
            raise MalformedHeaderError(f"non-numeric header field {tok!r}")
        fields.append(int(tok))
    width, height, maxval = fields
    if width <= 0 or height <= 0:
        raise MalformedHeaderError("image dimensions must be positive")
    if not 0 < maxval < 65536:
        raise MalformedHeaderError(f"maxval {maxval} out of range")
    # exactly one whitespace byte separates the header from the payload
    pos += 1
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    need = width * height * dtype.itemsize
    payload = buf[pos:pos + need]
    if len(payload) < need:
        raise TruncatedPayloadError(
            f"payload holds {len(payload)} bytes, need {need}"
        )
    data = np.frombuffer(payload, dtype=dtype).reshape(height, width)
    pixels = data.astype(np.float64)
    if maxval > 255:
        pixels *= 255.0 / 65535.0
    return GrayImage(pixels, 255)


def save_pgm(path, image: GrayImage) -> None:
    """Write an 8-bit binary (P5) PGM file, clamping to [0, 255]."""
    pixels = np.asarray(getattr(image, "pixels", image), dtype=np.float64)
    if pixels.ndim != 2:
        raise UnsupportedFormatError("expected a 2-d image")
    pix = np.clip(np.rint(pixels), 0, 255).astype(np.uint8)
    height, width = pix.shape
    header = f"P5\n{width} {height}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(pix.tobytes())


def add_gaussian_noise(image: GrayImage, spec: NoiseSpec) -> GrayImage:
    """Add unclipped Gaussian noise generated by Philox plus Box-Muller."""
    n = image.size
    bits = np.random.Generator(np.random.Philox(spec.seed))
    pairs = (n + 1) // 2
    # open-interval uniforms keep the log finite
    u1 = (bits.integers(0, 1 << 53, size=pairs) + 0.5) * (2.0 ** -53)
    u2 = bits.integers(0, 1 << 53, size=pairs) * (2.0 ** -53)
    r = np.sqrt(-2.0 * np.log(u1))
    theta = 2.0 * np.pi * u2
    z = np.concatenate([r * np.cos(theta), r * np.sin(theta)])[:n]
    noisy = image.pixels + spec.sigma * z.reshape(image.shape)
    return GrayImage(noisy, image.maxval)


def ssim(a: GrayImage | np.ndarray, b: GrayImage | np.ndarray) -> float:
    """Mean SSIM with a uniform 8x8 sliding window, stride 1."""
    x = np.asarray(getattr(a, "pixels", a), dtype=np.float64)
    y = np.asarray(getattr(b, "pixels", b), dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"image shapes differ: {x.shape} vs {y.shape}")
    w = SSIM_WINDOW
    if min(x.shape) < w:
        raise ValueError(f"images smaller than the {w}x{w} SSIM window")

    def windowed_mean(img):
        # uniform_filter is centered; crop to the valid w x w windows
        full = uniform_filter(img, size=w, mode="constant", origin=-(w // 2))
        return full[: img.shape[0] - w + 1, : img.shape[1] - w + 1]

    mx = windowed_mean(x)
    my = windowed_mean(y)
    vx = windowed_mean(x * x) - mx * mx
    vy = windowed_mean(y * y) - my * my
    cxy = windowed_mean(x * y) - mx * my
    num = (2.0 * mx * my + SSIM_C1) * (2.0 * cxy + SSIM_C2)
    den = (mx * mx + my * my + SSIM_C1) * (vx + vy + SSIM_C2)
    return float(np.mean(num / den))


def synthetic_image(shape=(64, 64), maxval: int = 255, seed: int = 0) -> GrayImage:
    """Piecewise-smooth test image: tilted background, disc, and bar."""
    h, w = shape
    rr, cc = np.mgrid[0:h, 0:w].astype(np.float64)
    img = 60.0 + 90.0 * (rr / max(h - 1, 1)) + 40.0 * (cc / max(w - 1, 1))
    disc = (rr - 0.35 * h) ** 2 + (cc - 0.3 * w) ** 2 < (0.18 * min(h, w)) ** 2
    img[disc] = 210.0
    bar = (np.abs(cc - 0.7 * w) < 0.06 * w) & (rr > 0.2 * h)
    img[bar] = 25.0
    rng = np.random.default_rng(seed)
    img += rng.uniform(-2.0, 2.0, size=shape)  # mild texture
    return GrayImage(np.clip(img, 0.0, maxval), maxval)
