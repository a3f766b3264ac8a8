"""16-bit grayscale images, regions of interest and binary PGM I/O."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ConfigError


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Immutable row-major uint16 image; ``pixels`` has shape (height, width)."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2 or px.shape[0] < 1 or px.shape[1] < 1:
            raise ConfigError("image must be a non-empty 2-D array")
        if px.dtype != np.uint16:
            if np.any(px < 0) or np.any(px > 65535) or not np.all(np.isfinite(px)):
                raise ConfigError("pixel values must lie in [0, 65535]")
            px = px.astype(np.uint16)
        px = px.copy()
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def __eq__(self, other):
        return isinstance(other, GrayImage) and np.array_equal(self.pixels, other.pixels)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Roi:
    """Rectangle ``(x, y, w, h)`` in pixels, or an explicit boolean mask."""

    kind: str
    bounds: tuple | None = None
    mask: np.ndarray | None = None

    @classmethod
    def rect(cls, x, y, w, h):
        return cls("rectangle", bounds=(int(x), int(y), int(w), int(h)))

    @classmethod
    def from_mask(cls, mask):
        return cls("mask", mask=np.asarray(mask, dtype=bool))

    @classmethod
    def parse(cls, text: str):
        """``"x,y,w,h"`` as used on the command line."""
        try:
            x, y, w, h = (int(v) for v in text.split(","))
        except ValueError:
            raise ConfigError(f"ROI {text!r}: expected x,y,w,h integers") from None
        return cls.rect(x, y, w, h)

    def to_mask(self, img: GrayImage) -> np.ndarray:
        if self.kind == "rectangle":
            x, y, w, h = self.bounds
            if w < 1 or h < 1:
                raise ConfigError(f"ROI {self.bounds}: empty rectangle")
            if x < 0 or y < 0 or x + w > img.width or y + h > img.height:
                raise ConfigError(f"ROI {self.bounds}: outside the {img.width}x{img.height} image")
            m = np.zeros(img.pixels.shape, dtype=bool)
            m[y:y + h, x:x + w] = True
            return m
        if self.kind == "mask":
            if self.mask.shape != img.pixels.shape:
                raise ConfigError("ROI mask shape does not match the image")
            if not self.mask.any():
                raise ConfigError("ROI mask is empty")
            return self.mask
        raise ConfigError(f"ROI kind {self.kind!r}: must be 'rectangle' or 'mask'")

    def describe(self) -> dict:
        if self.kind == "rectangle":
            return {"kind": "rectangle", "x": self.bounds[0], "y": self.bounds[1],
                    "w": self.bounds[2], "h": self.bounds[3]}
        return {"kind": "mask", "pixels": int(self.mask.sum())}


def _header_tokens(data: bytes, count: int):
    tokens, i = [], 0
    while len(tokens) < count:
        while i < len(data) and data[i:i + 1].isspace():
            i += 1
        if data[i:i + 1] == b"#":
            while i < len(data) and data[i:i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        j = i
        while j < len(data) and not data[j:j + 1].isspace():
            j += 1
        if j == i:
            raise ConfigError("truncated PGM header")
        tokens.append(data[i:j])
        i = j
    # exactly one whitespace byte separates the header from the raster
    return tokens, i + 1


def decode_pgm(data: bytes) -> GrayImage:
    tokens, offset = _header_tokens(data, 4)
    if tokens[0] != b"P5":
        raise ConfigError("not a binary PGM (magic P5 expected)")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise ConfigError("malformed PGM header") from None
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise ConfigError("malformed PGM header")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    n = width * height * dtype.itemsize
    raster = data[offset:offset + n]
    if len(raster) != n:
        raise ConfigError("truncated PGM raster")
    px = np.frombuffer(raster, dtype=dtype).reshape(height, width)
    return GrayImage(px.astype(np.uint16))


def encode_pgm(img: GrayImage) -> bytes:
    header = f"P5\n{img.width} {img.height}\n65535\n".encode("ascii")
    return header + img.pixels.astype(">u2").tobytes()


def read_pgm(path: str | Path) -> GrayImage:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read image {path}: {exc}") from exc
    return decode_pgm(data)


def write_pgm(path: str | Path, img: GrayImage) -> Path:
    path = Path(path)
    path.write_bytes(encode_pgm(img))
    return path
