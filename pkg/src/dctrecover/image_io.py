"""Grayscale image container, PGM/PNG I/O and block partitioning."""

from __future__ import annotations

import os
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    CorruptFile,
    IndivisibleDimensions,
    IoFailure,
    NotGrayscale,
    UnsupportedFormat,
)

__all__ = [
    "GrayImage",
    "BlockLayout",
    "load_image",
    "save_image",
    "make_layout",
    "crop_image",
]


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Immutable grid of integer intensities in ``[0, 2**bit_depth - 1]``.

    ``pixels`` is a read-only ``(height, width)`` array in row-major order.
    """

    width: int
    height: int
    bit_depth: int
    pixels: np.ndarray

    def __post_init__(self):
        px = np.array(self.pixels, dtype=np.int64, copy=True)
        if px.ndim != 2 or px.shape != (self.height, self.width):
            raise ValueError(
                f"pixel array shape {px.shape} does not match {self.height}x{self.width}"
            )
        if self.bit_depth != 8:
            raise UnsupportedFormat(f"bit depth {self.bit_depth} is not supported (only 8)")
        if px.size and (px.min() < self.x_min or px.max() > self.x_max):
            raise ValueError("pixel values outside the bit-depth range")
        px = px.astype(np.uint8)
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @classmethod
    def from_array(cls, array, bit_depth: int = 8) -> "GrayImage":
        array = np.asarray(array)
        if array.ndim != 2:
            raise NotGrayscale(f"expected a 2-D array, got shape {array.shape}")
        return cls(width=array.shape[1], height=array.shape[0], bit_depth=bit_depth, pixels=array)

    @property
    def x_min(self) -> int:
        return 0

    @property
    def x_max(self) -> int:
        return (1 << self.bit_depth) - 1

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and self.bit_depth == other.bit_depth
            and np.array_equal(self.pixels, other.pixels)
        )

    __hash__ = None


@dataclass(frozen=True)
class BlockLayout:
    block_size: int
    blocks_x: int
    blocks_y: int

    @property
    def num_blocks(self) -> int:
        return self.blocks_x * self.blocks_y

    @property
    def width(self) -> int:
        return self.blocks_x * self.block_size

    @property
    def height(self) -> int:
        return self.blocks_y * self.block_size


def make_layout(img: GrayImage, block_size: int = 8) -> BlockLayout:
    """Partition ``img`` into ``block_size`` squares; no padding is done."""
    if block_size < 2:
        raise ValueError("block_size must be at least 2")
    if img.width % block_size or img.height % block_size:
        raise IndivisibleDimensions(
            f"{img.width}x{img.height} image is not divisible into {block_size}x{block_size} blocks"
        )
    return BlockLayout(block_size, img.width // block_size, img.height // block_size)


def crop_image(img: GrayImage, block_size: int = 8) -> GrayImage:
    """Drop trailing rows/columns so both dimensions divide ``block_size``."""
    h = img.height - img.height % block_size
    w = img.width - img.width % block_size
    if h == 0 or w == 0:
        raise IndivisibleDimensions(f"image smaller than one {block_size}x{block_size} block")
    return GrayImage.from_array(img.pixels[:h, :w], img.bit_depth)


_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def _pnm_tokens(data: bytes, count: int):
    """Return ``count`` header tokens and the offset of the byte that
    terminates the last one."""
    tokens = []
    pos, n = 0, len(data)
    while len(tokens) < count:
        while pos < n and (data[pos : pos + 1].isspace() or data[pos] == 0x23):
            if data[pos] == 0x23:  # comment runs to end of line
                while pos < n and data[pos] not in (0x0A, 0x0D):
                    pos += 1
            else:
                pos += 1
        start = pos
        while pos < n and not data[pos : pos + 1].isspace() and data[pos] != 0x23:
            pos += 1
        if start == pos:
            raise CorruptFile("truncated PNM header")
        tokens.append(data[start:pos])
    return tokens, pos


def _read_pnm(data: bytes) -> GrayImage:
    magic = data[:2]
    if magic in (b"P3", b"P6"):
        raise NotGrayscale("PPM colour images are not supported")
    if magic not in (b"P2", b"P5"):
        raise UnsupportedFormat(f"unknown PNM magic {magic!r}")
    tokens, pos = _pnm_tokens(data, 4)
    try:
        width, height, maxval = (int(t) for t in tokens[1:4])
    except ValueError as exc:
        raise CorruptFile(f"bad PNM header: {exc}") from None
    if width <= 0 or height <= 0:
        raise CorruptFile("non-positive image dimensions")
    if maxval <= 0:
        raise CorruptFile("maxval must be positive")
    if maxval > 255:
        raise UnsupportedFormat(f"maxval {maxval} exceeds 8-bit depth")
    n = width * height
    if magic == b"P5":
        # exactly one whitespace byte separates header and raster
        raster = data[pos + 1 : pos + 1 + n]
        if len(raster) != n:
            raise CorruptFile(f"expected {n} raster bytes, found {len(raster)}")
        px = np.frombuffer(raster, dtype=np.uint8).astype(np.int64)
    else:
        body = re.sub(rb"#[^\n\r]*", b" ", data[pos:])
        try:
            px = np.array([int(t) for t in body.split()], dtype=np.int64)
        except ValueError as exc:
            raise CorruptFile(f"bad ASCII raster: {exc}") from None
        if px.size != n:
            raise CorruptFile(f"expected {n} samples, found {px.size}")
    if px.max(initial=0) > maxval:
        raise CorruptFile("sample exceeds maxval")
    return GrayImage(width, height, 8, px.reshape(height, width))


def _read_png(path: Path) -> GrayImage:
    from PIL import Image, UnidentifiedImageError

    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode in ("RGB", "RGBA", "P", "CMYK", "YCbCr", "LAB", "HSV", "LA", "PA"):
                raise NotGrayscale(f"PNG mode {mode} is not grayscale")
            if mode == "1":
                arr = np.asarray(im, dtype=np.uint8) * 255
            elif mode == "L":
                arr = np.asarray(im, dtype=np.uint8)
            else:
                raise UnsupportedFormat(f"PNG mode {mode} is not 8-bit grayscale")
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise CorruptFile(f"cannot decode PNG: {exc}") from None
    return GrayImage.from_array(arr)


def load_image(path) -> GrayImage:
    """Load a PGM (P2/P5, maxval <= 255) or 8-bit grayscale PNG."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except FileNotFoundError:
        raise
    except OSError as exc:
        raise IoFailure(str(exc)) from None
    if data.startswith(_PNG_MAGIC):
        return _read_png(path)
    if len(data) < 2 or data[:1] != b"P":
        raise UnsupportedFormat(f"{path.name}: not a PGM or PNG file")
    return _read_pnm(data)


def save_image(img: GrayImage, path, ascii: bool = False) -> None:
    """Write ``img`` as binary (P5) or ASCII (P2) PGM."""
    path = Path(path)
    header = f"{'P2' if ascii else 'P5'}\n{img.width} {img.height}\n{img.x_max}\n".encode()
    if ascii:
        rows = (" ".join(str(int(v)) for v in row) for row in img.pixels)
        body = ("\n".join(rows) + "\n").encode()
    else:
        body = img.pixels.astype(np.uint8).tobytes()
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(body)
    except OSError as exc:
        raise IoFailure(f"cannot write {os.fspath(path)}: {exc}") from None
