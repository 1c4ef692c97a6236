"""Binary coefficient sidecar: the known coefficients of an image plus the
erase mask.  Masked values are never written, so a reader cannot peek.

Layout (little endian)::

    magic      4s   b"DCTC"
    version    u16  1
    N          u16
    width      u32
    height     u32
    bit_depth  u8
    count      u16  number of missing positions
    mask       count x (u8 k, u8 l)
    coeffs     float64, blocks in raster order, each block's frequencies
               in raster order, missing positions skipped
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .dct import CoeffGrid
from .errors import CorruptFile, DimensionMismatch, InvalidCount, InvalidMask, IoFailure
from .image_io import BlockLayout
from .mask import EraseMask

__all__ = ["MAGIC", "VERSION", "write_sidecar", "read_sidecar", "encode", "decode"]

MAGIC = b"DCTC"
VERSION = 1
_HEAD = struct.Struct("<4sHHIIBH")


def encode(grid: CoeffGrid, mask: EraseMask, bit_depth: int = 8) -> bytes:
    lay = grid.layout
    n = lay.block_size
    if mask.block_size != n:
        raise DimensionMismatch("mask and grid disagree on block size")
    head = _HEAD.pack(MAGIC, VERSION, n, lay.width, lay.height, bit_depth, mask.count)
    pos = b"".join(struct.pack("<BB", k, l) for k, l in mask.missing)
    keep = ~mask.as_array().ravel()
    flat = grid.coeffs.reshape(lay.num_blocks, n * n)[:, keep]
    return head + pos + flat.astype("<f8").tobytes()


def decode(data: bytes):
    """Return ``(grid, mask, bit_depth)``; missing coefficients read as 0."""
    if len(data) < _HEAD.size:
        raise CorruptFile("sidecar shorter than its header")
    magic, version, n, width, height, bit_depth, count = _HEAD.unpack_from(data)
    if magic != MAGIC:
        raise CorruptFile(f"bad sidecar magic {magic!r}")
    if version != VERSION:
        raise CorruptFile(f"unsupported sidecar version {version}")
    if n < 2 or width == 0 or height == 0 or width % n or height % n:
        raise CorruptFile(f"inconsistent geometry {width}x{height} with N={n}")
    if count >= n * n:
        raise InvalidCount(f"sidecar marks {count} of {n * n} coefficients missing")
    off = _HEAD.size
    raw = data[off : off + 2 * count]
    if len(raw) != 2 * count:
        raise CorruptFile("truncated mask list")
    missing = tuple((raw[2 * i], raw[2 * i + 1]) for i in range(count))
    try:
        mask = EraseMask(n, missing)
    except InvalidMask as exc:
        raise CorruptFile(f"bad mask list: {exc}") from None
    off += 2 * count
    layout = BlockLayout(n, width // n, height // n)
    keep = ~mask.as_array().ravel()
    expect = layout.num_blocks * int(keep.sum()) * 8
    body = data[off:]
    if len(body) != expect:
        raise CorruptFile(f"expected {expect} coefficient bytes, found {len(body)}")
    vals = np.frombuffer(body, dtype="<f8").reshape(layout.num_blocks, -1)
    if not np.all(np.isfinite(vals)):
        raise CorruptFile("non-finite coefficient in sidecar")
    full = np.zeros((layout.num_blocks, n * n))
    full[:, keep] = vals
    grid = CoeffGrid(layout, full.reshape(layout.blocks_y, layout.blocks_x, n, n))
    return grid, mask, int(bit_depth)


def write_sidecar(path, grid: CoeffGrid, mask: EraseMask, bit_depth: int = 8) -> None:
    try:
        Path(path).write_bytes(encode(grid, mask, bit_depth))
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from None


def read_sidecar(path):
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from None
    return decode(data)
