"""Orthonormal N x N block DCT and the pixel-from-coefficient basis.

Pixel ``x(i, j)`` of a block is ``sum_{k,l} A(i,j,k,l) y(k,l)`` with
``A(i,j,k,l) = C(k) C(l) cos((i+1/2) k pi / N) cos((j+1/2) l pi / N)``,
``C(0) = sqrt(1/N)`` and ``C(k>0) = sqrt(2/N)``.  The transform is
orthogonal, so the forward direction is ``y = A' x``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .image_io import BlockLayout, GrayImage

__all__ = [
    "DctBasis",
    "CoeffGrid",
    "build_basis",
    "forward_dct",
    "inverse_dct",
    "coefficient_bounds",
    "coefficient_bound_table",
    "blockify",
    "unblockify",
]


@dataclass(frozen=True, eq=False)
class DctBasis:
    """Dense basis for one block.

    ``matrix[i*N + j, k*N + l] == A(i, j, k, l)``; ``cosines[k, i]`` is the
    1-D factor ``C(k) cos((i+1/2) k pi / N)`` so that the 2-D basis is the
    outer product of two rows of it.
    """

    block_size: int
    cosines: np.ndarray
    matrix: np.ndarray

    def entry(self, i: int, j: int, k: int, l: int) -> float:
        n = self.block_size
        return float(self.matrix[i * n + j, k * n + l])

    def column(self, k: int, l: int) -> np.ndarray:
        """Pixel pattern (N x N) of a unit coefficient at ``(k, l)``."""
        n = self.block_size
        return self.matrix[:, k * n + l].reshape(n, n)


@lru_cache(maxsize=16)
def _cached_basis(n: int) -> DctBasis:
    idx = np.arange(n)
    scale = np.full(n, np.sqrt(2.0 / n))
    scale[0] = np.sqrt(1.0 / n)
    cosines = scale[:, None] * np.cos((idx[None, :] + 0.5) * idx[:, None] * np.pi / n)
    # A[(i,j),(k,l)] = T[k,i] * T[l,j]
    matrix = np.einsum("ki,lj->ijkl", cosines, cosines).reshape(n * n, n * n)
    matrix[:, 0] = 1.0 / n
    cosines.setflags(write=False)
    matrix.setflags(write=False)
    return DctBasis(n, cosines, matrix)


def build_basis(block_size: int = 8) -> DctBasis:
    if block_size < 2:
        raise ValueError("block_size must be at least 2")
    return _cached_basis(int(block_size))


@dataclass(frozen=True, eq=False)
class CoeffGrid:
    """Per-block coefficients, ``coeffs[by, bx, k, l]``."""

    layout: BlockLayout
    coeffs: np.ndarray

    def __post_init__(self):
        lay = self.layout
        n = lay.block_size
        c = np.array(self.coeffs, dtype=np.float64, copy=True)
        if c.shape != (lay.blocks_y, lay.blocks_x, n, n):
            raise ValueError(f"coefficient array shape {c.shape} inconsistent with layout {lay}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def with_coeffs(self, coeffs) -> "CoeffGrid":
        return CoeffGrid(self.layout, coeffs)

    def block(self, by: int, bx: int) -> np.ndarray:
        return self.coeffs[by, bx]


def blockify(field: np.ndarray, block_size: int) -> np.ndarray:
    """``(H, W)`` field to ``(H/N, W/N, N, N)`` blocks."""
    h, w = field.shape
    n = block_size
    return field.reshape(h // n, n, w // n, n).swapaxes(1, 2)


def unblockify(blocks: np.ndarray) -> np.ndarray:
    by, bx, n, _ = blocks.shape
    return blocks.swapaxes(1, 2).reshape(by * n, bx * n)


def forward_dct(img: GrayImage | np.ndarray, layout: BlockLayout) -> CoeffGrid:
    """Block coefficients ``y = A' x`` for every block of ``img``."""
    px = img.pixels if isinstance(img, GrayImage) else np.asarray(img)
    if px.shape != (layout.height, layout.width):
        raise ValueError(f"image shape {px.shape} does not match layout {layout}")
    t = build_basis(layout.block_size).cosines
    blocks = blockify(px.astype(np.float64), layout.block_size)
    return CoeffGrid(layout, t @ blocks @ t.T)


def inverse_dct(grid: CoeffGrid) -> np.ndarray:
    """Real-valued pixel field ``x = A y``; no rounding or clamping."""
    t = build_basis(grid.layout.block_size).cosines
    return unblockify(t.T @ grid.coeffs @ t)


def coefficient_bounds(basis: DctBasis, k: int, l: int, x_min: float, x_max: float):
    """Range of ``y(k, l)`` over all blocks with pixels in ``[x_min, x_max]``.

    The extremes are attained by putting ``x_max`` where the basis pattern
    is positive and ``x_min`` where it is negative.  Written as centre plus
    radius: the centre is the coefficient of the mid-gray block (exactly
    ``N * mid`` for DC and ``0`` for every AC term, whose pattern sums to
    zero) and the radius is ``(x_max - x_min)/2 * sum |A(., ., k, l)|``.
    """
    n = basis.block_size
    if not (0 <= k < n and 0 <= l < n):
        raise ValueError(f"frequency ({k}, {l}) outside a {n}x{n} block")
    if (k, l) == (0, 0):
        # every DC basis entry is exactly 1/N
        return float(n * x_min), float(n * x_max)
    radius = 0.5 * (x_max - x_min) * float(np.abs(basis.column(k, l)).sum())
    return -radius, radius


def coefficient_bound_table(basis: DctBasis, x_min: float, x_max: float):
    """``(lo, hi)`` arrays of shape ``(N, N)`` from :func:`coefficient_bounds`."""
    n = basis.block_size
    lo = np.empty((n, n))
    hi = np.empty((n, n))
    for k in range(n):
        for l in range(n):
            lo[k, l], hi[k, l] = coefficient_bounds(basis, k, l, x_min, x_max)
    return lo, hi
