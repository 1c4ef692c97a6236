"""Scan baseline for DC recovery.

Blocks are visited in row-major order.  The first block gets the midpoint
of its feasible DC interval; every later block takes the DC that
minimizes the absolute pixel differences across its left and top edges
against blocks already fixed.  With the block's own AC pattern ``c`` and
neighbour pixels ``x_nb`` that is ``min_t sum |x_nb - c - t|``, solved by
the median, ``t = DC / N``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dct import CoeffGrid, DctBasis, blockify, inverse_dct, unblockify
from .errors import NotDcOnlyMask
from .image_io import BlockLayout, GrayImage
from .lp_model import pair_arrays
from .mask import EraseMask, dc_only_mask
from .recovery import to_image

__all__ = ["ScanState", "scan_dc_estimates", "scan_align_dc", "dc_interval", "boundary_variation"]


@dataclass
class ScanState:
    visited: np.ndarray
    dc_estimate: np.ndarray
    order: list

    @property
    def complete(self) -> bool:
        return bool(self.visited.all())


def dc_interval(ac_block: np.ndarray, block_size: int, x_min: float, x_max: float):
    """DC values keeping every pixel of ``ac_block + DC/N`` in range."""
    n = block_size
    lo = max(n * x_min, n * (x_min - float(ac_block.min())))
    hi = min(n * x_max, n * (x_max - float(ac_block.max())))
    if lo > hi:
        # no DC fits: take the value nearest both limits
        lo = hi = 0.5 * (lo + hi)
    return lo, hi


def _ac_blocks(grid: CoeffGrid) -> np.ndarray:
    coeffs = grid.coeffs.copy()
    coeffs[:, :, 0, 0] = 0.0
    return blockify(inverse_dct(grid.with_coeffs(coeffs)), grid.layout.block_size)


def scan_dc_estimates(grid_known: CoeffGrid, mask: EraseMask | None = None,
                      x_min: float = 0.0, x_max: float = 255.0) -> ScanState:
    """Run the scan and return the per-block DC estimates."""
    layout = grid_known.layout
    n = layout.block_size
    if mask is not None and not mask.is_dc_only:
        raise NotDcOnlyMask(f"scan baseline handles the DC-only mask, got {mask.label()}")
    ac = _ac_blocks(grid_known)
    by, bx = layout.blocks_y, layout.blocks_x
    dc = np.zeros((by, bx))
    visited = np.zeros((by, bx), dtype=bool)
    order = []
    for r in range(by):
        for c in range(bx):
            lo, hi = dc_interval(ac[r, c], n, x_min, x_max)
            diffs = []
            if c > 0:
                left = ac[r, c - 1][:, -1] + dc[r, c - 1] / n
                diffs.append(left - ac[r, c][:, 0])
            if r > 0:
                top = ac[r - 1, c][-1, :] + dc[r - 1, c] / n
                diffs.append(top - ac[r, c][0, :])
            if diffs:
                est = n * float(np.median(np.concatenate(diffs)))
            else:
                est = 0.5 * (lo + hi)
            dc[r, c] = min(max(est, lo), hi)
            visited[r, c] = True
            order.append((r, c))
    return ScanState(visited, dc, order)


def scan_field(grid_known: CoeffGrid, mask: EraseMask | None = None,
               x_min: float = 0.0, x_max: float = 255.0) -> np.ndarray:
    """Real-valued pixel field of the scan estimate."""
    state = scan_dc_estimates(grid_known, mask, x_min, x_max)
    n = grid_known.layout.block_size
    ac = _ac_blocks(grid_known)
    return unblockify(ac + state.dc_estimate[:, :, None, None] / n)


def scan_align_dc(grid_known: CoeffGrid, layout: BlockLayout | None = None,
                  basis: DctBasis | None = None, x_min: int = 0, x_max: int = 255,
                  mask: EraseMask | None = None) -> GrayImage:
    """Scan-baseline recovery of the DC coefficients, rounded and clamped."""
    if layout is not None and layout != grid_known.layout:
        raise ValueError("layout does not match the coefficient grid")
    if basis is not None and basis.block_size != grid_known.layout.block_size:
        raise ValueError("basis does not match the block size")
    mask = mask or dc_only_mask(grid_known.layout.block_size)
    return to_image(scan_field(grid_known, mask, x_min, x_max), x_min, x_max)


def boundary_variation(field_: np.ndarray, layout: BlockLayout, cross_block_only: bool = True) -> float:
    """Sum of absolute neighbour differences, over block-boundary pairs only
    or over all 4-adjacent pairs."""
    first, second = pair_arrays(layout, dc_only=cross_block_only)
    flat = np.asarray(field_, dtype=np.float64).ravel()
    return float(np.abs(flat[first] - flat[second]).sum())

