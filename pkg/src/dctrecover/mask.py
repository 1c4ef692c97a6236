"""Which block frequencies are missing, and how to fill them for display."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .dct import CoeffGrid, build_basis, coefficient_bound_table
from .errors import InvalidCount, InvalidMask

__all__ = [
    "EraseMask",
    "FillPolicy",
    "zigzag_order",
    "most_significant_mask",
    "dc_only_mask",
    "parse_mask",
    "apply_mask",
]


@lru_cache(maxsize=16)
def zigzag_order(block_size: int) -> tuple[tuple[int, int], ...]:
    """JPEG zigzag traversal of an N x N block as ``(k, l)`` = (row, column)."""
    n = block_size
    order = []
    for s in range(2 * n - 1):
        rows = range(max(0, s - n + 1), min(s, n - 1) + 1)
        # odd anti-diagonals run top-right to bottom-left
        for k in (rows if s % 2 else reversed(rows)):
            order.append((k, s - k))
    return tuple(order)


@dataclass(frozen=True)
class EraseMask:
    """Frequencies erased uniformly from every block."""

    block_size: int
    missing: tuple[tuple[int, int], ...]

    def __post_init__(self):
        n = self.block_size
        missing = tuple((int(k), int(l)) for k, l in self.missing)
        if len(set(missing)) != len(missing):
            raise InvalidMask("duplicate frequency positions in mask")
        for k, l in missing:
            if not (0 <= k < n and 0 <= l < n):
                raise InvalidMask(f"position ({k}, {l}) outside a {n}x{n} block")
        if len(missing) >= n * n:
            raise InvalidCount("all coefficients missing: nothing left to recover from")
        object.__setattr__(self, "missing", missing)

    @property
    def count(self) -> int:
        return len(self.missing)

    @property
    def includes_dc(self) -> bool:
        return (0, 0) in self.missing

    @property
    def is_dc_only(self) -> bool:
        return self.missing == ((0, 0),)

    def as_array(self) -> np.ndarray:
        """Boolean ``(N, N)`` array, True where missing."""
        out = np.zeros((self.block_size, self.block_size), dtype=bool)
        for k, l in self.missing:
            out[k, l] = True
        return out

    def label(self) -> str:
        return ",".join(f"{k}:{l}" for k, l in self.missing)


def most_significant_mask(count: int, block_size: int = 8) -> EraseMask:
    """The first ``count`` zigzag positions, starting from DC."""
    if not 1 <= count < block_size * block_size:
        raise InvalidCount(
            f"U={count} must lie in [1, {block_size * block_size - 1}] for N={block_size}"
        )
    return EraseMask(block_size, zigzag_order(block_size)[:count])


def dc_only_mask(block_size: int = 8) -> EraseMask:
    return EraseMask(block_size, ((0, 0),))


def parse_mask(text: str, block_size: int = 8) -> EraseMask:
    """Parse ``dc``, ``top:U`` or a comma-separated ``k:l`` list."""
    text = text.strip().lower()
    if text in ("dc", "dc-only"):
        return dc_only_mask(block_size)
    if text.startswith("top:"):
        try:
            count = int(text[4:])
        except ValueError:
            raise InvalidMask(f"bad count in mask text {text!r}") from None
        return most_significant_mask(count, block_size)
    positions = []
    for item in filter(None, (p.strip() for p in text.split(","))):
        try:
            k, l = (int(v) for v in item.split(":"))
        except ValueError:
            raise InvalidMask(f"bad position {item!r}; expected k:l") from None
        positions.append((k, l))
    if not positions:
        raise InvalidMask("empty mask")
    return EraseMask(block_size, tuple(positions))


class FillPolicy(enum.Enum):
    MIDPOINT = "midpoint"
    ZERO = "zero"


def apply_mask(grid: CoeffGrid, mask: EraseMask, fill: FillPolicy = FillPolicy.MIDPOINT,
               x_min: float = 0.0, x_max: float = 255.0) -> CoeffGrid:
    """Replace the masked coefficients of every block; the rest is untouched."""
    n = grid.layout.block_size
    if mask.block_size != n:
        raise InvalidMask(f"mask is for N={mask.block_size}, grid has N={n}")
    coeffs = grid.coeffs.copy()
    if fill is FillPolicy.ZERO:
        values = np.zeros((n, n))
    else:
        lo, hi = coefficient_bound_table(build_basis(n), x_min, x_max)
        values = 0.5 * (lo + hi)
    for k, l in mask.missing:
        coeffs[:, :, k, l] = values[k, l]
    return grid.with_coeffs(coeffs)
