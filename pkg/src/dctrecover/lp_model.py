"""Assembly of the coefficient-recovery linear program.

Variables are pixel values ``x`` (full form only), unknown block
coefficients ``y`` and one ``h`` per neighbouring pixel pair.  The
objective is ``sum h`` with ``h >= |x_first - x_second|`` written as two
inequality rows per pair; pixels are tied to coefficients by ``x = A y``
with every known coefficient folded into a constant pixel offset.

The presolved form substitutes ``x = offset + G y`` everywhere, so only
``y`` and ``h`` remain as columns and the pixel bounds become ranged rows
(or plain bounds on ``y`` when each block has a single unknown).
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .dct import CoeffGrid, DctBasis, coefficient_bounds, inverse_dct
from .errors import DimensionMismatch, InvalidMask
from .image_io import BlockLayout
from .mask import EraseMask

__all__ = [
    "PixelPair",
    "VarRole",
    "LpProblem",
    "pair_arrays",
    "select_pairs",
    "build_problem",
    "true_assignment",
    "write_lp",
    "read_lp",
]


@dataclass(frozen=True)
class PixelPair:
    first: tuple[int, int]
    second: tuple[int, int]
    cross_block: bool


def pair_arrays(layout: BlockLayout, dc_only: bool):
    """4-neighbour pairs as flat pixel indices ``(first, second)``.

    Horizontal pairs come first, each group in row-major order.  With
    ``dc_only`` only pairs straddling a block boundary are kept.
    """
    h, w, n = layout.height, layout.width, layout.block_size
    idx = np.arange(h * w).reshape(h, w)
    # horizontal: (r, c) - (r, c+1); vertical: (r, c) - (r+1, c)
    hf, hs = idx[:, :-1], idx[:, 1:]
    vf, vs = idx[:-1, :], idx[1:, :]
    if dc_only:
        hkeep = (np.arange(w - 1) % n) == n - 1
        vkeep = (np.arange(h - 1) % n) == n - 1
        hf, hs = hf[:, hkeep], hs[:, hkeep]
        vf, vs = vf[vkeep, :], vs[vkeep, :]
    first = np.concatenate([hf.ravel(), vf.ravel()])
    second = np.concatenate([hs.ravel(), vs.ravel()])
    return first, second


def _cross_block(first, second, layout: BlockLayout):
    w, n = layout.width, layout.block_size
    fb = (first // w) // n * layout.blocks_x + (first % w) // n
    sb = (second // w) // n * layout.blocks_x + (second % w) // n
    return fb != sb


def select_pairs(layout: BlockLayout, dc_only: bool) -> list[PixelPair]:
    """Pairs entering the objective: all 4-neighbours, or only those across
    block boundaries when just the DC terms are unknown."""
    first, second = pair_arrays(layout, dc_only)
    cross = _cross_block(first, second, layout)
    w = layout.width
    return [
        PixelPair((int(f // w), int(f % w)), (int(s // w), int(s % w)), bool(c))
        for f, s, c in zip(first, second, cross)
    ]


class VarRole(enum.IntEnum):
    PIXEL = 0
    COEFF = 1
    PAIR = 2


@dataclass(eq=False)
class LpProblem:
    """Sparse LP ``min c'v`` s.t. ``row_lower <= M v <= row_upper``,
    ``lower <= v <= upper``, with ``M`` given as coordinate triplets.

    ``role[j]`` tags variable ``j`` and ``role_ref[j]`` indexes into the
    pixel raster, the ``unknowns`` table or the ``pairs`` arrays.  The
    recovered pixel field is ``pixel_offset + pixel_map @ v``.
    """

    objective: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    row_lower: np.ndarray
    row_upper: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    role: np.ndarray
    role_ref: np.ndarray
    layout: BlockLayout | None = None
    x_min: float = 0.0
    x_max: float = 255.0
    pairs: tuple = (np.empty(0, np.intp), np.empty(0, np.intp))
    unknowns: np.ndarray = field(default_factory=lambda: np.empty((0, 3), np.intp))
    pixel_offset: np.ndarray | None = None
    pixel_map: sp.csr_matrix | None = None
    presolved: bool = False

    def __post_init__(self):
        n = self.objective.shape[0]
        if not (self.lower.shape == self.upper.shape == self.role.shape == (n,)):
            raise ValueError("per-variable arrays disagree in length")
        if not (len(self.rows) == len(self.cols) == len(self.vals)):
            raise ValueError("triplet arrays disagree in length")
        if not np.all(np.isfinite(self.vals)):
            raise ValueError("non-finite constraint coefficient")
        if np.any(self.lower > self.upper):
            bad = int(np.argmax(self.lower > self.upper))
            raise ValueError(f"variable {bad} has lower bound above upper bound")

    @property
    def num_vars(self) -> int:
        return self.objective.shape[0]

    @property
    def num_rows(self) -> int:
        return self.row_lower.shape[0]

    @property
    def nnz(self) -> int:
        return int(self.vals.shape[0])

    @property
    def sense(self) -> np.ndarray:
        """``'='``, ``'<'``, ``'>'`` per row, or ``'r'`` for a two-sided row."""
        lo_fin = np.isfinite(self.row_lower)
        hi_fin = np.isfinite(self.row_upper)
        out = np.full(self.num_rows, "r", dtype="<U1")
        out[lo_fin & hi_fin & (self.row_lower == self.row_upper)] = "="
        out[~lo_fin & hi_fin] = "<"
        out[lo_fin & ~hi_fin] = ">"
        return out

    def count(self, role: VarRole) -> int:
        return int(np.count_nonzero(self.role == role))

    def matrix(self) -> sp.csr_matrix:
        return sp.csr_matrix(
            (self.vals, (self.rows, self.cols)), shape=(self.num_rows, self.num_vars)
        )

    def objective_value(self, values) -> float:
        return float(self.objective @ values)

    def pixel_field(self, values) -> np.ndarray:
        """Real-valued pixel field ``(H, W)`` implied by ``values``."""
        if self.pixel_map is None:
            raise ValueError("problem carries no pixel mapping")
        flat = self.pixel_offset + self.pixel_map @ np.asarray(values, dtype=np.float64)
        return flat.reshape(self.layout.height, self.layout.width)

    def pair_gaps(self, values) -> np.ndarray:
        """``h_p - |x_first - x_second|`` for every pair variable."""
        x = self.pixel_field(values).ravel()
        first, second = self.pairs
        h = np.asarray(values)[self.role == VarRole.PAIR]
        return h - np.abs(x[first] - x[second])


def _unknown_pixel_map(layout: BlockLayout, basis: DctBasis, mask: EraseMask):
    """Sparse ``G`` (pixels x unknowns) with ``G[p, b*U+u] = A(p, mask[u])``."""
    n = layout.block_size
    w = layout.width
    u = mask.count
    by, bx = np.divmod(np.arange(layout.num_blocks), layout.blocks_x)
    ii, jj = np.divmod(np.arange(n * n), n)
    # pixel flat index for (block, in-block pixel)
    pix = (by[:, None] * n + ii[None, :]) * w + bx[:, None] * n + jj[None, :]
    cols_kl = np.array([k * n + l for k, l in mask.missing])
    vals = basis.matrix[:, cols_kl]  # (N^2, U)
    rows = np.broadcast_to(pix[:, :, None], (layout.num_blocks, n * n, u))
    cols = np.broadcast_to(
        (np.arange(layout.num_blocks)[:, None, None] * u + np.arange(u)[None, None, :]),
        (layout.num_blocks, n * n, u),
    )
    data = np.broadcast_to(vals[None, :, :], (layout.num_blocks, n * n, u))
    g = sp.csr_matrix(
        (data.ravel(), (rows.ravel(), cols.ravel())),
        shape=(layout.height * layout.width, layout.num_blocks * u),
    )
    unknowns = np.column_stack(
        [
            np.repeat(np.arange(layout.num_blocks), u),
            np.tile([k for k, _ in mask.missing], layout.num_blocks),
            np.tile([l for _, l in mask.missing], layout.num_blocks),
        ]
    ).astype(np.intp)
    return g, unknowns


def _known_offset(grid: CoeffGrid, mask: EraseMask) -> np.ndarray:
    """Pixel field of the known coefficients alone (masked ones read as 0)."""
    keep = ~mask.as_array()
    return inverse_dct(grid.with_coeffs(grid.coeffs * keep)).ravel()


def build_problem(grid_known: CoeffGrid, mask: EraseMask, layout: BlockLayout,
                  basis: DctBasis, x_min: float = 0.0, x_max: float = 255.0,
                  presolve: bool = False) -> LpProblem:
    """LP whose optimum is the least-total-variation image consistent with
    the known coefficients of ``grid_known``.

    Masked entries of ``grid_known`` are never read.  ``presolve=True``
    eliminates the pixel variables.
    """
    n = layout.block_size
    if grid_known.layout != layout:
        raise DimensionMismatch(f"grid layout {grid_known.layout} differs from {layout}")
    if basis.block_size != n or mask.block_size != n:
        raise DimensionMismatch("basis, mask and layout disagree on block size")
    if mask.count == 0:
        raise InvalidMask("mask is empty: nothing to recover")
    if not x_min < x_max:
        raise ValueError("x_min must be below x_max")

    npix = layout.height * layout.width
    g, unknowns = _unknown_pixel_map(layout, basis, mask)
    offset = _known_offset(grid_known, mask)
    ny = g.shape[1]
    first, second = pair_arrays(layout, dc_only=mask.is_dc_only)
    npairs = first.shape[0]
    hrange = float(x_max - x_min)

    ylo = np.empty(ny)
    yhi = np.empty(ny)
    for u, (k, l) in enumerate(mask.missing):
        ylo[u::mask.count], yhi[u::mask.count] = coefficient_bounds(basis, k, l, x_min, x_max)

    if not presolve:
        nx = npix
        ncols = nx + ny + npairs
        # x - G y = offset, one row per pixel, grouped by block
        gcoo = g.tocoo()
        eq_row_of_pixel = _block_major_rows(layout)
        r_eq = np.concatenate([eq_row_of_pixel, eq_row_of_pixel[gcoo.row]])
        c_eq = np.concatenate([np.arange(nx), nx + gcoo.col])
        v_eq = np.concatenate([np.ones(nx), -gcoo.data])
        rhs_eq = np.empty(nx)
        rhs_eq[eq_row_of_pixel] = offset
        # +-(x_f - x_s) - h <= 0
        p = np.arange(npairs)
        hcol = nx + ny + p
        r_pair = npix + np.concatenate([2 * p, 2 * p, 2 * p, 2 * p + 1, 2 * p + 1, 2 * p + 1])
        c_pair = np.concatenate([first, second, hcol, first, second, hcol])
        v_pair = np.concatenate(
            [np.ones(npairs), -np.ones(npairs), -np.ones(npairs),
             -np.ones(npairs), np.ones(npairs), -np.ones(npairs)]
        )
        rows = np.concatenate([r_eq, r_pair])
        cols = np.concatenate([c_eq, c_pair])
        vals = np.concatenate([v_eq, v_pair])
        row_lower = np.concatenate([rhs_eq, np.full(2 * npairs, -np.inf)])
        row_upper = np.concatenate([rhs_eq, np.zeros(2 * npairs)])
        lower = np.concatenate([np.full(nx, float(x_min)), ylo, np.zeros(npairs)])
        upper = np.concatenate([np.full(nx, float(x_max)), yhi, np.full(npairs, hrange)])
        role = np.concatenate(
            [np.full(nx, VarRole.PIXEL), np.full(ny, VarRole.COEFF), np.full(npairs, VarRole.PAIR)]
        ).astype(np.int8)
        role_ref = np.concatenate([np.arange(nx), np.arange(ny), np.arange(npairs)])
        pixel_map = sp.csr_matrix(
            (np.ones(nx), (np.arange(nx), np.arange(nx))), shape=(npix, ncols)
        )
        pixel_offset = np.zeros(npix)
    else:
        ncols = ny + npairs
        diff = (g[first] - g[second]).tocsr()
        diff.eliminate_zeros()
        dcoo = diff.tocoo()
        dconst = offset[first] - offset[second]
        p = np.arange(npairs)
        r_pair = np.concatenate([2 * dcoo.row, 2 * p, 2 * dcoo.row + 1, 2 * p + 1])
        c_pair = np.concatenate([dcoo.col, ny + p, dcoo.col, ny + p])
        v_pair = np.concatenate([dcoo.data, -np.ones(npairs), -dcoo.data, -np.ones(npairs)])
        up_pair = np.empty(2 * npairs)
        up_pair[0::2] = -dconst
        up_pair[1::2] = dconst
        rows_parts = [r_pair]
        cols_parts = [c_pair]
        vals_parts = [v_pair]
        lo_parts = [np.full(2 * npairs, -np.inf)]
        up_parts = [up_pair]
        if mask.count == 1:
            # every pixel row has a single unknown: fold into its bounds
            gcoo = g.tocoo()
            a = gcoo.data
            var = gcoo.col
            pos = a > 0
            neg = a < 0
            with np.errstate(divide="ignore"):
                cand_lo = np.where(pos, (x_min - offset[gcoo.row]) / a,
                                   np.where(neg, (x_max - offset[gcoo.row]) / a, -np.inf))
                cand_hi = np.where(pos, (x_max - offset[gcoo.row]) / a,
                                   np.where(neg, (x_min - offset[gcoo.row]) / a, np.inf))
            np.maximum.at(ylo, var, cand_lo)
            np.minimum.at(yhi, var, cand_hi)
            # round-off can cross the bounds when the true block sits on them
            cross = ylo > yhi
            if np.any(ylo[cross] - yhi[cross] > 1e-9 * (1.0 + np.abs(ylo[cross]))):
                raise ValueError("known coefficients leave no feasible value for an unknown")
            mid = 0.5 * (ylo[cross] + yhi[cross])
            ylo[cross] = mid
            yhi[cross] = mid
        else:
            gcoo = g.tocoo()
            rows_parts.append(2 * npairs + gcoo.row)
            cols_parts.append(gcoo.col)
            vals_parts.append(gcoo.data)
            lo_parts.append(x_min - offset)
            up_parts.append(x_max - offset)
        rows = np.concatenate(rows_parts)
        cols = np.concatenate(cols_parts)
        vals = np.concatenate(vals_parts)
        row_lower = np.concatenate(lo_parts)
        row_upper = np.concatenate(up_parts)
        lower = np.concatenate([ylo, np.zeros(npairs)])
        upper = np.concatenate([yhi, np.full(npairs, hrange)])
        role = np.concatenate([np.full(ny, VarRole.COEFF), np.full(npairs, VarRole.PAIR)]).astype(
            np.int8
        )
        role_ref = np.concatenate([np.arange(ny), np.arange(npairs)])
        pixel_map = sp.hstack([g, sp.csr_matrix((npix, npairs))]).tocsr()
        pixel_offset = offset

    objective = np.zeros(ncols)
    objective[role == VarRole.PAIR] = 1.0
    return LpProblem(
        objective=objective,
        rows=rows.astype(np.intp),
        cols=cols.astype(np.intp),
        vals=vals.astype(np.float64),
        row_lower=row_lower.astype(np.float64),
        row_upper=row_upper.astype(np.float64),
        lower=lower,
        upper=upper,
        role=role,
        role_ref=role_ref.astype(np.intp),
        layout=layout,
        x_min=float(x_min),
        x_max=float(x_max),
        pairs=(first, second),
        unknowns=unknowns,
        pixel_offset=pixel_offset,
        pixel_map=pixel_map,
        presolved=presolve,
    )


def _block_major_rows(layout: BlockLayout) -> np.ndarray:
    """Row index, in block-major order, of each raster pixel."""
    n = layout.block_size
    r, c = np.divmod(np.arange(layout.height * layout.width), layout.width)
    block = (r // n) * layout.blocks_x + c // n
    return block * n * n + (r % n) * n + (c % n)


def true_assignment(problem: LpProblem, grid: CoeffGrid) -> np.ndarray:
    """Variable vector of the image that ``grid`` encodes in full, with
    every ``h`` set to its pair's absolute difference."""
    values = np.zeros(problem.num_vars)
    x = inverse_dct(grid).ravel()
    coeff = problem.role == VarRole.COEFF
    b, k, l = problem.unknowns[problem.role_ref[coeff]].T
    bx = b % problem.layout.blocks_x
    by = b // problem.layout.blocks_x
    values[coeff] = grid.coeffs[by, bx, k, l]
    pix = problem.role == VarRole.PIXEL
    values[pix] = x[problem.role_ref[pix]]
    first, second = problem.pairs
    values[problem.role == VarRole.PAIR] = np.abs(x[first] - x[second])
    return values


def _var_names(problem: LpProblem) -> list[str]:
    names = []
    w = problem.layout.width if problem.layout is not None else 1
    for r, ref in zip(problem.role.tolist(), problem.role_ref.tolist()):
        if r == VarRole.PIXEL:
            names.append(f"x_{ref // w}_{ref % w}")
        elif r == VarRole.COEFF and len(problem.unknowns):
            b, k, l = problem.unknowns[ref]
            names.append(f"y_{b}_{k}_{l}")
        elif r == VarRole.PAIR:
            names.append(f"h_{ref}")
        else:
            names.append(f"v_{len(names)}")
    return names


def _fmt(v: float) -> str:
    return repr(float(v))


def write_lp(problem: LpProblem, path) -> None:
    """Dump in CPLEX LP text format.  Two-sided rows become a ``>=`` and a
    ``<=`` row."""
    names = _var_names(problem)
    m = problem.matrix().tocsr()
    lines = ["\\ coefficient recovery LP", "Minimize"]
    terms = [f"{'+' if c >= 0 else '-'} {_fmt(abs(c))} {names[j]}"
             for j, c in enumerate(problem.objective) if c != 0]
    lines.append(" obj: " + (" ".join(terms) if terms else "0 " + names[0]))
    lines.append("Subject To")
    for i in range(problem.num_rows):
        start, end = m.indptr[i], m.indptr[i + 1]
        expr = " ".join(
            f"{'+' if v >= 0 else '-'} {_fmt(abs(v))} {names[j]}"
            for j, v in zip(m.indices[start:end], m.data[start:end])
        ) or f"0 {names[0]}"
        lo, hi = problem.row_lower[i], problem.row_upper[i]
        if lo == hi:
            lines.append(f" c{i}: {expr} = {_fmt(hi)}")
            continue
        if np.isfinite(lo):
            lines.append(f" c{i}{'_lo' if np.isfinite(hi) else ''}: {expr} >= {_fmt(lo)}")
        if np.isfinite(hi):
            lines.append(f" c{i}{'_hi' if np.isfinite(lo) else ''}: {expr} <= {_fmt(hi)}")
    lines.append("Bounds")
    for j, name in enumerate(names):
        lo, hi = problem.lower[j], problem.upper[j]
        lo_s = _fmt(lo) if np.isfinite(lo) else "-inf"
        hi_s = _fmt(hi) if np.isfinite(hi) else "+inf"
        lines.append(f" {lo_s} <= {name} <= {hi_s}")
    lines.append("End")
    Path(path).write_text("\n".join(lines) + "\n")


_TERM = re.compile(r"([+-])\s*([0-9.eE+-]+|inf)\s+([A-Za-z_][\w]*)")


def read_lp(path) -> LpProblem:
    """Read a file written by :func:`write_lp` (that subset of LP format
    only).  Roles and pixel mapping are not restored."""
    text = Path(path).read_text().splitlines()
    section = None
    names: dict[str, int] = {}
    obj: dict[int, float] = {}
    rows, cols, vals, rlo, rhi = [], [], [], [], []
    bounds: dict[int, tuple[float, float]] = {}

    def var(name):
        if name not in names:
            names[name] = len(names)
        return names[name]

    def parse_terms(expr):
        out = []
        for sign, coef, name in _TERM.findall(expr):
            out.append((var(name), (-1.0 if sign == "-" else 1.0) * float(coef)))
        return out

    for raw in text:
        line = raw.strip()
        if not line or line.startswith("\\"):
            continue
        low = line.lower()
        if low in ("minimize", "subject to", "bounds", "end"):
            section = low
            continue
        if section == "minimize":
            for j, c in parse_terms(line.split(":", 1)[1]):
                obj[j] = obj.get(j, 0.0) + c
        elif section == "subject to":
            expr = line.split(":", 1)[1]
            m = re.match(r"(.*?)(<=|>=|=)\s*(\S+)\s*$", expr)
            lhs, op, rhs = m.group(1), m.group(2), float(m.group(3))
            r = len(rlo)
            for j, c in parse_terms(lhs):
                rows.append(r)
                cols.append(j)
                vals.append(c)
            rlo.append(rhs if op in ("=", ">=") else -math.inf)
            rhi.append(rhs if op in ("=", "<=") else math.inf)
        elif section == "bounds":
            lo_s, name, hi_s = re.match(r"(\S+)\s*<=\s*(\S+)\s*<=\s*(\S+)", line).groups()
            bounds[var(name)] = (float(lo_s), float(hi_s))
    nv = len(names)
    objective = np.zeros(nv)
    for j, c in obj.items():
        objective[j] = c
    lower = np.zeros(nv)
    upper = np.full(nv, np.inf)
    for j, (lo, hi) in bounds.items():
        lower[j], upper[j] = lo, hi
    return LpProblem(
        objective=objective,
        rows=np.asarray(rows, dtype=np.intp),
        cols=np.asarray(cols, dtype=np.intp),
        vals=np.asarray(vals, dtype=np.float64),
        row_lower=np.asarray(rlo, dtype=np.float64),
        row_upper=np.asarray(rhi, dtype=np.float64),
        lower=lower,
        upper=upper,
        role=np.full(nv, -1, dtype=np.int8),
        role_ref=np.arange(nv, dtype=np.intp),
    )
