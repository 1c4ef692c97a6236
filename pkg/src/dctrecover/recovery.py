"""End-to-end recovery: build the LP from the known coefficients, solve,
centre the global intensity, round and clamp."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .dct import CoeffGrid, DctBasis, build_basis, inverse_dct
from .errors import InvalidMask, RecoveryFailed
from .image_io import BlockLayout, GrayImage
from .lp_model import build_problem
from .lp_solver import SolverSettings, SolverStats, solve
from .mask import EraseMask, FillPolicy, apply_mask

__all__ = [
    "RecoveryReport",
    "recover",
    "histogram_shift",
    "midpoint_reference",
    "round_half_away",
    "to_image",
]


def round_half_away(values) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    return np.sign(values) * np.floor(np.abs(values) + 0.5)


def to_image(field_, x_min: int = 0, x_max: int = 255) -> GrayImage:
    """Round half away from zero, clamp, wrap as an 8-bit image."""
    # snap transform round-off first so exact halves stay halves
    snapped = np.round(np.asarray(field_, dtype=np.float64), 9)
    px = np.clip(round_half_away(snapped), x_min, x_max).astype(np.int64)
    return GrayImage.from_array(px)


def histogram_shift(real_pixels, x_min: float = 0.0, x_max: float = 255.0):
    """Translate the field so its distances to ``x_min`` and ``x_max`` match.

    The delta is an integer, so the margins agree up to rounding.
    Returns ``(shifted, delta)``.
    """
    f = np.asarray(real_pixels, dtype=np.float64)
    if f.size == 0 or not np.all(np.isfinite(f)):
        raise ValueError("field must be non-empty and finite")
    lo, hi = float(f.min()), float(f.max())
    delta = int(round_half_away(((x_max - hi) - (lo - x_min)) / 2.0))
    return f + delta, delta


@dataclass
class RecoveryReport:
    recovered: GrayImage
    objective: float
    shift_applied: int
    solver_stats: SolverStats
    mask: EraseMask
    pixel_field: np.ndarray = field(repr=False)
    wall_time: float = 0.0
    num_vars: int = 0
    num_rows: int = 0

    @property
    def shifted_field(self) -> np.ndarray:
        """Real-valued result before rounding and clamping."""
        return self.pixel_field + self.shift_applied

    def to_dict(self) -> dict:
        st = self.solver_stats
        return {
            "mask": self.mask.label(),
            "block_size": self.mask.block_size,
            "width": self.recovered.width,
            "height": self.recovered.height,
            "objective": self.objective,
            "shift_applied": self.shift_applied,
            "num_vars": self.num_vars,
            "num_rows": self.num_rows,
            "wall_time": self.wall_time,
            "solver": {
                "iterations": st.iterations,
                "wall_time": st.wall_time,
                "matrix_nnz": st.matrix_nnz,
                "kkt_nnz": st.kkt_nnz,
                "factor_nnz": st.factor_nnz,
                "regularized_pivots": st.regularized_pivots,
                "primal_residual": st.primal_residual,
                "dual_residual": st.dual_residual,
                "gap": st.gap,
                "backend": st.backend,
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_text(self) -> str:
        """One ``key: value`` per line, nested keys joined with a dot."""
        lines = []
        for key, value in self.to_dict().items():
            if isinstance(value, dict):
                lines.extend(f"{key}.{k}: {v}" for k, v in value.items())
            else:
                lines.append(f"{key}: {value}")
        return "\n".join(lines) + "\n"


def recover(original_coeffs: CoeffGrid, mask: EraseMask, layout: BlockLayout | None = None,
            basis: DctBasis | None = None, settings: SolverSettings | None = None,
            x_min: int = 0, x_max: int = 255, presolve: bool = True) -> RecoveryReport:
    """Recover the coefficients named by ``mask`` and return the image.

    Masked entries of ``original_coeffs`` are overwritten with zeros before
    anything else looks at them.
    """
    t0 = time.perf_counter()
    layout = layout or original_coeffs.layout
    basis = basis or build_basis(layout.block_size)
    if mask.count == 0:
        raise InvalidMask("mask is empty: nothing to recover")
    known = apply_mask(original_coeffs, mask, FillPolicy.ZERO)
    problem = build_problem(known, mask, layout, basis, x_min, x_max, presolve=presolve)
    sol = solve(problem, settings)
    if not sol.optimal:
        st = sol.stats
        raise RecoveryFailed(
            f"solver stopped with status {sol.status.value} after {st.iterations} iterations "
            f"(primal {st.primal_residual:.2e}, dual {st.dual_residual:.2e}, gap {st.gap:.2e})",
            status=sol.status,
            stats=st,
        )
    pixels = problem.pixel_field(sol.values)
    if mask.includes_dc:
        shifted, delta = histogram_shift(pixels, x_min, x_max)
    else:
        shifted, delta = pixels, 0
    return RecoveryReport(
        recovered=to_image(shifted, x_min, x_max),
        objective=sol.objective,
        shift_applied=delta,
        solver_stats=sol.stats,
        mask=mask,
        pixel_field=pixels,
        wall_time=time.perf_counter() - t0,
        num_vars=problem.num_vars,
        num_rows=problem.num_rows,
    )


def midpoint_reference(original_coeffs: CoeffGrid, mask: EraseMask,
                       basis: DctBasis | None = None, x_min: int = 0,
                       x_max: int = 255) -> GrayImage:
    """The damaged image: every missing coefficient at the midpoint of its
    feasible range."""
    n = original_coeffs.layout.block_size
    if basis is not None and basis.block_size != n:
        raise InvalidMask("basis and grid disagree on block size")
    filled = apply_mask(original_coeffs, mask, FillPolicy.MIDPOINT, x_min, x_max)
    return to_image(inverse_dct(filled), x_min, x_max)
