"""Recover missing block-DCT coefficients of grayscale images by linear
programming: the missing values are chosen to minimize the total absolute
difference between neighbouring pixels."""

from .baseline import ScanState, boundary_variation, scan_align_dc
from .dct import CoeffGrid, DctBasis, build_basis, coefficient_bounds, forward_dct, inverse_dct
from .errors import DctRecoverError, RecoveryFailed
from .image_io import BlockLayout, GrayImage, crop_image, load_image, make_layout, save_image
from .lp_model import LpProblem, build_problem, select_pairs
from .lp_solver import Solution, SolverSettings, SolveStatus, solve, verify_solution
from .mask import EraseMask, FillPolicy, apply_mask, dc_only_mask, most_significant_mask
from .metrics import QualityScore, aggregate, psnr, shift_compensated_psnr, ssim
from .recovery import RecoveryReport, histogram_shift, midpoint_reference, recover

__version__ = "0.1.0"

__all__ = [
    "BlockLayout",
    "CoeffGrid",
    "DctBasis",
    "DctRecoverError",
    "EraseMask",
    "FillPolicy",
    "GrayImage",
    "LpProblem",
    "QualityScore",
    "RecoveryFailed",
    "RecoveryReport",
    "ScanState",
    "Solution",
    "SolveStatus",
    "SolverSettings",
    "aggregate",
    "apply_mask",
    "boundary_variation",
    "build_basis",
    "build_problem",
    "coefficient_bounds",
    "crop_image",
    "dc_only_mask",
    "forward_dct",
    "histogram_shift",
    "inverse_dct",
    "load_image",
    "make_layout",
    "midpoint_reference",
    "most_significant_mask",
    "psnr",
    "recover",
    "save_image",
    "scan_align_dc",
    "select_pairs",
    "shift_compensated_psnr",
    "solve",
    "ssim",
    "verify_solution",
]
