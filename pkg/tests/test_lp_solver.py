import itertools

import numpy as np
import pytest

from dctrecover._kernels import BACKENDS
from dctrecover.dct import CoeffGrid, build_basis, forward_dct
from dctrecover.image_io import GrayImage, make_layout
from dctrecover.lp_model import LpProblem, VarRole, build_problem, true_assignment
from dctrecover.lp_solver import SolverSettings, SolveStatus, solve, verify_solution
from dctrecover.mask import EraseMask, FillPolicy, apply_mask, dc_only_mask, most_significant_mask
from conftest import smooth_image
from oracles import block_dct, block_idct, highs_objective, neighbour_pairs


def two_pixel_problem(x2=7.0, h_max=255.0):
    """min h  s.t.  +-(x1 - x2) <= h,  x1 = 10, x2 fixed."""
    return LpProblem(
        objective=np.array([0.0, 0.0, 1.0]),
        rows=np.array([0, 0, 0, 1, 1, 1]),
        cols=np.array([0, 1, 2, 0, 1, 2]),
        vals=np.array([1.0, -1.0, -1.0, -1.0, 1.0, -1.0]),
        row_lower=np.full(2, -np.inf),
        row_upper=np.zeros(2),
        lower=np.array([10.0, x2, 0.0]),
        upper=np.array([10.0, x2, h_max]),
        role=np.array([0, 0, 2]),
        role_ref=np.arange(3),
    )


def problem_for(img, mask, presolve=True):
    lay = make_layout(img, mask.block_size)
    known = apply_mask(forward_dct(img, lay), mask, FillPolicy.ZERO)
    return build_problem(known, mask, lay, build_basis(mask.block_size), 0, 255, presolve=presolve)


def test_settings_validation():
    with pytest.raises(ValueError):
        SolverSettings(tolerance=0.0)
    with pytest.raises(ValueError):
        SolverSettings(tolerance=0.1)
    with pytest.raises(ValueError):
        SolverSettings(max_iterations=0)
    with pytest.raises(ValueError):
        SolverSettings(threads=0)


def test_absolute_difference():
    sol = solve(two_pixel_problem())
    assert sol.status is SolveStatus.OPTIMAL
    assert sol.objective == pytest.approx(3.0, abs=1e-5)
    assert sol.values[2] == pytest.approx(3.0, abs=1e-5)


def test_infeasible_is_reported():
    sol = solve(two_pixel_problem(h_max=1.0))
    assert sol.status is SolveStatus.INFEASIBLE


def test_infeasible_with_free_columns():
    # x1 = 10 and x2 = 7 as rows, so nothing is presolved away
    p = LpProblem(
        objective=np.array([0.0, 0.0, 1.0]),
        rows=np.array([0, 0, 0, 1, 1, 1, 2, 3]),
        cols=np.array([0, 1, 2, 0, 1, 2, 0, 1]),
        vals=np.array([1.0, -1.0, -1.0, -1.0, 1.0, -1.0, 1.0, 1.0]),
        row_lower=np.array([-np.inf, -np.inf, 10.0, 7.0]),
        row_upper=np.array([0.0, 0.0, 10.0, 7.0]),
        lower=np.zeros(3),
        upper=np.array([255.0, 255.0, 1.0]),
        role=np.array([0, 0, 2]),
        role_ref=np.arange(3),
    )
    assert solve(p).status is SolveStatus.INFEASIBLE


def test_iteration_limit(smooth16):
    sol = solve(problem_for(smooth16, most_significant_mask(3)), SolverSettings(max_iterations=2))
    assert sol.status is SolveStatus.ITERATION_LIMIT
    assert sol.stats.iterations == 2


@pytest.mark.parametrize("presolve", [False, True])
def test_single_block_dc_degenerate(rng, presolve):
    img = GrayImage.from_array(rng.integers(60, 190, (8, 8)))
    p = problem_for(img, dc_only_mask(), presolve)
    sol = solve(p)
    assert sol.status is SolveStatus.OPTIMAL
    assert sol.objective == pytest.approx(0.0, abs=1e-7)
    y = sol.values[p.role == VarRole.COEFF][0]
    assert p.lower[p.role == VarRole.COEFF][0] - 1e-7 <= y <= p.upper[p.role == VarRole.COEFF][0] + 1e-7


def grid_search_dc(pixels, radius=60):
    """Exhaustive search over the DC levels of a 16x16 image.

    The first level is pinned (the objective is translation invariant while
    bounds are inactive).  Vertices of this LP put every level at the true
    level plus an integer, so a unit grid around the truth is exact.
    """
    c = block_dct(pixels, 8)
    truth = c[..., 0, 0].ravel() / 8
    c[..., 0, 0] = 0.0
    base = block_idct(c).ravel()
    pairs = neighbour_pairs(16, 16, 8, cross_only=True)
    idx = np.arange(256)
    owner = (idx // 16 // 8) * 2 + (idx % 16) // 8
    f, s = pairs[:, 0], pairs[:, 1]
    a = base[f] - base[s]
    steps = np.arange(-radius, radius + 1, dtype=float)
    last = truth[3] - truth[0] + steps
    best = np.inf
    for t1, t2 in itertools.product(steps, steps):
        level = np.empty((4, last.size))
        level[0] = 0.0
        level[1] = truth[1] - truth[0] + t1
        level[2] = truth[2] - truth[0] + t2
        level[3] = last
        total = np.abs(a[:, None] + level[owner[f]] - level[owner[s]]).sum(axis=0)
        best = min(best, float(total.min()))
    return best


def test_dc_only_matches_exhaustive_search():
    # mid-range levels keep the pixel bounds inactive at the optimum
    rng = np.random.default_rng(7)
    px = np.zeros((16, 16), int)
    for r in range(2):
        for c in range(2):
            px[8 * r:8 * r + 8, 8 * c:8 * c + 8] = rng.integers(110, 150)
    px[:, 3] += 12
    px[5, :] += 9
    px[:, 12] -= 7
    img = GrayImage.from_array(px)
    sol = solve(problem_for(img, dc_only_mask()))
    assert sol.objective == pytest.approx(grid_search_dc(img.pixels), abs=1e-5)


@pytest.mark.parametrize("u", [1, 2, 3])
@pytest.mark.parametrize("size", [16, 24])
@pytest.mark.parametrize("presolve", [False, True])
def test_matches_highs(rng, u, size, presolve):
    img = GrayImage.from_array(smooth_image(rng, size))
    p = problem_for(img, most_significant_mask(u), presolve)
    sol = solve(p)
    assert sol.optimal
    assert sol.objective == pytest.approx(highs_objective(p), rel=1e-6)


def test_verify_optimal_and_perturbed(smooth16):
    p = problem_for(smooth16, most_significant_mask(3), presolve=False)
    sol = solve(p)
    ok = verify_solution(p, sol.values)
    assert ok.feasible
    assert ok.objective == pytest.approx(sol.objective, rel=1e-12)
    bad = sol.values.copy()
    bad[np.flatnonzero(p.role == VarRole.PIXEL)[17]] += 1.0
    assert not verify_solution(p, bad).feasible


def test_midpoint_fill_is_feasible_but_worse(smooth16):
    mask = dc_only_mask()
    lay = make_layout(smooth16)
    p = problem_for(smooth16, mask, presolve=False)
    filled = apply_mask(forward_dct(smooth16, lay), mask, FillPolicy.MIDPOINT)
    # midpoint DC may push pixels out of range; pull each block back inside
    c = filled.coeffs.copy()
    px = block_idct(c).reshape(2, 8, 2, 8).swapaxes(1, 2)
    lo = (0 - px.min(axis=(2, 3))) * 8
    hi = (255 - px.max(axis=(2, 3))) * 8
    c[..., 0, 0] += np.clip(0.0, lo, hi)
    v = true_assignment(p, CoeffGrid(lay, c))
    rep = verify_solution(p, v)
    assert rep.feasible
    assert rep.objective > solve(p).objective + 1.0


def test_deterministic(smooth16):
    p = problem_for(smooth16, most_significant_mask(3))
    a, b = solve(p), solve(p)
    assert a.status == b.status
    assert a.objective == b.objective
    assert np.array_equal(a.values, b.values)


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled kernels not built")
def test_backends_agree(smooth16):
    p = problem_for(smooth16, most_significant_mask(2))
    a = solve(p, SolverSettings(backend="compiled"))
    b = solve(p, SolverSettings(backend="python"))
    assert a.stats.backend == "compiled" and b.stats.backend == "python"
    assert a.objective == pytest.approx(b.objective, rel=1e-9)


def test_dc_shift_moves_field_uniformly():
    # a ramp keeps every block far from the intensity limits
    i, j = np.mgrid[0:16, 0:16]
    img = GrayImage.from_array(100 + i + 2 * j // 3)
    lay = make_layout(img)
    mask = EraseMask(8, ((0, 1), (1, 0)))
    grid = forward_dct(img, lay)
    delta = 4.0
    shifted = grid.coeffs.copy()
    shifted[..., 0, 0] += delta

    def field(g):
        known = apply_mask(g, mask, FillPolicy.ZERO)
        p = build_problem(known, mask, lay, build_basis(8), presolve=True)
        sol = solve(p, SolverSettings(tolerance=1e-9))
        return p.pixel_field(sol.values), sol.objective

    base, obj0 = field(grid)
    moved, obj1 = field(grid.with_coeffs(shifted))
    assert obj1 == pytest.approx(obj0, rel=1e-6)
    # DC is known here, so the whole field rises by delta / N
    assert np.abs(moved - base - delta / 8).max() < 1e-3


def test_stats_populated(smooth16):
    sol = solve(problem_for(smooth16, most_significant_mask(2)))
    st = sol.stats
    assert st.iterations > 0 and st.wall_time > 0
    assert st.matrix_nnz > 0 and st.factor_nnz > 0
    assert st.primal_residual < 1e-7 and st.dual_residual < 1e-7 and st.gap < 1e-7
