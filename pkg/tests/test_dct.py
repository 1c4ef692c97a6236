import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dctrecover.dct import (
    CoeffGrid,
    build_basis,
    coefficient_bound_table,
    coefficient_bounds,
    forward_dct,
    inverse_dct,
)
from dctrecover.image_io import BlockLayout, GrayImage, make_layout
from oracles import block_dct


def test_dc_entry_exact():
    b = build_basis(8)
    assert b.entry(0, 0, 0, 0) == 0.125
    assert np.all(b.matrix[:, 0] == 1 / 8)


def test_entry_against_high_precision():
    # closed form C(1) C(0) cos(1.5 pi / 4), evaluated with 40-digit arithmetic
    assert build_basis(4).entry(1, 0, 1, 0) == pytest.approx(0.1352990250365492460999308, abs=1e-15)


@pytest.mark.parametrize("n", [2, 4, 8, 16])
def test_orthogonality(n):
    a = build_basis(n).matrix
    assert np.abs(a.T @ a - np.eye(n * n)).max() < 1e-12


def test_basis_rejects_tiny_blocks():
    with pytest.raises(ValueError):
        build_basis(1)


def test_constant_block():
    img = GrayImage.from_array(np.full((8, 8), 128))
    y = forward_dct(img, make_layout(img)).coeffs[0, 0].copy()
    assert y[0, 0] == pytest.approx(1024.0, abs=1e-12)
    y[0, 0] = 0.0
    assert np.abs(y).max() < 1e-12


def test_zero_image():
    img = GrayImage.from_array(np.zeros((16, 8), int))
    assert np.all(forward_dct(img, make_layout(img)).coeffs == 0)


def test_forward_matches_quadruple_loop(rng):
    x = rng.integers(0, 256, (8, 8))
    b = build_basis(8)
    slow = np.zeros((8, 8))
    for k in range(8):
        for l in range(8):
            slow[k, l] = sum(b.entry(i, j, k, l) * x[i, j] for i in range(8) for j in range(8))
    img = GrayImage.from_array(x)
    fast = forward_dct(img, make_layout(img)).coeffs[0, 0]
    assert np.abs(fast - slow).max() < 1e-10
    assert np.abs(fast - block_dct(x, 8)[0, 0]).max() < 1e-10


def test_dense_basis_matches_separable(rng):
    x = rng.integers(0, 256, (8, 8)).astype(float)
    b = build_basis(8)
    img = GrayImage.from_array(x.astype(int))
    y = forward_dct(img, make_layout(img)).coeffs[0, 0]
    assert np.abs(b.matrix.T @ x.ravel() - y.ravel()).max() < 1e-12


def test_dc_only_grid_inverse():
    lay = BlockLayout(8, 2, 1)
    c = np.zeros((1, 2, 8, 8))
    c[..., 0, 0] = 1024.0
    assert np.allclose(inverse_dct(CoeffGrid(lay, c)), 128.0, atol=1e-12)


def test_unit_coefficient_gives_basis_column():
    lay = BlockLayout(8, 1, 1)
    c = np.zeros((1, 1, 8, 8))
    c[0, 0, 3, 2] = 1.0
    i = np.arange(8)[:, None]
    j = np.arange(8)[None, :]
    closed = 0.5 * 0.5 * np.cos((i + 0.5) * 3 * np.pi / 8) * np.cos((j + 0.5) * 2 * np.pi / 8)
    field = inverse_dct(CoeffGrid(lay, c))
    assert np.abs(field - closed).max() < 1e-14
    assert np.abs(field - build_basis(8).column(3, 2)).max() < 1e-14


def test_round_trip_random_images(rng):
    for _ in range(1000):
        x = rng.integers(0, 256, (8, 8))
        img = GrayImage.from_array(x)
        back = inverse_dct(forward_dct(img, make_layout(img)))
        assert np.abs(back - x).max() < 1e-9


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.sampled_from([2, 4, 8]), st.integers(0, 2**32 - 1))
def test_round_trip_rounds_back(bx, by, n, seed):
    x = np.random.default_rng(seed).integers(0, 256, (by * n, bx * n))
    img = GrayImage.from_array(x)
    back = inverse_dct(forward_dct(img, make_layout(img, n)))
    assert np.array_equal(np.round(back).astype(int), x)


def test_dc_bound():
    assert coefficient_bounds(build_basis(8), 0, 0, 0, 255) == (0.0, 2040.0)


def brute_force_bound(n, k, l, lo, hi):
    pat = build_basis(n).column(k, l)
    top = np.where(pat > 0, hi, lo)
    bot = np.where(pat > 0, lo, hi)
    return float((bot * pat).sum()), float((top * pat).sum())


def test_ac_bound_frozen():
    # extreme assignment evaluated with 40-digit arithmetic
    lo, hi = coefficient_bounds(build_basis(8), 0, 1, 0, 255)
    assert hi == pytest.approx(924.249995279945599964535, abs=1e-9)
    assert lo == -hi
    assert coefficient_bounds(build_basis(8), 3, 2, 0, 255)[1] == pytest.approx(
        853.8956535627951318188658, abs=1e-9
    )


@pytest.mark.parametrize("n", [2, 4, 8])
def test_ac_bounds_equal_extreme_assignment(n):
    b = build_basis(n)
    for k in range(n):
        for l in range(n):
            if (k, l) == (0, 0):
                continue
            got = coefficient_bounds(b, k, l, 0, 255)
            want = brute_force_bound(n, k, l, 0, 255)
            assert got == pytest.approx(want, abs=1e-9)
            assert got[0] <= 0 <= got[1]


def test_bounds_contain_every_coefficient(rng):
    lo, hi = coefficient_bound_table(build_basis(8), 0, 255)
    x = rng.integers(0, 256, (64, 64))
    x[:8, :8] = 255
    x[8:16, :8] = np.where(build_basis(8).column(0, 1) > 0, 255, 0)
    img = GrayImage.from_array(x)
    y = forward_dct(img, make_layout(img)).coeffs
    assert np.all(y >= lo - 1e-9) and np.all(y <= hi + 1e-9)
    assert np.all(y[..., 0, 0] >= -1e-9) and np.all(y[..., 0, 0] <= 8 * 255 + 1e-9)


def test_bounds_reject_bad_frequency():
    with pytest.raises(ValueError):
        coefficient_bounds(build_basis(4), 4, 0, 0, 255)


def test_grid_shape_checked():
    with pytest.raises(ValueError):
        CoeffGrid(BlockLayout(8, 2, 2), np.zeros((1, 2, 8, 8)))
