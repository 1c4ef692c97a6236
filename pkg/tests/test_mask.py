import numpy as np
import pytest

from dctrecover.dct import CoeffGrid
from dctrecover.errors import InvalidCount, InvalidMask
from dctrecover.image_io import BlockLayout
from dctrecover.mask import (
    EraseMask,
    FillPolicy,
    apply_mask,
    dc_only_mask,
    most_significant_mask,
    parse_mask,
    zigzag_order,
)

# the standard JPEG zigzag sequence, as raster indices k*8 + l
JPEG_ZIGZAG = [
    0, 1, 8, 16, 9, 2, 3, 10, 17, 24, 32, 25, 18, 11, 4, 5,
    12, 19, 26, 33, 40, 48, 41, 34, 27, 20, 13, 6, 7, 14, 21, 28,
    35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51,
    58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63,
]


def test_zigzag_matches_jpeg_table():
    assert [k * 8 + l for k, l in zigzag_order(8)] == JPEG_ZIGZAG


@pytest.mark.parametrize("n", [2, 3, 4, 16])
def test_zigzag_is_a_permutation(n):
    order = zigzag_order(n)
    assert sorted(order) == [(k, l) for k in range(n) for l in range(n)]
    # consecutive entries are neighbours along a row, column or diagonal
    for (a, b), (c, d) in zip(order, order[1:]):
        assert max(abs(a - c), abs(b - d)) == 1


def test_top_masks():
    assert most_significant_mask(1).missing == ((0, 0),)
    assert set(most_significant_mask(3, 8).missing) == {(0, 0), (0, 1), (1, 0)}


@pytest.mark.parametrize("u", [0, 64, 100])
def test_top_mask_count_guard(u):
    with pytest.raises(InvalidCount):
        most_significant_mask(u, 8)


def test_prefix_nesting():
    for u in range(1, 63):
        small = set(most_significant_mask(u).missing)
        assert small < set(most_significant_mask(u + 1).missing)


def test_mask_validation():
    with pytest.raises(InvalidMask):
        EraseMask(8, ((0, 0), (0, 0)))
    with pytest.raises(InvalidMask):
        EraseMask(8, ((8, 0),))
    with pytest.raises(InvalidCount):
        EraseMask(2, ((0, 0), (0, 1), (1, 0), (1, 1)))


def test_mask_properties():
    m = EraseMask(8, ((0, 0), (2, 3)))
    assert m.count == 2 and m.includes_dc and not m.is_dc_only
    assert dc_only_mask().is_dc_only
    arr = m.as_array()
    assert arr.sum() == 2 and arr[2, 3]
    assert parse_mask(m.label()) == m


@pytest.mark.parametrize(
    "text,count",
    [("dc", 1), ("DC-only", 1), ("top:15", 15), ("0:0, 1:1", 2)],
)
def test_parse_mask(text, count):
    assert parse_mask(text).count == count


@pytest.mark.parametrize("text", ["top:x", "1-2", "", "0:9"])
def test_parse_mask_errors(text):
    with pytest.raises(InvalidMask):
        parse_mask(text)


def grid(rng):
    return CoeffGrid(BlockLayout(8, 3, 2), rng.normal(0, 50, (2, 3, 8, 8)))


def test_midpoint_fill_dc(rng):
    g = grid(rng)
    out = apply_mask(g, dc_only_mask(), FillPolicy.MIDPOINT)
    assert np.all(out.coeffs[..., 0, 0] == 1020.0)


def test_midpoint_fill_ac_is_zero(rng):
    out = apply_mask(grid(rng), EraseMask(8, ((3, 5),)), FillPolicy.MIDPOINT)
    assert np.abs(out.coeffs[..., 3, 5]).max() < 1e-12


def test_apply_mask_leaves_rest_untouched(rng):
    g = grid(rng)
    m = most_significant_mask(10)
    out = apply_mask(g, m, FillPolicy.ZERO)
    keep = ~m.as_array()
    assert np.array_equal(out.coeffs[..., keep], g.coeffs[..., keep])
    assert np.all(out.coeffs[..., ~keep] == 0)
    # restoring the masked values gives back the original grid
    restored = out.coeffs.copy()
    restored[..., ~keep] = g.coeffs[..., ~keep]
    assert np.array_equal(restored, g.coeffs)


def test_apply_mask_block_size_mismatch(rng):
    with pytest.raises(InvalidMask):
        apply_mask(grid(rng), dc_only_mask(4))
