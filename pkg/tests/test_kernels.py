import numpy as np
import pytest
import scipy.sparse as sp

from dctrecover import _kernels
from dctrecover._kernels import BACKENDS, get_backend

names = sorted(BACKENDS)
both = pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled kernels not built")


def grid_laplacian(k):
    t = sp.diags([-1.0, 2.0, -1.0], [-1, 0, 1], shape=(k, k))
    eye = sp.identity(k)
    return (sp.kron(t, eye) + sp.kron(eye, t) + 0.1 * sp.identity(k * k)).tocsc()


def quasidefinite(rng, n, m):
    a = sp.random(m, n, density=0.3, random_state=np.random.RandomState(rng.integers(1 << 31)))
    h = sp.diags(rng.uniform(1, 5, n))
    e = sp.diags(rng.uniform(0.1, 1, m))
    k = sp.bmat([[-h, a.T], [a, e]]).tocsc()
    signs = np.r_[-np.ones(n), np.ones(m)]
    return k, signs


def factor_solve(kern, mat, signs, b, perm=None):
    n = mat.shape[0]
    if perm is None:
        perm = np.arange(n)
    pm = mat[perm][:, perm]
    up = sp.triu(pm).tocsc()
    up.sort_indices()
    ap, ai = up.indptr.astype(np.intp), up.indices.astype(np.intp)
    parent, lp = kern.ldl_symbolic(n, ap, ai)
    li, lx, d, bumped = kern.ldl_numeric(n, ap, ai, up.data.astype(np.float64), lp, parent,
                                         signs[perm].astype(np.float64), 1e-13, 1e-7)
    x = b[perm].astype(np.float64).copy()
    kern.ldl_solve(n, lp, li, lx, d, x)
    out = np.empty_like(x)
    out[perm] = x
    return out, lp[-1], bumped


def amd_perm(kern, mat):
    m = mat.tocsc()
    return np.asarray(kern.amd(m.shape[0], m.indptr.astype(np.intp), m.indices.astype(np.intp)))


@pytest.mark.parametrize("name", names)
def test_amd_is_a_permutation(name):
    perm = amd_perm(get_backend(name), grid_laplacian(9))
    assert sorted(perm.tolist()) == list(range(81))


@pytest.mark.parametrize("name", names)
def test_amd_reduces_fill(name):
    kern = get_backend(name)
    mat = grid_laplacian(14)
    b = np.ones(mat.shape[0])
    signs = np.ones(mat.shape[0])
    _, natural, _ = factor_solve(kern, mat, signs, b)
    _, ordered, _ = factor_solve(kern, mat, signs, b, amd_perm(kern, mat))
    assert ordered < 0.7 * natural


@pytest.mark.parametrize("name", names)
def test_spd_solve(name, rng):
    kern = get_backend(name)
    mat = grid_laplacian(7)
    b = rng.normal(size=mat.shape[0])
    x, _, bumped = factor_solve(kern, mat, np.ones(mat.shape[0]), b, amd_perm(kern, mat))
    assert bumped == 0
    assert np.abs(mat @ x - b).max() < 1e-10


@pytest.mark.parametrize("name", names)
def test_quasidefinite_solve(name, rng):
    kern = get_backend(name)
    mat, signs = quasidefinite(rng, 30, 20)
    b = rng.normal(size=50)
    x, _, bumped = factor_solve(kern, mat, signs, b, amd_perm(kern, mat))
    assert bumped == 0
    assert np.allclose(x, np.linalg.solve(mat.toarray(), b), atol=1e-9)


@pytest.mark.parametrize("name", names)
def test_zero_pivot_is_regularized(name):
    kern = get_backend(name)
    mat = sp.csc_matrix(np.array([[1.0, 0.0], [0.0, 0.0]]))
    _, _, bumped = factor_solve(kern, mat, np.ones(2), np.ones(2))
    assert bumped == 1


@pytest.mark.parametrize("name", names)
def test_empty_matrix(name):
    assert len(get_backend(name).amd(0, np.zeros(1, np.intp), np.zeros(0, np.intp))) == 0


@both
def test_backends_identical(rng):
    mat, signs = quasidefinite(rng, 40, 25)
    b = rng.normal(size=65)
    pc = amd_perm(BACKENDS["compiled"], mat)
    pp = amd_perm(BACKENDS["python"], mat)
    assert np.array_equal(pc, pp)
    xc, nc, _ = factor_solve(BACKENDS["compiled"], mat, signs, b, pc)
    xp, np_, _ = factor_solve(BACKENDS["python"], mat, signs, b, pp)
    assert nc == np_
    assert np.allclose(xc, xp, rtol=1e-12, atol=1e-12)


def test_unknown_backend():
    with pytest.raises(ValueError):
        get_backend("fortran")


def test_default_backend_is_available():
    assert _kernels.DEFAULT_BACKEND in BACKENDS


def test_environment_forces_fallback():
    import os
    import subprocess
    import sys

    env = dict(os.environ, DCTRECOVER_BACKEND="python")
    out = subprocess.run([sys.executable, "-c", "from dctrecover import _kernels; print(_kernels.DEFAULT_BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
