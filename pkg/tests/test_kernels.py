import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nfdx import _accel
from nfdx.nn import kernels

needs_numba = pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba not installed")

shapes = st.tuples(st.integers(1, 3), st.integers(1, 4), st.integers(2, 9), st.integers(2, 9))


def _naive_im2col(x, k):
    b, c, h, w = x.shape
    p = k // 2
    xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
    rows = []
    for n in range(b):
        for i in range(h):
            for j in range(w):
                rows.append(xp[n, :, i : i + k, j : j + k].ravel())
    return np.array(rows)


@settings(deadline=None, max_examples=40)
@given(shapes, st.sampled_from([1, 3, 5]), st.integers(0, 2**31))
def test_im2col_matches_naive(shape, k, seed):
    x = np.random.default_rng(seed).normal(size=shape)
    np.testing.assert_array_equal(kernels.im2col_numpy(x, k), _naive_im2col(x, k))


@settings(deadline=None, max_examples=40)
@given(shapes, st.sampled_from([1, 3]), st.integers(0, 2**31))
def test_col2im_is_adjoint_of_im2col(shape, k, seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=shape)
    cols = rng.normal(size=(shape[0] * shape[2] * shape[3], shape[1] * k * k))
    lhs = np.sum(kernels.im2col_numpy(x, k) * cols)
    rhs = np.sum(x * kernels.col2im_numpy(cols, shape, k))
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)


def test_maxpool_small_cases():
    out, arg = kernels.maxpool2x2_numpy(np.array([[[[1.0, 2.0], [3.0, 4.0]]]]))
    assert out.tolist() == [[[[4.0]]]]
    assert arg.tolist() == [[[[3]]]]
    out, _ = kernels.maxpool2x2_numpy(np.ones((1, 1, 25, 25)))
    assert out.shape == (1, 1, 12, 12)


@settings(deadline=None, max_examples=40)
@given(shapes, st.integers(0, 2**31))
def test_maxpool_backward_routes_to_argmax(shape, seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=shape)
    out, arg = kernels.maxpool2x2_numpy(x)
    dout = rng.normal(size=out.shape)
    dx = kernels.maxpool2x2_backward_numpy(dout, arg, x.shape)
    assert dx.shape == x.shape
    assert np.sum(dx * x) == pytest.approx(np.sum(dout * out), rel=1e-10, abs=1e-10)
    assert np.count_nonzero(dx) <= out.size


@needs_numba
@settings(deadline=None, max_examples=30)
@given(shapes, st.sampled_from([1, 3]), st.integers(0, 2**31))
def test_numba_matches_numpy(shape, k, seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=shape)
    np.testing.assert_array_equal(kernels.im2col_numba(x, k), kernels.im2col_numpy(x, k))
    cols = rng.normal(size=(shape[0] * shape[2] * shape[3], shape[1] * k * k))
    np.testing.assert_allclose(kernels.col2im_numba(cols, shape, k), kernels.col2im_numpy(cols, shape, k), atol=1e-13)
    o1, a1 = kernels.maxpool2x2_numba(x)
    o2, a2 = kernels.maxpool2x2_numpy(x)
    np.testing.assert_array_equal(o1, o2)
    np.testing.assert_array_equal(a1, a2)
    dout = rng.normal(size=o1.shape)
    np.testing.assert_array_equal(
        kernels.maxpool2x2_backward_numba(dout, a1, shape), kernels.maxpool2x2_backward_numpy(dout, a2, shape)
    )


def test_backend_name():
    assert _accel.backend_name() in ("numba", "numpy")
    assert (_accel.backend_name() == "numba") == _accel.NUMBA_ENABLED


def test_env_flag_selects_numpy(monkeypatch):
    import subprocess
    import sys

    code = "from nfdx import _accel; print(_accel.backend_name())"
    env = dict(__import__("os").environ, NFDX_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"


@pytest.mark.parametrize("backend", ["numpy", pytest.param("numba", marks=needs_numba)])
def test_maxpool_ties_pick_first(backend):
    out, arg = getattr(kernels, f"maxpool2x2_{backend}")(np.ones((1, 2, 4, 4)))
    assert np.all(arg == 0) and np.all(out == 1.0)
