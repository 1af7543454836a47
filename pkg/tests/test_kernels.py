import os
import subprocess
import sys

import numpy as np
import pytest

from levycarma import _kernels_py
from levycarma._backend import BACKEND, get_kernels

try:
    compiled = get_kernels("cython")
except ImportError:  # extension not built
    compiled = None

needs_compiled = pytest.mark.skipif(compiled is None, reason="compiled kernels not built")


def _system(seed, N=3, d=2, n=400):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(N, N))
    phi = 0.8 * a / np.abs(np.linalg.eigvals(a)).max()
    b = rng.normal(size=(N, N))
    q = b @ b.T + 0.1 * np.eye(N)
    c = rng.normal(size=(d, N))
    p0 = q.copy()
    for _ in range(500):
        p0 = phi @ p0 @ phi.T + q
    y = rng.normal(size=(n, d))
    return phi, q, c, p0, y


@needs_compiled
@pytest.mark.parametrize("seed", range(5))
def test_kalman_backends_agree(seed):
    args = _system(seed)
    e1, v1, t1, s1 = _kernels_py.kalman_filter(*args)
    e2, v2, t2, s2 = compiled.kalman_filter(*args)
    assert s1 == s2 == -1
    assert np.allclose(e1, e2, rtol=1e-12, atol=1e-12)
    assert np.allclose(v1, v2, rtol=1e-12, atol=1e-12)
    assert np.allclose(t1, t2, rtol=1e-12, atol=1e-12)


@needs_compiled
def test_kalman_failure_index_agrees():
    phi, q, c, p0, y = _system(0)
    zero = np.zeros_like(q)
    # a zero covariance makes the first prediction variance singular
    for k in (_kernels_py, compiled):
        assert k.kalman_filter(phi, zero, c, zero, y)[3] == 0


@needs_compiled
@pytest.mark.parametrize("stride", [1, 3, 8])
def test_state_recursion_agrees(stride):
    phi, _, _, _, _ = _system(1)
    w = np.random.default_rng(2).normal(size=(800, 3))
    x0 = np.ones(3)
    a = _kernels_py.state_recursion(phi, x0, w, stride)
    b = compiled.state_recursion(phi, x0, w, stride)
    assert a.shape == b.shape == (800 // stride, 3)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-12)


def test_state_recursion_reference():
    phi = np.array([[0.5]])
    w = np.ones((4, 1))
    out = _kernels_py.state_recursion(phi, [0.0], w, 2)
    assert out[:, 0].tolist() == [1.5, 1.875]


def test_kalman_univariate_reference():
    # AR(1) observed exactly: innovations after the first are y_k - phi y_{k-1}
    phi, q = 0.6, 1.0
    p0 = q / (1 - phi**2)
    y = np.array([[1.0], [2.0], [-0.5]])
    e, v, _, status = _kernels_py.kalman_filter([[phi]], [[q]], [[1.0]], [[p0]], y)
    assert status == -1
    assert e[:, 0] == pytest.approx([1.0, 2.0 - 0.6, -0.5 - 1.2])
    assert v[:, 0, 0] == pytest.approx([p0, 1.0, 1.0])


def test_get_kernels_unknown():
    with pytest.raises(ValueError):
        get_kernels("fortran")
    assert get_kernels("python") is _kernels_py


def test_pure_python_env_switch():
    env = dict(os.environ, LEVYCARMA_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from levycarma._backend import BACKEND; print(BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
    assert BACKEND in ("python", "cython")
