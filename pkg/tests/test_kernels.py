from __future__ import annotations

import os
import subprocess
import sys

import numpy as np
import pytest

from fragdyn import kernels as K
from fragdyn import poly as P
from fragdyn import schwarz as sw

needs_numba = pytest.mark.skipif(not K.USE_NUMBA, reason="numba path disabled")


def escape_oracle(coeffs, z, R, maxiter):
    for n in range(maxiter):
        if abs(z) > R:
            return n
        w = 0j
        for c in coeffs:
            w = w * z + c
        z = w
    return -1


def test_pixel_grid_symmetric():
    xs, ys = K.pixel_grid(0j, 3.0, 64, 48)
    assert np.array_equal(xs, -xs[::-1]) and np.array_equal(ys, -ys[::-1])
    assert xs[1] - xs[0] == pytest.approx(3.0 / 64)
    assert ys[0] > ys[-1]           # row 0 is the top


@pytest.mark.parametrize("mid", P.MODEL_IDS)
def test_escape_numpy_matches_scalar_oracle(mid):
    m = P.model(mid)
    xs, ys = K.pixel_grid(0j, 4.0, 40, 40)
    E = K.escape_time_grid(m.coeffs, xs, ys, m.escape_radius, 100, use_numba=False)
    ref = np.array([[escape_oracle(m.coeffs, complex(x, y), m.escape_radius, 100) for x in xs]
                    for y in ys])
    assert np.mean(E == ref) > 0.995


@needs_numba
@pytest.mark.parametrize("mid", P.MODEL_IDS)
def test_escape_backends_bit_identical(mid):
    m = P.model(mid)
    xs, ys = K.pixel_grid(0.1 + 0.05j, 3.0, 64, 64)
    a = K.escape_time_grid(m.coeffs, xs, ys, m.escape_radius, 200, use_numba=True)
    b = K.escape_time_grid(m.coeffs, xs, ys, m.escape_radius, 200, use_numba=False)
    assert np.array_equal(a, b)


@needs_numba
@pytest.mark.parametrize("coeffs", [(2 / 3, 0), (0.2, 0), (0, 0)])
def test_schwarz_backends_bit_identical(coeffs):
    f = sw.make_f(3, coeffs)
    xs, ys = K.pixel_grid(0j, 4.0, 48, 48)
    a = K.schwarz_grid(f.laurent, xs, ys, 1e3, 40, use_numba=True)
    b = K.schwarz_grid(f.laurent, xs, ys, 1e3, 40, use_numba=False)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_schwarz_points_match_grid():
    f = sw.cubic_example()
    xs, ys = K.pixel_grid(0j, 4.0, 16, 16)
    kind, level = K.schwarz_grid(f.laurent, xs, ys, 1e3, 40)
    zs = (xs[None, :] + 1j * ys[:, None]).ravel()
    k2, l2 = K.schwarz_points(f.laurent, zs, 1e3, 40)
    assert np.array_equal(kind.ravel(), k2) and np.array_equal(level.ravel(), l2)


def test_no_numba_switch():
    code = ("import numpy as np\n"
            "from fragdyn import kernels as K, poly as P\n"
            "m = P.model('Q'); xs, ys = K.pixel_grid(0j, 3.0, 32, 32)\n"
            "E = K.escape_time_grid(m.coeffs, xs, ys, m.escape_radius, 100)\n"
            "print(K.USE_NUMBA, int(E.sum()))\n")
    env = dict(os.environ, ARTIFACT_NO_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                         text=True, check=True).stdout.split()
    m = P.model("Q")
    xs, ys = K.pixel_grid(0j, 3.0, 32, 32)
    E = K.escape_time_grid(m.coeffs, xs, ys, m.escape_radius, 100, use_numba=False)
    assert out == ["False", str(int(E.sum()))]
