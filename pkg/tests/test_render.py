from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np
import pytest

from fragdyn import render as R
from fragdyn import schwarz as sw

GOLDEN = Path(__file__).parent / "golden" / "schwarz_d3_512.ppm"


def test_viewport_geometry():
    vp = R.Viewport(1 + 1j, 2.0, 200, 100)
    assert vp.pixel == 0.01 and vp.height == 1.0
    c, r = vp.to_pixel(1 + 1j)
    assert (c, r) == (99.5, 49.5)
    with pytest.raises(ValueError):
        R.Viewport(0j, -1.0, 10, 10)
    sub = vp.rescaled(0.5j, 0.1)
    assert sub.width == pytest.approx(0.2) and sub.center == pytest.approx(0.1 + 0.6j)


def test_julia_q_rotation_symmetric():
    g = R.render_julia("Q", R.Viewport(0j, 3.2, 160, 120), 300)
    assert np.array_equal(g.codes, g.codes[::-1, ::-1])
    assert R.BOUNDED in g.counts()


def test_julia_overlays():
    g = R.render_julia("Q", R.Viewport(0j, 3.2, 160, 160), 300, rays=[1 / 3], equipotentials=[2])
    land = g.meta["rays"]["1/3"]
    assert abs(complex(*land) + 0.5) < 1e-3
    assert g.counts().get(R.RAY, 0) > 10 and g.counts().get(R.EQUIPOTENTIAL, 0) > 10
    assert g.meta["equipotentials"] == [0.25]


def test_ppm_round_trip_and_determinism(tmp_path):
    vp = R.Viewport(0j, 3.0, 64, 48)
    a = R.render_julia("Q_pcf", vp, 200)
    b = R.render_julia("Q_pcf", vp, 200)
    assert a.to_ppm() == b.to_ppm()
    rgb = R.read_ppm(a.to_ppm())
    assert rgb.shape == (48, 64, 3) and np.array_equal(rgb, a.rgb())
    a.save(tmp_path / "x.png")
    from PIL import Image
    assert np.array_equal(np.asarray(Image.open(tmp_path / "x.png").convert("RGB")), a.rgb())
    with pytest.raises(ValueError):
        R.read_ppm(b"P3\n1 1\n255\n000")


def test_schwarz_golden_bit_exact():
    g = R.render_schwarz(sw.cubic_example(), R.Viewport(0j, 4.0, 512, 512), 60)
    data = g.to_ppm()
    assert data == GOLDEN.read_bytes(), hashlib.sha256(data).hexdigest()


def test_schwarz_render_stable_in_maxiter():
    f = sw.cubic_example()
    vp = R.Viewport(0j, 4.0, 96, 96)
    a = R.render_schwarz(f, vp, 60).codes
    b = R.render_schwarz(f, vp, 120).codes
    decided = a != R.UNDECIDED
    assert np.mean(a[decided] == b[decided]) > 0.999
    # the droplet is level 0 in both
    assert np.array_equal(a == R.TILE0, b == R.TILE0)


def test_blowup_flattens_at_cusp():
    frame = R.Viewport(0j, 2.0, 96, 96)
    frames = R.blowup_sequence("R_quartic", 1.0, [0.5, 0.1, 0.02], frame, 400)
    fl = [R.flatness(g) for g in frames]
    assert fl[0] > fl[1] > fl[2]
    assert [g.meta["radius"] for g in frames] == [0.5, 0.1, 0.02]


def test_blowup_constant_radius_repeats():
    frame = R.Viewport(0j, 2.0, 48, 48)
    a, b = R.blowup_sequence(sw.cubic_example(), 0j, [0.5, 0.5], frame, 30)
    assert np.array_equal(a.codes, b.codes)


def test_flatness_extremes():
    vp = R.Viewport(0j, 2.0, 64, 64)
    xs, ys = vp.axes()
    Z = xs[None, :] + 1j * ys[:, None]
    disk = np.where(np.abs(Z) < 0.6, R.BOUNDED, R.ESC_EVEN).astype(np.uint8)
    strip = np.where(np.abs(Z.imag) < 0.05, R.BOUNDED, R.ESC_EVEN).astype(np.uint8)
    g = lambda c: R.ImageGrid(c, R._julia_palette(), vp, {"model": "Q"})  # noqa: E731
    assert R.flatness(g(disk)) > 0.9 and R.flatness(g(strip)) < 0.1


def test_image_shape_checked():
    with pytest.raises(ValueError):
        R.ImageGrid(np.zeros((3, 3), np.uint8), R._julia_palette(), R.Viewport(0j, 1.0, 4, 4))
