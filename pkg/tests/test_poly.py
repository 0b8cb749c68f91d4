from __future__ import annotations

import cmath
import math
from fractions import Fraction as Fr

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fragdyn import poly as P
from fragdyn.errors import LaminationUndefined, NotEscaped, UnknownModel


def green_oracle(m, z, cap=1e150):
    """d^-n log|lambda P^n z| once the orbit is huge."""
    n = 0
    while abs(z) < cap:
        z = m(z)
        n += 1
    return math.log(abs(m.boettcher_scale * z)) / m.degree ** n


@pytest.mark.parametrize("mid", P.MODEL_IDS)
def test_model_residuals_tiny(mid):
    m = P.model(mid)
    assert max(P.model_residuals(m).values()) < 1e-12


def test_model_values():
    q = P.model("Q")
    assert q(-0.5) == -0.5 and q.derivative(-0.5) == -1
    r = P.model("R_quartic")
    assert r.meta["a"] == complex(1 / 12, math.sqrt(2) / 24)
    c = 1 - 1 / (4 * r.meta["a"])
    assert any(abs(c - w) < 1e-12 for w in r.critical_points())
    f = P.model("F_cubic")
    assert abs(f.derivative(-1j) - 1) < 1e-12
    with pytest.raises(UnknownModel):
        P.model("nope")


def test_boettcher_normalized_at_infinity():
    for mid in ("Q", "Q_pcf"):
        m = P.model(mid)
        z = 1e6 * cmath.exp(0.3j)
        assert abs(P.boettcher(m, z) / (m.boettcher_scale * z) - 1) < 1e-8
    # an uncentered cubic picks up the constant b/(3a) = 2i/3
    f = P.model("F_cubic")
    z = 1e6 * cmath.exp(0.3j)
    assert abs(P.boettcher(f, z) - z - 2j / 3) < 1e-5


def test_boettcher_bounded_raises():
    with pytest.raises(NotEscaped):
        P.boettcher(P.model("Q"), 0)


@pytest.mark.parametrize("mid", P.MODEL_IDS)
def test_boettcher_functional_equation(mid):
    m = P.model(mid)
    rng = np.random.default_rng(5)
    worst = 0.0
    R = m.escape_radius
    for _ in range(100):
        z = (1.2 + 3 * rng.random()) * R * cmath.exp(2j * math.pi * rng.random())
        a, b = P.boettcher(m, m(z)), P.boettcher(m, z) ** m.degree
        worst = max(worst, abs(a - b) / abs(a))
    assert worst < 1e-9


@given(st.floats(0.05, 3.0), st.floats(0, 2 * math.pi))
@settings(max_examples=40)
def test_green_matches_oracle(r, arg):
    m = P.model("Q")
    z = (1.5 + r) * cmath.exp(1j * arg)
    assert abs(P.green(m, z) - green_oracle(m, z)) < 1e-9


def test_green_vanishes_on_filled_set():
    assert P.green(P.model("Q_pcf"), 0.0) == 0.0


def test_ray_one_third_lands_at_parabolic_point():
    m = P.model("Q")
    ray = P.land_ray(m, Fr(1, 3), 1e-5)
    # the raw trace approaches a parabolic point only polynomially
    assert abs(ray.endpoint + 0.5) < 0.3
    assert abs(ray.landing + 0.5) < 1e-3
    r2 = P.land_ray(m, Fr(2, 3))
    assert abs(r2.landing + 0.5) < 1e-3


def test_ray_zero_lands_at_beta_fixed_point():
    ray = P.land_ray(P.model("Q"), 0)
    assert abs(ray.landing - 1.5) < 1e-6


def test_ray_points_have_the_right_angle_and_potential():
    m = P.model("Q")
    ray = P.trace_ray(m, Fr(1, 5), r1=1e-3)
    for G, z in list(zip(ray.potentials, ray.points))[::7]:
        phi = P.boettcher(m, z)
        assert abs(math.log(abs(phi)) - G) < 1e-7 * max(1, G) + 1e-9
        assert abs(((cmath.phase(phi) / (2 * math.pi) - 0.2) + 0.5) % 1 - 0.5) < 1e-6


def test_conjugate_rays_for_real_model():
    m = P.model("Q")
    a = P.trace_ray(m, Fr(1, 7), r1=1e-3)
    b = P.trace_ray(m, Fr(6, 7), r1=1e-3)
    assert len(a.points) == len(b.points)
    assert max(abs(x.conjugate() - y) for x, y in zip(a.points, b.points)) < 1e-9


def test_basilica_angle_substitution():
    assert P.basilica_external_angle(0) == Fr(2, 3)
    assert P.basilica_external_angle(0, upper=True) == Fr(1, 3)
    # t = 1/2 sits between the angles 1/6 and 5/6
    assert P.internal_angles_to_external(Fr(1, 2)) == [Fr(1, 6), Fr(5, 6)]


@given(st.integers(0, 63), st.integers(1, 6))
def test_basilica_angles_conjugate_first_return(p, k):
    # quadrupling the external angle doubles the internal angle
    t = Fr(p, 2 ** k) % 1
    for up in (False, True):
        th = P.basilica_external_angle(t, up)
        assert (4 * th) % 1 in P.internal_angles_to_external((2 * t) % 1)


def test_internal_points():
    q = P.model("Q")
    p0 = P.internal_point(q, (), 0)
    assert abs(p0.point + 0.5) < 2e-3 and p0.spread < 2e-3
    p = P.internal_point(q, (), Fr(1, 2))
    assert abs(p.point.imag) < 1e-6
    assert p.spread < 2e-3
    qp = P.model("Q_pcf")
    x = P.internal_point(qp, (), Fr(1, 3)).point
    # period 2 under the first return Q^2, which doubles internal angles
    assert abs(qp.iterate(x, 4) - x) < 1e-8
    assert abs(qp.iterate(x, 2) - x.conjugate()) < 1e-8
    with pytest.raises(LaminationUndefined):
        P.internal_point(P.model("F_cubic"), (), 0)


def test_iterate_classify():
    q = P.model("Q")
    assert P.iterate_classify(q, 0).kind == "bounded"
    v = P.iterate_classify(q, 2)
    assert v.kind == "escaped" and v.n < 5
    r = P.model("R_quartic")
    c = 1 - 1 / (4 * r.meta["a"])
    v = P.iterate_classify(r, c)
    assert v.kind == "bounded" and v.parabolic_margin
    assert not P.iterate_classify(P.model("Q_pcf"), 0).parabolic_margin


@given(st.floats(-2, 2), st.floats(-2, 2))
@settings(max_examples=40)
def test_real_symmetry_of_verdicts(x, y):
    for mid in ("Q", "Q_pcf"):
        m = P.model(mid)
        a = P.iterate_classify(m, complex(x, y), 200)
        b = P.iterate_classify(m, complex(x, -y), 200)
        assert (a.kind, a.n) == (b.kind, b.n)
