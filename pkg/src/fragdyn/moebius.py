"""Moebius maps on the Riemann sphere, disk automorphisms and geodesics.

Maps are stored as det-1 matrices.  The sign ambiguity (M and -M act the
same way) is resolved whenever two maps are compared.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from .errors import DegenerateGeodesic, NotDiskAutomorphism

PARABOLIC_TOL = 1e-9
AUTOMORPHISM_TOL = 1e-9


class _Infinity:
    """The point at infinity.  There is only one instance, ``INF``."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "INF"

    def __reduce__(self):
        return (_Infinity, ())


INF = _Infinity()


def is_inf(z) -> bool:
    return z is INF


@dataclass(frozen=True)
class Moebius:
    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        a, b, c, d = (complex(x) for x in (self.a, self.b, self.c, self.d))
        det = a * d - b * c
        if det == 0:
            raise ValueError("singular Moebius matrix")
        s = cmath.sqrt(det)
        a, b, c, d = a / s, b / s, c / s, d / s
        # pick a canonical sign so that equal maps have equal matrices
        for x in (a, b, c, d):
            if abs(x) > 1e-14:
                if x.real < 0 or (x.real == 0 and x.imag < 0):
                    a, b, c, d = -a, -b, -c, -d
                break
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)

    # -- evaluation
    def __call__(self, z):
        a, b, c, d = self.a, self.b, self.c, self.d
        if z is INF:
            return INF if c == 0 else a / c
        den = c * z + d
        if den == 0:
            return INF
        return (a * z + b) / den

    def derivative(self, z):
        den = self.c * z + self.d
        return 1.0 / (den * den)

    def __matmul__(self, other: "Moebius") -> "Moebius":
        return compose(self, other)

    def inverse(self) -> "Moebius":
        return Moebius(self.d, -self.b, -self.c, self.a)

    @property
    def trace(self) -> complex:
        return self.a + self.d

    def matrix(self):
        return ((self.a, self.b), (self.c, self.d))

    def close_to(self, other: "Moebius", tol: float = 1e-9) -> bool:
        e1 = max(abs(x - y) for x, y in zip(self._t(), other._t()))
        e2 = max(abs(x + y) for x, y in zip(self._t(), other._t()))
        return min(e1, e2) < tol

    def _t(self):
        return (self.a, self.b, self.c, self.d)

    def power(self, n: int) -> "Moebius":
        out = IDENTITY
        base = self if n >= 0 else self.inverse()
        for _ in range(abs(n)):
            out = compose(out, base)
        return out

    def to_json(self):
        return [[x.real, x.imag] for x in self._t()]

    @classmethod
    def from_json(cls, data) -> "Moebius":
        return cls(*(complex(re, im) for re, im in data))


IDENTITY = Moebius(1, 0, 0, 1)


def compose(m1: Moebius, m2: Moebius) -> Moebius:
    """Return m1 o m2."""
    return Moebius(m1.a * m2.a + m1.b * m2.c, m1.a * m2.b + m1.b * m2.d,
                   m1.c * m2.a + m1.d * m2.c, m1.c * m2.b + m1.d * m2.d)


def rotation(theta: float) -> Moebius:
    """z -> e^{i theta} z."""
    h = cmath.exp(0.5j * theta)
    return Moebius(h, 0, 0, 1 / h)


def disk_automorphism(u: complex, a: complex = 0j) -> Moebius:
    """z -> u (z - a) / (1 - conj(a) z) with |u| = 1, |a| < 1."""
    return Moebius(u, -u * a, -a.conjugate(), 1)


# Cayley map from the upper half-plane to the disk.
CAYLEY = Moebius(1, -1j, 1, 1j)


def from_half_plane(m: Moebius) -> Moebius:
    """Conjugate a map of the upper half-plane to the disk model."""
    return compose(compose(CAYLEY, m), CAYLEY.inverse())


def is_disk_automorphism(m: Moebius, tol: float = AUTOMORPHISM_TOL) -> bool:
    # det-1 elements of SU(1,1) are [[u, v], [conj v, conj u]] up to sign
    return (abs(m.a - m.d.conjugate()) < tol and abs(m.c - m.b.conjugate()) < tol
            and abs(m.a) >= abs(m.b))


def classify(m: Moebius, tol: float = PARABOLIC_TOL) -> str:
    """identity / elliptic / parabolic / hyperbolic for a disk automorphism."""
    if not is_disk_automorphism(m):
        raise NotDiskAutomorphism("map does not preserve the unit disk",
                                  matrix=m.to_json())
    if m.close_to(IDENTITY, tol):
        return "identity"
    t = abs(m.trace.real)
    if abs(t - 2.0) < tol:
        return "parabolic"
    return "elliptic" if t < 2.0 else "hyperbolic"


@dataclass(frozen=True)
class FixedPoint:
    z: object
    multiplier: complex
    double: bool = False


def fixed_points(m: Moebius, tol: float = 1e-12) -> list[FixedPoint]:
    """Fixed points with multipliers.  A parabolic map yields one double point."""
    a, b, c, d = m.a, m.b, m.c, m.d
    if abs(c) < tol:
        if abs(a - d) < tol:
            return [FixedPoint(INF, 1.0 + 0j, True)]
        z = b / (d - a)
        return [FixedPoint(z, a / d), FixedPoint(INF, d / a)]
    disc = (a + d) ** 2 - 4
    if abs(disc) < tol:
        return [FixedPoint((a - d) / (2 * c), 1.0 + 0j, True)]
    r = cmath.sqrt(disc)
    out = []
    for z in ((a - d + r) / (2 * c), (a - d - r) / (2 * c)):
        out.append(FixedPoint(z, m.derivative(z)))
    return out


# -- the parabolic Blaschke product

@dataclass(frozen=True)
class BlaschkeModel:
    """B(z) = (3z^2 + 1) / (z^2 + 3): parabolic fixed point at 1, critical point 0."""

    def __call__(self, z):
        if z is INF:
            return 3.0
        z2 = z * z
        den = z2 + 3
        if den == 0:
            return INF
        return (3 * z2 + 1) / den

    def derivative(self, z):
        return 16 * z / (z * z + 3) ** 2

    def angle_map(self, t: float) -> float:
        """Action on R/Z (angles in turns)."""
        w = self(cmath.exp(2j * math.pi * t))
        return (cmath.phase(w) / (2 * math.pi)) % 1.0

    def angle_derivative(self, t: float) -> float:
        # |B'| on the circle equals the angular derivative
        return abs(self.derivative(cmath.exp(2j * math.pi * t)))

    def inverse_branches(self, w):
        # B(z) = w  <=>  z^2 = (3w - 1) / (3 - w)
        r = cmath.sqrt((3 * w - 1) / (3 - w))
        return r, -r


def blaschke_parabolic() -> BlaschkeModel:
    B = BlaschkeModel()
    assert abs(B(1.0) - 1) < 1e-15 and abs(B.derivative(1.0) - 1) < 1e-15
    assert B.derivative(0.0) == 0
    return B


# -- geodesics

@dataclass(frozen=True)
class Geodesic:
    x: complex
    y: complex

    @classmethod
    def from_angles(cls, s: float, t: float) -> "Geodesic":
        """Endpoints given as angles in turns."""
        return cls(cmath.exp(2j * math.pi * s), cmath.exp(2j * math.pi * t))


def geodesic_points(g: Geodesic, k: int) -> list[complex]:
    """k points along the geodesic from g.x to g.y, endpoints included."""
    if k < 2:
        raise ValueError("need k >= 2")
    x, y = complex(g.x), complex(g.y)
    x, y = x / abs(x), y / abs(y)
    if abs(x - y) < 1e-14:
        raise DegenerateGeodesic("geodesic endpoints coincide", x=x, y=y)
    if abs(x + y) < 1e-14:
        return [x + (y - x) * j / (k - 1) for j in range(k)]
    # orthogonal circle: center on the bisector at distance sec(half angle)
    half = cmath.phase(y / x) / 2
    center = x * cmath.exp(1j * half) / math.cos(half)
    radius = abs(math.tan(half))
    a0 = cmath.phase(x - center)
    a1 = cmath.phase(y - center)
    # take the short way round (the arc inside the disk)
    delta = (a1 - a0 + math.pi) % (2 * math.pi) - math.pi
    pts = [center + radius * cmath.exp(1j * (a0 + delta * j / (k - 1))) for j in range(k)]
    pts[0], pts[-1] = x, y
    return pts


def geodesic_circle(x: complex, y: complex):
    """Center and radius of the orthocircle through unit points x, y (None for diameters)."""
    if abs(x + y) < 1e-14:
        return None
    half = cmath.phase(y / x) / 2
    return x * cmath.exp(1j * half) / math.cos(half), abs(math.tan(half))


def three_point_map(z1, z2, z3, w1, w2, w3) -> Moebius:
    """The Moebius map sending z_i to w_i (finite points)."""
    def to_std(p, q, r):
        # p -> 0, q -> 1, r -> inf
        return Moebius(q - r, -p * (q - r), q - p, -r * (q - p))
    return compose(to_std(w1, w2, w3).inverse(), to_std(z1, z2, z3))
