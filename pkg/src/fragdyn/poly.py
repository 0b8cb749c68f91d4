"""Polynomial models, Boettcher coordinates, external rays and internal angles.

Four models are registered:

    Q         z^2 - 3/4           parabolic 2-cycle of components at -1/2
    Q_pcf     z^2 - 1             the Basilica, superattracting 0 <-> -1
    F_cubic   z^3 + 2i z^2        parabolic fixed point at -i
    R_quartic a z^4 + (1-4a)/3 z^3 + (2+a)/3,  a = 1/12 + i sqrt(2)/24

Rays are traced in the Boettcher coordinate of the basin of infinity by
Newton continuation in decreasing potential.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import LaminationUndefined, NotEscaped, RayTraceStall, UnknownModel

TWO_PI = 2 * math.pi
MODEL_TOL = 1e-12


@dataclass(frozen=True)
class PolynomialModel:
    """A polynomial with coefficients listed from the leading term down."""
    id: str
    coeffs: tuple
    parabolic: tuple = ()          # points of a parabolic cycle
    superattracting: tuple = ()    # points of a superattracting cycle
    lamination: str | None = None  # name of the internal-angle substitution, if any
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def lead(self) -> complex:
        return complex(self.coeffs[0])

    def __call__(self, z):
        w = 0j if np.isscalar(z) else np.zeros_like(z, dtype=complex)
        for c in self.coeffs:
            w = w * z + c
        return w

    def derivative(self, z):
        d = self.degree
        w = 0j if np.isscalar(z) else np.zeros_like(z, dtype=complex)
        for k, c in enumerate(self.coeffs[:-1]):
            w = w * z + c * (d - k)
        return w

    def iterate(self, z, n: int):
        for _ in range(n):
            z = self(z)
        return z

    def critical_points(self) -> list:
        d = self.degree
        dc = [c * (d - k) for k, c in enumerate(self.coeffs[:-1])]
        return [complex(r) for r in np.roots(dc)]

    @property
    def escape_radius(self) -> float:
        a = abs(self.lead)
        rest = sum(abs(c) for c in self.coeffs[1:])
        return max(2.0, 2 * rest / a, (4 / a) ** (1 / (self.degree - 1)))

    @property
    def boettcher_scale(self) -> complex:
        """lambda with lambda^(d-1) = leading coefficient; phi(z) ~ lambda z."""
        return self.lead ** (1 / (self.degree - 1))

    def to_json(self):
        return {"id": self.id, "degree": self.degree,
                "coeffs": [[complex(c).real, complex(c).imag] for c in self.coeffs]}


def _r_parameter() -> complex:
    return complex(1 / 12, math.sqrt(2) / 24)


def _build(id_: str) -> PolynomialModel:
    if id_ == "Q":
        return PolynomialModel("Q", (1, 0, -0.75), parabolic=(-0.5,), lamination="basilica")
    if id_ == "Q_pcf":
        return PolynomialModel("Q_pcf", (1, 0, -1), superattracting=(0, -1), lamination="basilica")
    if id_ == "F_cubic":
        return PolynomialModel("F_cubic", (1, 2j, 0, 0), parabolic=(-1j,), superattracting=(0,))
    if id_ == "R_quartic":
        a = _r_parameter()
        return PolynomialModel("R_quartic", (a, (1 - 4 * a) / 3, 0, 0, (2 + a) / 3),
                               parabolic=(1,), meta={"a": a})
    raise UnknownModel(f"no model named {id_!r}", id=id_)


MODEL_IDS = ("Q", "Q_pcf", "F_cubic", "R_quartic")


def model(id_: str) -> PolynomialModel:
    """Look up a model and check its distinguished data."""
    m = _build(id_)
    res = model_residuals(m)
    bad = {k: v for k, v in res.items() if v > MODEL_TOL}
    if bad:
        raise AssertionError(f"model {id_} fails its invariants: {bad}")
    return m


def model_residuals(m: PolynomialModel) -> dict:
    """Residuals of the defining properties of a registered model."""
    out = {}
    if m.id == "Q":
        out["fixed"] = abs(m(-0.5) + 0.5)
        out["multiplier"] = abs(m.derivative(-0.5) + 1)
        out["critical"] = abs(m.derivative(0))
    elif m.id == "Q_pcf":
        out["cycle"] = abs(m(0) + 1) + abs(m(-1))
    elif m.id == "F_cubic":
        out["fixed"] = abs(m(-1j) + 1j)
        out["multiplier"] = abs(m.derivative(-1j) - 1)
    elif m.id == "R_quartic":
        a = m.meta["a"]
        c = 1 - 1 / (4 * a)
        out["fixed"] = abs(m(1) - 1)
        out["multiplier"] = abs(m.derivative(1) - 1)
        out["critical"] = abs(m.derivative(c))
        out["critical_value"] = abs(m(c) - 1)
    return out


# ---------------------------------------------------------------- Boettcher

def _escape(m: PolynomialModel, z: complex, maxiter: int = 10_000):
    R = m.escape_radius
    for n in range(maxiter):
        if abs(z) > R:
            return n, z
        z = m(z)
    return None, z


def boettcher(m: PolynomialModel, z: complex, big: float = 1e12) -> complex:
    """phi(z) with phi(P z) = phi(z)^d and phi(z) ~ lambda z at infinity.

    Points inside the escape radius are first pushed out; the d-th roots
    taken on the way back use principal branches, which is exact beyond the
    escape radius and a standard approximation closer in.
    """
    z = complex(z)
    n, w = _escape(m, z)
    if n is None:
        raise NotEscaped("orbit stays bounded", z=z)
    val = _boettcher_far(m, w, big)
    d = m.degree
    if n == 0:
        return val
    # pull back: phi(z) = phi(P^n z)^(1/d^n), branch fixed by the principal product
    est = _boettcher_product(m, z, big)
    root = val ** (1 / d ** n)
    k = np.arange(d ** n)
    cands = root * np.exp(2j * np.pi * k / d ** n)
    return complex(cands[np.argmin(np.abs(cands - est))])


def _boettcher_product(m, z, big):
    d, a, lam = m.degree, m.lead, m.boettcher_scale
    out = lam * z
    scale = 1.0 / d
    while abs(z) < big:
        z1 = m(z)
        out *= (z1 / (a * z ** d)) ** scale
        z = z1
        scale /= d
        if scale < 1e-17:
            break
    return out


def _boettcher_far(m, z, big):
    return _boettcher_product(m, z, big)


def _log_boettcher_and_deriv(m, z, big=1e12):
    """(log phi(z), d/dz log phi(z)) for |z| beyond the escape radius."""
    d, a, lam = m.degree, m.lead, m.boettcher_scale
    logphi = cmath.log(lam) + cmath.log(z)
    dlog = 1 / z
    dz = 1.0 + 0j            # derivative of z_k with respect to z
    scale = 1.0 / d
    zk = z
    while abs(zk) < big and scale > 1e-17:
        p = m(zk)
        dp = m.derivative(zk)
        ratio = p / (a * zk ** d)
        logphi += scale * cmath.log(ratio)
        dlog += scale * (dp / p - d / zk) * dz
        dz = dz * dp
        zk = p
        scale /= d
    return logphi, dlog


def green(m: PolynomialModel, z: complex, maxiter: int = 10_000) -> float:
    """Green's function of the basin of infinity (0 on the filled Julia set)."""
    n, w = _escape(m, complex(z), maxiter)
    if n is None:
        return 0.0
    return math.log(abs(_boettcher_far(m, w, 1e12))) / m.degree ** n


# ---------------------------------------------------------------- rays

@dataclass
class ExternalRay:
    angle: Fraction
    potentials: list
    points: list
    landing: complex | None = None

    @property
    def endpoint(self) -> complex:
        return self.points[-1]

    def to_json(self):
        out = {"angle": str(self.angle), "potentials": list(self.potentials),
               "points": [[z.real, z.imag] for z in self.points]}
        if self.landing is not None:
            out["landing"] = [self.landing.real, self.landing.imag]
        return out


def _ray_newton(m, theta: Fraction, G: float, z0: complex, G_far: float, iters: int = 40):
    """Solve phi(z) = exp(G + 2 pi i theta) near z0 using n forward iterates."""
    d = m.degree
    n = 0
    while G * d ** n < G_far:
        n += 1
    ang = float((theta * d ** n) % 1)
    target = G * d ** n + 1j * TWO_PI * ang
    z = z0
    for _ in range(iters):
        w, dw = z, 1.0 + 0j
        for _ in range(n):
            dw = dw * m.derivative(w)
            w = m(w)
        if abs(w) <= m.escape_radius:
            return None
        lp, dlp = _log_boettcher_and_deriv(m, w)
        # compare in log coordinates, reducing the imaginary part mod 2 pi
        diff = lp - target
        diff = complex(diff.real, (diff.imag + math.pi) % TWO_PI - math.pi)
        step = diff / (dlp * dw)
        z = z - step
        if abs(step) < 1e-15 * max(1.0, abs(z)):
            return z
    return z if abs(step) < 1e-10 else None


def trace_ray(m: PolynomialModel, theta, r0: float | None = None, r1: float = 1e-5,
              steps_per_halving: int = 8, max_steps: int = 10_000) -> ExternalRay:
    """External ray at angle theta from potential r0 down to r1."""
    theta = Fraction(theta) % 1
    G_far = 2 * math.log(m.escape_radius) + 1.0
    if r0 is None:
        r0 = G_far
    lam = m.boettcher_scale
    G = r0
    # at large potential phi^{-1}(w) ~ w / lambda
    z = _ray_newton(m, theta, G, cmath.exp(G + 1j * TWO_PI * float(theta)) / lam, G_far)
    if z is None:
        raise RayTraceStall("could not start the ray", angle=str(theta), potential=G)
    pots, pts = [G], [z]
    factor = 2 ** (-1 / steps_per_halving)
    q = factor
    count = 0
    while G > r1:
        count += 1
        if count > max_steps:
            raise RayTraceStall("step budget exhausted", angle=str(theta), potential=G)
        Gn = max(G * q, r1)
        # linear extrapolation in potential for the starting guess
        guess = pts[-1]
        if len(pts) > 1:
            guess = pts[-1] + (pts[-1] - pts[-2]) * (G - Gn) / (pots[-2] - pots[-1])
        zn = _ray_newton(m, theta, Gn, guess, G_far)
        if zn is None or (len(pts) > 1 and abs(zn - pts[-1]) > 4 * abs(pts[-1] - pts[-2]) + 1e-12):
            # parabolic-safe mode: shrink the step
            q = q ** 0.25
            if 1 - q < 1e-12:
                raise RayTraceStall("step size underflow", angle=str(theta), potential=G)
            continue
        G, z = Gn, zn
        pots.append(G)
        pts.append(z)
        q = min(factor, q ** 0.5) if q > factor else factor
    return ExternalRay(theta, pots, pts)


def _preperiod_period(theta: Fraction, d: int):
    seen = {}
    x, i = theta % 1, 0
    while x not in seen:
        seen[x] = i
        x = (x * d) % 1
        i += 1
    return seen[x], i - seen[x]


def polish_landing(m: PolynomialModel, theta, z0: complex, iters: int = 400) -> complex:
    """Landing point of a rational ray: Newton on P^(l+p) z = P^l z from z0.

    Near a parabolic landing point the root is multiple and Newton converges
    only linearly, so many iterations are allowed.
    """
    theta = Fraction(theta) % 1
    l, p = _preperiod_period(theta, m.degree)

    def g(z):
        w, dw = z, 1.0 + 0j
        for _ in range(l):
            dw = dw * m.derivative(w)
            w = m(w)
        u, du = w, dw
        for _ in range(p):
            du = du * m.derivative(u)
            u = m(u)
        return u - w, du - dw

    z = complex(z0)
    for _ in range(iters):
        f, df = g(z)
        if df == 0:
            break
        step = f / df
        z -= step
        if abs(step) < 1e-15:
            break
    return z


def land_ray(m: PolynomialModel, theta, potential: float = 1e-5) -> ExternalRay:
    """Trace the ray to the given potential and locate its landing point."""
    ray = trace_ray(m, theta, r1=potential)
    ray.landing = polish_landing(m, theta, ray.endpoint)
    return ray


# ---------------------------------------------------------------- internal angles

def basilica_external_angle(t, upper: bool = False) -> Fraction:
    """External angle of the point at internal angle t on the central component.

    Each binary digit b of t becomes the base-4 digit 2 + 2b (with carry),
    so that 0 -> 2/3 and the digit 1 string -> 1/3.  The first-return map
    (two steps of the polynomial, four times the angle) becomes doubling.
    """
    t = Fraction(t) % 1
    # theta = 2/3 + 2 * sum b_i 4^-i where b is the chosen binary expansion
    s = _base4_value(t, upper)
    return (Fraction(2, 3) + 2 * s) % 1


def _base4_value(t: Fraction, upper: bool) -> Fraction:
    """sum b_i 4^-i for the binary expansion b of t (exact, eventually periodic)."""
    # the map t -> (binary digits read in base 4) is exact on eventually periodic
    # expansions; compute by detecting the period of the doubling orbit
    t = Fraction(t) % 1
    if upper and t == 0:
        return Fraction(1, 3)       # 0.111..._2 read in base 4
    if upper and _is_dyadic(t):
        # t = 0.b1..bk 1 000... -> 0.b1..bk 0 111...
        k = _dyadic_level(t)
        head = t - Fraction(1, 2 ** k)
        return _base4_value(head, False) + Fraction(1, 3) / 4 ** k
    digits, seen = [], {}
    x = t
    while x not in seen:
        seen[x] = len(digits)
        x = 2 * x
        b = int(x >= 1)
        x -= b
        digits.append(b)
    start = seen[x]
    pre, per = digits[:start], digits[start:]
    val = sum(Fraction(b, 4 ** (i + 1)) for i, b in enumerate(pre))
    cyc = sum(Fraction(b, 4 ** (i + 1)) for i, b in enumerate(per))
    if per:
        val += cyc / 4 ** len(pre) / (1 - Fraction(1, 4 ** len(per)))
    return val


def _is_dyadic(t: Fraction) -> bool:
    q = t.denominator
    return q & (q - 1) == 0


def _dyadic_level(t: Fraction) -> int:
    return t.denominator.bit_length() - 1


def internal_angles_to_external(t, address=()) -> list:
    """External angles of the boundary point at internal angle t.

    The address is a sequence of binary choices picking the preimage
    component: each entry b replaces the angle set by its preimage
    (theta + b) / 2.
    """
    t = Fraction(t) % 1
    outs = [basilica_external_angle(t, False)]
    if _is_dyadic(t):
        outs.append(basilica_external_angle(t, True))
    res = []
    for th in outs:
        for b in reversed(tuple(address)):
            th = (th + b) / 2
        res.append(th % 1)
    return sorted(set(res))


@dataclass
class InternalAnglePoint:
    address: tuple
    t: Fraction
    point: complex
    angles: list
    spread: float

    def to_json(self):
        return {"address": list(self.address), "t": str(self.t),
                "point": [self.point.real, self.point.imag],
                "angles": [str(a) for a in self.angles], "spread": self.spread}


def internal_point(m: PolynomialModel, address, t, potential: float = 1e-5) -> InternalAnglePoint:
    """Locate the boundary point at internal angle t via its external rays."""
    if m.lamination != "basilica":
        raise LaminationUndefined("model has no internal-angle lamination", id=m.id)
    t = Fraction(t) % 1
    angles = internal_angles_to_external(t, address)
    lands = [land_ray(m, th, potential).landing for th in angles]
    pt = sum(lands) / len(lands)
    spread = max(abs(z - pt) for z in lands)
    return InternalAnglePoint(tuple(address), t, pt, angles, spread)


# ---------------------------------------------------------------- pixel classification

@dataclass(frozen=True)
class OrbitVerdict:
    kind: str                  # "escaped" or "bounded"
    n: int = 0
    parabolic_margin: bool = False


def iterate_classify(m: PolynomialModel, z: complex, maxiter: int = 500,
                     margin: float = 0.05) -> OrbitVerdict:
    """Escape count, or a bounded verdict flagging slow parabolic attraction."""
    R = m.escape_radius
    z = complex(z)
    dist = []
    for n in range(maxiter):
        if abs(z) > R:
            return OrbitVerdict("escaped", n)
        if m.parabolic:
            dist.append(min(abs(z - p) for p in m.parabolic))
        z = m(z)
    flag = False
    if m.parabolic and dist:
        tail = dist[-20:]
        near = tail[-1] < margin
        # geometric attraction would shrink the distance by a fixed factor
        slow = tail[-1] == 0 or (tail[0] > 0 and (tail[-1] / tail[0]) ** (1 / max(len(tail) - 1, 1)) > 0.9)
        flag = near and slow
    return OrbitVerdict("bounded", maxiter, flag)
