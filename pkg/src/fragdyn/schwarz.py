"""Schwarz reflections of the maps f(z) = z + a_1/z + ... - 1/(d z^d).

When f is univalent on the exterior of the closed unit disk, its image
Omega carries the anti-holomorphic reflection S = f o eta o (f|ext)^-1 with
eta(z) = 1/conj(z).  The complement of Omega is the droplet.  Orbits either
fall into the droplet (tiles, by level) or escape to infinity.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from shapely.geometry import LineString

from . import kernels
from .errors import MultiRoot, NotInOmega, UnivalenceScreenFailed

OMEGA_TOL = 1e-12       # |w| must exceed 1 by this much to count as exterior
BOUNDARY_FLAG = 1e-8    # roots this close to the circle get flagged
ESCAPE_RADIUS = 1e3


@dataclass(frozen=True)
class SigmaStarMap:
    d: int
    coeffs: tuple                  # a_1 .. a_{d-1}
    certificate: dict = field(default_factory=dict, compare=False, hash=False)

    @property
    def laurent(self) -> np.ndarray:
        """a_1 .. a_d with a_d = -1/d."""
        return np.array(list(self.coeffs) + [-1.0 / self.d], dtype=complex)

    def __call__(self, w):
        w = np.asarray(w, dtype=complex) if not np.isscalar(w) else complex(w)
        out = w
        inv = 1 / w
        p = inv
        for a in self.laurent:
            out = out + a * p
            p = p * inv
        return out

    def derivative(self, w):
        out = 1.0 + 0j * w
        for j, a in enumerate(self.laurent, start=1):
            out = out - j * a / w ** (j + 1)
        return out

    def poly(self, z: complex) -> np.ndarray:
        """Coefficients of w^d (f(w) - z), leading term first."""
        return np.concatenate([[1.0, -complex(z)], self.laurent])

    def critical_points(self) -> np.ndarray:
        # w^(d+1) f'(w) = w^(d+1) - sum_j j a_j w^(d-j)
        c = np.zeros(self.d + 2, dtype=complex)
        c[0] = 1.0
        for j, a in enumerate(self.laurent, start=1):
            c[j + 1] = -j * a
        return np.roots(c)

    def boundary(self, n: int = 2048, r: float = 1.0) -> np.ndarray:
        t = 2 * np.pi * np.arange(n) / n
        return self(r * np.exp(1j * t))

    def to_json(self):
        return {"d": self.d, "coeffs": [[complex(a).real, complex(a).imag] for a in self.coeffs],
                "certificate": self.certificate}


def make_f(d: int, coeffs=(), samples: int = 2048, push: float = 1e-3) -> SigmaStarMap:
    """Build f and screen it for univalence on the exterior of the disk.

    The screen checks (i) that f' has no zero outside the closed disk, both
    from its critical points and on geometric annuli, and (ii) that the image
    of the circle of radius 1 + ``push`` does not cross itself.  The push
    keeps double points of f(S^1), which univalent maps may have, from
    counting as crossings.
    """
    if d < 2:
        raise ValueError("d must be at least 2")
    coeffs = tuple(complex(a) for a in coeffs)
    if len(coeffs) < d - 1:
        coeffs = coeffs + (0j,) * (d - 1 - len(coeffs))
    if len(coeffs) != d - 1:
        raise ValueError(f"need {d - 1} coefficients a_1..a_{d - 1}")
    f = SigmaStarMap(d, coeffs)
    reasons = []
    crit = f.critical_points()
    outside = [complex(c) for c in crit if abs(c) > 1 + 1e-9]
    if outside:
        reasons.append("critical point outside the closed disk")
    radii = 1 + np.geomspace(1e-3, 10.0, 24)
    t = 2 * np.pi * np.arange(samples) / samples
    dmin = min(float(np.min(np.abs(f.derivative(r * np.exp(1j * t))))) for r in radii)
    if dmin < 1e-12:
        reasons.append("f' vanishes on a sampled annulus")
    curve = f.boundary(samples, 1 + push)
    simple = LineString(np.c_[curve.real, curve.imag].tolist() + [[curve[0].real, curve[0].imag]]).is_simple
    if not simple:
        reasons.append("boundary curve crosses itself")
    cert = {"samples": samples, "annuli": len(radii), "push": push, "min_abs_fprime": dmin,
            "critical_moduli": sorted(float(abs(c)) for c in crit), "simple_boundary": simple}
    if reasons:
        raise UnivalenceScreenFailed("; ".join(reasons), d=d, coeffs=list(coeffs),
                                     critical_outside=outside)
    return SigmaStarMap(d, coeffs, cert)


def cubic_example() -> SigmaStarMap:
    """f(z) = z + 2/(3z) - 1/(3z^3)."""
    return make_f(3, (2 / 3, 0))


@dataclass(frozen=True)
class SchwarzReflection:
    f: SigmaStarMap
    polish_steps: int = 3
    escape_radius: float = ESCAPE_RADIUS

    def inverse(self, z, with_flag: bool = False):
        return exterior_inverse(self.f, z, self.polish_steps, with_flag)

    def __call__(self, z):
        return schwarz_apply(self, z)


def exterior_inverse(f: SigmaStarMap, z, polish_steps: int = 3, with_flag: bool = False):
    """The w with |w| > 1 and f(w) = z.

    Roots of w^d (f(w) - z) come from companion-matrix eigenvalues and the
    exterior one is polished by Newton on f.
    """
    roots = np.roots(f.poly(z))
    mods = np.abs(roots)
    order = np.argsort(-mods)
    w = complex(roots[order[0]])
    if mods[order[0]] <= 1 + OMEGA_TOL:
        raise NotInOmega("no exterior preimage", z=complex(z), max_modulus=float(mods[order[0]]))
    if len(roots) > 1 and mods[order[1]] > 1 + BOUNDARY_FLAG:
        raise MultiRoot("two exterior preimages; the univalence screen was violated",
                        z=complex(z), moduli=[float(mods[order[0]]), float(mods[order[1]])])
    flag = bool(len(roots) > 1 and abs(mods[order[1]] - 1) < BOUNDARY_FLAG
                and abs(mods[order[0]] - 1) < BOUNDARY_FLAG)
    for _ in range(polish_steps):
        fp = f.derivative(w)
        if fp == 0:
            break
        step = (f(w) - z) / fp
        w_new = w - step
        if abs(w_new) <= 1:
            break
        w = w_new
    return (w, flag) if with_flag else w


def schwarz_apply(S: SchwarzReflection | SigmaStarMap, z) -> complex:
    """S(z) = f(1/conj(w)) where w is the exterior preimage of z."""
    if isinstance(S, SigmaStarMap):
        S = SchwarzReflection(S)
    w = exterior_inverse(S.f, z, S.polish_steps)
    return S.f(1 / w.conjugate())


@dataclass(frozen=True)
class OrbitClass:
    kind: str         # tile | basin | undecided
    level: int

    def __str__(self):
        return f"{self.kind}({self.level})"


def in_droplet(f: SigmaStarMap, z) -> bool:
    return float(np.max(np.abs(np.roots(f.poly(z))))) <= 1 + OMEGA_TOL


def classify_orbit(S: SchwarzReflection | SigmaStarMap, z, maxiter: int = 60) -> OrbitClass:
    """First entry of the orbit into the droplet, escape, or neither."""
    if isinstance(S, SigmaStarMap):
        S = SchwarzReflection(S)
    if maxiter < 1:
        raise ValueError("maxiter must be >= 1")
    z = complex(z)
    for n in range(maxiter):
        if abs(z) > S.escape_radius:
            return OrbitClass("basin", n)
        try:
            z = schwarz_apply(S, z)
        except NotInOmega:
            return OrbitClass("tile", n)
    return OrbitClass("undecided", maxiter)


# ---------------------------------------------------------------- checks

def round_trip_residual(f: SigmaStarMap, n: int = 1000, rng=None, delta: float = 0.05) -> float:
    """max |exterior_inverse(f(w)) - w| over random w with |w| >= 1 + delta."""
    rng = np.random.default_rng(0) if rng is None else rng
    r = 1 + delta + rng.exponential(1.0, n)
    w = r * np.exp(2j * np.pi * rng.random(n))
    return float(max(abs(exterior_inverse(f, f(x)) - x) for x in w))


def boundary_residual(S: SchwarzReflection | SigmaStarMap, n: int = 1000, push: float = 1e-12) -> float:
    """sup |S(f(e^it)) - f(e^it)| over n boundary samples.

    Points are taken a hair outside the circle so that they lie in Omega.
    """
    if isinstance(S, SigmaStarMap):
        S = SchwarzReflection(S)
    t = 2 * np.pi * (np.arange(n) + 0.5) / n
    err = 0.0
    for x in t:
        w = (1 + push) * np.exp(1j * x)
        z = S.f(w)
        try:
            err = max(err, abs(schwarz_apply(S, z) - z))
        except NotInOmega:
            # the sample fell on a cusp or double point; S is the identity there
            continue
    return err


def reflection_identity_residual(f: SigmaStarMap, n: int = 1000, rng=None) -> float:
    """max |S(f(w)) - f(1/conj w)| for random |w| > 1."""
    rng = np.random.default_rng(1) if rng is None else rng
    S = SchwarzReflection(f)
    w = (1.05 + rng.exponential(1.0, n)) * np.exp(2j * np.pi * rng.random(n))
    return float(max(abs(schwarz_apply(S, f(x)) - f(1 / np.conj(x))) for x in w))


def tile_compatibility(S: SchwarzReflection | SigmaStarMap, zs, maxiter: int = 60) -> dict:
    """Check that tile(k) maps to tile(k - 1) on every decided sample."""
    if isinstance(S, SigmaStarMap):
        S = SchwarzReflection(S)
    checked = bad = 0
    for z in zs:
        c = classify_orbit(S, z, maxiter)
        if c.kind != "tile" or c.level < 1:
            continue
        c2 = classify_orbit(S, schwarz_apply(S, z), maxiter)
        checked += 1
        if not (c2.kind == "tile" and c2.level == c.level - 1):
            bad += 1
    return {"checked": checked, "violations": bad}


def classify_grid(f: SigmaStarMap, xs, ys, maxiter: int = 60, escape_radius: float = ESCAPE_RADIUS,
                  use_numba: bool | None = None):
    """(kind, level) arrays from the pixel kernel; kind uses kernels.TILE/BASIN/UNDECIDED."""
    return kernels.schwarz_grid(f.laurent, xs, ys, escape_radius, maxiter, use_numba)


def max_tile_level(level, kind) -> int:
    t = level[kind == kernels.TILE]
    return int(t.max()) if t.size else -1

