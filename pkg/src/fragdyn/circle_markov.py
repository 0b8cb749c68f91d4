"""Piecewise-conformal Markov systems on one or several circles.

Angles live on R/Z.  Exact data uses ``Fraction``; numeric data uses floats
compared at ``MEMBERSHIP_TOL``.  A point on a multi-circle system is a pair
``(circle, angle)``.

The main entry points are :class:`MarkovSystem`, :func:`validate_markov`,
:func:`refine`, :func:`side_orbit`, :func:`classify_breakpoints` and
:func:`pullback_conjugacy`.
"""
from __future__ import annotations

import bisect
import cmath
import heapq
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import moebius as mb
from .errors import (CombinatorialMismatch, InsufficientDepth, NonPeriodicTail,
                     NotMarkov, NotParabolic)

MEMBERSHIP_TOL = 1e-10
PARABOLIC_TOL = 1e-9
TWO_PI = 2 * math.pi


# ---------------------------------------------------------------- angles

def is_exact(x) -> bool:
    return isinstance(x, (Fraction, int))


def mod1(x):
    if isinstance(x, int):
        return Fraction(x % 1)
    if isinstance(x, Fraction):
        return x - (x.numerator // x.denominator)
    r = x % 1.0
    return 0.0 if r == 1.0 else r


def parse_angle(s):
    """'p/q' -> Fraction, number -> float."""
    if isinstance(s, str):
        return mod1(Fraction(s))
    if isinstance(s, (Fraction, int)):
        return mod1(Fraction(s))
    return mod1(float(s))


def angle_str(x):
    if is_exact(x):
        x = Fraction(x)
        return f"{x.numerator}/{x.denominator}"
    return float(x)


def circ_dist(x, y) -> float:
    d = float(mod1(x - y))
    return min(d, 1.0 - d)


def same_angle(x, y, tol=MEMBERSHIP_TOL) -> bool:
    if is_exact(x) and is_exact(y):
        return mod1(x - y) == 0
    return circ_dist(x, y) < tol


def to_point(t) -> complex:
    return cmath.exp(1j * TWO_PI * float(t))


def to_angle(z) -> float:
    return (cmath.phase(z) / TWO_PI) % 1.0


# ---------------------------------------------------------------- arcs

@dataclass(frozen=True)
class Arc:
    """Counterclockwise closed arc from start to end on circle ``circle``.

    start == end denotes the full circle cut at that point.
    """
    start: object
    end: object
    circle: int = 0

    def __post_init__(self):
        object.__setattr__(self, "start", mod1(self.start))
        object.__setattr__(self, "end", mod1(self.end))
        L = mod1(self.end - self.start)
        if (is_exact(L) and L == 0) or (not is_exact(L) and (L < MEMBERSHIP_TOL or L > 1 - MEMBERSHIP_TOL)):
            L = Fraction(1) if is_exact(L) else 1.0
        object.__setattr__(self, "_length", L)

    @property
    def length(self):
        return self._length

    def offset(self, x, side="+"):
        """Position of x measured from start, in [0, length] (None if outside)."""
        u = mod1(x - self.start)
        L = self.length
        exact = is_exact(u) and is_exact(L)
        tol = 0 if exact else MEMBERSHIP_TOL
        if side == "-":
            if (exact and u == 0) or (not exact and (u < tol or u > 1 - tol)):
                u = Fraction(1) if exact else 1.0
            if u > L + tol:
                return None
            return min(u, L)
        if not exact and u > 1 - tol:
            u = 0.0
        if exact:
            return u if u < L else None
        return u if u < L - tol else None

    def contains(self, x, side="+") -> bool:
        return self.offset(x, side) is not None

    def midpoint(self):
        return mod1(self.start + self.length / 2)

    def to_json(self):
        return {"circle": self.circle, "start": angle_str(self.start), "end": angle_str(self.end)}


# ---------------------------------------------------------------- piece maps

class PieceMap:
    kind = "abstract"
    exact = False

    def forward(self, t, side="+"):
        raise NotImplementedError

    def deriv(self, t) -> float:
        raise NotImplementedError

    def inverse(self, y, arc: Arc, side="+"):
        raise NotImplementedError

    def image_length(self, arc: Arc):
        s, e = self.forward(arc.start, "+"), self.forward(arc.end, "-")
        L = mod1(e - s)
        if float(L) < MEMBERSHIP_TOL or float(L) > 1 - MEMBERSHIP_TOL:
            return 1.0
        return L

    def holo(self, z: complex, base: complex | None = None) -> complex:
        """Holomorphic extension near the circle in the point coordinate."""
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class LinearPiece(PieceMap):
    """t -> a t + b on R/Z."""
    a: object
    b: object = Fraction(0)
    kind = "linear"

    @property
    def exact(self):
        return is_exact(self.a) and is_exact(self.b)

    def forward(self, t, side="+"):
        return mod1(self.a * t + self.b)

    def deriv(self, t):
        return float(self.a)

    def image_length(self, arc):
        return self.a * arc.length

    def inverse(self, y, arc, side="+"):
        a = self.a
        u = mod1(y - self.b - a * arc.start)
        if side == "-" and ((is_exact(u) and u == 0) or (not is_exact(u) and u < MEMBERSHIP_TOL)):
            u = u + 1
        return mod1(arc.start + u / a)

    def preimages(self, y, arc):
        """All preimages of y in arc (the piece may wrap several times)."""
        a = self.a
        u = mod1(y - self.b - a * arc.start)
        out = []
        L = arc.length * a
        k = 0
        while u + k < L:
            out.append(mod1(arc.start + (u + k) / a))
            k += 1
        return out

    def holo(self, z, base=None):
        # only integer slopes extend to z -> e^{2 pi i b} z^a
        if self.a != int(self.a):
            raise NotImplementedError("non-integer slope has no holomorphic model")
        return cmath.exp(1j * TWO_PI * float(self.b)) * z ** int(self.a)

    def to_json(self):
        return {"kind": self.kind, "a": angle_str(self.a) if self.exact else float(self.a),
                "b": angle_str(self.b) if self.exact else float(self.b)}


@dataclass(frozen=True)
class PowerPiece(LinearPiece):
    """sigma_d: t -> d t."""
    kind = "power"

    def __init__(self, d: int):
        object.__setattr__(self, "a", Fraction(d))
        object.__setattr__(self, "b", Fraction(0))

    def to_json(self):
        return {"kind": "power", "d": int(self.a)}


@dataclass(frozen=True)
class MoebiusPiece(PieceMap):
    m: mb.Moebius
    kind = "moebius"

    def forward(self, t, side="+"):
        return to_angle(self.m(to_point(t)))

    def deriv(self, t):
        return abs(self.m.derivative(to_point(t)))

    def inverse(self, y, arc, side="+"):
        return to_angle(self.m.inverse()(to_point(y)))

    def holo(self, z, base=None):
        return self.m(z)

    def to_json(self):
        return {"kind": "moebius", "matrix": self.m.to_json()}


# The conformal model of the fat Basilica on the boundary of its fixed
# Fatou component: the parabolic Blaschke product.
_B = mb.blaschke_parabolic()


def blaschke_inverse(w: complex, digit: int, near: complex | None = None,
                     side: str = "+") -> complex:
    """Inverse branch of B on the circle: digit 0 -> upper half, 1 -> lower half.

    At the cut w = 1 the side decides between the two ends of the half circle.
    With ``near`` given, the root closest to it is returned instead (used for
    holomorphic continuation off the circle).
    """
    r1, r2 = _B.inverse_branches(w)
    if near is not None:
        return r1 if abs(r1 - near) <= abs(r2 - near) else r2
    if abs(w - 1) < 1e-13:
        start = 1.0 + 0j if digit == 0 else -1.0 + 0j
        return start if side == "+" else -start
    up = r1 if r1.imag > 0 or (r1.imag == 0 and r1.real < 0 and digit == 0) else r2
    lo = r2 if up is r1 else r1
    return up if digit == 0 else lo


# dyadic angles already converted, in both directions; the reverse table lets
# branch words act exactly on break points that came from blaschke_conj
_CONJ: dict = {}
_DYADIC_OF: dict = {}
_DYADIC_NEAR: dict = {}


def blaschke_conj(t: Fraction) -> float:
    """Angle in Blaschke coordinates of the internal angle t (exact dyadic t).

    This is the conjugacy from the doubling map to B, evaluated on dyadic
    rationals by pulling 1 back along the binary digits of t.
    """
    t = mod1(Fraction(t))
    x = _CONJ.get(t)
    if x is None:
        x = _blaschke_conj(t)
        _CONJ[t] = x
        _DYADIC_OF.setdefault(x, t)
        _DYADIC_NEAR.setdefault(round(x, 11), t)
    return x


def _blaschke_conj(t: Fraction) -> float:
    if t == 0:
        return 0.0
    n = 0
    q = t.denominator
    while q > 1:
        if q % 2:
            raise ValueError("blaschke_conj needs a dyadic angle")
        q //= 2
        n += 1
    p = t.numerator
    z = 1.0 + 0j
    # t = (..((0 + p_0)/2 + p_1)/2 ..)/2 with p_0 the least significant bit
    for j in range(n):
        z = blaschke_inverse(z, (p >> j) & 1)
    return to_angle(z)


@dataclass(frozen=True)
class BranchWordPiece(PieceMap):
    """B^{-n} o B^{m} in Blaschke coordinates.

    The source arc is the image of the dyadic interval [p_src/2^m, (p_src+1)/2^m]
    and the target arc that of [p_dst/2^n, (p_dst+1)/2^n].  Its combinatorial
    shadow on internal angles is t -> (2^m t - p_src + p_dst) / 2^n.
    """
    m: int
    p_src: int
    n: int
    p_dst: int
    model: str = "blaschke"
    kind = "branch_word"

    def shadow(self) -> LinearPiece:
        return LinearPiece(Fraction(2 ** self.m, 2 ** self.n),
                           Fraction(self.p_dst - self.p_src, 2 ** self.n))

    def _fwd_z(self, z: complex, track=None, side="+"):
        for _ in range(self.m):
            z = _B(z)
        if track is not None:
            track.append(z)
        for j in range(self.n):
            z = blaschke_inverse(z, (self.p_dst >> j) & 1, side=side)
            if track is not None:
                track.append(z)
        return z

    def _exact(self, t, side="+", near=False):
        """(source, target) internal angles when t is a known dyadic break point."""
        s = _DYADIC_OF.get(t) if isinstance(t, float) else None
        if s is None and near and isinstance(t, float):
            s = _DYADIC_NEAR.get(round(t, 11))
        if s is None:
            return None
        if side == "-" and s == 0:
            s = Fraction(1)
        u = s * 2 ** self.m - self.p_src
        if u < 0 and s == 0:
            s = Fraction(1)
            u = s * 2 ** self.m - self.p_src
        if not 0 <= u <= 1:
            return None
        return s, (u + self.p_dst) / 2 ** self.n

    def forward(self, t, side="+"):
        ex = self._exact(t, side)
        if ex is not None:
            return blaschke_conj(ex[1])
        return to_angle(self._fwd_z(to_point(t), side=side))

    def deriv(self, t):
        ex = self._exact(t)
        if ex is not None:
            # |B'| along the forward orbit of the source over |B'| along the target's
            s, tau = ex
            d = 1.0
            for i in range(self.m):
                d *= abs(_B.derivative(to_point(blaschke_conj(s * 2 ** i))))
            for i in range(self.n):
                d /= abs(_B.derivative(to_point(blaschke_conj(tau * 2 ** i))))
            return d
        z = to_point(t)
        d = 1.0
        for _ in range(self.m):
            d *= abs(_B.derivative(z))
            z = _B(z)
        for j in range(self.n):
            z = blaschke_inverse(z, (self.p_dst >> j) & 1)
            d /= abs(_B.derivative(z))
        return d

    def inverse(self, y, arc, side="+"):
        w = to_point(y)
        for _ in range(self.n):
            w = _B(w)
        # invert B^m using the digits of p_src
        for j in range(self.m):
            w = blaschke_inverse(w, (self.p_src >> j) & 1, side=side)
        return to_angle(w)

    def holo(self, z, base=None):
        # continue branches along the orbit of the base point
        if base is None:
            return self._fwd_z(z)
        track: list = []
        ex = self._exact(to_angle(base), near=True) if abs(abs(base) - 1) < 1e-12 else None
        if ex is not None:
            tau = ex[1]
            track = [to_point(blaschke_conj(tau * 2 ** (self.n - j))) for j in range(self.n + 1)]
        else:
            self._fwd_z(base, track)
        for _ in range(self.m):
            z = _B(z)
        for j in range(self.n):
            z = blaschke_inverse(z, 0, near=track[j + 1])
        return z

    def to_json(self):
        return {"kind": "branch_word", "model": self.model, "m": self.m,
                "p_src": self.p_src, "n": self.n, "p_dst": self.p_dst}


def piece_from_json(d: dict) -> PieceMap:
    k = d["kind"]
    if k == "linear":
        return LinearPiece(parse_num(d["a"]), parse_num(d.get("b", "0/1")))
    if k == "power":
        return PowerPiece(int(d["d"]))
    if k == "moebius":
        return MoebiusPiece(mb.Moebius.from_json(d["matrix"]))
    if k == "branch_word":
        return BranchWordPiece(int(d["m"]), int(d["p_src"]), int(d["n"]), int(d["p_dst"]),
                               d.get("model", "blaschke"))
    raise ValueError(f"unknown piece kind {k!r}")


def parse_num(s):
    if isinstance(s, str):
        return Fraction(s)
    return s


# ---------------------------------------------------------------- systems

@dataclass
class MarkovSystem:
    """Arcs, one piece map per arc, and the target circle of each piece."""
    arcs: list
    pieces: list
    phi: list = None
    n_circles: int = 1
    name: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.phi is None:
            self.phi = [a.circle for a in self.arcs]
        if len(self.arcs) != len(self.pieces) or len(self.phi) != len(self.arcs):
            raise ValueError("arcs, pieces and phi must have equal length")
        self.n_circles = max(self.n_circles, 1 + max(a.circle for a in self.arcs))
        self._bk = None
        self._arc_idx = None
        self._bk_idx = None

    @property
    def exact(self) -> bool:
        return all(p.exact for p in self.pieces) and all(
            is_exact(a.start) for a in self.arcs)

    def __len__(self):
        return len(self.arcs)

    def break_points(self, circle: int | None = None):
        """Sorted list of (circle, angle) arc endpoints."""
        if self._bk is None:
            pts = {}
            for a in self.arcs:
                for x in (a.start, a.end):
                    key = (a.circle, _key(x))
                    pts.setdefault(key, (a.circle, x))
            self._bk = sorted(pts.values(), key=lambda p: (p[0], float(p[1])))
        if circle is None:
            return list(self._bk)
        return [p for p in self._bk if p[0] == circle]

    def _arc_lengths(self):
        if getattr(self, "_flen", None) is None:
            self._flen = [float(a.length) for a in self.arcs]
        return self._flen

    # sorted per-circle indexes so that lookups are logarithmic
    def _arcs_sorted(self, circle):
        if self._arc_idx is None:
            idx: dict = {}
            for i, a in enumerate(self.arcs):
                idx.setdefault(a.circle, []).append((float(a.start), i))
            self._arc_idx = {}
            for c, v in idx.items():
                v.sort()
                self._arc_idx[c] = ([s for s, _ in v], [i for _, i in v])
        return self._arc_idx.get(circle, ([], []))

    def _breaks_sorted(self, circle):
        if self._bk_idx is None:
            self._bk_idx = {}
            for c, b in self.break_points():
                fl, vals = self._bk_idx.setdefault(c, ([], []))
                fl.append(float(b))
                vals.append(b)
        return self._bk_idx.get(circle, ([], []))

    def _near_break(self, circle, x):
        fl, vals = self._breaks_sorted(circle)
        n = len(fl)
        if not n:
            return None
        k = bisect.bisect_left(fl, float(x))
        for j in sorted({(k - 1) % n, k % n, 0, n - 1}):
            if same_angle(vals[j], x):
                return vals[j]
        return None

    def snap(self, circle, x):
        """Replace x by an equal break point (exact representative) if any."""
        b = self._near_break(circle, x)
        return x if b is None else b

    def is_break_point(self, circle, x) -> bool:
        return self._near_break(circle, x) is not None

    def piece_at(self, circle, x, side="+") -> int:
        starts, ids = self._arcs_sorted(circle)
        n = len(ids)
        if n > 5:
            k = bisect.bisect_right(starts, float(x))
            hits = [ids[(k + d) % n] for d in (-2, -1, 0, 1)]
            hits = [i for i in hits if self.arcs[i].contains(x, side)]
            if hits:
                return min(hits)
        best = None
        for i in ids:
            if self.arcs[i].contains(x, side) and (best is None or i < best):
                best = i
        if best is None:
            raise ValueError(f"point {x} on circle {circle} not covered")
        return best

    def apply(self, i: int, x, side="+"):
        """Image of x under piece i as (circle, angle)."""
        y = self.pieces[i].forward(x, side)
        return self.phi[i], y

    def image_arc(self, i: int):
        """(circle, start, length) of the image of arc i."""
        a = self.arcs[i]
        p = self.pieces[i]
        return self.phi[i], p.forward(a.start, "+"), p.image_length(a)

    def to_json(self) -> dict:
        out = {"circles": self.n_circles, "phi": list(self.phi),
               "pieces": [{"arc": a.to_json(), "map": p.to_json()}
                          for a, p in zip(self.arcs, self.pieces)]}
        try:
            if len(self) <= 400:
                out["matrix"] = validate_markov(self).tolist()
            else:
                out["incidence"] = markov_incidence(self)
        except NotMarkov:
            out["matrix"] = None
        if self.name:
            out["name"] = self.name
        return out

    @classmethod
    def from_json(cls, d: dict) -> "MarkovSystem":
        arcs, pieces = [], []
        for p in d["pieces"]:
            ad = p["arc"]
            arcs.append(Arc(parse_angle(ad["start"]), parse_angle(ad["end"]), int(ad.get("circle", 0))))
            pieces.append(piece_from_json(p["map"]))
        return cls(arcs, pieces, d.get("phi"), int(d.get("circles", 1)), d.get("name", ""))


def _key(x):
    if is_exact(x):
        return Fraction(x)
    return round(float(x) * 1e9) / 1e9


def _arc_in_image(arc: Arc, circ, start, length) -> bool:
    if arc.circle != circ:
        return False
    if float(length) >= 1 - MEMBERSHIP_TOL:
        return True
    u = mod1(arc.start - start)
    exact = is_exact(u) and is_exact(length) and is_exact(arc.length)
    tol = 0 if exact else MEMBERSHIP_TOL
    if not exact and u > 1 - tol:
        u = 0.0
    return u + arc.length <= length + tol


def _image_members(system: MarkovSystem, j: int) -> list:
    """Indices of the arcs contained in the image of arc j (walking ccw)."""
    circ, s, L = system.image_arc(j)
    starts, ids = system._arcs_sorted(circ)
    if float(L) >= 1 - MEMBERSHIP_TOL:
        return sorted(ids)
    n = len(ids)
    sf, Lf = float(mod1(s)), float(L)
    k = bisect.bisect_left(starts, sf - 1e-9)
    flen = system._arc_lengths()
    out = []
    for d in range(n):
        pos = (k + d) % n
        i = ids[pos]
        u = (starts[pos] - sf) % 1.0
        if u > Lf + 1e-9 and u < 1 - 1e-9:
            break
        # floats decide away from the image ends; the exact test decides near them
        e = u + flen[i]
        if 1e-9 < u and e < Lf - 1e-9:
            out.append(i)
        elif (u < 1e-9 or u > 1 - 1e-9 or e <= Lf + 1e-9) and _arc_in_image(system.arcs[i], circ, s, L):
            out.append(i)
    return sorted(out)


def markov_incidence(system: MarkovSystem) -> list:
    """Sparse Markov data: entry j lists the arcs i with A_i inside f_j(A_j).

    Raises NotMarkov if a piece sends an arc endpoint off the break-point set
    or an image is not exactly a union of arcs.
    """
    cols = []
    for j, (a, p) in enumerate(zip(system.arcs, system.pieces)):
        circ = system.phi[j]
        for x, sd in ((a.start, "+"), (a.end, "-")):
            y = p.forward(x, sd)
            if not system.is_break_point(circ, y):
                raise NotMarkov("piece sends an endpoint off the break-point set",
                                piece=j, endpoint=angle_str(x), image=angle_str(y))
        if p.deriv(a.midpoint()) <= 0:
            raise NotMarkov("piece is not orientation preserving", piece=j)
        members = _image_members(system, j)
        _, _, L = system.image_arc(j)
        covered = sum(float(system.arcs[i].length) for i in members)
        target = float(L) if float(L) <= 1 else 1.0
        if abs(covered - target) > 1e-8:
            raise NotMarkov("image is not a union of partition arcs", piece=j,
                            covered=covered, image_length=float(L))
        cols.append(members)
    return cols


def validate_markov(system: MarkovSystem) -> np.ndarray:
    """Markov matrix M[i][j] = 1 iff A_i is contained in f_j(A_j).

    Raises NotMarkov if a piece sends an arc endpoint off the break-point set.
    """
    n = len(system)
    M = np.zeros((n, n), dtype=int)
    for j, col in enumerate(markov_incidence(system)):
        M[col, j] = 1
    return M


# ---------------------------------------------------------------- refinement

@dataclass(frozen=True)
class RefinedArc:
    word: tuple
    arc: Arc


def refine(system: MarkovSystem, n: int) -> list[RefinedArc]:
    """Level-n pieces A_w for admissible words of length n+1.

    Letters are piece indices, or (index, sheet) pairs for pieces whose image
    wraps more than once around the circle.
    """
    M = validate_markov(system)
    level = [RefinedArc((i,), a) for i, a in enumerate(system.arcs)]
    for _ in range(n):
        nxt = []
        for i, (a, p) in enumerate(zip(system.arcs, system.pieces)):
            circ = system.phi[i]
            wraps = p.image_length(a)
            for child in level:
                j = _first(child.word)
                if child.arc.circle != circ or not M[j, i]:
                    continue
                nxt.extend(_pull_arc(system, i, child, wraps))
        level = nxt
    return level


def _first(word):
    w = word[0]
    return w[0] if isinstance(w, tuple) else w


def _pull_arc(system, i, child: RefinedArc, wraps):
    a, p = system.arcs[i], system.pieces[i]
    if float(wraps) <= 1 + MEMBERSHIP_TOL:
        s = p.inverse(child.arc.start, a, "+")
        e = p.inverse(child.arc.end, a, "-")
        return [RefinedArc((i,) + child.word, Arc(s, e, a.circle))]
    out = []
    starts = p.preimages(child.arc.start, a)
    for k, s in enumerate(starts):
        e = mod1(s + child.arc.length / p.a)
        if a.offset(e, "-") is None:
            continue
        out.append(RefinedArc(((i, k),) + child.word, Arc(s, e, a.circle)))
    return out


def refined_system(system: MarkovSystem, n: int) -> MarkovSystem:
    """The same maps on the level-n partition (a Markov map onto level n-1)."""
    arcs, pieces, phi = [], [], []
    for ra in refine(system, n):
        i = _first(ra.word)
        arcs.append(ra.arc)
        pieces.append(system.pieces[i])
        phi.append(system.phi[i])
    return MarkovSystem(arcs, pieces, phi, system.n_circles, system.name + f"@{n}")


def max_diameters(system: MarkovSystem, depth: int, budget: int = 2_000_000) -> list:
    """Largest level-k arc length for k = 0..depth."""
    validate_markov(system)
    if all(isinstance(p, LinearPiece) for p in system.pieces):
        return _max_diam_linear(system, depth)
    return _max_diam_search(system, depth, budget)


def _max_diam_linear(system, depth):
    M = validate_markov(system)
    n = len(system)
    best = [float(a.length) for a in system.arcs]
    out = [max(best)]
    for _ in range(depth):
        nb = []
        for i in range(n):
            cands = [best[j] for j in range(n) if M[j, i]]
            nb.append(max(cands) / float(system.pieces[i].a) if cands else 0.0)
        best = nb
        out.append(max(best))
    return out


def _max_diam_search(system, depth, budget):
    # best-first: children are never longer than their parent, so the first
    # arc popped at level k is the longest one at that level
    M = validate_markov(system)
    heap = []
    for i, a in enumerate(system.arcs):
        heapq.heappush(heap, (-float(a.length), 0, -1 - i, (i,), a))
    found = {}
    count = 0
    pops = 0
    while heap and len(found) <= depth:
        negL, lev, _, word, arc = heapq.heappop(heap)
        if lev not in found:
            found[lev] = -negL
        if lev == depth:
            continue
        pops += 1
        if pops > budget:
            break
        for child_arc, child_word in _children(system, M, word, arc):
            count += 1
            heapq.heappush(heap, (-float(child_arc.length), lev + 1, count, child_word, child_arc))
    return [found.get(k, float("nan")) for k in range(depth + 1)]


def _children(system, M, word, arc):
    # A_{wj} is the pull-back of A_j along the whole word w
    last = word[-1]
    out = []
    for j, aj in enumerate(system.arcs):
        if not M[j, last]:
            continue
        sub = aj
        for i in reversed(word):
            p, a = system.pieces[i], system.arcs[i]
            sub = Arc(p.inverse(sub.start, a, "+"), p.inverse(sub.end, a, "-"), a.circle)
        out.append((sub, word + (j,)))
    return out


def is_topologically_expanding(system: MarkovSystem, depth: int, eps: float):
    """(expanding?, decay curve of max arc length per level)."""
    curve = max_diameters(system, depth)
    return curve[-1] < eps, curve


# ---------------------------------------------------------------- orbits

@dataclass(frozen=True)
class SideOrbit:
    points: list          # (circle, angle) pairs
    pieces: list          # piece index used at each step
    preperiod: int
    period: int

    @property
    def cycle(self):
        return self.points[self.preperiod:self.preperiod + self.period]

    @property
    def cycle_pieces(self):
        return self.pieces[self.preperiod:self.preperiod + self.period]


def _norm_side(side):
    if side in ("+", 1, "+1", "right"):
        return "+"
    if side in ("-", -1, "-1", "left"):
        return "-"
    raise ValueError(f"bad side {side!r}")


def side_orbit(system: MarkovSystem, x, side="+", n: int = 200, circle: int = 0) -> SideOrbit:
    """Orbit of x^side with eventual-period detection."""
    side = _norm_side(side)
    c, t = circle, system.snap(circle, x)
    pts, used = [], []
    seen = {}
    for k in range(n + 1):
        i = system.piece_at(c, t, side)
        key = (c, _key(t), i)
        if key in seen:
            pre = seen[key]
            return SideOrbit(pts, used, pre, k - pre)
        seen[key] = k
        pts.append((c, t))
        used.append(i)
        c, t = system.apply(i, t, side)
        t = system.snap(c, t)
    raise NonPeriodicTail("no period found", bound=n, point=angle_str(x), side=side)


def return_derivative(system: MarkovSystem, orbit: SideOrbit) -> float:
    d = 1.0
    for (c, t), i in zip(orbit.cycle, orbit.cycle_pieces):
        d *= system.pieces[i].deriv(t)
    return d


def _moebius_return(system, orbit):
    m = mb.IDENTITY
    for i in orbit.cycle_pieces:
        m = mb.compose(system.pieces[i].m, m)
    return m


def _orbit_lyapunov(system, orb) -> float:
    pcs = [system.pieces[i] for i in orb.cycle_pieces]
    if all(isinstance(p, MoebiusPiece) for p in pcs):
        m = _moebius_return(system, orb)
        if mb.classify(m) in ("parabolic", "identity"):
            return 0.0
    d = return_derivative(system, orb)
    if abs(d - 1.0) < PARABOLIC_TOL:
        return 0.0
    return math.log(d) / orb.period


def lyapunov_exponent(system: MarkovSystem, x, side="+", circle: int = 0, n: int = 200) -> float:
    """Natural-log exponent per step over the periodic tail of x^side."""
    return _orbit_lyapunov(system, side_orbit(system, x, side, n, circle))


def taylor_coefficients(func, z0: complex, radius: float = 1e-2, n: int = 64) -> np.ndarray:
    """Taylor coefficients of func at z0 via the discrete Cauchy integral."""
    w = np.exp(2j * np.pi * np.arange(n) / n)
    vals = np.array([func(z0 + radius * wk) for wk in w])
    c = np.fft.fft(vals) / n
    return c / radius ** np.arange(n)


def tangency_order(func, z0: complex, radius: float = 1e-2, tol: float = 1e-7) -> int:
    """Smallest k >= 2 with a nonzero z^k term in func(z) - z at z0.

    Coefficients are compared after scaling by radius^k, so ``tol`` is
    relative to the size of the sampled disk.
    """
    c = taylor_coefficients(func, z0, radius)
    if abs(c[1] - 1) > 1e-6:
        raise NotParabolic("multiplier is not 1", multiplier=complex(c[1]))
    for k in range(2, 24):
        if abs(c[k]) * radius ** k > tol * radius ** 2 * 1e-3 and abs(c[k]) > tol:
            return k
    raise NotParabolic("return map agrees with the identity to high order")


def multiplicity_from_map(func, z0: complex, radius: float = 1e-2) -> int:
    """Parabolic multiplicity as the number of petals: tangency order minus one."""
    return tangency_order(func, z0, radius) - 1


def _orbit_multiplicity(system, orb) -> int:
    c0, t0 = orb.cycle[0]
    z0 = to_point(t0)
    pcs = [system.pieces[i] for i in orb.cycle_pieces]
    bases = [to_point(t) for _, t in orb.cycle]

    def ret(z):
        for p, b in zip(pcs, bases):
            z = p.holo(z, b)
        return z
    return multiplicity_from_map(ret, z0)


def parabolic_multiplicity(system: MarkovSystem, x, side="+", circle: int = 0, n: int = 200) -> int:
    orb = side_orbit(system, x, side, n, circle)
    if _orbit_lyapunov(system, orb) != 0.0:
        raise NotParabolic("break point side is hyperbolic", point=angle_str(x), side=side)
    return _orbit_multiplicity(system, orb)


@dataclass(frozen=True)
class BreakType:
    kind: str                 # symmetric-hyperbolic | symmetric-parabolic | asymmetric
    lam_plus: float
    lam_minus: float
    n_plus: int | None = None
    n_minus: int | None = None

    @property
    def symmetric(self):
        return self.kind.startswith("symmetric")


def _cycle_key(orb) -> tuple:
    # the periodic tail up to rotation: same cycle, same answer
    items = [(c, _key(t), i) for (c, t), i in zip(orb.cycle, orb.cycle_pieces)]
    k = items.index(min(items))
    return tuple(items[k:] + items[:k])


def _side_data(system, x, side, circle, n, cache):
    """[lambda, orbit, multiplicity] of the periodic tail of x^side.

    Every point met on the way is remembered, so later orbits stop as soon
    as they join a known one.
    """
    memo = cache.setdefault("points", {})
    c, t = circle, system.snap(circle, x)
    path: list = []
    seen: dict = {}
    entry = None
    for k in range(n + 1):
        pk = (c, _key(t), side)
        if pk in memo:
            entry = memo[pk]
            break
        i = system.piece_at(c, t, side)
        key = (c, _key(t), i)
        if key in seen:
            pre = seen[key]
            orb = SideOrbit([p for p, _ in path], [j for _, j in path], pre, k - pre)
            ck = _cycle_key(orb)
            if ck not in cache:
                cache[ck] = [_orbit_lyapunov(system, orb), orb, None]
            entry = cache[ck]
            break
        seen[key] = k
        path.append(((c, t), i))
        c, t = system.apply(i, t, side)
        t = system.snap(c, t)
    if entry is None:
        raise NonPeriodicTail("no period found", bound=n, point=angle_str(x), side=side)
    for (pc, pt), _ in path:
        memo[(pc, _key(pt), side)] = entry
    return entry


def _multiplicity(system, entry) -> int:
    if entry[2] is None:
        entry[2] = _orbit_multiplicity(system, entry[1])
    return entry[2]


def classify_point(system, x, circle=0, n=400, lam_tol=1e-9, cache=None) -> BreakType:
    cache = {} if cache is None else cache
    ep = _side_data(system, x, "+", circle, n, cache)
    em = _side_data(system, x, "-", circle, n, cache)
    lp, lm = ep[0], em[0]
    if lp == 0.0 and lm == 0.0:
        Np, Nm = _multiplicity(system, ep), _multiplicity(system, em)
        kind = "symmetric-parabolic" if Np == Nm else "asymmetric"
        return BreakType(kind, lp, lm, Np, Nm)
    if lp > 0 and lm > 0 and abs(lp - lm) < lam_tol * max(1.0, lp):
        return BreakType("symmetric-hyperbolic", lp, lm)
    return BreakType("asymmetric", lp, lm)


def classify_breakpoints(system: MarkovSystem, n: int = 400) -> dict:
    """Type of every break point, keyed by (circle, angle)."""
    cache: dict = {}
    return {(c, x): classify_point(system, x, c, n, cache=cache) for c, x in system.break_points()}


# ---------------------------------------------------------------- conjugacy

def combinatorially_conjugate(F: MarkovSystem, G: MarkovSystem, seed: Sequence[int] | None = None):
    """Check Def.-style combinatorial conjugacy; returns the arc correspondence."""
    if len(F) != len(G):
        raise CombinatorialMismatch("different numbers of pieces", nF=len(F), nG=len(G))
    seed = list(range(len(F))) if seed is None else list(seed)
    MF, MG = markov_incidence(F), markov_incidence(G)
    for j in range(len(F)):
        if sorted(seed[i] for i in MF[j]) != MG[seed[j]]:
            raise CombinatorialMismatch("Markov matrices differ", piece=j)
    # endpoint dynamics: the image of each arc endpoint must correspond
    for j in range(len(F)):
        a, b = F.arcs[j], G.arcs[seed[j]]
        for side, xa, xb in (("+", a.start, b.start), ("-", a.end, b.end)):
            ia = F.piece_at(*F.apply(j, xa, side), side)
            ib = G.piece_at(*G.apply(seed[j], xb, side), side)
            if seed[ia] != ib:
                raise CombinatorialMismatch("endpoint dynamics disagree", piece=j, side=side)
    return seed


@dataclass
class ConjugacySample:
    """Pull-back conjugacy evaluated on a dyadic grid of the source circle(s).

    ``evaluate`` gives H^depth at any point.  Grid values are stored as lifts so
    that circular diameters of image arcs are plain differences.
    """
    F: MarkovSystem
    G: MarkovSystem
    seed: list
    depth: int
    grid_level: int
    grid: np.ndarray = None       # source angles (circle 0)
    values: np.ndarray = None     # lifted target angles
    breakpairs: list = None

    def evaluate(self, x, circle: int = 0, depth: int | None = None):
        return _pullback_eval(self.F, self.G, self.seed, self.depth if depth is None else depth,
                              circle, x)

    def evaluate_many(self, xs, circle: int = 0, depth: int | None = None) -> np.ndarray:
        d = self.depth if depth is None else depth
        return np.array([float(_pullback_eval(self.F, self.G, self.seed, d, circle, x))
                         for x in xs])

    def lift(self):
        """Lifted H on [0,1] (grid including 1)."""
        return self.grid, self.values

    def interp(self, x):
        """Monotone piecewise-linear interpolation of the lifted sample."""
        x = np.asarray(x, dtype=float)
        k = np.floor(x)
        return np.interp(x - k, self.grid, self.values) + k

    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.values) > 0))

    def residual(self, xs, circle: int = 0) -> float:
        """sup |H(F x) - G(H x)| over the given interior points (circular)."""
        F, G = self.F, self.G
        xs = np.asarray(xs, dtype=float)
        if F.n_circles > 1 or G.n_circles > 1:
            return self._residual_scalar(xs, circle)
        pc = _piece_index(F, xs)
        fx = np.empty_like(xs)
        for i in np.unique(pc):
            fx[pc == i] = _vec_forward(F.pieces[i], xs[pc == i])
        lhs = _pullback_vec(F, G, self.seed, self.depth, fx)
        hx = _pullback_vec(F, G, self.seed, self.depth, xs)
        rhs = np.empty_like(hx)
        for i in np.unique(pc):
            j = self.seed[i]
            rhs[pc == i] = _vec_forward(G.pieces[j], hx[pc == i])
        d = np.abs(lhs - rhs) % 1.0
        return float(np.max(np.minimum(d, 1 - d)))

    def _residual_scalar(self, xs, circle):
        worst = 0.0
        for x in xs:
            i = self.F.piece_at(circle, x, "+")
            c1, fx = self.F.apply(i, x)
            lhs = self.evaluate(fx, c1)
            hx = self.evaluate(x, circle)
            c2, ghx = self.G.apply(self.seed[i], hx)
            worst = max(worst, circ_dist(lhs, ghx))
        return worst

    def to_json(self):
        return {"depth": self.depth, "grid_level": self.grid_level,
                "pairs": [[float(x), float(y) % 1.0] for x, y in zip(self.grid, self.values)],
                "breakpoints": [[angle_str(a), angle_str(b)] for a, b in (self.breakpairs or [])]}


def _arc_linear(a: Arc, b: Arc, x):
    u = a.offset(x, "+")
    if u is None:
        u = a.offset(x, "-")
    return mod1(b.start + u * (b.length / a.length))


def _pullback_eval(F, G, seed, depth, circle, x, side="+"):
    """H^depth(x): follow the F-orbit, seed with the arc-linear map, pull back by G."""
    c, t = circle, F.snap(circle, x)
    trail = []
    y = None
    for k in range(depth + 1):
        i = F.piece_at(c, t, side)
        a, b = F.arcs[i], G.arcs[seed[i]]
        # break points are matched exactly
        if same_angle(t, a.start):
            y = b.start
            break
        if k == depth:
            y = _arc_linear(a, b, t)
            break
        trail.append(i)
        c, t = F.apply(i, t, side)
        t = F.snap(c, t)
    for i in reversed(trail):
        j = seed[i]
        y = G.pieces[j].inverse(y, G.arcs[j], side)
    return y


def _vec_forward(p: PieceMap, xs: np.ndarray) -> np.ndarray:
    if isinstance(p, LinearPiece):
        return (float(p.a) * xs + float(p.b)) % 1.0
    if isinstance(p, MoebiusPiece):
        m = p.m
        z = np.exp(2j * np.pi * xs)
        return (np.angle((m.a * z + m.b) / (m.c * z + m.d)) / TWO_PI) % 1.0
    return np.array([float(p.forward(x)) for x in xs])


def _piece_index(F: MarkovSystem, xs: np.ndarray) -> np.ndarray:
    order = np.argsort([float(a.start) for a in F.arcs])
    starts = np.array([float(F.arcs[i].start) for i in order])
    k = np.searchsorted(starts, xs + 1e-12, side="right") - 1
    return order[k % len(order)]


def _pullback_vec(F, G, seed, depth, xs, tol=1e-12):
    """H^depth on an array of angles (single-circle systems)."""
    xs = np.asarray(xs, dtype=float) % 1.0
    n = len(xs)
    ys = np.full(n, np.nan)
    trail = np.full((depth, n), -1, dtype=int)
    active = np.ones(n, dtype=bool)
    x = xs.copy()
    fstart = np.array([float(a.start) for a in F.arcs])
    flen = np.array([float(a.length) for a in F.arcs])
    gstart = np.array([float(G.arcs[seed[i]].start) for i in range(len(F))])
    glen = np.array([float(G.arcs[seed[i]].length) for i in range(len(F))])
    for k in range(depth + 1):
        idx = np.nonzero(active)[0]
        if len(idx) == 0:
            break
        pc = _piece_index(F, x[idx])
        off = (x[idx] - fstart[pc]) % 1.0
        off = np.where(off > 1 - tol, 0.0, off)
        hit = off < tol
        ys[idx[hit]] = gstart[pc[hit]]
        active[idx[hit]] = False
        rest, pr, orr = idx[~hit], pc[~hit], off[~hit]
        if k == depth:
            ys[rest] = (gstart[pr] + orr * glen[pr] / flen[pr]) % 1.0
            active[rest] = False
            break
        trail[k, rest] = pr
        for i in np.unique(pr):
            sel = rest[pr == i]
            x[sel] = _vec_forward(F.pieces[i], x[sel])
    for k in range(depth - 1, -1, -1):
        col = trail[k]
        for i in np.unique(col[col >= 0]):
            sel = np.nonzero(col == i)[0]
            j = seed[i]
            ys[sel] = _vec_inverse(G.pieces[j], G.arcs[j], ys[sel])
    return ys


def _pullback_grid(F, G, seed, depth, level):
    xs = np.arange(2 ** level) / 2 ** level
    if F.n_circles == 1 and G.n_circles == 1:
        ys = _pullback_vec(F, G, seed, depth, xs)
    else:
        ys = np.array([float(_pullback_eval(F, G, seed, depth, 0, x)) for x in xs])
    return np.append(xs, 1.0), ys


def pullback_conjugacy(F: MarkovSystem, G: MarkovSystem, seed=None, depth: int = 12,
                       grid_level: int | None = None) -> ConjugacySample:
    """Topological conjugacy from F to G by iterated pull-back (single circle grid)."""
    seed = combinatorially_conjugate(F, G, seed)
    if grid_level is None:
        grid_level = depth + 2
    s = ConjugacySample(F, G, seed, depth, grid_level)
    xs, ys = _pullback_grid(F, G, seed, depth, grid_level)
    # lift the values so that they increase by one over the circle
    lifted = np.unwrap(ys * TWO_PI) / TWO_PI
    lifted = lifted - math.floor(lifted[0] + 1e-12)
    lifted = np.append(lifted, lifted[0] + 1.0)
    s.grid, s.values = xs, lifted
    s.breakpairs = [(a.start, G.arcs[seed[i]].start) for i, a in enumerate(F.arcs)]
    return s


def _vec_inverse(p: PieceMap, arc: Arc, ys: np.ndarray) -> np.ndarray:
    if isinstance(p, BranchWordPiece):
        w = np.exp(2j * np.pi * ys)
        for _ in range(p.n):
            w2 = w * w
            w = (3 * w2 + 1) / (w2 + 3)
        for j in range(p.m):
            r = np.sqrt((3 * w - 1) / (3 - w))
            digit = (p.p_src >> j) & 1
            # upper half for digit 0, lower half for digit 1
            flip = (r.imag < 0) if digit == 0 else (r.imag > 0)
            # at the cut w = 1 the roots are +-1; take the arc start
            tie = np.abs(r.imag) < 1e-15
            flip = np.where(tie, (r.real < 0) if digit == 0 else (r.real > 0), flip)
            r = np.where(flip, -r, r)
            w = r
        return (np.angle(w) / TWO_PI) % 1.0
    if isinstance(p, MoebiusPiece):
        m = p.m.inverse()
        z = np.exp(2j * np.pi * ys)
        return (np.angle((m.a * z + m.b) / (m.c * z + m.d)) / TWO_PI) % 1.0
    return np.array([float(p.inverse(y, arc)) for y in ys])


# ---------------------------------------------------------------- distortion

@dataclass(frozen=True)
class DistortionProfile:
    scales: list
    values: list
    alpha: float
    verdict: str

    def normalized(self):
        return [v / math.log(1 / t) for t, v in zip(self.scales, self.values)]


def distortion_at(h: ConjugacySample, t: float) -> float:
    step = 1.0 / 2 ** h.grid_level
    k = t / step
    if k < 1 - 1e-9 or abs(k - round(k)) > 1e-9:
        raise InsufficientDepth("sample grid too coarse for scale", scale=t, grid=step)
    k = int(round(k))
    v = h.values
    # extend periodically so that arcs wrap around the circle
    ext = np.concatenate([v[:-1], v[:-1] + 1.0, [v[0] + 2.0]])
    n = len(v) - 1
    d1 = ext[k:n + k] - ext[0:n]
    d2 = ext[2 * k:n + 2 * k] - ext[k:n + k]
    r = d1 / d2
    return float(np.max(np.maximum(r, 1 / r)))


def distortion_profile(h: ConjugacySample, scales: Sequence[float]) -> DistortionProfile:
    """Max ratio of image diameters of adjacent equal arcs, per scale."""
    vals = [distortion_at(h, t) for t in scales]
    alpha = _growth_exponent(scales, vals)
    if alpha < 0.5:
        verdict = "bounded"
    elif alpha <= 1.5:
        verdict = "logarithmic"
    else:
        verdict = "superlogarithmic"
    return DistortionProfile(list(scales), vals, alpha, verdict)


def _growth_exponent(scales, vals) -> float:
    """Slope of log(profile) against log(log(1/t))."""
    if len(scales) < 2:
        return 0.0
    x = np.log(np.log(1.0 / np.asarray(scales, dtype=float)))
    y = np.log(np.asarray(vals, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


# ---------------------------------------------------------------- extension

def beurling_ahlfors_point(h: ConjugacySample, z: complex, nodes: int = 200) -> complex:
    """Averaging extension of the boundary map, evaluated at z in the disk.

    The lifted boundary map on R is extended to the upper half-plane by the
    classical averaging formula and carried to the disk by w -> exp(2 pi i w).
    """
    z = complex(z)
    if abs(z) >= 1:
        raise ValueError("z must lie in the open disk")
    if z == 0:
        return 0j
    x = cmath.phase(z) / TWO_PI
    y = -math.log(abs(z)) / TWO_PI
    step = 1.0 / 2 ** h.grid_level
    if y < 2 * step:
        raise InsufficientDepth("sample too coarse for this height", height=y, grid=step)
    # Gauss-Legendre on [0,1]; the integrand is piecewise linear so use many nodes
    tq, wq = np.polynomial.legendre.leggauss(nodes)
    tq = 0.5 * (tq + 1)
    wq = 0.5 * wq
    # split [0,1] into panels no wider than the grid spacing relative to y
    panels = max(1, int(math.ceil(y / (step * 8))))
    panels = min(panels, 4096)
    edges = np.linspace(0, 1, panels + 1)
    s = (edges[:-1, None] + (edges[1:] - edges[:-1])[:, None] * tq[None, :]).ravel()
    w = ((edges[1:] - edges[:-1])[:, None] * wq[None, :]).ravel()
    alpha = np.sum(w * h.interp(x + s * y))
    beta = np.sum(w * h.interp(x - s * y))
    u = 0.5 * (alpha + beta)
    v = alpha - beta
    return cmath.exp(2j * math.pi * complex(u, v))


# ---------------------------------------------------------------- examples

def sigma_system(d: int, cuts: Sequence | None = None) -> MarkovSystem:
    """sigma_d on the circle.  Without cuts: one arc [0,0] wrapping d times."""
    if cuts is None:
        return MarkovSystem([Arc(Fraction(0), Fraction(0))], [PowerPiece(d)], name=f"sigma{d}")
    cuts = sorted(Fraction(c) for c in cuts)
    arcs = [Arc(cuts[k], cuts[(k + 1) % len(cuts)]) for k in range(len(cuts))]
    return MarkovSystem(arcs, [PowerPiece(d) for _ in arcs], name=f"sigma{d}")


def rotation_system(p: int = 2) -> MarkovSystem:
    """Rotation by 1/p permuting p equal arcs (an isometry, never expanding)."""
    arcs = [Arc(Fraction(k, p), Fraction(k + 1, p)) for k in range(p)]
    return MarkovSystem(arcs, [LinearPiece(Fraction(1), Fraction(1, p)) for _ in arcs], name="rotation")


def blaschke_system() -> MarkovSystem:
    """The parabolic Blaschke product B on the circle, cut at its preimages of 1."""
    arcs = [Arc(0.0, 0.5), Arc(0.5, 0.0)]
    pieces = [BranchWordPiece(1, 0, 0, 0), BranchWordPiece(1, 1, 0, 0)]
    return MarkovSystem(arcs, pieces, name="blaschke")


def sigma2_halves() -> MarkovSystem:
    return sigma_system(2, [0, Fraction(1, 2)])


def dyadic_to_dadic_system(d: int, e: int):
    """(F, G): F an e-piece linear system with slopes powers of d, G = t -> e t.

    Each piece of F is an arc of length d^-k mapped onto the full circle.  The
    arc lengths are chosen greedily: start from the two halves of a d-adic
    split and keep splitting the largest remaining arc into d equal parts
    until e pieces exist (only possible when e = 1 mod (d-1); otherwise the
    last split uses d-1 extra arcs merged into one).
    """
    if d < 2 or e < 2:
        raise ValueError("need d, e >= 2")
    lengths = _dadic_lengths(d, e)
    arcs, pieces = [], []
    s = Fraction(0)
    for L in lengths:
        arcs.append(Arc(s, s + L))
        a = 1 / L
        pieces.append(LinearPiece(a, mod1(-a * s)))
        s += L
    F = MarkovSystem(arcs, pieces, name=f"dadic({d},{e})")
    G = sigma_system(e, [Fraction(k, e) for k in range(e)])
    return F, G


def _dadic_lengths(d: int, e: int) -> list:
    """Lengths d^-k of e consecutive arcs covering the circle.

    Start from the whole circle and repeatedly split the largest arc into d
    equal parts; ties go to the arc starting closest to 1/2, then the leftmost.
    Each split adds d-1 arcs, so e must be 1 mod (d-1).  Otherwise no such
    partition exists: sum_i d^-k_i = 1 forces e = 1 mod (d-1).
    """
    if (e - 1) % (d - 1) != 0:
        raise ValueError(f"no partition of the circle into {e} arcs of lengths 1/{d}^k")
    lengths = [Fraction(1)]
    half = Fraction(1, 2)
    while len(lengths) < e:
        big = max(lengths)
        starts = [sum(lengths[:k]) for k in range(len(lengths))]
        cands = [k for k, L in enumerate(lengths) if L == big]
        k = min(cands, key=lambda k: (abs(starts[k] - half), starts[k]))
        lengths[k:k + 1] = [big / d] * d
    return lengths


def prop34_system():
    """The 5-piece dyadic-slope system with arcs [0,1/4],[1/4,1/2],[1/2,5/8],[5/8,3/4],[3/4,1]."""
    cuts = [Fraction(0), Fraction(1, 4), Fraction(1, 2), Fraction(5, 8), Fraction(3, 4), Fraction(1)]
    arcs, pieces = [], []
    for s, t in zip(cuts, cuts[1:]):
        L = t - s
        arcs.append(Arc(s, t))
        pieces.append(LinearPiece(1 / L, mod1(-s / L)))
    return MarkovSystem(arcs, pieces, name="prop34")
