"""Exact interval combinatorics on R/Z.

Three families of intervals are handled, all with Fraction endpoints:

* dyadic intervals [p/2^n, (p+1)/2^n];
* generalized dyadic intervals, blown up by the doubling map onto one of
  (0,1), (0,2/3), (1/3,2/3), (1/3,1), with red (eventually 0) and blue
  (eventually 1/3 <-> 2/3) endpoints;
* R-intervals, blown up by the tripling map onto (0,1), (0,2/3), (1/3,1),
  carrying a marked point over 1/2.

Also here: decompositions of these intervals with prescribed end ratios, the
canonical maps between them, and the modified contact construction for
sigma_d with a finite invariant set.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .errors import (AllBlue, BlueSplitUnavailable, InvalidInvariance, Not3Adic,
                     NotGeneralizedDyadic, NotRInterval, TypeMismatch, UnrealizableRatio)

RED, BLUE = "red", "blue"
F0, F1 = Fraction(0), Fraction(1)
HALF, THIRD, TWO_THIRDS = Fraction(1, 2), Fraction(1, 3), Fraction(2, 3)


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def _mod1(x: Fraction) -> Fraction:
    return x - math.floor(x)


def _pow_of(n: int, base: int) -> int | None:
    """k with base**k == n, or None."""
    k = 0
    while n % base == 0:
        n //= base
        k += 1
    return k if n == 1 else None


# ---------------------------------------------------------------- dyadic

@dataclass(frozen=True)
class DyadicInterval:
    s: Fraction
    t: Fraction

    @property
    def level(self) -> int:
        return _pow_of((F1 / (self.t - self.s)).numerator, 2)

    @property
    def length(self) -> Fraction:
        return self.t - self.s


def is_dyadic(s, t) -> bool:
    s, t = _frac(s), _frac(t)
    L = t - s
    if L <= 0 or L.numerator != 1:
        return False
    n = _pow_of(L.denominator, 2)
    return n is not None and (s * 2 ** n).denominator == 1


def dyadic(s, t) -> DyadicInterval:
    if not is_dyadic(s, t):
        raise ValueError(f"[{s}, {t}] is not dyadic")
    return DyadicInterval(_frac(s), _frac(t))


def enumerate_dyadic_decompositions(A, M: int) -> list[tuple]:
    """Every way of cutting a dyadic interval into M dyadic pieces.

    A decomposition is a tuple of (s, t) pairs from left to right.  The
    midpoint of a dyadic interval must be a cut point, which makes the
    search a plain recursion on binary trees.
    """
    if M < 1:
        raise ValueError("M must be positive")
    s, t = (A.s, A.t) if isinstance(A, DyadicInterval) else map(_frac, A)

    @lru_cache(maxsize=None)
    def rec(s, t, k):
        if k == 1:
            return [((s, t),)]
        mid = (s + t) / 2
        out = []
        for k1 in range(1, k):
            for left in rec(s, mid, k1):
                for right in rec(mid, t, k - k1):
                    out.append(left + right)
        return out

    return rec(s, t, M)


def dyadic_ratio_set(M: int) -> set:
    return {Fraction(d[0][1] - d[0][0]) for d in enumerate_dyadic_decompositions((F0, F1), M)}


@dataclass
class Decomposition:
    pieces: list
    alternating: bool = False
    admissible: bool = False

    def points(self) -> list:
        return [self.pieces[0][0]] + [p[1] for p in self.pieces]

    def ratio(self, side: str = "+") -> Fraction:
        total = self.pieces[-1][1] - self.pieces[0][0]
        s, t = self.pieces[0] if side == "+" else self.pieces[-1]
        return (t - s) / total


def dyadic_decompose(A, M: int, first_ratio) -> Decomposition:
    """Cut A into M dyadic pieces with |B_1|/|A| = first_ratio.

    With first_ratio = 1/2^j the left half of A is split j-1 more times
    along its left spine and the right half takes the remaining pieces as a
    staircase of halves.
    """
    s, t = (A.s, A.t) if isinstance(A, DyadicInterval) else map(_frac, A)
    r = _frac(first_ratio)
    j = _pow_of(r.denominator, 2) if r.numerator == 1 else None
    if M < 2 or j is None or not 1 <= j <= M - 1:
        raise UnrealizableRatio("ratio not in {1/2^j : j = 1..M-1}",
                                ratio=str(r), M=M)
    L = t - s
    # left spine: [s, s+L/2^j], then doubling pieces up to the midpoint
    pieces = [(s, s + L / 2 ** j)]
    for i in range(j - 1, 0, -1):
        pieces.append((s + L / 2 ** (i + 1), s + L / 2 ** i))
    # right half as a staircase with M - j pieces
    a, rest = s + L / 2, M - j
    for _ in range(rest - 1):
        b = (a + t) / 2
        pieces.append((a, b))
        a = b
    pieces.append((a, t))
    return Decomposition(pieces)


# ---------------------------------------------------------------- generalized dyadic

GD_TYPES = ((F0, F1), (F0, TWO_THIRDS), (THIRD, TWO_THIRDS), (THIRD, F1))


def gd_color(x) -> str:
    """red: eventually 0 under doubling; blue: eventually on {1/3, 2/3}."""
    x = _mod1(_frac(x))
    if _pow_of(x.denominator, 2) is not None:
        return RED
    y = x * 3
    if _pow_of(y.denominator, 2) is not None:
        return BLUE
    raise NotGeneralizedDyadic("point is not an iterated preimage of 0 or 1/3",
                               point=str(x))


@dataclass(frozen=True)
class GDInterval:
    s: Fraction
    t: Fraction
    type: tuple
    m: int
    colors: tuple

    @property
    def is_dyadic(self) -> bool:
        return self.type == (F0, F1)

    def blow_up(self, x) -> Fraction:
        """The linear lift of sigma_2^m, sending [s, t] onto the type interval."""
        return self.type[0] + (x - self.s) * 2 ** self.m

    def pull_back(self, y) -> Fraction:
        return self.s + (y - self.type[0]) / 2 ** self.m


def gd_classify(s, t=None) -> GDInterval:
    if t is None:
        s, t = s
    s, t = _frac(s), _frac(t)
    L = t - s
    if not 0 < L <= 1:
        raise NotGeneralizedDyadic("empty or oversized interval", s=str(s), t=str(t))
    for J in GD_TYPES:
        q = (J[1] - J[0]) / L
        if q.denominator != 1:
            continue
        m = _pow_of(q.numerator, 2)
        if m is None:
            continue
        if _mod1(s * 2 ** m) == J[0]:
            try:
                colors = (gd_color(s), gd_color(t))
            except NotGeneralizedDyadic:
                continue
            return GDInterval(s, t, J, m, colors)
    raise NotGeneralizedDyadic("no doubling iterate blows the interval up to a type interval",
                               s=str(s), t=str(t))


# split points on each type interval: (red choice, blue choice)
_GD_SPLIT = {
    (F0, F1): (HALF, THIRD),
    (F0, TWO_THIRDS): (HALF, THIRD),
    (THIRD, TWO_THIRDS): (HALF, None),
    (THIRD, F1): (HALF, TWO_THIRDS),
}


def gd_split(I, color: str):
    """Cut a generalized dyadic interval at a point of the given color."""
    if not isinstance(I, GDInterval):
        I = gd_classify(*I)
    red, blue = _GD_SPLIT[I.type]
    y = red if color == RED else blue
    if y is None:
        raise BlueSplitUnavailable("both endpoints are blue", s=str(I.s), t=str(I.t))
    x = I.pull_back(y)
    return gd_classify(I.s, x), gd_classify(x, I.t)


def gd_circle_decomposition(colors) -> list:
    """Points s_1..s_N (cyclic order) of the given colors cutting the circle
    into generalized dyadic arcs."""
    colors = list(colors)
    if RED not in colors:
        raise AllBlue("a decomposition needs at least one red point")
    N = len(colors)
    r = colors.index(RED)
    pts = {r: F0}
    last = F0
    for i in range(1, N):
        idx = (r + i) % N
        _, right = gd_split((last, F1), colors[idx])
        last = right.s
        pts[idx] = last
    return [pts[i] for i in range(N)]


def canonical_word(I1, I2) -> tuple:
    """(m, n) so that sigma_2^{-n} o sigma_2^m maps I1 onto I2.

    The exponents are the blow-up levels of the two intervals; identical
    intervals get (0, 0).
    """
    if not isinstance(I1, GDInterval):
        I1 = gd_classify(*I1)
    if not isinstance(I2, GDInterval):
        I2 = gd_classify(*I2)
    if I1.type != I2.type:
        raise TypeMismatch("intervals have different types",
                           type1=[str(x) for x in I1.type], type2=[str(x) for x in I2.type])
    if (I1.s, I1.t) == (I2.s, I2.t):
        return 0, 0
    return I1.m, I2.m


def canonical_map(I1, I2):
    """The map x -> sigma_2^{-n} sigma_2^m x restricted to I1, as an exact function."""
    if not isinstance(I1, GDInterval):
        I1 = gd_classify(*I1)
    if not isinstance(I2, GDInterval):
        I2 = gd_classify(*I2)
    canonical_word(I1, I2)
    return lambda x: I2.pull_back(I1.blow_up(_frac(x)))


# ---------------------------------------------------------------- R-intervals

R_TYPES = {"A": (F0, F1), "B": (F0, TWO_THIRDS), "C": (THIRD, F1)}


def r_color(t, zero: str = BLUE) -> str:
    """Color of a 3-adic rational: red for p = 1 mod 3, blue for p = 2 mod 3."""
    t = _mod1(_frac(t))
    if t == 0:
        return zero
    if _pow_of(t.denominator, 3) is None:
        raise Not3Adic("denominator is not a power of 3", t=str(t))
    return RED if t.numerator % 3 == 1 else BLUE


@dataclass(frozen=True)
class RInterval:
    s: Fraction
    t: Fraction
    type: str
    n: int
    marked: Fraction
    colors: tuple
    subtype: str | None

    @property
    def length(self) -> Fraction:
        return self.t - self.s

    @property
    def alternating(self) -> bool:
        return self.colors[0] != self.colors[1]

    def blow_up(self, x) -> Fraction:
        return R_TYPES[self.type][0] + (x - self.s) * 3 ** self.n

    def pull_back(self, y) -> Fraction:
        return self.s + (y - R_TYPES[self.type][0]) / 3 ** self.n


def _r_shape(s: Fraction, L: Fraction):
    """(type, n) for an interval starting at s of length L, or None."""
    if L <= 0 or L > 1:
        return None
    if L.numerator == 1:
        n = _pow_of(L.denominator, 3)
        if n is not None and (s * 3 ** n).denominator == 1:
            return "A", n
    if L.numerator == 2:
        k = _pow_of(L.denominator, 3)
        if k is not None and k >= 1:
            n = k - 1
            u = _mod1(s * 3 ** n)
            if u == 0:
                return "B", n
            if u == THIRD:
                return "C", n
    return None


def _subtype(typ: str, colors) -> str | None:
    if colors[0] == colors[1]:
        return None
    if typ == "A":
        return "A1" if colors[0] == RED else "A2"
    return typ


def r_classify(s, t=None, zero: str = BLUE, colors=None) -> RInterval:
    """Type, blow-up exponent, marked point and subtype of an R-interval.

    ``colors`` overrides the endpoint colors (used for pulled-back pieces
    whose endpoints inherit the colors of a parent interval).
    """
    if t is None:
        s, t = s
    s, t = _frac(s), _frac(t)
    shape = _r_shape(s, t - s)
    if shape is None:
        raise NotRInterval("no tripling iterate maps the interval onto (0,1), (0,2/3) or (1/3,1)",
                           s=str(s), t=str(t))
    typ, n = shape
    J = R_TYPES[typ]
    marked = s + (HALF - J[0]) / 3 ** n
    if colors is None:
        colors = (r_color(s, zero), r_color(t, zero))
    return RInterval(s, t, typ, n, marked, tuple(colors), _subtype(typ, colors))


# one representative per subtype, with intrinsic endpoint colors
R_REPRESENTATIVES = {
    "A1": (Fraction(1, 9), Fraction(2, 9)),
    "A2": (F0, THIRD),
    "B": (THIRD, Fraction(5, 9)),
    "C": (Fraction(4, 9), TWO_THIRDS),
}


class _RDecomposer:
    """Exhaustive search over alternating decompositions of one R-interval.

    Pieces start at the left end of the remaining interval, so the search is
    a memoized recursion on (left end, pieces left, admissibility owed).
    Levels deeper than ``max_level`` are not explored.  Internally points are
    integers in units of 3^-max_level.
    """

    def __init__(self, I: RInterval, max_level: int, zero: str = BLUE):
        self.I = I
        self.max_level = max_level
        self.zero = zero
        self.scale = 3 ** max_level
        self.S = int(I.s * self.scale)
        self.T = int(I.t * self.scale)
        self.marked = int(I.marked * 2 * self.scale)  # doubled: marked points are half-units
        self._memo = {}
        self._cand = {}

    def color(self, x: int) -> str:
        if x == self.S:
            return self.I.colors[0]
        if x == self.T:
            return self.I.colors[1]
        if x % self.scale == 0:
            return self.zero
        while x % 3 == 0:
            x //= 3
        return RED if x % 3 == 1 else BLUE

    def candidates(self, a: int):
        """Alternating R-intervals [a, b] inside I as (b, type, doubled marked point)."""
        if a in self._cand:
            return self._cand[a]
        out = []
        ca = self.color(a)
        for n in range(self.max_level, self.I.n - 1, -1):
            unit = 3 ** (self.max_level - n)
            r = a % unit
            if r == 0:
                opts = [("B", 2 * unit // 3, a * 2 + unit), ("A", unit, a * 2 + unit)] if unit > 1 \
                    else [("A", unit, a * 2 + unit)]
            elif 3 * r == unit:
                opts = [("C", 2 * unit // 3, a * 2 + unit // 3)]
            else:
                continue
            for typ, L, mk in opts:
                b = a + L
                if b > self.T or self.color(b) == ca:
                    continue
                out.append((b, typ, mk))
        self._cand[a] = out
        return out

    def _good(self, typ, marked) -> bool:
        return typ == self.I.type and marked == self.marked

    def last_lengths(self, a: int, k: int, owe: bool) -> frozenset:
        """Possible lengths of the final piece when [a, T] is cut into k pieces."""
        key = (a, k, owe)
        if key in self._memo:
            return self._memo[key]
        res = set()
        T = self.T
        for b, typ, marked in self.candidates(a):
            still = owe and not (typ == self.I.type and marked == self.marked)
            if k == 1:
                if b == T and not still:
                    res.add(b - a)
            elif b < T:
                res |= self.last_lengths(b, k - 1, still)
        out = frozenset(res)
        self._memo[key] = out
        return out

    def first_lengths(self, k: int, owe: bool) -> set:
        res = set()
        for b, typ, marked in self.candidates(self.S):
            still = owe and not self._good(typ, marked)
            if k == 1:
                if b == self.T and not still:
                    res.add(b - self.S)
            elif b < self.T and self.last_lengths(b, k - 1, still):
                res.add(b - self.S)
        return res

    def to_frac(self, x: int) -> Fraction:
        return Fraction(x, self.scale)

    def build(self, k: int, side: str, target: Fraction, owe: bool):
        """A decomposition realizing the target end length, or None."""
        T = self.T
        want = int(target * self.scale)

        def rec(a, k, owe, want_last, want_first):
            for b, typ, marked in self.candidates(a):
                if want_first is not None and b - a != want_first:
                    continue
                still = owe and not self._good(typ, marked)
                if k == 1:
                    if b == T and not still and (want_last is None or b - a == want_last):
                        return [(a, b)]
                    continue
                if b >= T:
                    continue
                ls = self.last_lengths(b, k - 1, still)
                if not ls or (want_last is not None and want_last not in ls):
                    continue
                tail = rec(b, k - 1, still, want_last, None)
                if tail is not None:
                    return [(a, b)] + tail
            return None

        if side == "+":
            got = rec(self.S, k, owe, None, want)
        else:
            got = rec(self.S, k, owe, want, None)
        if got is None:
            return None
        return [(self.to_frac(a), self.to_frac(b)) for a, b in got]


def _as_rinterval(I, zero=BLUE) -> RInterval:
    if isinstance(I, RInterval):
        return I
    if isinstance(I, str):
        return r_classify(*R_REPRESENTATIVES[I], zero=zero)
    return r_classify(*I, zero=zero)


def r_ratio_set(I, M: int, side: str = "+", admissible: bool = False,
                extra_levels: int | None = None) -> set:
    """The set of end ratios |J_1|/|I| (side '+') or |J_{2M+1}|/|I| (side '-')
    over alternating decompositions of I into 2M+1 pieces."""
    I = _as_rinterval(I)
    if not I.alternating:
        raise NotRInterval("interval is not alternating", s=str(I.s), t=str(I.t))
    depth = I.n + (2 * M + 2 if extra_levels is None else extra_levels)
    D = _RDecomposer(I, depth)
    k = 2 * M + 1
    if side == "+":
        lens = D.first_lengths(k, admissible)
    else:
        lens = D.last_lengths(D.S, k, admissible)
    return {Fraction(L, D.T - D.S) for L in lens}


def r_ratio_sets(subtype: str, M: int, side: str = "+", admissible: bool = False) -> set:
    """Ratio sets for a subtype, computed on its representative interval."""
    return r_ratio_set(subtype, M, side, admissible)


def r_closed_form(subtype: str, M: int, side: str, admissible: bool) -> set:
    """The expected ratio sets, written out for M >= 2."""
    geo3 = {Fraction(1, 3 ** j) for j in range(1, M + 1)}
    if subtype == "A1":
        full = {Fraction(2, 3 ** j) for j in range(1, M + 2)}
        return full - {TWO_THIRDS, Fraction(2, 3 ** (M + 1))} if admissible else full
    if subtype == "A2":
        return set(geo3)
    half_side = "-" if subtype == "B" else "+"
    if side == half_side:
        full = geo3 | {HALF}
        return full - {HALF, THIRD} if admissible else full
    return geo3 - {Fraction(1, 3 ** M)} if admissible else set(geo3)


def r_alternating_decompose(I, M: int, side: str, target_ratio, admissible: bool = False,
                            zero: str = BLUE) -> Decomposition:
    I = _as_rinterval(I, zero)
    target = _frac(target_ratio) * I.length
    D = _RDecomposer(I, I.n + 2 * M + 2, zero)
    pieces = D.build(2 * M + 1, side, target, admissible)
    if pieces is None:
        raise UnrealizableRatio("no alternating decomposition realizes the ratio",
                                ratio=str(target_ratio), M=M, side=side)
    adm = any(r.type == I.type and r.marked == I.marked for r in r_pieces(I, pieces, zero))
    return Decomposition(pieces, alternating=True, admissible=adm)


def r_pieces(I: RInterval, pieces, zero: str = BLUE) -> list:
    """Classify the pieces of a decomposition, with the parent's endpoint colors."""
    out = []
    for s, t in pieces:
        cs = I.colors[0] if s == I.s else r_color(s, zero)
        ct = I.colors[1] if t == I.t else r_color(t, zero)
        out.append(r_classify(s, t, zero, colors=(cs, ct)))
    return out


def r_all_decompositions(I, M: int, zero: str = BLUE) -> list:
    """Every alternating decomposition into 2M+1 pieces (small M only)."""
    I = _as_rinterval(I, zero)
    D = _RDecomposer(I, I.n + 2 * M + 2, zero)
    out = []

    def rec(a, k, acc):
        for b, _, _ in D.candidates(a):
            piece = (D.to_frac(a), D.to_frac(b))
            if k == 1:
                if b == D.T:
                    out.append(acc + [piece])
            elif b < D.T and D.last_lengths(b, k - 1, False):
                rec(b, k - 1, acc + [piece])

    rec(D.S, 2 * M + 1, [])
    return out


# -- canonical maps between R-intervals

def q_plus(x: Fraction) -> Fraction:
    return x if x <= HALF else 3 * x - 1


def q_plus_inv(y: Fraction) -> Fraction:
    return y if y <= HALF else (y + 1) / 3


def q_minus(x: Fraction) -> Fraction:
    return 3 * x - 1 if x <= HALF else x


def q_minus_inv(y: Fraction) -> Fraction:
    return (y + 1) / 3 if y <= HALF else y


_MIDDLE = {
    ("A", "A"): ((), ()), ("B", "B"): ((), ()), ("C", "C"): ((), ()),
    ("B", "A"): (("q+",), (q_plus,)),
    ("C", "A"): (("q-",), (q_minus,)),
    ("B", "C"): (("q+", "q-^-1"), (q_plus, q_minus_inv)),
    ("A", "B"): (("q+^-1",), (q_plus_inv,)),
    ("A", "C"): (("q-^-1",), (q_minus_inv,)),
    ("C", "B"): (("q-", "q+^-1"), (q_minus, q_plus_inv)),
}


@dataclass(frozen=True)
class CanonicalMap:
    """sigma_3^{-n} o (middle word) o sigma_3^m from I1 onto I2."""
    I1: RInterval
    I2: RInterval
    m: int
    n: int
    middle: tuple = field(default=())

    @property
    def word(self) -> str:
        parts = [f"s^-{self.n}"] + list(reversed(self.middle)) + [f"s^{self.m}"]
        return " o ".join(parts)

    def __call__(self, x):
        y = self.I1.blow_up(_frac(x))
        for f in _MIDDLE[(self.I1.type, self.I2.type)][1]:
            y = f(y)
        return self.I2.pull_back(y)

    def to_json(self):
        return {"m": self.m, "n": self.n, "middle": list(self.middle), "word": self.word}


def r_canonical_map(I1, I2) -> CanonicalMap:
    I1, I2 = _as_rinterval(I1), _as_rinterval(I2)
    names, _ = _MIDDLE[(I1.type, I2.type)]
    return CanonicalMap(I1, I2, I1.n, I2.n, names)


# ---------------------------------------------------------------- modified contact

def _orbit_data(d: int, x: Fraction):
    """(preperiod, period) of a rational under t -> d t."""
    seen = {}
    y, i = _mod1(x), 0
    while y not in seen:
        seen[y] = i
        y = _mod1(d * y)
        i += 1
    return seen[y], i - seen[y]


def _check_invariant(d, X, name):
    for x in X:
        if _mod1(d * x) not in X:
            raise InvalidInvariance(f"{name} is not invariant under sigma_d",
                                    point=str(x), image=str(_mod1(d * x)))


@dataclass
class ContactSystem:
    Y0: list
    Y1: list
    system: object
    N: int
    k: int
    d: int


def _nearest_preimage(d: int, a: Fraction, J: int, side: str) -> Fraction:
    """The point of sigma_d^{-J}(a), other than a, closest to a on the given side."""
    step = Fraction(1, d ** J)
    base = _mod1(a / d ** J)          # preimages are base + i*step
    # offset of a within the lattice
    i0 = math.floor((a - base) / step)
    if side == "+":
        i = i0 + 1
        b = base + i * step
        if _mod1(b) == a:
            b += step
    else:
        i = i0
        b = base + i * step
        if _mod1(b) == a:
            b -= step
    return _mod1(b)


def _forward_closure(d: int, pts, X: set) -> set:
    out = set()
    for y in pts:
        while y not in X and y not in out:
            out.add(y)
            y = _mod1(d * y)
    return out


def _arcs_of(points):
    pts = sorted(points)
    return [(pts[i], pts[(i + 1) % len(pts)]) for i in range(len(pts))]


def _arc_len(s, t):
    L = _mod1(t - s)
    return L if L != 0 else F1


def modified_contact(d: int, X, Xp=(), k: int | None = None, N: int | None = None,
                     max_depth: int = 24) -> ContactSystem:
    """A Markov map for sigma_d whose breakpoints avoid the invariant subset Xp.

    Y0 contains X - Xp, and each point a of X - Xp gets two close neighbours
    b with sigma_d^J(b) = a, close enough that no point of Xp lies between.  Arcs ending at such an a are mapped by
    t -> a + d^N (t - a), which fixes a and wraps the arc a whole number of
    times around the circle; every other arc is mapped by sigma_d.
    """
    from .circle_markov import Arc, LinearPiece, MarkovSystem, refine

    if d < 2:
        raise ValueError("degree must be at least 2")
    X = {_mod1(_frac(x)) for x in X}
    Xp = {_mod1(_frac(x)) for x in Xp}
    if not X:
        raise InvalidInvariance("X is empty")
    _check_invariant(d, X, "X")
    _check_invariant(d, Xp, "X'")
    if not Xp < X:
        raise InvalidInvariance("X' must be a proper subset of X")
    active = X - Xp
    data = {x: _orbit_data(d, x) for x in X}
    L = 1
    for pre, per in data.values():
        L = L * per // math.gcd(L, per)
    max_pre = max(pre for pre, _ in data.values())

    # filler: coarse preimages of X - X' so that every free arc is short
    def build(J, K):
        nb = {}
        for a in active:
            nb[a] = (_nearest_preimage(d, a, J, "-"), _nearest_preimage(d, a, J, "+"))
        pts = set(active)
        for lo, hi in nb.values():
            pts |= _forward_closure(d, [lo, hi], X)
        if K:
            fill = set()
            for a in active:
                for i in range(d ** K):
                    y = _mod1((a + i) / d ** K)
                    if y not in Xp:
                        fill.add(y)
            pts |= _forward_closure(d, fill, X) | (fill & active)
        return nb, pts

    def inside(x, s, t):
        return 0 < _mod1(x - s) < _arc_len(s, t)

    def ok(nb, pts):
        pset = sorted(pts)
        for a, (lo, hi) in nb.items():
            # an X' point on an expanded arc would be sent onto Y0
            if any(inside(x, lo, a) or inside(x, a, hi) for x in Xp):
                return False
            for s, t in _arcs_of(pset):
                if s == a and t != hi:
                    return False
                if t == a and s != lo:
                    return False
        for s, t in _arcs_of(pset):
            if s in active and t in active:
                return False
            if s not in active and t not in active and _arc_len(s, t) > Fraction(1, d):
                return False
        return True

    chosen = None
    for K in range(0, max_depth):
        for J in range(L, max_depth + 1, L):
            if J < K:
                continue
            nb, pts = build(J, K)
            if ok(nb, pts):
                chosen = (J, K, nb, pts)
                break
        if chosen:
            break
    if chosen is None:
        raise ValueError("no admissible partition within the depth budget")
    J, K, nb, pts = chosen
    depth = max(J, K)
    if k is not None and depth > k:
        raise ValueError(f"need preimage depth {depth}, got k={k}")
    need = J + max_pre
    if N is None:
        N = L * max(1, -(-max(need, depth + 1) // L))
    if N % L or N < need:
        raise ValueError(f"N must be a multiple of {L} and at least {need}")

    Y0 = sorted(pts)
    arcs, pieces = [], []
    for s, t in _arcs_of(Y0):
        arcs.append(Arc(s, t))
        if s in active or t in active:
            a = s if s in active else t
            pieces.append(LinearPiece(Fraction(d ** N), a - d ** N * a))
        else:
            pieces.append(LinearPiece(Fraction(d), F0))
    system = MarkovSystem(arcs, pieces, name=f"contact(d={d},N={N})",
                          meta={"d": d, "N": N, "J": J, "K": K})
    Y1 = sorted({ra.arc.start for ra in refine(system, 1)})
    return ContactSystem(Y0, Y1, system, N, depth, d)


def random_invariant_pair(d: int, max_size: int = 8, rng=None):
    """A random finite sigma_d-invariant set X and a proper invariant subset."""
    rng = rng or random.Random()
    while True:
        per = rng.randint(1, 3)
        u = rng.randrange(0, d ** per - 1)
        p = Fraction(u, d ** per - 1)
        X = set()
        y = p
        for _ in range(per):
            X.add(y)
            y = _mod1(d * y)
        # a few strict preimages hanging off the cycle
        for _ in range(rng.randint(0, 3)):
            base = rng.choice(sorted(X))
            cand = _mod1((base + rng.randrange(d)) / d)
            if cand not in X and len(X) < max_size:
                X.add(cand)
        if len(X) > max_size or len(X) < 2:
            continue
        # X' = forward orbit of a random point, when proper
        x0 = rng.choice(sorted(X))
        Xp = _forward_closure(d, [x0], set()) if rng.random() < 0.7 else set()
        Xp = {y for y in Xp}
        if Xp < X:
            return sorted(X), sorted(Xp)
