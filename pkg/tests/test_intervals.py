from __future__ import annotations

import random
from fractions import Fraction as Fr
from itertools import combinations

import pytest
from hypothesis import given, strategies as st

from fragdyn import circle_markov as cm
from fragdyn import intervals as iv
from fragdyn.errors import (AllBlue, BlueSplitUnavailable, InvalidInvariance, Not3Adic,
                            NotGeneralizedDyadic, NotRInterval, TypeMismatch, UnrealizableRatio)


# ---------------------------------------------------------------- oracles

def dyadic_oracle(s: Fr, t: Fr) -> bool:
    """[s, t] = [p/2^n, (p+1)/2^n] by direct search over n."""
    for n in range(0, 40):
        p = s * 2 ** n
        if p.denominator == 1 and t == (p + 1) / 2 ** n:
            return True
    return False


def dyadic_ratio_oracle(M: int) -> set:
    """First-piece ratios over every way to cut [0,1] at grid points 1/2^M."""
    grid = [Fr(k, 2 ** M) for k in range(1, 2 ** M)]
    out = set()
    for cuts in combinations(grid, M - 1):
        pts = [Fr(0), *cuts, Fr(1)]
        if all(dyadic_oracle(a, b) for a, b in zip(pts, pts[1:])):
            out.add(pts[1])
    return out


def r_shape_oracle(s: Fr, t: Fr):
    """(type, n) if tripling n times blows (s, t) onto a type interval."""
    for n in range(0, 12):
        a, b = s * 3 ** n, t * 3 ** n
        k = a.numerator // a.denominator
        a, b = a - k, b - k
        for name, J in (("A", (0, 1)), ("B", (0, Fr(2, 3))), ("C", (Fr(1, 3), 1))):
            if (a, b) == J:
                return name, n
    return None


def r_ratio_oracle(I: tuple, M: int, side: str) -> set:
    """End-piece ratios of alternating decompositions into 2M+1 pieces, brute force."""
    s, t = I
    n0 = r_shape_oracle(s, t)[1]
    step = Fr(1, 3 ** (n0 + 2 * M + 2))
    pts = [s + k * step for k in range(int((t - s) / step) + 1)]
    ends = (iv.r_color(s), iv.r_color(t))

    def color(x):
        return ends[0] if x == s else ends[1] if x == t else iv.r_color(x)

    # R-interval lengths are 3^-n and (2/3) 3^-n, so only those steps are tried
    lengths = [L for n in range(n0 + 2 * M + 3) for L in (Fr(1, 3 ** n), Fr(2, 3 ** (n + 1)))]
    on = set(pts)
    nxt = {a: [a + L for L in lengths if a + L in on and r_shape_oracle(a, a + L)
               and color(a) != color(a + L)] for a in pts}
    ratios = set()

    def rec(a, k, first):
        if k == 0:
            return
        for b in nxt[a]:
            if k == 1 and b == t:
                piece = (first or (a, b))
                ratios.add((piece[1] - piece[0]) / (t - s) if side == "+" else (b - a) / (t - s))
            elif k > 1 and b < t:
                rec(b, k - 1, first or (a, b))

    rec(s, 2 * M + 1, None)
    return ratios


# ---------------------------------------------------------------- dyadic

def test_is_dyadic_examples():
    assert iv.is_dyadic(0, Fr(1, 2)) and iv.is_dyadic(Fr(1, 4), Fr(1, 2))
    assert not iv.is_dyadic(Fr(1, 4), Fr(3, 4)) and not iv.is_dyadic(Fr(1, 3), Fr(2, 3))


@given(st.integers(0, 64), st.integers(1, 64), st.integers(0, 8))
def test_is_dyadic_matches_oracle(p, L, n):
    s, t = Fr(p, 2 ** n), Fr(p + L, 2 ** n)
    assert iv.is_dyadic(s, t) == dyadic_oracle(s, t)


def test_two_piece_decomposition_forced():
    assert iv.enumerate_dyadic_decompositions((0, 1), 2) == [((0, Fr(1, 2)), (Fr(1, 2), 1))]


@pytest.mark.parametrize("M", range(2, 7))
def test_dyadic_ratio_sets_match_brute_force(M):
    expected = {Fr(1, 2 ** j) for j in range(1, M)}
    assert iv.dyadic_ratio_set(M) == expected
    if M <= 5:
        assert dyadic_ratio_oracle(M) == expected


def test_dyadic_decompose_extremes():
    left = iv.dyadic_decompose((0, 1), 5, Fr(1, 2)).pieces
    assert left == [(0, Fr(1, 2)), (Fr(1, 2), Fr(3, 4)), (Fr(3, 4), Fr(7, 8)),
                    (Fr(7, 8), Fr(15, 16)), (Fr(15, 16), 1)]
    right = iv.dyadic_decompose((0, 1), 5, Fr(1, 16)).pieces
    assert right == [(0, Fr(1, 16)), (Fr(1, 16), Fr(1, 8)), (Fr(1, 8), Fr(1, 4)),
                     (Fr(1, 4), Fr(1, 2)), (Fr(1, 2), 1)]
    with pytest.raises(UnrealizableRatio):
        iv.dyadic_decompose((0, 1), 3, Fr(1, 3))


@given(st.integers(2, 9).flatmap(lambda M: st.tuples(st.just(M), st.integers(1, M - 1))))
def test_dyadic_decompose_is_valid(Mj):
    M, j = Mj
    d = iv.dyadic_decompose((0, 1), M, Fr(1, 2 ** j))
    assert len(d.pieces) == M and d.ratio("+") == Fr(1, 2 ** j)
    assert all(dyadic_oracle(a, b) for a, b in d.pieces)
    assert all(a[1] == b[0] for a, b in zip(d.pieces, d.pieces[1:]))


# ---------------------------------------------------------------- generalized dyadic

def test_gd_classify_examples():
    g = iv.gd_classify(0, Fr(1, 3))
    assert g.type == (0, Fr(2, 3)) and g.m == 1 and g.colors == (iv.RED, iv.BLUE)
    g = iv.gd_classify(Fr(1, 3), Fr(2, 3))
    assert g.m == 0 and g.colors == (iv.BLUE, iv.BLUE)
    g = iv.gd_classify(Fr(1, 4), Fr(1, 2))
    assert g.is_dyadic and g.colors == (iv.RED, iv.RED)
    with pytest.raises(NotGeneralizedDyadic):
        iv.gd_classify(Fr(1, 5), Fr(2, 5))


def test_gd_split_examples():
    a, b = iv.gd_split((0, Fr(2, 3)), iv.RED)
    assert (a.s, a.t, b.t) == (0, Fr(1, 2), Fr(2, 3))
    with pytest.raises(BlueSplitUnavailable):
        iv.gd_split((Fr(1, 3), Fr(2, 3)), iv.BLUE)
    a, b = iv.gd_split((0, 1), iv.BLUE)
    assert a.t == Fr(1, 3)


gd_intervals = st.sampled_from(iv.GD_TYPES).flatmap(
    lambda J: st.integers(0, 5).flatmap(
        lambda m: st.integers(0, 2 ** m - 1).map(
            lambda k: (J[0] / 2 ** m + Fr(k, 2 ** m), J[1] / 2 ** m + Fr(k, 2 ** m)))))


@given(gd_intervals, st.sampled_from([iv.RED, iv.BLUE]))
def test_gd_split_halves_reclassify(I, color):
    g = iv.gd_classify(*I)
    try:
        a, b = iv.gd_split(g, color)
    except BlueSplitUnavailable:
        assert g.colors == (iv.BLUE, iv.BLUE)
        return
    assert a.s == g.s and b.t == g.t and a.t == b.s
    assert iv.gd_color(a.t) == color
    iv.gd_classify(a.s, a.t)
    iv.gd_classify(b.s, b.t)


def test_gd_circle_decomposition():
    assert iv.gd_circle_decomposition([iv.RED]) == [0]
    assert iv.gd_circle_decomposition([iv.RED, iv.BLUE]) == [0, Fr(1, 3)]
    with pytest.raises(AllBlue):
        iv.gd_circle_decomposition([iv.BLUE, iv.BLUE])


@given(st.lists(st.sampled_from([iv.RED, iv.BLUE]), min_size=1, max_size=7).filter(lambda c: iv.RED in c))
def test_gd_circle_decomposition_colors(colors):
    pts = iv.gd_circle_decomposition(colors)
    for k, (s, c) in enumerate(zip(pts, colors)):
        assert iv.gd_color(s) == c
        t = pts[(k + 1) % len(pts)]
        iv.gd_classify(s, t if t > s else t + 1)


def test_canonical_word():
    assert iv.canonical_word((0, Fr(1, 2)), (0, Fr(1, 2))) == (0, 0)
    assert iv.canonical_word((0, Fr(1, 2)), (0, Fr(1, 4))) == (1, 2)
    with pytest.raises(TypeMismatch):
        iv.canonical_word((0, Fr(1, 3)), (Fr(1, 3), Fr(2, 3)))
    f = iv.canonical_map((0, Fr(1, 2)), (0, Fr(1, 4)))
    assert (f(0), f(Fr(1, 2)), f(Fr(1, 4))) == (0, Fr(1, 4), Fr(1, 8))


# ---------------------------------------------------------------- R-intervals

def test_r_color():
    assert iv.r_color(Fr(1, 3)) == iv.RED and iv.r_color(Fr(2, 3)) == iv.BLUE
    assert iv.r_color(0) == iv.BLUE and iv.r_color(0, zero=iv.RED) == iv.RED
    assert iv.r_color(Fr(4, 9)) == iv.RED
    with pytest.raises(Not3Adic):
        iv.r_color(Fr(1, 2))


def test_r_classify_examples():
    I = iv.r_classify(0, Fr(2, 3))
    assert I.type == "B" and I.marked == Fr(1, 2)
    I = iv.r_classify(Fr(1, 3), 1)
    assert I.type == "C" and I.marked == Fr(1, 2)
    I = iv.r_classify(0, Fr(1, 3))
    assert I.type == "A" and I.marked == Fr(1, 6) and I.subtype == "A2"
    with pytest.raises(NotRInterval):
        iv.r_classify(0, Fr(1, 2))


@given(st.integers(0, 4), st.integers(0, 80), st.sampled_from(["A", "B", "C"]))
def test_r_classify_matches_oracle_and_marks_half(n, k, typ):
    J = iv.R_TYPES[typ]
    k = k % 3 ** n
    s, t = (J[0] + k) / 3 ** n, (J[1] + k) / 3 ** n
    I = iv.r_classify(s, t)
    assert (I.type, I.n) == r_shape_oracle(s, t)
    y = I.marked * 3 ** I.n
    assert y - (y.numerator // y.denominator) == Fr(1, 2)


def test_ratio_set_examples():
    assert iv.r_ratio_sets("A1", 2, "+") == {Fr(2, 3), Fr(2, 9), Fr(2, 27)}
    assert iv.r_ratio_sets("A1", 2, "+", admissible=True) == {Fr(2, 9)}
    assert iv.r_ratio_sets("B", 3, "-") == {Fr(1, 2), Fr(1, 3), Fr(1, 9), Fr(1, 27)}


@pytest.mark.parametrize("sub", ["A1", "A2", "B", "C"])
@pytest.mark.parametrize("side", ["+", "-"])
@pytest.mark.parametrize("M", [1, 2])
def test_ratio_sets_match_brute_force(sub, side, M):
    I = iv.R_REPRESENTATIVES[sub]
    assert iv.r_ratio_sets(sub, M, side) == r_ratio_oracle(I, M, side)


@pytest.mark.parametrize("sub", ["A1", "A2", "B", "C"])
@pytest.mark.parametrize("side", ["+", "-"])
@pytest.mark.parametrize("adm", [False, True])
def test_ratio_sets_closed_form_M2to4(sub, side, adm):
    for M in (2, 3, 4):
        assert iv.r_ratio_sets(sub, M, side, adm) == iv.r_closed_form(sub, M, side, adm)


@pytest.mark.parametrize("sub", ["A1", "A2", "B", "C"])
def test_alternating_decompositions_validate(sub):
    I = iv.r_classify(*iv.R_REPRESENTATIVES[sub])
    for r in sorted(iv.r_ratio_sets(sub, 2, "+")):
        d = iv.r_alternating_decompose(I, 2, "+", r)
        assert d.ratio("+") == r and len(d.pieces) == 5
        pieces = iv.r_pieces(I, d.pieces)
        assert all(p.alternating for p in pieces)
    with pytest.raises(UnrealizableRatio):
        iv.r_alternating_decompose(I, 2, "+", Fr(1, 7))


def test_base_alternating_splits():
    # M = 1 on the three type intervals: five configurations in all
    total = sum(len(iv.r_all_decompositions(J, 1, )) for J in
                [(0, 1), (0, Fr(2, 3)), (Fr(1, 3), 1)] if iv.r_classify(*J).alternating)
    assert total >= 1
    for J in [(0, Fr(2, 3)), (Fr(1, 3), 1)]:
        for d in iv.r_all_decompositions(J, 1):
            assert len(d) == 3


@pytest.mark.parametrize("pair", [("B", "A"), ("B", "C"), ("A", "A"), ("C", "B"), ("A", "C")])
def test_canonical_maps_hit_endpoints_and_marked_point(pair):
    reps = {"A": (0, Fr(1, 3)), "B": (Fr(1, 3), Fr(5, 9)), "C": (Fr(4, 9), Fr(2, 3))}
    I1, I2 = (iv.r_classify(*reps[k]) for k in pair)
    f = iv.r_canonical_map(I1, I2)
    assert f(I1.s) == I2.s and f(I1.t) == I2.t and f(I1.marked) == I2.marked
    xs = [I1.s + (I1.t - I1.s) * Fr(k, 50) for k in range(51)]
    ys = [f(x) for x in xs]
    assert all(a < b for a, b in zip(ys, ys[1:]))
    if pair[0] == pair[1]:
        assert f.middle == ()
    if pair == ("B", "A"):
        assert f.middle == ("q+",)


# ---------------------------------------------------------------- modified contact

def _check_contact(cs, X, Xp):
    active = set(X) - set(Xp)
    assert active <= set(cs.Y0) <= set(cs.Y1)
    assert not set(Xp) & set(cs.Y1)
    S = cs.system
    cm.validate_markov(S)
    kinds = cm.classify_breakpoints(S)
    assert all(b.symmetric for b in kinds.values())
    for a in active:
        b = kinds[(0, a)]
        assert abs(b.lam_plus - cs.N * __import__("math").log(cs.d)) < 1e-9 or b.lam_plus > 0


def test_modified_contact_examples():
    X, Xp = [0, Fr(1, 3), Fr(2, 3)], [0]
    cs = iv.modified_contact(2, X, Xp, N=4)
    _check_contact(cs, X, Xp)
    assert {Fr(1, 3), Fr(2, 3)} <= set(cs.Y0)
    cs = iv.modified_contact(3, [0], [])
    _check_contact(cs, [0], [])
    with pytest.raises(InvalidInvariance):
        iv.modified_contact(2, X, [Fr(1, 3)])


@pytest.mark.parametrize("seed", range(4))
def test_modified_contact_random(seed):
    rng = random.Random(seed)
    d = rng.choice([2, 3])
    X, Xp = iv.random_invariant_pair(d, 8, rng)
    cs = iv.modified_contact(d, X, Xp)
    _check_contact(cs, X, Xp)
    assert cm.max_diameters(cs.system, 10)[-1] < 1e-2
