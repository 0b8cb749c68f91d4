from __future__ import annotations

import json
import math
from fractions import Fraction as Fr

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fragdyn import circle_markov as cm
from fragdyn import moebius as mb
from fragdyn.errors import CombinatorialMismatch, InsufficientDepth, NotMarkov, NotParabolic


def sigma5():
    return cm.sigma_system(5, [Fr(k, 5) for k in range(5)])


def base5_oracle(x: Fr) -> Fr:
    """h(x) for the 5-piece dyadic system: read the itinerary as base-5 digits.

    Independent of the library's pull-back: walks the exact orbit of x under
    the affine pieces until it lands on the fixed point 0.
    """
    cuts = [Fr(0), Fr(1, 4), Fr(1, 2), Fr(5, 8), Fr(3, 4), Fr(1)]
    out, scale = Fr(0), Fr(1, 5)
    for _ in range(200):
        if x == 0:
            return out
        i = max(k for k in range(5) if cuts[k] <= x)
        out += i * scale
        scale /= 5
        x = (x - cuts[i]) / (cuts[i + 1] - cuts[i])
        x -= int(x)
    raise AssertionError("orbit did not reach 0")


@pytest.fixture(scope="module")
def prop34_conj():
    return cm.pullback_conjugacy(cm.prop34_system(), sigma5(), depth=12)


# ---------------------------------------------------------------- validate / refine

def test_sigma2_matrix_all_ones():
    assert cm.validate_markov(cm.sigma2_halves()).tolist() == [[1, 1], [1, 1]]


def test_prop34_matrix_and_slopes():
    S = cm.prop34_system()
    assert cm.validate_markov(S).tolist() == [[1] * 5] * 5
    assert [p.a for p in S.pieces] == [4, 4, 8, 8, 4]


def test_not_markov_detected():
    S = cm.MarkovSystem([cm.Arc(Fr(0), Fr(1, 3)), cm.Arc(Fr(1, 3), Fr(0))],
                        [cm.LinearPiece(Fr(2), Fr(0)), cm.LinearPiece(Fr(2), Fr(0))])
    with pytest.raises(NotMarkov):
        cm.validate_markov(S)


def test_refine_counts_and_nesting():
    lv = cm.refine(cm.sigma2_halves(), 2)
    assert len(lv) == 8 and all(r.arc.length == Fr(1, 8) for r in lv)
    assert len(cm.refine(cm.prop34_system(), 1)) == 25
    lv1 = {r.word: r.arc for r in cm.refine(cm.prop34_system(), 1)}
    for r in cm.refine(cm.prop34_system(), 2):
        parent = lv1[r.word[:-1]]
        assert parent.offset(r.arc.start) is not None and parent.offset(r.arc.end, "-") is not None


def test_json_round_trip():
    S = cm.prop34_system()
    T = cm.MarkovSystem.from_json(json.loads(json.dumps(S.to_json())))
    assert cm.validate_markov(T).tolist() == cm.validate_markov(S).tolist()
    assert [a.start for a in T.arcs] == [a.start for a in S.arcs]


def test_markov_rows_match_piece_images():
    # rows from arc inclusion equal rows rebuilt by pushing arcs forward
    for S in (cm.prop34_system(), cm.sigma2_halves(), cm.blaschke_system()):
        M = cm.validate_markov(S)
        for j, (a, p) in enumerate(zip(S.arcs, S.pieces)):
            L = p.image_length(a)
            covered = [i for i, b in enumerate(S.arcs)
                       if float(b.length) <= float(L) + 1e-12 and M[i, j]]
            assert math.isclose(sum(float(S.arcs[i].length) for i in covered), float(L), rel_tol=1e-9) \
                or float(L) > 1


# ---------------------------------------------------------------- expansion

def test_expansion_examples():
    ok, curve = cm.is_topologically_expanding(cm.sigma_system(2), 10, 1e-2)
    assert ok and curve[-1] == 2.0 ** -10
    assert not cm.is_topologically_expanding(cm.rotation_system(), 6, 1e-2)[0]


def test_blaschke_decay_is_polynomial():
    _, curve = cm.is_topologically_expanding(cm.blaschke_system(), 8, 0.1)
    assert all(b < a for a, b in zip(curve, curve[1:]))
    # geometric decay would halve; near the parabolic point it is much slower
    assert curve[-1] / curve[-2] > 0.85


# ---------------------------------------------------------------- orbits

def test_side_orbit_examples():
    o = cm.side_orbit(cm.prop34_system(), Fr(1, 4), "+")
    assert [t for _, t in o.points] == [Fr(1, 4), 0] and (o.preperiod, o.period) == (1, 1)
    o = cm.side_orbit(cm.sigma2_halves(), Fr(1, 3))
    assert {t for _, t in o.cycle} == {Fr(1, 3), Fr(2, 3)} and o.period == 2


def test_lyapunov_examples():
    assert math.isclose(cm.lyapunov_exponent(cm.sigma2_halves(), Fr(0)), math.log(2))
    assert math.isclose(cm.lyapunov_exponent(cm.prop34_system(), Fr(1, 4), "+"), math.log(4))
    assert cm.lyapunov_exponent(cm.blaschke_system(), 0.0, "+") == 0.0


def test_parabolic_multiplicity():
    assert cm.parabolic_multiplicity(cm.blaschke_system(), 0.0, "+") == 2
    assert cm.parabolic_multiplicity(cm.blaschke_system(), 0.0, "-") == 2
    # z + z^3: tangency order 3, two petals
    assert cm.tangency_order(lambda z: z + z ** 3, 0j) == 3
    assert cm.multiplicity_from_map(lambda z: z + z ** 3, 0j) == 2
    with pytest.raises(NotParabolic):
        cm.parabolic_multiplicity(cm.sigma2_halves(), Fr(0), "+")


@given(st.integers(2, 6))
def test_multiplicity_of_z_plus_power(k):
    assert cm.multiplicity_from_map(lambda z: z + z ** k, 0j) == k - 1


def test_classify_breakpoints_examples():
    kinds = {b.kind for b in cm.classify_breakpoints(cm.prop34_system()).values()}
    assert kinds == {"symmetric-hyperbolic"}
    bl = cm.classify_breakpoints(cm.blaschke_system())
    assert all(b.kind == "symmetric-parabolic" and b.n_plus == 2 for b in bl.values())
    mixed = cm.MarkovSystem([cm.Arc(Fr(0), Fr(1, 2)), cm.Arc(Fr(1, 2), Fr(0))],
                            [cm.LinearPiece(Fr(2), Fr(0)), cm.BranchWordPiece(1, 1, 0, 0)])
    b0 = cm.classify_breakpoints(mixed)[(0, Fr(0))]
    assert b0.kind == "asymmetric" and b0.lam_plus > 0 and b0.lam_minus == 0


def test_classification_stable_under_refinement():
    S = cm.prop34_system()
    base = cm.classify_breakpoints(S)
    ref = cm.classify_breakpoints(cm.refined_system(S, 1))
    for key, b in base.items():
        assert ref[key].kind == b.kind


# ---------------------------------------------------------------- conjugacy

def test_identity_conjugacy():
    h = cm.pullback_conjugacy(cm.sigma2_halves(), cm.sigma2_halves(), depth=8)
    xs = np.linspace(0.01, 0.99, 37)
    assert np.allclose(h.evaluate_many(xs), xs)
    assert cm.distortion_profile(h, [2.0 ** -k for k in range(3, 8)]).values == pytest.approx([1] * 5)


def test_mismatch_raises():
    with pytest.raises(CombinatorialMismatch):
        cm.pullback_conjugacy(cm.prop34_system(), cm.sigma2_halves(), depth=4)


@given(st.integers(0, 10).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, 2 ** n - 1))))
def test_prop34_dyadics_map_to_5adics(prop34_conj, nk):
    n, k = nk
    x = Fr(k, 2 ** n)
    y = prop34_conj.evaluate(x)
    assert isinstance(y, Fr)
    d = y.denominator
    while d % 5 == 0:
        d //= 5
    assert d == 1
    assert y == base5_oracle(x)


def test_conjugacy_monotone_and_residual(prop34_conj):
    assert prop34_conj.monotone()
    xs = np.random.default_rng(0).random(2000)
    assert prop34_conj.residual(xs) < 1e-9


def test_sigma2_to_blaschke_monotone():
    h = cm.pullback_conjugacy(cm.sigma2_halves(), cm.blaschke_system(), depth=10)
    assert h.monotone()


def test_distortion_needs_dense_sample():
    h = cm.pullback_conjugacy(cm.sigma2_halves(), cm.sigma2_halves(), depth=4)
    with pytest.raises(InsufficientDepth):
        cm.distortion_at(h, 2.0 ** -12)


def test_beurling_ahlfors_identity_and_rotation():
    h = cm.pullback_conjugacy(cm.sigma2_halves(), cm.sigma2_halves(), depth=10)
    for z in (0j, 0.3 + 0.2j, -0.5j):
        assert abs(cm.beurling_ahlfors_point(h, z) - z) < 1e-6


def test_dyadic_to_dadic_systems():
    F, G = cm.dyadic_to_dadic_system(2, 5)
    assert [p.a for p in F.pieces] == [4, 4, 8, 8, 4]
    F, G = cm.dyadic_to_dadic_system(2, 2)
    assert [p.a for p in F.pieces] == [2, 2]
    F, G = cm.dyadic_to_dadic_system(3, 5)
    assert all(math.log(p.a, 3) == round(math.log(p.a, 3)) for p in F.pieces)
    assert cm.validate_markov(F).tolist() == [[1] * 5] * 5
    with pytest.raises(ValueError):
        cm.dyadic_to_dadic_system(3, 4)


def test_moebius_piece_system_is_exact_images():
    # endpoints of the Bowen-Series refinement are images of level-0 breaks
    from fragdyn.fuchsian import Signature, bowen_series_system, core_polygon
    S = bowen_series_system(core_polygon(Signature.parse("1,1;inf")))
    breaks = [t for _, t in S.break_points()]
    for r in cm.refine(S, 1):
        i = r.word[0]
        p = S.pieces[i]
        img = p.forward(r.arc.start, "+")
        assert min(cm.circ_dist(img, b) for b in breaks) < 1e-9
    assert isinstance(S.pieces[0], cm.MoebiusPiece)
    assert mb.classify(S.pieces[0].m) in ("hyperbolic", "parabolic")
