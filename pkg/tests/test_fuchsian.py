from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fragdyn import circle_markov as cm
from fragdyn import fuchsian as fg
from fragdyn.errors import CompactSignature, DisconnectedNodalData, InvalidRepresentatives

SIGNATURES = {"1,1;inf": 4, "0,3;inf,inf,inf": 4, "0,4;inf,inf,inf,inf": 6,
              "2,5;inf,inf,inf,3,4": 17}


def matrix_of(poly, word) -> np.ndarray:
    """Product of 2x2 matrices, an oracle independent of the Moebius class."""
    out = np.eye(2, dtype=complex)
    for name, e in word:
        a, b, c, d = poly.generators[name]._t()
        M = np.array([[a, b], [c, d]], dtype=complex)
        if e < 0:
            M = np.linalg.inv(M)
        out = out @ np.linalg.matrix_power(M, abs(e))
    return out


@pytest.fixture(scope="module", params=list(SIGNATURES))
def polygon(request):
    return fg.core_polygon(request.param)


def test_signature_parse_and_formula():
    s = fg.Signature.parse("(2,5;inf,inf,inf,3,4)")
    assert (s.g, s.k, s.torsion) == (2, 3, (3, 4))
    assert s.n_vertices == 8 + 4 + 2 + 3
    assert str(s) == "(2,5;inf,inf,inf,3,4)"
    with pytest.raises(ValueError):
        fg.Signature.parse("1,2;inf")


@given(st.integers(0, 3), st.integers(1, 4), st.lists(st.integers(2, 6), max_size=3))
def test_vertex_count_formula(g, k, tors):
    s = fg.Signature(g, (fg.INF_ORDER,) * k + tuple(tors))
    assert s.n_vertices == 4 * g + 2 * (k - 1) + sum(v - 1 for v in tors)


def test_vertex_counts(polygon):
    assert polygon.N == SIGNATURES[str(polygon.signature).strip("()")]


def test_pairing_and_parabolic_certificates(polygon):
    assert polygon.pairing_residual() < 1e-10
    for label, (word, m, err) in polygon.cusp_words().items():
        assert err < 1e-8
        tr = np.trace(matrix_of(polygon, word)) / np.sqrt(np.linalg.det(matrix_of(polygon, word)))
        assert abs(abs(tr.real) - 2) < 1e-7
    assert fg.elliptic_residual(polygon) < 1e-10


def test_bowen_series_markov_and_parabolic(polygon):
    S = fg.bowen_series_system(polygon)
    cm.validate_markov(S)
    kinds = cm.classify_breakpoints(S)
    assert all(t.kind == "symmetric-parabolic" for t in kinds.values())


def test_return_words_primitive_parabolic(polygon):
    for v in range(polygon.N):
        w = fg.return_word(polygon, v, "+")
        if w is None:
            continue
        assert not fg.is_proper_power(w)
        M = matrix_of(polygon, w)
        assert abs(abs(np.trace(M) / np.sqrt(np.linalg.det(M))) - 2) < 1e-7


def test_once_punctured_torus_words():
    p = fg.core_polygon("1,1;inf")
    S = fg.bowen_series_system(p)
    assert S.meta["words"] == ["A0", "B0^-1", "A0^-1", "B0"]


def test_compact_and_non_hyperbolic_rejected():
    with pytest.raises(CompactSignature):
        fg.core_polygon("2,0;")
    with pytest.raises(ValueError):
        fg.core_polygon("0,3;inf,2,2")


def test_word_reduction():
    w = [("A", 1), ("B", 1), ("B", -1), ("A", 1)]
    assert fg.free_reduce(w) == [("A", 1), ("A", 1)]
    assert fg.cyclic_reduce([("A", -1), ("B", 1), ("A", 1)]) == [("B", 1)]
    assert fg.is_proper_power([("A", 1), ("B", 1), ("A", 1), ("B", 1)])
    assert not fg.is_proper_power([("A", 1), ("B", 1)])
    assert fg.free_reduce(w + fg.invert(w)) == []


def test_fig11_pinched_polygon():
    pp = fg.pinched_core_polygon(fg.fig11_nodal())
    assert sorted(pp.polygons) == [0, 1] and all(p.N == 4 for p in pp.polygons.values())
    assert len(pp.contacts) == 1
    bs = fg.basilica_bs_map(pp)
    assert bs.counts() == {"torso": 8, "limb": 6}
    # each image is a union of pieces: the matrix has nonzero columns only
    assert (bs.matrix.sum(axis=0) > 0).all()


def test_limb_stabilizer_freedom():
    pp = fg.pinched_core_polygon(fg.fig11_nodal())
    a, b = fg.basilica_bs_map(pp), fg.basilica_bs_map(pp, limb_twist=1)
    assert (a.matrix == b.matrix).all()
    assert any(x.word != y.word for x, y in zip(a.pieces, b.pieces))


def test_symbolic_expansion_grows():
    bs = fg.basilica_bs_map(fg.pinched_core_polygon(fg.fig11_nodal()))
    counts = fg.symbolic_expansion(bs, 12)
    assert all(b > a for a, b in zip(counts, counts[1:]))


def test_invalid_representatives():
    pp = fg.pinched_core_polygon(fg.fig11_nodal())
    with pytest.raises(InvalidRepresentatives):
        fg.basilica_bs_map(pp, {0: [0, 1]})


def test_induced_systems_classification():
    ind = fg.induced_systems(fg.basilica_bs_map(fg.pinched_core_polygon(fg.fig11_nodal())))
    # compact genus two: every break at infinity is hyperbolic
    assert set(ind.infinity_breaks.values()) == {"symmetric-hyperbolic"}
    for kinds in fg.classify_bounded(ind).values():
        assert all(t.kind == "symmetric-parabolic" for t in kinds.values())
    # a genuine cusp shows up as a parabolic break at infinity
    pp = fg.pinched_core_polygon(fg.chain_nodal(2, punctured=True))
    vals = set(fg.induced_systems(fg.basilica_bs_map(pp)).infinity_breaks.values())
    assert vals == {"symmetric-parabolic", "symmetric-hyperbolic"}


def test_chain_and_parabolic_nodal():
    pp = fg.pinched_core_polygon(fg.chain_nodal(4))
    assert len(pp.polygons) == 4 and len(pp.contacts) == 3
    nd = fg.NodalData(["1,2;inf,inf", "0,3;inf,2,2"], [(0, 1)])
    pp = fg.pinched_core_polygon(nd)
    assert list(pp.polygons) == [0] and list(pp.parabolic.values()) == [1]
    with pytest.raises(DisconnectedNodalData):
        fg.pinched_core_polygon(fg.NodalData(["1,1;inf", "1,1;inf"], []))


def test_bs_target_builds_a_model():
    from fragdyn import puzzles as pz
    bs = fg.basilica_bs_map(fg.pinched_core_polygon(fg.fig11_nodal()))
    T = bs.to_target()
    q = pz.model_from_target(T)
    assert (q.P0.n_torso, q.P0.n_limb) == (8, 6)
