from __future__ import annotations

import random
from collections import deque

import pytest
from hypothesis import given, settings, strategies as st

from fragdyn import contact_tree as ct
from fragdyn import fuchsian as fg
from fragdyn.errors import CycleDetected, DepthMismatch


# ---------------------------------------------------------------- oracles

def iso_oracle(T1, T2) -> bool:
    """Ribbon isomorphism by brute force: fix one dart of T1, try every dart of T2.

    A dart pins the whole map, since each neighbor list is then matched up
    by rotation.
    """
    if len(T1) != len(T2) or sorted(T1.colors) != sorted(T2.colors):
        return False
    if len(T1) == 1:
        return T1.colors == T2.colors
    v0 = 0
    u0_first = T1.cyclic[v0][0]
    for w0 in range(len(T2)):
        for k in range(len(T2.cyclic[w0])):
            if _extend(T1, T2, v0, u0_first, w0, T2.cyclic[w0][k]):
                return True
    return False


def _extend(T1, T2, v0, u0, w0, x0) -> bool:
    m = {}
    q = deque([(v0, u0, w0, x0)])
    while q:
        v, u, w, x = q.popleft()
        if v in m:
            if m[v] != w:
                return False
            continue
        if T1.colors[v] != T2.colors[w] or len(T1.cyclic[v]) != len(T2.cyclic[w]):
            return False
        m[v] = w
        a, b = T1.cyclic[v], T2.cyclic[w]
        i, j = a.index(u), b.index(x)
        n = len(a)
        for s in range(n):
            c, d = a[(i + s) % n], b[(j + s) % n]
            if c in m:
                if m[c] != d:
                    return False
                continue
            q.append((c, v, d, w))
    return len(set(m.values())) == len(T1)


def white_bfs_oracle(T):
    """(min even, min odd) white-white distance by BFS from every white vertex."""
    best = {0: None, 1: None}
    whites = [v for v, c in enumerate(T.colors) if c == ct.WHITE]
    for w in whites:
        _, dist = T._bfs(w)
        for u in whites:
            d = dist[u]
            if d > 0 and (best[d % 2] is None or d < best[d % 2]):
                best[d % 2] = d
    return best[0], best[1]


@st.composite
def random_trees(draw, max_n=9):
    n = draw(st.integers(1, max_n))
    parent = [None] + [draw(st.integers(0, i - 1)) for i in range(1, n)]
    nb = [[] for _ in range(n)]
    for v in range(1, n):
        nb[v].append(parent[v])
        nb[parent[v]].append(v)
    rnd = random.Random(draw(st.integers(0, 10 ** 6)))
    for lst in nb:
        rnd.shuffle(lst)
    colors = [draw(st.sampled_from([ct.BLACK, ct.WHITE])) for _ in range(n)]
    return ct.BicoloredRibbonTree(colors, nb, 0, 3)


def shuffled(T, seed):
    perm = list(range(len(T)))
    random.Random(seed).shuffle(perm)
    return T.relabel(perm)


def rotated(T, seed):
    """Same ribbon tree, each neighbor list rotated (cyclic order unchanged)."""
    rnd = random.Random(seed)
    cyc = []
    for nb in T.cyclic:
        k = rnd.randrange(len(nb)) if nb else 0
        cyc.append(nb[k:] + nb[:k])
    return ct.BicoloredRibbonTree(list(T.colors), cyc, T.root, T.depth)


# ---------------------------------------------------------------- examples

def test_genus2_one_curve_all_black():
    T = ct.tree_from_nodal(fg.fig11_nodal(), 6)
    assert set(T.colors) == {ct.BLACK}
    w = ct.white_distance_invariant(T)
    assert w.n_white == 0 and w.min_odd is None and w.parities == ()


def test_single_component():
    T = ct.tree_from_nodal(fg.NodalData(["1,1;inf"], []), 5)
    assert len(T) == 1 and T.colors == [ct.WHITE]


def test_punctured_chain_colors():
    T = ct.tree_from_nodal(fg.chain_nodal(4, punctured=True), 4)
    ends = {k for k, c in zip(T.kinds, T.colors) if c == ct.WHITE}
    assert ends == {0, 3}
    assert {k for k, c in zip(T.kinds, T.colors) if c == ct.BLACK} == {1, 2}


def test_jordan_pair_and_cycle():
    T = ct.tree_from_contact_graph({0: ct.BLACK, 1: ct.BLACK}, {0: [1], 1: [0]}, 1)
    assert len(T) == 2 and T.edges == [(0, 1)]
    with pytest.raises(CycleDetected):
        ct.tree_from_contact_graph({0: ct.BLACK, 1: ct.BLACK, 2: ct.BLACK},
                                   {0: [1, 2], 1: [0, 2], 2: [0, 1]}, 3)
    with pytest.raises(CycleDetected):
        ct.BicoloredRibbonTree([ct.BLACK] * 3, [[1, 2], [0, 2], [0, 1]])


@pytest.mark.parametrize("d", [4, 6])
def test_polynomial_chain_white_ends(d):
    colors, slots = ct.chain_contact_data(d)
    T = ct.tree_from_contact_graph(colors, slots, 2 * d)
    w = ct.white_distance_invariant(T)
    assert w.min_odd == d - 1


@pytest.mark.parametrize("g,expected", [(4, 3), (6, 5)])
def test_chain_tree_min_odd_distance(g, expected):
    T = ct.tree_from_nodal(fg.chain_nodal(g, punctured=True), 12)
    w = ct.white_distance_invariant(T)
    assert w.min_odd == expected and w.certain


def test_distance_invariant_matches_bfs_on_chain():
    T = ct.tree_from_nodal(fg.chain_nodal(4, punctured=True), 7)
    w = ct.white_distance_invariant(T)
    assert (w.min_even, w.min_odd) == white_bfs_oracle(T)


def test_chain_trees_distinguished():
    a = ct.tree_from_nodal(fg.chain_nodal(4, punctured=True), 12)
    b = ct.tree_from_nodal(fg.chain_nodal(6, punctured=True), 12)
    assert not ct.ribbon_isomorphic(a, b)
    assert ct.ribbon_isomorphic(a, a) and ct.ribbon_isomorphic(a, shuffled(a, 1))


def test_color_swap_breaks_isomorphism():
    T = ct.tree_from_nodal(fg.chain_nodal(4, punctured=True), 5)
    assert not ct.ribbon_isomorphic(T, T.swap_colors())


def test_depth_mismatch():
    T = ct.tree_from_nodal(fg.chain_nodal(4, punctured=True), 3)
    U = ct.tree_from_nodal(fg.chain_nodal(4, punctured=True), 4)
    with pytest.raises(DepthMismatch):
        ct.ribbon_isomorphic(T, U)


def test_json_round_trip():
    T = ct.tree_from_nodal(fg.chain_nodal(4, punctured=True), 3)
    U = ct.BicoloredRibbonTree.from_json(T.to_json())
    assert U.colors == T.colors and U.cyclic == T.cyclic and U.depth == T.depth
    assert ct.BicoloredRibbonTree.from_json(__import__("json").loads(T.dumps())).cyclic == T.cyclic


# ---------------------------------------------------------------- properties

@given(random_trees(), random_trees())
@settings(max_examples=150)
def test_isomorphism_matches_oracle(T1, T2):
    assert ct.ribbon_isomorphic(T1, T2) == iso_oracle(T1, T2)


@given(random_trees(), st.integers(0, 1000))
def test_relabeled_and_rotated_copies_isomorphic(T, seed):
    U = rotated(shuffled(T, seed), seed + 1)
    assert ct.ribbon_isomorphic(T, U) and ct.ribbon_isomorphic(U, T)
    assert ct.white_distance_invariant(T) == ct.white_distance_invariant(U)


@given(random_trees(max_n=12))
def test_distance_invariant_matches_bfs(T):
    w = ct.white_distance_invariant(T)
    assert (w.min_even, w.min_odd) == white_bfs_oracle(T)
    assert w.n_white == T.colors.count(ct.WHITE)


@given(random_trees(max_n=7), random_trees(max_n=7), random_trees(max_n=7))
@settings(max_examples=80)
def test_isomorphism_transitive(A, B, C):
    if ct.ribbon_isomorphic(A, B) and ct.ribbon_isomorphic(B, C):
        assert ct.ribbon_isomorphic(A, C)


def test_mirror_image_not_always_isomorphic():
    # a star whose leaves read W W B B W B counterclockwise is chiral
    colors = [ct.BLACK, ct.WHITE, ct.WHITE, ct.BLACK, ct.BLACK, ct.WHITE, ct.BLACK]
    cyc = [[1, 2, 3, 4, 5, 6]] + [[0]] * 6
    T = ct.BicoloredRibbonTree(colors, cyc)
    M = ct.BicoloredRibbonTree(colors, [list(reversed(cyc[0]))] + [[0]] * 6)
    assert ct.ribbon_isomorphic(T, M) == iso_oracle(T, M)
    assert not ct.ribbon_isomorphic(T, M)
