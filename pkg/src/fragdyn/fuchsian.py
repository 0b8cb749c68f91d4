"""Core polygons of cusped Fuchsian groups and their Bowen-Series maps.

A signature ``(g, n; v_1..v_n)`` with the infinite orders first determines an
ideal polygon whose sides are paired by handle generators A_i, B_i, puncture
generators P_i and elliptic rotations R_i.  Vertices start at roots of unity;
the free twist of each pairing is fixed by Gauss-Newton so that every cusp
word is parabolic.

The second half of the module works symbolically: nodal data (a graph of
cusped surfaces glued at nodes) gives a pinched polygon, a Basilica
Bowen-Series map on its level-0 pieces, and the induced boundary systems.
"""
from __future__ import annotations

import cmath
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import moebius as mb
from .circle_markov import (Arc, MarkovSystem, MoebiusPiece, classify_breakpoints,
                            to_angle)
from .errors import (CompactSignature, DisconnectedNodalData, InvalidRepresentatives,
                     NotMarkov, SolverDiverged)

INF_ORDER = math.inf
TRACE_TOL = 1e-12


# ---------------------------------------------------------------- signatures

@dataclass(frozen=True)
class Signature:
    g: int
    orders: tuple = ()

    def __post_init__(self):
        orders = tuple(INF_ORDER if (o is None or o == math.inf or o == 0) else int(o)
                       for o in self.orders)
        if any(o != INF_ORDER and o < 2 for o in orders):
            raise ValueError("finite orders must be >= 2")
        k = sum(o == INF_ORDER for o in orders)
        if orders[:k] != (INF_ORDER,) * k:
            raise ValueError("infinite orders must come first")
        object.__setattr__(self, "orders", orders)

    @property
    def hyperbolic(self) -> bool:
        return self.chi < 0

    @property
    def n(self) -> int:
        return len(self.orders)

    @property
    def k(self) -> int:
        return sum(o == INF_ORDER for o in self.orders)

    @property
    def torsion(self) -> tuple:
        return self.orders[self.k:]

    @property
    def chi(self) -> float:
        return 2 - 2 * self.g - self.n + sum(1.0 / o for o in self.orders if o != INF_ORDER)

    @property
    def n_vertices(self) -> int:
        return 4 * self.g + 2 * (self.k - 1) + sum(v - 1 for v in self.torsion)

    @classmethod
    def parse(cls, s: str) -> "Signature":
        """'g,n;v1,...,vn' with 'inf' (or the infinity sign) for cusps."""
        s = s.strip().strip("()")
        head, _, tail = s.partition(";")
        g, n = (int(x) for x in head.split(","))
        orders = []
        for tok in filter(None, (t.strip() for t in tail.split(","))):
            orders.append(INF_ORDER if tok.lower() in ("inf", "oo", "∞") else int(tok))
        if len(orders) != n:
            raise ValueError(f"expected {n} orders, got {len(orders)}")
        return cls(g, tuple(orders))

    def __str__(self):
        vs = ",".join("inf" if o == INF_ORDER else str(o) for o in self.orders)
        return f"({self.g},{self.n};{vs})"


# ---------------------------------------------------------------- words

def word_str(word) -> str:
    return " ".join(name if e == 1 else f"{name}^{e}" for name, e in word) or "id"


def _letters(word):
    out = []
    for name, e in word:
        out.extend([(name, 1 if e > 0 else -1)] * abs(e))
    return out


def free_reduce(word) -> list:
    out: list = []
    for name, e in _letters(word):
        if out and out[-1] == (name, -e):
            out.pop()
        else:
            out.append((name, e))
    return out


def cyclic_reduce(word) -> list:
    w = free_reduce(word)
    while len(w) > 1 and w[0] == (w[-1][0], -w[-1][1]):
        w = w[1:-1]
    return w


def is_proper_power(word) -> bool:
    """Whether the cyclically reduced word is u^k for some k >= 2.

    Letters of finite order make this only a sufficient test of
    primitivity; the cusp words it is used on contain no elliptics.
    """
    w = cyclic_reduce(word)
    n = len(w)
    for p in range(1, n):
        if n % p == 0 and w == w[p:] + w[:p]:
            return True
    return False


def invert(word) -> list:
    return [(name, -e) for name, e in reversed(word)]


# ---------------------------------------------------------------- polygons

def _ccw_mid(p: complex, q: complex) -> complex:
    a, b = cmath.phase(p), cmath.phase(q)
    d = (b - a) % (2 * math.pi)
    return cmath.exp(1j * (a + d / 2))


def _pairing(p1, p2, q1, q2, twist: float) -> mb.Moebius:
    """Disk automorphism with p1 -> q1, p2 -> q2, translated by ``twist`` along the target."""
    Sp = mb.three_point_map(-1, -1j, 1, p1, _ccw_mid(p1, p2), p2)
    Sq = mb.three_point_map(-1, -1j, 1, q1, _ccw_mid(q1, q2), q2)
    c, s = math.cosh(twist / 2), math.sinh(twist / 2)
    return Sq @ mb.Moebius(c, s, s, c) @ Sp.inverse()


def _rotation_center(x: complex, y: complex, nu: int) -> complex:
    """Center c of the order-nu rotation that carries y to x, counterclockwise.

    c lies on the diameter through the midpoint of the arc from x to y, at the
    spot where that arc has harmonic measure (nu - 1) / nu.
    """
    m = _ccw_mid(x, y)
    target = (nu - 1) / nu

    def measure(r):
        c = r * m
        phi = mb.disk_automorphism(1, c)
        return ((cmath.phase(phi(y)) - cmath.phase(phi(x))) % (2 * math.pi)) / (2 * math.pi)

    lo, hi = -1 + 1e-15, 1 - 1e-15
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if measure(mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-16:
            break
    return 0.5 * (lo + hi) * m


def _elliptic(c: complex, nu: int) -> mb.Moebius:
    phi = mb.disk_automorphism(1, c)
    return phi.inverse() @ mb.rotation(2 * math.pi / nu) @ phi


@dataclass
class _Layout:
    """Combinatorics of the polygon: which generator acts on which side."""
    sig: Signature
    N: int
    edge_words: list           # word per edge, standard notation
    start_img: list            # image vertex of the edge's start
    end_img: list              # image vertex of the edge's end
    pairings: list             # (name, (i1, i2), (j1, j2)) side pairings
    blocks: list               # (name, first vertex, nu) elliptic blocks


def _layout(sig: Signature) -> _Layout:
    g, k, N = sig.g, sig.k, sig.n_vertices
    words = [None] * N
    s_img = [None] * N
    e_img = [None] * N
    pairings = []
    for i in range(g):
        a0, a1, a2, a3, a4 = (4 * i + j for j in range(5))
        A, B = f"A{i}", f"B{i}"
        pairings.append((A, (a0, a1), (a3, a2)))
        pairings.append((B, (a3, a4 % N), (a2, a1)))
        words[a0], s_img[a0], e_img[a0] = [(A, 1)], a3, a2
        words[a1], s_img[a1], e_img[a1] = [(B, -1)], a4 % N, a3
        words[a2], s_img[a2], e_img[a2] = [(A, -1)], a1, a0
        words[a3], s_img[a3], e_img[a3] = [(B, 1)], a2, a1
    top = 4 * g + 2 * (k - 1)
    for i in range(k - 1):
        e, f = 4 * g + i, top - i - 1
        P = f"P{i}"
        pairings.append((P, (e, (e + 1) % N), ((top - i) % N, f % N)))
        words[e], s_img[e], e_img[e] = [(P, 1)], (top - i) % N, f % N
        words[f], s_img[f], e_img[f] = [(P, -1)], (e + 1) % N, e
    blocks = []
    base = top
    for i, nu in enumerate(sig.torsion):
        R = f"R{i}"
        blocks.append((R, base, nu))
        for j in range(nu - 1):
            e = (base + j) % N
            words[e] = [(R, nu - 1 - j)]
            s_img[e], e_img[e] = (base + nu - 1) % N, base % N
        base += nu - 1
    assert all(w is not None for w in words), "layout does not cover every side"
    return _Layout(sig, N, words, s_img, e_img, pairings, blocks)


def vertex_cycles(lay: _Layout) -> list:
    """Periodic vertex orbits on each side: (side, vertices, edges used)."""
    out = []
    for side in ("+", "-"):
        step = {}
        for v in range(lay.N):
            e = v if side == "+" else (v - 1) % lay.N
            step[v] = (e, lay.start_img[e] if side == "+" else lay.end_img[e])
        done = set()
        for v0 in range(lay.N):
            path, v = [], v0
            while v not in path and v not in done:
                path.append(v)
                v = step[v][1]
            if v in path and v not in done:
                cyc = path[path.index(v):]
                k = cyc.index(min(cyc))
                cyc = cyc[k:] + cyc[:k]
                out.append((side, tuple(cyc), tuple(step[u][0] for u in cyc)))
            done.update(path)
    return out


def cusp_classes(lay: _Layout) -> list:
    """Vertex orbits under the side pairings, each sorted, ordered by least vertex."""
    parent = list(range(lay.N))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    for _, (i1, i2), (j1, j2) in lay.pairings:
        union(i1, j1)
        union(i2, j2)
    for _, base, nu in lay.blocks:
        for j in range(nu):
            union((base + j) % lay.N, (base + (j + 1) % nu) % lay.N)
    groups: dict = {}
    for v in range(lay.N):
        groups.setdefault(find(v), []).append(v)
    return sorted(groups.values())


@dataclass
class CorePolygon:
    signature: Signature
    angles: list          # vertex positions in turns
    generators: dict      # name -> Moebius
    twists: dict
    layout: _Layout = field(repr=False)
    residual: float = 0.0
    iterations: int = 0

    @property
    def N(self) -> int:
        return len(self.angles)

    @property
    def vertices(self) -> list:
        return [cmath.exp(2j * math.pi * a) for a in self.angles]

    def evaluate(self, word) -> mb.Moebius:
        m = mb.IDENTITY
        for name, e in word:
            m = m @ self.generators[name].power(e)
        return m

    def edge_map(self, e: int) -> mb.Moebius:
        return self.evaluate(self.layout.edge_words[e])

    def cusp_words(self) -> dict:
        return cusp_words(self)

    def pairing_residual(self) -> float:
        vs = self.vertices
        err = 0.0
        for name, (i1, i2), (j1, j2) in self.layout.pairings:
            m = self.generators[name]
            err = max(err, abs(m(vs[i1]) - vs[j1]), abs(m(vs[i2]) - vs[j2]))
        for name, base, nu in self.layout.blocks:
            m = self.generators[name]
            for j in range(nu):
                a, b = (base + j) % self.N, (base + (j + 1) % nu) % self.N
                err = max(err, abs(m(vs[a]) - vs[b]))
        return err

    def to_json(self) -> dict:
        return {"signature": str(self.signature), "angles": list(self.angles),
                "twists": dict(self.twists),
                "generators": {k: m.to_json() for k, m in self.generators.items()},
                "residual": self.residual}


def _realize(lay: _Layout, free_angles: np.ndarray, twists: np.ndarray):
    N = lay.N
    inner = {(base + j) % N for _, base, nu in lay.blocks for j in range(1, nu - 1)}
    free = [v for v in range(N) if v not in inner]
    ang = [0.0] * N
    for v, a in zip(free, free_angles):
        ang[v] = float(a)
    pts = [cmath.exp(2j * math.pi * a) for a in ang]
    gens = {}
    for name, base, nu in lay.blocks:
        x, y = pts[base % N], pts[(base + nu - 1) % N]
        c = _rotation_center(x, y, nu)
        R = _elliptic(c, nu)
        gens[name] = R
        z = x
        for j in range(1, nu - 1):
            z = R(z)
            v = (base + j) % N
            pts[v] = z / abs(z)
            ang[v] = to_angle(z)
            if ang[v] < ang[(base + j - 1) % N]:
                ang[v] += 1.0
    names = [p[0] for p in lay.pairings]
    for (name, (i1, i2), (j1, j2)), t in zip(lay.pairings, twists):
        gens[name] = _pairing(pts[i1], pts[i2], pts[j1], pts[j2], float(t))
    return ang, gens, names


def _cusp_word_list(lay: _Layout) -> list:
    """(label, word) for every designated cusp word.

    The vertex-cycle words come from the right- and left-side vertex orbits;
    the puncture words are the ones named in the construction.
    """
    out = []
    for side, cyc, edges in vertex_cycles(lay):
        w: list = []
        for e in edges:
            w = list(lay.edge_words[e]) + w
        out.append((f"cycle{side}{list(cyc)}", w))
    sig = lay.sig
    k = sig.k
    if k >= 2:
        out.append((f"P{k - 2}", [(f"P{k - 2}", 1)]))
    for i in range(k - 2):
        out.append((f"P{i + 1}^-1 P{i}", [(f"P{i + 1}", -1), (f"P{i}", 1)]))
    if sig.g == 0 and not sig.torsion and k >= 2:
        out.append(("P0", [("P0", 1)]))
    return out


def _trace_residuals(lay, words, gens) -> np.ndarray:
    res = []
    for _, w in words:
        m = mb.IDENTITY
        for name, e in w:
            m = m @ gens[name].power(e)
        t = m.trace.real
        res.append(t * t - 4.0)
    return np.array(res)


def core_polygon(signature, twists: dict | None = None, tol: float = TRACE_TOL,
                 max_iter: int = 60) -> CorePolygon:
    """Core polygon with twists solved so that all cusp words are parabolic.

    ``twists`` overrides the starting values by generator name.  The solve
    first moves only the twists; if that stalls it also moves the free
    vertices, taking minimum-norm Gauss-Newton steps from the regular
    polygon.
    """
    sig = signature if isinstance(signature, Signature) else Signature.parse(signature)
    if not sig.hyperbolic:
        raise ValueError(f"signature {sig} is not hyperbolic (chi = {sig.chi})")
    if sig.k < 1:
        raise CompactSignature("core polygons need at least one cusp", signature=str(sig))
    lay = _layout(sig)
    N = lay.N
    inner = {(base + j) % N for _, base, nu in lay.blocks for j in range(1, nu - 1)}
    free0 = np.array([v / N for v in range(N) if v not in inner])
    t0 = np.array([(twists or {}).get(p[0], 0.0) for p in lay.pairings], dtype=float)
    words = _cusp_word_list(lay)

    def F(x, nt):
        ang, gens, _ = _realize(lay, x[nt:] if len(x) > nt else free0, x[:nt])
        return _trace_residuals(lay, words, gens)

    nt = len(t0)
    best = None
    for move_vertices in (False, True):
        x = np.concatenate([t0, free0]) if move_vertices else t0.copy()
        it = 0
        r = F(x, nt)
        while np.max(np.abs(r), initial=0.0) > tol and it < max_iter:
            J = np.empty((len(r), len(x)))
            for j in range(len(x)):
                h = 1e-7 * max(1.0, abs(x[j]))
                xp, xm = x.copy(), x.copy()
                xp[j] += h
                xm[j] -= h
                J[:, j] = (F(xp, nt) - F(xm, nt)) / (2 * h)
            step = np.linalg.lstsq(J, -r, rcond=None)[0]
            # damp so that vertices keep their cyclic order
            lam = 1.0
            while lam > 1e-4:
                xn = x + lam * step
                if not move_vertices or np.all(np.diff(xn[nt:]) > 0) and xn[-1] - xn[nt] < 1:
                    rn = F(xn, nt)
                    if np.max(np.abs(rn)) < np.max(np.abs(r)) or lam < 2e-4:
                        break
                lam /= 2
            x, r = xn, rn
            it += 1
        err = float(np.max(np.abs(r), initial=0.0))
        if best is None or err < best[0]:
            best = (err, x, it)
        if err <= tol:
            break
    err, x, it = best
    if err > tol:
        raise SolverDiverged("cusp words did not become parabolic", residual=err,
                             signature=str(sig))
    ang, gens, names = _realize(lay, x[nt:] if len(x) > nt else free0, x[:nt])
    return CorePolygon(sig, ang, gens, dict(zip(names, (float(t) for t in x[:nt]))),
                       lay, err, it)


def cusp_words(poly: CorePolygon) -> dict:
    """Designated cusp words: label -> (word, Moebius, | |trace| - 2 |)."""
    out = {}
    for label, w in _cusp_word_list(poly.layout):
        m = poly.evaluate(w)
        out[label] = (w, m, abs(abs(m.trace.real) - 2.0))
    return out


def elliptic_residual(poly: CorePolygon) -> float:
    err = 0.0
    for name, _, nu in poly.layout.blocks:
        m = poly.generators[name].power(nu)
        err = max(err, min(max(abs(x - y) for x, y in zip(m._t(), (1, 0, 0, 1))),
                           max(abs(x + y) for x, y in zip(m._t(), (1, 0, 0, 1)))))
    return err


def bowen_series_system(poly: CorePolygon) -> MarkovSystem:
    """The Bowen-Series Markov map of the polygon as a circle system."""
    N = poly.N
    arcs = [Arc(poly.angles[i], poly.angles[(i + 1) % N]) for i in range(N)]
    pieces = [MoebiusPiece(poly.edge_map(i)) for i in range(N)]
    disks = []
    for i in range(N):
        x, y = poly.vertices[i], poly.vertices[(i + 1) % N]
        disks.append(mb.geodesic_circle(x, y))
    return MarkovSystem(arcs, pieces, name=f"Bowen-Series {poly.signature}",
                        meta={"words": [word_str(w) for w in poly.layout.edge_words],
                              "puzzle_disks": disks})


def return_word(poly: CorePolygon, v: int, side: str = "+") -> list:
    """Word of the first return of vertex v on the given side (None if not periodic)."""
    for s, cyc, edges in vertex_cycles(poly.layout):
        if s == side and v in cyc:
            k = cyc.index(v)
            es = edges[k:] + edges[:k]
            w: list = []
            for e in es:
                w = list(poly.layout.edge_words[e]) + w
            return w
    return None


# ---------------------------------------------------------------- nodal data

PARABOLIC_NODAL = Signature(0, (INF_ORDER, 2, 2))


@dataclass
class NodalData:
    """Nodal surface: components and the nodes joining them.

    ``nodes`` lists pairs (c1, c2) of component indices; a node uses one free
    cusp class on each side.  Components with signature (0,3;inf,2,2) are
    parabolic nodal components.
    """
    components: list
    nodes: list

    def __post_init__(self):
        self.components = [c if isinstance(c, Signature) else Signature.parse(c)
                           for c in self.components]

    def is_parabolic(self, c: int) -> bool:
        return self.components[c] == PARABOLIC_NODAL


@dataclass
class PinchedPolygon:
    nodal: NodalData
    polygons: dict          # hyperbolic component -> CorePolygon
    classes: dict           # component -> list of cusp classes
    node_of: dict           # (c, class index) -> (c2, class index) or a marker
    contacts: list          # (parent, vertex, child, vertex) along a spanning tree
    parabolic: dict         # (c, class index) -> parabolic nodal component

    def kind(self, c: int, v: int) -> str:
        """'contact', 'node' (limb hangs there) or 'cusp' (original cusp)."""
        for p, pv, ch, cv in self.contacts:
            if (p, pv) == (c, v) or (ch, cv) == (c, v):
                return "contact"
        ci = self.class_index(c, v)
        if (c, ci) in self.node_of:
            return "node"
        return "cusp"

    def class_index(self, c: int, v: int) -> int:
        for i, cl in enumerate(self.classes[c]):
            if v in cl:
                return i
        raise KeyError((c, v))


def pinched_core_polygon(nodal: NodalData, **kw) -> PinchedPolygon:
    comps = range(len(nodal.components))
    hyp = [c for c in comps if not nodal.is_parabolic(c)]
    adj: dict = {c: [] for c in comps}
    for a, b in nodal.nodes:
        adj[a].append(b)
        adj[b].append(a)
    seen, queue = {hyp[0]} if hyp else set(), deque(hyp[:1])
    while queue:
        c = queue.popleft()
        for d in adj[c]:
            if d not in seen:
                seen.add(d)
                queue.append(d)
    if not hyp or seen != set(comps):
        raise DisconnectedNodalData("the graph of nodal components is not connected",
                                    reached=sorted(seen))
    for c in comps:
        if nodal.is_parabolic(c):
            nb = adj[c]
            if len(nb) != 1 or nodal.is_parabolic(nb[0]):
                raise DisconnectedNodalData("a parabolic nodal component must attach to "
                                            "exactly one hyperbolic component", component=c)
    polys = {c: core_polygon(nodal.components[c], **kw) for c in hyp}
    classes = {c: cusp_classes(polys[c].layout) for c in hyp}
    used = {c: 0 for c in hyp}
    node_of, parabolic = {}, {}

    def take(c):
        i = used[c]
        if i >= len(classes[c]):
            raise DisconnectedNodalData("component has more nodes than cusps", component=c)
        used[c] += 1
        return i
    tree_edges = []
    for a, b in nodal.nodes:
        if nodal.is_parabolic(a) or nodal.is_parabolic(b):
            h, p = (b, a) if nodal.is_parabolic(a) else (a, b)
            parabolic[(h, take(h))] = p
            continue
        ia, ib = take(a), take(b)
        node_of[(a, ia)] = (b, ib)
        node_of[(b, ib)] = (a, ia)
        tree_edges.append((a, ia, b, ib))
    # spanning tree from the first hyperbolic component, gluing at representatives
    root = hyp[0]
    contacts, placed = [], {root}
    changed = True
    while changed:
        changed = False
        for a, ia, b, ib in tree_edges:
            for p, ip, ch, ic in ((a, ia, b, ib), (b, ib, a, ia)):
                if p in placed and ch not in placed:
                    contacts.append((p, classes[p][ip][0], ch, classes[ch][ic][0]))
                    placed.add(ch)
                    changed = True
    return PinchedPolygon(nodal, polys, classes, node_of, contacts, parabolic)


# ---------------------------------------------------------------- Basilica Bowen-Series maps

@dataclass(frozen=True)
class BSPiece:
    kind: str               # torso | limb
    component: int
    index: int              # edge for torso, vertex for limb
    word: tuple

    def label(self) -> str:
        return f"{self.kind}({self.component},{self.index})"


@dataclass
class BasilicaBSMap:
    pinched: PinchedPolygon
    pieces: list            # BSPiece in boundary order of the unbounded component
    images: list            # image of piece i as a list of piece indices
    representatives: dict   # component -> representative vertex per cusp class
    limb_targets: dict      # (c, v) -> (component, representative vertex)

    @property
    def matrix(self) -> np.ndarray:
        M = np.zeros((len(self.pieces), len(self.pieces)), dtype=np.int8)
        for i, img in enumerate(self.images):
            for j in img:
                M[j, i] = 1
        return M

    def counts(self) -> dict:
        return {"torso": sum(p.kind == "torso" for p in self.pieces),
                "limb": sum(p.kind == "limb" for p in self.pieces)}

    def to_target(self):
        """The symbolic Markov data as a target for the Basilica model builder."""
        from .puzzles import SymbolicTarget
        pp = self.pinched
        comps = sorted(pp.polygons)
        ren = {c: i for i, c in enumerate(comps)}
        edges, limbs, white = {}, {}, set()
        for c in comps:
            lay = pp.polygons[c].layout
            for e in range(lay.N):
                edges[(ren[c], e)] = (lay.start_img[e], lay.end_img[e])
            for v in range(lay.N):
                k = pp.kind(c, v)
                if k == "node":
                    t, w = self.limb_targets[(c, v)]
                    limbs[(ren[c], v)] = (ren[t], w)
                elif k == "cusp":
                    white.add((ren[c], v))
        contacts = [(ren[a], va, ren[b], vb) for a, va, b, vb in pp.contacts]
        kernel = "Q_pcf" if white else "Q"
        return SymbolicTarget(kernel, [pp.polygons[c].N for c in comps], contacts,
                              edges, limbs, white, name="Basilica Bowen-Series")

    def to_json(self) -> dict:
        return {"pieces": [{"kind": p.kind, "component": p.component, "index": p.index,
                            "word": word_str(p.word)} for p in self.pieces],
                "images": [list(img) for img in self.images],
                "representatives": {str(c): list(r) for c, r in self.representatives.items()}}


def _vertex_words(poly: CorePolygon, rep: int):
    """Group word carrying rep to each vertex of its cusp class (breadth first)."""
    lay = poly.layout
    moves = []
    for name, (i1, i2), (j1, j2) in lay.pairings:
        moves += [(i1, j1, (name, 1)), (i2, j2, (name, 1)),
                  (j1, i1, (name, -1)), (j2, i2, (name, -1))]
    for name, base, nu in lay.blocks:
        for j in range(nu):
            a, b = (base + j) % lay.N, (base + (j + 1) % nu) % lay.N
            moves += [(a, b, (name, 1)), (b, a, (name, -1))]
    out = {rep: []}
    queue = deque([rep])
    while queue:
        v = queue.popleft()
        for a, b, letter in sorted(moves):
            if a == v and b not in out:
                out[b] = [letter] + out[v]
                queue.append(b)
    return out


def _boundary_walk(pp: PinchedPolygon) -> list:
    """Level-0 pieces in counterclockwise order along the unbounded component."""
    children: dict = {}
    for p, pv, ch, cv in pp.contacts:
        children[(p, pv)] = (ch, cv)
    out = []

    def walk(c, entry, is_root):
        N = pp.polygons[c].N
        for j in range(N):
            v = (entry + j) % N
            if j > 0 or is_root:
                if (c, v) in children:
                    walk(*children[(c, v)], False)
                elif pp.kind(c, v) == "node":
                    out.append(("limb", c, v))
            out.append(("torso", c, v))
    root = min(pp.polygons)
    walk(root, 0, True)
    return out


def basilica_bs_map(pp: PinchedPolygon, representatives: dict | None = None,
                    limb_twist: int = 0) -> BasilicaBSMap:
    """Level-0 Basilica Bowen-Series map of a pinched polygon.

    Torso pieces act by the Bowen-Series word of their edge.  A limb piece at
    vertex v is carried back to the representative of v's cusp class, across
    the node, and then by ``limb_twist`` powers of the cusp word there (the
    stabilizer freedom).
    """
    reps = {}
    for c, cls in pp.classes.items():
        r = list((representatives or {}).get(c, [cl[0] for cl in cls]))
        if len(r) != len(cls) or any(x not in cl for x, cl in zip(r, cls)):
            raise InvalidRepresentatives("need one vertex per cusp class", component=c,
                                         classes=cls, given=r)
        reps[c] = r
    # contacts glue at the representatives
    contact_at = {}
    for p, pv, ch, cv in pp.contacts:
        contact_at[(p, pp.class_index(p, pv))] = (ch, cv)
        contact_at[(ch, pp.class_index(ch, cv))] = (p, pv)
    order = _boundary_walk(pp)
    pieces, limb_targets = [], {}
    for kind, c, x in order:
        poly = pp.polygons[c]
        if kind == "torso":
            pieces.append(BSPiece(kind, c, x, tuple(poly.layout.edge_words[x])))
            continue
        ci = pp.class_index(c, x)
        rep = reps[c][ci]
        w = invert(_vertex_words(poly, rep)[x])
        if limb_twist:
            ret = return_word(poly, rep, "+") or []
            w = (ret * abs(limb_twist) if limb_twist > 0 else invert(ret) * -limb_twist) + w
        t, ti = pp.node_of[(c, ci)]
        limb_targets[(c, x)] = (t, reps[t][ti])
        pieces.append(BSPiece(kind, c, x, tuple(free_reduce(w))))
    n = len(pieces)
    pos = {(p.kind, p.component, p.index): i for i, p in enumerate(pieces)}
    images = []
    for p in pieces:
        if p.kind == "torso":
            lay = pp.polygons[p.component].layout
            v, w = lay.start_img[p.index], lay.end_img[p.index]
            N = lay.N
            a = pos[("torso", p.component, v)]
            b = pos[("torso", p.component, (w - 1) % N)]
            images.append([(a + j) % n for j in range((b - a) % n + 1)])
        else:
            t, tv = limb_targets[(p.component, p.index)]
            images.append(_side_containing(pp, pieces, pos, t, tv))
    for i, img in enumerate(images):
        if not img:
            raise NotMarkov("empty image", piece=pieces[i].label())
    return BasilicaBSMap(pp, pieces, images, reps, limb_targets)


def _side_containing(pp, pieces, pos, t, tv) -> list:
    """Pieces on the side of contact vertex tv of component t that contains t."""
    n = len(pieces)
    N = pp.polygons[t].N
    for p, pv, ch, cv in pp.contacts:
        if (ch, cv) == (t, tv):
            # t hangs below: its pieces run from its first edge to its last
            a = pos[("torso", t, tv)]
            b = pos[("torso", t, (tv - 1) % N)]
            return [(a + j) % n for j in range((b - a) % n + 1)]
        if (p, pv) == (t, tv):
            # the child's subtree is the complement
            a = pos[("torso", ch, cv)]
            b = pos[("torso", ch, (cv - 1) % pp.polygons[ch].N)]
            inside = {(a + j) % n for j in range((b - a) % n + 1)}
            return [i for i in range(n) if i not in inside]
    raise InvalidRepresentatives("limb target is not a contact vertex", component=t, vertex=tv)


def symbolic_expansion(bs: BasilicaBSMap, depth: int) -> list:
    """Number of level-k symbolic pieces per level; nested pieces shrink when
    every cylinder of length depth splits (each image holds two or more pieces
    or leads to one that does)."""
    M = bs.matrix
    v = np.ones(len(bs.pieces), dtype=np.int64)
    out = [int(v.sum())]
    for _ in range(depth):
        v = M.T.astype(np.int64) @ v
        out.append(int(v.sum()))
    return out


# ---------------------------------------------------------------- induced systems

@dataclass
class InducedSystems:
    bounded: dict            # component -> concrete Bowen-Series MarkovSystem
    infinity: list           # symbolic pull-back system: (piece label, word, image labels)
    infinity_breaks: dict    # boundary position -> break type


def induced_systems(bs: BasilicaBSMap) -> InducedSystems:
    pp = bs.pinched
    bounded = {c: bowen_series_system(poly) for c, poly in pp.polygons.items()}
    inf = [(p.label(), word_str(p.word), [bs.pieces[j].label() for j in img])
           for p, img in zip(bs.pieces, bs.images)]
    # break points of the pull-back map sit between consecutive pieces; the one
    # after a torso edge's end vertex is an original cusp (parabolic) or a node
    # (the accidental parabolic is hyperbolic on the unbounded component)
    breaks = {}
    n = len(bs.pieces)
    for i in range(n):
        p = bs.pieces[i]
        if p.kind == "torso":
            c, v = p.component, (p.index + 1) % pp.polygons[p.component].N
        else:
            c, v = p.component, p.index
        kind = pp.kind(c, v)
        breaks[i] = "symmetric-parabolic" if kind == "cusp" else "symmetric-hyperbolic"
    return InducedSystems(bounded, inf, breaks)


def classify_bounded(ind: InducedSystems) -> dict:
    return {c: classify_breakpoints(s) for c, s in ind.bounded.items()}


def fig11_nodal() -> NodalData:
    """Genus two pinched along one separating curve."""
    return NodalData(["1,1;inf", "1,1;inf"], [(0, 1)])


def chain_nodal(g: int, punctured: bool = False) -> NodalData:
    """Genus g pinched along g - 1 separating curves into a chain of tori.

    With ``punctured`` the surface has two punctures, one on each end torus,
    so every piece is a twice-punctured torus.
    """
    if g < 2:
        raise ValueError("a chain needs g >= 2")
    end = "1,2;inf,inf" if punctured else "1,1;inf"
    comps = [end] + ["1,2;inf,inf"] * (g - 2) + [end]
    return NodalData(comps, [(i, i + 1) for i in range(g - 1)])
