"""Bi-colored ribbon contact trees and their invariants.

A contact tree has one vertex per bounded complementary component and an
edge for each tangency.  Vertices are black or white, and each vertex carries
the cyclic order of its neighbors (a ribbon structure).  The trees are
infinite, so everything here works on balls of finite depth around a root.

Trees are grown from *contact data*: a finite set of component types, each
with a color and a cyclic list of slots naming the type attached there, plus
the slot through which a child of each type is entered.  Nodal data and the
polynomial chains both reduce to this form.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass

from .errors import CycleDetected, DepthMismatch

BLACK, WHITE = "black", "white"


@dataclass
class BicoloredRibbonTree:
    colors: list              # color per vertex
    cyclic: list              # cyclic neighbor order per vertex
    root: int = 0
    depth: int = 0
    kinds: list | None = None  # component type per vertex (informational)

    def __post_init__(self):
        n = len(self.colors)
        if len(self.cyclic) != n:
            raise ValueError("one neighbor list per vertex")
        m = 0
        for v, nb in enumerate(self.cyclic):
            for u in nb:
                if v not in self.cyclic[u]:
                    raise ValueError(f"edge {v}-{u} missing from {u}'s cyclic order")
            m += len(nb)
        if m != 2 * (n - 1) or (n and len(self._bfs(self.root)[0]) != n):
            raise CycleDetected("vertex and edge counts do not describe a tree",
                                vertices=n, edges=m // 2)

    def __len__(self):
        return len(self.colors)

    @property
    def edges(self) -> list:
        return [(v, u) for v, nb in enumerate(self.cyclic) for u in nb if v < u]

    def _bfs(self, src):
        dist = {src: 0}
        order = [src]
        q = deque([src])
        while q:
            v = q.popleft()
            for u in self.cyclic[v]:
                if u not in dist:
                    dist[u] = dist[v] + 1
                    order.append(u)
                    q.append(u)
        return order, dist

    def relabel(self, perm) -> "BicoloredRibbonTree":
        """Copy with vertex v renamed perm[v]."""
        n = len(self)
        colors = [None] * n
        cyc = [None] * n
        kinds = None if self.kinds is None else [None] * n
        for v in range(n):
            colors[perm[v]] = self.colors[v]
            cyc[perm[v]] = [perm[u] for u in self.cyclic[v]]
            if kinds is not None:
                kinds[perm[v]] = self.kinds[v]
        return BicoloredRibbonTree(colors, cyc, perm[self.root], self.depth, kinds)

    def swap_colors(self) -> "BicoloredRibbonTree":
        sw = {BLACK: WHITE, WHITE: BLACK}
        return BicoloredRibbonTree([sw[c] for c in self.colors], [list(nb) for nb in self.cyclic],
                                   self.root, self.depth, self.kinds)

    def to_json(self) -> dict:
        return {"vertices": [{"id": v, "color": c} for v, c in enumerate(self.colors)],
                "edges": [list(e) for e in self.edges],
                "cyclic": {str(v): list(nb) for v, nb in enumerate(self.cyclic)},
                "root": self.root, "depth": self.depth}

    @classmethod
    def from_json(cls, d: dict) -> "BicoloredRibbonTree":
        n = len(d["vertices"])
        colors = [None] * n
        for item in d["vertices"]:
            colors[int(item["id"])] = item["color"]
        cyc = [list(map(int, d["cyclic"][str(v)])) for v in range(n)]
        edges = {tuple(sorted(e)) for e in d.get("edges", [])}
        tree = cls(colors, cyc, int(d.get("root", 0)), int(d["depth"]))
        if edges and edges != {tuple(sorted(e)) for e in tree.edges}:
            raise ValueError("edge list disagrees with the cyclic orders")
        return tree

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


# ---------------------------------------------------------------- contact data

@dataclass
class ContactData:
    """Finite description of an infinite contact tree.

    ``slots[t]`` is the cyclic list of types attached around a component of
    type t; ``entry[(t, s)]`` is the slot of t that faces the parent when a
    type-t component hangs off a type-s one.
    """
    colors: dict
    slots: dict
    entry: dict
    root: object

    def check(self):
        # the finite type graph itself must be a tree (multi-slots allowed)
        adj: dict = {t: set() for t in self.colors}
        for t, sl in self.slots.items():
            for s in sl:
                if s not in self.colors:
                    raise ValueError(f"slot of {t!r} names unknown type {s!r}")
                adj[t].add(s)
        for t in adj:
            for s in adj[t]:
                if t not in adj[s]:
                    raise ValueError(f"tangency {t!r}-{s!r} is one-sided")
                if s == t:
                    raise CycleDetected("a component type touches itself", type=t)
        seen = {self.root}
        parent = {self.root: None}
        q = deque([self.root])
        while q:
            t = q.popleft()
            for s in adj[t]:
                if s == parent[t]:
                    continue
                if s in seen:
                    raise CycleDetected("contact graph has a cycle", at=[t, s])
                seen.add(s)
                parent[s] = t
                q.append(s)
        for t, sl in self.slots.items():
            for s in set(sl):
                self.entry.setdefault((s, t), self.slots[s].index(t))


def grow_tree(data: ContactData, depth: int) -> BicoloredRibbonTree:
    """Ball of the given radius around a root component of type ``data.root``."""
    data.check()
    colors, kinds, cyclic = [], [], []

    def new(t):
        colors.append(data.colors[t])
        kinds.append(t)
        cyclic.append([])
        return len(colors) - 1

    root = new(data.root)
    # queue entries: vertex, its type, parent vertex, entry slot, depth
    q = deque([(root, data.root, None, None, 0)])
    while q:
        v, t, par, ent, dv = q.popleft()
        sl = data.slots[t]
        n = len(sl)
        start = 0 if ent is None else ent
        nb = []
        for j in range(n):
            k = (start + j) % n
            if ent is not None and k == ent:
                nb.append(par)
                continue
            if dv >= depth:
                continue
            s = sl[k]
            u = new(s)
            nb.append(u)
            q.append((u, s, v, data.entry[(s, t)], dv + 1))
        cyclic[v] = nb
    return BicoloredRibbonTree(colors, cyclic, root, depth, kinds)


def tree_from_contact_graph(colors: dict, slots: dict, depth: int, entry: dict | None = None,
                            root=None) -> BicoloredRibbonTree:
    """Tree from component colors and cyclic tangency lists.

    By default a child enters through the first slot of its type that names
    the parent's type.
    """
    root = next(iter(colors)) if root is None else root
    data = ContactData(dict(colors), {t: list(s) for t, s in slots.items()},
                       dict(entry or {}), root)
    return grow_tree(data, depth)


def tree_from_nodal(nodal, depth: int, copies: int = 2) -> BicoloredRibbonTree:
    """Contact tree of a Bers boundary group given by nodal data.

    A component is white when its surface keeps a cusp of the original
    surface.  Around a component, the attached components sit at the
    polygon vertices of its node classes, in counterclockwise order; each
    node class contributes ``copies`` of them (the real tree has infinitely
    many, accumulating on the cusp).
    """
    from .fuchsian import pinched_core_polygon
    pp = pinched_core_polygon(nodal)
    comps = sorted(pp.polygons)
    colors, slots, entry = {}, {}, {}
    for c in comps:
        classes = pp.classes[c]
        cusp = any((c, i) not in pp.node_of and (c, i) not in pp.parabolic
                   for i in range(len(classes)))
        colors[c] = WHITE if cusp else BLACK
        marks = []
        for i, cl in enumerate(classes):
            if (c, i) not in pp.node_of:
                continue
            t, _ = pp.node_of[(c, i)]
            if t == c:
                raise CycleDetected("a node joins a component to itself", component=c)
            picks = [(cl[j % len(cl)], j) for j in range(copies)]
            marks += [(v, j, t, i) for v, j in picks]
        marks.sort()
        slots[c] = [t for _, _, t, _ in marks]
        for k, (v, j, t, i) in enumerate(marks):
            if j == 0:
                entry.setdefault((c, t), k)
    if len(comps) == 1:
        slots[comps[0]] = []
    data = ContactData(colors, slots, entry, comps[0])
    return grow_tree(data, depth)


def chain_contact_data(n: int, copies: int = 2, white_ends: bool = True) -> tuple:
    """(colors, slots) for a chain of n components, ends white.

    Models the critically fixed polynomial chains: each component touches its
    neighbors in the chain, with ``copies`` preimages of each contact.
    """
    colors = {i: (WHITE if white_ends and i in (0, n - 1) else BLACK) for i in range(n)}
    slots = {}
    for i in range(n):
        sl = []
        for j in (i - 1, i + 1):
            if 0 <= j < n:
                sl += [j] * copies
        slots[i] = sl
    return colors, slots


# ---------------------------------------------------------------- canonical forms

def _booth(seq) -> int:
    """Start index of the lexicographically least rotation (Booth's algorithm)."""
    s = list(seq) * 2
    n = len(seq)
    f = [-1] * len(s)
    k = 0
    for j in range(1, len(s)):
        i = f[j - k - 1]
        while i != -1 and s[j] != s[k + i + 1]:
            if s[j] < s[k + i + 1]:
                k = j - i - 1
            i = f[i]
        if i == -1 and s[j] != s[k + i + 1]:
            if s[j] < s[k + i + 1]:
                k = j
            f[j - k] = -1
        else:
            f[j - k] = i + 1
    return k % n if n else 0


def _rooted_code(T: BicoloredRibbonTree, root: int, table: dict):
    order, _ = T._bfs(root)
    parent = {root: None}
    for v in order:
        for u in T.cyclic[v]:
            if u not in parent:
                parent[u] = v
    ids: dict = {}
    for v in reversed(order):
        nb = T.cyclic[v]
        p = parent[v]
        if p is None:
            kids = [ids[u] for u in nb]
            if kids:
                k = _booth(kids)
                kids = kids[k:] + kids[:k]
            key = ("root", T.colors[v], tuple(kids))
        else:
            i = nb.index(p)
            kids = [ids[u] for u in nb[i + 1:] + nb[:i]]
            key = (T.colors[v], tuple(kids))
        ids[v] = table.setdefault(key, len(table))
    return ids[root]


def centroids(T: BicoloredRibbonTree) -> list:
    """The one or two vertices whose largest branch is smallest."""
    n = len(T)
    if n <= 2:
        return list(range(n))
    order, _ = T._bfs(T.root)
    parent = {T.root: None}
    for v in order:
        for u in T.cyclic[v]:
            if u not in parent:
                parent[u] = v
    size = dict.fromkeys(order, 1)
    for v in reversed(order):
        if parent[v] is not None:
            size[parent[v]] += size[v]
    worst = {}
    for v in order:
        branches = [size[u] for u in T.cyclic[v] if u != parent[v]]
        branches.append(n - size[v])
        worst[v] = max(branches)
    m = min(worst.values())
    return sorted(v for v in order if worst[v] == m)


def canonical_code(T: BicoloredRibbonTree, table: dict | None = None):
    """Code that two trees share exactly when they are ribbon isomorphic."""
    table = {} if table is None else table
    return min(_rooted_code(T, c, table) for c in centroids(T)) if len(T) else None


def ribbon_isomorphic(T1: BicoloredRibbonTree, T2: BicoloredRibbonTree) -> bool:
    if T1.depth != T2.depth:
        raise DepthMismatch("trees are truncated at different depths", depths=[T1.depth, T2.depth])
    if len(T1) != len(T2) or sorted(T1.colors) != sorted(T2.colors):
        return False
    table: dict = {}
    # the code ids depend on the order trees enter the table, so compare the
    # sets of root codes rather than a single minimum
    c1 = {_rooted_code(T1, c, table) for c in centroids(T1)}
    c2 = {_rooted_code(T2, c, table) for c in centroids(T2)}
    return bool(c1 & c2)


# ---------------------------------------------------------------- invariants

@dataclass(frozen=True)
class WhiteDistances:
    n_white: int
    parities: tuple          # subset of ("even", "odd") realized by white pairs
    min_even: int | None
    min_odd: int | None
    certain: bool

    def to_json(self):
        return {"n_white": self.n_white, "parities": list(self.parities),
                "min_even": self.min_even, "min_odd": self.min_odd, "certain": self.certain}


def white_distance_invariant(T: BicoloredRibbonTree, n_types: int | None = None) -> WhiteDistances:
    """Least even and least odd distance between distinct white vertices.

    One pass over the tree keeps, per vertex, the nearest white below it at
    each parity.  The minimum is certain when it is small enough that every
    white pair at that distance has a copy inside the truncation.
    """
    INF = float("inf")
    order, _ = T._bfs(T.root)
    parent = {T.root: None}
    for v in order:
        for u in T.cyclic[v]:
            if u not in parent:
                parent[u] = v
    down = {}
    best = [INF, INF]
    for v in reversed(order):
        own = [0 if T.colors[v] == WHITE else INF, INF]
        acc = list(own)
        for u in T.cyclic[v]:
            if u == parent[v]:
                continue
            du = down[u]
            cand = [du[1] + 1, du[0] + 1]      # parities flip across the edge
            for p in (0, 1):
                for q in (0, 1):
                    s = acc[p] + cand[q]
                    if s < INF and s > 0:
                        best[(p + q) % 2] = min(best[(p + q) % 2], s)
            for p in (0, 1):
                acc[p] = min(acc[p], cand[p])
        down[v] = acc
    n_white = sum(c == WHITE for c in T.colors)
    me = None if best[0] == INF else int(best[0])
    mo = None if best[1] == INF else int(best[1])
    par = tuple(p for p, m in (("even", me), ("odd", mo)) if m is not None)
    slack = n_types if n_types is not None else len(set(T.kinds or [0]))
    found = [m for m in (me, mo) if m is not None]
    certain = bool(found) and all(m + slack <= T.depth for m in found)
    return WhiteDistances(n_white, par, me, mo, certain)
