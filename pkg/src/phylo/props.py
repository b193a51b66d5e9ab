"""Structural predicates and gadget constructors.

Tiers, blobs and level, displayed trees, display testing by exhaustive
embedding search, tree-basedness, burls, handcuffed trees/caterpillars, and
the canonical network displaying a given set of networks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb

from .errors import NotDisplayed, PhyloError
from .multigraph import Multigraph
from .network import Network, validate
from .moves import Move, apply, move_payloads
from .errors import MoveError


def reticulation_number(net: Network) -> int:
    return net.r


@dataclass(frozen=True)
class Blob:
    vertices: frozenset[int]
    edges: frozenset[int]

    @property
    def cyclomatic(self) -> int:
        return len(self.edges) - len(self.vertices) + 1


def blobs(net: Network) -> list[Blob]:
    """Nontrivial 2-connected components (maximal bridgeless subgraphs)."""
    g = net.g
    bridge = g.bridges()
    seen_v: set[int] = set()
    out = []
    for start in sorted(g.vertices):
        if start in seen_v or g.degree(start) == 1:
            continue
        comp_v = {start}
        comp_e = set()
        stack = [start]
        while stack:
            v = stack.pop()
            for e in g.edges_at(v):
                if e in bridge:
                    continue
                comp_e.add(e)
                w = g.other_end(e, v)
                if w not in comp_v:
                    comp_v.add(w)
                    stack.append(w)
        seen_v |= comp_v
        if comp_e:
            out.append(Blob(frozenset(comp_v), frozenset(comp_e)))
    return out


def level(net: Network) -> int:
    """Max over blobs of the edges to delete to make the blob acyclic."""
    bs = blobs(net)
    return max((b.cyclomatic for b in bs), default=0)


# -- display / embedding -----------------------------------------------------

def find_embedding(net: Network, m: Network):
    """An embedding of m into net: a subdivision of m that is a subgraph.

    Returns (vertex_map, edge_paths) where edge_paths maps each edge of m to
    the list of net-edge ids of its path, or None if m is not displayed.
    Labelled vertices map to the leaves with the same labels.
    """
    G, M = net.g, m.g
    for lab in m.labels.values():
        if lab not in net.leaf_of:
            return None
    vmap: dict[int, int] = {v: net.leaf_of[l] for v, l in m.labels.items()}
    used_v: set[int] = set(vmap.values())
    used_e: set[int] = set()
    paths: dict[int, list[int]] = {}

    # order m's edges so each has a mapped endpoint when processed
    order: list[tuple[int, int, int]] = []   # (edge, from_vertex, to_vertex)
    placed = set(vmap)
    rest = set(M.edges)
    while rest:
        progressed = False
        for e in sorted(rest):
            a, b = M.ends(e)
            if a in placed or b in placed:
                if a not in placed:
                    a, b = b, a
                order.append((e, a, b))
                placed.update((a, b))
                rest.discard(e)
                progressed = True
                break
        if not progressed:   # m disconnected; cannot embed
            return None

    def free(v):
        return v not in used_v and v not in net.labels

    def walk(idx):
        if idx == len(order):
            return True
        e, a, b = order[idx]
        start = vmap[a]
        target = vmap.get(b)

        # DFS over simple paths from start using unused edges/vertices
        def dfs(v, path_edges, interior):
            for f in sorted(G.edges_at(v)):
                if f in used_e or f in path_edges:
                    continue
                w = G.other_end(f, v)
                if target is not None:
                    if w == target:
                        if try_commit(path_edges + [f], interior, None):
                            return True
                        continue
                if w in used_v or w in interior or w in net.labels:
                    continue
                if target is None and try_commit(path_edges + [f], interior, w):
                    return True
                if dfs(w, path_edges + [f], interior | {w}):
                    return True
            return False

        def try_commit(path_edges, interior, new_img):
            if new_img is not None:
                vmap[b] = new_img
                used_v.add(new_img)
            used_e.update(path_edges)
            used_v.update(interior)
            paths[e] = path_edges
            if walk(idx + 1):
                return True
            del paths[e]
            used_v.difference_update(interior)
            used_e.difference_update(path_edges)
            if new_img is not None:
                used_v.discard(new_img)
                del vmap[b]
            return False

        return dfs(start, [], set())

    if walk(0):
        return dict(vmap), dict(paths)
    return None


def displays(net: Network, m: Network) -> bool:
    """True iff a subdivision of m is a label-respecting subgraph of net."""
    return find_embedding(net, m) is not None


def displayed_trees(net: Network) -> dict[bytes, Network]:
    """D(net): the closure of net under valid edge removals, at tier 0."""
    seen = {net.key(): net}
    frontier = [net]
    out: dict[bytes, Network] = {}
    while frontier:
        cur = frontier.pop()
        if cur.r == 0:
            out[cur.key()] = cur
            continue
        for mv in move_payloads(cur, "tbr-"):
            try:
                nxt = apply(cur, mv)
            except MoveError:
                continue
            k = nxt.key()
            if k not in seen:
                seen[k] = nxt
                frontier.append(nxt)
    return out


# -- tree-basedness ----------------------------------------------------------

_SUBSET_CAP = 300_000


def _base_from_deletion(net: Network, delete: tuple[int, ...]) -> Network | None:
    g = net.g
    # degree screen: no unlabelled vertex may drop below degree 2
    drop: dict[int, int] = {}
    for e in delete:
        for v in g.ends(e):
            drop[v] = drop.get(v, 0) + 1
    for v, d in drop.items():
        if g.degree(v) - d < 2:
            return None
    work = g.copy()
    for e in delete:
        work.remove_edge(e)
    if not work.is_connected():
        return None
    for v in sorted(work.vertices):
        if v not in net.labels and work.degree(v) == 2:
            a, b = (work.other_end(f, v) for f in work.edges_at(v))
            if a == b:
                return None
            work.suppress(v)
    return validate(work, net.labels)


def tree_based(net: Network) -> Network | None:
    """A base tree with a spanning subdivision in net, or None.

    Searches r-subsets of non-bridge edges whose deletion keeps the network
    connected and leaves no unlabelled degree-1 vertex; ties are broken by
    the lexicographically smallest base-tree key.  Falls back to a per-blob
    spanning-tree search when the subset space is too large (existence only,
    deterministic first solution).
    """
    r = net.r
    if r == 0:
        return net
    bridge = net.g.bridges()
    cands = [e for e in sorted(net.g.edges) if e not in bridge]
    if comb(len(cands), r) <= _SUBSET_CAP:
        best: Network | None = None
        for delete in combinations(cands, r):
            base = _base_from_deletion(net, delete)
            if base is not None and (best is None or base.key() < best.key()):
                best = base
        return best
    delete = _blob_deletion(net)
    if delete is None:
        return None
    base = _base_from_deletion(net, tuple(sorted(delete)))
    assert base is not None
    return base


def is_tree_based_on(net: Network, base: Network) -> bool:
    """True iff `base` has a spanning subdivision in net."""
    r = net.r
    if r == 0:
        return net.key() == base.key()
    bridge = net.g.bridges()
    cands = [e for e in sorted(net.g.edges) if e not in bridge]
    want = base.key()
    for delete in combinations(cands, r):
        b = _base_from_deletion(net, delete)
        if b is not None and b.key() == want:
            return True
    return False


def _blob_deletion(net: Network) -> set[int] | None:
    """Edges to delete, one blob at a time: each blob must own a spanning
    tree whose leaves all sit at its attachment vertices."""
    g = net.g
    bridge = g.bridges()
    delete: set[int] = set()
    for blob in blobs(net):
        attach = {v for v in blob.vertices
                  if any(f in bridge for f in g.edges_at(v))}
        keep = _blob_spanning_tree(g, blob, attach)
        if keep is None:
            return None
        delete |= set(blob.edges) - keep
    return delete


def _blob_spanning_tree(g: Multigraph, blob: Blob, attach: set[int]) -> set[int] | None:
    """A spanning tree of the blob whose degree-1 vertices are attachments."""
    verts = sorted(blob.vertices)
    edges = sorted(blob.edges)
    need = len(verts) - 1
    parent = {v: v for v in verts}

    def find(x):
        # no path compression: unions are undone during backtracking
        while parent[x] != x:
            x = parent[x]
        return x

    deg = {v: 0 for v in verts}
    avail = {v: sum(1 for f in g.edges_at(v) if f in blob.edges) for v in verts}
    chosen: list[int] = []

    def rec(idx):
        if len(chosen) == need:
            if all(deg[v] >= 2 or v in attach for v in verts):
                return True
            return False
        if idx == len(edges):
            return False
        remaining = len(edges) - idx
        if len(chosen) + remaining < need:
            return False
        e = edges[idx]
        u, v = g.ends(e)
        # include e
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
            deg[u] += 1
            deg[v] += 1
            chosen.append(e)
            if rec(idx + 1):
                return True
            chosen.pop()
            deg[u] -= 1
            deg[v] -= 1
            parent[ru] = ru
        # exclude e: check neither endpoint is starved of degree 2
        avail[u] -= 1
        avail[v] -= 1
        ok = all(v2 in attach or deg[v2] + avail[v2] >= 2 for v2 in (u, v))
        if ok and rec(idx + 1):
            return True
        avail[u] += 1
        avail[v] += 1
        return False

    if rec(0):
        return set(chosen)
    return None


# -- gadgets -----------------------------------------------------------------

def burl_fragment(r: int) -> tuple[Multigraph, int, int]:
    """An r-burl with its two degree-2 attachment vertices."""
    if r < 1:
        raise ValueError("burl needs r >= 1")
    g = Multigraph()
    a, b = g.add_vertex(), g.add_vertex()
    g.add_edge(a, b)
    cur = g.add_edge(a, b)
    for _ in range(1, r):
        p, _, eb = g.subdivide(cur)
        q, _, _ = g.subdivide(eb)
        cur = g.add_edge(p, q)
    return g, a, b


def insert_burl(g: Multigraph, eid: int, r: int) -> None:
    """Nest an r-burl into edge eid (in place)."""
    if r < 1:
        raise ValueError("burl needs r >= 1")
    x, _, eb = g.subdivide(eid)
    y, ec, _ = g.subdivide(eb)
    cur = g.add_edge(x, y)
    for _ in range(1, r):
        p, _, half = g.subdivide(cur)
        q, _, _ = g.subdivide(half)
        cur = g.add_edge(p, q)


def make_burl_network(n: int, r: int) -> Network:
    """A tree on n leaves with an r-burl on the pendant edge of leaf 1."""
    net = make_caterpillar(n)
    g = net.g.copy()
    pend = g.edges_at(net.leaf_of[1])[0]
    insert_burl(g, pend, r)
    return validate(g, net.labels)


def make_caterpillar(n: int) -> Network:
    """The caterpillar with cherry {1, 2} and leaves 3..n in order."""
    if n < 2:
        raise ValueError("need n >= 2")
    g = Multigraph()
    leaves = {}
    for lab in range(1, n + 1):
        leaves[lab] = g.add_vertex()
    labels = {v: lab for lab, v in leaves.items()}
    if n == 2:
        g.add_edge(leaves[1], leaves[2])
        return validate(g, labels)
    spine = [g.add_vertex() for _ in range(n - 2)]
    g.add_edge(leaves[1], spine[0])
    g.add_edge(leaves[2], spine[0])
    for i in range(len(spine) - 1):
        g.add_edge(spine[i], spine[i + 1])
    for i, lab in enumerate(range(3, n)):
        g.add_edge(leaves[lab], spine[i + 1] if i + 1 < len(spine) else spine[-1])
    g.add_edge(leaves[n], spine[-1])
    return validate(g, labels)


def make_ordered_caterpillar(n: int) -> Network:
    """The caterpillar whose leaves appear in the order 1..n along the spine
    (leaf 1 shares its spine vertex with leaf 2, leaf n with leaf n-1)."""
    return make_caterpillar(n)


def _subdivide_chain(g: Multigraph, eid: int, k: int, from_vertex: int) -> list[int]:
    """Subdivide eid with k vertices; returned list starts nearest from_vertex."""
    out = []
    cur = eid
    anchor = from_vertex
    for _ in range(k):
        u, v = g.ends(cur)
        x, ea, eb = g.subdivide(cur)
        out.append(x)
        cur = eb if anchor in g.ends(ea) else ea
        anchor = x
    return out


def make_handcuffed(base: Network, a: int, b: int, r: int) -> Network:
    """Handcuff leaves a and b of `base` with r rungs."""
    if r < 1:
        raise ValueError("need r >= 1")
    if a == b or a not in base.leaf_of or b not in base.leaf_of:
        raise ValueError("a and b must be distinct leaf labels")
    g = base.g.copy()
    va, vb = base.leaf_of[a], base.leaf_of[b]
    ea = g.edges_at(va)[0]
    eb = g.edges_at(vb)[0]
    if ea == eb:   # n = 2: both pendant edges coincide
        us = _subdivide_chain(g, ea, r, va)
        evb = g.edges_at(vb)[0]
        vs = _subdivide_chain(g, evb, r, vb)
    else:
        us = _subdivide_chain(g, ea, r, va)
        vs = _subdivide_chain(g, eb, r, vb)
    for u, v in zip(us, vs):
        g.add_edge(u, v)
    return validate(g, base.labels)


def make_sorted_handcuffed_caterpillar(n: int, r: int) -> Network:
    """The canonical tier-(n, r) seed: sorted caterpillar handcuffed on 1, 2."""
    cat = make_caterpillar(n)
    if r == 0:
        return cat
    return make_handcuffed(cat, 1, 2, r)


def canonical_display_network(parts: list[Network], n: int | None = None) -> Network:
    """The canonical network displaying every network in `parts`.

    Built from the ordered caterpillar by subdividing each pendant edge once
    per part and gluing the part's leaves onto the subdivision vertices.
    """
    if not parts:
        raise ValueError("need at least one network to display")
    if n is None:
        n = max(max(p.labels.values()) for p in parts)
    k = len(parts)
    p0 = make_ordered_caterpillar(n)
    g = p0.g.copy()
    labels = dict(p0.labels)
    # u[i][j]: j-th subdivision vertex of the pendant edge of leaf i
    u: dict[int, list[int]] = {}
    for lab in range(1, n + 1):
        leaf = p0.leaf_of[lab]
        pend = g.edges_at(leaf)[0]
        u[lab] = _subdivide_chain(g, pend, k, leaf)
    for j, part in enumerate(parts):
        rename: dict[int, int] = {}
        for v in sorted(part.g.vertices):
            if v in part.labels:
                rename[v] = u[part.labels[v]][j]
            else:
                rename[v] = g.add_vertex()
        for e in sorted(part.g.edges):
            x, y = part.g.ends(e)
            g.add_edge(rename[x], rename[y])
    # unused subdivision vertices stay degree 2: suppress them
    changed = True
    while changed:
        changed = False
        for v in sorted(g.vertices):
            if v not in labels and g.degree(v) == 2:
                g.suppress(v)
                changed = True
                break
    net = validate(g, labels)
    for part in parts:
        if not displays(net, part):
            raise PhyloError("canonical display network fails to display a part")
    return net


# -- class constraints ---------------------------------------------------------

@dataclass(frozen=True)
class ClassConstraint:
    """Predicate restricting a search space of networks."""

    variant: str                    # all | tier | tier_range | tree_based |
                                    # tree_based_on | level_at_most | and
    r: int | None = None
    lo: int | None = None
    hi: int | None = None
    k: int | None = None
    base: Network | None = field(default=None, compare=False)
    parts: tuple["ClassConstraint", ...] = ()

    def allows(self, net: Network) -> bool:
        v = self.variant
        if v == "all":
            return True
        if v == "tier":
            return net.r == self.r
        if v == "tier_range":
            return self.lo <= net.r <= self.hi
        if v == "tree_based":
            return tree_based(net) is not None
        if v == "tree_based_on":
            return is_tree_based_on(net, self.base)
        if v == "level_at_most":
            return level(net) <= self.k
        if v == "and":
            return all(p.allows(net) for p in self.parts)
        raise ValueError(f"unknown constraint {v!r}")

    def tier_bounds(self) -> tuple[int, int | None]:
        if self.variant == "tier":
            return self.r, self.r
        if self.variant == "tier_range":
            return self.lo, self.hi
        if self.variant == "and":
            lo, hi = 0, None
            for p in self.parts:
                plo, phi = p.tier_bounds()
                lo = max(lo, plo)
                if phi is not None:
                    hi = phi if hi is None else min(hi, phi)
            return lo, hi
        return 0, None

    def describe(self) -> str:
        v = self.variant
        if v == "tier":
            return f"tier({self.r})"
        if v == "tier_range":
            return f"tiers({self.lo}..{self.hi})"
        if v == "level_at_most":
            return f"level<={self.k}"
        if v == "tree_based_on":
            return "tree-based-on"
        if v == "and":
            return "+".join(p.describe() for p in self.parts)
        return v.replace("_", "-")


ALL = ClassConstraint("all")


def Tier(r: int) -> ClassConstraint:
    return ClassConstraint("tier", r=r)


def TierRange(lo: int, hi: int) -> ClassConstraint:
    return ClassConstraint("tier_range", lo=lo, hi=hi)


def TreeBased() -> ClassConstraint:
    return ClassConstraint("tree_based")


def TreeBasedOn(base: Network) -> ClassConstraint:
    return ClassConstraint("tree_based_on", base=base)


def LevelAtMost(k: int) -> ClassConstraint:
    return ClassConstraint("level_at_most", k=k)


def And(*parts: ClassConstraint) -> ClassConstraint:
    return ClassConstraint("and", parts=tuple(parts))
