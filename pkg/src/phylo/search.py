"""Exact distances and exhaustive space enumeration over canonical keys.

Distances are breadth-first over isomorphism classes inside a class
constraint; bidirectional search is used whenever the kind-set is closed
under inversion (tier changes by at most one per move, which also lets the
search prune states that can no longer reach the target tier in the
remaining depth).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import (CapExceeded, ConstraintViolated, DisconnectedSpace,
                     MoveError)
from .network import Network
from .moves import (INVERSE_KIND, Move, MoveSequence, apply, find_move_to,
                    invert, kinds_of, neighbors)
from .props import ALL, ClassConstraint, Tier, TierRange, \
    make_sorted_handcuffed_caterpillar

DEFAULT_NODE_CAP = 5_000_000


@dataclass
class DistanceResult:
    distance: int | None
    witness: MoveSequence | None = None
    bound: int | None = None          # depth/tier cap in force when unreachable

    @property
    def unreachable(self) -> bool:
        return self.distance is None


@dataclass
class SpaceGraph:
    n: int
    constraint: ClassConstraint
    kinds: tuple[str, ...]
    nodes: dict[bytes, Network] = field(default_factory=dict)
    adj: dict[bytes, set[bytes]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.nodes)

    def degree_histogram(self) -> dict[int, int]:
        hist: dict[int, int] = {}
        for k in self.nodes:
            d = len(self.adj.get(k, ()))
            hist[d] = hist.get(d, 0) + 1
        return dict(sorted(hist.items()))


def _inverse_closed(kinds: tuple[str, ...]) -> bool:
    return all(INVERSE_KIND[k] in kinds for k in kinds)


def _effective_constraint(a: Network, b: Network, c: ClassConstraint,
                          tier_cap: int | None) -> ClassConstraint:
    """Class 'all' searches still get a tier ceiling (CLI-overridable)."""
    if c.variant != "all":
        return c
    hi = tier_cap if tier_cap is not None else max(a.r, b.r) + 1
    return TierRange(0, hi)


def bfs_distance(a: Network, b: Network, kinds, c: ClassConstraint = ALL,
                 max_depth: int | None = None, tier_cap: int | None = None,
                 node_cap: int = DEFAULT_NODE_CAP) -> DistanceResult:
    """Exact shortest-move-count from a to b inside the constraint."""
    kinds = kinds_of(kinds)
    if not c.allows(a) or not c.allows(b):
        raise ConstraintViolated("endpoint violates the class constraint")
    if sorted(a.labels.values()) != sorted(b.labels.values()):
        raise ConstraintViolated("networks are on different leaf sets")
    eff = _effective_constraint(a, b, c, tier_cap)
    lo, hi = eff.tier_bounds()

    ka, kb = a.key(), b.key()
    if ka == kb:
        return DistanceResult(0, MoveSequence(a, []))

    bidir = _inverse_closed(kinds)
    sides = {
        "A": {"dist": {ka: 0}, "net": {ka: a}, "parent": {},
              "frontier": [ka], "depth": 0, "target_r": b.r},
        "B": {"dist": {kb: 0}, "net": {kb: b}, "parent": {},
              "frontier": [kb], "depth": 0, "target_r": a.r},
    }
    if not bidir:
        sides["B"]["frontier"] = []   # expand only from a

    best: int | None = None
    meet: bytes | None = None

    def other(s):
        return "B" if s == "A" else "A"

    while True:
        da, db = sides["A"]["depth"], sides["B"]["depth"]
        if best is not None and da + db >= best:
            break
        if max_depth is not None and da + db >= max_depth:
            break
        live = [s for s in ("A", "B") if sides[s]["frontier"]]
        if not bidir:
            live = [s for s in live if s == "A"]
        if not live:
            break
        s = min(live, key=lambda s: len(sides[s]["frontier"]))
        side, opp = sides[s], sides[other(s)]
        new_depth = side["depth"] + 1
        remaining = None if max_depth is None else max_depth - new_depth
        nxt: list[bytes] = []
        for key in side["frontier"]:
            net = side["net"][key]
            for nk, (nnet, mv) in neighbors(net, kinds).items():
                if nk in side["dist"]:
                    continue
                if nnet.r < lo or (hi is not None and nnet.r > hi):
                    continue
                if remaining is not None and \
                        abs(nnet.r - side["target_r"]) > remaining:
                    continue
                if not eff.allows(nnet):
                    continue
                side["dist"][nk] = new_depth
                side["net"][nk] = nnet
                side["parent"][nk] = (key, mv)
                nxt.append(nk)
                if len(side["dist"]) + len(opp["dist"]) > node_cap:
                    raise CapExceeded(f"search exceeded {node_cap} classes")
                if nk in opp["dist"]:
                    cand = new_depth + opp["dist"][nk]
                    if best is None or cand < best:
                        best = cand
                        meet = nk
        side["frontier"] = nxt
        side["depth"] = new_depth

    if best is None:
        bound = max_depth if max_depth is not None else None
        return DistanceResult(None, bound=bound if bound is not None else hi)

    # stitch the witness: walk A-side parents to the meet, then re-anchor the
    # B-side path by searching a same-class move at each step
    chain_a: list[tuple[bytes, Move]] = []
    k = meet
    while k != ka:
        pk, mv = sides["A"]["parent"][k]
        chain_a.append((pk, mv))
        k = pk
    chain_a.reverse()
    moves = [mv for _, mv in chain_a]

    # B-side: meet = q0 <- q1 <- ... <- b in parent pointers; invert stepwise
    chain_b: list[bytes] = []
    k = meet
    while k != kb:
        pk, _ = sides["B"]["parent"][k]
        chain_b.append(pk)
        k = pk
    cur = a
    for mv in moves:
        cur = apply(cur, mv)
    for want in chain_b:
        mv, cur = find_move_to(cur, kinds, want)
        moves.append(mv)
    seq = MoveSequence(a, moves)
    assert cur.key() == kb
    return DistanceResult(best, seq)


# -- enumeration -------------------------------------------------------------

def all_trees(n: int) -> dict[bytes, Network]:
    """Every unrooted binary tree on leaves 1..n, by leaf insertion."""
    from .multigraph import Multigraph
    from .network import validate
    base = Multigraph()
    l1, l2 = base.add_vertex(), base.add_vertex()
    base.add_edge(l1, l2)
    start = validate(base, {l1: 1, l2: 2})
    current = {start.key(): start}
    for lab in range(3, n + 1):
        nxt: dict[bytes, Network] = {}
        for net in current.values():
            for e in sorted(net.g.edges):
                g = net.g.copy()
                x, _, _ = g.subdivide(e)
                leaf = g.add_vertex()
                g.add_edge(x, leaf)
                labels = dict(net.labels)
                labels[leaf] = lab
                t = validate(g, labels)
                nxt[t.key()] = t
        current = nxt
    return current


def enumerate_tier(n: int, r: int) -> dict[bytes, Network]:
    """All tier-(n, r) classes, built bottom-up: tier k is every way of
    adding one edge to tier k-1 (complete because every network with r >= 1
    admits a valid edge removal)."""
    current = all_trees(n)
    for _ in range(r):
        nxt: dict[bytes, Network] = {}
        for net in current.values():
            for key, (nnet, _) in neighbors(net, ("tbr+",)).items():
                if key not in nxt:
                    nxt[key] = nnet
        current = nxt
    return current


def space_from_nodes(nodes: dict[bytes, Network], kinds,
                     c: ClassConstraint, n: int) -> SpaceGraph:
    """Adjacency of the given classes under the kinds, inside the constraint."""
    kinds = kinds_of(kinds)
    sp = SpaceGraph(n=n, constraint=c, kinds=kinds, nodes=dict(nodes))
    for key, net in nodes.items():
        nbrs = set(neighbors(net, kinds)) & nodes.keys()
        sp.adj.setdefault(key, set()).update(nbrs)
        for nk in nbrs:
            sp.adj.setdefault(nk, set()).add(key)
    return sp


def default_seeds(n: int, c: ClassConstraint) -> list[Network]:
    lo, hi = c.tier_bounds()
    if hi is None:
        raise ValueError("enumerate_space needs a tier-bounded constraint")
    seeds = []
    for r in range(lo, hi + 1):
        net = make_sorted_handcuffed_caterpillar(n, r)
        if c.allows(net):
            seeds.append(net)
    return seeds


def enumerate_space(n: int, c: ClassConstraint, kinds,
                    seeds: list[Network] | None = None,
                    node_cap: int = DEFAULT_NODE_CAP) -> SpaceGraph:
    """Closure of the seeds under the kinds inside the constraint."""
    kinds = kinds_of(kinds)
    if seeds is None:
        seeds = default_seeds(n, c)
    lo, hi = c.tier_bounds()
    sp = SpaceGraph(n=n, constraint=c, kinds=kinds)
    frontier: list[Network] = []
    for s in seeds:
        if not c.allows(s):
            raise ConstraintViolated("seed violates the constraint")
        if s.key() not in sp.nodes:
            sp.nodes[s.key()] = s
            sp.adj[s.key()] = set()
            frontier.append(s)
    allow_cache: dict[bytes, bool] = {}
    while frontier:
        net = frontier.pop()
        key = net.key()
        for nk, (nnet, _) in neighbors(net, kinds).items():
            if nnet.r < lo or (hi is not None and nnet.r > hi):
                continue
            ok = allow_cache.get(nk)
            if ok is None:
                ok = c.allows(nnet)
                allow_cache[nk] = ok
            if not ok:
                continue
            sp.adj[key].add(nk)
            sp.adj.setdefault(nk, set()).add(key)
            if nk not in sp.nodes:
                sp.nodes[nk] = nnet
                frontier.append(nnet)
                if len(sp.nodes) > node_cap:
                    raise CapExceeded(f"space exceeded {node_cap} classes")
    return sp


def components(sp: SpaceGraph) -> list[set[bytes]]:
    left = set(sp.nodes)
    out = []
    while left:
        start = next(iter(left))
        comp = {start}
        stack = [start]
        while stack:
            k = stack.pop()
            for nk in sp.adj.get(k, ()):
                if nk not in comp:
                    comp.add(nk)
                    stack.append(nk)
        out.append(comp)
        left -= comp
    return out


def diameter(sp: SpaceGraph, kinds=None) -> int:
    """Exact eccentricity maximum by all-pairs BFS; raises on disconnection."""
    if kinds is not None and kinds_of(kinds) != sp.kinds:
        sp = space_from_nodes(sp.nodes, kinds, sp.constraint, sp.n)
    comps = components(sp)
    if len(comps) > 1:
        raise DisconnectedSpace(comps)
    best = 0
    for src in sp.nodes:
        dist = {src: 0}
        frontier = [src]
        d = 0
        while frontier:
            d += 1
            nxt = []
            for k in frontier:
                for nk in sp.adj[k]:
                    if nk not in dist:
                        dist[nk] = d
                        nxt.append(nk)
            frontier = nxt
        if len(dist) != len(sp.nodes):
            raise DisconnectedSpace(components(sp))
        best = max(best, max(dist.values()))
    return best


def isometry_audit(sub: ClassConstraint, sup: ClassConstraint, kinds,
                   instances, max_depth: int | None = None) -> list[dict]:
    """Distances of each pair inside `sub` vs inside `sup`, with the gap."""
    out = []
    for a, b in instances:
        d_sub = bfs_distance(a, b, kinds, sub, max_depth=max_depth)
        d_sup = bfs_distance(a, b, kinds, sup, max_depth=max_depth)
        gap = None
        if d_sub.distance is not None and d_sup.distance is not None:
            gap = d_sub.distance - d_sup.distance
        out.append({"sub": d_sub.distance, "super": d_sup.distance, "gap": gap,
                    "pair": (a, b)})
    return out
