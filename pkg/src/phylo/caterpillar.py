"""Normalization of any network to the sorted handcuffed caterpillar of its
tier, by tier-preserving nni0 moves only.

Stages: (1) re-embed until tree-based on the smallest displayed tree,
(2) sweep the surplus-edge endpoints to the pendant edges of leaves 1 and 2
(piling them up so each stationary endpoint is passed once), (3) sort the
rungs, (4) merge the hanging subtrees, caterpillarize, and sort the leaves.
Every intermediate is validated; per-stage move counts are returned so the
stage budgets can be asserted by callers.
"""

from __future__ import annotations

from itertools import combinations

from .errors import MoveError, PhyloError
from .network import Network
from .moves import Move, MoveSequence, apply_traced
from .props import displayed_trees, find_embedding, \
    make_sorted_handcuffed_caterpillar

STAGES = ("tree_base", "sweep_u", "sweep_v", "sort_rungs", "caterpillar")


class _State:
    def __init__(self, net: Network, s_edges: set[int]):
        self.cur = net
        self.s = set(s_edges)
        self.moves: list[Move] = []
        self.counts = {k: 0 for k in STAGES}

    def do(self, mv: Move, stage: str) -> None:
        moved_in_s = mv.edge in self.s
        nxt, tr = apply_traced(self.cur, mv)
        for e in tr.removed:
            self.s.discard(e)
        for e1, e2, new, _w in tr.merges:
            in1, in2 = e1 in self.s, e2 in self.s
            if in1 != in2:
                raise PhyloError("embedding and surplus edges merged")
            if in1:
                self.s.discard(e1)
                self.s.discard(e2)
                self.s.add(new)
        for old, ea, eb, _x in tr.splits:
            if old in self.s:
                self.s.discard(old)
                self.s.add(ea)
                self.s.add(eb)
        if moved_in_s:
            self.s.add(tr.added[-1])
        self.cur = nxt
        self.moves.append(mv)
        self.counts[stage] += 1

    # -- spanning-structure queries (recomputed; ids drift between moves) --

    def s_adj(self) -> dict[int, list[tuple[int, int]]]:
        adj: dict[int, list[tuple[int, int]]] = {v: [] for v in self.cur.g.vertices}
        for e in sorted(self.s):
            a, b = self.cur.g.ends(e)
            adj[a].append((b, e))
            adj[b].append((a, e))
        return adj

    def s_vertices(self) -> set[int]:
        out: set[int] = set()
        for e in self.s:
            out.update(self.cur.g.ends(e))
        return out

    def green_edges(self) -> list[int]:
        return [e for e in sorted(self.cur.g.edges) if e not in self.s]

    def green_at(self, v: int) -> int:
        for e in sorted(self.cur.g.edges_at(v)):
            if e not in self.s:
                return e
        raise PhyloError(f"vertex {v} carries no surplus edge")

    def s_edge_between(self, a: int, b: int) -> int:
        for e in sorted(self.cur.g.parallel_ids(a, b)):
            if e in self.s:
                return e
        raise PhyloError(f"no embedded edge between {a} and {b}")

    def s_path(self, src: int, dst: int) -> list[int]:
        adj = self.s_adj()
        parent = {src: None}
        frontier = [src]
        while frontier and dst not in parent:
            nxt = []
            for v in sorted(frontier):
                for w, _e in adj[v]:
                    if w not in parent:
                        parent[w] = v
                        nxt.append(w)
            frontier = nxt
        path = [dst]
        while path[-1] != src:
            path.append(parent[path[-1]])
        path.reverse()
        return path

    def s_dists(self, src: int) -> dict[int, int]:
        adj = self.s_adj()
        dist = {src: 0}
        frontier = [src]
        while frontier:
            nxt = []
            for v in frontier:
                for w, _e in adj[v]:
                    if w not in dist:
                        dist[w] = dist[v] + 1
                        nxt.append(w)
            frontier = nxt
        return dist


# -- stage 1: tree-based on the chosen tree ----------------------------------

def _stage1(st: _State) -> None:
    while True:
        vs = st.s_vertices()
        loose = [v for v in sorted(st.cur.g.vertices) if v not in vs]
        if not loose:
            return
        # (a) re-embed through a triangle: no move needed
        done = False
        for u in loose:
            nbrs = [(e, st.cur.g.other_end(e, u))
                    for e in sorted(st.cur.g.edges_at(u))]
            for (e1, v1), (e2, v2) in combinations(nbrs, 2):
                if v1 == v2 or v1 not in vs or v2 not in vs:
                    continue
                try:
                    s12 = st.s_edge_between(v1, v2)
                except PhyloError:
                    continue
                st.s.discard(s12)
                st.s.update((e1, e2))
                done = True
                break
            if done:
                break
        if done:
            continue
        # (b) pull one loose vertex onto the embedding with an nni0
        for u in loose:
            for axis in sorted(st.cur.g.edges_at(u)):
                v = st.cur.g.other_end(axis, u)
                if v not in vs:
                    continue
                for f in sorted(st.cur.g.edges_at(u)):
                    if f == axis:
                        continue
                    for t in sorted(st.cur.g.edges_at(v)):
                        if t not in st.s or t in (axis, f):
                            continue
                        try:
                            st.do(Move("nni0", axis=axis, at=u, edge=f, t1=t),
                                  "tree_base")
                            done = True
                            break
                        except MoveError:
                            continue
                    if done:
                        break
                if done:
                    break
            if done:
                break
        if not done:
            raise PhyloError("no valid move reduces the loose vertices")


# -- stage 2: sweep surplus endpoints to a pendant path ------------------------

def _pendant_interior(st: _State, leaf_label: int) -> list[int]:
    """Degree-2 embedding vertices between the leaf and its nearest branch
    vertex, ordered from the leaf outward."""
    adj = st.s_adj()
    v = st.cur.leaf_of[leaf_label]
    prev = None
    out = []
    while True:
        nxt = [w for w, _e in adj[v] if w != prev]
        if v != st.cur.leaf_of[leaf_label] and (len(adj[v]) != 2 or v in st.cur.labels):
            return out
        if not nxt:
            return out
        prev, v = v, nxt[0]
        if len(adj[v]) == 2 and v not in st.cur.labels:
            out.append(v)


def _t_edges_postorder(st: _State, root: int) -> list[tuple[int, int]]:
    """Maximal embedded paths between branch/leaf vertices, as (child, parent)
    vertex pairs, deepest child first."""
    adj = st.s_adj()
    depth = {root: 0}
    parent = {root: None}
    frontier = [root]
    while frontier:
        nxt = []
        for v in frontier:
            for w, _e in adj[v]:
                if w not in depth:
                    depth[w] = depth[v] + 1
                    parent[w] = v
                    nxt.append(w)
        frontier = nxt
    tvs = [v for v in adj if len(adj[v]) != 2]
    edges = []
    for v in tvs:
        if v == root:
            continue
        p = parent[v]
        while p != root and len(adj[p]) == 2:
            p = parent[p]
        edges.append((v, p))
    edges.sort(key=lambda cp: (-depth[cp[0]], cp[0]))
    return edges


def _sweep(st: _State, leaf_label: int, movers: set[int], stage: str) -> None:
    """Advance the mover endpoints (piling them up) to the pendant path of
    the given leaf.  `movers` holds current mover vertices; updated in place.
    """
    root = st.cur.leaf_of[leaf_label]
    for child, par in _t_edges_postorder(st, root):
        while True:
            path = st.s_path(child, par)
            inner = path[1:-1]
            mv_idx = [i for i, w in enumerate(path) if w in movers and 0 < i < len(path) - 1]
            if not mv_idx:
                break
            i = mv_idx[0]                      # mover furthest from the parent
            m = path[i]
            ahead = path[i + 1]
            f_m = st.green_at(m)
            if ahead == par:
                if par == root:
                    # pendant path of the target leaf: movers stay put
                    break
                # cross the branch vertex onto its parent-side path
                root_path = st.s_path(par, root)
                target = st.s_edge_between(par, root_path[1])
                mvx = Move("nni0", axis=st.s_edge_between(m, ahead), at=m,
                           edge=f_m, t1=target)
                _, tr = apply_traced(st.cur, mvx)
                st.do(mvx, stage)
                movers.discard(m)
                movers.add(tr.splits[-1][3])
            elif ahead in movers:
                # absorb the mover ahead onto this pile
                f_a = st.green_at(ahead)
                mvx = Move("nni0", axis=st.s_edge_between(ahead, m), at=ahead,
                           edge=f_a, t1=f_m)
                st.do(mvx, stage)
                movers.discard(ahead)
            else:
                # swap past a stationary endpoint
                beyond = path[i + 2]
                mvx = Move("nni0", axis=st.s_edge_between(m, ahead), at=m,
                           edge=f_m, t1=st.s_edge_between(ahead, beyond))
                _, tr = apply_traced(st.cur, mvx)
                st.do(mvx, stage)
                movers.discard(m)
                movers.add(tr.splits[-1][3])
    _unpack(st, leaf_label, movers, stage)


def _unpack(st: _State, leaf_label: int, movers: set[int], stage: str) -> None:
    """Unstack piled surplus edges so each sits directly on the pendant path."""
    while True:
        vs = st.s_vertices()
        loose = [v for v in sorted(st.cur.g.vertices) if v not in vs]
        if not loose:
            return
        progressed = False
        pend = set(_pendant_interior(st, leaf_label))
        for w in loose:
            for e in sorted(st.cur.g.edges_at(w)):
                b = st.cur.g.other_end(e, w)
                if b not in pend:
                    continue
                others = [f for f in sorted(st.cur.g.edges_at(w)) if f != e]
                ok = False
                for f in others:
                    for t in sorted(st.cur.g.edges_at(b)):
                        if t not in st.s or t == e:
                            continue
                        try:
                            mvx = Move("nni0", axis=e, at=w, edge=f, t1=t)
                            _, tr = apply_traced(st.cur, mvx)
                            st.do(mvx, stage)
                            movers.add(tr.splits[-1][3])
                            ok = True
                            break
                        except MoveError:
                            continue
                    if ok:
                        break
                if ok:
                    progressed = True
                    break
            if progressed:
                break
        if not progressed:
            raise PhyloError("cannot unpack the piled surplus edges")


def _stage2(st: _State) -> None:
    g = st.cur.g
    # movers for the first sweep: the endpoint of each surplus edge closer
    # to leaf 1 (ties by vertex id)
    d1 = st.s_dists(st.cur.leaf_of[1])
    movers: set[int] = set()
    for e in st.green_edges():
        p, q = g.ends(e)
        movers.add(p if (d1[p], p) <= (d1[q], q) else q)
    _sweep(st, 1, movers, "sweep_u")
    # second sweep: the other endpoints go to leaf 2
    pend1 = set(_pendant_interior(st, 1))
    d1 = st.s_dists(st.cur.leaf_of[1])
    movers = set()
    for e in st.green_edges():
        p, q = st.cur.g.ends(e)
        inp, inq = p in pend1, q in pend1
        if inp and inq:
            movers.add(p if d1[p] >= d1[q] else q)
        elif inp:
            movers.add(q)
        elif inq:
            movers.add(p)
        else:
            raise PhyloError("a surplus edge missed the first sweep")
    _sweep(st, 2, movers, "sweep_v")


def _stage_sort_rungs(st: _State) -> None:
    while True:
        pend1 = _pendant_interior(st, 1)
        pend2 = _pendant_interior(st, 2)
        pos2 = {v: i for i, v in enumerate(pend2)}
        order = []
        for v in pend1:
            e = st.green_at(v)
            w = st.cur.g.other_end(e, v)
            if w not in pos2:
                raise PhyloError("rung endpoint missing from the second path")
            order.append(pos2[w])
        # want order == [0, 1, ..]: positions counted from each leaf outward
        swapped = False
        for j in range(len(pend2) - 1):
            a, b = pend2[j], pend2[j + 1]
            ia = order.index(pos2[a])
            ib = order.index(pos2[b])
            if ia > ib:
                # a (nearer leaf 2) pairs with a farther rung: swap a and b
                path = st.s_path(a, st.cur.leaf_of[1])
                beyond = path[path.index(b) + 1]
                mvx = Move("nni0", axis=st.s_edge_between(a, b), at=a,
                           edge=st.green_at(a),
                           t1=st.s_edge_between(b, beyond))
                st.do(mvx, "sort_rungs")
                swapped = True
                break
        if not swapped:
            return


# -- stage 3: caterpillar formation and leaf sorting ---------------------------

def _subtree_bfs(st: _State, path: list[int]) -> list[tuple[int, int]]:
    """(vertex, parent) pairs of the subtree hanging off the 1-2 path,
    in breadth-first order from the path."""
    adj = st.s_adj()
    pset = set(path)
    out: list[tuple[int, int]] = []
    frontier: list[tuple[int, int]] = []
    for v in path[1:-1]:
        for w, _e in sorted(adj[v]):
            if w not in pset:
                frontier.append((w, v))
    seen = {w for w, _p in frontier} | pset
    while frontier:
        out.extend(frontier)
        nxt = []
        for v, _p in frontier:
            for w, _e in sorted(adj[v]):
                if w not in seen:
                    seen.add(w)
                    nxt.append((w, v))
        frontier = nxt
    return out


def _branch_vertices_on(st: _State, path: list[int]) -> list[int]:
    adj = st.s_adj()
    out = []
    for v in path[1:-1]:
        if len(adj[v]) == 3:
            out.append(v)
    return out


def _off_path_edge(st: _State, v: int, path_set: set[int]) -> int:
    adj = st.s_adj()
    for w, e in sorted(adj[v]):
        if w not in path_set:
            return e
    raise PhyloError(f"vertex {v} has no hanging subtree")


def _stage3(st: _State) -> None:
    n = st.cur.n
    if n == 2:
        return
    leaf1, leaf2 = st.cur.leaf_of[1], st.cur.leaf_of[2]
    # (i) merge the hanging subtrees into one
    while True:
        path = st.s_path(leaf1, leaf2)
        branch = _branch_vertices_on(st, path)
        if len(branch) <= 1:
            break
        b1, b2 = branch[0], branch[1]
        pset = set(path)
        mvx = Move("nni0", axis=st.s_edge_between(b1, b2), at=b1,
                   edge=_off_path_edge(st, b1, pset),
                   t1=_off_path_edge(st, b2, pset))
        st.do(mvx, "caterpillar")
    # (ii) caterpillarize: while some vertex has two non-leaf children, dive
    # one child subtree down the other's spine to a bottom cherry; no vertex
    # passed on the way changes its violation status, so this terminates
    while True:
        adj = st.s_adj()
        path = st.s_path(leaf1, leaf2)
        pset = set(path)
        order = _subtree_bfs(st, path)
        viol = None
        for v, par in order:
            kids = [(w, e) for w, e in sorted(adj[v]) if w != par]
            internal = [(w, e) for w, e in kids if w not in st.cur.labels]
            if len(internal) == 2:
                viol = (v, internal)
                break
        if viol is None:
            break
        v, internal = viol
        (wa, ea), (wb, eb) = internal
        cur_v, carry = v, ea
        while True:
            adj = st.s_adj()
            kids_b = [(w, e) for w, e in sorted(adj[wb]) if w != cur_v]
            internal_b = [(w, e) for w, e in kids_b if w not in st.cur.labels]
            nxt_w, tgt = (internal_b[0] if internal_b else kids_b[0])
            mvx = Move("nni0", axis=st.s_edge_between(cur_v, wb), at=cur_v,
                       edge=carry, t1=tgt)
            _, tr = apply_traced(st.cur, mvx)
            st.do(mvx, "caterpillar")
            if not internal_b:
                break
            cur_v = tr.splits[-1][3]
            carry = tr.added[-1]
            wb = nxt_w
    # (iii) sort the leaves along the spine; the end-cherry pair is listed
    # in label order, so plain adjacent-inversion bubbling terminates
    while True:
        labels = [lab for _v, lab in _leaf_sequence(st)]
        if labels == sorted(labels):
            return
        j = next(i for i in range(len(labels) - 2)
                 if labels[i] > labels[i + 1])
        _swap_leaves(st, j)


def _leaf_sequence(st: _State) -> list[tuple[int, int]]:
    """(spine vertex, label) pairs for leaves 3..n, walking from the cherry
    vertex; the final spine vertex contributes its two leaves in label order."""
    leaf1, leaf2 = st.cur.leaf_of[1], st.cur.leaf_of[2]
    path = st.s_path(leaf1, leaf2)
    branch = _branch_vertices_on(st, path)
    adj = st.s_adj()
    if not branch:
        # n == 3: single extra leaf hangs off the 1-2 path
        for v in path[1:-1]:
            for w, _e in adj[v]:
                if w in st.cur.labels and st.cur.labels[w] not in (1, 2):
                    return [(v, st.cur.labels[w])]
        raise PhyloError("missing the third leaf")
    c = branch[0]
    pset = set(path)
    prev = c
    cur = [w for w, _e in adj[c] if w not in pset][0]
    if cur in st.cur.labels:      # the whole subtree is one leaf (n == 3)
        return [(c, st.cur.labels[cur])]
    out: list[tuple[int, int]] = []
    while True:
        kids = [(w, e) for w, e in sorted(adj[cur]) if w != prev]
        leaf_kids = [w for w, _e in kids if w in st.cur.labels]
        internal = [w for w, _e in kids if w not in st.cur.labels]
        if len(leaf_kids) == 2:
            labs = sorted(st.cur.labels[w] for w in leaf_kids)
            out.append((cur, labs[0]))
            out.append((cur, labs[1]))
            return out
        if len(leaf_kids) == 1 and len(internal) == 1:
            out.append((cur, st.cur.labels[leaf_kids[0]]))
            prev, cur = cur, internal[0]
            continue
        raise PhyloError("spine is not a caterpillar")


def _swap_leaves(st: _State, j: int) -> None:
    """Swap the leaves at spine positions j and j+1 (0-based along the
    sequence from the cherry vertex)."""
    seq = _leaf_sequence(st)
    adj = st.s_adj()
    vj, labj = seq[j]
    vj1, labj1 = seq[j + 1]
    leaf_j = st.cur.leaf_of[labj]
    edge_j = st.s_edge_between(vj, leaf_j)
    if vj1 == vj:
        raise PhyloError("cannot swap within the end cherry")
    if j + 2 < len(seq) and seq[j + 2][0] != vj1:
        # both single slots: send leaf j beyond the next spine vertex
        beyond = seq[j + 2][0]
        tgt = st.s_edge_between(vj1, beyond)
    else:
        # the next slot is the end cherry (or shares its vertex): land on the
        # other cherry leaf's pendant edge
        other = [lab for v, lab in seq[j + 1:] if v == vj1 and lab != labj1]
        if other:
            tgt = st.s_edge_between(vj1, st.cur.leaf_of[other[0]])
        else:
            nxt = [w for w, _e in sorted(adj[vj1])
                   if w != vj and w not in st.cur.labels]
            tgt = st.s_edge_between(vj1, nxt[0])
    mvx = Move("nni0", axis=st.s_edge_between(vj, vj1), at=vj,
               edge=edge_j, t1=tgt)
    st.do(mvx, "caterpillar")


def to_sorted_caterpillar(net: Network) -> tuple[MoveSequence, dict[str, int]]:
    """An nni0 sequence from net to its tier's sorted handcuffed caterpillar.

    Returns the sequence and per-stage move counts.
    """
    n, r = net.n, net.r
    target = make_sorted_handcuffed_caterpillar(n, r)
    if net.key() == target.key():
        return MoveSequence(net, []), {k: 0 for k in STAGES}
    if r > 0:
        trees = displayed_trees(net)
        base = min(trees.values(), key=lambda t: t.key())
        emb = find_embedding(net, base)
        if emb is None:
            raise PhyloError("chosen base tree has no embedding")
        covered: set[int] = set()
        for p in emb[1].values():
            covered.update(p)
        st = _State(net, covered)
        _stage1(st)
        _stage2(st)
        _stage_sort_rungs(st)
    else:
        st = _State(net, set(net.g.edges))
    _stage3(st)
    if st.cur.key() != target.key():
        raise PhyloError("pipeline did not reach the sorted caterpillar")
    for mv in st.moves:
        if mv.kind != "nni0":
            raise PhyloError("pipeline used a non-nni0 move")
    return MoveSequence(net, st.moves), dict(st.counts)
