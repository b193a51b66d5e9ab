"""Constructive sequence transformations.

Substituting one operation kind for another, reordering and merging moves
within a sequence, descending from a network to a displayed tree, and the
normalization pipeline that turns any network into the sorted handcuffed
caterpillar of its tier.  Every transformation re-validates each produced
intermediate and checks endpoint classes, failing loudly on any mismatch.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil, log2

from .errors import MoveError, MovesCancel, NotApplicable, NotDisplayed, PhyloError
from .network import Network
from .moves import (Move, MoveSequence, PLUS_KINDS, MINUS_KINDS, ZERO_KINDS,
                    apply, apply_traced, find_move_to, pruned_graph,
                    removed_graph, _external_prune_end, _merge_of)
from .props import find_embedding


@dataclass
class RewriteReport:
    input: MoveSequence
    output: MoveSequence
    tags: list[str] = field(default_factory=list)
    params: dict = field(default_factory=dict)


def _clog2(x: int) -> int:
    return ceil(log2(x)) if x > 1 else 0


def _edge_by_ends(g, a: int, b: int) -> int:
    ids = g.parallel_ids(a, b)
    if not ids:
        raise PhyloError(f"no edge between {a} and {b}")
    return ids[0]


# -- tbr0 -> 1..2 pr0 ---------------------------------------------------------

def _position_candidates(g, a: int, b: int, via: int | None = None) -> list[int]:
    """Edge ids of `g` covering the position 'between a and b': the edge
    itself, or the two edges through `via` when {a, b} is subdivided there."""
    out = list(g.parallel_ids(a, b)[:1]) if g.has_vertex(a) and g.has_vertex(b) else []
    if via is not None and g.has_vertex(via):
        for w in (a, b):
            if g.has_vertex(w):
                out.extend(g.parallel_ids(w, via)[:1])
    return list(dict.fromkeys(out))


def tbr0_to_pr(net: Network, m: Move) -> MoveSequence:
    """Replace one tbr0 with one or two pr0 moves with the same endpoints."""
    if m.kind != "tbr0":
        raise NotApplicable("need a tbr0 move")
    want = apply(net, m).key()
    if m.t2 is None:
        at = _external_prune_end(net, m.edge)
        seq = MoveSequence(net, [Move("pr0", edge=m.edge, at=at, t1=m.t1)])
        assert seq.end.key() == want
        return seq
    e = m.edge
    u, v = net.g.ends(e)
    G, trG = removed_graph(net, e)
    pos = {w: trG.resolve(_merge_of(trG, w)) for w in (u, v)}

    def targets_in(graph, t_G: int, kept: int | None) -> list[int]:
        a, b = G.ends(t_G)
        return _position_candidates(graph, a, b, via=kept)

    # single pr0: one endpoint regrafts to its own old position
    for t_stay, t_move, stay, move_end in (
            (m.t1, m.t2, u, v), (m.t2, m.t1, u, v),
            (m.t1, m.t2, v, u), (m.t2, m.t1, v, u)):
        if t_stay != pos[stay]:
            continue
        P, _, _ = pruned_graph(net, e, move_end)
        for t in targets_in(P, t_move, kept=stay):
            mv = Move("pr0", edge=e, at=move_end, t1=t)
            try:
                out = apply(net, mv)
            except MoveError:
                continue
            if out.key() == want:
                return MoveSequence(net, [mv])

    # two pr0: move one end, then the other; try both assignments/orders
    for t_first, t_second in ((m.t1, m.t2), (m.t2, m.t1)):
        for first, second in ((u, v), (v, u)):
            P1, _, _ = pruned_graph(net, e, first)
            for t1 in targets_in(P1, t_first, kept=second):
                mv1 = Move("pr0", edge=e, at=first, t1=t1)
                try:
                    mid, tr1 = apply_traced(net, mv1)
                except MoveError:
                    continue
                e2 = tr1.added[-1]
                P2, _, _ = pruned_graph(mid, e2, second)
                if t_second == t_first:
                    split = tr1.splits[-1]
                    cands = [h for h in (split[1], split[2]) if P2.has_edge(h)]
                else:
                    cands = targets_in(P2, t_second, kept=None)
                for t2 in cands:
                    mv2 = Move("pr0", edge=e2, at=second, t1=t2)
                    try:
                        out = apply(mid, mv2)
                    except MoveError:
                        continue
                    if out.key() == want:
                        return MoveSequence(net, [mv1, mv2])
    raise PhyloError("tbr0 admits no 1- or 2-step pr0 replacement")


# -- pr0 -> nni0 sequence ------------------------------------------------------

def _bfs_path(g, src: int, skip_edge: int, goals: set[int]):
    """Shortest path from src to the nearest goal, avoiding one edge.
    Deterministic: vertices and parent edges chosen in ascending order.
    Returns (vertex list, edge list)."""
    dist = {src: 0}
    parent: dict[int, tuple[int, int]] = {}
    frontier = [src]
    while frontier:
        frontier.sort()
        nxt = []
        for v in frontier:
            for f in sorted(g.edges_at(v)):
                if f == skip_edge:
                    continue
                w = g.other_end(f, v)
                if w not in dist:
                    dist[w] = dist[v] + 1
                    parent[w] = (v, f)
                    nxt.append(w)
        hit = sorted(w for w in goals if w in dist)
        if hit:
            best = hit[0]
            vs, es = [best], []
            while vs[-1] != src:
                pv, pe = parent[vs[-1]]
                es.append(pe)
                vs.append(pv)
            vs.reverse()
            es.reverse()
            return vs, es
        frontier = nxt
    raise PhyloError("no path found")


def _walk_moved_edge(cur: Network, f: int, path_v: list[int],
                     path_e: list[int], final_target: int,
                     moves: list[Move]) -> tuple[Network, int]:
    """Slide edge f's endpoint path_v[0] along the path with nni0 moves,
    ending with a regraft onto final_target (incident to path_v[-1]).
    Returns (network, id of the moved edge)."""
    while len(path_e) > 1:
        mv = Move("nni0", axis=path_e[0], at=path_v[0], edge=f, t1=path_e[1])
        cur, tr = apply_traced(cur, mv)
        moves.append(mv)
        old, ea, eb, x = tr.splits[-1]
        f = tr.added[-1]
        nxt_half = ea if path_v[2] in cur.g.ends(ea) else eb
        path_v = [x] + path_v[2:]
        path_e = [nxt_half] + path_e[2:]
    mv = Move("nni0", axis=path_e[0], at=path_v[0], edge=f, t1=final_target)
    cur, tr = apply_traced(cur, mv)
    moves.append(mv)
    return cur, tr.added[-1]


def pr0_to_nni(net: Network, m: Move) -> MoveSequence:
    """Replace one pr0 with an nni0 sequence that only moves its edge."""
    if m.kind != "pr0":
        raise NotApplicable("need a pr0 move")
    res = apply(net, m)
    want = res.key()
    P, trP, far = pruned_graph(net, m.edge, m.at)
    u, v, f = m.at, far, m.edge
    merged_u = trP.resolve(_merge_of(trP, u))
    if m.t1 == merged_u:
        if want != net.key():
            raise PhyloError("regraft onto own position changed the class")
        return MoveSequence(net, [])
    t = m.t1                       # survived the prune: a net edge
    x, y = net.g.ends(t)
    path_v, path_e = _bfs_path(net.g, u, f, {x, y})
    # the closer endpoint of t is reached; the path never passes the other
    moves: list[Move] = []
    cur = net
    if v in path_v[1:-1]:
        i = path_v.index(v)
        # phase 1: slide the far endpoint v down the path tail to the target
        cur, f2 = _walk_moved_edge(cur, f, path_v[i:], path_e[i:], t, moves)
        # v's old spot is the merge created by the first phase-1 move
        _, trf = apply_traced(net, moves[0])
        home = trf.resolve(_merge_of(trf, v))
        if i > 1:
            # phase 2: slide the u endpoint along the prefix onto that spot
            cur, f2 = _walk_moved_edge(cur, f2, path_v[:i], path_e[:i - 1],
                                       home, moves)
        # for i == 1 the edge already sits at v's old position
    else:
        cur, _ = _walk_moved_edge(cur, f, path_v, path_e, t, moves)
    seq = MoveSequence(net, moves)
    if seq.end.key() != want:
        raise PhyloError("nni0 replacement reached a different class")
    return seq


def prminus_to_nni(net: Network, m: Move) -> MoveSequence:
    """Replace one pr- with nni0 moves followed by one nni-."""
    if m.kind != "pr-":
        raise NotApplicable("need a pr- move")
    if net.n < 3:
        raise NotApplicable("needs at least three leaves")
    want = apply(net, m).key()
    e = m.edge
    u, v = net.g.ends(e)
    from .moves import _triangle_apex
    if _triangle_apex(net.g, e):
        seq = MoveSequence(net, [Move("nni-", edge=e)])
        assert seq.end.key() == want
        return seq
    if len(net.g.parallel_ids(u, v)) > 1:
        # slide one endpoint off the parallel pair to form a triangle
        for anchor, other in ((u, v), (v, u)):
            third = [h for h in sorted(net.g.edges_at(anchor))
                     if net.g.other_end(h, anchor) != other]
            if not third:
                continue
            h = third[0]
            a = net.g.other_end(h, anchor)
            for tgt in sorted(net.g.edges_at(a)):
                if tgt == h:
                    continue
                mv1 = Move("nni0", axis=h, at=anchor, edge=e, t1=tgt)
                try:
                    mid, tr = apply_traced(net, mv1)
                except MoveError:
                    continue
                mv2 = Move("nni-", edge=tr.added[-1])
                try:
                    out = apply(mid, mv2)
                except MoveError:
                    continue
                if out.key() == want:
                    return MoveSequence(net, [mv1, mv2])
        raise PhyloError("no valid nni0 turns the parallel pair into a triangle")
    # general case: slide u next to v, then remove the triangle edge
    path_v, path_e = _bfs_path(net.g, u, e, {v})
    assert len(path_e) >= 2
    t_edge = path_e[-2]
    inner = Move("pr0", edge=e, at=u, t1=t_edge)
    seq0 = pr0_to_nni(net, inner)
    cur = seq0.end
    moves = list(seq0.moves)
    assert moves, "triangle case should have been caught earlier"
    _, tr_last = apply_traced(seq0.networks()[-2], moves[-1])
    final_e = tr_last.added[-1]
    mv_minus = Move("nni-", edge=final_e)
    out = apply(cur, mv_minus)
    if out.key() != want:
        raise PhyloError("nni- after the slide reached a different class")
    moves.append(mv_minus)
    return MoveSequence(net, moves)


# -- merging and swapping ------------------------------------------------------

def _as_tbr_kind(kind: str) -> str:
    if kind in PLUS_KINDS:
        return "tbr+"
    if kind in MINUS_KINDS:
        return "tbr-"
    return "tbr0"


def merge_plus_minus(seq: MoveSequence) -> MoveSequence:
    """Combine an adjacent +/- pair (either order) into one tbr0.

    If the pair cancels (the addition is exactly undone) the result is the
    empty sequence.
    """
    if len(seq.moves) != 2:
        raise NotApplicable("need exactly two moves")
    k1, k2 = (_as_tbr_kind(m.kind) for m in seq.moves)
    if {k1, k2} != {"tbr+", "tbr-"}:
        raise NotApplicable("need one + and one - move")
    nets = seq.networks()
    m0, m2 = nets[0], nets[2]
    assert m0.r == m2.r
    if m0.key() == m2.key():
        return MoveSequence(m0, [])
    mv1, mv2 = seq.moves
    if k1 == "tbr-":
        # remove g then add at (t1, t2): ids already live in remove(m0, g)
        cand = Move("tbr0", edge=mv1.edge, t1=min(mv2.t1, mv2.t2),
                    t2=max(mv2.t1, mv2.t2))
        out = apply(m0, cand)
        if out.key() != m2.key():
            raise PhyloError("merged tbr0 reached a different class")
        return MoveSequence(m0, [cand])
    # add f at (t1, t2), then remove g
    _, tr1 = apply_traced(m0, mv1)
    g = mv2.edge
    halves: dict[int, int] = {}
    for old, ea, eb, _x in tr1.splits:
        root = halves.get(old, old)    # a split of a half (t1 == t2 case)
        halves[ea] = root
        halves[eb] = root
    ghat = halves.get(g, g)
    G0, trG0 = removed_graph(m0, ghat)
    cands: list[Move] = []
    if g not in halves:
        # the added edge's positions survive; map them through the removal
        a = trG0.resolve(mv1.t1)
        b = trG0.resolve(mv1.t2)
        cands.append(Move("tbr0", edge=ghat, t1=min(a, b), t2=max(a, b)))
    else:
        # the minus removed a piece of a subdivided edge: one new endpoint
        # returns to a suppressed endpoint's home, the other keeps its spot
        kept = mv1.t2 if halves[g] == mv1.t1 else mv1.t1
        if kept != ghat:
            kept_pos = trG0.resolve(kept)
            for end_vertex in m0.g.ends(ghat):
                try:
                    home = trG0.resolve(_merge_of(trG0, end_vertex))
                except MoveError:
                    continue
                cands.append(Move("tbr0", edge=ghat, t1=min(home, kept_pos),
                                  t2=max(home, kept_pos)))
    for cand in cands:
        try:
            out = apply(m0, cand)
        except MoveError:
            continue
        if out.key() == m2.key():
            return MoveSequence(m0, [cand])
    # fallback: all tbr0 payloads moving ghat (both forms), then any edge
    from .moves import move_payloads
    for restrict in (True, False):
        for cand in move_payloads(m0, "tbr0"):
            if restrict and cand.edge != ghat:
                continue
            try:
                out = apply(m0, cand)
            except MoveError:
                continue
            if out.key() == m2.key():
                return MoveSequence(m0, [cand])
    raise PhyloError("no tbr0 matches the +/- pair")


def _decompose_zero(net: Network, m: Move) -> tuple[Move, "..."]:
    """Split a zero move into (tbr+, tbr-): first add the moved edge at its
    new position, then remove the original copy."""
    k = m.kind
    if k == "tbr0" and m.t2 is not None:
        G, trG = removed_graph(net, m.edge)

        def preimage(t):
            for e1, e2, newe, _w in trG.merges:
                if t == newe:
                    return preimage(e1)
            return t
        p1, p2 = preimage(m.t1), preimage(m.t2)
        plus = Move("tbr+", t1=min(p1, p2), t2=max(p1, p2))
        mid, trp = apply_traced(net, plus)
        minus = Move("tbr-", edge=m.edge)
        return plus, minus, mid
    # single-end moves (pr0 / nni0 / external tbr0): add a bridge from the
    # target to a point on the moved edge, then remove the old-side half
    if k == "nni0":
        edge, at, t = m.edge, m.at, m.t1
        P, trP, _ = pruned_graph(net, edge, at)
        t_pre = t
    else:
        edge = m.edge
        at = m.at if k == "pr0" else _external_prune_end(net, m.edge)
        P, trP, _ = pruned_graph(net, edge, at)
        t_pre = m.t1
        for e1, e2, newe, _w in trP.merges:
            if t_pre == newe:
                t_pre = min(e1, e2)
                break
    plus = Move("tbr+", t1=min(t_pre, edge), t2=max(t_pre, edge))
    mid, trp = apply_traced(net, plus)
    # the half of `edge` on the prune side must go
    split_of_edge = [s for s in trp.splits if s[0] == edge]
    assert split_of_edge
    _, ea, eb, _x = split_of_edge[-1]
    half = ea if at in mid.g.ends(ea) else eb
    minus = Move("tbr-", edge=half)
    return plus, minus, mid


def swap_zero_plus(seq: MoveSequence) -> MoveSequence:
    """Turn (zero, plus) into (plus, zero) with the same endpoints."""
    if len(seq.moves) != 2:
        raise NotApplicable("need exactly two moves")
    mz, mp = seq.moves
    if _as_tbr_kind(mz.kind) != "tbr0" or _as_tbr_kind(mp.kind) != "tbr+":
        raise NotApplicable("need a zero move followed by a plus move")
    nets = seq.networks()
    n0, n2 = nets[0], nets[2]
    plus, minus, mid = _decompose_zero(n0, mz)
    after_minus = apply(mid, minus)
    assert after_minus.key() == nets[1].key()
    mp2, _ = find_move_to(after_minus, ("tbr+",), n2.key())
    merged = merge_plus_minus(MoveSequence(mid, [minus, mp2]))
    out = MoveSequence(n0, [plus] + merged.moves)
    assert out.end.key() == n2.key()
    return out


def swap_plus_zero_for_tree(seq: MoveSequence) -> MoveSequence:
    """Turn (plus, zero) from a tree into (zero, plus) via a tree.

    Needs: start a tree, end at tier 1, and the sequence shortest (length-2
    distance); otherwise NotApplicable.
    """
    if len(seq.moves) != 2:
        raise NotApplicable("need exactly two moves")
    mp, mz = seq.moves
    if _as_tbr_kind(mp.kind) != "tbr+" or _as_tbr_kind(mz.kind) != "tbr0":
        raise NotApplicable("need a plus move followed by a zero move")
    nets = seq.networks()
    t0, n1, n2 = nets
    if t0.r != 0 or n2.r != 1:
        raise NotApplicable("need a tree start and a tier-1 end")
    # shortest check: n2 must not be a single tbr+ away from t0
    from .moves import neighbor_keys
    if n2.key() in neighbor_keys(t0, ("tbr+",)) or n2.key() == t0.key():
        raise NotApplicable("the sequence is not shortest")
    _, trp = apply_traced(t0, mp)
    f_added = trp.added[-1]
    bridges1 = n1.g.bridges()
    zero_edge = mz.edge
    if zero_edge == f_added:
        raise NotApplicable("the zero move moves the just-added edge")

    if zero_edge not in bridges1:
        # cycle case: merge (plus, remove zero_edge) then re-add at the
        # zero move's own targets
        merged = merge_plus_minus(MoveSequence(t0, [mp, Move("tbr-", edge=zero_edge)]))
        t_mid = merged.end
        mplus, out_net = find_move_to(t_mid, ("tbr+",), n2.key())
        out = MoveSequence(t0, merged.moves + [mplus])
        assert out.end.key() == n2.key()
        return out

    # cut-edge case: remove the descendant of the added edge from n2 to get
    # a tree, connect t0 to it by a tbr0 moving the zero edge's preimage
    _, trz = apply_traced(n1, mz)
    fbar_cands = [trz.resolve(f_added)]
    for old, ea, eb, _x in trz.splits:
        if old == f_added:
            fbar_cands = [ea, eb]
    halves1 = {}
    for old, ea, eb, _x in trp.splits:
        halves1[ea] = old
        halves1[eb] = old
    ebar = halves1.get(zero_edge, zero_edge)
    for fbar in fbar_cands:
        if not n2.g.has_edge(fbar) or fbar in n2.g.bridges():
            continue
        try:
            tprime, _ = apply_traced(n2, Move("tbr-", edge=fbar))
        except MoveError:
            continue
        # find the tbr0 on t0 moving ebar that reaches tprime
        try:
            from .moves import move_payloads
            found = None
            for cand in move_payloads(t0, "tbr0"):
                if cand.edge != ebar:
                    continue
                try:
                    res = apply(t0, cand)
                except MoveError:
                    continue
                if res.key() == tprime.key():
                    found = (cand, res)
                    break
            if found is None:
                continue
            cand, res = found
            mplus, out_net = find_move_to(res, ("tbr+",), n2.key())
            out = MoveSequence(t0, [cand, mplus])
            assert out.end.key() == n2.key()
            return out
        except MoveError:
            continue
    raise PhyloError("no (zero, plus) replacement found for the tree case")


def descend_to_tree(net: Network, tree: Network) -> MoveSequence:
    """Exactly r edge removals from net down to the displayed tree."""
    emb = find_embedding(net, tree)
    if emb is None:
        raise NotDisplayed("the tree is not displayed by the network")
    _, paths = emb
    covered: set[int] = set()
    for p in paths.values():
        covered.update(p)
    green = set(net.g.edges) - covered
    cur = net
    moves: list[Move] = []
    for _ in range(net.r):
        for e in _green_candidates(cur, green):
            try:
                nxt, tr = apply_traced(cur, Move("tbr-", edge=e))
            except MoveError:
                continue
            moves.append(Move("tbr-", edge=e))
            green.discard(e)
            for e1, e2, newe, _w in tr.merges:
                g1, g2 = e1 in green, e2 in green
                assert g1 == g2, "a removal merged a covered and a green edge"
                if g1:
                    green.discard(e1)
                    green.discard(e2)
                    green.add(newe)
            cur = nxt
            break
        else:
            raise PhyloError("no green edge is removable; embedding broken")
    assert not green
    if cur.key() != tree.key():
        raise PhyloError("descent ended at a different tree")
    return MoveSequence(net, moves)


def _green_candidates(net: Network, green: set[int]) -> list[int]:
    """Green edges ordered by the proof's cases: singleton components, then
    leaf edges of acyclic components, then everything else."""
    g = net.g
    gdeg: dict[int, int] = {}
    for e in green:
        for v in g.ends(e):
            gdeg[v] = gdeg.get(v, 0) + 1
    singles, leafy, rest = [], [], []
    for e in sorted(green):
        a, b = g.ends(e)
        if gdeg[a] == 1 and gdeg[b] == 1:
            singles.append(e)
        elif gdeg[a] == 1 or gdeg[b] == 1:
            leafy.append(e)
        else:
            rest.append(e)
    return singles + leafy + rest


def normalize_order(seq: MoveSequence) -> MoveSequence:
    """Rewrite so no minus move precedes a plus move; never longer.

    Works on an abstract view (move kind, result class) and re-anchors
    payloads by class search, since splicing changes the intermediate
    networks' internal ids.
    """
    abstract: list[tuple[str, bytes]] = [
        (m.kind, net.key())
        for m, net in zip(seq.moves, seq.networks()[1:])
    ]

    def concretize(upto: int) -> tuple[Network, list[Move]]:
        cur = seq.start
        moves: list[Move] = []
        for kind, key in abstract[:upto]:
            mv, cur = find_move_to(cur, (kind,), key)
            moves.append(mv)
        return cur, moves

    while True:
        kinds = [_as_tbr_kind(k) for k, _ in abstract]
        target = None
        for j, k in enumerate(kinds):
            if k == "tbr+" and "tbr-" in kinds[:j]:
                target = j
                break
        if target is None:
            break
        i = max(idx for idx in range(target) if kinds[idx] == "tbr-")
        while target > i + 1:
            # swap the zero at target-1 with the plus at target
            anchor, _ = concretize(target - 1)
            mv_z, mid = find_move_to(anchor, (abstract[target - 1][0],),
                                     abstract[target - 1][1])
            mv_p, _ = find_move_to(mid, (abstract[target][0],),
                                   abstract[target][1])
            swapped = swap_zero_plus(MoveSequence(anchor, [mv_z, mv_p]))
            nets = swapped.networks()
            abstract[target - 1:target + 1] = [
                (m.kind, n.key()) for m, n in zip(swapped.moves, nets[1:])
            ]
            target -= 1
            if len(swapped.moves) == 1:   # swap collapsed (vacuous zero)
                break
        kinds = [_as_tbr_kind(k) for k, _ in abstract]
        if i + 1 < len(kinds) and kinds[i] == "tbr-" and kinds[i + 1] == "tbr+":
            anchor, _ = concretize(i)
            mv_m, mid = find_move_to(anchor, (abstract[i][0],), abstract[i][1])
            mv_p, _ = find_move_to(mid, (abstract[i + 1][0],), abstract[i + 1][1])
            merged = merge_plus_minus(MoveSequence(anchor, [mv_m, mv_p]))
            nets = merged.networks()
            abstract[i:i + 2] = [
                (m.kind, n.key()) for m, n in zip(merged.moves, nets[1:])
            ]
    _, moves = concretize(len(abstract))
    out = MoveSequence(seq.start, moves)
    assert out.end.key() == seq.end.key()
    assert len(out) <= len(seq)
    return out
