"""NNI, PR, and TBR moves: payloads, application, inversion, enumeration.

Payload conventions (edge ids refer to the graph named):

* ``tbr0`` internal: ``edge`` internal edge of N; ``t1``/``t2`` edges of
  ``remove(N, edge)``; ``t1 == t2`` places both new vertices on that edge
  (a parallel pair).
* ``tbr0`` external: ``edge`` incident to a leaf; pruned at its non-leaf
  end; ``t1`` an edge of the pruned graph, ``t2 is None``.
* ``tbr+`` / ``pr+``: ``t1``/``t2`` edges of N (``t1 == t2`` allowed).
* ``tbr-`` / ``pr-``: ``edge`` internal non-bridge edge of N.
* ``pr0``: prune ``edge`` at endpoint ``at`` (non-leaf); ``t1`` an edge of
  the pruned graph.
* ``nni0``: ``axis`` internal edge, ``at`` one of its endpoints, ``edge``
  the moved edge (incident to ``at``, != axis), ``t1`` the target (an edge
  of N incident to the other axis endpoint, != axis, != edge).
* ``nni+``: ``t1``/``t2`` two distinct adjacent edges of N.
* ``nni-``: ``edge`` must lie on a triangle.

Every application fully re-validates the result, so a Move either yields a
proper network or raises a typed MoveError.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from itertools import combinations

from .errors import (MoveError, NotAdjacent, NotATriangle, ValidationError,
                     Improper, Disconnected, WouldBeImproper, WouldCreateLoop,
                     WouldDisconnect)
from .multigraph import Multigraph
from .network import Network, validate

ZERO_KINDS = ("tbr0", "pr0", "nni0")
PLUS_KINDS = ("tbr+", "pr+", "nni+")
MINUS_KINDS = ("tbr-", "pr-", "nni-")
ALL_KINDS = ("nni0", "nni+", "nni-", "pr0", "pr+", "pr-", "tbr0", "tbr+", "tbr-")

KIND_SETS = {
    "nni0": ("nni0",),
    "nni": ("nni0", "nni+", "nni-"),
    "pr0": ("pr0",),
    "pr": ("pr0", "pr+", "pr-"),
    "tbr0": ("tbr0",),
    "tbr": ("tbr0", "tbr+", "tbr-"),
}

INVERSE_KIND = {
    "tbr0": "tbr0", "tbr+": "tbr-", "tbr-": "tbr+",
    "pr0": "pr0", "pr+": "pr-", "pr-": "pr+",
    "nni0": "nni0", "nni+": "nni-", "nni-": "nni+",
}


def kinds_of(spec) -> tuple[str, ...]:
    """Normalise a kind-set spec ('tbr', 'nni0', or an iterable of kinds)."""
    if isinstance(spec, str):
        key = spec.lower()
        if key in KIND_SETS:
            return KIND_SETS[key]
        if key in ALL_KINDS:
            return (key,)
        raise ValueError(f"unknown kind {spec!r}")
    out = []
    for k in spec:
        out.extend(kinds_of(k))
    return tuple(dict.fromkeys(out))


@dataclass(frozen=True)
class Move:
    kind: str
    edge: int | None = None
    at: int | None = None
    axis: int | None = None
    t1: int | None = None
    t2: int | None = None

    def to_json(self) -> dict:
        d = {"kind": self.kind}
        for f in ("edge", "at", "axis", "t1", "t2"):
            v = getattr(self, f)
            if v is not None:
                d[f] = v
        return d

    @staticmethod
    def from_json(d: dict) -> "Move":
        return Move(kind=d["kind"], edge=d.get("edge"), at=d.get("at"),
                    axis=d.get("axis"), t1=d.get("t1"), t2=d.get("t2"))


@dataclass
class MoveSequence:
    """A start network plus moves; replaying yields only valid networks."""

    start: Network
    moves: list[Move]

    def networks(self) -> list[Network]:
        nets = [self.start]
        for m in self.moves:
            nets.append(apply(nets[-1], m))
        return nets

    @property
    def end(self) -> Network:
        return self.networks()[-1]

    def __len__(self) -> int:
        return len(self.moves)

    def kinds(self) -> list[str]:
        return [m.kind for m in self.moves]

    def to_json(self) -> dict:
        from .upnf import serialize
        return {"start": serialize(self.start),
                "moves": [m.to_json() for m in self.moves]}


class Trace:
    """Bookkeeping of one application: merges, splits, and new edges."""

    __slots__ = ("removed", "merges", "splits", "added")

    def __init__(self):
        self.removed: list[int] = []
        self.merges: list[tuple[int, int, int, int]] = []   # (e1, e2, new, vertex)
        self.splits: list[tuple[int, int, int, int]] = []   # (old, ea, eb, new vertex)
        self.added: list[int] = []

    def resolve(self, e: int) -> int:
        """Follow merges forward to the surviving descendant edge id."""
        changed = True
        while changed:
            changed = False
            for e1, e2, new, _ in self.merges:
                if e in (e1, e2):
                    e = new
                    changed = True
        return e


# -- suboperations on a working copy ----------------------------------------

def _suppress_if_needed(g: Multigraph, v: int, labels: dict, tr: Trace) -> None:
    if v in labels or not g.has_vertex(v):
        return
    if g.degree(v) == 2:
        e1, e2 = g.edges_at(v)
        new = g.suppress(v)  # raises WouldCreateLoop
        tr.merges.append((e1, e2, new, v))


def _remove_edge_op(g: Multigraph, e: int, labels: dict, tr: Trace) -> None:
    u, v = g.ends(e)
    g.remove_edge(e)
    tr.removed.append(e)
    for w in sorted({u, v}):
        _suppress_if_needed(g, w, labels, tr)


def _prune_op(g: Multigraph, e: int, at: int, labels: dict, tr: Trace) -> int:
    """Detach e at `at` (suppressing it); returns the kept far endpoint."""
    far = g.other_end(e, at)
    g.remove_edge(e)
    tr.removed.append(e)
    _suppress_if_needed(g, at, labels, tr)
    return far


def _subdivide_op(g: Multigraph, e: int, tr: Trace) -> int:
    x, ea, eb = g.subdivide(e)
    tr.splits.append((e, ea, eb, x))
    return x


def _regraft_op(g: Multigraph, t: int, far: int, tr: Trace) -> int:
    x = _subdivide_op(g, t, tr)
    new = g.add_edge(x, far)
    tr.added.append(new)
    return new


def removed_graph(net: Network, e: int) -> tuple[Multigraph, Trace]:
    """The graph after the `remove` suboperation on edge e."""
    g = net.g.copy()
    tr = Trace()
    _remove_edge_op(g, e, net.labels, tr)
    return g, tr


def pruned_graph(net: Network, e: int, at: int) -> tuple[Multigraph, Trace, int]:
    """The graph after pruning e at `at`; also returns the far endpoint."""
    g = net.g.copy()
    tr = Trace()
    far = _prune_op(g, e, at, net.labels, tr)
    return g, tr, far


# -- application -------------------------------------------------------------

def _finish(g: Multigraph, labels: dict) -> Network:
    try:
        return validate(g, labels)
    except Improper as exc:
        raise WouldBeImproper(str(exc)) from None
    except Disconnected as exc:
        raise WouldDisconnect(str(exc)) from None


def _require(cond, msg):
    if not cond:
        raise MoveError(msg)


def _external_prune_end(net: Network, e: int) -> int:
    u, v = net.g.ends(e)
    lu, lv = u in net.labels, v in net.labels
    _require(lu or lv, f"edge {e} is not external")
    _require(not (lu and lv), "cannot prune an edge joining two leaves")
    return v if lu else u


def apply_traced(net: Network, m: Move) -> tuple[Network, Trace]:
    g = net.g
    labels = net.labels
    k = m.kind

    if k in ("tbr+", "pr+"):
        _require(g.has_edge(m.t1) and g.has_edge(m.t2), "bad target ids")
        work = g.copy()
        tr = Trace()
        u = _subdivide_op(work, m.t1, tr)
        if m.t2 == m.t1:
            # second vertex goes on the far half of the split edge
            t2 = tr.splits[-1][2]
        else:
            t2 = m.t2
        v = _subdivide_op(work, t2, tr)
        e = work.add_edge(u, v)
        tr.added.append(e)
        return _finish(work, labels), tr

    if k in ("tbr-", "pr-"):
        _require(g.has_edge(m.edge), "bad edge id")
        u, v = g.ends(m.edge)
        _require(u not in labels and v not in labels,
                 "cannot remove an external edge")
        if m.edge in g.bridges():
            raise WouldDisconnect(f"edge {m.edge} is a cut-edge")
        work = g.copy()
        tr = Trace()
        _remove_edge_op(work, m.edge, labels, tr)
        return _finish(work, labels), tr

    if k == "pr0":
        _require(g.has_edge(m.edge), "bad edge id")
        _require(m.at in g.ends(m.edge), "prune endpoint not on edge")
        _require(m.at not in labels, "cannot prune at a leaf")
        work = g.copy()
        tr = Trace()
        far = _prune_op(work, m.edge, m.at, labels, tr)
        _require(work.has_edge(m.t1), "bad target id (must refer to the pruned graph)")
        a, b = work.ends(m.t1)
        comp = work.component_of(a)
        if far in comp and not work.is_connected():
            raise WouldDisconnect("regraft target is on the pruned side")
        _regraft_op(work, m.t1, far, tr)
        return _finish(work, labels), tr

    if k == "tbr0":
        _require(g.has_edge(m.edge), "bad edge id")
        u, v = g.ends(m.edge)
        if m.t2 is None:
            at = _external_prune_end(net, m.edge)
            inner = Move("pr0", edge=m.edge, at=at, t1=m.t1)
            return apply_traced(net, inner)
        _require(u not in labels and v not in labels,
                 "two-sided tbr0 needs an internal edge")
        work = g.copy()
        tr = Trace()
        _remove_edge_op(work, m.edge, labels, tr)
        _require(work.has_edge(m.t1) and work.has_edge(m.t2),
                 "bad target ids (must refer to the removed graph)")
        if not work.is_connected():
            ca = work.component_of(work.ends(m.t1)[0])
            if work.ends(m.t2)[0] in ca:
                raise WouldDisconnect("both targets on one side of the cut")
        x = _subdivide_op(work, m.t1, tr)
        if m.t2 == m.t1:
            t2 = tr.splits[-1][2]
        else:
            t2 = m.t2
        y = _subdivide_op(work, t2, tr)
        e = work.add_edge(x, y)
        tr.added.append(e)
        return _finish(work, labels), tr

    if k == "nni0":
        _require(g.has_edge(m.axis), "bad axis id")
        au, av = g.ends(m.axis)
        _require(au not in labels and av not in labels, "axis must be internal")
        _require(m.at in (au, av), "prune endpoint not on axis")
        other = av if m.at == au else au
        _require(g.has_edge(m.edge) and m.edge != m.axis, "bad moved edge")
        _require(m.at in g.ends(m.edge), "moved edge not incident to prune endpoint")
        _require(g.has_edge(m.t1) and m.t1 not in (m.axis, m.edge), "bad target")
        _require(other in g.ends(m.t1), "target not incident to far axis endpoint")
        inner = Move("pr0", edge=m.edge, at=m.at, t1=m.t1)
        return apply_traced(net, inner)

    if k == "nni+":
        _require(g.has_edge(m.t1) and g.has_edge(m.t2), "bad target ids")
        _require(m.t1 != m.t2, "nni+ needs two distinct edges")
        if not set(g.ends(m.t1)) & set(g.ends(m.t2)):
            raise NotAdjacent(f"edges {m.t1} and {m.t2} share no vertex")
        work = g.copy()
        tr = Trace()
        u = _subdivide_op(work, m.t1, tr)
        v = _subdivide_op(work, m.t2, tr)
        e = work.add_edge(u, v)
        tr.added.append(e)
        return _finish(work, labels), tr

    if k == "nni-":
        _require(g.has_edge(m.edge), "bad edge id")
        u, v = g.ends(m.edge)
        if not _triangle_apex(g, m.edge):
            raise NotATriangle(f"edge {m.edge} lies on no triangle")
        _require(u not in labels and v not in labels,
                 "cannot remove an external edge")
        if m.edge in g.bridges():
            raise WouldDisconnect(f"edge {m.edge} is a cut-edge")
        work = g.copy()
        tr = Trace()
        _remove_edge_op(work, m.edge, labels, tr)
        return _finish(work, labels), tr

    raise MoveError(f"unknown move kind {m.kind!r}")


def _triangle_apex(g: Multigraph, e: int) -> list[int]:
    u, v = g.ends(e)
    nu = {g.other_end(f, u) for f in g.edges_at(u) if f != e}
    nv = {g.other_end(f, v) for f in g.edges_at(v) if f != e}
    return sorted(w for w in nu & nv if w not in (u, v))


def apply(net: Network, m: Move) -> Network:
    """Apply one move; returns a validated Network or raises a MoveError."""
    return apply_traced(net, m)[0]


# -- enumeration -------------------------------------------------------------

def move_payloads(net: Network, kind: str):
    """Yield every payload of the given kind, deterministically ordered.

    Payloads that fail properness or loop rules are produced anyway; apply
    rejects them and neighbourhood enumeration filters them out.
    """
    g = net.g
    labels = net.labels
    if kind in ("tbr+", "pr+"):
        es = sorted(g.edges)
        for i, t1 in enumerate(es):
            for t2 in es[i:]:
                yield Move(kind, t1=t1, t2=t2)
    elif kind in ("tbr-", "pr-"):
        bridges = g.bridges()
        for e in net.internal_edges():
            if e not in bridges:
                yield Move(kind, edge=e)
    elif kind == "pr0":
        for f in sorted(g.edges):
            for at in sorted(set(g.ends(f))):
                if at in labels:
                    continue
                try:
                    work, _, _ = pruned_graph(net, f, at)
                except WouldCreateLoop:
                    continue
                for t in sorted(work.edges):
                    yield Move(kind, edge=f, at=at, t1=t)
    elif kind == "tbr0":
        for e in net.internal_edges():
            try:
                work, _ = removed_graph(net, e)
            except WouldCreateLoop:
                continue
            es = sorted(work.edges)
            if work.is_connected():
                for i, t1 in enumerate(es):
                    for t2 in es[i:]:
                        yield Move(kind, edge=e, t1=t1, t2=t2)
            else:
                comp = work.component_of(work.ends(es[0])[0]) if es else set()
                side = {t: (work.ends(t)[0] in comp) for t in es}
                for t1 in es:
                    if not side[t1]:
                        continue
                    for t2 in es:
                        if not side[t2]:
                            yield Move(kind, edge=e, t1=t1, t2=t2)
        for e in net.external_edges():
            u, v = g.ends(e)
            if u in labels and v in labels:
                continue
            at = v if u in labels else u
            try:
                work, _, _ = pruned_graph(net, e, at)
            except WouldCreateLoop:
                continue
            for t in sorted(work.edges):
                yield Move(kind, edge=e, t1=t)
    elif kind == "nni0":
        for axis in net.internal_edges():
            au, av = g.ends(axis)
            for at, other in ((au, av), (av, au)) if au != av else ((au, av),):
                for f in sorted(g.edges_at(at)):
                    if f == axis:
                        continue
                    for t in sorted(g.edges_at(other)):
                        if t in (axis, f):
                            continue
                        yield Move(kind, axis=axis, at=at, edge=f, t1=t)
    elif kind == "nni+":
        es = sorted(g.edges)
        for t1, t2 in combinations(es, 2):
            if set(g.ends(t1)) & set(g.ends(t2)):
                yield Move(kind, t1=t1, t2=t2)
    elif kind == "nni-":
        for e in net.internal_edges():
            if _triangle_apex(g, e):
                yield Move(kind, edge=e)
    else:
        raise ValueError(f"unknown kind {kind!r}")


def neighbors(net: Network, kinds) -> dict[bytes, tuple[Network, Move]]:
    """Isomorphism classes one move away, keyed canonically.

    The identity class is excluded; the witness move is the first payload
    (in enumeration order) reaching each class.
    """
    me = net.key()
    out: dict[bytes, tuple[Network, Move]] = {}
    for kind in kinds_of(kinds):
        for m in move_payloads(net, kind):
            try:
                res = apply(net, m)
            except MoveError:
                continue
            key = res.key()
            if key == me or key in out:
                continue
            out[key] = (res, m)
    return out


def neighbor_keys(net: Network, kinds) -> set[bytes]:
    me = net.key()
    out: set[bytes] = set()
    for kind in kinds_of(kinds):
        for m in move_payloads(net, kind):
            try:
                res = apply(net, m)
            except MoveError:
                continue
            key = res.key()
            if key != me:
                out.add(key)
    return out


# -- inversion ---------------------------------------------------------------

def invert(net: Network, m: Move, result: Network | None = None) -> Move:
    """The move that undoes m: apply(apply(net, m), invert(net, m)) == net
    up to isomorphism.  Kinds map 0 <-> 0 and + <-> -.
    """
    res, tr = apply_traced(net, m)
    if result is not None and result.key() != res.key():
        raise MoveError("result network does not match apply(net, m)")
    k = m.kind

    if k in ("tbr+", "pr+", "nni+"):
        added = tr.added[-1]
        return Move(INVERSE_KIND[k], edge=added)

    if k in ("tbr-", "pr-", "nni-"):
        u, v = net.g.ends(m.edge)
        pos_u = _merge_of(tr, u)
        pos_v = _merge_of(tr, v)
        pu, pv = tr.resolve(pos_u), tr.resolve(pos_v)
        t1, t2 = sorted((pu, pv))
        return Move(INVERSE_KIND[k], t1=t1, t2=t2)

    if k == "pr0" or (k == "tbr0" and m.t2 is None) or k == "nni0":
        at = m.at if k != "tbr0" else _external_prune_end(net, m.edge)
        pos = tr.resolve(_merge_of(tr, at))
        new_edge = tr.added[-1]
        split_old, ea, eb, x = tr.splits[-1]
        if k == "nni0":
            # inverse axis: the target half incident to the old far axis endpoint
            au, av = net.g.ends(m.axis)
            other = av if at == au else au
            half = ea if other in res.g.ends(ea) else eb
            return Move("nni0", axis=half, at=x, edge=new_edge, t1=pos)
        if pos == split_old:
            # regrafted onto the spot it came from: after the inverse prune the
            # two halves re-merge under a fresh id
            _, inv_tr, _ = pruned_graph(res, new_edge, x)
            pos = _merge_of(inv_tr, x)
        return Move(k, edge=new_edge, at=(x if k == "pr0" else None), t1=pos,
                    t2=None)

    if k == "tbr0":
        new_edge = tr.added[-1]
        u, v = net.g.ends(m.edge)
        pu = tr.resolve(_merge_of(tr, u))
        pv = tr.resolve(_merge_of(tr, v))
        # map into the coordinates of remove(res, new_edge): the splits of the
        # forward move get re-merged there
        _, inv_tr = removed_graph(res, new_edge)
        def back(e):
            for old, ea, eb, _x in tr.splits:
                if e == old:
                    for e1, e2, newe, _w in inv_tr.merges:
                        if {e1, e2} & {ea, eb}:
                            return inv_tr.resolve(newe)
            return e
        t1, t2 = sorted((back(pu), back(pv)))
        return Move("tbr0", edge=new_edge, t1=t1, t2=t2)

    raise MoveError(f"cannot invert kind {k!r}")


def _merge_of(tr: Trace, v: int) -> int:
    for e1, e2, new, w in tr.merges:
        if w == v:
            return new
    raise MoveError(f"vertex {v} was not suppressed by this move")


def find_move_to(net: Network, kinds, target_key: bytes) -> tuple[Move, Network]:
    """First payload (enumeration order) whose result has the given key.

    Used to re-anchor moves onto an isomorphic copy of their source network.
    """
    for kind in kinds_of(kinds):
        for m in move_payloads(net, kind):
            try:
                res = apply(net, m)
            except MoveError:
                continue
            if res.key() == target_key:
                return m, res
    raise MoveError("no move of the given kinds reaches the target class")
