"""Label-respecting canonical form.

Colour refinement seeded by the leaf labels, with backtracking
individualization when refinement leaves ties.  Two networks get the same
key iff a label-preserving isomorphism exists; parallel-edge multiplicity
is part of the encoding.
"""

from __future__ import annotations

from .multigraph import Multigraph


def _refine(g: Multigraph, colour: dict[int, int]) -> dict[int, int]:
    ends = g.ends
    while True:
        sigs = {}
        for v in g.vertices:
            nb = []
            for e in g.edges_at(v):
                a, b = ends(e)
                nb.append(colour[b if v == a else a])
            nb.sort()
            sigs[v] = (colour[v], tuple(nb))
        order = sorted(set(sigs.values()))
        rank = {s: i for i, s in enumerate(order)}
        new = {v: rank[sigs[v]] for v in g.vertices}
        if len(order) == len(set(colour.values())):
            return new
        colour = new


def _encode(g: Multigraph, colour: dict[int, int], labels: dict[int, int]) -> bytes:
    idx = colour
    rows = sorted(
        (idx[a], idx[b]) if idx[a] <= idx[b] else (idx[b], idx[a])
        for a, b in (g.ends(e) for e in g.edges)
    )
    out = bytearray()
    out.append(g.num_vertices())
    # canonical index of each leaf, in label order, pins the labelling
    for lab in sorted(labels.values()):
        for v, l in labels.items():
            if l == lab:
                out.append(idx[v])
                break
    out.append(255)
    for i, j in rows:
        out.append(i)
        out.append(j)
    return bytes(out)


def canonical_form(net) -> tuple[bytes, dict[int, int]]:
    """Return (key bytes, vertex -> canonical index) for a network."""
    g = net.g
    labels = net.labels
    n = len(labels)
    # leaves take colours 0..n-1 by label; internal vertices start equal
    init = {}
    for v in g.vertices:
        init[v] = labels[v] - 1 if v in labels else n
    best: bytes | None = None
    best_perm: dict[int, int] | None = None

    def descend(colour: dict[int, int]):
        nonlocal best, best_perm
        colour = _refine(g, colour)
        classes: dict[int, list[int]] = {}
        for v, c in colour.items():
            classes.setdefault(c, []).append(v)
        target = None
        for c in sorted(classes):
            if len(classes[c]) > 1:
                target = classes[c]
                break
        if target is None:
            enc = _encode(g, colour, labels)
            if best is None or enc < best:
                best = enc
                best_perm = dict(colour)
            return
        # individualize order-preservingly: the chosen vertex splits off just
        # below its class, so class order (and the leaf prefix) is kept
        for v in sorted(target):
            child = {w: 2 * c for w, c in colour.items()}
            child[v] -= 1
            descend(child)

    descend(init)
    assert best is not None
    return best, best_perm


def isomorphic(a, b) -> bool:
    """Label-preserving isomorphism test via canonical keys."""
    return a.key() == b.key()


def iso_vertex_map(a, b) -> dict[int, int] | None:
    """A label-preserving isomorphism a -> b as a vertex map, if one exists."""
    if a.key() != b.key():
        return None
    pa, pb = a.perm(), b.perm()
    inv_b = {i: v for v, i in pb.items()}
    return {v: inv_b[i] for v, i in pa.items()}


def iso_edge_map(a, b, vmap: dict[int, int]) -> dict[int, int]:
    """Extend a vertex isomorphism to an edge bijection.

    Parallel edges within a bundle are matched in ascending id order on both
    sides; any consistent choice is an isomorphism.
    """
    out = {}
    done = set()
    for e in sorted(a.g.edges):
        if e in done:
            continue
        u, v = a.g.ends(e)
        bundle_a = a.g.parallel_ids(u, v)
        bundle_b = b.g.parallel_ids(vmap[u], vmap[v])
        assert len(bundle_a) == len(bundle_b)
        for ea, eb in zip(bundle_a, bundle_b):
            out[ea] = eb
            done.add(ea)
    return out
