"""Phylogenetic network data model and validation.

A network is a connected multigraph whose labelled vertices (the leaves,
bijectively labelled 1..n) have degree one, all other vertices have degree
three, and every cut-edge separates two labelled leaves (properness).
Networks are immutable after validation; every operation builds a new one.
"""

from __future__ import annotations

from .errors import BadDegree, BadLabeling, Disconnected, Improper
from .multigraph import Multigraph


class Network:
    """A validated network.  Construct via :func:`validate`."""

    __slots__ = ("g", "labels", "leaf_of", "_key", "_perm", "is_proper")

    def __init__(self, g: Multigraph, labels: dict[int, int], is_proper: bool):
        self.g = g
        self.labels = labels              # vertex id -> label (1..n)
        self.leaf_of = {l: v for v, l in labels.items()}
        self.is_proper = is_proper
        self._key = None
        self._perm = None

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def r(self) -> int:
        return self.g.num_edges() - (self.g.num_vertices() - 1)

    def is_leaf(self, v: int) -> bool:
        return v in self.labels

    def internal_edges(self) -> list[int]:
        g = self.g
        out = []
        for e in sorted(g.edges):
            u, v = g.ends(e)
            if u not in self.labels and v not in self.labels:
                out.append(e)
        return out

    def external_edges(self) -> list[int]:
        g = self.g
        return [e for e in sorted(g.edges)
                if any(w in self.labels for w in g.ends(e))]

    def key(self) -> bytes:
        if self._key is None:
            from .canonical import canonical_form
            self._key, self._perm = canonical_form(self)
        return self._key

    def perm(self) -> dict[int, int]:
        """Vertex id -> canonical index of the canonical labelling."""
        if self._perm is None:
            self.key()
        return self._perm

    def __repr__(self):
        return (f"<Network n={self.n} r={self.r} "
                f"V={self.g.num_vertices()} E={self.g.num_edges()}>")


def cut_edges(g: Multigraph) -> set[int]:
    """Edges whose removal disconnects g; g must be connected."""
    return g.bridges()


def _improper_bridge(g: Multigraph, labels: dict[int, int]) -> int | None:
    """First bridge (smallest id) with a leaf-free side, or None.

    Properness is equivalent to: every pendant component of the bridge tree
    contains a labelled leaf.  We check each bridge directly since the
    graphs are small.
    """
    for e in sorted(g.bridges()):
        u, v = g.ends(e)
        # walk the u-side without crossing e
        seen = {u}
        stack = [u]
        has_leaf_u = u in labels
        while stack and not has_leaf_u:
            w = stack.pop()
            for f in g.edges_at(w):
                if f == e:
                    continue
                x = g.other_end(f, w)
                if x not in seen:
                    seen.add(x)
                    if x in labels:
                        has_leaf_u = True
                        break
                    stack.append(x)
        if not has_leaf_u:
            return e
        has_leaf_v = any(w in labels for w in g.vertices if w not in seen)
        if not has_leaf_v:
            return e
    return None


def validate(g: Multigraph, labels: dict[int, int], require_proper: bool = True) -> Network:
    """Check all network invariants; raise the first violation found.

    With require_proper=False the properness condition is skipped (used for
    the inputs of the tree-containment reduction); the returned Network then
    records whether it happened to be proper anyway.
    """
    if len(labels) < 2:
        raise BadLabeling(f"need at least 2 leaves, got {len(labels)}")
    if sorted(labels.values()) != list(range(1, len(labels) + 1)):
        raise BadLabeling(f"labels must be a bijection onto 1..n, got {sorted(labels.values())}")
    for v in labels:
        if not g.has_vertex(v):
            raise BadLabeling(f"labelled vertex {v} not in graph")
    if not g.is_connected():
        raise Disconnected("graph is not connected")
    for v in sorted(g.vertices):
        d = g.degree(v)
        want = 1 if v in labels else 3
        if d != want:
            raise BadDegree(v, d)
    bad = _improper_bridge(g, labels)
    if require_proper and bad is not None:
        raise Improper(bad)
    return Network(g, dict(labels), is_proper=bad is None)


def from_edges(edge_list, labels: dict[int, int], require_proper: bool = True) -> Network:
    """Build and validate a network from (u, v) pairs and a label map."""
    g = Multigraph()
    for u, v in edge_list:
        g.add_edge(u, v)
    for v in labels:
        if not g.has_vertex(v):
            g.add_vertex(v)
    return validate(g, labels, require_proper)
