"""Undirected multigraph with stable integer edge ids.

Parallel edges are first-class (distinct ids on the same endpoint pair);
loops are rejected at insertion time.  All mutating operations assign fresh
ids deterministically, so replaying the same operations on equal graphs
yields identical ids.
"""

from __future__ import annotations

from .errors import Disconnected, Loop, WouldCreateLoop


class Multigraph:
    __slots__ = ("_next_v", "_next_e", "_ends", "_adj")

    def __init__(self):
        self._next_v = 0
        self._next_e = 0
        self._ends: dict[int, tuple[int, int]] = {}
        self._adj: dict[int, list[int]] = {}

    # -- construction ------------------------------------------------------

    def copy(self) -> "Multigraph":
        g = Multigraph.__new__(Multigraph)
        g._next_v = self._next_v
        g._next_e = self._next_e
        g._ends = dict(self._ends)
        g._adj = {v: list(es) for v, es in self._adj.items()}
        return g

    def add_vertex(self, v: int | None = None) -> int:
        if v is None:
            v = self._next_v
        if v in self._adj:
            raise ValueError(f"vertex {v} already present")
        self._adj[v] = []
        self._next_v = max(self._next_v, v + 1)
        return v

    def add_edge(self, u: int, v: int) -> int:
        if u == v:
            raise Loop(u)
        for w in (u, v):
            if w not in self._adj:
                self.add_vertex(w)
        e = self._next_e
        self._next_e += 1
        self._ends[e] = (u, v)
        self._adj[u].append(e)
        self._adj[v].append(e)
        return e

    def remove_edge(self, e: int) -> None:
        u, v = self._ends.pop(e)
        self._adj[u].remove(e)
        self._adj[v].remove(e)

    def remove_vertex(self, v: int) -> None:
        if self._adj[v]:
            raise ValueError(f"vertex {v} is not isolated")
        del self._adj[v]

    # -- queries -----------------------------------------------------------

    @property
    def vertices(self):
        return self._adj.keys()

    @property
    def edges(self):
        return self._ends.keys()

    def num_vertices(self) -> int:
        return len(self._adj)

    def num_edges(self) -> int:
        return len(self._ends)

    def ends(self, e: int) -> tuple[int, int]:
        return self._ends[e]

    def other_end(self, e: int, v: int) -> int:
        u, w = self._ends[e]
        return w if v == u else u

    def edges_at(self, v: int) -> list[int]:
        return self._adj[v]

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    def has_vertex(self, v: int) -> bool:
        return v in self._adj

    def has_edge(self, e: int) -> bool:
        return e in self._ends

    def parallel_ids(self, u: int, v: int) -> list[int]:
        pair = (u, v) if u <= v else (v, u)
        out = []
        for e in self._adj[u]:
            a, b = self._ends[e]
            if ((a, b) if a <= b else (b, a)) == pair:
                out.append(e)
        return sorted(out)

    def neighbors(self, v: int):
        return [self.other_end(e, v) for e in self._adj[v]]

    # -- suboperations -----------------------------------------------------

    def subdivide(self, e: int) -> tuple[int, int, int]:
        """Replace e = {u, v} by u - x - v; returns (x, eid_ux, eid_xv)."""
        u, v = self._ends[e]
        self.remove_edge(e)
        x = self.add_vertex()
        e1 = self.add_edge(u, x)
        e2 = self.add_edge(x, v)
        return x, e1, e2

    def suppress(self, v: int) -> int:
        """Remove a degree-2 vertex, merging its edges; returns the new eid."""
        es = self._adj[v]
        if len(es) != 2:
            raise ValueError(f"vertex {v} has degree {len(es)}, cannot suppress")
        e1, e2 = es
        a = self.other_end(e1, v)
        b = self.other_end(e2, v)
        if a == b:
            raise WouldCreateLoop(f"suppressing {v} would create a loop at {a}")
        self.remove_edge(e1)
        self.remove_edge(e2)
        self.remove_vertex(v)
        return self.add_edge(a, b)

    # -- connectivity ------------------------------------------------------

    def component_of(self, start: int) -> set[int]:
        seen = {start}
        stack = [start]
        while stack:
            v = stack.pop()
            for e in self._adj[v]:
                w = self.other_end(e, v)
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return seen

    def is_connected(self) -> bool:
        if not self._adj:
            return True
        start = next(iter(self._adj))
        return len(self.component_of(start)) == len(self._adj)

    def components(self) -> list[set[int]]:
        out = []
        left = set(self._adj)
        while left:
            comp = self.component_of(next(iter(left)))
            out.append(comp)
            left -= comp
        return out

    def bridges(self) -> set[int]:
        """Edge ids whose removal disconnects the graph (parallel-aware)."""
        if not self._adj:
            return set()
        if not self.is_connected():
            raise Disconnected("bridges() requires a connected graph")
        index: dict[int, int] = {}
        low: dict[int, int] = {}
        out: set[int] = set()
        start = next(iter(self._adj))
        index[start] = low[start] = 0
        counter = 1
        # iterative DFS; only the one tree edge back to the parent is skipped,
        # so a parallel duplicate acts as a back edge and clears bridge status
        it_stack = [(start, None, iter(list(self._adj[start])))]
        while it_stack:
            v, pe, it = it_stack[-1]
            advanced = False
            for e in it:
                if e == pe:
                    continue
                w = self.other_end(e, v)
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    it_stack.append((w, e, iter(list(self._adj[w]))))
                    advanced = True
                    break
                low[v] = min(low[v], index[w])
            if not advanced:
                it_stack.pop()
                if pe is not None:
                    u = self.other_end(pe, v)
                    low[u] = min(low[u], low[v])
                    if low[v] > index[u]:
                        out.add(pe)
        return out
