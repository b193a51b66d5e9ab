"""Random networks and moves for tests, seeds, and corpora."""

from __future__ import annotations

import random

from .errors import MoveError
from .multigraph import Multigraph
from .network import Network, validate
from .moves import Move, apply, move_payloads


def random_tree(n: int, rng: random.Random) -> Network:
    if n < 2:
        raise ValueError("need n >= 2")
    g = Multigraph()
    leaves = {lab: g.add_vertex() for lab in range(1, n + 1)}
    labels = {v: lab for lab, v in leaves.items()}
    e = g.add_edge(leaves[1], leaves[2])
    for lab in range(3, n + 1):
        target = rng.choice(sorted(g.edges))
        x, _, _ = g.subdivide(target)
        g.add_edge(x, leaves[lab])
    return validate(g, labels)


def random_valid_move(net: Network, kind: str, rng: random.Random):
    """A uniformly-shuffled applicable payload, or None if the kind has none."""
    payloads = list(move_payloads(net, kind))
    rng.shuffle(payloads)
    for m in payloads:
        try:
            return m, apply(net, m)
        except MoveError:
            continue
    return None


def random_network(n: int, r: int, rng: random.Random, shuffle: int = 0) -> Network:
    """A random tier-(n, r) network: random tree, r random edge additions,
    then `shuffle` random tier-preserving moves."""
    net = random_tree(n, rng)
    for _ in range(r):
        got = random_valid_move(net, "tbr+", rng)
        assert got is not None
        net = got[1]
    for _ in range(shuffle):
        got = random_valid_move(net, "tbr0", rng)
        if got is None:
            break
        net = got[1]
    return net


def random_improper_network(n: int, rng: random.Random, r_base: int = 0) -> Network:
    """A connected binary leaf-labelled graph with a pendant leafless blob,
    so at least one cut-edge separates no leaves (validated relaxed)."""
    net = random_network(n, r_base, rng)
    g = net.g.copy()
    host = rng.choice(sorted(g.edges))
    x, _, _ = g.subdivide(host)
    # pendant blob: triangle with one doubled edge (all degrees 3)
    z1, z2, z3 = g.add_vertex(), g.add_vertex(), g.add_vertex()
    g.add_edge(x, z1)
    g.add_edge(z1, z2)
    g.add_edge(z1, z3)
    g.add_edge(z2, z3)
    g.add_edge(z2, z3)
    return validate(g, net.labels, require_proper=False)
