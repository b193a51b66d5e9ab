"""UPNF: plain-text edge-list format for unrooted phylogenetic networks.

Line 1 is ``upnf 1``.  Then ``leaf <vid> <label>`` lines, then
``edge <u> <v>`` lines (parallel edges by repetition).  ``#`` starts a
comment; vertex ids are decimal non-negative integers.
"""

from __future__ import annotations

from .errors import UPNFSyntaxError
from .multigraph import Multigraph
from .network import Network, validate


def parse(text: str, require_proper: bool = True) -> Network:
    lines = text.splitlines()
    g = Multigraph()
    labels: dict[int, int] = {}
    saw_header = False
    for no, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if not saw_header:
            if parts != ["upnf", "1"]:
                raise UPNFSyntaxError(no, f"expected 'upnf 1' header, got {line!r}")
            saw_header = True
            continue
        if parts[0] == "leaf":
            if len(parts) != 3:
                raise UPNFSyntaxError(no, "leaf takes two arguments: vid label")
            try:
                vid, label = int(parts[1]), int(parts[2])
            except ValueError:
                raise UPNFSyntaxError(no, "leaf arguments must be integers") from None
            if vid < 0 or label < 1:
                raise UPNFSyntaxError(no, "vid must be >= 0 and label >= 1")
            if vid in labels or label in labels.values():
                from .errors import BadLabeling
                raise BadLabeling(f"duplicate leaf declaration at line {no}")
            labels[vid] = label
            if not g.has_vertex(vid):
                g.add_vertex(vid)
        elif parts[0] == "edge":
            if len(parts) != 3:
                raise UPNFSyntaxError(no, "edge takes two arguments: u v")
            try:
                u, v = int(parts[1]), int(parts[2])
            except ValueError:
                raise UPNFSyntaxError(no, "edge arguments must be integers") from None
            if u < 0 or v < 0:
                raise UPNFSyntaxError(no, "vertex ids must be non-negative")
            g.add_edge(u, v)  # raises Loop on u == v
        else:
            raise UPNFSyntaxError(no, f"unknown directive {parts[0]!r}")
    if not saw_header:
        raise UPNFSyntaxError(1, "missing 'upnf 1' header")
    return validate(g, labels, require_proper)


def serialize(net: Network) -> str:
    """Deterministic text form: vertices renumbered in canonical order."""
    perm = net.perm()
    order = sorted(perm, key=lambda v: perm[v])
    rename = {v: i for i, v in enumerate(order)}
    out = ["upnf 1"]
    for v, label in sorted(net.labels.items(), key=lambda kv: kv[1]):
        out.append(f"leaf {rename[v]} {label}")
    rows = sorted(
        tuple(sorted((rename[a], rename[b])))
        for a, b in (net.g.ends(e) for e in net.g.edges)
    )
    for u, v in rows:
        out.append(f"edge {u} {v}")
    return "\n".join(out) + "\n"


def load(path: str, require_proper: bool = True) -> Network:
    with open(path, "r", encoding="utf-8") as fh:
        return parse(fh.read(), require_proper)


def dump(net: Network, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize(net))
