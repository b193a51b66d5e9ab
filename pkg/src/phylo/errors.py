"""Exception types shared across the package."""


class PhyloError(Exception):
    """Base class for all domain errors."""


class ValidationError(PhyloError):
    """A multigraph failed one of the network invariants."""


class Disconnected(ValidationError):
    pass


class BadDegree(ValidationError):
    def __init__(self, vertex, degree):
        super().__init__(f"vertex {vertex} has degree {degree}")
        self.vertex = vertex
        self.degree = degree


class Loop(ValidationError):
    def __init__(self, u):
        super().__init__(f"loop at vertex {u}")
        self.vertex = u


class Improper(ValidationError):
    def __init__(self, edge):
        super().__init__(f"cut-edge {edge} does not separate two labelled leaves")
        self.edge = edge


class BadLabeling(ValidationError):
    pass


class MoveError(PhyloError):
    """A move payload is malformed or its application is not permitted."""


class WouldDisconnect(MoveError):
    pass


class WouldCreateLoop(MoveError):
    pass


class WouldBeImproper(MoveError):
    pass


class NotATriangle(MoveError):
    pass


class NotAdjacent(MoveError):
    pass


class NotApplicable(PhyloError):
    """A rewrite's precondition does not hold for the given input."""


class MovesCancel(PhyloError):
    """The +/- pair adds and removes the same edge; the merge is empty."""


class NotDisplayed(PhyloError):
    pass


class ConstraintViolated(PhyloError):
    pass


class CapExceeded(PhyloError):
    pass


class DisconnectedSpace(PhyloError):
    def __init__(self, components):
        super().__init__(f"space splits into {len(components)} components "
                         f"of sizes {sorted(len(c) for c in components)}")
        self.components = components


class FixtureFailed(PhyloError):
    def __init__(self, claim):
        super().__init__(f"figure claim failed: {claim}")
        self.claim = claim


class LabelMismatch(PhyloError):
    pass


class UPNFSyntaxError(PhyloError):
    def __init__(self, line, message):
        super().__init__(f"line {line}: {message}")
        self.line = line
