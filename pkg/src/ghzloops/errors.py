"""Exception types shared across the package."""


class GhzLoopsError(Exception):
    """Base class for all package errors."""


class InvalidSpec(GhzLoopsError):
    """Lattice specification is inconsistent (size too small, missing source, ...)."""


class MalformedGraph(GhzLoopsError):
    """A custom planar graph violates structural constraints."""


class ParseError(MalformedGraph):
    """Custom graph file could not be parsed; carries a line number."""

    def __init__(self, message, line_no=None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class DegreeError(MalformedGraph):
    """A vertex has a degree outside the allowed set; names the vertex."""

    def __init__(self, vertex, degree, allowed):
        self.vertex = vertex
        self.degree = degree
        super().__init__(
            f"vertex {vertex} has degree {degree}, allowed degrees are {sorted(allowed)}"
        )


class GenerationFailure(GhzLoopsError):
    """Random graph generation could not satisfy its constraints."""


class RegimeMismatch(GhzLoopsError):
    """Parameter g is outside the domain of the selected regime."""


class ClusterTooLarge(GhzLoopsError):
    """Exact component counting requested for a cluster above the enumeration cap."""


class ZeroWeightStart(GhzLoopsError):
    """Requested chain initialization has exactly zero probability."""


class NoCrossing(GhzLoopsError):
    """Spanning-probability curves do not intersect within the scanned range."""


class MissingBoundaryMarks(GhzLoopsError):
    """Spanning detection needs boundary marks or torus winding data."""


class TooLarge(GhzLoopsError):
    """Exact enumeration requested beyond the configured size bounds."""


class ComponentsUnavailable(GhzLoopsError):
    """Follow-up projection needs an explicit component list (exact mode)."""


class InvalidConfig(GhzLoopsError):
    """Run configuration is inconsistent or incomplete."""


class UnknownLattice(GhzLoopsError):
    """No published phase boundaries exist for this lattice."""
