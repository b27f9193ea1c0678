"""Exception types raised by the library.

All inherit from ValueError so callers can catch broadly; the specific
classes exist because most of them mark mathematically distinct failure
modes (non-manifold input, gauge search failure, ...) that tests and the
CLI want to tell apart.
"""


class NonManifold(ValueError):
    """An edge lies in more than two triangles, or a vertex star is pinched."""


class IncoherentOrientation(ValueError):
    """Two triangles traverse a shared edge in the same direction."""


class AmbiguousEdge(ValueError):
    """A vertex pair names more than one edge (small periodic quotients)."""


class BoundaryVertex(ValueError):
    """Operation requires an interior vertex."""


class BoundaryEdge(ValueError):
    """Operation requires an interior edge."""


class NotClosed(ValueError):
    """Operation requires a closed complex."""


class Disconnected(ValueError):
    """Operation requires a connected complex."""


class VertexNotInTriangle(ValueError):
    pass


class InvalidPath(ValueError):
    """Framed or thick path violates its adjacency invariants."""


class SeedNotInFirstTriangle(ValueError):
    pass


class NonPositiveWeight(ValueError):
    """Edge weights must be strictly positive."""


class NotSL2(ValueError):
    """Edge-weight reconstruction met an inconsistency above tolerance."""


class InconsistentRho(ValueError):
    """Rho data violates the triangle cocycle condition."""


class UnsatisfiableLoopValues(ValueError):
    pass


class NoColoring(ValueError):
    """Black/white factorization needs a 2-colorable complex."""


class NonPositiveOffdiag(ValueError):
    pass


class ColorMismatch(ValueError):
    """Black and white triangle operators do not cover disjoint colors."""


class NonPositiveCoefficient(ValueError):
    pass


class GaugeNotFound(ValueError):
    """Potential-flattening gauge iteration failed to converge."""


class DegenerateCoefficient(ValueError):
    """Division by a zero coefficient in a factorization solve."""


class ZeroPotential(ValueError):
    """Laplace transform requires a nowhere-zero potential."""


class SingularGauge(ValueError):
    """Laplace transform requires 1 + w nonzero."""


class SingularDenominator(ValueError):
    pass


class MissingLayer(ValueError):
    """Toda residual needs layers k-1, k, k+1."""


class CoefficientSumNonzero(ValueError):
    """Hirota coefficients must satisfy alpha + beta + gamma = 0."""


class InconsistentA(ValueError):
    """Distance-2 coefficients do not define a positive edge solve."""


class TreeNotConnected(ValueError):
    pass


class IsolatedVertex(ValueError):
    pass


class NonPositiveConductivity(ValueError):
    pass


class InvalidKStructure(ValueError):
    """Edges are not partitioned by the listed black triangles."""


class ZeroW(ValueError):
    """Triangle-space Laplace image needs a nowhere-zero vertex diagonal."""


class NoKernelVector(ValueError):
    """Neither candidate normalization transports the kernel."""
