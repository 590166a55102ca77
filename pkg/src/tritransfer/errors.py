"""Exception types raised across the package."""


class TransferError(Exception):
    """Base class for all package errors."""


class ParseError(TransferError):
    """Malformed mesh file."""


class EmptyMesh(TransferError):
    """Mesh file or element list contains no triangles."""


class DegenerateElement(TransferError):
    """Triangle with (near-)zero area; carries the offending element id."""

    def __init__(self, element: int, area: float):
        self.element = element
        self.area = area
        super().__init__(f"element {element} is degenerate (area={area:.3e})")


class NonManifold(TransferError):
    """An edge is shared by more than two elements."""


class InvalidParameter(TransferError):
    """Out-of-range argument to a mesh generator or config."""


class CoverageGap(TransferError):
    """A target element is not fully covered by source-element intersections."""


class DimensionMismatch(TransferError):
    """Vector/matrix sizes do not agree."""


class NoConvergence(TransferError):
    """Iterative solver failed to reach tolerance; carries the best iterate."""

    def __init__(self, best_x, residual: float, iterations: int):
        self.best_x = best_x
        self.residual = residual
        self.iterations = iterations
        super().__init__(
            f"CG did not converge in {iterations} iterations "
            f"(best relative residual {residual:.3e})"
        )


class SourceEvalFailed(TransferError):
    """Black-box source returned a non-finite value or an out-of-domain point
    under the strict policy."""


class InvalidDensity(TransferError):
    """Importance-sampling density is non-positive at a sample point."""


class InsufficientPoints(TransferError):
    """Source point cloud is too small for the requested fit."""


class SingularFit(TransferError):
    """Local least-squares system is numerically singular; carries node id."""

    def __init__(self, node: int, cond: float):
        self.node = node
        self.cond = cond
        super().__init__(f"singular local fit at target node {node} (cond={cond:.3e})")


class MeshMismatch(TransferError):
    """Two fields expected on the same mesh live on different meshes."""


class ZeroDenominator(TransferError):
    """Relative error undefined: reference norm or mass is zero."""
