"""Exception types shared across the package."""


class BskelError(Exception):
    """Base class for all package errors."""


class InputError(BskelError):
    """Malformed user input (parse errors, bad job specs)."""


class NegativeValuation(BskelError):
    """Reduction requested for an element with negative valuation."""


class WildExtension(BskelError):
    """Ramification extension degree divisible by the residue characteristic."""


class WildSlope(BskelError):
    """Newton polygon slope denominator divisible by the residue characteristic."""


class InsufficientPrecision(BskelError):
    """The requested computation exceeds the tracked precision."""


class DuplicatePoint(BskelError):
    """Two marked points are exactly equal."""


class Disconnected(BskelError):
    """Operation requires a connected graph."""


class NonIntegralSlope(BskelError):
    """Potential produces non-integer slopes on the unit refinement."""


class NotPrincipal(BskelError):
    """Divisor has no integral potential (nontrivial Jacobian class)."""


class LengthMismatch(BskelError):
    """Refinement parts do not sum to the edge length."""


class NotAutomorphism(BskelError):
    """Group action does not preserve the graph structure."""


class TooLarge(BskelError):
    """Graph exceeds the size bound of an exhaustive operation."""


class LoopsForbidden(BskelError):
    """Laplacian/Jacobian operations reject loop edges."""


class UnreducedPoint(BskelError):
    """A divisor support point cannot be placed on the base graph."""


class ChartUnavailable(BskelError):
    """No function-field chart for this component."""


class UnsupportedComponent(BskelError):
    """Component type outside the supported function-field repertoire."""


class NoRootInResidueField(BskelError):
    """Required residue root not found within the tower growth bound."""


class MissingTwist(BskelError):
    """A split cycle needs twist data that was not supplied."""


class InconsistentCover(BskelError):
    """No attachment satisfies the cyclic action / harmonicity."""


class InconsistentData(BskelError):
    """Riemann-Hurwitz bookkeeping yields a non-integer or negative genus."""


class Singular(BskelError):
    """Discriminant vanishes identically."""


class ActionLiftFailed(BskelError):
    """No involution lift compatible with the covering structure exists."""


class PrecisionError(BskelError):
    """CLI-level wrapper for precision failures."""


class UnsupportedCase(BskelError):
    """CLI-level wrapper for out-of-repertoire cases."""


class InternalInconsistency(BskelError):
    """A structural invariant failed; indicates a bug, not bad data."""


class DisallowedInput(BskelError):
    """Input outside the supported repertoire (e.g. gcd(p, q) != 1)."""
