"""
geometry/errors.py

Exception hierarchy for the engine. Failed checks are reported, not raised;
these are for broken preconditions and malformed input.
"""


class GeometryError(Exception):
    """Base class for engine errors."""


class ChartMismatchError(GeometryError):
    """Operands live on different charts."""


class UnknownGeneratorError(GeometryError):
    """A generator name is not declared in the chart."""


class OddAssignmentError(GeometryError):
    """A numeric value was assigned to an odd generator."""


class DegreeMismatchError(GeometryError):
    """A substitution rule or a component has the wrong degree."""


class DimensionCapError(GeometryError):
    """Chart exceeds the configured number of even coordinates."""


class NotPoissonError(GeometryError):
    """Bivector fails [P,P] = 0."""


class NotCoisotropicError(GeometryError):
    """Subspace is not coisotropic for the given Poisson structure."""


class TwistNotClosedError(GeometryError):
    """Twisting 3-form has dH != 0."""


class DegenerateFormError(GeometryError):
    """A 2-form expected to be nondegenerate is not."""


class IntegrabilityError(GeometryError):
    """Generalized complex structure failed gc_check."""


class ShapeMismatchError(GeometryError):
    """Matrix or complex shapes do not fit together."""


class IsotropyError(GeometryError):
    """Isotropic structure residual is nonzero."""


class NotLagrangianError(GeometryError):
    """Input that must be certified Lagrangian is not."""


class NonCommutingDiagramError(GeometryError):
    """Linear diagram does not commute."""


class HypothesisError(GeometryError):
    """Hypotheses of an intersection theorem are not met."""


class BidegreeError(GeometryError):
    """Stored component has the wrong (form degree, total degree)."""


class AxiomError(GeometryError):
    """Algebroid data fails its axioms where they are a precondition."""


class BranePreconditionError(GeometryError):
    """Brane is not coisotropic with transverse complex curvature."""


class ConventionError(GeometryError):
    """Convention table override is invalid."""
