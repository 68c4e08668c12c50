"""Domain-signal exceptions shared across heckelab modules.

Each exception marks a mathematically meaningful boundary (a singular locus,
a pole, a degenerate configuration), not a programming error; callers that
integrate over such loci catch these and adapt.
"""


class HeckeLabError(ValueError):
    """Base class for domain signals raised by heckelab."""


class OnSingularLocus(HeckeLabError):
    """Kernel evaluated exactly on the zero set of its radicand."""


class PoleAtParabolicLine(HeckeLabError):
    """Hecke-modification parameter s collides with a coordinate y_i."""


class ExceptionalLocus(HeckeLabError):
    """Involution evaluated where a denominator vanishes."""


class IntegrableSingularity(HeckeLabError):
    """Measure density evaluated at one of its integrable singular points."""


class DegenerateNode(HeckeLabError):
    """Elliptic integral requested at a collapsed node (x in {0,1})."""


class InterpolationDegenerate(HeckeLabError):
    """Rational interpolation data does not determine a function of the requested degree."""


class TraceDivergent(HeckeLabError):
    """Regularized trace requested at a point where it diverges logarithmically."""

class OutsideAdmissibleSet(HeckeLabError):
    """Half-density sample point lies outside the operator's admissible set."""


class ReducibleMonodromy(HeckeLabError):
    """Monodromy generators share an eigenvector; reality test undefined."""


class NonRealOrDegenerate(HeckeLabError):
    """Hermitian-form solve found no one-dimensional invariant form."""


class HypergeometricPole(HeckeLabError):
    """Hypergeometric parameters sit on a pole of the series or its continuation."""


class StratumBoundary(HeckeLabError):
    """Continuant completion hit the deeper stratum P_{m-1} = 0."""


class PrecisionExhausted(HeckeLabError):
    """p-adic branch decision needs more digits than the working precision holds."""
