"""Exception hierarchy shared by every stage of the pipeline."""


class FeatureCurveError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(FeatureCurveError):
    pass


class DomainError(FeatureCurveError, ValueError):
    pass


class LengthMismatch(FeatureCurveError, ValueError):
    pass


class EmptyField(FeatureCurveError, ValueError):
    pass


class MissingColor(FeatureCurveError):
    pass


class TooFewPoints(FeatureCurveError, ValueError):
    pass


class SingularFit(FeatureCurveError):
    pass


class DegenerateCluster(FeatureCurveError):
    pass


class LayoutMismatch(FeatureCurveError, ValueError):
    pass


class RatioOutOfRange(FeatureCurveError, ValueError):
    pass


class UnsupportedFamily(FeatureCurveError):
    pass


class GridTooLarge(FeatureCurveError):
    pass


class NonFiniteEvaluation(FeatureCurveError, ArithmeticError):
    pass


class NoVotes(FeatureCurveError):
    pass


class AllFailed(FeatureCurveError):
    pass


class EmptyLocus(FeatureCurveError):
    pass


class ConfigError(FeatureCurveError, ValueError):
    pass
