"""Exception hierarchy shared by all modules."""


class TwoCoverError(Exception):
    pass


class ZeroValue(TwoCoverError, ZeroDivisionError):
    pass


class InsufficientPrecision(TwoCoverError, ArithmeticError):
    pass


class EvenCharacteristic(TwoCoverError, ValueError):
    pass


class DimensionMismatch(TwoCoverError, ValueError):
    pass


class NotASquare(TwoCoverError, ValueError):
    pass


class SingularCurve(TwoCoverError, ValueError):
    pass


class DegenerateConfiguration(TwoCoverError, ValueError):
    pass


class ReconstructionFailed(TwoCoverError, ArithmeticError):
    pass


class SingularBranch(TwoCoverError, ArithmeticError):
    pass


class BasePointHit(TwoCoverError, ValueError):
    pass


class NotBitangent(TwoCoverError, ArithmeticError):
    pass


class NotSyzygetic(TwoCoverError, ArithmeticError):
    pass


class DegenerateIdentity(TwoCoverError, ArithmeticError):
    pass


class NoUsableQuadruple(TwoCoverError, ArithmeticError):
    pass


class DepthExceeded(TwoCoverError, RuntimeError):
    pass


class BadReduction(TwoCoverError, ValueError):
    pass


class ComponentDeficit(TwoCoverError, ArithmeticError):
    pass


class EnumerationCapExceeded(TwoCoverError, RuntimeError):
    pass


class BundleError(TwoCoverError, ValueError):
    """A curve bundle failed schema validation or consistency checks."""
