"""Exception hierarchy.

Every error raised by the library derives from :class:`HFSubsampleError`.
Input problems additionally derive from :class:`ValueError` so callers that
only know the standard library still catch them; configuration problems that
make an estimator infeasible derive from :class:`InfeasibleConfigError`, which
the CLI maps to a distinct exit code.
"""


class HFSubsampleError(Exception):
    pass


class InputError(HFSubsampleError, ValueError):
    pass


class InfeasibleConfigError(HFSubsampleError, ValueError):
    pass


class SeriesTooShort(InputError):
    pass


class EmptySeries(SeriesTooShort):
    pass


class NonFiniteValue(InputError):
    pass


class NegativePower(InputError):
    pass


class LengthMismatch(InputError):
    pass


class DomainError(InputError):
    pass


class InvalidTruncation(InputError):
    pass


class NonPurePowers(InputError):
    pass


class QuadratureFailure(HFSubsampleError, ArithmeticError):
    pass


class WindowTooLarge(InfeasibleConfigError):
    pass


class TooFewSubsamples(InfeasibleConfigError):
    pass


class SubsampleTooSmall(InfeasibleConfigError):
    pass


class BlockTooSmall(InfeasibleConfigError):
    pass


class InsufficientData(InfeasibleConfigError):
    pass


class ZeroBlocks(InsufficientData):
    pass


class NonPositiveVariance(HFSubsampleError, ArithmeticError):
    pass


class NonPositiveEstimate(HFSubsampleError, ArithmeticError):
    pass


class NotSquare(InputError):
    pass


class InvalidLevel(InputError):
    pass


class InvalidConfig(InputError):
    pass


class MissingSigmaPath(InputError):
    pass


class TooFewSamples(InputError):
    pass


class ParseError(InputError):
    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class NonPositivePrice(ParseError):
    pass


class NonMonotoneTime(ParseError):
    pass
