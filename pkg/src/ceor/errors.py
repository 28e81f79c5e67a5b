"""Exception hierarchy shared by the numerics, the CE engine and the CLI."""


class CeorError(Exception):
    """Base class for every error raised by this package."""


class NumericError(CeorError, ValueError):
    """Numeric or domain failure; the CLI maps these to exit status 2."""


class PoleError(NumericError):
    pass


class DomainError(NumericError):
    pass


class AccuracyError(NumericError):
    pass


class NoSignChange(NumericError):
    pass


class NonIntegerSpan(NumericError):
    pass


class ConfigError(CeorError, ValueError):
    pass


class EmptyInput(CeorError, ValueError):
    pass


class EmptyElite(CeorError, ValueError):
    pass


class ZeroMass(CeorError, ValueError):
    pass


class ZeroTrials(CeorError, ValueError):
    pass


class ZeroStep(CeorError, ValueError):
    pass


class OutOfStrip(DomainError):
    pass
