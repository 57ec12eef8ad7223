"""Exception hierarchy shared across the package."""


class QRLError(Exception):
    """Base class for all errors raised by qrl."""


# core
class AlternationViolation(QRLError):
    pass


class EmptyWindow(QRLError):
    pass


# classical interaction
class SpaceMismatch(QRLError):
    pass


class BadHyperparameter(QRLError):
    pass


class UnrealizableHistory(QRLError):
    pass


class RetryBudgetExhausted(UnrealizableHistory):
    pass


# environments
class DisconnectedGraph(QRLError):
    pass


class LabelInconsistentWithBFS(QRLError):
    pass


class LengthMismatch(QRLError):
    pass


class BadDistribution(QRLError):
    pass


class NotOracularizable(QRLError):
    pass


# simulator
class DimensionCap(QRLError):
    pass


class NoWinnerExists(QRLError):
    pass


class ZeroNorm(QRLError):
    pass


class UnknownRegister(QRLError):
    pass


class LayoutMismatch(QRLError):
    pass


class ScenarioTooLarge(QRLError):
    pass


# quantum agent
class ExtensionNotSelfInverse(QRLError):
    pass


class NotTrivialPercept(QRLError):
    pass


# harness
class ConfigError(QRLError):
    pass
