"""Exception types shared across the engine and the simulator."""


class HtapError(Exception):
    """Base class; ``code`` is the machine-readable name used by the CLI."""

    @property
    def code(self) -> str:
        return type(self).__name__


# storage
class ValueNotInDictionary(HtapError, KeyError):
    pass


class CodeOutOfRange(HtapError, IndexError):
    pass


class EmptyDictionary(HtapError, ValueError):
    pass


# transactional island
class InvalidKey(HtapError, KeyError):
    pass


class DeleteOfMissingRow(HtapError, KeyError):
    pass


# propagation
class UnsortedInputLog(HtapError, ValueError):
    pass


class KeyNotIndexed(HtapError, KeyError):
    pass


# application
class RowOutOfRange(HtapError, IndexError):
    pass


# consistency
class UnknownColumn(HtapError, KeyError):
    pass


class DoubleRelease(HtapError, RuntimeError):
    pass


class NoVisibleVersion(HtapError, LookupError):
    pass


# analytics
class UnplacedColumn(HtapError, KeyError):
    pass


class CyclicDependency(HtapError, ValueError):
    pass


class PlanSyntaxError(HtapError, ValueError):
    pass


# vault simulator
class UnknownVault(HtapError, IndexError):
    pass


class TimeRegression(HtapError, ValueError):
    pass


class ConfigError(HtapError, ValueError):
    pass


# harness
class InvalidSpec(HtapError, ValueError):
    pass


class IoFailure(HtapError, OSError):
    pass
