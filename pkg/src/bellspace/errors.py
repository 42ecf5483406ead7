"""Exception hierarchy shared by all modules."""


class BellspaceError(Exception):
    """Base class for every error raised by the package."""


class DomainError(BellspaceError, ValueError):
    """An input lies outside the domain of an operation."""


class PreconditionError(BellspaceError, ValueError):
    """A documented precondition of an operation does not hold."""


class ConditionalUndefinedError(BellspaceError, ZeroDivisionError):
    """Conditioning on an event of zero probability."""

    def __init__(self, event, probability=0.0):
        self.event = dict(event)
        self.probability = probability
        desc = ", ".join(f"{k}={v:+d}" for k, v in self.event.items())
        super().__init__(f"conditioning event ({desc}) has probability {probability:.3g}")


class SingularInversionError(BellspaceError, ZeroDivisionError):
    """Noise inversion requested for a vanishing gamma factor."""


class GammaFormError(BellspaceError, ValueError):
    """A four-outcome POVM does not admit the (j, k, jk) gamma decomposition."""


class ConfigError(BellspaceError):
    """Base class for configuration problems; carries an optional location."""

    kind = "config"

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        self.message = message
        where = ""
        if path:
            where += f" at `{path}`"
        if line is not None:
            where += f" (line {line})"
        super().__init__(f"{self.kind} error{where}: {message}")


class ConfigParseError(ConfigError):
    kind = "parse"


class ConfigSchemaError(ConfigError):
    kind = "schema"


class ConfigPhysicsError(ConfigError):
    kind = "physics"
