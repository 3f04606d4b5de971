"""Exception hierarchy shared by every module."""


class GeometryError(ValueError):
    """Base class; ``code`` is the machine-readable tag written by the CLI."""

    code = "geometry-error"


class IncompatibleSpaceError(GeometryError):
    code = "incompatible-space"


class UnsupportedSpaceError(GeometryError):
    code = "unsupported-space"


class DegeneratePairError(GeometryError):
    code = "degenerate-pair"


class DegenerateTupleError(GeometryError):
    code = "degenerate-tuple"


class NotAsymptoticError(GeometryError):
    code = "not-asymptotic"


class InsufficientHorizonError(GeometryError):
    code = "insufficient-horizon"


class EmptySetError(GeometryError):
    code = "empty-set"


class InsufficientSamplesError(GeometryError):
    code = "insufficient-samples"


class EmptyCandidateError(GeometryError):
    """No admissible triple projects into B(x, R).

    ``nearest`` is the smallest distance from x to any admissible center,
    i.e. the radius that would have been needed.
    """

    code = "empty-candidate"

    def __init__(self, message, nearest=None):
        super().__init__(message)
        self.nearest = nearest


class ConfigError(GeometryError):
    code = "malformed-config"
