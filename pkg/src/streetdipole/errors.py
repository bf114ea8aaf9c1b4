"""Exception types shared across the package."""


class StreetDipoleError(Exception):
    """Base class for every package-specific error."""


class InvalidInputError(StreetDipoleError, ValueError):
    """A numeric input is missing, non-finite, or out of range."""


class DegenerateDipoleError(StreetDipoleError, ValueError):
    """A dipole's start and end point coincide."""


class InvalidRelationError(StreetDipoleError, ValueError):
    """A 4-letter code that no planar configuration realizes."""


class InvalidParameterError(StreetDipoleError, ValueError):
    """An operation parameter violates its contract."""


class ParseError(StreetDipoleError, ValueError):
    """An input document cannot be parsed; the message names the location."""


class EmptyDatasetError(StreetDipoleError, ValueError):
    """An input yields no usable streets."""


class DatasetError(StreetDipoleError, ValueError):
    """Ingested data breaks a structural assumption; the message names the culprit."""


class NotFoundError(StreetDipoleError, LookupError):
    """A named street or lookup target is absent."""


class SchemaVersionError(StreetDipoleError, ValueError):
    """A persisted file carries an unsupported schema version."""


class NetworkError(StreetDipoleError, RuntimeError):
    """An HTTP fetch failed after bounded retries."""


class ConfigurationError(StreetDipoleError, ValueError):
    """A provider or run configuration is unusable (missing credential, bad file)."""


class ProviderError(StreetDipoleError, RuntimeError):
    """A language-model provider failed to return a completion."""


class TaskDefinitionError(StreetDipoleError, ValueError):
    """A navigation task is malformed or unresolvable against the graph."""
