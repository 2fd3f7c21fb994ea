"""Exception hierarchy with stable, machine-readable error codes.

Every error raised by this package derives from :class:`GscrError` and
carries a ``code`` string that the CLI maps onto its exit status and
stderr record.  Configuration problems derive from :class:`ConfigError`
(CLI exit code 2); everything else is a domain error (exit code 1).
"""

from __future__ import annotations

__all__ = [
    "GscrError",
    "InvalidNetwork",
    "NonPositiveReactance",
    "DisconnectedFromGround",
    "EliminatingConverterBus",
    "SingularInteriorBlock",
    "NonPositiveRatedPower",
    "DimensionMismatch",
    "DegenerateLeadingEigenvalue",
    "BiorthogonalityBreakdown",
    "UnknownBus",
    "NoBracket",
    "ConfigError",
    "ParseError",
    "SchemaError",
    "CrossRefError",
]


class GscrError(Exception):
    """Base class for all errors raised by this package."""

    code = "DOMAIN_ERROR"

    def __init__(self, message: str, *, code: str | None = None):
        super().__init__(message)
        if code is not None:
            self.code = code


class InvalidNetwork(GscrError):
    """The network description violates a structural invariant."""

    code = "INVALID_NETWORK"


class NonPositiveReactance(GscrError):
    """A branch or grounding reactance is zero, negative or non-finite."""

    code = "NON_POSITIVE_REACTANCE"


class DisconnectedFromGround(GscrError):
    """Some bus has no path to ground, so the susceptance matrix is singular."""

    code = "DISCONNECTED_FROM_GROUND"


class EliminatingConverterBus(GscrError):
    """Network reduction was asked to eliminate a bus that carries a converter."""

    code = "ELIMINATING_CONVERTER_BUS"


class SingularInteriorBlock(GscrError):
    """The eliminated block of the susceptance matrix is numerically singular."""

    code = "SINGULAR_INTERIOR_BLOCK"


class NonPositiveRatedPower(GscrError):
    """A converter rated power is zero, negative or non-finite."""

    code = "NON_POSITIVE_RATED_POWER"


class DimensionMismatch(GscrError):
    """Per-bus data does not line up with the network's bus set."""

    code = "DIMENSION_MISMATCH"


class DegenerateLeadingEigenvalue(GscrError):
    """The smallest eigenvalue is not numerically simple, so the
    first-order perturbation machinery does not apply."""

    code = "DEGENERATE_LEADING_EIGENVALUE"


class BiorthogonalityBreakdown(GscrError):
    """A left/right eigenvector pair is numerically orthogonal."""

    code = "BIORTHOGONALITY_BREAKDOWN"


class UnknownBus(GscrError):
    """A bus id was referenced that the model does not contain."""

    code = "UNKNOWN_BUS"


class NoBracket(GscrError):
    """No sign change was found in the search interval."""

    code = "NO_BRACKET"


class ConfigError(GscrError):
    """Base class for configuration-file problems (CLI exit code 2)."""

    code = "CONFIG_ERROR"


class ParseError(ConfigError):
    """The configuration file is not valid JSON."""

    code = "PARSE_ERROR"


class SchemaError(ConfigError):
    """A configuration field is missing, of the wrong type or out of range."""

    code = "SCHEMA_ERROR"


class CrossRefError(ConfigError):
    """The configuration references a bus id that does not exist."""

    code = "CROSS_REF_ERROR"
