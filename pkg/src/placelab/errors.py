"""Exception types shared across the package."""


class PlacelabError(Exception):
    """Base class for all package errors."""


class ConfigError(PlacelabError):
    """Invalid configuration value, unknown key, or unknown theme/template."""


class BoundsError(PlacelabError):
    """Action cell outside the grid."""


class CapacityError(PlacelabError):
    """Attribute pool or free-cell supply exhausted."""


class VocabularyError(PlacelabError):
    """Word not present in the fixed vocabulary."""


class UnsupportedInstructionError(PlacelabError):
    """Instruction family not valid for the requested operation."""


class EmptyCandidateError(PlacelabError):
    """Feasibility filter left no instruction to sample."""


class NumericError(PlacelabError):
    """Non-finite value where a finite one is required."""


class ContractError(PlacelabError):
    """Internal API contract violated (shape mismatch, frozen-parameter drift, ...)."""


class SchemaError(PlacelabError):
    """Serialized payload carries an unexpected schema or magic."""


class IntegrityError(PlacelabError):
    """Serialized payload failed its checksum."""


class TrainingError(PlacelabError):
    """Training diverged (non-finite loss)."""


class AdaptationError(PlacelabError):
    """Adaptation stage cannot proceed (for example, zero usable samples)."""
