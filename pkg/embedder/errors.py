"""
Exception types shared by the embedder package
"""


class EmbedderError(Exception):
    """Base class for every error raised by the embedder"""


class ComplexError(EmbedderError, ValueError):
    """Invalid complex construction, unknown simplex, or missing coordinates"""


class ShapeError(EmbedderError, ValueError):
    """Incompatible matrix shapes or feature widths"""


class ConfigError(EmbedderError, ValueError):
    """Invalid run configuration"""


class TrainingError(EmbedderError, RuntimeError):
    """Objective became non-finite during training"""


class ArtifactError(EmbedderError, RuntimeError):
    """Missing, malformed, or mismatched artifact file"""
