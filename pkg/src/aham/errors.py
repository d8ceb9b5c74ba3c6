"""Exception types shared across the engine."""


class AhamError(Exception):
    """Base class for engine errors."""


class CorpusError(AhamError):
    """Corpus file unreadable, malformed, or violating uniqueness."""


class BackendError(AhamError):
    """A model backend call failed or returned an invalid response."""


class RegistryError(AhamError):
    """Checkpoint registry missing, empty, or inconsistent."""


class ProtocolError(AhamError):
    """A wire-protocol payload does not match the expected schema."""


class LabelError(AhamError):
    """Topic labeling or document classification produced no usable label."""


class PipelineError(AhamError):
    """A pipeline stage failed; carries the stage name."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
