"""Exception types shared across the package."""


class PromptsegError(Exception):
    """Base class for all package-specific failures."""


class ConfigError(PromptsegError):
    """Bad configuration file or config value. Message names the key."""


class DatasetError(PromptsegError):
    """Dataset directory could not be loaded or paired."""


class BackendError(PromptsegError):
    """A model backend call failed."""


class AdapterNotConfiguredError(BackendError):
    """Raised by the stub adapter: the wiring exists but no model is attached."""


class StageError(PromptsegError):
    """Total failure of one pipeline stage. Carries the stage tag."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
