"""Exception types shared by the solver, the study runner and the CLI."""

from typing import Optional


class WgBiotError(Exception):
    """Base class for every error raised on purpose by wgbiot."""


class MeshError(WgBiotError, ValueError):
    """A mesh violates one of its structural invariants."""


class MeshFormatError(MeshError):
    """A mesh file could not be parsed."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConfigError(WgBiotError, ValueError):
    """A study configuration is incomplete or inconsistent."""


class SolverError(WgBiotError, RuntimeError):
    """The coupled linear system could not be solved to tolerance."""

    def __init__(self, message: str, step: Optional[int] = None, level: Optional[str] = None):
        self.detail = message
        self.step = step
        self.level = level
        context = []
        if level is not None:
            context.append(f"level {level}")
        if step is not None:
            context.append(f"step {step}")
        if context:
            message = f"{', '.join(context)}: {message}"
        super().__init__(message)
