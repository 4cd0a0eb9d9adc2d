"""Error types and logging bootstrap for connsum."""

from __future__ import annotations

import sys
from collections.abc import Iterable

from loguru import logger

LOG_FORMAT = "{time:YYYY-MM-DD HH:mm:ss.SSS} | {level:<7} | {extra[component]:<12} | {message}"


class ConnSumError(Exception):
    """Base exception for connsum failures.

    Params:
        message (str): Human-readable error message.
    Returns:
        None: Raises an exception instance.
    """


class PresentationError(ConnSumError):
    """Raised when a graph or tree presentation violates its invariants."""


class EmptyGraphError(PresentationError):
    """Raised for a finite graph presentation without vertices."""

    def __init__(self) -> None:
        super().__init__("EmptyGraph: a presentation needs at least one vertex")


class DisconnectedError(PresentationError):
    """Raised when the underlying multigraph has several components.

    Params:
        components (Iterable[Iterable[str]]): Vertex ids of each component.
    Returns:
        None: Raises an exception instance.
    """

    def __init__(self, components: Iterable[Iterable[str]]) -> None:
        self.components = [sorted(component) for component in components]
        self.components.sort()
        rendered = ", ".join("{" + ", ".join(c) + "}" for c in self.components)
        super().__init__(f"Disconnected: components {rendered}")


class BadColourIndexError(PresentationError):
    """Raised when a vertex or state carries a colour outside the palette.

    Params:
        item (str): Vertex or state id.
        colour (int): Offending colour index.
        palette_size (int): Number of palette labels.
    Returns:
        None: Raises an exception instance.
    """

    def __init__(self, item: str, colour: int, palette_size: int) -> None:
        self.item = item
        self.colour = colour
        super().__init__(f"BadColourIndex({item}): colour {colour} outside palette of size {palette_size}")


class IncompletePaletteError(PresentationError):
    """Raised when a palette lacks the reserved labels S3 and S2xS1."""


class UnknownVertexError(PresentationError):
    """Raised when an edge names a vertex that is not declared."""

    def __init__(self, vertex: str) -> None:
        self.vertex = vertex
        super().__init__(f"UnknownVertex({vertex})")


class UnknownStateError(PresentationError):
    """Raised when a state id is not part of an automaton."""

    def __init__(self, state: str) -> None:
        self.state = state
        super().__init__(f"UnknownState({state})")


class UnreachableStateError(PresentationError):
    """Raised when an automaton state cannot be reached from the root."""

    def __init__(self, state: str) -> None:
        self.state = state
        super().__init__(f"UnreachableState({state})")


class ReservedColourError(ConnSumError):
    """Raised when a prime count is requested for the reserved S3 colour."""

    def __init__(self) -> None:
        super().__init__("ReservedColour: colour 0 (S3) carries no prime count")


class InfinitelyManyEndsError(ConnSumError):
    """Raised when ends are enumerated on an end space that is infinite."""

    def __init__(self) -> None:
        super().__init__("InfinitelyManyEnds: the end space is infinite")


class PaletteMismatchError(ConnSumError):
    """Raised when two presentations are compared over different palettes."""

    def __init__(self, left: Iterable[str], right: Iterable[str]) -> None:
        super().__init__(f"PaletteMismatch: [{', '.join(left)}] vs [{', '.join(right)}]")


class InvalidSpecError(ConnSumError):
    """Raised when an end-space specification cannot be realized."""

    def __init__(self, reason: str) -> None:
        self.reason = reason
        super().__init__(f"InvalidSpec: {reason}")


class RealizationError(ConnSumError):
    """Raised when a realized presentation does not carry the prescribed invariants."""

    def __init__(self, detail: str) -> None:
        self.detail = detail
        super().__init__(f"RealizationMismatch: {detail}")


class UnfoldLimitError(ConnSumError):
    """Raised when a finite unfolding would exceed the configured node limit."""


class DslError(ConnSumError):
    """Base class for presentation-language failures."""


class DslSyntaxError(DslError):
    """Raised at the first token the grammar cannot accept.

    Params:
        line (int): 1-based line of the offending token.
        column (int): 1-based column of the offending token.
        expected (str): Description of what the grammar expected.
        found (str): Text of the offending token.
    Returns:
        None: Raises an exception instance.
    """

    def __init__(self, line: int, column: int, expected: str, found: str) -> None:
        self.line = line
        self.column = column
        self.expected = expected
        self.found = found
        super().__init__(f"{line}:{column}: expected {expected}, found {found!r}")


class DuplicateIdError(DslError):
    """Raised when a vertex, state or transition is declared twice."""

    def __init__(self, identifier: str, line: int, column: int) -> None:
        self.identifier = identifier
        self.line = line
        self.column = column
        super().__init__(f"{line}:{column}: duplicate id {identifier!r}")


class DslValidationError(DslError):
    """Wraps a validation failure raised while building a parsed value."""

    def __init__(self, cause: Exception) -> None:
        self.cause = cause
        super().__init__(f"ValidationError({cause})")


class UsageError(ConnSumError):
    """Raised for malformed command lines or documents of the wrong kind for a command."""


class InputFileError(ConnSumError):
    """Raised when an input document cannot be read."""


class OutputFileError(ConnSumError):
    """Raised when an output document cannot be written."""


def configure_logging(log_level: str = "WARNING", log_file: str = "") -> None:
    """Configure loguru sinks for stderr and an optional rotating file log.

    Params:
        log_level (str): Minimum severity for the stderr sink.
        log_file (str): Optional file path; empty disables the file sink.
    Returns:
        None: Configures global logger side effects.
    """

    logger.remove()
    logger.configure(extra={"component": "-"})
    if log_file:
        logger.add(
            log_file,
            format=LOG_FORMAT,
            rotation="50 MB",
            retention="7 days",
            level="DEBUG",
        )
    logger.add(sink=sys.stderr, format=LOG_FORMAT, level=log_level)


def get_component_logger(component: str):
    """Return a logger bound to a component name for structured logs.

    Params:
        component (str): Logical module/component identifier.
    Returns:
        loguru.Logger: Bound logger with `component` context.
    """

    return logger.bind(component=component)
