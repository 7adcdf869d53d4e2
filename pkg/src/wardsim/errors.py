"""Exception types shared across the package."""

from __future__ import annotations


class WardsimError(Exception):
    """Base class for every error raised by wardsim."""


# records
class SchemaError(WardsimError, ValueError):
    def __init__(self, field: str, message: str = "") -> None:
        self.field = field
        super().__init__(f"{field}: {message}" if message else field)


class DuplicateId(WardsimError, ValueError):
    def __init__(self, record_id: str) -> None:
        self.record_id = record_id
        super().__init__(f"duplicate record id {record_id!r}")


# protocol
class RoutingConfigError(WardsimError, ValueError):
    pass


class AddresseeUnresolved(WardsimError, ValueError):
    pass


class ContentContainsReservedToken(WardsimError, ValueError):
    pass


class TranscriptError(WardsimError, RuntimeError):
    pass


# backends
class BackendError(WardsimError, RuntimeError):
    pass


class TransportError(BackendError):
    def __init__(self, message: str, retryable: bool = True) -> None:
        self.retryable = retryable
        super().__init__(message)


class RateLimited(BackendError):
    pass


class Exhausted(BackendError):
    pass


class EmptyCompletion(BackendError):
    pass


class BackendOwnershipError(BackendError):
    pass


# agents / templates
class TemplateError(WardsimError, ValueError):
    pass


class FormatError(WardsimError, ValueError):
    pass


class NoItemsRequested(WardsimError, ValueError):
    pass


# evaluation
class MissingSection(WardsimError, ValueError):
    def __init__(self, name: str) -> None:
        self.name = name
        super().__init__(f"missing report section {name}")


class JudgeFormatError(WardsimError, ValueError):
    pass


class OutOfRange(WardsimError, ValueError):
    pass


class EmptySample(WardsimError, ValueError):
    pass


class DegenerateX(WardsimError, ValueError):
    pass


class LengthMismatch(WardsimError, ValueError):
    pass


class UnknownLabel(WardsimError, ValueError):
    pass


class DictionaryError(WardsimError, ValueError):
    pass


# engine / collaboration
class SessionAborted(WardsimError, RuntimeError):
    """A backend failure stopped a consultation; ``transcript`` holds what was said."""

    def __init__(self, cause: BaseException, transcript) -> None:
        self.cause = cause
        self.transcript = transcript
        super().__init__(f"session {transcript.session_id} aborted: {cause!r}")


class RevisionParseError(WardsimError, ValueError):
    pass


class FinalizeParseError(WardsimError, ValueError):
    pass


class CollaborationError(WardsimError, RuntimeError):
    def __init__(self, cause: BaseException, history) -> None:
        self.cause = cause
        self.history = history
        super().__init__(f"collaboration aborted: {cause!r}")
