"""Error taxonomy shared by every module.

Each error carries a stable ``code`` used in logs and an ``exit_code``
consumed by the CLI: 1 for domain failures, 2 for usage errors, 3 for
I/O and client-transport failures.
"""

from __future__ import annotations


class SpecmutError(Exception):
    """Base class for all toolkit errors."""

    code = "ERROR"
    exit_code = 1

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)


# --- frontend ---------------------------------------------------------------


class ParseError(SpecmutError):
    code = "SYNTAX_ERROR"

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class UnknownAdapterError(SpecmutError):
    code = "UNKNOWN_ADAPTER"


class MalformedReportError(SpecmutError):
    code = "MALFORMED_REPORT"

    def __init__(self, line: int, message: str = "malformed coverage record"):
        self.line = line
        super().__init__(f"line {line}: {message}")


# --- mutgen -----------------------------------------------------------------


class UnknownOperatorError(SpecmutError):
    code = "UNKNOWN_OPERATOR"


class UnparseableResultError(SpecmutError):
    code = "UNPARSEABLE_RESULT"


# --- harness ----------------------------------------------------------------


class TemplateMissingError(SpecmutError):
    code = "TEMPLATE_MISSING"


class RenderError(SpecmutError):
    code = "RENDER_ERROR"


class SpawnFailureError(SpecmutError):
    code = "SPAWN_FAILURE"
    exit_code = 3


# --- metrics ----------------------------------------------------------------


class KExceedsNError(SpecmutError):
    code = "K_EXCEEDS_N"


class FractionOutOfRangeError(SpecmutError):
    code = "FRACTION_OUT_OF_RANGE"


# --- pipeline ---------------------------------------------------------------


class CountExceedsPopulationError(SpecmutError):
    code = "COUNT_EXCEEDS_POPULATION"


class TooFewMutantsError(SpecmutError):
    code = "TOO_FEW_MUTANTS"


class MissingTestsError(SpecmutError):
    code = "MISSING_TESTS"


class ProviderError(SpecmutError):
    code = "PROVIDER_ERROR"
    exit_code = 3


# --- llm client -------------------------------------------------------------


class ClientError(SpecmutError):
    code = "CLIENT_ERROR"
    exit_code = 3


class HttpError(ClientError):
    code = "HTTP_ERROR"

    def __init__(self, status: int, message: str = ""):
        self.status = status
        super().__init__(message or f"HTTP {status}")


class ClientTimeoutError(ClientError):
    code = "TIMEOUT"


class ReplayMissError(ClientError):
    code = "REPLAY_MISS"

    def __init__(self, request_id: str):
        self.request_id = request_id
        super().__init__(f"no transcript entry for request {request_id}")


class AuthMissingError(ClientError):
    code = "AUTH_MISSING"


# --- store ------------------------------------------------------------------


class DuplicateKeyError(SpecmutError):
    code = "DUPLICATE_KEY"


class StoreIOError(SpecmutError):
    code = "IO_ERROR"
    exit_code = 3


class MissingSampleError(SpecmutError):
    code = "MISSING_SAMPLE"

    def __init__(self, group: tuple, gaps: list):
        self.group = group
        self.gaps = gaps
        super().__init__(f"group {group} is missing sample indices {gaps}")


class EmptySelectionError(SpecmutError):
    code = "EMPTY_SELECTION"
