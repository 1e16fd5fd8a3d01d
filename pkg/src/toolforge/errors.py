"""Exception hierarchy shared across the package.

CLI exit codes key off the three top-level families: usage (2), data (3)
and provider (4).
"""

from __future__ import annotations


class ToolforgeError(Exception):
    """Base class for every error raised by toolforge."""

    exit_code = 1
    kind = "error"


class UsageError(ToolforgeError):
    exit_code = 2
    kind = "usage"


class DataError(ToolforgeError):
    """Bad input data: malformed files, unknown ids, schema violations."""

    exit_code = 3
    kind = "data"


class ProviderError(ToolforgeError):
    """An external embedding or LLM provider failed."""

    exit_code = 4
    kind = "provider"


# registry


class MalformedRecord(DataError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class DuplicateId(DataError):
    def __init__(self, kind: str, ident: str, line: int | None = None):
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"duplicate {kind} id {ident!r}{where}")
        self.ident = ident


class UnknownApp(DataError, KeyError):
    def __init__(self, app_id: str):
        DataError.__init__(self, f"unknown app {app_id!r}")
        self.app_id = app_id

    def __str__(self) -> str:
        return self.args[0]


class ToolNotFound(DataError, KeyError):
    def __init__(self, tool_id: str):
        DataError.__init__(self, f"tool not found: {tool_id!r}")
        self.tool_id = tool_id

    def __str__(self) -> str:
        return self.args[0]


# retrieval


class DimensionMismatch(ProviderError):
    pass


class EnrichmentError(ToolforgeError):
    def __init__(self, tool_id: str, cause: BaseException | str):
        super().__init__(f"enrichment failed for {tool_id!r}: {cause}")
        self.tool_id = tool_id
        self.cause = cause


class CatalogTooLarge(DataError):
    pass


class UnparseableReply(ProviderError):
    pass


# metatools


class UnboundTool(DataError):
    """A tool was invoked before being loaded into the session."""

    def __init__(self, tool_id: str):
        super().__init__(f"tool {tool_id!r} is not loaded; call load_tools first")
        self.tool_id = tool_id


class CapacityExceeded(DataError):
    pass


class SchemaViolation(DataError):
    def __init__(self, tool_id: str, field: str, message: str):
        super().__init__(f"{tool_id}: invalid field {field!r}: {message}")
        self.tool_id = tool_id
        self.field = field


class ExecutorError(ToolforgeError):
    pass


# agent


class ScriptError(ToolforgeError):
    exit_code = 3
    kind = "script"


class ScriptExhausted(ScriptError):
    pass


class ScriptMismatch(ScriptError):
    pass


_SLUGS: tuple[tuple[type, str], ...] = (
    (UnboundTool, "unbound_tool"),
    (ToolNotFound, "not_found"),
    (UnknownApp, "unknown_app"),
    (SchemaViolation, "schema_violation"),
    (CapacityExceeded, "capacity_exceeded"),
    (ExecutorError, "executor_error"),
    (ProviderError, "provider_error"),
    (DataError, "invalid_request"),
)


def error_slug(exc: BaseException) -> str:
    """Stable short name for an error, used in observations and RPC error data."""
    for cls, slug in _SLUGS:
        if isinstance(exc, cls):
            return slug
    return "error"
