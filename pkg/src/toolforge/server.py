"""Line-delimited JSON-RPC 2.0 over stdio, exposing the meta tools.

One request per line, one response per line. Each connection owns one
session, so tools loaded by ``load_tools`` stay bound until the input closes.
Malformed frames get an error response; nothing short of EOF stops the loop.
"""

from __future__ import annotations

import json
import logging
from collections.abc import Callable
from typing import Any, TextIO

from .errors import (
    CapacityExceeded,
    ExecutorError,
    ProviderError,
    SchemaViolation,
    ToolforgeError,
    ToolNotFound,
    UnboundTool,
    UnknownApp,
    error_slug,
)
from .metatools import META_TOOL_NAMES, MetaTools

log = logging.getLogger(__name__)

PARSE_ERROR = -32700
INVALID_REQUEST = -32600
METHOD_NOT_FOUND = -32601
INVALID_PARAMS = -32602
INTERNAL_ERROR = -32603
TOOL_ERROR = -32001

# failures of the requested operation itself, as opposed to a malformed call
_TOOL_ERRORS = (UnboundTool, ToolNotFound, UnknownApp, SchemaViolation, CapacityExceeded, ExecutorError, ProviderError)


def encode(message: dict[str, Any]) -> str:
    return json.dumps(message, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def _error(request_id: Any, code: int, message: str, data: Any = None) -> dict[str, Any]:
    err: dict[str, Any] = {"code": code, "message": message}
    if data is not None:
        err["data"] = data
    return {"jsonrpc": "2.0", "id": request_id, "error": err}


def _valid_id(value: Any) -> bool:
    return value is None or (isinstance(value, (str, int)) and not isinstance(value, bool))


class MetaToolServer:
    """Dispatches JSON-RPC frames to one :class:`MetaTools` session."""

    def __init__(self, meta: MetaTools):
        self.meta = meta

    def handle_message(self, msg: Any) -> dict[str, Any] | None:
        """Handle one decoded request object. Notifications return None."""
        if not isinstance(msg, dict) or msg.get("jsonrpc") != "2.0" or not isinstance(msg.get("method"), str):
            rid = msg.get("id") if isinstance(msg, dict) and _valid_id(msg.get("id")) else None
            return _error(rid, INVALID_REQUEST, "Invalid Request")
        if "id" in msg and not _valid_id(msg["id"]):
            return _error(None, INVALID_REQUEST, "Invalid Request")
        notification = "id" not in msg
        rid = msg.get("id")
        params = msg.get("params")
        if params is not None and not isinstance(params, (dict, list)):
            return None if notification else _error(rid, INVALID_REQUEST, "Invalid Request")
        method = msg["method"]
        if method not in META_TOOL_NAMES:
            return None if notification else _error(rid, METHOD_NOT_FOUND, "Method not found", {"method": method})
        try:
            result = self.meta.handler(method)(params)
        except _TOOL_ERRORS as exc:
            response = _error(rid, TOOL_ERROR, str(exc), {"kind": error_slug(exc)})
        except ToolforgeError as exc:
            response = _error(rid, INVALID_PARAMS, str(exc), {"kind": error_slug(exc)})
        except Exception as exc:  # keep serving whatever a handler does
            log.exception("handler %s failed", method)
            response = _error(rid, INTERNAL_ERROR, "Internal error", {"kind": type(exc).__name__})
        else:
            response = {"jsonrpc": "2.0", "id": rid, "result": result}
        return None if notification else response

    def handle_line(self, line: str) -> str | None:
        """Handle one raw frame; returns the encoded reply or None."""
        try:
            msg = json.loads(line)
        except (json.JSONDecodeError, RecursionError):
            return encode(_error(None, PARSE_ERROR, "Parse error"))
        if isinstance(msg, list):
            if not msg:
                return encode(_error(None, INVALID_REQUEST, "Invalid Request"))
            replies = [r for r in map(self.handle_message, msg) if r is not None]
            return encode(replies) if replies else None  # type: ignore[arg-type]
        reply = self.handle_message(msg)
        return None if reply is None else encode(reply)

    def serve(self, stdin: TextIO, stdout: TextIO) -> None:
        for raw in stdin:
            if not raw.strip():
                continue
            try:
                reply = self.handle_line(raw)
            except Exception:  # pragma: no cover - last-resort guard
                log.exception("unhandled frame")
                reply = encode(_error(None, INTERNAL_ERROR, "Internal error"))
            if reply is not None:
                stdout.write(reply + "\n")
                stdout.flush()


def serve_metatools(session_factory: Callable[[], MetaTools], stdin: TextIO, stdout: TextIO) -> None:
    """Serve one connection on the given streams until the input closes."""
    MetaToolServer(session_factory()).serve(stdin, stdout)
