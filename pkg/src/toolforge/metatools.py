"""The fixed tool layer an agent always sees, plus the always-bound default tools.

Functions here operate on plain values. ``MetaTools`` wraps them for one
session and speaks the wire shapes (``queries``, ``tool_ids``, ``app_id``,
``args``) used by both the agent loop and the stdio server.
"""

from __future__ import annotations

import json
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field, replace
from typing import Any, Protocol

import jsonschema

from .errors import CapacityExceeded, DataError, ExecutorError, SchemaViolation, ToolNotFound, UnboundTool, UnknownApp
from .registry import Registry, ToolSpec, UserProfile
from .retrieval.searchers import Searcher

REMINDER = "Reminder: call load_tools with the chosen tool IDs before invoking any of these tools."
BUILTIN_APP = "builtin"


@dataclass(frozen=True)
class SearchEntry:
    query: str
    app_id: str | None = None


@dataclass(frozen=True)
class SearchRequest:
    entries: tuple[SearchEntry, ...]

    def __post_init__(self) -> None:
        if not self.entries:
            raise DataError("search request needs at least one query")
        for e in self.entries:
            if not isinstance(e.query, str) or not e.query.strip():
                raise DataError("search queries must be non-empty strings")

    @classmethod
    def of(cls, *queries: str | tuple[str, str | None]) -> SearchRequest:
        return cls(tuple(SearchEntry(*q) if isinstance(q, tuple) else SearchEntry(q) for q in queries))

    @classmethod
    def from_wire(cls, queries: Any) -> SearchRequest:
        """Accept a list of strings (query-only) or of ``{query, app_id?}`` objects (app-filtered)."""
        if not isinstance(queries, list):
            raise DataError("'queries' must be a list")
        entries = []
        for q in queries:
            if isinstance(q, str):
                entries.append(SearchEntry(q))
            elif isinstance(q, dict) and set(q) <= {"query", "app_id"}:
                app_id = q.get("app_id")
                if app_id is not None and not isinstance(app_id, str):
                    raise DataError("'app_id' must be a string")
                entries.append(SearchEntry(q.get("query", ""), app_id))
            else:
                raise DataError("each query must be a string or an object with 'query' and optional 'app_id'")
        return cls(tuple(entries))


@dataclass(frozen=True)
class SearchLimits:
    k1: int = 20
    k2: int = 5

    def __post_init__(self) -> None:
        if not (isinstance(self.k1, int) and isinstance(self.k2, int) and self.k1 >= self.k2 >= 1):
            raise DataError(f"search limits need k1 >= k2 >= 1, got k1={self.k1}, k2={self.k2}")


@dataclass(frozen=True)
class SearchItem:
    tool_id: str
    app_id: str
    name: str
    description: str
    app_connected: bool
    score: float
    rank: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "tool_id": self.tool_id,
            "app_id": self.app_id,
            "name": self.name,
            "description": self.description,
            "app_connected": self.app_connected,
        }


@dataclass(frozen=True)
class SearchToolsResult:
    items: tuple[SearchItem, ...]
    reminder: str = REMINDER

    @property
    def tool_ids(self) -> list[str]:
        return [i.tool_id for i in self.items]

    def to_dict(self) -> dict[str, Any]:
        return {"items": [i.to_dict() for i in self.items], "reminder": self.reminder}

    def render(self) -> str:
        """Plain-text form for an LLM context window."""
        lines = []
        for i in self.items:
            tag = " [connected]" if i.app_connected else ""
            lines.append(f"- {i.tool_id} (app: {i.app_id}{tag}): {i.description}")
        lines.append(self.reminder)
        return "\n".join(lines)


def search_apps(searcher: Searcher, query: str, k: int) -> list[dict[str, Any]]:
    registry = searcher.registry
    return [
        {"app_id": h.tool_id, "name": registry.apps[h.tool_id].name, "score": h.score}
        for h in searcher.search_apps(query, k)
    ]


def search_tools(
    registry: Registry,
    request: SearchRequest,
    limits: SearchLimits,
    searcher: Searcher,
    user: UserProfile | None = None,
) -> SearchToolsResult:
    """Two-level search: top-k1 per query, dedup across queries, at most k2 per app.

    A tool found by several queries keeps its best score and best rank. Output
    order depends only on the merged (rank, score, id) values, so reordering
    the request entries never changes the result.
    """
    for entry in request.entries:
        if entry.app_id is not None and entry.app_id not in registry.apps:
            raise UnknownApp(entry.app_id)
    best: dict[str, tuple[float, int]] = {}
    for entry in dict.fromkeys(request.entries):
        for hit in searcher.search(entry.query, limits.k1, entry.app_id):
            score, rank = best.get(hit.tool_id, (float("-inf"), hit.rank))
            best[hit.tool_id] = (max(score, hit.score), min(rank, hit.rank))

    per_app: dict[str, list[str]] = {}
    for tool_id in sorted(best, key=lambda t: (-best[t][0], best[t][1], t)):
        kept = per_app.setdefault(registry.tools[tool_id].app_id, [])
        if len(kept) < limits.k2:
            kept.append(tool_id)

    chosen = sorted((t for kept in per_app.values() for t in kept), key=lambda t: (best[t][1], -best[t][0], t))
    items = []
    for tool_id in chosen:
        tool = registry.tools[tool_id]
        items.append(
            SearchItem(
                tool_id=tool_id,
                app_id=tool.app_id,
                name=tool.name,
                description=tool.description,
                app_connected=bool(user and user.is_connected(tool.app_id)),
                score=best[tool_id][0],
                rank=best[tool_id][1],
            )
        )
    return SearchToolsResult(tuple(items))


# ---------------------------------------------------------------------------
# default tools


def _table_schema() -> dict[str, Any]:
    return {
        "type": "object",
        "properties": {
            "rows": {"type": "array", "items": {"type": "array"}, "minItems": 1},
            "headers": {"type": "array", "items": {"type": "string"}},
        },
        "required": ["rows"],
    }


CREATE_TABLE = ToolSpec(
    tool_id="create_table",
    app_id=BUILTIN_APP,
    name="create_table",
    description="Build a formatted table from rows of values, with optional column headers.",
    input_schema=_table_schema(),
    output_schema={
        "type": "object",
        "properties": {
            "columns": {"type": "integer"},
            "row_count": {"type": "integer"},
            "rows": {"type": "array"},
            "table": {"type": "string"},
        },
        "required": ["columns", "row_count", "table"],
    },
)

WEB_SEARCH = ToolSpec(
    tool_id="web_search",
    app_id=BUILTIN_APP,
    name="web_search",
    description="Search the web for general-purpose information and return result snippets.",
    input_schema={"type": "object", "properties": {"query": {"type": "string", "minLength": 1}}, "required": ["query"]},
    output_schema={"type": "object", "properties": {"results": {"type": "array"}}, "required": ["results"]},
)

_DEFAULTS = {t.tool_id: t for t in (CREATE_TABLE, WEB_SEARCH)}


def default_tools() -> list[ToolSpec]:
    return list(_DEFAULTS.values())


def is_default_tool(tool_id: str) -> bool:
    return tool_id in _DEFAULTS


def create_table(rows: Sequence[Sequence[Any]], headers: Sequence[str] | None = None) -> dict[str, Any]:
    width = max(len(r) for r in rows)
    if headers is not None:
        width = max(width, len(headers))
    cells = [[str(c) for c in r] + [""] * (width - len(r)) for r in rows]
    head = list(headers) + [""] * (width - len(headers)) if headers is not None else None
    body = ([head] if head else []) + cells
    widths = [max(len(row[c]) for row in body) for c in range(width)]

    def fmt(row: list[str]) -> str:
        return "| " + " | ".join(v.ljust(w) for v, w in zip(row, widths)) + " |"

    lines = []
    if head:
        lines += [fmt(head), "|" + "|".join("-" * (w + 2) for w in widths) + "|"]
    lines += [fmt(r) for r in cells]
    return {"columns": width, "row_count": len(cells), "rows": cells, "table": "\n".join(lines)}


# ---------------------------------------------------------------------------
# sessions


@dataclass(frozen=True)
class SessionToolSet:
    """Tools bound into one conversation. Default tools are bound from the start."""

    bound: tuple[str, ...] = tuple(_DEFAULTS)
    load_events: int = 0
    capacity: int | None = None

    @property
    def dynamic(self) -> tuple[str, ...]:
        return tuple(t for t in self.bound if not is_default_tool(t))

    def is_bound(self, tool_id: str) -> bool:
        return tool_id in self.bound


def new_session(capacity: int | None = None) -> SessionToolSet:
    return SessionToolSet(capacity=capacity)


def load_tools(session: SessionToolSet, tool_ids: Iterable[str], registry: Registry) -> SessionToolSet:
    """Bind ``tool_ids`` (set semantics). All-or-nothing: one bad id binds nothing."""
    tool_ids = list(tool_ids)
    unknown = [t for t in tool_ids if t not in registry and not is_default_tool(t)]
    if unknown:
        raise ToolNotFound(unknown[0])
    new = [t for t in dict.fromkeys(tool_ids) if t not in session.bound]
    if session.capacity is not None and len(session.dynamic) + len(new) > session.capacity:
        raise CapacityExceeded(f"loading {len(new)} tools would exceed the session capacity of {session.capacity}")
    return replace(session, bound=session.bound + tuple(new), load_events=session.load_events + 1)


@dataclass(frozen=True)
class ToolInfo:
    tool_id: str
    docstring: str
    input_schema: Mapping[str, Any]
    output_schema: Mapping[str, Any]

    def to_dict(self) -> dict[str, Any]:
        return {
            "tool_id": self.tool_id,
            "docstring": self.docstring,
            "input_schema": dict(self.input_schema),
            "output_schema": dict(self.output_schema),
        }


def resolve_tool(registry: Registry, tool_id: str) -> ToolSpec:
    if tool_id in _DEFAULTS:
        return _DEFAULTS[tool_id]
    try:
        return registry.tools[tool_id]
    except KeyError:
        raise ToolNotFound(tool_id) from None


def get_tool_info(registry: Registry, tool_ids: Iterable[str]) -> tuple[list[ToolInfo], list[str]]:
    """Return infos for known ids in request order, and the unknown ids."""
    infos, unknown = [], []
    for tool_id in tool_ids:
        try:
            tool = resolve_tool(registry, tool_id)
        except ToolNotFound:
            unknown.append(tool_id)
            continue
        infos.append(ToolInfo(tool.tool_id, tool.description, tool.input_schema, tool.output_schema))
    return infos, unknown


# ---------------------------------------------------------------------------
# execution


class Executor(Protocol):
    def execute(self, tool_id: str, args: Mapping[str, Any]) -> Any: ...


class FakeExecutor:
    """Deterministic executor: canned payloads (or callables) keyed by tool id."""

    def __init__(self, responses: Mapping[str, Any] | None = None, *, default: Any = None):
        self.responses = dict(responses or {})
        self.default = default
        self.calls: list[tuple[str, dict[str, Any]]] = []

    def execute(self, tool_id: str, args: Mapping[str, Any]) -> Any:
        self.calls.append((tool_id, dict(args)))
        if tool_id in self.responses:
            payload = self.responses[tool_id]
        elif tool_id == WEB_SEARCH.tool_id:
            payload = {"results": [{"title": f"Result for {args.get('query', '')}", "snippet": ""}]}
        elif self.default is not None:
            payload = self.default
        else:
            payload = {"status": "ok", "tool_id": tool_id}
        return payload(tool_id, dict(args)) if callable(payload) else json.loads(json.dumps(payload))


def _first_error_field(error: jsonschema.ValidationError) -> str:
    if error.validator == "required" and isinstance(error.instance, dict):
        missing = [f for f in error.validator_value if f not in error.instance]
        if missing:
            return ".".join([*map(str, error.absolute_path), missing[0]])
    return ".".join(map(str, error.absolute_path)) or "<root>"


def validate_args(tool: ToolSpec, args: Any) -> None:
    validator = jsonschema.Draft202012Validator(dict(tool.input_schema))
    errors = sorted(validator.iter_errors(args), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    if errors:
        raise SchemaViolation(tool.tool_id, _first_error_field(errors[0]), errors[0].message)


def call_tool(
    executor: Executor,
    tool_id: str,
    args: Any,
    session: SessionToolSet,
    registry: Registry,
    *,
    require_bound: bool = True,
) -> Any:
    """Validate and dispatch one tool invocation.

    With ``require_bound`` (every architecture except the fixed-toolset one)
    the tool must already be loaded into ``session``.
    """
    tool = resolve_tool(registry, tool_id)
    if require_bound and not session.is_bound(tool_id):
        raise UnboundTool(tool_id)
    validate_args(tool, args)
    if tool_id == CREATE_TABLE.tool_id:
        result = create_table(args["rows"], args.get("headers"))
    else:
        try:
            result = executor.execute(tool_id, args)
        except Exception as exc:
            raise ExecutorError(f"{tool_id}: executor failed: {exc}") from exc
    try:
        jsonschema.validate(result, dict(tool.output_schema), cls=jsonschema.Draft202012Validator)
    except jsonschema.ValidationError as exc:
        raise ExecutorError(f"{tool_id}: result does not match output schema: {exc.message}") from None
    return result


# ---------------------------------------------------------------------------
# declarations and wire-level dispatch

META_TOOL_NAMES = ("search_apps", "search_tools", "load_tools", "get_tool_info", "call_tool")

_QUERY_ITEM = {
    "anyOf": [
        {"type": "string"},
        {
            "type": "object",
            "properties": {"query": {"type": "string"}, "app_id": {"type": "string"}},
            "required": ["query"],
        },
    ]
}

META_TOOL_DECLARATIONS: dict[str, dict[str, Any]] = {
    "search_apps": {
        "name": "search_apps",
        "description": "Find applications relevant to a query.",
        "input_schema": {
            "type": "object",
            "properties": {"query": {"type": "string"}, "k": {"type": "integer", "minimum": 1}},
            "required": ["query"],
        },
    },
    "search_tools": {
        "name": "search_tools",
        "description": (
            "Search the tool registry. Pass one short query per action you need; "
            "each may be restricted to an app_id. Results list tool ids to load."
        ),
        "input_schema": {
            "type": "object",
            "properties": {"queries": {"type": "array", "items": _QUERY_ITEM, "minItems": 1}},
            "required": ["queries"],
        },
    },
    "load_tools": {
        "name": "load_tools",
        "description": "Bind the given tool ids so they can be called directly.",
        "input_schema": {
            "type": "object",
            "properties": {"tool_ids": {"type": "array", "items": {"type": "string"}}},
            "required": ["tool_ids"],
        },
    },
    "get_tool_info": {
        "name": "get_tool_info",
        "description": "Return the docstring, input schema and output schema of the given tools.",
        "input_schema": {
            "type": "object",
            "properties": {"tool_ids": {"type": "array", "items": {"type": "string"}}},
            "required": ["tool_ids"],
        },
    },
    "call_tool": {
        "name": "call_tool",
        "description": "Execute a tool by id with the given arguments.",
        "input_schema": {
            "type": "object",
            "properties": {"tool_id": {"type": "string"}, "args": {"type": "object"}},
            "required": ["tool_id"],
        },
    },
}


def tool_declaration(tool: ToolSpec) -> dict[str, Any]:
    return {"name": tool.tool_id, "description": tool.description, "input_schema": dict(tool.input_schema)}


def _params(params: Any, required: Sequence[str]) -> dict[str, Any]:
    if params is None:
        params = {}
    if not isinstance(params, dict):
        raise DataError("params must be an object")
    for key in required:
        if key not in params:
            raise DataError(f"missing parameter {key!r}")
    return params


def _id_list(value: Any, key: str) -> list[str]:
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise DataError(f"{key!r} must be a list of strings")
    return value


@dataclass
class MetaTools:
    """One session's meta-tool surface. Methods take and return JSON-shaped values."""

    registry: Registry
    searcher: Searcher
    executor: Executor
    limits: SearchLimits = field(default_factory=SearchLimits)
    user: UserProfile | None = None
    session: SessionToolSet = field(default_factory=new_session)
    require_bound: bool = True
    app_k: int = 10

    def search_apps(self, params: Any) -> dict[str, Any]:
        p = _params(params, ["query"])
        query, k = p["query"], p.get("k", self.app_k)
        if not isinstance(query, str) or not query.strip():
            raise DataError("'query' must be a non-empty string")
        if not isinstance(k, int) or isinstance(k, bool) or k < 1:
            raise DataError("'k' must be a positive integer")
        return {"apps": search_apps(self.searcher, query, k)}

    def search_tools(self, params: Any) -> dict[str, Any]:
        p = _params(params, ["queries"])
        request = SearchRequest.from_wire(p["queries"])
        return search_tools(self.registry, request, self.limits, self.searcher, self.user).to_dict()

    def search_tools_result(self, params: Any) -> SearchToolsResult:
        p = _params(params, ["queries"])
        return search_tools(self.registry, SearchRequest.from_wire(p["queries"]), self.limits, self.searcher, self.user)

    def load_tools(self, params: Any) -> dict[str, Any]:
        p = _params(params, ["tool_ids"])
        before = set(self.session.bound)
        self.session = load_tools(self.session, _id_list(p["tool_ids"], "tool_ids"), self.registry)
        newly = [t for t in self.session.bound if t not in before]
        return {"loaded": newly, "bound": list(self.session.dynamic)}

    def get_tool_info(self, params: Any) -> dict[str, Any]:
        p = _params(params, ["tool_ids"])
        infos, unknown = get_tool_info(self.registry, _id_list(p["tool_ids"], "tool_ids"))
        return {"tools": [i.to_dict() for i in infos], "unknown": unknown}

    def call_tool(self, params: Any) -> dict[str, Any]:
        p = _params(params, ["tool_id"])
        tool_id = p["tool_id"]
        if not isinstance(tool_id, str):
            raise DataError("'tool_id' must be a string")
        args = p.get("args", {})
        result = call_tool(self.executor, tool_id, args, self.session, self.registry, require_bound=self.require_bound)
        return {"tool_id": tool_id, "result": result}

    def handler(self, name: str) -> Callable[[Any], dict[str, Any]] | None:
        return getattr(self, name) if name in META_TOOL_NAMES else None
