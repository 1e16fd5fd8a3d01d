"""Tool/app catalog, line-delimited ingestion, and per-user connection state."""

from __future__ import annotations

import json
from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field, replace
from pathlib import Path
from types import MappingProxyType
from typing import Any, Mapping, TextIO

from .errors import DataError, DuplicateId, MalformedRecord, ToolNotFound, UnknownApp

DEFAULT_SCHEMA: Mapping[str, Any] = MappingProxyType({"type": "object"})

_TOOL_REQUIRED = ("tool_id", "app_id", "name", "description")
_TOOL_OPTIONAL = ("enriched_context", "input_schema", "output_schema")
_APP_FIELDS = ("app_id", "name", "description")


@dataclass(frozen=True)
class AppSpec:
    app_id: str
    name: str
    description: str = ""

    def to_record(self) -> dict[str, Any]:
        return {"kind": "app", "app_id": self.app_id, "name": self.name, "description": self.description}


@dataclass(frozen=True)
class ToolSpec:
    tool_id: str
    app_id: str
    name: str
    description: str
    enriched_context: str | None = None
    input_schema: Mapping[str, Any] = field(default=DEFAULT_SCHEMA, compare=True)
    output_schema: Mapping[str, Any] = field(default=DEFAULT_SCHEMA, compare=True)

    def __hash__(self) -> int:
        # schemas are plain dicts, so hash on identity fields only
        return hash((self.tool_id, self.app_id, self.name, self.description, self.enriched_context))

    def to_record(self) -> dict[str, Any]:
        rec: dict[str, Any] = {
            "kind": "tool",
            "tool_id": self.tool_id,
            "app_id": self.app_id,
            "name": self.name,
            "description": self.description,
            "input_schema": dict(self.input_schema),
            "output_schema": dict(self.output_schema),
        }
        if self.enriched_context is not None:
            rec["enriched_context"] = self.enriched_context
        return rec


class Registry:
    """Immutable catalog of apps and tools.

    Lookups are case-sensitive. Iteration order is always ascending id, so two
    registries built from the same records in any order behave identically.
    """

    __slots__ = ("_apps", "_tools", "_by_app")

    def __init__(self, apps: Iterable[AppSpec] = (), tools: Iterable[ToolSpec] = ()):
        app_map: dict[str, AppSpec] = {}
        for app in apps:
            if not app.app_id:
                raise DataError("app_id must be non-empty")
            if app.app_id in app_map:
                raise DuplicateId("app", app.app_id)
            app_map[app.app_id] = app
        tool_map: dict[str, ToolSpec] = {}
        by_app: dict[str, list[str]] = {a: [] for a in app_map}
        for tool in tools:
            if not tool.tool_id:
                raise DataError("tool_id must be non-empty")
            if not tool.description.strip():
                raise DataError(f"tool {tool.tool_id!r} has an empty description")
            if tool.tool_id in tool_map:
                raise DuplicateId("tool", tool.tool_id)
            if tool.app_id not in app_map:
                raise UnknownApp(tool.app_id)
            tool_map[tool.tool_id] = tool
            by_app[tool.app_id].append(tool.tool_id)
        self._apps = MappingProxyType(dict(sorted(app_map.items())))
        self._tools = MappingProxyType(dict(sorted(tool_map.items())))
        self._by_app = MappingProxyType({a: tuple(sorted(ids)) for a, ids in sorted(by_app.items())})

    @property
    def apps(self) -> Mapping[str, AppSpec]:
        return self._apps

    @property
    def tools(self) -> Mapping[str, ToolSpec]:
        return self._tools

    def __len__(self) -> int:
        return len(self._tools)

    def __contains__(self, tool_id: object) -> bool:
        return tool_id in self._tools

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Registry):
            return NotImplemented
        return dict(self._apps) == dict(other._apps) and dict(self._tools) == dict(other._tools)

    def __repr__(self) -> str:
        return f"Registry(apps={len(self._apps)}, tools={len(self._tools)})"

    def tool_ids_of_app(self, app_id: str) -> tuple[str, ...]:
        return self._by_app.get(app_id, ())

    def replace_tools(self, tools: Iterable[ToolSpec]) -> Registry:
        """Return a new registry with the given tools swapped in by id."""
        updated = dict(self._tools)
        for tool in tools:
            if tool.tool_id not in updated:
                raise ToolNotFound(tool.tool_id)
            updated[tool.tool_id] = tool
        return Registry(self._apps.values(), updated.values())


@dataclass(frozen=True)
class UserProfile:
    user_id: str
    connected_app_ids: frozenset[str] = frozenset()

    def is_connected(self, app_id: str) -> bool:
        return app_id in self.connected_app_ids


def get_tool(registry: Registry, tool_id: str) -> ToolSpec:
    try:
        return registry.tools[tool_id]
    except KeyError:
        raise ToolNotFound(tool_id) from None


def tools_of_app(registry: Registry, app_id: str) -> list[ToolSpec]:
    return [registry.tools[t] for t in registry.tool_ids_of_app(app_id)]


def set_connection(registry: Registry, profile: UserProfile, app_id: str, connected: bool) -> UserProfile:
    if app_id not in registry.apps:
        raise UnknownApp(app_id)
    ids = set(profile.connected_app_ids)
    if connected:
        ids.add(app_id)
    else:
        ids.discard(app_id)
    return replace(profile, connected_app_ids=frozenset(ids))


def make_profile(registry: Registry, user_id: str, connected: Iterable[str] = ()) -> UserProfile:
    profile = UserProfile(user_id)
    for app_id in connected:
        profile = set_connection(registry, profile, app_id, True)
    return profile


# ---------------------------------------------------------------------------
# line-delimited file format


def _require_str(rec: dict, key: str, line: int, *, allow_empty: bool = False) -> str:
    value = rec.get(key)
    if not isinstance(value, str):
        raise MalformedRecord(line, f"field {key!r} must be a string")
    if not allow_empty and not value.strip():
        raise MalformedRecord(line, f"field {key!r} must be non-empty")
    return value


def _parse_schema(rec: dict, key: str, line: int) -> Mapping[str, Any]:
    if key not in rec:
        return DEFAULT_SCHEMA
    value = rec[key]
    if not isinstance(value, dict):
        raise MalformedRecord(line, f"field {key!r} must be an object")
    return value


def _parse_record(raw: str, line: int) -> AppSpec | ToolSpec:
    try:
        rec = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise MalformedRecord(line, f"invalid JSON: {exc.msg}") from None
    if not isinstance(rec, dict):
        raise MalformedRecord(line, "record must be a JSON object")
    kind = rec.get("kind")
    if kind == "app":
        unknown = set(rec) - {"kind", *_APP_FIELDS}
        if unknown:
            raise MalformedRecord(line, f"unexpected app fields {sorted(unknown)}")
        return AppSpec(
            app_id=_require_str(rec, "app_id", line),
            name=_require_str(rec, "name", line),
            description=_require_str(rec, "description", line, allow_empty=True) if "description" in rec else "",
        )
    if kind == "tool":
        unknown = set(rec) - {"kind", *_TOOL_REQUIRED, *_TOOL_OPTIONAL}
        if unknown:
            raise MalformedRecord(line, f"unexpected tool fields {sorted(unknown)}")
        enriched = rec.get("enriched_context")
        if enriched is not None and not isinstance(enriched, str):
            raise MalformedRecord(line, "field 'enriched_context' must be a string")
        return ToolSpec(
            tool_id=_require_str(rec, "tool_id", line),
            app_id=_require_str(rec, "app_id", line),
            name=_require_str(rec, "name", line),
            description=_require_str(rec, "description", line),
            enriched_context=enriched,
            input_schema=_parse_schema(rec, "input_schema", line),
            output_schema=_parse_schema(rec, "output_schema", line),
        )
    raise MalformedRecord(line, f"unknown record kind {kind!r}")


def ingest_registry(source: Iterable[str] | TextIO) -> Registry:
    """Parse line-delimited app/tool records into a validated registry.

    Blank lines are skipped. Errors carry the 1-based line number of the
    offending record.
    """
    apps: dict[str, tuple[AppSpec, int]] = {}
    tools: dict[str, tuple[ToolSpec, int]] = {}
    for lineno, raw in enumerate(source, start=1):
        if not raw.strip():
            continue
        rec = _parse_record(raw, lineno)
        if isinstance(rec, AppSpec):
            if rec.app_id in apps:
                raise DuplicateId("app", rec.app_id, lineno)
            apps[rec.app_id] = (rec, lineno)
        else:
            if rec.tool_id in tools:
                raise DuplicateId("tool", rec.tool_id, lineno)
            tools[rec.tool_id] = (rec, lineno)
    for tool, lineno in tools.values():
        if tool.app_id not in apps:
            raise MalformedRecord(lineno, f"tool {tool.tool_id!r} references unknown app {tool.app_id!r}")
    return Registry((a for a, _ in apps.values()), (t for t, _ in tools.values()))


def load_registry(path: str | Path) -> Registry:
    with open(path, encoding="utf-8") as fh:
        return ingest_registry(fh)


def export_registry(registry: Registry) -> Iterator[str]:
    """Yield canonical records (apps first, then tools, each by id)."""
    for app in registry.apps.values():
        yield json.dumps(app.to_record(), sort_keys=True, ensure_ascii=False)
    for tool in registry.tools.values():
        yield json.dumps(tool.to_record(), sort_keys=True, ensure_ascii=False)


def save_registry(registry: Registry, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in export_registry(registry):
            fh.write(line + "\n")
