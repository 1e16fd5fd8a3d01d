"""ReAct loop and the five tool-exposure architectures."""

from __future__ import annotations

import json
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from ..errors import DataError, ToolforgeError, error_slug
from ..metatools import (
    META_TOOL_DECLARATIONS,
    Executor,
    MetaTools,
    SearchLimits,
    call_tool,
    default_tools,
    load_tools,
    new_session,
    resolve_tool,
    tool_declaration,
)
from ..registry import Registry, UserProfile
from ..retrieval.searchers import Searcher
from .llm import LLMClient, LLMResponse


class Variant(str, Enum):
    A1 = "A1_direct_search"
    A2 = "A2_query_construction"
    A3 = "A3_search_and_load"
    A4 = "A4_app_aware"
    A5 = "A5_fixed_toolset"

    @classmethod
    def parse(cls, text: str) -> Variant:
        for v in cls:
            if text in (v.name, v.value):
                return v
        raise DataError(f"unknown architecture {text!r}")


VISIBLE_META: dict[Variant, tuple[str, ...]] = {
    Variant.A1: (),
    Variant.A2: ("search_tools",),
    Variant.A3: ("search_tools", "load_tools"),
    Variant.A4: ("search_apps", "search_tools", "load_tools"),
    Variant.A5: ("search_apps", "search_tools", "get_tool_info", "call_tool"),
}

_PROMPTS = {
    Variant.A1: "Use the tools bound below to complete the user's request, then give a final answer.",
    Variant.A2: (
        "First call search_tools with short queries, one per action the request needs. "
        "Every result is loaded for you; then use the tools and give a final answer."
    ),
    Variant.A3: (
        "Call search_tools with short queries, one per action. Pick the tools you need, "
        "call load_tools with their ids, then use them and give a final answer."
    ),
    Variant.A4: (
        "Use search_apps to find relevant applications and search_tools (optionally with an app_id) "
        "to find tools. Call load_tools with the ids you need, then use them and give a final answer."
    ),
    Variant.A5: (
        "Use search_apps and search_tools to find tools, get_tool_info to read their schemas, "
        "and call_tool to run them. Then give a final answer."
    ),
}
_DEFAULTS_NOTE = "The create_table and web_search tools are always available."
_CONNECTED_NOTE = "Search results mark apps the user has connected; prefer them when several apps fit."


def system_prompt(variant: Variant, registry: Registry, include_app_list: bool = False) -> str:
    parts = [_PROMPTS[variant], _DEFAULTS_NOTE, _CONNECTED_NOTE]
    if include_app_list:
        parts.append("Available apps: " + ", ".join(a.name for a in registry.apps.values()) + ".")
    return " ".join(parts)


@dataclass(frozen=True)
class AgentConfig:
    variant: Variant
    baseline_k: int = 10
    limits: SearchLimits = field(default_factory=SearchLimits)
    max_steps: int = 16
    system_prompt: str | None = None  # None: the variant's template
    include_app_list_in_prompt: bool = False

    def __post_init__(self) -> None:
        if self.baseline_k < 1:
            raise DataError("baseline_k must be >= 1")
        if self.max_steps < 1:
            raise DataError("max_steps must be >= 1")


@dataclass
class Environment:
    registry: Registry
    searcher: Searcher
    executor: Executor
    llm_client: LLMClient
    user_profile: UserProfile | None = None


def _dumps(value: Any) -> str:
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


@dataclass
class Transcript:
    """Ordered event log of one session. Counters are derived from the events."""

    events: list[dict[str, Any]] = field(default_factory=list)

    @property
    def tools_loaded(self) -> int:
        return sum(len(e.get("loaded", ())) for e in self.events)

    @property
    def llm_calls(self) -> int:
        return sum(1 for e in self.events if e["type"] == "llm_call")

    @property
    def final(self) -> str:
        last = self.events[-1] if self.events else None
        return last["text"] if last and last["type"] == "final_answer" else ""

    @property
    def completed(self) -> bool:
        return bool(self.events) and self.events[-1]["type"] == "final_answer"

    @property
    def truncated(self) -> bool:
        return bool(self.events) and self.events[-1]["type"] == "truncated"

    def bound_tools(self) -> list[str]:
        return [t for e in self.events for t in e.get("loaded", ())]

    def successful_calls(self) -> list[str]:
        """Tool ids executed successfully, directly or through ``call_tool``."""
        out = []
        for e in self.events:
            if not e.get("ok"):
                continue
            if e["type"] == "tool_call":
                out.append(e["name"])
            elif e["type"] == "meta_tool_call" and e["name"] == "call_tool":
                out.append(e["args"].get("tool_id"))
        return out

    def to_jsonl(self) -> str:
        return "".join(_dumps(e) + "\n" for e in self.events)

    @classmethod
    def from_jsonl(cls, text: str) -> Transcript:
        return cls([json.loads(line) for line in text.splitlines() if line.strip()])


def count_metrics(transcript: Transcript) -> dict[str, int]:
    """Tally a transcript. ``steps`` counts LLM turns that acted (invoked tools)."""
    return {
        "tools_loaded": transcript.tools_loaded,
        "llm_calls": transcript.llm_calls,
        "meta_calls": sum(1 for e in transcript.events if e["type"] == "meta_tool_call"),
        "steps": sum(1 for e in transcript.events if e["type"] == "llm_call" and "tool_calls" in e["response"]),
    }


class _StepLimit(Exception):
    pass


class Session:
    """Mutable state of one conversation: bound tools, history and the event log."""

    def __init__(self, config: AgentConfig, env: Environment):
        self.config = config
        self.env = env
        self.variant = config.variant
        self.meta = MetaTools(
            registry=env.registry,
            searcher=env.searcher,
            executor=env.executor,
            limits=config.limits,
            user=env.user_profile,
            session=new_session(),
            require_bound=self.variant is not Variant.A5,
        )
        self.system = config.system_prompt or system_prompt(self.variant, env.registry, config.include_app_list_in_prompt)
        self.history: list[dict[str, Any]] = []
        self.transcript = Transcript()

    # events

    def emit(self, event: dict[str, Any], *, terminal: bool = False) -> dict[str, Any]:
        # keep one slot free so the log can always end with a terminal event
        if not terminal and len(self.transcript.events) >= self.config.max_steps - 1:
            raise _StepLimit
        self.transcript.events.append(event)
        return event

    def visible_tools(self) -> list[dict[str, Any]]:
        decls = [META_TOOL_DECLARATIONS[name] for name in VISIBLE_META[self.variant]]
        for tool_id in self.meta.session.bound:
            decls.append(tool_declaration(resolve_tool(self.env.registry, tool_id)))
        return decls

    def _bind(self, tool_ids: Sequence[str]) -> list[str]:
        before = set(self.meta.session.bound)
        self.meta.session = load_tools(self.meta.session, tool_ids, self.env.registry)
        return [t for t in self.meta.session.bound if t not in before]

    # dispatch

    def _observe(self, name: str, text: str) -> None:
        self.history.append({"role": "tool", "name": name, "content": text})

    def _error_event(self, kind: str, name: str, args: dict[str, Any], exc: ToolforgeError) -> dict[str, Any]:
        slug = error_slug(exc)
        self._observe(name, f"[{name}] error ({slug}): {exc}")
        return self.emit({"type": kind, "name": name, "args": args, "ok": False, "error": {"kind": slug, "message": str(exc)}})

    def dispatch(self, name: str, args: dict[str, Any]) -> dict[str, Any]:
        if name in VISIBLE_META[self.variant]:
            return self._dispatch_meta(name, args)
        try:
            if name not in self.meta.session.bound:
                resolve_tool(self.env.registry, name)  # not-found vs unbound
            result = call_tool(self.env.executor, name, args, self.meta.session, self.env.registry, require_bound=True)
        except ToolforgeError as exc:
            return self._error_event("tool_call", name, args, exc)
        self._observe(name, f"[{name}] ok\n{_dumps(result)}")
        return self.emit({"type": "tool_call", "name": name, "args": args, "ok": True, "result": result})

    def _dispatch_meta(self, name: str, args: dict[str, Any]) -> dict[str, Any]:
        event: dict[str, Any] = {"type": "meta_tool_call", "name": name, "args": args, "ok": True}
        try:
            if name == "search_tools":
                found = self.meta.search_tools_result(args)
                event["result"] = found.to_dict()
                text = found.render()
                if self.variant is Variant.A2:
                    event["loaded"] = self._bind(found.tool_ids)
                    text += f"\nLoaded {len(event['loaded'])} tools."
            else:
                result = self.meta.handler(name)(args)
                if name == "load_tools":
                    event["loaded"] = result["loaded"]
                event["result"] = result
                text = _dumps(result)
        except ToolforgeError as exc:
            return self._error_event("meta_tool_call", name, args, exc)
        self._observe(name, f"[{name}] ok\n{text}")
        return self.emit(event)

    # loop

    def react_step(self, llm_client: LLMClient, visible_tools: list[dict[str, Any]]) -> list[dict[str, Any]]:
        """One LLM call plus dispatch of whatever it asked for. Returns the new events."""
        start = len(self.transcript.events)
        response: LLMResponse = llm_client.complete(self.system, list(self.history), visible_tools)
        self.emit({"type": "llm_call", "visible_tools": [t["name"] for t in visible_tools], "response": response.to_dict()})
        if response.is_final:
            self.history.append({"role": "assistant", "content": response.text or ""})
            self.emit({"type": "final_answer", "text": response.text or ""}, terminal=True)
        else:
            self.history.append({"role": "assistant", "tool_calls": [c.to_dict() for c in response.tool_calls]})
            for call in response.tool_calls:
                self.dispatch(call.name, call.args)
        return self.transcript.events[start:]

    def run(self, user_message: str) -> Transcript:
        self.history.append({"role": "user", "content": user_message})
        try:
            if self.variant is Variant.A1:
                hits = self.env.searcher.search(user_message, self.config.baseline_k)
                ids = [h.tool_id for h in hits]
                self.emit({"type": "bind", "by": "system", "query": user_message, "tool_ids": ids, "loaded": self._bind(ids)})
            while True:
                events = self.react_step(self.env.llm_client, self.visible_tools())
                if events and events[-1]["type"] == "final_answer":
                    break
        except _StepLimit:
            self.emit({"type": "truncated", "reason": "max_steps"}, terminal=True)
        return self.transcript


def run_session(config: AgentConfig, user_message: str, env: Environment) -> Transcript:
    return Session(config, env).run(user_message)


def default_tool_ids() -> list[str]:
    return [t.tool_id for t in default_tools()]
