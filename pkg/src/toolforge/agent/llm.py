"""Chat-with-tools client contract and a scripted, deterministic implementation."""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import Any, Protocol

from ..errors import DataError, ScriptExhausted, ScriptMismatch


@dataclass(frozen=True)
class ToolCall:
    name: str
    args: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name, "args": self.args}


@dataclass(frozen=True)
class LLMResponse:
    """Either one or more tool calls (processed in order) or final text."""

    tool_calls: tuple[ToolCall, ...] = ()
    text: str | None = None

    @property
    def is_final(self) -> bool:
        return not self.tool_calls

    def to_dict(self) -> dict[str, Any]:
        if self.tool_calls:
            return {"tool_calls": [c.to_dict() for c in self.tool_calls]}
        return {"text": self.text or ""}


class LLMClient(Protocol):
    def complete(self, system: str, messages: Sequence[dict[str, Any]], tools: Sequence[dict[str, Any]]) -> LLMResponse: ...


Guard = Callable[[str, Sequence[dict[str, Any]], Sequence[dict[str, Any]]], bool]


@dataclass(frozen=True)
class ScriptedTurn:
    response: LLMResponse
    expect_tools: tuple[str, ...] = ()  # must all be visible when this turn is consumed
    expect_observation: tuple[str, ...] = ()  # substrings of the latest tool observation
    guard: Guard | None = None

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ScriptedTurn:
        allowed = {"call", "final", "expect_tools", "expect_observation"}
        if not isinstance(data, dict) or set(data) - allowed:
            raise DataError(f"script turn must be an object with keys from {sorted(allowed)}")
        if ("call" in data) == ("final" in data):
            raise DataError("script turn needs exactly one of 'call' or 'final'")
        if "call" in data:
            calls = data["call"]
            if isinstance(calls, dict):
                calls = [calls]
            response = LLMResponse(tuple(ToolCall(c["name"], dict(c.get("args", {}))) for c in calls))
        else:
            response = LLMResponse(text=str(data["final"]))
        return cls(response, tuple(data.get("expect_tools", ())), tuple(data.get("expect_observation", ())))


def _latest_observation(messages: Sequence[dict[str, Any]]) -> str:
    for msg in reversed(messages):
        if msg.get("role") == "tool":
            return msg.get("content", "")
        if msg.get("role") == "assistant":
            break
    return ""


class ScriptedLLMClient:
    """Replays a fixed list of turns. Reading past the end raises ScriptExhausted."""

    def __init__(self, turns: Sequence[ScriptedTurn]):
        self.turns = list(turns)
        self.position = 0

    @classmethod
    def from_dicts(cls, turns: Sequence[dict[str, Any]]) -> ScriptedLLMClient:
        return cls([ScriptedTurn.from_dict(t) for t in turns])

    def complete(self, system: str, messages: Sequence[dict[str, Any]], tools: Sequence[dict[str, Any]]) -> LLMResponse:
        if self.position >= len(self.turns):
            raise ScriptExhausted(f"script has only {len(self.turns)} turns")
        turn = self.turns[self.position]
        index = self.position
        self.position += 1
        visible = {t["name"] for t in tools}
        missing = [name for name in turn.expect_tools if name not in visible]
        if missing:
            raise ScriptMismatch(f"turn {index}: expected visible tools {missing}")
        observation = _latest_observation(messages)
        absent = [s for s in turn.expect_observation if s not in observation]
        if absent:
            raise ScriptMismatch(f"turn {index}: latest observation lacks {absent}")
        if turn.guard is not None and not turn.guard(system, messages, tools):
            raise ScriptMismatch(f"turn {index}: guard rejected context")
        return turn.response
