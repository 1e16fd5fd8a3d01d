"""Scripted scenarios: one user message with a paired script per architecture.

A scenario file is a JSON object::

    {
      "scenario_id": "twitter_sheets",
      "registry": "workspace.jsonl",          # relative to the scenario file
      "user_message": "...",
      "connected_apps": ["twitter"],
      "required_calls": ["twitter__get_user_mentions", ...],
      "responses": {"tool_id": {...canned payload...}},
      "scripts": {"A1": [turn, ...], "A3": [turn, ...]}
    }

Each turn is ``{"call": [{"name", "args"}]}`` or ``{"final": "text"}`` with
optional ``expect_tools`` / ``expect_observation`` guards.
"""

from __future__ import annotations

import json
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..errors import DataError, ScriptError
from ..metatools import FakeExecutor
from ..registry import Registry, load_registry, make_profile
from ..retrieval.searchers import Searcher
from .llm import ScriptedLLMClient, ScriptedTurn
from .loop import AgentConfig, Environment, Transcript, Variant, run_session


@dataclass(frozen=True)
class Scenario:
    scenario_id: str
    user_message: str
    scripts: dict[Variant, tuple[ScriptedTurn, ...]]
    registry_path: Path | None = None
    required_calls: tuple[str, ...] = ()
    connected_apps: tuple[str, ...] = ()
    responses: dict[str, Any] = field(default_factory=dict)

    def script(self, variant: Variant) -> tuple[ScriptedTurn, ...]:
        try:
            return self.scripts[variant]
        except KeyError:
            raise DataError(f"scenario {self.scenario_id!r} has no script for {variant.name}") from None


def parse_scenario(data: dict[str, Any], base_dir: Path | None = None) -> Scenario:
    try:
        scripts = {
            Variant.parse(name): tuple(ScriptedTurn.from_dict(t) for t in turns)
            for name, turns in data["scripts"].items()
        }
        registry = data.get("registry")
        return Scenario(
            scenario_id=data["scenario_id"],
            user_message=data["user_message"],
            scripts=scripts,
            registry_path=(base_dir / registry if base_dir else Path(registry)) if registry else None,
            required_calls=tuple(data.get("required_calls", ())),
            connected_apps=tuple(data.get("connected_apps", ())),
            responses=dict(data.get("responses", {})),
        )
    except (KeyError, TypeError, AttributeError) as exc:
        raise DataError(f"malformed scenario: {exc}") from None


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON: {exc.msg}") from None
    return parse_scenario(data, path.parent)


@dataclass
class ScenarioRun:
    scenario_id: str
    variant: Variant
    transcript: Transcript | None
    completed: bool
    error: str | None = None


def is_complete(scenario: Scenario, transcript: Transcript) -> bool:
    """Ended in a final answer and every required tool ran successfully."""
    done = set(transcript.successful_calls())
    return transcript.completed and all(t in done for t in scenario.required_calls)


def run_scenario(
    scenario: Scenario,
    variant: Variant,
    registry: Registry,
    searcher: Searcher,
    config: AgentConfig | None = None,
) -> ScenarioRun:
    config = config or AgentConfig(variant)
    env = Environment(
        registry=registry,
        searcher=searcher,
        executor=FakeExecutor(scenario.responses),
        llm_client=ScriptedLLMClient(scenario.script(variant)),
        user_profile=make_profile(registry, "user", scenario.connected_apps),
    )
    try:
        transcript = run_session(config, scenario.user_message, env)
    except ScriptError as exc:
        return ScenarioRun(scenario.scenario_id, variant, None, False, str(exc))
    return ScenarioRun(scenario.scenario_id, variant, transcript, is_complete(scenario, transcript))


SearcherFactory = Callable[[Registry], Searcher]


def scenario_registry(scenario: Scenario) -> Registry:
    if scenario.registry_path is None:
        raise DataError(f"scenario {scenario.scenario_id!r} names no registry")
    return load_registry(scenario.registry_path)
