"""Context enrichment: extra text about what a tool implicitly does, appended before embedding."""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import replace
from typing import Protocol

from ..errors import EnrichmentError
from ..registry import AppSpec, Registry, ToolSpec
from .ranking import tokenize

log = logging.getLogger(__name__)

ENRICH_PROMPT = (
    "Describe, in two or three sentences, the implicit functionality and typical use cases "
    "of the following tool that its documentation does not state outright.\n"
    "Tool: {tool_id}\nApp: {app}\nDescription: {description}\n"
)


class Enricher(Protocol):
    def __call__(self, tool: ToolSpec, app: AppSpec | None) -> str: ...


def template_enricher(tool: ToolSpec, app: AppSpec | None) -> str:
    app_name = app.name if app is not None else tool.app_id
    expansions = " ".join(dict.fromkeys(tokenize(tool.tool_id)))
    return f"{tool.name} in app {app_name}: {tool.description.rstrip('.')}. Related actions: {expansions}"


class LLMEnricher:
    """Enricher backed by any ``prompt -> text`` completion callable."""

    def __init__(self, complete: Callable[[str], str], prompt: str = ENRICH_PROMPT):
        self.complete = complete
        self.prompt = prompt

    def __call__(self, tool: ToolSpec, app: AppSpec | None) -> str:
        text = self.complete(self.prompt.format(tool_id=tool.tool_id, app=app.name if app else tool.app_id, description=tool.description))
        if not isinstance(text, str) or not text.strip():
            raise ValueError("completion returned no text")
        return text.strip()


def enrich_description(tool: ToolSpec, enricher: Enricher, app: AppSpec | None = None) -> ToolSpec:
    """Return a copy of ``tool`` with ``enriched_context`` filled in.

    Raises EnrichmentError if the enricher fails; the input tool is never
    modified, so callers can keep using it.
    """
    try:
        context = enricher(tool, app)
    except Exception as exc:  # enrichers are third-party code
        raise EnrichmentError(tool.tool_id, exc) from exc
    return replace(tool, enriched_context=context)


def enrich_registry(registry: Registry, enricher: Enricher) -> tuple[Registry, dict[str, str]]:
    """Enrich every tool; returns the new registry and ``{tool_id: error}`` for failures."""
    enriched: list[ToolSpec] = []
    failures: dict[str, str] = {}
    for tool in registry.tools.values():
        try:
            enriched.append(enrich_description(tool, enricher, registry.apps.get(tool.app_id)))
        except EnrichmentError as exc:
            log.warning("%s", exc)
            failures[tool.tool_id] = str(exc.cause)
    return registry.replace_tools(enriched), failures
