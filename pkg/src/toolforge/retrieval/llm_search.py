"""Retrieval by asking a secondary LLM that holds the whole catalog in its prompt.

Only viable for small registries; the catalog size is capped.
"""

from __future__ import annotations

import json
import logging
import re
from collections.abc import Callable

from ..errors import CatalogTooLarge, UnparseableReply
from ..registry import Registry

log = logging.getLogger(__name__)

DEFAULT_MAX_TOOLS = 200

SYSTEM_PROMPT = (
    "You select tools for a user request. Reply with a JSON array of tool ids, "
    "most relevant first, and nothing else.\n\nCatalog:\n{catalog}"
)

_ARRAY = re.compile(r"\[.*?\]", re.DOTALL)


def render_catalog(registry: Registry) -> str:
    return "\n".join(f"- {t.tool_id}: {t.description}" for t in registry.tools.values())


def build_prompt(registry: Registry, query: str, max_tools: int = DEFAULT_MAX_TOOLS) -> str:
    if len(registry) > max_tools:
        raise CatalogTooLarge(f"catalog of {len(registry)} tools exceeds the {max_tools}-tool prompt limit")
    return SYSTEM_PROMPT.format(catalog=render_catalog(registry)) + f"\n\nRequest: {query}\n"


def parse_reply(reply: str) -> list[str]:
    try:
        data = json.loads(reply)
    except json.JSONDecodeError:
        match = _ARRAY.search(reply)
        if match is None:
            raise UnparseableReply(f"no JSON array in reply: {reply[:80]!r}") from None
        try:
            data = json.loads(match.group(0))
        except json.JSONDecodeError:
            raise UnparseableReply(f"bad JSON array in reply: {reply[:80]!r}") from None
    if isinstance(data, dict):
        data = data.get("tool_ids")
    if not isinstance(data, list) or not all(isinstance(x, str) for x in data):
        raise UnparseableReply("reply must be a list of tool id strings")
    return data


def llm_search(complete: Callable[[str], str], registry: Registry, query: str, *, max_tools: int = DEFAULT_MAX_TOOLS) -> list[str]:
    """Return the known tool ids the model picked, in its order, without duplicates."""
    ids = parse_reply(complete(build_prompt(registry, query, max_tools)))
    out: list[str] = []
    for tool_id in ids:
        if tool_id not in registry:
            log.warning("llm_search dropped unknown tool id %r", tool_id)
            continue
        if tool_id not in out:
            out.append(tool_id)
    return out
