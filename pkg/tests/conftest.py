from __future__ import annotations

from pathlib import Path

import pytest

from toolforge.registry import AppSpec, Registry, ToolSpec, load_registry
from toolforge.retrieval.embedding import StubEmbedder

FIXTURES = Path(__file__).resolve().parents[1] / "src" / "toolforge" / "fixtures"
GOLDEN = Path(__file__).resolve().parent / "golden"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def workspace() -> Registry:
    return load_registry(FIXTURES / "workspace.jsonl")


@pytest.fixture(scope="session")
def quality() -> Registry:
    return load_registry(FIXTURES / "search_quality.jsonl")


@pytest.fixture(scope="session")
def table4() -> Registry:
    return load_registry(FIXTURES / "table4.jsonl")


@pytest.fixture(scope="session")
def embedder() -> StubEmbedder:
    return StubEmbedder()


@pytest.fixture
def tiny() -> Registry:
    apps = [AppSpec("mail", "Mail"), AppSpec("chat", "Chat")]
    tools = [
        ToolSpec("mail__send", "mail", "send", "Send an email message",
                 input_schema={"type": "object", "properties": {"to": {"type": "string"}}, "required": ["to"]}),
        ToolSpec("mail__list", "mail", "list", "List email messages in the inbox"),
        ToolSpec("chat__post", "chat", "post", "Post a chat message to a channel"),
        ToolSpec("chat__react", "chat", "react", "Add an emoji reaction to a chat message"),
    ]
    return Registry(apps, tools)
