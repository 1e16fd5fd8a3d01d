"""Random registries and search requests for property and acceptance tests."""

from __future__ import annotations

import random

from toolforge.metatools import SearchRequest
from toolforge.registry import AppSpec, Registry, ToolSpec

# small vocabulary so queries overlap documents and scores tie often
VOCAB = (
    "send email message mail inbox draft reply forward post channel chat thread react "
    "create update delete list get search find page web file folder upload share sheet "
    "row column table issue pull request repo commit calendar event meeting invite user "
    "contact deal note task project board card tweet mention follower"
).split()


def random_text(rng: random.Random, lo: int = 1, hi: int = 12) -> str:
    return " ".join(rng.choice(VOCAB) for _ in range(rng.randint(lo, hi)))


def random_registry(rng: random.Random, max_tools: int = 200, max_apps: int = 20) -> Registry:
    n_apps = rng.randint(1, max_apps)
    apps = [AppSpec(f"app{i:02d}", f"App {i}", random_text(rng, 0, 6)) for i in range(n_apps)]
    tools = []
    for i in range(rng.randint(1, max_tools)):
        app = rng.choice(apps).app_id
        enriched = random_text(rng, 1, 8) if rng.random() < 0.3 else None
        tools.append(ToolSpec(f"{app}__t{i:03d}", app, f"t{i}", random_text(rng), enriched_context=enriched))
    rng.shuffle(tools)
    return Registry(apps, tools)


def random_request(rng: random.Random, registry: Registry, max_entries: int = 4) -> SearchRequest:
    app_ids = sorted(registry.apps)
    entries = []
    for _ in range(rng.randint(1, max_entries)):
        app = rng.choice(app_ids) if rng.random() < 0.25 else None
        entries.append((random_text(rng, 1, 5), app))
    return SearchRequest.of(*entries)


def random_corpus(rng: random.Random, max_docs: int = 100) -> dict[str, str]:
    return {f"d{i:03d}": random_text(rng, 1, 15) for i in range(rng.randint(1, max_docs))}
