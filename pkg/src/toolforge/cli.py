"""Command-line entry point.

Settings resolve as command-line flag, then environment variable, then the
JSON ``--config`` file, then the built-in default. Relative paths inside a
config file are taken relative to that file. Failures print a single JSON
object on stderr and exit with 2 (usage), 3 (data) or 4 (provider).
"""

from __future__ import annotations

import argparse
import glob
import io
import json
import logging
import os
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any

from . import __version__
from .agent.llm import ScriptedLLMClient
from .agent.loop import AgentConfig, Environment, Variant, run_session
from .agent.scenario import load_scenario, scenario_registry
from .errors import EnrichmentError, ToolforgeError, UsageError
from .evaluation import REPORT_FORMATS, architecture_report, compare_strategies, emit_architecture_report, emit_report, load_suite
from .metatools import FakeExecutor, MetaTools, SearchLimits, SearchRequest, search_tools
from .registry import Registry, export_registry, load_registry, make_profile
from .retrieval.embedding import EmbeddingProvider, HttpEmbedder, StubEmbedder
from .retrieval.enrich import enrich_description, template_enricher
from .retrieval.hybrid import FusionParams
from .retrieval.searchers import STRATEGIES, Searcher, make_searcher
from .retrieval.vector import TextMode, build_vector_index, check_index_matches, load_index, save_index
from .server import serve_metatools

ENV_EMBEDDER_URL = "TOOLFORGE_EMBEDDER_URL"

DEFAULTS: dict[str, Any] = {
    "embedder": "stub",
    "embedder_url": None,
    "dim": 1024,
    "k": 10,
    "k1": 20,
    "k2": 5,
    "fusion": "none",
    "strategy": None,
    "format": "table",
    "strategies": "vector,hybrid",
    "max_steps": 16,
    "baseline_k": 10,
}
# settings a config file may provide; paths among them are resolved against the file
CONFIG_KEYS = frozenset(DEFAULTS) | {"registry", "index", "suite", "script", "scenarios", "arch", "responses"}
PATH_KEYS = frozenset({"registry", "index", "suite", "script", "scenarios", "responses"})


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def _positive(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON file of default settings")
    common.add_argument("--registry", help="registry file (JSON lines)")
    common.add_argument("--index", help="vector index snapshot built by 'index'")
    common.add_argument("--embedder", choices=("stub", "http"))
    common.add_argument("--embedder-url", dest="embedder_url")
    common.add_argument("--dim", type=_positive)
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--format", choices=REPORT_FORMATS)
    common.add_argument("-v", "--verbose", action="store_true")

    retrieval = _Parser(add_help=False)
    retrieval.add_argument("--fusion", choices=("none", "rrf"), help="rrf fuses vector and BM25 rankings")
    retrieval.add_argument("--strategy", choices=STRATEGIES, help="overrides --fusion")
    retrieval.add_argument("--k", type=_positive)
    retrieval.add_argument("--k1", type=_positive)
    retrieval.add_argument("--k2", type=_positive)

    parser = _Parser(prog="toolforge", description="Dynamic tool search and loading for tool-calling agents.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("ingest", parents=[common], help="validate a registry and write it in canonical form")
    p = sub.add_parser("enrich", parents=[common], help="add template enrichment to every tool")
    p.add_argument("--overwrite", action="store_true", help="replace existing enrichment")
    p = sub.add_parser("index", parents=[common], help="embed tools and save a vector index snapshot")
    p.add_argument("--plain", action="store_true", help="embed descriptions without enrichment")
    p = sub.add_parser("search", parents=[common, retrieval], help="run search_tools for one or more queries")
    p.add_argument("--query", action="append", required=True, help="repeatable; one entry per query")
    p.add_argument("--app", help="restrict every query to this app id")
    p.add_argument("--connected", action="append", default=[], help="app id the user has connected")
    p = sub.add_parser("run", parents=[common, retrieval], help="run a scripted scenario under one architecture")
    p.add_argument("--arch", help="A1..A5")
    p.add_argument("--script", help="scenario file")
    p.add_argument("--max-steps", dest="max_steps", type=_positive)
    p.add_argument("--baseline-k", dest="baseline_k", type=_positive)
    p = sub.add_parser("eval", parents=[common, retrieval], help="compare strategies or architectures")
    p.add_argument("--suite", help="eval case file (JSON lines)")
    p.add_argument("--strategies", help=f"comma-separated, from {', '.join(STRATEGIES)}")
    p.add_argument("--scenarios", help="directory or glob of scenario files for the architecture report")
    p = sub.add_parser("serve", parents=[common, retrieval], help="JSON-RPC over stdio")
    p.add_argument("--responses", help="JSON object of canned tool results keyed by tool id")
    return parser


# settings


def _load_config(path: str) -> dict[str, Any]:
    cfg_path = Path(path)
    if not cfg_path.is_file():
        raise UsageError(f"config file not found: {path}")
    try:
        data = json.loads(cfg_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UsageError(f"invalid config {path}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise UsageError(f"invalid config {path}: expected an object")
    unknown = sorted(set(data) - CONFIG_KEYS)
    if unknown:
        raise UsageError(f"invalid config {path}: unknown keys {unknown}")
    for key in PATH_KEYS & set(data):
        data[key] = str(cfg_path.parent / data[key])
    return data


def resolve_settings(args: argparse.Namespace, environ: dict[str, str] | None = None) -> dict[str, Any]:
    """Merge flags over environment over config file over defaults."""
    environ = os.environ if environ is None else environ
    config = _load_config(args.config) if args.config else {}
    settings = {**DEFAULTS, **config}
    if environ.get(ENV_EMBEDDER_URL):
        settings["embedder_url"] = environ[ENV_EMBEDDER_URL]
    for key, value in vars(args).items():
        if value is not None and key != "config":
            settings[key] = value
    settings["k1_explicit"] = "k1" in config or getattr(args, "k1", None) is not None
    return settings


def _require(settings: dict[str, Any], key: str, *, must_exist: bool = True) -> str:
    value = settings.get(key)
    if not value:
        raise UsageError(f"--{key.replace('_', '-')} is required")
    if must_exist and not Path(value).exists():
        raise UsageError(f"{key} not found: {value}")
    return value


def make_embedder(settings: dict[str, Any]) -> EmbeddingProvider:
    if settings["embedder"] == "http":
        if not settings.get("embedder_url"):
            raise UsageError(f"--embedder http needs --embedder-url or {ENV_EMBEDDER_URL}")
        return HttpEmbedder(settings["embedder_url"], settings["dim"])
    if settings["embedder"] != "stub":
        raise UsageError(f"unknown embedder {settings['embedder']!r}")
    return StubEmbedder(settings["dim"])


def _strategy(settings: dict[str, Any]) -> str:
    if settings.get("strategy"):
        return settings["strategy"]
    if settings["fusion"] not in ("none", "rrf"):
        raise UsageError(f"unknown fusion {settings['fusion']!r}")
    return "hybrid" if settings["fusion"] == "rrf" else "vector"


def make_search_backend(settings: dict[str, Any], registry: Registry, strategy: str | None = None) -> Searcher:
    embedder = make_embedder(settings)
    index = None
    if settings.get("index"):
        index = load_index(_require(settings, "index"))
        check_index_matches(index, registry, embedder)
    return make_searcher(strategy or _strategy(settings), registry, embedder, fusion=FusionParams(), index=index)


def _limits(settings: dict[str, Any]) -> SearchLimits:
    k1 = settings["k1"]
    return SearchLimits(k1, min(settings["k2"], k1))


def _emit(text: str, settings: dict[str, Any]) -> None:
    if settings.get("out"):
        Path(settings["out"]).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


# subcommands


def cmd_ingest(settings: dict[str, Any]) -> int:
    registry = load_registry(_require(settings, "registry"))
    _emit("".join(line + "\n" for line in export_registry(registry)), settings)
    print(f"{len(registry.apps)} apps, {len(registry.tools)} tools", file=sys.stderr)
    return 0


def cmd_enrich(settings: dict[str, Any]) -> int:
    registry = load_registry(_require(settings, "registry"))
    tools, failures = [], {}
    for tool in registry.tools.values():
        if tool.enriched_context is not None and not settings.get("overwrite"):
            continue
        try:
            tools.append(enrich_description(tool, template_enricher, registry.apps.get(tool.app_id)))
        except EnrichmentError as exc:
            failures[tool.tool_id] = str(exc.cause)
    _emit("".join(line + "\n" for line in export_registry(registry.replace_tools(tools))), settings)
    if failures:
        print(json.dumps({"enrichment_failures": failures}, sort_keys=True), file=sys.stderr)
    return 0


def cmd_index(settings: dict[str, Any]) -> int:
    registry = load_registry(_require(settings, "registry"))
    out = _require(settings, "out", must_exist=False)
    mode = TextMode.DESCRIPTION_ONLY if settings.get("plain") else TextMode.DESCRIPTION_PLUS_ENRICHMENT
    index = build_vector_index(registry, make_embedder(settings), mode)
    save_index(index, out)
    print(f"indexed {len(index)} tools, dim {index.dim}", file=sys.stderr)
    return 0


def cmd_search(settings: dict[str, Any]) -> int:
    registry = load_registry(_require(settings, "registry"))
    searcher = make_search_backend(settings, registry)
    # --k caps the per-query depth when --k1 is not given explicitly
    k1 = settings["k1"] if settings.get("k1_explicit") else settings["k"]
    limits = SearchLimits(k1, min(settings["k2"], k1))
    request = SearchRequest.of(*[(q, settings.get("app")) for q in settings["query"]])
    profile = make_profile(registry, "cli", settings.get("connected") or ())
    result = search_tools(registry, request, limits, searcher, profile)
    if settings["format"] == "json-lines":
        text = "".join(json.dumps({"rank": n, "tool_id": i.tool_id, "app_id": i.app_id, "score": i.score}, sort_keys=True) + "\n" for n, i in enumerate(result.items, 1))
    elif settings["format"] == "csv":
        text = "rank,tool_id,app_id,score\n" + "".join(f"{n},{i.tool_id},{i.app_id},{i.score:.6f}\n" for n, i in enumerate(result.items, 1))
    else:
        text = "".join(f"{n:>3}  {i.score:.4f}  {i.tool_id}\n" for n, i in enumerate(result.items, 1)) + result.reminder + "\n"
    _emit(text, settings)
    return 0


def cmd_run(settings: dict[str, Any]) -> int:
    scenario = load_scenario(_require(settings, "script"))
    variant = Variant.parse(_require(settings, "arch", must_exist=False))
    registry = load_registry(settings["registry"]) if settings.get("registry") else scenario_registry(scenario)
    config = AgentConfig(variant, baseline_k=settings["baseline_k"], limits=_limits(settings), max_steps=settings["max_steps"])
    env = Environment(
        registry=registry,
        searcher=make_search_backend(settings, registry),
        executor=FakeExecutor(scenario.responses),
        llm_client=ScriptedLLMClient(scenario.script(variant)),
        user_profile=make_profile(registry, "user", scenario.connected_apps),
    )
    transcript = run_session(config, scenario.user_message, env)
    _emit(transcript.to_jsonl(), settings)
    return 0


def _scenario_paths(pattern: str) -> list[str]:
    path = Path(pattern)
    paths = sorted(glob.glob(str(path / "*.script"))) if path.is_dir() else sorted(glob.glob(pattern))
    if not paths:
        raise UsageError(f"no scenario files match {pattern}")
    return paths


def cmd_eval(settings: dict[str, Any]) -> int:
    if settings.get("scenarios"):
        scenarios = [load_scenario(p) for p in _scenario_paths(settings["scenarios"])]
        limits = _limits(settings)
        report = architecture_report(
            scenarios,
            lambda registry: make_search_backend(settings, registry),
            config_for=lambda v: AgentConfig(v, baseline_k=settings["baseline_k"], limits=limits, max_steps=settings["max_steps"]),
        )
        _emit(emit_architecture_report(report, settings["format"]), settings)
        return 0
    cases, suite_registry = load_suite(_require(settings, "suite"))
    registry_path = settings.get("registry") or (str(suite_registry) if suite_registry else None)
    if not registry_path:
        raise UsageError("--registry is required when the suite names none")
    registry = load_registry(registry_path)
    names = [s.strip() for s in settings["strategies"].split(",") if s.strip()]
    if not names:
        raise UsageError("--strategies is empty")
    for name in names:
        if name not in STRATEGIES:
            raise UsageError(f"unknown strategy {name!r}; expected one of {', '.join(STRATEGIES)}")
    report = compare_strategies(cases, {name: make_search_backend(settings, registry, name) for name in names})
    _emit(emit_report(report, settings["format"]), settings)
    return 0


def cmd_serve(settings: dict[str, Any]) -> int:
    registry = load_registry(_require(settings, "registry"))
    searcher = make_search_backend(settings, registry)
    responses: dict[str, Any] = {}
    if settings.get("responses"):
        try:
            responses = json.loads(Path(_require(settings, "responses")).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise UsageError(f"invalid responses file: {exc.msg}") from None
    limits = _limits(settings)

    def session() -> MetaTools:
        return MetaTools(registry=registry, searcher=searcher, executor=FakeExecutor(responses), limits=limits)

    # undecodable bytes must become parse errors, not a crash
    if isinstance(sys.stdin, io.TextIOWrapper):
        sys.stdin.reconfigure(encoding="utf-8", errors="replace")
    if isinstance(sys.stdout, io.TextIOWrapper):
        sys.stdout.reconfigure(encoding="utf-8", errors="backslashreplace")
    serve_metatools(session, sys.stdin, sys.stdout)
    return 0


COMMANDS = {
    "ingest": cmd_ingest,
    "enrich": cmd_enrich,
    "index": cmd_index,
    "search": cmd_search,
    "run": cmd_run,
    "eval": cmd_eval,
    "serve": cmd_serve,
}


def _fail(exc: ToolforgeError) -> int:
    print(json.dumps({"error": exc.kind, "message": str(exc), "exit_code": exc.exit_code}, sort_keys=True), file=sys.stderr)
    return exc.exit_code


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
        settings = resolve_settings(args)
        return COMMANDS[args.command](settings)
    except ToolforgeError as exc:
        return _fail(exc)
    except OSError as exc:
        return _fail(UsageError(f"{exc.filename or ''}: {exc.strerror}".lstrip(": ")))


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
