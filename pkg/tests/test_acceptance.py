"""Acceptance criteria, one test each. Every test prints a single PASS or FAIL line."""

from __future__ import annotations

import json
import math
import os
import random
import subprocess
import sys
import time
from contextlib import contextmanager

import pytest

from conftest import FIXTURES, GOLDEN
from oracles import brute_cosine, okapi, tie_ranked
from randreg import VOCAB, random_corpus, random_registry, random_request
from toolforge.agent import Variant, load_scenario, run_scenario
from toolforge.evaluation import EvalCase, architecture_report, compare_strategies, emit_report
from toolforge.metatools import SearchLimits, SearchRequest, search_tools
from toolforge.registry import AppSpec, Registry, ToolSpec
from toolforge.retrieval import make_searcher
from toolforge.retrieval.bm25 import KeywordIndex, bm25_search
from toolforge.retrieval.embedding import StubEmbedder
from toolforge.retrieval.ranking import RankedHit, Source
from toolforge.retrieval.vector import build_index, vector_search

pytestmark = pytest.mark.acceptance

SERVE = [sys.executable, "-m", "toolforge.cli", "serve", "--registry", str(FIXTURES / "search_quality.jsonl")]


@pytest.fixture
def report_line(capsys):
    @contextmanager
    def criterion(number, title):
        start = time.perf_counter()
        try:
            yield
        except BaseException:
            with capsys.disabled():
                print(f"\nACCEPTANCE {number} FAIL  {title}")
            raise
        with capsys.disabled():
            print(f"\nACCEPTANCE {number} PASS  {title} ({time.perf_counter() - start:.2f}s)")

    return criterion


class _Canned:
    name = "canned"

    def __init__(self, rankings):
        self.rankings = rankings
        ids = sorted({t for ranked in rankings.values() for t in ranked} | {f"t{i:02d}" for i in range(25)})
        self.registry = Registry([AppSpec("a", "A")], [ToolSpec(t, "a", t, t) for t in ids])

    def search(self, query, k, app_id=None):
        return [RankedHit(t, 1.0 / r, r, Source.VECTOR) for r, t in enumerate(self.rankings[query][:k], start=1)]

    def search_apps(self, query, k):
        return []


class TestAcceptance:
    def test_1_tool_load_reduction(self, report_line, workspace):
        with report_line(1, "A3 loads at most half of A1 and completes at least as often"):
            start = time.perf_counter()
            scenarios = [load_scenario(p) for p in sorted(FIXTURES.glob("scenarios/*.script"))]
            embedder = StubEmbedder()
            report = architecture_report(scenarios, lambda reg: make_searcher("vector", reg, embedder))
            elapsed = time.perf_counter() - start
            a1, a3 = report.row(Variant.A1), report.row(Variant.A3)
            assert len(scenarios) >= 5 and report.errors() == []
            assert a3.avg_tools_loaded <= 0.5 * a1.avg_tools_loaded
            assert a3.completion_rate >= a1.completion_rate
            assert elapsed < 5.0

    def test_2_two_level_search_contract(self, report_line):
        with report_line(2, "per-app cap, no duplicates, permutation-stable over 500 random requests"):
            rng = random.Random(2024)
            embedder = StubEmbedder(256)
            start = time.perf_counter()
            checked = 0
            while checked < 500:
                registry = random_registry(rng, 200, 20)
                searcher = make_searcher(rng.choice(["vector", "bm25", "hybrid"]), registry, embedder)
                for _ in range(10):
                    k1 = rng.randint(1, 25)
                    limits = SearchLimits(k1, rng.randint(1, k1))
                    request = random_request(rng, registry)
                    result = search_tools(registry, request, limits, searcher)
                    apps = [i.app_id for i in result.items]
                    assert all(apps.count(a) <= limits.k2 for a in set(apps))
                    assert len(result.tool_ids) == len(set(result.tool_ids))
                    entries = list(request.entries)
                    rng.shuffle(entries)
                    again = search_tools(registry, SearchRequest(tuple(entries)), limits, searcher)
                    assert again.tool_ids == result.tool_ids
                    checked += 1
            assert time.perf_counter() - start < 30.0

    def test_3_retrieval_oracles(self, report_line):
        with report_line(3, "vector and BM25 match brute-force oracles on 100 random corpora each"):
            rng = random.Random(33)
            dim = 1024
            embedder = StubEmbedder(dim)
            start = time.perf_counter()
            for _ in range(100):
                docs = random_corpus(rng, 100)
                index = build_index(docs, embedder)
                query = " ".join(rng.choices(VOCAB, k=rng.randint(1, 4)))
                k = rng.randint(1, 100)
                got = [(h.tool_id, h.score) for h in vector_search(index, query, k, embedder)]
                want = brute_cosine(docs, query, k, dim)
                assert [i for i, _ in got] == [i for i, _ in want]
                assert all(abs(a - b) <= 1e-9 for (_, a), (_, b) in zip(got, want))
            for _ in range(100):
                docs = random_corpus(rng, 100)
                query = " ".join(rng.choices(VOCAB + ["absent"], k=rng.randint(1, 4)))
                got = bm25_search(KeywordIndex(docs), query, 100)
                want = tie_ranked(okapi(docs, query), 100)
                assert [h.tool_id for h in got] == [i for i, _ in want]
                assert all(math.isclose(h.score, s, rel_tol=1e-9) for h, (_, s) in zip(got, want))
            assert time.perf_counter() - start < 60.0

    def test_4_failure_modes(self, report_line, workspace, quality):
        with report_line(4, "A1 misses every Sheets tool; hybrid lets the maps distractor into the top 5"):
            embedder = StubEmbedder()
            scenario = load_scenario(FIXTURES / "scenarios/twitter_sheets.script")
            searcher = make_searcher("vector", workspace, embedder)
            a1 = run_scenario(scenario, Variant.A1, workspace, searcher)
            a3 = run_scenario(scenario, Variant.A3, workspace, searcher)
            assert len(a1.transcript.bound_tools()) == 10
            assert [t for t in a1.transcript.bound_tools() if t.startswith("google_sheet__")] == []
            assert a3.transcript.bound_tools() == [
                "twitter__get_user_mentions",
                "twitter__get_dm_events",
                "google_sheet__create_spreadsheet",
                "google_sheet__write_values_to_sheet",
            ]
            assert a3.completed and not a1.completed

            query = "web search general information"
            vector = [h.tool_id for h in make_searcher("vector", quality, embedder).search(query, 5)]
            hybrid = [h.tool_id for h in make_searcher("hybrid", quality, embedder).search(query, 5)]
            assert vector == [
                "serpapi__web_search",
                "firecrawl__search",
                "tavily__search_and_summarize",
                "perplexity__answer_with_search",
                "exa__search_with_filters",
            ]
            assert hybrid == [
                "serpapi__web_search",
                "firecrawl__search",
                "tavily__search_and_summarize",
                "perplexity__answer_with_search",
                "serpapi__google_maps_search",
            ]

    def test_5_report_shape_and_exact_fractions(self, report_line):
        with report_line(5, "25-case suite gives 60.00 Top-5 and 80.00 Top-10 in a two-strategy table"):
            tools = [f"t{i:02d}" for i in range(25)]
            fillers = [f"f{i}" for i in range(9)]
            cases, exact, shifted = [], {}, {}
            for i, tool in enumerate(tools):
                cases.append(EvalCase(f"c{i:02d}", f"q{i:02d}", frozenset({tool})))
                if i < 15:
                    exact[f"q{i:02d}"] = [tool, *fillers]  # rank 1
                elif i < 20:
                    exact[f"q{i:02d}"] = [*fillers[:6], tool]  # rank 7
                else:
                    exact[f"q{i:02d}"] = list(fillers)  # absent
                shifted[f"q{i:02d}"] = [*fillers[:4], tool] if i < 10 else list(fillers)
            report = compare_strategies(cases, {"alpha": _Canned(exact), "beta": _Canned(shifted)})
            assert (report.row("alpha").top5, report.row("alpha").top10) == (60.0, 80.0)
            assert (report.row("beta").top5, report.row("beta").top10) == (40.0, 40.0)
            assert emit_report(report, "table").splitlines() == [
                "Strategy  Top-5 (%)  Top-10 (%)  N",
                "--------  ---------  ----------  --",
                "alpha     60.00      80.00       25",
                "beta      40.00      40.00       25",
            ]

    def test_6_enrichment_effect(self, report_line, quality):
        with report_line(6, "enriched index puts outlook__send_mail in the top 5, plain index does not"):
            embedder = StubEmbedder()
            target = "outlook__send_mail"
            enriched = [h.tool_id for h in make_searcher("vector", quality, embedder).search("send email", 5)]
            plain = [h.tool_id for h in make_searcher("vector-plain", quality, embedder).search("send email", 5)]
            assert target in enriched
            assert target not in plain

    def test_7_protocol_robustness(self, report_line):
        with report_line(7, "golden exchanges byte-identical; 10,000 malformed frames survived"):
            start = time.perf_counter()
            for req in sorted(GOLDEN.glob("*.request.jsonl")):
                proc = subprocess.run(SERVE, input=req.read_bytes(), capture_output=True, timeout=60)
                assert proc.returncode == 0
                assert proc.stdout == req.with_name(req.name.replace(".request.", ".response.")).read_bytes()

            rng = random.Random(7)
            frames = [_malformed(rng) for _ in range(10_000)]
            probe = b'{"jsonrpc":"2.0","id":"alive","method":"search_apps","params":{"query":"email"}}'
            proc = subprocess.run(SERVE, input=b"\n".join(frames + [probe]) + b"\n", capture_output=True, timeout=60)
            assert proc.returncode == 0, proc.stderr[-500:]
            replies = [json.loads(line) for line in proc.stdout.splitlines()]
            assert len(replies) == 10_001
            assert all("error" in r for r in replies[:-1])
            assert replies[-1]["id"] == "alive" and "result" in replies[-1]
            assert time.perf_counter() - start < 30.0

    def test_8_pipeline_determinism(self, report_line, tmp_path):
        with report_line(8, "two ingest, index, eval, run pipelines produce identical bytes"):
            first = _pipeline(tmp_path / "one", hash_seed="1")
            second = _pipeline(tmp_path / "two", hash_seed="98765")
            assert sorted(first) == sorted(second)
            for name in first:
                assert first[name] == second[name], name
            assert first["transcript.jsonl"] and first["strategies.csv"]


def _malformed(rng: random.Random) -> bytes:
    """A non-blank frame that never names a valid request with a valid id."""
    kind = rng.randrange(6)
    if kind == 0:
        return bytes(rng.randrange(256) for _ in range(rng.randint(1, 60))).replace(b"\n", b"x").replace(b"\r", b"y") + b"!"
    if kind == 1:
        return json.dumps({"jsonrpc": "2.0", "id": rng.randint(0, 99), "method": rng.choice(["", "nope", "call"] + VOCAB)}).encode()
    if kind == 2:
        return json.dumps(rng.choice([[], 1, "s", None, True, {"id": 1}])).encode()
    if kind == 3:
        good = json.dumps({"jsonrpc": "2.0", "id": 1, "method": "search_tools", "params": {"queries": ["x"]}})
        return good[: rng.randint(1, len(good) - 1)].encode()
    if kind == 4:
        method = rng.choice(["search_tools", "load_tools", "call_tool", "get_tool_info", "search_apps"])
        return json.dumps({"jsonrpc": "2.0", "id": rng.randint(0, 99), "method": method, "params": {"bogus": rng.random()}}).encode()
    return json.dumps({"jsonrpc": "1.0", "id": rng.randint(0, 9), "method": "search_apps", "params": {"query": "mail"}}).encode()


def _cli(args: list[str], hash_seed: str) -> bytes:
    env = {**os.environ, "PYTHONHASHSEED": hash_seed}
    env.pop("TOOLFORGE_EMBEDDER_URL", None)
    proc = subprocess.run([sys.executable, "-m", "toolforge.cli", *args], capture_output=True, env=env, timeout=120)
    assert proc.returncode == 0, proc.stderr
    return proc.stdout


def _pipeline(workdir, hash_seed: str) -> dict[str, bytes]:
    workdir.mkdir()
    registry, index = workdir / "registry.jsonl", workdir / "index.json"
    _cli(["ingest", "--registry", str(FIXTURES / "workspace.jsonl"), "--out", str(registry)], hash_seed)
    _cli(["index", "--registry", str(registry), "--out", str(index)], hash_seed)
    common = ["--registry", str(registry), "--index", str(index)]
    _cli(["eval", *common, "--suite", str(FIXTURES / "suites/workspace.jsonl"), "--strategies", "vector,bm25,hybrid", "--format", "csv", "--out", str(workdir / "strategies.csv")], hash_seed)
    _cli(["eval", "--index", str(index), "--scenarios", str(FIXTURES / "scenarios"), "--format", "json-lines", "--out", str(workdir / "architectures.jsonl")], hash_seed)
    _cli(["run", *common, "--arch", "A3", "--script", str(FIXTURES / "scenarios/twitter_sheets.script"), "--out", str(workdir / "transcript.jsonl")], hash_seed)
    return {p.name: p.read_bytes() for p in sorted(workdir.iterdir())}
