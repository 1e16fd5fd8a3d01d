"""Retrieval accuracy@k, strategy comparison, and architecture cost reports.

accuracy@k gives partial credit: a case scores |expected ∩ top-k| / |expected|.
With a single expected tool that is plain hit-or-miss. Sums are kept exact
(fractions) so case order can never move a reported percentage.
"""

from __future__ import annotations

import csv
import io
import json
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

from .agent.loop import AgentConfig, Variant, count_metrics
from .agent.scenario import Scenario, ScenarioRun, run_scenario, scenario_registry
from .errors import DataError, ToolforgeError
from .registry import Registry
from .retrieval.searchers import Searcher

REPORT_FORMATS = ("table", "csv", "json-lines")


@dataclass(frozen=True)
class EvalCase:
    case_id: str
    query: str
    expected_tool_ids: frozenset[str]
    notes: str | None = None

    def __post_init__(self) -> None:
        if not self.expected_tool_ids:
            raise DataError(f"case {self.case_id!r} has no expected tools")


def parse_suite(lines: Iterable[str]) -> tuple[list[EvalCase], str | None]:
    """Parse case records; an optional ``{"registry": path}`` header line names the registry."""
    cases: list[EvalCase] = []
    registry: str | None = None
    seen: set[str] = set()
    for lineno, raw in enumerate(lines, start=1):
        if not raw.strip():
            continue
        try:
            rec = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise DataError(f"suite line {lineno}: invalid JSON: {exc.msg}") from None
        if not isinstance(rec, dict):
            raise DataError(f"suite line {lineno}: expected an object")
        if "case_id" not in rec:
            if "registry" in rec and registry is None and not cases:
                registry = rec["registry"]
                continue
            raise DataError(f"suite line {lineno}: missing case_id")
        expected = rec.get("expected_tool_ids")
        if not isinstance(expected, list) or not all(isinstance(e, str) for e in expected):
            raise DataError(f"suite line {lineno}: expected_tool_ids must be a list of strings")
        if rec["case_id"] in seen:
            raise DataError(f"suite line {lineno}: duplicate case_id {rec['case_id']!r}")
        seen.add(rec["case_id"])
        cases.append(EvalCase(rec["case_id"], rec["query"], frozenset(expected), rec.get("notes")))
    return cases, registry


def load_suite(path: str | Path) -> tuple[list[EvalCase], Path | None]:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        cases, registry = parse_suite(fh)
    return cases, (path.parent / registry if registry else None)


def check_cases(cases: Sequence[EvalCase], registry: Registry) -> None:
    for case in cases:
        unknown = sorted(t for t in case.expected_tool_ids if t not in registry)
        if unknown:
            raise DataError(f"case {case.case_id!r} expects unknown tools {unknown}")


def _case_credit(case: EvalCase, retrieved: Sequence[str]) -> Fraction:
    return Fraction(len(case.expected_tool_ids & set(retrieved)), len(case.expected_tool_ids))


def accuracy_at_k(cases: Sequence[EvalCase], searcher: Searcher, k: int) -> float:
    if not cases:
        raise DataError("no eval cases")
    check_cases(cases, searcher.registry)
    total = sum((_case_credit(c, [h.tool_id for h in searcher.search(c.query, k)]) for c in cases), Fraction(0))
    return float(total * 100 / len(cases))


@dataclass(frozen=True)
class CaseDetail:
    case_id: str
    top5: tuple[str, ...]
    ranks: dict[str, int | None]  # expected id -> rank within top-10, None if absent
    credit5: Fraction
    credit10: Fraction

    def to_dict(self) -> dict[str, Any]:
        return {
            "case_id": self.case_id,
            "top5": list(self.top5),
            "ranks": dict(sorted(self.ranks.items())),
            "credit5": float(self.credit5),
            "credit10": float(self.credit10),
        }


@dataclass(frozen=True)
class StrategyRow:
    strategy: str
    top5: float | None
    top10: float | None
    n_cases: int
    full5: float | None = None  # share of cases with every expected tool in the top 5
    full10: float | None = None
    error: str | None = None
    details: tuple[CaseDetail, ...] = ()

    def detail(self, case_id: str) -> CaseDetail:
        return next(d for d in self.details if d.case_id == case_id)


@dataclass(frozen=True)
class EvalReport:
    rows: tuple[StrategyRow, ...]

    def row(self, strategy: str) -> StrategyRow:
        return next(r for r in self.rows if r.strategy == strategy)


def evaluate_strategy(name: str, cases: Sequence[EvalCase], searcher: Searcher) -> StrategyRow:
    check_cases(cases, searcher.registry)
    details = []
    for case in sorted(cases, key=lambda c: c.case_id):
        top10 = [h.tool_id for h in searcher.search(case.query, 10)]
        ranks = {t: (top10.index(t) + 1 if t in top10 else None) for t in case.expected_tool_ids}
        details.append(CaseDetail(case.case_id, tuple(top10[:5]), ranks, _case_credit(case, top10[:5]), _case_credit(case, top10)))
    n = len(details)

    def pct(values: Iterable[Fraction]) -> float:
        return float(sum(values, Fraction(0)) * 100 / n)

    return StrategyRow(
        strategy=name,
        top5=pct(d.credit5 for d in details),
        top10=pct(d.credit10 for d in details),
        n_cases=n,
        full5=pct(Fraction(d.credit5 == 1) for d in details),
        full10=pct(Fraction(d.credit10 == 1) for d in details),
        details=tuple(details),
    )


def compare_strategies(cases: Sequence[EvalCase], strategies: Mapping[str, Searcher]) -> EvalReport:
    """One row per strategy, ordered by name. A failing strategy yields an error row."""
    if not strategies:
        raise DataError("at least one strategy is required")
    if not cases:
        raise DataError("no eval cases")
    rows = []
    for name in sorted(strategies):
        try:
            rows.append(evaluate_strategy(name, cases, strategies[name]))
        except ToolforgeError as exc:
            rows.append(StrategyRow(name, None, None, len(cases), error=str(exc)))
    return EvalReport(tuple(rows))


# ---------------------------------------------------------------------------
# architecture comparison


@dataclass(frozen=True)
class VariantRow:
    variant: Variant
    avg_tools_loaded: float
    avg_llm_calls: float
    completion_rate: float
    n: int


@dataclass(frozen=True)
class ArchitectureReport:
    rows: tuple[VariantRow, ...]
    runs: tuple[ScenarioRun, ...] = field(default=(), repr=False)

    def row(self, variant: Variant) -> VariantRow:
        return next(r for r in self.rows if r.variant is variant)

    @property
    def load_reduction_pct(self) -> float | None:
        """Relative drop in mean tools loaded going from A1 to A3."""
        try:
            a1, a3 = self.row(Variant.A1), self.row(Variant.A3)
        except StopIteration:
            return None
        if a1.avg_tools_loaded == 0:
            return None
        return float((1 - Fraction(a3.avg_tools_loaded) / Fraction(a1.avg_tools_loaded)) * 100)

    def errors(self) -> list[str]:
        return [f"{r.scenario_id}/{r.variant.name}: {r.error}" for r in self.runs if r.error]


def architecture_report(
    scenarios: Sequence[Scenario],
    searcher_factory,
    variants: Sequence[Variant] = tuple(Variant),
    config_for=None,
) -> ArchitectureReport:
    """Run every scenario under every variant and average the transcript metrics.

    ``searcher_factory(registry)`` builds the retrieval backend; registries are
    loaded once per path. A script mismatch marks that run incomplete.
    """
    if not scenarios:
        raise DataError("no scenarios")
    cache: dict[Path, tuple[Registry, Searcher]] = {}
    runs: list[ScenarioRun] = []
    rows = []
    for variant in variants:
        loaded, calls, done = Fraction(0), Fraction(0), 0
        for scenario in scenarios:
            key = scenario.registry_path.resolve() if scenario.registry_path else Path()
            if key not in cache:
                registry = scenario_registry(scenario)
                cache[key] = (registry, searcher_factory(registry))
            registry, searcher = cache[key]
            config = config_for(variant) if config_for else AgentConfig(variant)
            run = run_scenario(scenario, variant, registry, searcher, config)
            runs.append(run)
            if run.transcript is not None:
                m = count_metrics(run.transcript)
                loaded += m["tools_loaded"]
                calls += m["llm_calls"]
            done += run.completed
        n = len(scenarios)
        rows.append(VariantRow(variant, float(loaded / n), float(calls / n), float(Fraction(done, n)), n))
    return ArchitectureReport(tuple(rows), tuple(runs))


# ---------------------------------------------------------------------------
# emission


def _fmt(value: float | None) -> str:
    return "" if value is None else f"{value:.2f}"


def _table(header: Sequence[str], body: Sequence[Sequence[str]]) -> str:
    widths = [max(len(str(x)) for x in col) for col in zip(header, *body)]
    line = lambda cells: "  ".join(str(c).ljust(w) for c, w in zip(cells, widths)).rstrip()
    return "\n".join([line(header), line(["-" * w for w in widths]), *map(line, body)]) + "\n"


def _csv(header: Sequence[str], body: Sequence[Sequence[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(body)
    return buf.getvalue()


def emit_report(report: EvalReport, fmt: str = "table") -> str:
    """Render a strategy report: text table, CSV (``strategy,top5,top10,n``) or JSON lines."""
    if fmt == "csv":
        return _csv(["strategy", "top5", "top10", "n"], [[r.strategy, _fmt(r.top5), _fmt(r.top10), str(r.n_cases)] for r in report.rows])
    if fmt == "table":
        body = [[r.strategy, _fmt(r.top5) or "error", _fmt(r.top10) or "error", str(r.n_cases)] for r in report.rows]
        return _table(["Strategy", "Top-5 (%)", "Top-10 (%)", "N"], body)
    if fmt == "json-lines":
        out = []
        for r in report.rows:
            rec = {"strategy": r.strategy, "top5": r.top5, "top10": r.top10, "n": r.n_cases, "full5": r.full5, "full10": r.full10}
            if r.error:
                rec["error"] = r.error
            rec["cases"] = [d.to_dict() for d in r.details]
            out.append(json.dumps(rec, sort_keys=True) + "\n")
        return "".join(out)
    raise DataError(f"unknown report format {fmt!r}")


def emit_architecture_report(report: ArchitectureReport, fmt: str = "table") -> str:
    header = ["variant", "avg_tools_loaded", "avg_llm_calls", "completion_rate", "n"]
    body = [[r.variant.name, _fmt(r.avg_tools_loaded), _fmt(r.avg_llm_calls), _fmt(r.completion_rate), str(r.n)] for r in report.rows]
    reduction = report.load_reduction_pct
    if fmt == "csv":
        return _csv(header, body)
    if fmt == "table":
        text = _table(header, body)
        if reduction is not None:
            text += f"tool-load reduction A3 vs A1: {reduction:.1f}%\n"
        return text
    if fmt == "json-lines":
        lines = [
            json.dumps({"variant": r.variant.name, "avg_tools_loaded": r.avg_tools_loaded, "avg_llm_calls": r.avg_llm_calls, "completion_rate": r.completion_rate, "n": r.n}, sort_keys=True)
            for r in report.rows
        ]
        lines.append(json.dumps({"load_reduction_pct": reduction, "errors": report.errors()}, sort_keys=True))
        return "".join(line + "\n" for line in lines)
    raise DataError(f"unknown report format {fmt!r}")
