from __future__ import annotations

import pytest

from toolforge.errors import (
    CapacityExceeded,
    DataError,
    ExecutorError,
    SchemaViolation,
    ToolNotFound,
    UnboundTool,
    UnknownApp,
)
from toolforge.metatools import (
    META_TOOL_DECLARATIONS,
    META_TOOL_NAMES,
    REMINDER,
    FakeExecutor,
    MetaTools,
    SearchLimits,
    SearchRequest,
    call_tool,
    create_table,
    default_tools,
    get_tool_info,
    is_default_tool,
    load_tools,
    new_session,
    search_apps,
    search_tools,
)
from toolforge.registry import make_profile
from toolforge.retrieval import make_searcher

TWITTER_SHEETS = ("retrieve Twitter mentions and direct messages", "create Google Sheets spreadsheet with data")


@pytest.fixture(scope="module")
def ws_searcher(workspace, embedder):
    return make_searcher("vector", workspace, embedder)


class TestSearchTools:
    def test_decomposed_queries_find_cross_app_tools(self, workspace, ws_searcher):
        result = search_tools(workspace, SearchRequest.of(*TWITTER_SHEETS), SearchLimits(), ws_searcher)
        for tool_id in (
            "twitter__get_user_mentions",
            "twitter__get_dm_events",
            "google_sheet__create_spreadsheet",
            "google_sheet__write_values_to_sheet",
        ):
            assert tool_id in result.tool_ids
        assert result.reminder == REMINDER

    def test_per_app_cap(self, workspace, ws_searcher):
        result = search_tools(workspace, SearchRequest.of("twitter tweets"), SearchLimits(20, 3), ws_searcher)
        per_app = {}
        for item in result.items:
            per_app[item.app_id] = per_app.get(item.app_id, 0) + 1
        assert max(per_app.values()) <= 3

    def test_app_filter(self, workspace, ws_searcher):
        result = search_tools(workspace, SearchRequest.of(("send a message", "slack")), SearchLimits(), ws_searcher)
        assert result.items and {i.app_id for i in result.items} == {"slack"}

    def test_unknown_app_filter(self, workspace, ws_searcher):
        with pytest.raises(UnknownApp):
            search_tools(workspace, SearchRequest.of(("x", "ghost")), SearchLimits(), ws_searcher)

    def test_entry_order_irrelevant(self, workspace, ws_searcher):
        a = search_tools(workspace, SearchRequest.of(*TWITTER_SHEETS), SearchLimits(), ws_searcher)
        b = search_tools(workspace, SearchRequest.of(*reversed(TWITTER_SHEETS)), SearchLimits(), ws_searcher)
        assert a == b

    def test_connected_flag(self, workspace, ws_searcher):
        user = make_profile(workspace, "u", ["google_sheet"])
        result = search_tools(workspace, SearchRequest.of(TWITTER_SHEETS[1]), SearchLimits(), ws_searcher, user)
        flags = {i.app_id: i.app_connected for i in result.items}
        assert flags["google_sheet"] is True
        assert not any(v for app, v in flags.items() if app != "google_sheet")

    def test_limits_validated(self):
        with pytest.raises(DataError):
            SearchLimits(3, 5)
        with pytest.raises(DataError):
            SearchLimits(5, 0)

    def test_wire_request(self):
        req = SearchRequest.from_wire(["a", {"query": "b", "app_id": "x"}])
        assert [(e.query, e.app_id) for e in req.entries] == [("a", None), ("b", "x")]
        for bad in ("a", [1], [{"query": "q", "extra": 1}], [{"query": "q", "app_id": 3}]):
            with pytest.raises(DataError):
                SearchRequest.from_wire(bad)

    def test_render_mentions_every_tool(self, workspace, ws_searcher):
        result = search_tools(workspace, SearchRequest.of("post message to Slack channel"), SearchLimits(), ws_searcher)
        text = result.render()
        assert all(t in text for t in result.tool_ids)
        assert text.endswith(REMINDER)


class TestSearchApps:
    def test_ranks_apps(self, ws_searcher):
        apps = search_apps(ws_searcher, "GitHub code repository", 3)
        assert apps[0]["app_id"] == "github"
        assert set(apps[0]) == {"app_id", "name", "score"}


class TestLoadTools:
    def test_defaults_bound_from_start(self):
        session = new_session()
        assert all(session.is_bound(t.tool_id) for t in default_tools())
        assert session.dynamic == ()

    def test_set_semantics_and_events(self, tiny):
        s = load_tools(new_session(), ["mail__send", "mail__send"], tiny)
        s = load_tools(s, ["mail__send", "chat__post"], tiny)
        assert s.dynamic == ("mail__send", "chat__post")
        assert s.load_events == 2

    def test_atomic_on_unknown(self, tiny):
        s = new_session()
        with pytest.raises(ToolNotFound):
            load_tools(s, ["mail__send", "ghost"], tiny)
        assert s.dynamic == ()

    def test_capacity(self, tiny):
        s = load_tools(new_session(capacity=2), ["mail__send", "chat__post"], tiny)
        with pytest.raises(CapacityExceeded):
            load_tools(s, ["mail__list"], tiny)
        # defaults never count against capacity
        assert load_tools(s, ["web_search"], tiny).dynamic == s.dynamic


class TestToolInfo:
    def test_known_and_unknown(self, tiny):
        infos, unknown = get_tool_info(tiny, ["mail__send", "ghost", "create_table"])
        assert [i.tool_id for i in infos] == ["mail__send", "create_table"]
        assert unknown == ["ghost"]
        assert infos[0].input_schema["required"] == ["to"]


class TestCallTool:
    def test_unbound(self, tiny):
        with pytest.raises(UnboundTool):
            call_tool(FakeExecutor(), "mail__send", {"to": "a"}, new_session(), tiny)

    def test_not_found(self, tiny):
        with pytest.raises(ToolNotFound):
            call_tool(FakeExecutor(), "ghost", {}, new_session(), tiny)

    def test_schema_violation_names_field(self, tiny):
        s = load_tools(new_session(), ["mail__send"], tiny)
        with pytest.raises(SchemaViolation) as info:
            call_tool(FakeExecutor(), "mail__send", {}, s, tiny)
        assert info.value.field == "to"

    def test_executes_when_bound(self, tiny):
        ex = FakeExecutor({"mail__send": {"id": 1}})
        s = load_tools(new_session(), ["mail__send"], tiny)
        assert call_tool(ex, "mail__send", {"to": "a"}, s, tiny) == {"id": 1}
        assert ex.calls == [("mail__send", {"to": "a"})]

    def test_fixed_toolset_mode_skips_binding(self, tiny):
        assert call_tool(FakeExecutor(), "mail__send", {"to": "a"}, new_session(), tiny, require_bound=False)

    def test_executor_failure_wrapped(self, tiny):
        def boom(tool_id, args):
            raise RuntimeError("down")

        s = load_tools(new_session(), ["mail__list"], tiny)
        with pytest.raises(ExecutorError):
            call_tool(FakeExecutor({"mail__list": boom}), "mail__list", {}, s, tiny)

    def test_output_schema_enforced(self, tiny):
        with pytest.raises(ExecutorError):
            call_tool(FakeExecutor({"web_search": {"no": "results"}}), "web_search", {"query": "q"}, new_session(), tiny)

    def test_web_search_default(self, tiny):
        out = call_tool(FakeExecutor(), "web_search", {"query": "FAANG earnings"}, new_session(), tiny)
        assert out["results"]


class TestCreateTable:
    def test_headers_and_padding(self):
        out = create_table([["a", 1], ["bb"]], ["x", "y"])
        assert out["columns"] == 2 and out["row_count"] == 2
        assert out["table"].splitlines() == ["| x  | y |", "|----|---|", "| a  | 1 |", "| bb |   |"]

    def test_through_call_tool(self, tiny):
        out = call_tool(FakeExecutor(), "create_table", {"rows": [[1, 2]]}, new_session(), tiny)
        assert out["table"] == "| 1 | 2 |"

    def test_rejects_empty_rows(self, tiny):
        with pytest.raises(SchemaViolation):
            call_tool(FakeExecutor(), "create_table", {"rows": []}, new_session(), tiny)

    def test_is_default(self):
        assert is_default_tool("create_table") and is_default_tool("web_search")
        assert not is_default_tool("mail__send")


class TestMetaToolsWire:
    @pytest.fixture
    def meta(self, tiny, embedder):
        return MetaTools(tiny, make_searcher("vector", tiny, embedder), FakeExecutor())

    def test_declarations_cover_every_meta_tool(self):
        assert set(META_TOOL_DECLARATIONS) == set(META_TOOL_NAMES)

    def test_search_then_load_then_call(self, meta):
        found = meta.search_tools({"queries": ["send an email"]})
        ids = [i["tool_id"] for i in found["items"]]
        assert "mail__send" in ids
        assert meta.load_tools({"tool_ids": ["mail__send"]}) == {"loaded": ["mail__send"], "bound": ["mail__send"]}
        assert meta.call_tool({"tool_id": "mail__send", "args": {"to": "x"}})["tool_id"] == "mail__send"

    def test_load_reports_only_new(self, meta):
        meta.load_tools({"tool_ids": ["mail__send"]})
        assert meta.load_tools({"tool_ids": ["mail__send"]})["loaded"] == []

    def test_missing_params(self, meta):
        with pytest.raises(DataError):
            meta.load_tools({})
        with pytest.raises(DataError):
            meta.search_apps({"query": ""})
        with pytest.raises(DataError):
            meta.get_tool_info({"tool_ids": "mail__send"})

    def test_get_tool_info_wire(self, meta):
        out = meta.get_tool_info({"tool_ids": ["mail__list", "zzz"]})
        assert out["unknown"] == ["zzz"] and out["tools"][0]["tool_id"] == "mail__list"

    def test_handler_lookup(self, meta):
        assert meta.handler("search_apps") is not None
        assert meta.handler("frobnicate") is None
