"""Prompt building, batching, response parsing, merging, and backends."""

from __future__ import annotations

import itertools

import pytest

from interarec.errors import (
    BackendUnavailableError,
    EmptyCategoryListError,
    InvalidBatchSizeError,
    MissingFixtureError,
    NoScreenshotsError,
    SummaryParseError,
)
from interarec.sessions import ScreenshotRef
from interarec.summarize import (
    ABSENT,
    DEFAULT_CATEGORIES,
    KeywordSummary,
    LiveSummarizerBackend,
    MockSummarizerBackend,
    batch_screenshots,
    build_prompt,
    fixture_relpath,
    merge_summaries,
    parse_summary_text,
    summarize_session,
)

from conftest import seed_fixture, session_with_screenshots


def refs(n, kind="full_page_viewport"):
    return [ScreenshotRef(key=f"k{i}", kind=kind, captured_at=i) for i in range(n)]


def test_default_prompt_names_every_category():
    spec = build_prompt()
    assert tuple(spec.categories) == DEFAULT_CATEGORIES
    for name in DEFAULT_CATEGORIES:
        assert name in spec.instruction_text
    assert "not available" in spec.instruction_text


def test_prompt_contains_custom_category():
    spec = build_prompt(["Color"])
    assert "Color" in spec.instruction_text


def test_prompt_rejects_empty_category_list():
    with pytest.raises(EmptyCategoryListError):
        build_prompt([])


def test_batching_shapes():
    assert [len(b) for b in batch_screenshots(refs(25), 10)] == [10, 10, 5]
    assert [len(b) for b in batch_screenshots(refs(10), 10)] == [10]
    assert batch_screenshots([], 10) == []


def test_batching_preserves_order_and_content():
    items = refs(17)
    batches = batch_screenshots(items, 5)
    assert list(itertools.chain.from_iterable(batches)) == items


def test_batching_rejects_zero_size():
    with pytest.raises(InvalidBatchSizeError):
        batch_screenshots(refs(3), 0)


def test_parse_extracts_fixture_fields(asos_text):
    summary = parse_summary_text(asos_text)
    assert "18.00" in summary.get("Lowest Price")
    assert "144.00" in summary.get("Highest Price")
    assert "green" in summary.get("Product Characteristics")
    assert summary.get("Product Specifications") == ABSENT
    assert summary.get("User Reviews and Testimonials") == ABSENT


def test_parse_keeps_nested_objects_as_text(nike_text):
    summary = parse_summary_text(nike_text)
    assert "63.97" in summary.get("Lowest Price")
    assert "180" in summary.get("Highest Price")
    assert "Gender" in summary.get("Product Specifications")


def test_parse_normalizes_not_available():
    summary = parse_summary_text('{"Brand Preference":"Not Available"}')
    assert summary.get("Brand Preference") == ABSENT


def test_parse_requires_a_json_object():
    with pytest.raises(SummaryParseError):
        parse_summary_text("no structured content here")
    with pytest.raises(SummaryParseError):
        parse_summary_text("empty: {}")


def test_parse_covers_every_category_exactly_once(asos_text):
    summary = parse_summary_text(asos_text)
    assert sorted(summary.entries) == sorted(DEFAULT_CATEGORIES)


def test_parse_keeps_unknown_keys_as_extras():
    summary = parse_summary_text('{"Lowest Price": "$5", "Mood": "upbeat"}')
    assert summary.extras == {"Mood": "upbeat"}


def test_merge_widens_price_band():
    first = KeywordSummary.from_values(
        {"Lowest Price": "$18.00 on sale", "Highest Price": "$100.00 top"}
    )
    second = KeywordSummary.from_values(
        {"Lowest Price": "$25.00 floor", "Highest Price": "$144.00 ceiling"}
    )
    merged = merge_summaries([first, second])
    assert "18.00" in merged.get("Lowest Price")
    assert "144.00" in merged.get("Highest Price")
    assert merged.source_batch_count == 2


def test_merge_price_bounds_ignore_batch_order():
    batches = [
        KeywordSummary.from_values({"Lowest Price": "$7", "Highest Price": "$90"}),
        KeywordSummary.from_values({"Lowest Price": "$12", "Highest Price": "$150"}),
        KeywordSummary.from_values({"Lowest Price": "$9.50", "Highest Price": "$150.25"}),
    ]
    baseline = merge_summaries(batches)
    for perm in itertools.permutations(batches):
        merged = merge_summaries(list(perm))
        assert merged.get("Lowest Price") == baseline.get("Lowest Price")
        assert merged.get("Highest Price") == baseline.get("Highest Price")


def test_merge_absent_yields_to_present():
    first = KeywordSummary.from_values({"Brand Preference": ABSENT})
    second = KeywordSummary.from_values({"Brand Preference": "Nike"})
    assert merge_summaries([first, second]).get("Brand Preference") == "Nike"


def test_merge_concatenates_distinct_text():
    first = KeywordSummary.from_values({"Comparisons": "styles compared"})
    second = KeywordSummary.from_values({"Comparisons": "prices compared"})
    third = KeywordSummary.from_values({"Comparisons": "styles compared"})
    merged = merge_summaries([first, second, third])
    assert merged.get("Comparisons") == "styles compared; prices compared"


def test_mock_pipeline_is_deterministic(tmp_path, asos_text):
    session = session_with_screenshots("det", ["a", "b", "c", "d"])
    keys = [e.screenshot.key for e in session.events]
    seed_fixture(tmp_path, asos_text, keys[:3])
    seed_fixture(tmp_path, asos_text, keys[3:])
    backend = MockSummarizerBackend(tmp_path)
    first = summarize_session(session, backend, batch_size=3)
    second = summarize_session(session, backend, batch_size=3)
    assert first == second
    assert first.source_batch_count == 2
    assert len(first.raw_texts) == 2


def test_mock_backend_requires_fixture(tmp_path):
    backend = MockSummarizerBackend(tmp_path)
    session = session_with_screenshots("missing", ["a", "b"])
    with pytest.raises(MissingFixtureError):
        summarize_session(session, backend)


def test_fixture_path_ignores_key_order():
    spec = build_prompt()
    forward = fixture_relpath(spec.instruction_text, ["k1", "k2", "k3"])
    shuffled = fixture_relpath(spec.instruction_text, ["k3", "k1", "k2"])
    assert forward == shuffled
    assert forward.suffix == ".txt"
    assert forward.parent.name == "fixture"
    assert fixture_relpath(spec.instruction_text, ["k1", "k2"]) != forward
    assert fixture_relpath("other prompt", ["k1", "k2", "k3"]) != forward


def test_summarize_requires_screenshots(tmp_path):
    from interarec.sessions import session_from_items

    backend = MockSummarizerBackend(tmp_path)
    bare = session_from_items("bare", ["a", "b"])
    with pytest.raises(NoScreenshotsError):
        summarize_session(bare, backend)


def test_summarize_filters_by_screenshot_kind(tmp_path, asos_text):
    session = session_with_screenshots("k", ["a", "b"], kind="item_image_only")
    keys = [e.screenshot.key for e in session.events]
    seed_fixture(tmp_path, asos_text, keys)
    backend = MockSummarizerBackend(tmp_path)
    summary = summarize_session(session, backend, kind="item_image_only")
    assert "18.00" in summary.get("Lowest Price")
    with pytest.raises(NoScreenshotsError):
        summarize_session(session, backend, kind="full_page_viewport")


def test_parse_error_carries_batch_index(tmp_path, asos_text):
    session = session_with_screenshots("bad", ["a", "b", "c", "d"])
    keys = [e.screenshot.key for e in session.events]
    seed_fixture(tmp_path, asos_text, keys[:3])
    seed_fixture(tmp_path, "prose without json", keys[3:])
    backend = MockSummarizerBackend(tmp_path)
    with pytest.raises(SummaryParseError, match="batch 1"):
        summarize_session(session, backend, batch_size=3)


class FakeResponse:
    def __init__(self, status_code, payload=None):
        self.status_code = status_code
        self._payload = payload or {}

    def json(self):
        return self._payload


class ScriptedClient:
    """Returns queued responses; records request payloads."""

    def __init__(self, responses):
        self.responses = list(responses)
        self.requests = []

    def post(self, url, json=None, headers=None):
        self.requests.append({"url": url, "json": json, "headers": headers})
        return self.responses.pop(0)


def completion(text):
    return {"choices": [{"message": {"content": text}}]}


def test_live_backend_requires_configuration(monkeypatch):
    for var in ("INTERAREC_MLLM_URL", "INTERAREC_MLLM_MODEL", "INTERAREC_MLLM_KEY"):
        monkeypatch.delenv(var, raising=False)
    backend = LiveSummarizerBackend()
    with pytest.raises(BackendUnavailableError):
        backend.complete(build_prompt(), refs(1))


def test_live_backend_retries_throttles_with_backoff():
    sleeps = []
    client = ScriptedClient(
        [FakeResponse(429), FakeResponse(500), FakeResponse(200, completion("ok"))]
    )
    backend = LiveSummarizerBackend(
        url="https://mllm.test/v1",
        model="m",
        api_key="secret",
        client=client,
        sleep=sleeps.append,
    )
    assert backend.complete(build_prompt(), refs(2)) == "ok"
    assert sleeps == [1.0, 2.0]
    body = client.requests[0]["json"]
    assert body["model"] == "m"
    parts = body["messages"][0]["content"]
    assert parts[0]["type"] == "text"
    assert [p["type"] for p in parts[1:]] == ["image_url", "image_url"]
    assert client.requests[0]["headers"]["Authorization"] == "Bearer secret"


def test_live_backend_gives_up_after_five_tries():
    sleeps = []
    client = ScriptedClient([FakeResponse(503)] * 5)
    backend = LiveSummarizerBackend(
        url="https://mllm.test/v1", model="m", api_key="k",
        client=client, sleep=sleeps.append,
    )
    with pytest.raises(BackendUnavailableError):
        backend.complete(build_prompt(), refs(1))
    assert sleeps == [1.0, 2.0, 4.0, 8.0]
    assert len(client.requests) == 5


def test_live_backend_hard_client_error_is_not_retried():
    client = ScriptedClient([FakeResponse(400)])
    backend = LiveSummarizerBackend(
        url="https://mllm.test/v1", model="m", api_key="k",
        client=client, sleep=lambda _: None,
    )
    with pytest.raises(BackendUnavailableError):
        backend.complete(build_prompt(), refs(1))
    assert len(client.requests) == 1
