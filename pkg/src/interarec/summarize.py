"""Keyword summarization of session screenshots via a pluggable multimodal backend.

The pipeline is: build a category prompt, split the session's screenshots
into batches, send each batch with the prompt, parse each raw response into
a per-category summary, and merge the batch summaries into one.

Two backends ship: a live chat-completions client and a deterministic mock
that replays fixture files, keyed by a digest of the prompt and the batch's
screenshot keys, so the whole pipeline runs byte-identically offline.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Protocol, Sequence

from .errors import (
    BackendUnavailableError,
    EmptyCategoryListError,
    InvalidBatchSizeError,
    MissingFixtureError,
    NoScreenshotsError,
    SummaryParseError,
)
from .sessions import ScreenshotRef, Session

ABSENT = "ABSENT"

DEFAULT_CATEGORIES: tuple[str, ...] = (
    "Product Characteristics",
    "Lowest Price",
    "Highest Price",
    "Brand Preference",
    "Product Specifications",
    "User Reviews and Testimonials",
    "Comparisons",
    "Promotions",
)

# price bands merge numerically; everything else merges as text
_LOWEST = "Lowest Price"
_HIGHEST = "Highest Price"

_NOT_AVAILABLE_MARKERS = {"not available", "n/a", "none", "unavailable"}


@dataclass(frozen=True)
class PromptSpec:
    """The instruction sent with every screenshot batch."""

    categories: tuple[str, ...]
    instruction_text: str


def build_prompt(categories: Sequence[str] = DEFAULT_CATEGORIES) -> PromptSpec:
    """Compose the per-category inference prompt.

    The text asks what the images imply about user preference in each
    category, requests a response covering all of them, and tells the
    backend to mark missing categories as not available.
    """
    categories = tuple(categories)
    if not categories or any(not c for c in categories):
        raise EmptyCategoryListError("at least one nonempty category name is required")
    text = (
        "What can you infer from the images below with regards to a user "
        "preference in the following categories? "
        + ", ".join(categories)
        + ". Write a response that contains the above information. "
        "If any of the categorical information is unavailable, mark it as not available."
    )
    return PromptSpec(categories=categories, instruction_text=text)


@dataclass(frozen=True)
class KeywordSummary:
    """Per-category text extracted from one or more screenshot batches.

    ``entries`` holds every requested category, mapped to its text value or
    ABSENT. Keys the backend volunteered beyond the requested categories are
    kept in ``extras``. ``raw_texts`` retains the unparsed backend responses
    for audit.
    """

    entries: dict[str, str]
    extras: dict[str, str] = field(default_factory=dict)
    source_batch_count: int = 1
    raw_texts: tuple[str, ...] = ()

    def get(self, category: str) -> str:
        return self.entries.get(category, ABSENT)

    def present(self) -> dict[str, str]:
        """Only the categories that carry a value."""
        return {k: v for k, v in self.entries.items() if v != ABSENT}

    @classmethod
    def from_values(
        cls, values: dict[str, str], categories: Sequence[str] = DEFAULT_CATEGORIES
    ) -> "KeywordSummary":
        entries = {c: values.get(c, ABSENT) for c in categories}
        extras = {k: v for k, v in values.items() if k not in entries}
        return cls(entries=entries, extras=extras)


class SummarizerBackend(Protocol):
    """Behavioral contract for anything that turns (prompt, batch) into text."""

    identity: str
    max_in_flight: int

    def complete(self, prompt: PromptSpec, batch: Sequence[ScreenshotRef]) -> str: ...


def batch_screenshots(
    refs: Sequence[ScreenshotRef], batch_size: int = 10
) -> list[tuple[ScreenshotRef, ...]]:
    """Split refs into order-preserving batches; only the last may be short."""
    if batch_size < 1:
        raise InvalidBatchSizeError(f"batch_size must be >= 1, got {batch_size}")
    return [tuple(refs[i : i + batch_size]) for i in range(0, len(refs), batch_size)]


def _normalize_value(value) -> str:
    if value is None:
        return ABSENT
    if isinstance(value, str):
        text = value.strip()
    else:
        text = json.dumps(value, ensure_ascii=False)
    if text.rstrip(".").strip().casefold() in _NOT_AVAILABLE_MARKERS or not text:
        return ABSENT
    return text


def _clean_key(key: str) -> str:
    return key.strip().strip("\"'*`").strip()


def _first_json_object(raw: str) -> dict:
    decoder = json.JSONDecoder()
    idx = raw.find("{")
    while idx != -1:
        try:
            obj, _ = decoder.raw_decode(raw, idx)
        except json.JSONDecodeError:
            idx = raw.find("{", idx + 1)
            continue
        if isinstance(obj, dict):
            return obj
        idx = raw.find("{", idx + 1)
    raise SummaryParseError("no JSON object found in response")


def parse_summary_text(
    raw: str, categories: Sequence[str] = DEFAULT_CATEGORIES
) -> KeywordSummary:
    """Extract per-category values from one raw backend response.

    Only the first well-formed JSON object in the text is authoritative;
    surrounding prose and code fences are tolerated but never mined for
    values. Keys match categories case-insensitively, ignoring surrounding
    quotes and asterisks. Not-available markers normalize to ABSENT.
    """
    obj = _first_json_object(raw)
    if not obj:
        raise SummaryParseError("JSON object in response is empty")
    canonical = {c.casefold(): c for c in categories}
    entries = {c: ABSENT for c in categories}
    extras: dict[str, str] = {}
    for key, value in obj.items():
        cleaned = _clean_key(str(key))
        category = canonical.get(cleaned.casefold())
        if category is not None:
            entries[category] = _normalize_value(value)
        else:
            extras[cleaned] = _normalize_value(value)
    return KeywordSummary(entries=entries, extras=extras, raw_texts=(raw,))


def _join_distinct(values: Iterable[str]) -> str:
    seen: list[str] = []
    for v in values:
        if v not in seen:
            seen.append(v)
    return "; ".join(seen)


def merge_summaries(summaries: Sequence[KeywordSummary]) -> KeywordSummary:
    """Combine per-batch summaries into one session summary.

    Lowest Price keeps the batch value with the numerically smallest parsed
    amount; Highest Price keeps the largest. Equal amounts tie-break on the
    text itself so the result is independent of batch order. Text categories
    concatenate distinct values with "; " in batch order; ABSENT yields to
    any present value.
    """
    from .constraints import parse_price

    if not summaries:
        raise SummaryParseError("nothing to merge")
    if len(summaries) == 1:
        return summaries[0]
    categories = list(summaries[0].entries)
    entries: dict[str, str] = {}
    for category in categories:
        present = [s.get(category) for s in summaries if s.get(category) != ABSENT]
        if not present:
            entries[category] = ABSENT
            continue
        if category in (_LOWEST, _HIGHEST):
            numeric = [(parse_price(v), v) for v in present]
            numeric = [(p, v) for p, v in numeric if p is not None]
            if numeric:
                if category == _LOWEST:
                    entries[category] = min(numeric, key=lambda t: (t[0], t[1]))[1]
                else:
                    entries[category] = min(numeric, key=lambda t: (-t[0], t[1]))[1]
                continue
        entries[category] = _join_distinct(present)
    extras: dict[str, str] = {}
    for s in summaries:
        for key, value in s.extras.items():
            if value == ABSENT:
                continue
            extras[key] = _join_distinct([extras[key], value]) if key in extras else value
    return KeywordSummary(
        entries=entries,
        extras=extras,
        source_batch_count=sum(s.source_batch_count for s in summaries),
        raw_texts=tuple(t for s in summaries for t in s.raw_texts),
    )


def summarize_session(
    session: Session,
    backend: SummarizerBackend,
    prompt: PromptSpec | None = None,
    batch_size: int = 10,
    *,
    kind: str | None = None,
) -> KeywordSummary:
    """Summarize a session's screenshots end to end.

    Batches may run concurrently up to the backend's in-flight bound; the
    merge happens only after every batch has returned.
    """
    if prompt is None:
        prompt = build_prompt()
    refs = session.screenshots_of_kind(kind)
    if not refs:
        raise NoScreenshotsError(
            f"session {session.session_id!r} has no screenshots"
            + (f" of kind {kind!r}" if kind else "")
        )
    batches = batch_screenshots(refs, batch_size)
    bound = max(1, getattr(backend, "max_in_flight", 1))
    if bound > 1 and len(batches) > 1:
        with ThreadPoolExecutor(max_workers=bound) as pool:
            raws = list(pool.map(lambda b: backend.complete(prompt, b), batches))
    else:
        raws = [backend.complete(prompt, batch) for batch in batches]
    parsed = []
    for i, raw in enumerate(raws):
        try:
            parsed.append(parse_summary_text(raw, prompt.categories))
        except SummaryParseError as exc:
            raise SummaryParseError(f"batch {i}: {exc}") from exc
    return merge_summaries(parsed)


# --- mock backend ------------------------------------------------------------

def fixture_relpath(prompt_text: str, screenshot_keys: Iterable[str]) -> Path:
    """Relative fixture path for one (prompt, batch) pair.

    The digest covers the prompt text and the batch's screenshot keys in
    sorted order, so any client in any language can precompute it.
    """
    joined = prompt_text + "\n" + ",".join(sorted(screenshot_keys))
    digest = hashlib.sha256(joined.encode("utf-8")).hexdigest()
    return Path("fixture") / f"{digest}.txt"


def write_fixture(
    root: Path | str, prompt: PromptSpec, screenshot_keys: Iterable[str], text: str
) -> Path:
    """Store a canned backend response where the mock backend will find it."""
    path = Path(root) / fixture_relpath(prompt.instruction_text, screenshot_keys)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


class MockSummarizerBackend:
    """Replays fixture files; a pure function of (prompt text, screenshot keys)."""

    identity = "mock"
    max_in_flight = 1

    def __init__(self, fixtures_root: Path | str | None = None):
        root = fixtures_root or os.environ.get("INTERAREC_FIXTURES")
        if not root:
            raise BackendUnavailableError(
                "mock backend needs a fixture root (argument or INTERAREC_FIXTURES)"
            )
        self.root = Path(root)

    def complete(self, prompt: PromptSpec, batch: Sequence[ScreenshotRef]) -> str:
        rel = fixture_relpath(prompt.instruction_text, [r.key for r in batch])
        path = self.root / rel
        if not path.exists():
            raise MissingFixtureError(f"no fixture at {rel}")
        return path.read_text(encoding="utf-8")


# --- live backend ------------------------------------------------------------

class LiveSummarizerBackend:
    """Chat-completions client for a hosted multimodal model.

    Configuration comes from arguments or the INTERAREC_MLLM_URL,
    INTERAREC_MLLM_MODEL, and INTERAREC_MLLM_KEY environment variables.
    Throttle and server errors retry with exponential backoff: 1s base,
    factor 2, at most 5 attempts.
    """

    identity = "live"

    def __init__(
        self,
        url: str | None = None,
        model: str | None = None,
        api_key: str | None = None,
        *,
        max_in_flight: int = 2,
        client=None,
        image_resolver=None,
        sleep=time.sleep,
    ):
        self.url = url or os.environ.get("INTERAREC_MLLM_URL")
        self.model = model or os.environ.get("INTERAREC_MLLM_MODEL")
        self.api_key = api_key or os.environ.get("INTERAREC_MLLM_KEY")
        self.max_in_flight = max_in_flight
        self._client = client
        # maps a screenshot key to something the endpoint can fetch; by
        # default keys are assumed to already be URLs or data URIs
        self._resolve = image_resolver or (lambda ref: ref.key)
        self._sleep = sleep

    def _ensure_client(self):
        if self._client is None:
            import httpx

            self._client = httpx.Client(timeout=60.0)
        return self._client

    def complete(self, prompt: PromptSpec, batch: Sequence[ScreenshotRef]) -> str:
        if not (self.url and self.model and self.api_key):
            raise BackendUnavailableError(
                "live backend not configured: set INTERAREC_MLLM_URL, "
                "INTERAREC_MLLM_MODEL, and INTERAREC_MLLM_KEY"
            )
        import httpx

        content = [{"type": "text", "text": prompt.instruction_text}]
        content += [
            {"type": "image_url", "image_url": {"url": self._resolve(ref)}}
            for ref in batch
        ]
        payload = {"model": self.model, "messages": [{"role": "user", "content": content}]}
        headers = {"Authorization": f"Bearer {self.api_key}"}
        client = self._ensure_client()
        delay = 1.0
        last_error = "exhausted retries"
        for attempt in range(5):
            try:
                response = client.post(self.url, json=payload, headers=headers)
            except httpx.HTTPError as exc:
                last_error = f"transport error: {exc}"
            else:
                if response.status_code == 200:
                    try:
                        return response.json()["choices"][0]["message"]["content"]
                    except (KeyError, IndexError, TypeError, ValueError) as exc:
                        raise BackendUnavailableError(
                            f"malformed backend response: {exc}"
                        ) from exc
                if response.status_code == 429 or response.status_code >= 500:
                    last_error = f"backend returned {response.status_code}"
                else:
                    raise BackendUnavailableError(
                        f"backend returned {response.status_code}"
                    )
            if attempt < 4:
                self._sleep(delay)
                delay *= 2
        raise BackendUnavailableError(last_error)
