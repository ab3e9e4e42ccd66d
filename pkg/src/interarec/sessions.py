"""Browsing sessions: ordered interaction events with screenshot references.

A session is the chronological record of one user's item visits. For
evaluation, the last visited item becomes the prediction target and the
remaining prefix becomes the model input. The dataset file format is
line-delimited JSON, one session per line, with items, optional aligned
screenshots, and optional timestamps.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import (
    InvalidWindowError,
    MalformedLineError,
    MissingScreenshotKeyError,
    OutOfOrderTimestampError,
)

SCREENSHOT_KINDS = ("full_page_viewport", "item_image_only")
DEFAULT_KIND = "full_page_viewport"


@dataclass(frozen=True)
class ScreenshotRef:
    """Pointer to one stored capture: opaque key, capture kind, capture time."""

    key: str
    kind: str = DEFAULT_KIND
    captured_at: int | None = None

    def __post_init__(self):
        if not self.key:
            raise MissingScreenshotKeyError("screenshot key must be nonempty")
        if self.kind not in SCREENSHOT_KINDS:
            raise ValueError(
                f"kind must be one of {SCREENSHOT_KINDS}, got {self.kind!r}"
            )


@dataclass(frozen=True)
class InteractionEvent:
    """One item visit, optionally with the screenshot captured during it."""

    item_id: str
    timestamp: int = 0
    screenshot: ScreenshotRef | None = None

    def __post_init__(self):
        if not self.item_id:
            raise ValueError("item_id must be nonempty")
        if self.timestamp < 0:
            raise ValueError(f"timestamp must be >= 0, got {self.timestamp}")


@dataclass(frozen=True)
class Session:
    """Chronological interaction events plus the held-out next item for eval."""

    session_id: str
    events: tuple[InteractionEvent, ...] = ()
    ground_truth_next: str | None = None

    def __post_init__(self):
        for a, b in zip(self.events, self.events[1:]):
            if b.timestamp <= a.timestamp:
                raise OutOfOrderTimestampError(
                    f"session {self.session_id!r}: timestamp {b.timestamp} does not "
                    f"advance past {a.timestamp}"
                )

    @property
    def items(self) -> tuple[str, ...]:
        return tuple(e.item_id for e in self.events)

    @property
    def screenshots(self) -> tuple[ScreenshotRef, ...]:
        return tuple(e.screenshot for e in self.events if e.screenshot is not None)

    def screenshots_of_kind(self, kind: str | None) -> tuple[ScreenshotRef, ...]:
        """Screenshots filtered to one capture kind (None keeps all)."""
        if kind is None:
            return self.screenshots
        return tuple(s for s in self.screenshots if s.kind == kind)


def append_event(session: Session, event: InteractionEvent) -> Session:
    """Return the session with the event appended; the clock must advance."""
    if session.events and event.timestamp <= session.events[-1].timestamp:
        raise OutOfOrderTimestampError(
            f"session {session.session_id!r}: event at {event.timestamp} does not "
            f"advance past {session.events[-1].timestamp}"
        )
    return Session(
        session_id=session.session_id,
        events=session.events + (event,),
        ground_truth_next=session.ground_truth_next,
    )


def truncate_session(session: Session, last_m: int) -> Session:
    """Keep the final min(last_m, t) events; the ground truth is untouched."""
    if last_m < 1:
        raise InvalidWindowError(f"last_m must be >= 1, got {last_m}")
    if len(session.events) <= last_m:
        return session
    return Session(
        session_id=session.session_id,
        events=session.events[-last_m:],
        ground_truth_next=session.ground_truth_next,
    )


def session_from_items(
    session_id: str,
    items: Sequence[str],
    *,
    screenshots: Sequence[ScreenshotRef | None] | None = None,
    timestamps: Sequence[int] | None = None,
    ground_truth_next: str | None = None,
) -> Session:
    """Build a session from parallel arrays; timestamps default to 0, 1, 2, ..."""
    if timestamps is None:
        timestamps = range(len(items))
    if screenshots is None:
        screenshots = [None] * len(items)
    events = tuple(
        InteractionEvent(item_id=i, timestamp=int(t), screenshot=s)
        for i, t, s in zip(items, timestamps, screenshots)
    )
    return Session(
        session_id=session_id, events=events, ground_truth_next=ground_truth_next
    )


# --- dataset file format -----------------------------------------------------

@dataclass
class DatasetLoad:
    """Loaded evaluation sessions plus the ids excluded for being too short."""

    sessions: list[Session]
    excluded: list[str]

    def __iter__(self) -> Iterator[Session]:
        return iter(self.sessions)

    def __len__(self) -> int:
        return len(self.sessions)


def _decode_line(record: dict, line_no: int) -> tuple[str, list[str], list, list[int]]:
    if not isinstance(record, dict):
        raise MalformedLineError(line_no, "line is not an object")
    session_id = record.get("session_id")
    if not session_id or not isinstance(session_id, str):
        raise MalformedLineError(line_no, "missing session_id")
    items = record.get("items")
    if not isinstance(items, list) or not all(isinstance(i, str) and i for i in items):
        raise MalformedLineError(line_no, "items must be a list of nonempty strings")
    refs: list[ScreenshotRef | None]
    if record.get("screenshots") is not None:
        raw = record["screenshots"]
        if not isinstance(raw, list) or len(raw) != len(items):
            raise MalformedLineError(
                line_no, "screenshots must align 1:1 with items"
            )
        refs = []
        for entry in raw:
            try:
                refs.append(
                    ScreenshotRef(
                        key=entry["key"], kind=entry.get("kind", DEFAULT_KIND)
                    )
                )
            except (TypeError, KeyError, ValueError, MissingScreenshotKeyError) as exc:
                raise MalformedLineError(line_no, f"bad screenshot entry: {exc}") from exc
    else:
        refs = [None] * len(items)
    if record.get("timestamps") is not None:
        raw_ts = record["timestamps"]
        if not isinstance(raw_ts, list) or len(raw_ts) != len(items):
            raise MalformedLineError(line_no, "timestamps must align 1:1 with items")
        timestamps = [int(t) for t in raw_ts]
    else:
        timestamps = list(range(len(items)))
    return session_id, items, refs, timestamps


def load_session_dataset(
    path: Path | str,
    *,
    strict: bool = False,
    screenshot_dir: Path | str | None = None,
) -> DatasetLoad:
    """Load an evaluation dataset, splitting off each session's last item.

    Sessions with fewer than 2 items cannot yield a (prefix, target) pair;
    they are excluded and reported. In strict mode every referenced
    screenshot key must resolve to `<key>.png` under screenshot_dir.
    """
    sessions: list[Session] = []
    excluded: list[str] = []
    store = Path(screenshot_dir) if screenshot_dir is not None else None
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedLineError(line_no, f"invalid JSON: {exc}") from exc
            session_id, items, refs, timestamps = _decode_line(record, line_no)
            if strict:
                for ref in refs:
                    if ref is None:
                        continue
                    if store is None or not (store / f"{ref.key}.png").exists():
                        raise MissingScreenshotKeyError(
                            f"line {line_no}: no stored image for key {ref.key!r}"
                        )
            if len(items) < 2:
                excluded.append(session_id)
                continue
            try:
                sessions.append(
                    session_from_items(
                        session_id,
                        items[:-1],
                        screenshots=refs[:-1],
                        timestamps=timestamps[:-1],
                        ground_truth_next=items[-1],
                    )
                )
            except OutOfOrderTimestampError as exc:
                raise MalformedLineError(line_no, str(exc)) from exc
    return DatasetLoad(sessions=sessions, excluded=excluded)


def write_session_records(records: Iterable[dict], path: Path | str) -> None:
    """Write raw session records (the dataset file format) one per line."""
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    tmp.replace(path)


def session_to_record(session: Session) -> dict:
    """Serialize a live (no ground-truth) session back to the file format."""
    record: dict = {
        "session_id": session.session_id,
        "items": list(session.items),
        "timestamps": [e.timestamp for e in session.events],
    }
    if all(e.screenshot is not None for e in session.events) and session.events:
        record["screenshots"] = [
            {"key": e.screenshot.key, "kind": e.screenshot.kind}
            for e in session.events
        ]
    return record


# --- deterministic splits ------------------------------------------------------

def split_sessions(
    sessions: Sequence[Session], seed: int, test_fraction: float = 0.2
) -> tuple[list[Session], list[Session]]:
    """Seeded shuffled train/test split; same inputs, same split, always.

    The test side takes the trailing ceil(n * test_fraction) positions of
    the shuffled order.
    """
    n = len(sessions)
    order = np.random.default_rng(seed).permutation(n)
    n_test = int(np.ceil(n * test_fraction)) if n else 0
    cut = n - n_test
    train = [sessions[i] for i in order[:cut]]
    test = [sessions[i] for i in order[cut:]]
    return train, test


def subsample_sessions(
    sessions: Sequence[Session], fraction: float, seed: int
) -> list[Session]:
    """Deterministically keep ceil(n * fraction) sessions, input order kept."""
    if not 0 < fraction <= 1:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    n = len(sessions)
    keep = int(np.ceil(n * fraction))
    chosen = np.random.default_rng(seed).permutation(n)[:keep]
    mask = np.zeros(n, dtype=bool)
    mask[chosen] = True
    return [s for s, m in zip(sessions, mask) if m]
