"""Shared fixtures: small catalogs, fixture-backed mock summarizer setup."""

from __future__ import annotations

from pathlib import Path

import pytest

from interarec.catalog import CatalogSnapshot, Item, as_money
from interarec.sessions import DEFAULT_KIND, ScreenshotRef, session_from_items
from interarec.summarize import build_prompt, fixture_relpath, write_fixture

DATA_DIR = Path(__file__).parent / "data"


def make_item(item_id, price, title=None, brand=None, color=None, extras=()):
    return Item(
        item_id=item_id,
        price=as_money(price),
        title=title,
        brand=brand,
        color=color,
        extra_attrs=tuple(extras),
    )


@pytest.fixture
def asos_text():
    return (DATA_DIR / "asos_summary.txt").read_text()


@pytest.fixture
def nike_text():
    return (DATA_DIR / "nike_summary.txt").read_text()


@pytest.fixture
def small_catalog():
    items = [
        make_item("a", "10.00", title="alpha thing", color="red"),
        make_item("b", "20.00", title="bravo thing", color="green"),
        make_item("c", "30.00", title="charlie thing", color="blue"),
    ]
    return CatalogSnapshot(items=tuple(items))


def session_with_screenshots(session_id, item_ids, kind=DEFAULT_KIND):
    """Session whose every event carries a screenshot keyed <sid>-<pos>."""
    refs = [
        ScreenshotRef(key=f"{session_id}-{pos}", kind=kind, captured_at=pos)
        for pos in range(len(item_ids))
    ]
    return session_from_items(session_id, item_ids, screenshots=refs)


def seed_fixture(root: Path, text: str, keys, prompt=None) -> Path:
    """Store mock-backend fixture text for the given screenshot keys."""
    spec = prompt or build_prompt()
    return write_fixture(root, spec, keys, text)


__all__ = [
    "DATA_DIR",
    "make_item",
    "seed_fixture",
    "session_with_screenshots",
    "fixture_relpath",
]
