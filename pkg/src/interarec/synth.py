"""Deterministic synthetic corpora for offline evaluation and demos.

The generator builds a catalog whose item titles use disjoint per-item
token triples, walks a fixed Markov chain to produce sessions, and writes
mock-backend fixtures whose Product Characteristics carry the title tokens
of each session's held-out next item. A noise parameter swaps a fraction
of those summaries to a random wrong item, weakening the re-ranking signal
in a controlled way.

Everything is a pure function of the seed: same seed, same bytes.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .catalog import CatalogSnapshot, Item, write_catalog_file
from .choice import MnlParameters, Transaction
from .sessions import (
    DEFAULT_KIND,
    DatasetLoad,
    Session,
    load_session_dataset,
    write_session_records,
)
from .summarize import (
    DEFAULT_CATEGORIES,
    KeywordSummary,
    MockSummarizerBackend,
    PromptSpec,
    build_prompt,
    summarize_session,
    write_fixture,
)

# fixed successor offsets and probabilities of the generative chain
_SUCC_OFFSETS = (1, 7, 13)
_SUCC_PROBS = (0.6, 0.25, 0.15)

_WORDS = ("alpha", "bravo", "charlie")


def item_title(index: int) -> str:
    """Three tokens unique to this item; no token is shared across items."""
    return " ".join(f"{w}{index:03d}" for w in _WORDS)


def _fixture_text(title: str) -> str:
    values = {c: "not available" for c in DEFAULT_CATEGORIES}
    values["Product Characteristics"] = title
    inner = ", ".join(f'"{k}": "{v}"' for k, v in values.items())
    return (
        "Based on the provided screenshots, here is the requested summary.\n"
        "{" + inner + "}\n"
    )


@dataclass(frozen=True)
class SynthCorpus:
    """Paths and settings of one generated corpus."""

    root: Path
    catalog_path: Path
    sessions_path: Path
    fixtures_root: Path
    prompt: PromptSpec
    kind: str
    seed: int
    noise: float

    def load_catalog(self) -> CatalogSnapshot:
        from .catalog import load_catalog_file

        return load_catalog_file(self.catalog_path)

    def load_sessions(self) -> DatasetLoad:
        return load_session_dataset(self.sessions_path)

    def summary_source(self, batch_size: int = 10) -> Callable[[Session, str], KeywordSummary]:
        """A (session, kind) -> KeywordSummary callable over the mock backend."""
        backend = MockSummarizerBackend(self.fixtures_root)

        def source(session: Session, kind: str) -> KeywordSummary:
            return summarize_session(
                session, backend, self.prompt, batch_size, kind=kind
            )

        return source


def generate_corpus(
    root: Path | str,
    *,
    n_items: int = 100,
    n_sessions: int = 200,
    seed: int = 0,
    noise: float = 0.0,
    kind: str = DEFAULT_KIND,
    min_len: int = 4,
    max_len: int = 8,
) -> SynthCorpus:
    """Write catalog, sessions, and fixtures under root; seeded and repeatable.

    Sessions walk the chain succ(i) = i+1 / i+7 / i+13 (mod n_items) with
    probabilities 0.6 / 0.25 / 0.15. The last item splits off as ground
    truth on load. With probability ``noise`` a session's fixture describes
    a uniformly random wrong item instead of the ground truth.
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    prompt = build_prompt()

    items = tuple(
        Item(
            item_id=f"i{idx:03d}",
            title=item_title(idx),
            price=Decimal(str(round(10 + 190 * rng.random(), 2))),
        )
        for idx in range(n_items)
    )
    catalog = CatalogSnapshot(items=items)
    catalog_path = root / "catalog.jsonl"
    write_catalog_file(catalog, catalog_path)

    fixtures_root = root / "fixtures"
    offsets = np.array(_SUCC_OFFSETS)
    records = []
    for s in range(n_sessions):
        session_id = f"s{s:04d}"
        # quadratic bias toward low indices gives a popularity skew
        current = int(n_items * rng.random() ** 2)
        length = int(rng.integers(min_len, max_len + 1))
        walk = [current]
        for _ in range(length):
            step = rng.choice(offsets, p=_SUCC_PROBS)
            current = int((current + step) % n_items)
            walk.append(current)
        item_ids = [items[i].item_id for i in walk]
        keys = [f"{session_id}-{j:02d}" for j in range(len(walk))]
        records.append(
            {
                "session_id": session_id,
                "items": item_ids,
                "screenshots": [{"key": k, "kind": kind} for k in keys],
                "timestamps": list(range(len(walk))),
            }
        )
        truth_index = walk[-1]
        if noise > 0 and rng.random() < noise:
            truth_index = int(rng.integers(0, n_items))
        # fixture covers the prefix screenshots (the last item is held out)
        write_fixture(
            fixtures_root,
            prompt,
            keys[:-1],
            _fixture_text(items[truth_index].title),
        )

    sessions_path = root / "sessions.jsonl"
    write_session_records(records, sessions_path)
    return SynthCorpus(
        root=root,
        catalog_path=catalog_path,
        sessions_path=sessions_path,
        fixtures_root=fixtures_root,
        prompt=prompt,
        kind=kind,
        seed=seed,
        noise=noise,
    )


def simulate_transactions(
    params: MnlParameters,
    n: int,
    seed: int,
    *,
    offered_size: int = 3,
    items: Sequence[str] | None = None,
) -> list[Transaction]:
    """Draw transactions from a known MNL model for estimation tests.

    Each transaction offers a uniformly random subset and samples the
    choice (or no purchase) from the model's probabilities.
    """
    rng = np.random.default_rng(seed)
    universe = sorted(params.v) if items is None else sorted(items)
    size = min(offered_size, len(universe))
    transactions = []
    for _ in range(n):
        offered = sorted(str(i) for i in rng.choice(universe, size=size, replace=False))
        weights = np.array([params.v[i] for i in offered])
        denom = params.v0 + weights.sum()
        probs = np.concatenate(([params.v0], weights)) / denom
        pick = rng.choice(len(offered) + 1, p=probs)
        chosen = None if pick == 0 else offered[pick - 1]
        transactions.append(Transaction(offered=tuple(offered), chosen=chosen))
    return transactions
