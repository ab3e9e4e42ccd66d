"""Offline evaluation: Recall@k and MRR@k over held-out next items.

The harness splits sessions 80/20 with a seeded shuffle, trains (or loads)
each model, optionally re-ranks every top-k list against the session's
keyword summary, and emits machine-readable report rows. Runs are
deterministic: dataset digest, config, and seed pin every metric value.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

from .catalog import CatalogSnapshot
from .errors import (
    EmptyTestSplitError,
    MissingFixtureError,
    MissingSummariesError,
    NoScreenshotsError,
)
from .models import read_predictions, train_model
from .rerank import HashEmbeddingProvider, RankedPredictions, rerank_topk
from .sessions import Session, split_sessions, subsample_sessions, truncate_session
from .summarize import KeywordSummary

FULL_WINDOW = None


def recall_at_k(predictions: RankedPredictions, truth: str, k: int) -> int:
    """1 iff the truth appears among the first min(k, len) entries."""
    if k > predictions.k:
        raise ValueError(f"k={k} exceeds the prediction list's k={predictions.k}")
    return int(truth in predictions.item_ids[:k])


def mrr_at_k(predictions: RankedPredictions, truth: str, k: int) -> float:
    """Inverse 1-based rank of the truth within the top k, else 0."""
    if k > predictions.k:
        raise ValueError(f"k={k} exceeds the prediction list's k={predictions.k}")
    for rank, item_id in enumerate(predictions.item_ids[:k], start=1):
        if item_id == truth:
            return 1.0 / rank
    return 0.0


@dataclass(frozen=True)
class EvalConfig:
    """One experiment setting; session_window=None means the full prefix."""

    k: int = 50
    rerank: bool = False
    training_fraction: float = 1.0
    session_window: int | None = FULL_WINDOW
    screenshot_kind: str = "full_page_viewport"
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if not 0 < self.training_fraction <= 1:
            raise ValueError(
                f"training_fraction must be in (0, 1], got {self.training_fraction}"
            )

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "rerank": self.rerank,
            "training_fraction": self.training_fraction,
            "session_window": self.session_window,
            "screenshot_kind": self.screenshot_kind,
            "seed": self.seed,
        }

    def digest(self) -> str:
        return hashlib.sha256(
            json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")
        ).hexdigest()


@dataclass(frozen=True)
class EvalRow:
    model: str
    reranked: bool
    recall: float
    mrr: float
    n: int
    config: dict

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "reranked": self.reranked,
            "recall": self.recall,
            "mrr": self.mrr,
            "n": self.n,
            "config": self.config,
        }


@dataclass(frozen=True)
class EvalReport:
    rows: tuple[EvalRow, ...]
    dataset_digest: str
    seed: int

    def to_jsonl(self) -> str:
        lines = []
        for row in self.rows:
            payload = dict(row.to_dict(), dataset_digest=self.dataset_digest)
            lines.append(json.dumps(payload, sort_keys=True))
        return "\n".join(lines) + "\n" if lines else ""


def dataset_digest(sessions: Sequence[Session]) -> str:
    """Content hash over ids, item sequences, targets, and screenshot keys."""
    canon = [
        {
            "session_id": s.session_id,
            "items": list(s.items),
            "ground_truth_next": s.ground_truth_next,
            "screenshots": [r.key for r in s.screenshots],
        }
        for s in sessions
    ]
    return hashlib.sha256(
        json.dumps(canon, sort_keys=True).encode("utf-8")
    ).hexdigest()


SummarySource = Mapping[str, KeywordSummary] | Callable[[Session, str], KeywordSummary]


def _summary_for(
    source: SummarySource, session: Session, kind: str
) -> KeywordSummary:
    if callable(source):
        try:
            return source(session, kind)
        except (NoScreenshotsError, MissingFixtureError) as exc:
            raise MissingSummariesError(
                f"no summary for session {session.session_id!r}: {exc}"
            ) from exc
    try:
        return source[session.session_id]
    except KeyError:
        raise MissingSummariesError(
            f"no summary for session {session.session_id!r}"
        ) from None


def _model_name(spec) -> str:
    if isinstance(spec, str):
        return spec
    if isinstance(spec, Path):
        return spec.stem
    return getattr(spec, "kind", type(spec).__name__)


def run_experiment(
    config: EvalConfig,
    dataset: Sequence[Session],
    models: Sequence,
    *,
    catalog: CatalogSnapshot | None = None,
    summaries: SummarySource | None = None,
    provider=None,
) -> EvalReport:
    """Evaluate each model on the seeded 80/20 split of the dataset.

    ``models`` mixes kind names ("popularity", "markov", "sknn"), fitted
    model objects, and prediction-file paths; file-backed models score a
    miss for any test session absent from the file. With config.rerank,
    each model contributes two rows, without and with re-ranking, so gains
    are computable from one report.
    """
    sessions = list(dataset)
    train, test = split_sessions(sessions, config.seed)
    if not test:
        raise EmptyTestSplitError("the split produced no test sessions")
    if config.training_fraction < 1.0:
        train = subsample_sessions(train, config.training_fraction, config.seed)
    if config.session_window is not None:
        prefixes = [truncate_session(s, config.session_window) for s in test]
    else:
        prefixes = list(test)

    if config.rerank:
        if summaries is None:
            raise MissingSummariesError("rerank=True requires a summary source")
        if catalog is None:
            raise ValueError("rerank=True requires the catalog for attribute texts")
        if provider is None:
            provider = HashEmbeddingProvider()
        test_summaries = [
            _summary_for(summaries, s, config.screenshot_kind) for s in test
        ]

    rows: list[EvalRow] = []
    for spec in models:
        name = _model_name(spec)
        if isinstance(spec, (str,)) and spec in ("popularity", "markov", "sknn"):
            model = train_model(spec, train)
            predict = lambda s, p: model.predict_topk(p.items, config.k, s.session_id)
        elif isinstance(spec, (str, Path)):
            by_id = {p.session_id: p for p in read_predictions(spec)}
            empty = lambda sid: RankedPredictions(
                session_id=sid, entries=(), k=config.k
            )
            predict = lambda s, p: by_id.get(s.session_id, empty(s.session_id))
        else:
            model = spec
            predict = lambda s, p: model.predict_topk(p.items, config.k, s.session_id)

        base_lists = [predict(s, p) for s, p in zip(test, prefixes)]
        rows.append(_score(name, False, base_lists, test, config))
        if config.rerank:
            reranked = [
                rerank_topk(preds, summary, catalog, provider)
                for preds, summary in zip(base_lists, test_summaries)
            ]
            rows.append(_score(name, True, reranked, test, config))
    return EvalReport(
        rows=tuple(rows), dataset_digest=dataset_digest(sessions), seed=config.seed
    )


def _score(
    name: str,
    reranked: bool,
    lists: Sequence[RankedPredictions],
    test: Sequence[Session],
    config: EvalConfig,
) -> EvalRow:
    recall_sum = 0.0
    mrr_sum = 0.0
    for preds, session in zip(lists, test):
        truth = session.ground_truth_next
        recall_sum += recall_at_k(preds, truth, config.k)
        mrr_sum += mrr_at_k(preds, truth, config.k)
    n = len(test)
    return EvalRow(
        model=name,
        reranked=reranked,
        recall=recall_sum / n,
        mrr=mrr_sum / n,
        n=n,
        config=config.to_dict(),
    )


def sweep_training_fraction(
    config: EvalConfig, fractions: Sequence[float], dataset, models, **kwargs
) -> EvalReport:
    """One report whose rows span the given training fractions."""
    rows: list[EvalRow] = []
    digest = ""
    for fraction in fractions:
        report = run_experiment(
            dataclasses.replace(config, training_fraction=fraction),
            dataset,
            models,
            **kwargs,
        )
        rows.extend(report.rows)
        digest = report.dataset_digest
    return EvalReport(rows=tuple(rows), dataset_digest=digest, seed=config.seed)


def sweep_session_window(
    config: EvalConfig, windows: Sequence[int | None], dataset, models, **kwargs
) -> EvalReport:
    """One report whose rows span the given session windows."""
    rows: list[EvalRow] = []
    digest = ""
    for window in windows:
        report = run_experiment(
            dataclasses.replace(config, session_window=window),
            dataset,
            models,
            **kwargs,
        )
        rows.extend(report.rows)
        digest = report.dataset_digest
    return EvalReport(rows=tuple(rows), dataset_digest=digest, seed=config.seed)


def write_report(report: EvalReport, path: Path | str, append: bool = True) -> Path:
    """Persist report rows as line-delimited JSON; append-only by default."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "a" if append else "w"
    with open(path, mode, encoding="utf-8") as fh:
        fh.write(report.to_jsonl())
    return path


def read_report_rows(path: Path | str) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows
