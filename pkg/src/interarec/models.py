"""Desk-scale next-item predictors: popularity, first-order Markov, session-kNN.

All three share one contract: fit on sessions, then produce a top-k list of
distinct items sorted by score descending with lexicographic tie-breaking.
Items already visited are not excluded, since revisits are legitimate
ground truth. Externally trained models plug in through the prediction
file format instead.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    EmptyTrainingSetError,
    MalformedLineError,
    UntrainedModelError,
)
from .rerank import PredictionEntry, RankedPredictions
from .sessions import Session

MODEL_KINDS = ("popularity", "markov", "sknn")


def training_sequence(session: Session) -> tuple[str, ...]:
    """The full observed item sequence: events plus the held-out next item."""
    items = session.items
    if session.ground_truth_next is not None:
        items = items + (session.ground_truth_next,)
    return items


def _check_training_input(sessions: Sequence[Session]) -> None:
    if not sessions:
        raise EmptyTrainingSetError("training requires at least one session")
    for s in sessions:
        if not training_sequence(s):
            raise EmptyTrainingSetError(f"session {s.session_id!r} has no events")


def _top_entries(scores: dict[str, float], k: int) -> tuple[PredictionEntry, ...]:
    ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))[:k]
    return tuple(PredictionEntry(item_id=i, score=s) for i, s in ranked)


class PopularityModel:
    """Ranks items by global visit frequency; the prefix is ignored."""

    kind = "popularity"

    def __init__(self):
        self._freq: dict[str, float] | None = None
        self.trained_on = 0

    def fit(self, sessions: Sequence[Session]) -> "PopularityModel":
        _check_training_input(sessions)
        counts: dict[str, int] = {}
        total = 0
        for session in sessions:
            for item_id in training_sequence(session):
                counts[item_id] = counts.get(item_id, 0) + 1
                total += 1
        self._freq = {i: c / total for i, c in counts.items()}
        self.trained_on = len(sessions)
        return self

    def predict_topk(
        self, prefix: Sequence[str], k: int, session_id: str = ""
    ) -> RankedPredictions:
        if self._freq is None:
            raise UntrainedModelError("popularity model is not fitted")
        return RankedPredictions(
            session_id=session_id, entries=_top_entries(self._freq, k), k=k
        )


class MarkovModel:
    """First-order transition counts with a popularity backoff tail.

    Successor scores are transition frequencies out of the prefix's last
    item. When fewer than k successors exist (or the last item was never
    seen), popularity-ranked items fill the tail with scores scaled into a
    band strictly below every successor score.
    """

    kind = "markov"

    def __init__(self):
        self._transitions: dict[str, dict[str, float]] | None = None
        self._popularity: PopularityModel | None = None
        self.trained_on = 0

    def fit(self, sessions: Sequence[Session]) -> "MarkovModel":
        _check_training_input(sessions)
        counts: dict[str, dict[str, int]] = {}
        for session in sessions:
            seq = training_sequence(session)
            for src, dst in zip(seq, seq[1:]):
                row = counts.setdefault(src, {})
                row[dst] = row.get(dst, 0) + 1
        self._transitions = {}
        for src, row in counts.items():
            total = sum(row.values())
            self._transitions[src] = {dst: c / total for dst, c in row.items()}
        self._popularity = PopularityModel().fit(sessions)
        self.trained_on = len(sessions)
        return self

    def predict_topk(
        self, prefix: Sequence[str], k: int, session_id: str = ""
    ) -> RankedPredictions:
        if self._transitions is None or self._popularity is None:
            raise UntrainedModelError("markov model is not fitted")
        successors = self._transitions.get(prefix[-1], {}) if prefix else {}
        entries = list(_top_entries(successors, k))
        if len(entries) < k:
            # popularity backoff: rescale frequencies so even the most
            # popular filler scores strictly below the weakest successor
            floor = min((e.score for e in entries), default=1.0)
            freq = self._popularity._freq or {}
            listed = {e.item_id for e in entries}
            tail = {i: f for i, f in freq.items() if i not in listed}
            for entry in _top_entries(tail, k - len(entries)):
                entries.append(
                    PredictionEntry(
                        item_id=entry.item_id, score=entry.score * floor * 0.5
                    )
                )
        return RankedPredictions(session_id=session_id, entries=tuple(entries), k=k)


class SessionKnnModel:
    """Scores items by similarity-weighted votes of the nearest training sessions.

    Sessions are binary item sets; similarity is cosine. The `neighbors`
    most similar training sessions (default 100) vote for their items with
    their similarity as the weight.
    """

    kind = "sknn"

    def __init__(self, neighbors: int = 100):
        if neighbors < 1:
            raise ValueError(f"neighbors must be >= 1, got {neighbors}")
        self.neighbors = neighbors
        self._matrix: np.ndarray | None = None
        self._norms: np.ndarray | None = None
        self._items: list[str] = []
        self._index: dict[str, int] = {}
        self.trained_on = 0

    def fit(self, sessions: Sequence[Session]) -> "SessionKnnModel":
        _check_training_input(sessions)
        vocab: dict[str, int] = {}
        sets = []
        for session in sessions:
            item_set = set(training_sequence(session))
            sets.append(item_set)
            for item_id in item_set:
                if item_id not in vocab:
                    vocab[item_id] = len(vocab)
        matrix = np.zeros((len(sets), len(vocab)))
        for row, item_set in enumerate(sets):
            for item_id in item_set:
                matrix[row, vocab[item_id]] = 1.0
        self._matrix = matrix
        self._norms = np.sqrt(matrix.sum(axis=1))
        self._items = sorted(vocab, key=vocab.get)
        self._index = vocab
        self.trained_on = len(sessions)
        return self

    def predict_topk(
        self, prefix: Sequence[str], k: int, session_id: str = ""
    ) -> RankedPredictions:
        if self._matrix is None:
            raise UntrainedModelError("session-kNN model is not fitted")
        query = np.zeros(self._matrix.shape[1])
        known = {self._index[i] for i in set(prefix) if i in self._index}
        for col in known:
            query[col] = 1.0
        qnorm = np.sqrt(len(known))
        scores: dict[str, float] = {}
        if qnorm > 0:
            sims = (self._matrix @ query) / (self._norms * qnorm)
            order = np.argsort(-sims, kind="stable")[: self.neighbors]
            votes = np.zeros(self._matrix.shape[1])
            for row in order:
                if sims[row] <= 0:
                    break
                votes += sims[row] * self._matrix[row]
            for col in np.nonzero(votes)[0]:
                scores[self._items[col]] = float(votes[col])
        return RankedPredictions(
            session_id=session_id, entries=_top_entries(scores, k), k=k
        )


def train_model(kind: str, sessions: Sequence[Session], **params):
    """Factory over the three model kinds; params are kind-specific."""
    if kind == "popularity":
        return PopularityModel().fit(sessions)
    if kind == "markov":
        return MarkovModel().fit(sessions)
    if kind == "sknn":
        return SessionKnnModel(**params).fit(sessions)
    raise ValueError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")


def predict_topk(
    model, prefix: Sequence[str], k: int, session_id: str = ""
) -> RankedPredictions:
    return model.predict_topk(prefix, k, session_id=session_id)


# --- prediction file format -----------------------------------------------------

def read_predictions(path: Path | str) -> list[RankedPredictions]:
    """Load externally produced top-k lists, enforcing the list invariants."""
    predictions = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedLineError(line_no, f"invalid JSON: {exc}") from exc
            try:
                session_id = record["session_id"]
                k = int(record["k"])
                entries = tuple(
                    PredictionEntry(item_id=e["item_id"], score=float(e["score"]))
                    for e in record["entries"]
                )
            except (KeyError, TypeError) as exc:
                raise MalformedLineError(line_no, f"bad prediction record: {exc}") from exc
            predictions.append(
                RankedPredictions(session_id=session_id, entries=entries, k=k)
            )
    return predictions


def write_predictions(
    predictions: Iterable[RankedPredictions], path: Path | str
) -> None:
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        for p in predictions:
            record = {
                "session_id": p.session_id,
                "k": p.k,
                "entries": [
                    {"item_id": e.item_id, "score": e.score} for e in p.entries
                ],
            }
            fh.write(json.dumps(record) + "\n")
    tmp.replace(path)
