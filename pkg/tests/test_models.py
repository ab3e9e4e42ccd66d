"""Popularity, Markov, and session-kNN predictors plus the prediction file format."""

from __future__ import annotations

import json

import pytest

from interarec.errors import (
    DuplicateItemError,
    EmptyTrainingSetError,
    MalformedLineError,
    UnsortedScoresError,
    UntrainedModelError,
)
from interarec.models import (
    MarkovModel,
    PopularityModel,
    SessionKnnModel,
    predict_topk,
    read_predictions,
    train_model,
    training_sequence,
    write_predictions,
)
from interarec.rerank import PredictionEntry, RankedPredictions
from interarec.sessions import session_from_items


def sessions_of(*sequences):
    """Sessions whose last item is the ground truth, mirroring the loader."""
    return [
        session_from_items(f"s{i}", seq[:-1], ground_truth_next=seq[-1])
        for i, seq in enumerate(sequences)
    ]


def test_training_sequence_includes_ground_truth():
    session = session_from_items("s", ["a", "b"], ground_truth_next="c")
    assert training_sequence(session) == ("a", "b", "c")


def test_popularity_ranks_by_frequency():
    model = PopularityModel().fit(sessions_of(["a", "b"], ["a", "c"]))
    top = model.predict_topk(["anything"], k=1)
    assert top.entries[0].item_id == "a"


def test_popularity_ignores_prefix():
    model = PopularityModel().fit(sessions_of(["a", "b"], ["a", "c"]))
    assert model.predict_topk(["b"], k=3) == model.predict_topk(["zzz"], k=3)


def test_markov_follows_transition_counts():
    model = MarkovModel().fit(sessions_of(["a", "b"], ["a", "b"], ["a", "c"]))
    top = model.predict_topk(["x", "a"], k=2)
    assert [e.item_id for e in top.entries][:2] == ["b", "c"]
    # oracle: out of "a" the observed frequencies are b: 2/3, c: 1/3
    assert top.entries[0].score == pytest.approx(2 / 3)
    assert top.entries[1].score == pytest.approx(1 / 3)


def test_markov_backoff_scores_strictly_below_successors():
    model = MarkovModel().fit(sessions_of(["a", "b"], ["a", "b"], ["c", "d"]))
    top = model.predict_topk(["a"], k=4)
    ids = [e.item_id for e in top.entries]
    assert ids[0] == "b"
    successor_scores = {e.item_id: e.score for e in top.entries}
    backoff = [e.score for e in top.entries if e.item_id != "b"]
    assert backoff
    assert max(backoff) < successor_scores["b"]


def test_markov_unseen_last_item_backs_off_to_popularity():
    model = MarkovModel().fit(sessions_of(["a", "b"], ["a", "b"]))
    top = model.predict_topk(["never-seen"], k=2)
    assert [e.item_id for e in top.entries] == ["a", "b"]


def test_sknn_votes_from_similar_sessions():
    train = sessions_of(["a", "b", "c"], ["a", "b", "d"], ["x", "y", "z"])
    model = SessionKnnModel().fit(train)
    top = model.predict_topk(["a", "b"], k=4)
    ids = [e.item_id for e in top.entries]
    # both neighbors vote for their own items; same-score ties break by id;
    # the dissimilar session contributes nothing
    assert ids == ["a", "b", "c", "d"]
    assert not {"x", "y", "z"} & set(ids)


def test_models_require_training_data():
    for kind in ("popularity", "markov", "sknn"):
        with pytest.raises(EmptyTrainingSetError):
            train_model(kind, [])
    with pytest.raises(UntrainedModelError):
        PopularityModel().predict_topk(["a"], k=1)
    with pytest.raises(UntrainedModelError):
        MarkovModel().predict_topk(["a"], k=1)
    with pytest.raises(UntrainedModelError):
        SessionKnnModel().predict_topk(["a"], k=1)


def test_truncation_returns_all_known_items_without_padding():
    model = PopularityModel().fit(sessions_of(["a", "b"], ["a", "c"]))
    top = model.predict_topk(["a"], k=50)
    assert len(top.entries) == 3
    assert top.k == 50


def test_training_is_deterministic():
    data = sessions_of(["a", "b", "c"], ["b", "c", "a"], ["c", "a", "b"])
    for kind in ("popularity", "markov", "sknn"):
        first = train_model(kind, data).predict_topk(["a", "b"], k=3)
        second = train_model(kind, data).predict_topk(["a", "b"], k=3)
        assert first == second


def test_prediction_output_satisfies_invariants():
    data = sessions_of(["a", "b", "c"], ["b", "a", "c"])
    for kind in ("popularity", "markov", "sknn"):
        model = train_model(kind, data)
        top = predict_topk(model, ["a"], k=2)
        scores = [e.score for e in top.entries]
        assert scores == sorted(scores, reverse=True)
        assert len(set(top.item_ids)) == len(top.entries)
        assert len(top.entries) <= 2


def test_prediction_file_round_trip(tmp_path):
    rows = [
        RankedPredictions(
            session_id="s1",
            entries=(PredictionEntry("b", 0.9), PredictionEntry("a", 0.5)),
            k=50,
        )
    ]
    path = tmp_path / "predictions.jsonl"
    write_predictions(rows, path)
    assert read_predictions(path) == rows


def test_prediction_file_rejects_unsorted_scores(tmp_path):
    path = tmp_path / "bad.jsonl"
    row = {
        "session_id": "s1",
        "k": 50,
        "entries": [{"item_id": "a", "score": 0.5}, {"item_id": "b", "score": 0.9}],
    }
    path.write_text(json.dumps(row) + "\n")
    with pytest.raises(UnsortedScoresError):
        read_predictions(path)


def test_prediction_file_rejects_duplicates(tmp_path):
    path = tmp_path / "dup.jsonl"
    row = {
        "session_id": "s1",
        "k": 50,
        "entries": [{"item_id": "a", "score": 0.9}, {"item_id": "a", "score": 0.5}],
    }
    path.write_text(json.dumps(row) + "\n")
    with pytest.raises(DuplicateItemError):
        read_predictions(path)


def test_prediction_file_reports_malformed_lines(tmp_path):
    path = tmp_path / "broken.jsonl"
    path.write_text('{"session_id": "s1", "k": 1, "entries": []}\n{oops\n')
    with pytest.raises(MalformedLineError) as err:
        read_predictions(path)
    assert err.value.line_no == 2
