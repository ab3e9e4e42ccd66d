"""Ranking metrics and the experiment harness."""

from __future__ import annotations

import numpy as np
import pytest

from interarec.catalog import CatalogSnapshot
from interarec.errors import EmptyTestSplitError, MissingSummariesError
from interarec.evaluate import (
    EvalConfig,
    dataset_digest,
    mrr_at_k,
    recall_at_k,
    run_experiment,
    sweep_session_window,
    sweep_training_fraction,
    write_report,
    read_report_rows,
)
from interarec.models import write_predictions
from interarec.rerank import PredictionEntry, RankedPredictions
from interarec.sessions import session_from_items
from interarec.summarize import KeywordSummary

from conftest import make_item


def ranked(item_ids, k=50, session_id="s"):
    entries = tuple(
        PredictionEntry(item_id, 1.0 - pos * 0.01) for pos, item_id in enumerate(item_ids)
    )
    return RankedPredictions(session_id=session_id, entries=entries, k=k)


def test_recall_counts_containment_within_cutoff():
    preds = ranked(["A", "B", "C"])
    assert recall_at_k(preds, "B", 2) == 1
    assert recall_at_k(preds, "B", 1) == 0
    assert recall_at_k(ranked([]), "B", 5) == 0


def test_mrr_is_inverse_rank():
    preds = ranked(["A", "B", "C"])
    assert mrr_at_k(preds, "B", 3) == pytest.approx(0.5)
    assert mrr_at_k(preds, "A", 3) == 1.0
    assert mrr_at_k(preds, "Z", 3) == 0.0


def test_metrics_reject_k_beyond_list_capacity():
    preds = ranked(["A", "B"], k=10)
    with pytest.raises(ValueError):
        recall_at_k(preds, "A", 11)
    with pytest.raises(ValueError):
        mrr_at_k(preds, "A", 11)


# ten sessions with the truth placed at a known rank (None = absent)
TEN_SESSION_FIXTURE = [
    (["T", "x1", "x2", "x3", "x4", "x5"], "T"),   # rank 1
    (["x1", "T", "x2", "x3", "x4", "x5"], "T"),   # rank 2
    (["x1", "x2", "T", "x3", "x4", "x5"], "T"),   # rank 3
    (["x1", "x2", "x3", "T", "x4", "x5"], "T"),   # rank 4
    (["x1", "x2", "x3", "x4", "T", "x5"], "T"),   # rank 5
    (["x1", "x2", "x3", "x4", "x5", "T"], "T"),   # rank 6, outside k=5
    (["x1", "x2", "x3", "x4", "x5", "x6"], "T"),  # absent
    (["T", "x1", "x2", "x3", "x4", "x5"], "T"),   # rank 1
    (["x1", "T", "x2", "x3", "x4", "x5"], "T"),   # rank 2
    ([], "T"),                                    # empty list
]


def test_metrics_match_hand_computed_fixture():
    k = 5
    recalls = []
    mrrs = []
    for item_ids, truth in TEN_SESSION_FIXTURE:
        preds = ranked(item_ids, k=6)
        recalls.append(recall_at_k(preds, truth, k))
        mrrs.append(mrr_at_k(preds, truth, k))
    assert recalls == [1, 1, 1, 1, 1, 0, 0, 1, 1, 0]
    assert mrrs == [1.0, 1 / 2, 1 / 3, 1 / 4, 1 / 5, 0.0, 0.0, 1.0, 1 / 2, 0.0]
    recall_mean = sum(recalls) / len(recalls)
    mrr_mean = sum(mrrs) / len(mrrs)
    assert recall_mean == 0.7
    assert mrr_mean == sum([1.0, 0.5, 1 / 3, 0.25, 0.2, 0.0, 0.0, 1.0, 0.5, 0.0]) / 10
    assert mrr_mean <= recall_mean


def test_mrr_never_exceeds_recall_and_recall_grows_with_k():
    rng = np.random.default_rng(41)
    universe = [f"i{j}" for j in range(30)]
    for _ in range(100):
        size = int(rng.integers(0, 20))
        item_ids = list(rng.choice(universe, size=size, replace=False))
        preds = ranked(item_ids, k=20)
        truth = str(rng.choice(universe))
        last_recall = 0
        for k in range(1, 21):
            recall = recall_at_k(preds, truth, k)
            assert mrr_at_k(preds, truth, k) <= recall
            assert recall >= last_recall
            last_recall = recall


def dataset(n=20, seed=5):
    rng = np.random.default_rng(seed)
    universe = [f"i{j}" for j in range(12)]
    sessions = []
    for idx in range(n):
        length = int(rng.integers(3, 6))
        walk = [str(x) for x in rng.choice(universe, size=length)]
        sessions.append(
            session_from_items(f"s{idx}", walk[:-1], ground_truth_next=walk[-1])
        )
    return sessions


def test_experiment_is_deterministic():
    data = dataset()
    config = EvalConfig(k=5, seed=3)
    first = run_experiment(config, data, ["popularity", "markov"])
    second = run_experiment(config, data, ["popularity", "markov"])
    assert first.to_jsonl() == second.to_jsonl()
    assert first.dataset_digest == dataset_digest(data)


def test_experiment_requires_nonempty_test_split():
    with pytest.raises(EmptyTestSplitError):
        run_experiment(EvalConfig(k=5), [], ["popularity"])


def test_rerank_requires_summaries():
    with pytest.raises(MissingSummariesError):
        run_experiment(EvalConfig(k=5, rerank=True), dataset(), ["popularity"])


def test_experiment_reads_prediction_files(tmp_path):
    data = dataset(n=10)
    config = EvalConfig(k=5, seed=3)
    # an external model that "predicts" every session's truth at rank 1
    rows = [
        RankedPredictions(
            session_id=s.session_id,
            entries=(PredictionEntry(s.ground_truth_next, 1.0),),
            k=5,
        )
        for s in data[:5]  # half the sessions are missing from the file
    ]
    path = tmp_path / "external.jsonl"
    write_predictions(rows, path)
    report = run_experiment(config, data, [path])
    row = report.rows[0]
    assert row.model == path.stem
    assert 0.0 <= row.mrr <= row.recall <= 1.0


def test_rerank_rows_keep_recall_fixed():
    data = dataset(n=30, seed=9)
    catalog = CatalogSnapshot(
        items=tuple(make_item(f"i{j}", "5", title=f"token{j} thing") for j in range(12))
    )
    summaries = {
        s.session_id: KeywordSummary.from_values(
            {"Product Characteristics": f"token{j} thing"}
        )
        for j, s in enumerate(data)
    }
    config = EvalConfig(k=5, rerank=True, seed=3)
    report = run_experiment(
        config,
        data,
        ["popularity"],
        catalog=catalog,
        summaries=lambda session, kind: summaries[session.session_id],
    )
    base = next(r for r in report.rows if not r.reranked)
    reranked = next(r for r in report.rows if r.reranked)
    assert reranked.recall == base.recall
    assert base.n == reranked.n


def test_sweep_training_fraction_shapes():
    data = dataset(n=25, seed=6)
    config = EvalConfig(k=5, seed=2)
    report = sweep_training_fraction(config, [0.25, 0.5, 1.0], data, ["popularity", "markov"])
    assert len(report.rows) == 6
    by_model = {}
    for row in report.rows:
        by_model.setdefault(row.model, []).append(row)
    for rows in by_model.values():
        assert [r.config["training_fraction"] for r in rows] == [0.25, 0.5, 1.0]
        assert len({r.n for r in rows}) == 1


def test_sweep_session_window_shapes():
    data = dataset(n=25, seed=6)
    config = EvalConfig(k=5, seed=2)
    report = sweep_session_window(config, [1, 2, None], data, ["markov"])
    assert [r.config["session_window"] for r in report.rows] == [1, 2, None]


def test_dataset_digest_tracks_content():
    data = dataset(n=10, seed=1)
    other = dataset(n=10, seed=2)
    assert dataset_digest(data) == dataset_digest(data)
    assert dataset_digest(data) != dataset_digest(other)


def test_report_file_append_and_read(tmp_path):
    data = dataset(n=10)
    config = EvalConfig(k=5)
    report = run_experiment(config, data, ["popularity"])
    path = tmp_path / "report.jsonl"
    write_report(report, path)
    write_report(report, path)
    rows = read_report_rows(path)
    assert len(rows) == 2
    assert rows[0]["model"] == "popularity"
    assert rows[0]["dataset_digest"] == report.dataset_digest
