"""Command-line entry points: serve, import-catalog, summarize, eval, estimate."""

from __future__ import annotations

import csv
import dataclasses
import json
from pathlib import Path

import click

from .catalog import read_catalog_records
from .choice import estimate_mnl, read_transactions_file, write_mnl_params
from .evaluate import EvalConfig, EvalReport, run_experiment, write_report
from .service import RecommendationService, create_app
from .sessions import load_session_dataset
from .summarize import (
    LiveSummarizerBackend,
    MockSummarizerBackend,
    build_prompt,
    summarize_session,
)


def _make_backend(name: str, fixtures: str | None):
    if name == "mock":
        return MockSummarizerBackend(fixtures)
    if name == "live":
        return LiveSummarizerBackend()
    return None


@click.group()
def main():
    """Session-aware recommendations from screenshot summaries."""


@main.command()
@click.option("--port", default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--data-dir", default=None, help="Defaults to INTERAREC_DATA_DIR.")
@click.option(
    "--backend",
    type=click.Choice(["mock", "live", "none"]),
    default="none",
    show_default=True,
)
@click.option("--fixtures", default=None, help="Fixture root for the mock backend.")
@click.option("--ui-dir", default=None, help="Static assets to mount under /ui.")
def serve(port, host, data_dir, backend, fixtures, ui_dir):
    """Run the HTTP service."""
    import uvicorn

    service = RecommendationService(data_dir, backend=_make_backend(backend, fixtures))
    app = create_app(service, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port)


@main.command("import-catalog")
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--data-dir", default=None, help="Defaults to INTERAREC_DATA_DIR.")
def import_catalog(file, data_dir):
    """Import a line-delimited JSON catalog file into the store."""
    service = RecommendationService(data_dir)
    snapshot = service.catalog_store.import_records(read_catalog_records(file))
    click.echo(f"imported {len(snapshot)} items (catalog version {snapshot.version})")


@main.command()
@click.option("--session", "session_id", required=True)
@click.option(
    "--backend",
    "backend_name",
    type=click.Choice(["mock", "live"]),
    default="mock",
    show_default=True,
)
@click.option("--data-dir", default=None, help="Defaults to INTERAREC_DATA_DIR.")
@click.option("--fixtures", default=None, help="Fixture root for the mock backend.")
@click.option("--force", is_flag=True, help="Recompute even on a cache hit.")
def summarize(session_id, backend_name, data_dir, fixtures, force):
    """Summarize a stored session's screenshots and print the result."""
    service = RecommendationService(
        data_dir, backend=_make_backend(backend_name, fixtures)
    )
    summary, key = service.summary_for(session_id, force=force)
    if summary is None:
        click.echo(json.dumps({"session_id": session_id, "summary": None}))
        return
    click.echo(
        json.dumps(
            {
                "session_id": session_id,
                "cache_key": key,
                "entries": summary.entries,
                "extras": summary.extras,
                "source_batch_count": summary.source_batch_count,
            },
            indent=2,
            ensure_ascii=False,
        )
    )


def _summary_source(fixtures: str, batch_size: int = 10):
    backend = MockSummarizerBackend(fixtures)
    prompt = build_prompt()

    def source(session, kind):
        return summarize_session(session, backend, prompt, batch_size, kind=kind)

    return source


def _render_table(rows: list[dict], sweep_param: str | None) -> str:
    headers = ["model", "reranked"]
    if sweep_param:
        headers.append(sweep_param)
    headers += ["recall", "mrr", "n"]
    table = [headers]
    for row in rows:
        line = [row["model"], "yes" if row["reranked"] else "no"]
        if sweep_param:
            line.append(str(row["config"][sweep_param]))
        line += [f"{row['recall']:.4f}", f"{row['mrr']:.4f}", str(row["n"])]
        table.append(line)
    widths = [max(len(r[i]) for r in table) for i in range(len(headers))]
    out = []
    for i, row in enumerate(table):
        out.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
        if i == 0:
            out.append("  ".join("-" * w for w in widths))
    return "\n".join(out)


@main.command("eval")
@click.option(
    "--config",
    "config_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False),
)
@click.option("--out", default=None, help="Report file (line-delimited JSON).")
@click.option("--csv", "csv_path", default=None, help="Plot data as CSV.")
def eval_command(config_path, out, csv_path):
    """Run an experiment described by a JSON config file.

    The config names the dataset, models, and metric settings, plus an
    optional sweep: {"param": "training_fraction", "values": [...]}
    (session_window sweeps work the same way). Re-ranking needs "catalog"
    and "fixtures" entries.
    """
    spec = json.loads(Path(config_path).read_text(encoding="utf-8"))
    dataset = load_session_dataset(spec["dataset"]).sessions
    models = spec.get("models", ["popularity", "markov", "sknn"])
    config = EvalConfig(
        k=spec.get("k", 50),
        rerank=spec.get("rerank", False),
        training_fraction=spec.get("training_fraction", 1.0),
        session_window=spec.get("session_window"),
        screenshot_kind=spec.get("screenshot_kind", "full_page_viewport"),
        seed=spec.get("seed", 0),
    )
    kwargs = {}
    if config.rerank:
        from .catalog import load_catalog_file

        kwargs["catalog"] = load_catalog_file(spec["catalog"])
        kwargs["summaries"] = _summary_source(spec["fixtures"])

    sweep = spec.get("sweep")
    rows: list = []
    digest = ""
    if sweep:
        for value in sweep["values"]:
            report = run_experiment(
                dataclasses.replace(config, **{sweep["param"]: value}),
                dataset,
                models,
                **kwargs,
            )
            rows.extend(report.rows)
            digest = report.dataset_digest
    else:
        report = run_experiment(config, dataset, models, **kwargs)
        rows = list(report.rows)
        digest = report.dataset_digest
    merged = EvalReport(rows=tuple(rows), dataset_digest=digest, seed=config.seed)

    if out:
        write_report(merged, out)
        click.echo(f"report appended to {out}")
    dict_rows = [r.to_dict() for r in merged.rows]
    click.echo(_render_table(dict_rows, sweep["param"] if sweep else None))
    if csv_path:
        fields = ["model", "reranked", "recall", "mrr", "n"]
        sweep_param = sweep["param"] if sweep else None
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(fields + ([sweep_param] if sweep_param else []))
            for row in dict_rows:
                line = [row[f] for f in fields]
                if sweep_param:
                    line.append(row["config"][sweep_param])
                writer.writerow(line)
        click.echo(f"plot data written to {csv_path}")


@main.command()
@click.option(
    "--transactions",
    required=True,
    type=click.Path(exists=True, dir_okay=False),
    help="Line-delimited JSON {offered, chosen} records.",
)
@click.option("--out", required=True, help="Where to write the parameter JSON.")
def estimate(transactions, out):
    """Estimate MNL weights from a transaction file."""
    params = estimate_mnl(read_transactions_file(transactions))
    write_mnl_params(params, out)
    click.echo(f"estimated {len(params.v)} weights (v0={params.v0}) -> {out}")
