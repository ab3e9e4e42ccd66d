"""Pipeline orchestration and the HTTP service around it.

The service owns on-disk state (catalog, sessions, cached summaries,
responses) under one data directory and drives the full flow: ingest
events, summarize screenshots through a pluggable backend with caching,
decompose and validate constraints, then answer with either a
revenue-optimal assortment or a re-ranked top-k list.
"""

from __future__ import annotations

import base64
import hashlib
import json
import threading
import time
import uuid
from dataclasses import dataclass
from datetime import datetime, timezone
from decimal import Decimal
from pathlib import Path
from typing import Mapping, Sequence

from .catalog import CatalogSnapshot, CatalogStore
from .choice import (
    FeasibleSpec,
    MnlParameters,
    optimize_assortment,
    read_mnl_params,
    write_mnl_params,
)
from .constraints import (
    ConstraintSet,
    color_vocabulary,
    decompose,
    validate,
)
from .errors import (
    BackendUnavailableError,
    NoModelConfiguredError,
    SessionNotFoundError,
    ValidationRejectedError,
)
from .evaluate import EvalConfig, run_experiment, write_report
from .rerank import HashEmbeddingProvider, rerank_topk
from .sessions import (
    DEFAULT_KIND,
    InteractionEvent,
    ScreenshotRef,
    Session,
    append_event,
    load_session_dataset,
)
from .summarize import (
    KeywordSummary,
    MockSummarizerBackend,
    PromptSpec,
    build_prompt,
    summarize_session,
)

import os


def cache_key(screenshot_keys: Sequence[str], prompt_digest: str) -> str:
    """Stable digest over the sorted screenshot keys and the prompt digest."""
    joined = ",".join(sorted(screenshot_keys)) + "\n" + prompt_digest
    return hashlib.sha256(joined.encode("utf-8")).hexdigest()


def summary_digest(summary: KeywordSummary) -> str:
    payload = {"entries": summary.entries, "extras": summary.extras}
    return hashlib.sha256(
        json.dumps(payload, sort_keys=True).encode("utf-8")
    ).hexdigest()


def constraints_to_dict(constraints: ConstraintSet) -> dict:
    return {
        "lowest_price": None
        if constraints.lowest_price is None
        else float(constraints.lowest_price),
        "highest_price": None
        if constraints.highest_price is None
        else float(constraints.highest_price),
        "color": constraints.color,
    }


@dataclass(frozen=True)
class RecommendedItem:
    item_id: str
    title: str | None
    price: float
    score: float

    def to_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "title": self.title,
            "price": self.price,
            "score": self.score,
        }


@dataclass(frozen=True)
class RecommendationResponse:
    """What the pipeline answers: items plus the context that produced them."""

    session_id: str
    mode: str
    items: tuple[RecommendedItem, ...]
    constraints_used: ConstraintSet
    summary_digest: str
    generated_at: str

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "mode": self.mode,
            "items": [item.to_dict() for item in self.items],
            "constraints_used": constraints_to_dict(self.constraints_used),
            "summary_digest": self.summary_digest,
            "generated_at": self.generated_at,
        }


class _CountingBackend:
    """Delegates to the real backend while counting calls (cache observability)."""

    def __init__(self, inner, service: "RecommendationService"):
        self._inner = inner
        self._service = service
        self.identity = inner.identity
        self.max_in_flight = getattr(inner, "max_in_flight", 1)

    def complete(self, prompt, batch):
        self._service.summarizer_calls += 1
        return self._inner.complete(prompt, batch)


class RecommendationService:
    """Single-process pipeline owner over one data directory.

    Concurrent requests are safe across sessions; per-session operations
    serialize on a session lock.
    """

    def __init__(
        self,
        data_dir: Path | str | None = None,
        *,
        backend=None,
        embedder=None,
        model=None,
        mnl_params: MnlParameters | None = None,
        prompt: PromptSpec | None = None,
        batch_size: int = 10,
        clock=time.time,
    ):
        root = data_dir or os.environ.get("INTERAREC_DATA_DIR")
        if not root:
            raise ValueError(
                "a data directory is required (argument or INTERAREC_DATA_DIR)"
            )
        self.root = Path(root)
        for sub in ("sessions", "summaries", "responses", "screenshots", "reports"):
            (self.root / sub).mkdir(parents=True, exist_ok=True)
        self.catalog_store = CatalogStore(self.root / "catalog")
        self.backend = backend
        self.embedder = embedder or HashEmbeddingProvider()
        self.model = model
        self.prompt = prompt or build_prompt()
        self.batch_size = batch_size
        self.clock = clock
        self.summarizer_calls = 0
        self._prompt_digest = hashlib.sha256(
            self.prompt.instruction_text.encode("utf-8")
        ).hexdigest()
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()
        params_path = self.root / "mnl_params.json"
        if mnl_params is not None:
            self._mnl_params = mnl_params
        elif params_path.exists():
            self._mnl_params = read_mnl_params(params_path)
        else:
            self._mnl_params = None

    # --- small helpers -----------------------------------------------------

    def _lock(self, session_id: str) -> threading.Lock:
        with self._locks_guard:
            lock = self._locks.get(session_id)
            if lock is None:
                lock = self._locks[session_id] = threading.Lock()
            return lock

    def _session_path(self, session_id: str) -> Path:
        digest = hashlib.sha256(session_id.encode("utf-8")).hexdigest()[:32]
        return self.root / "sessions" / f"{digest}.json"

    def catalog(self) -> CatalogSnapshot:
        snapshot = self.catalog_store.current()
        return snapshot if snapshot is not None else CatalogSnapshot(items=())

    def set_mnl_params(self, params: MnlParameters) -> None:
        self._mnl_params = params
        write_mnl_params(params, self.root / "mnl_params.json")

    def mnl_params(self) -> MnlParameters:
        if self._mnl_params is not None:
            missing = [
                i.item_id for i in self.catalog() if i.item_id not in self._mnl_params.v
            ]
            if not missing:
                return self._mnl_params
            # items added after estimation default to a neutral weight
            v = dict(self._mnl_params.v)
            v.update({i: 0.5 for i in missing})
            return MnlParameters(v=v, v0=self._mnl_params.v0)
        return MnlParameters(v={i.item_id: 0.5 for i in self.catalog()})

    def configure_model(self, model) -> None:
        self.model = model

    # --- sessions ------------------------------------------------------------

    def _store_session(self, session: Session, overrides: dict | None) -> None:
        record = {
            "session_id": session.session_id,
            "events": [
                {
                    "item_id": e.item_id,
                    "timestamp": e.timestamp,
                    "screenshot": None
                    if e.screenshot is None
                    else {"key": e.screenshot.key, "kind": e.screenshot.kind},
                }
                for e in session.events
            ],
            "overrides": overrides,
        }
        path = self._session_path(session.session_id)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(record, ensure_ascii=False), encoding="utf-8")
        tmp.replace(path)

    def _load_session(self, session_id: str) -> tuple[Session, dict | None]:
        path = self._session_path(session_id)
        if not path.exists():
            raise SessionNotFoundError(f"no session {session_id!r}")
        record = json.loads(path.read_text(encoding="utf-8"))
        events = tuple(
            InteractionEvent(
                item_id=e["item_id"],
                timestamp=e["timestamp"],
                screenshot=None
                if e.get("screenshot") is None
                else ScreenshotRef(
                    key=e["screenshot"]["key"], kind=e["screenshot"]["kind"]
                ),
            )
            for e in record["events"]
        )
        session = Session(session_id=record["session_id"], events=events)
        return session, record.get("overrides")

    def create_session(self, session_id: str | None = None) -> str:
        session_id = session_id or uuid.uuid4().hex
        with self._lock(session_id):
            if not self._session_path(session_id).exists():
                self._store_session(Session(session_id=session_id), None)
        return session_id

    def get_session(self, session_id: str) -> Session:
        session, _ = self._load_session(session_id)
        return session

    def append_session_event(
        self,
        session_id: str,
        item_id: str,
        *,
        timestamp: int | None = None,
        screenshot_key: str | None = None,
        screenshot_kind: str = DEFAULT_KIND,
        image_base64: str | None = None,
    ) -> Session:
        """Append one interaction; optionally store an uploaded capture."""
        with self._lock(session_id):
            session, overrides = self._load_session(session_id)
            if timestamp is None:
                timestamp = int(self.clock() * 1000)
            ref = None
            if screenshot_key:
                if "/" in screenshot_key or "\\" in screenshot_key or ".." in screenshot_key:
                    raise ValueError(f"unsafe screenshot key {screenshot_key!r}")
                ref = ScreenshotRef(key=screenshot_key, kind=screenshot_kind)
                if image_base64:
                    data = base64.b64decode(image_base64)
                    (self.root / "screenshots" / f"{screenshot_key}.png").write_bytes(
                        data
                    )
            session = append_event(
                session,
                InteractionEvent(item_id=item_id, timestamp=timestamp, screenshot=ref),
            )
            self._store_session(session, overrides)
            return session

    # --- summarization with caching ---------------------------------------------

    def summary_for(
        self, session_id: str, *, kind: str | None = None, force: bool = False
    ) -> tuple[KeywordSummary | None, str | None]:
        """The session's cached keyword summary, computing it when needed.

        Returns (None, None) for sessions with no screenshots. Cache hits
        never touch the backend.
        """
        session, _ = self._load_session(session_id)
        refs = session.screenshots_of_kind(kind)
        if not refs:
            return None, None
        key = cache_key([r.key for r in refs], self._prompt_digest)
        path = self.root / "summaries" / f"{key}.json"
        if path.exists() and not force:
            record = json.loads(path.read_text(encoding="utf-8"))
            return (
                KeywordSummary(
                    entries=record["entries"],
                    extras=record.get("extras", {}),
                    source_batch_count=record.get("source_batch_count", 1),
                    raw_texts=tuple(record.get("raw_texts", ())),
                ),
                key,
            )
        if self.backend is None:
            raise BackendUnavailableError("no summarizer backend configured")
        summary = summarize_session(
            session,
            _CountingBackend(self.backend, self),
            self.prompt,
            self.batch_size,
            kind=kind,
        )
        record = {
            "entries": summary.entries,
            "extras": summary.extras,
            "source_batch_count": summary.source_batch_count,
            "raw_texts": list(summary.raw_texts),
        }
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(record, ensure_ascii=False), encoding="utf-8")
        tmp.replace(path)
        return summary, key

    # --- constraints ---------------------------------------------------------------

    def _decomposed(self, session_id: str) -> ConstraintSet:
        summary, _ = self.summary_for(session_id)
        if summary is None:
            return ConstraintSet()
        return decompose(summary, color_vocabulary(self.catalog()))

    @staticmethod
    def _apply_overrides(base: ConstraintSet, overrides: Mapping | None) -> ConstraintSet:
        if not overrides:
            return base
        def money(key, current):
            if key not in overrides:
                return current
            value = overrides[key]
            return None if value is None else Decimal(str(value))

        color = base.color
        if "color" in overrides:
            raw = overrides["color"]
            color = str(raw).strip().lower() if raw else None
        return ConstraintSet(
            lowest_price=money("lowest_price", base.lowest_price),
            highest_price=money("highest_price", base.highest_price),
            color=color,
        )

    def set_constraint_overrides(self, session_id: str, overrides: Mapping) -> dict:
        """Validate and persist per-field overrides; rejected edits store nothing."""
        with self._lock(session_id):
            session, _ = self._load_session(session_id)
            merged = self._apply_overrides(self._decomposed(session_id), overrides)
            report = validate(merged, self.catalog())
            if not report.ok:
                raise ValidationRejectedError(report)
            self._store_session(session, dict(overrides))
            return report.to_dict()

    # --- orchestration ----------------------------------------------------------------

    def orchestrate(
        self,
        session_id: str,
        mode: str = "assortment",
        k: int | None = None,
        overrides: Mapping | None = None,
    ) -> RecommendationResponse:
        """Run the whole pipeline for one session and persist the response."""
        if mode not in ("assortment", "rerank"):
            raise ValueError(f"mode must be assortment or rerank, got {mode!r}")
        with self._lock(session_id):
            session, stored_overrides = self._load_session(session_id)
            summary, _ = self.summary_for(session_id)
            catalog = self.catalog()
            if summary is not None:
                constraints = decompose(summary, color_vocabulary(catalog))
                digest = summary_digest(summary)
            else:
                constraints = ConstraintSet()
                digest = ""
            constraints = self._apply_overrides(constraints, stored_overrides)
            constraints = self._apply_overrides(constraints, overrides)
            report = validate(constraints, catalog)
            if not report.ok:
                raise ValidationRejectedError(report)

            if mode == "assortment":
                items = self._assortment_items(catalog, constraints, k)
            else:
                items = self._reranked_items(session, summary, catalog, k)

            response = RecommendationResponse(
                session_id=session_id,
                mode=mode,
                items=items,
                constraints_used=constraints,
                summary_digest=digest,
                generated_at=datetime.fromtimestamp(
                    self.clock(), tz=timezone.utc
                ).isoformat(),
            )
            with open(
                self.root / "responses" / f"{self._session_path(session_id).stem}.jsonl",
                "a",
                encoding="utf-8",
            ) as fh:
                fh.write(json.dumps(response.to_dict(), ensure_ascii=False) + "\n")
            return response

    def _assortment_items(
        self, catalog: CatalogSnapshot, constraints: ConstraintSet, k: int | None
    ) -> tuple[RecommendedItem, ...]:
        params = self.mnl_params()
        spec = FeasibleSpec(constraints=constraints, max_cardinality=k)
        assortment = optimize_assortment(params, catalog, spec)
        if not assortment.items:
            return ()
        denom = params.v0 + sum(params.v[i] for i in assortment.items)
        total = assortment.revenue
        rows = []
        for item_id in assortment.items:
            item = catalog.get(item_id)
            contribution = float(item.price) * params.v[item_id] / denom
            share = contribution / total if total > 0 else 0.0
            rows.append(
                RecommendedItem(
                    item_id=item_id,
                    title=item.title,
                    price=float(item.price),
                    score=share,
                )
            )
        rows.sort(key=lambda r: (-r.score, r.item_id))
        return tuple(rows)

    def _reranked_items(
        self,
        session: Session,
        summary: KeywordSummary | None,
        catalog: CatalogSnapshot,
        k: int | None,
    ) -> tuple[RecommendedItem, ...]:
        if self.model is None:
            raise NoModelConfiguredError("rerank mode needs a configured session model")
        k = k or 50
        predictions = self.model.predict_topk(session.items, k, session.session_id)
        if summary is not None:
            predictions = rerank_topk(predictions, summary, catalog, self.embedder)
        rows = []
        for entry in predictions.entries:
            item = catalog.get(entry.item_id)
            rows.append(
                RecommendedItem(
                    item_id=entry.item_id,
                    title=item.title if item else None,
                    price=float(item.price) if item else 0.0,
                    score=entry.score,
                )
            )
        return tuple(rows)

    # --- experiments -----------------------------------------------------------------

    def run_experiment_from_payload(self, payload: Mapping) -> Path:
        """POST /experiments body: EvalConfig fields plus dataset/fixture paths."""
        config = EvalConfig(
            k=payload.get("k", 50),
            rerank=payload.get("rerank", False),
            training_fraction=payload.get("training_fraction", 1.0),
            session_window=payload.get("session_window"),
            screenshot_kind=payload.get("screenshot_kind", DEFAULT_KIND),
            seed=payload.get("seed", 0),
        )
        dataset = load_session_dataset(payload["dataset"]).sessions
        models = payload.get("models", ["popularity", "markov", "sknn"])
        kwargs = {}
        if config.rerank:
            backend = MockSummarizerBackend(payload["fixtures"])
            prompt = self.prompt

            def source(session, kind):
                return summarize_session(
                    session, backend, prompt, self.batch_size, kind=kind
                )

            kwargs = {"catalog": self.catalog(), "summaries": source}
        report = run_experiment(config, dataset, models, **kwargs)
        path = self.root / "reports" / f"{config.digest()}.jsonl"
        return write_report(report, path)


# --- HTTP app -----------------------------------------------------------------------

def create_app(service: RecommendationService, ui_dir: Path | str | None = None):
    """FastAPI wrapper exposing the service's HTTP contract."""
    from fastapi import Body, FastAPI, Query
    from fastapi.responses import JSONResponse

    app = FastAPI(title="interarec")

    def _reject(exc: ValidationRejectedError) -> JSONResponse:
        return JSONResponse(status_code=422, content={"detail": exc.report.to_dict()})

    @app.exception_handler(ValidationRejectedError)
    async def _on_rejected(request, exc):
        return _reject(exc)

    @app.exception_handler(SessionNotFoundError)
    async def _on_missing(request, exc):
        return JSONResponse(status_code=404, content={"detail": str(exc)})

    @app.exception_handler(NoModelConfiguredError)
    async def _on_no_model(request, exc):
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    @app.exception_handler(BackendUnavailableError)
    async def _on_backend(request, exc):
        return JSONResponse(status_code=502, content={"detail": str(exc)})

    from .errors import OutOfOrderTimestampError

    @app.exception_handler(OutOfOrderTimestampError)
    async def _on_order(request, exc):
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/sessions", status_code=201)
    def create_session(payload: dict = Body(default={})):
        session_id = service.create_session(payload.get("session_id"))
        return {"session_id": session_id}

    @app.post("/sessions/{session_id}/events")
    def post_event(session_id: str, payload: dict = Body(...)):
        session = service.append_session_event(
            session_id,
            payload["item_id"],
            timestamp=payload.get("timestamp"),
            screenshot_key=payload.get("screenshot_key"),
            screenshot_kind=payload.get("screenshot_kind", DEFAULT_KIND),
            image_base64=payload.get("image_base64"),
        )
        return {"session_id": session_id, "events": len(session.events)}

    @app.get("/sessions/{session_id}/summary")
    def get_summary(session_id: str):
        summary, key = service.summary_for(session_id)
        if summary is None:
            return {"session_id": session_id, "summary": None, "constraints": None}
        constraints = decompose(summary, color_vocabulary(service.catalog()))
        return {
            "session_id": session_id,
            "summary": {"entries": summary.entries, "extras": summary.extras},
            "constraints": constraints_to_dict(constraints),
            "cache_key": key,
        }

    @app.put("/sessions/{session_id}/constraints")
    def put_constraints(session_id: str, payload: dict = Body(...)):
        return service.set_constraint_overrides(session_id, payload)

    @app.get("/sessions/{session_id}/recommendations")
    def get_recommendations(
        session_id: str,
        mode: str = Query(default="assortment"),
        k: int | None = Query(default=None),
    ):
        return service.orchestrate(session_id, mode=mode, k=k).to_dict()

    @app.post("/catalog/import")
    def import_catalog(payload: list[dict] = Body(...)):
        snapshot = service.catalog_store.import_records(payload)
        return {"version": snapshot.version, "items": len(snapshot)}

    @app.get("/catalog")
    def get_catalog():
        items = [
            {
                "item_id": item.item_id,
                "title": item.title,
                "brand": item.brand,
                "color": item.color,
                "price": float(item.price),
            }
            for item in service.catalog()
        ]
        return {"items": items, "version": service.catalog().version}

    @app.post("/experiments")
    def post_experiment(payload: dict = Body(...)):
        path = service.run_experiment_from_payload(payload)
        return {"report": str(path)}

    if ui_dir and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
