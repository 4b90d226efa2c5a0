"""HTTP service driving live annotation rounds and serving the UI.

The annotation loop runs on a background thread. When it reaches a round's
annotate step it publishes the selected logs as pending items and blocks;
annotators submit templates through the API and then explicitly advance the
round. All algorithmic numbers shown by the UI originate here.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Header, HTTPException, Response
from fastapi.responses import HTMLResponse, JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .confidence import Prediction
from .corpus import Corpus, evaluate
from .errors import (
    AnnotatorUnavailableError,
    EmptyTemplateError,
    LogTemplarError,
    UnknownTypeError,
)
from .model import Template, parse_template
from .selection import RunConfig, RunResult, RunState, run_annotation_loop

_FALLBACK_PAGE = """<!doctype html>
<html><head><title>logtemplar</title></head>
<body><h1>logtemplar annotation service</h1>
<p>No UI assets configured; the API lives under <code>/api</code>.</p>
</body></html>"""


@dataclass
class PendingAnnotation:
    round_index: int
    log_id: int
    raw: str
    words: list[str]
    guess: str | None = None
    submitted: Template | None = None
    submitter: str | None = None
    submitted_at: float | None = None


class _CapturingGateway:
    """Wraps a gateway so the newest prediction per log feeds UI pre-fills."""

    def __init__(self, inner):
        self.inner = inner
        self.latest: dict[int, Prediction] = {}
        self._lock = threading.Lock()

    def infer(self, prompt, round_index: int = 0) -> Prediction:
        pred = self.inner.infer(prompt, round_index=round_index)
        with self._lock:
            self.latest[pred.log_id] = pred
        return pred

    @property
    def total_prompt_tokens(self) -> int:
        return getattr(self.inner, "total_prompt_tokens", 0)

    @property
    def config(self):
        return getattr(self.inner, "config", None)


class InteractiveAnnotator:
    """Blocks the loop until every pending item is submitted and advanced."""

    def __init__(self, service: "AnnotationService"):
        self.service = service

    def annotate(self, log_ids: list[int], round_index: int) -> dict[int, Template]:
        svc = self.service
        with svc.lock:
            svc.pending = {}
            for log_id in log_ids:
                rec = svc.record_map[log_id]
                guess = svc.gateway.latest.get(log_id)
                svc.pending[log_id] = PendingAnnotation(
                    round_index=round_index,
                    log_id=log_id,
                    raw=rec.raw,
                    words=list(rec.words),
                    guess=guess.template.render() if guess and guess.template else None,
                )
            svc.advance_event.clear()
        while not svc.advance_event.wait(timeout=0.2):
            if svc.shutting_down:
                raise AnnotatorUnavailableError("service shutting down")
        with svc.lock:
            result = {
                log_id: item.submitted
                for log_id, item in svc.pending.items()
                if item.submitted is not None
            }
            svc.pending = {}
        if len(result) != len(log_ids):
            raise AnnotatorUnavailableError("round advanced with missing annotations")
        return result


class AnnotationBody(BaseModel):
    log_id: int
    template: str
    submitter: Optional[str] = None


class AnnotationService:
    """Owns the run thread, the pending queue, and the FastAPI app."""

    def __init__(
        self,
        corpus: Corpus,
        gateway,
        config: RunConfig,
        ctx=None,
        state_path: str | Path | None = None,
        token: str | None = None,
        static_dir: str | None = None,
    ):
        self.corpus = corpus
        self.record_map = corpus.record_map()
        self.gateway = _CapturingGateway(gateway)
        self.config = config
        self.ctx = ctx
        self.state_path = state_path
        self.token = token
        self.lock = threading.Lock()
        self.advance_event = threading.Event()
        self.pending: dict[int, PendingAnnotation] = {}
        self.state_snapshot: RunState | None = None
        self.result: RunResult | None = None
        self.error: str | None = None
        self.shutting_down = False
        self.thread: threading.Thread | None = None
        self.app = self._build_app(static_dir)

    # -- run loop ---------------------------------------------------------

    def start(self) -> None:
        self.thread = threading.Thread(target=self._run, name="annotation-loop", daemon=True)
        self.thread.start()

    def _run(self) -> None:
        try:
            self.result = run_annotation_loop(
                self.corpus,
                InteractiveAnnotator(self),
                self.gateway,
                self.config,
                ctx=self.ctx,
                state_path=self.state_path,
                round_hook=self._on_round,
            )
        except Exception as exc:  # noqa: BLE001 - surfaced via /api/state
            self.error = str(exc)

    def _on_round(self, state: RunState) -> None:
        with self.lock:
            self.state_snapshot = state

    def stop(self) -> None:
        self.shutting_down = True
        if self.thread is not None:
            self.thread.join(timeout=5.0)

    # -- shared helpers ----------------------------------------------------

    def _check_token(self, authorization: str | None) -> None:
        if self.token is None:
            return
        if authorization != f"Bearer {self.token}":
            raise HTTPException(status_code=401, detail="missing or bad bearer token")

    def _current_templates(self) -> dict[int, Template | None]:
        """Annotated templates plus the newest LLM guess for everything else."""
        if self.result is not None:
            return self.result.final_templates
        out: dict[int, Template | None] = {}
        state = self.state_snapshot
        labeled_ids = set()
        if state is not None:
            for log_id, tmpl in state.labeled:
                out[log_id] = tmpl
                labeled_ids.add(log_id)
        for log_id, pred in self.gateway.latest.items():
            if log_id not in labeled_ids:
                out[log_id] = pred.template
        return out

    # -- app --------------------------------------------------------------

    def _build_app(self, static_dir: str | None) -> FastAPI:
        app = FastAPI(title="logtemplar annotation service")
        service = self

        @app.get("/api/state")
        def get_state(authorization: str | None = Header(default=None)):
            service._check_token(authorization)
            with service.lock:
                state = service.state_snapshot
                pending_count = sum(
                    1 for item in service.pending.values() if item.submitted is None
                )
            payload = {
                "running": service.result is None and service.error is None,
                "complete": service.result is not None,
                "error": service.error,
                "pending_count": pending_count,
                "catalog_types": sorted(service.corpus.catalog.types),
                "corpus_size": len(service.corpus.records),
                "rounds": [],
                "labeled_count": 0,
                "unlabeled_count": len(service.corpus.records),
                "budget_remaining": service.config.budget,
            }
            if state is not None:
                payload["rounds"] = [r.to_dict() for r in state.rounds]
                payload["labeled_count"] = len(state.labeled)
                payload["unlabeled_count"] = len(state.unlabeled)
                payload["budget_remaining"] = state.budget_remaining
            if service.corpus.has_ground_truth():
                templates = service._current_templates()
                if templates:
                    payload["mla"] = evaluate(templates, service.corpus).mla
            return payload

        @app.get("/api/pending")
        def get_pending(authorization: str | None = Header(default=None)):
            service._check_token(authorization)
            with service.lock:
                items = [
                    {
                        "log_id": item.log_id,
                        "round": item.round_index,
                        "raw": item.raw,
                        "words": item.words,
                        "guess": item.guess,
                        "submitted": item.submitted is not None,
                    }
                    for item in sorted(service.pending.values(), key=lambda i: i.log_id)
                ]
            return {"items": items}

        @app.post("/api/annotations")
        def post_annotation(
            body: AnnotationBody, authorization: str | None = Header(default=None)
        ):
            service._check_token(authorization)
            with service.lock:
                item = service.pending.get(body.log_id)
                if item is None:
                    raise HTTPException(status_code=404, detail=f"log {body.log_id} not pending")
                if item.submitted is not None:
                    raise HTTPException(status_code=409, detail="already submitted")
                try:
                    template = parse_template(body.template, service.corpus.catalog)
                except (UnknownTypeError, EmptyTemplateError, LogTemplarError) as exc:
                    raise HTTPException(status_code=400, detail=str(exc)) from exc
                if len(template.tokens) != len(item.words):
                    raise HTTPException(
                        status_code=400,
                        detail=(
                            f"template has {len(template.tokens)} tokens "
                            f"but the log has {len(item.words)} words"
                        ),
                    )
                item.submitted = template
                item.submitter = body.submitter
                item.submitted_at = time.time()
                remaining = sum(1 for p in service.pending.values() if p.submitted is None)
            return {"ok": True, "remaining": remaining}

        @app.post("/api/rounds/advance")
        def advance(authorization: str | None = Header(default=None)):
            service._check_token(authorization)
            with service.lock:
                outstanding = [
                    item.log_id for item in service.pending.values() if item.submitted is None
                ]
                if outstanding:
                    return JSONResponse(
                        status_code=423,
                        content={"detail": "annotations outstanding", "outstanding": outstanding},
                    )
                if not service.pending and service.result is not None:
                    return {"ok": True, "note": "run already complete"}
            service.advance_event.set()
            return {"ok": True}

        @app.get("/api/predictions")
        def get_predictions(authorization: str | None = Header(default=None)):
            service._check_token(authorization)
            templates = service._current_templates()
            sources = service.result.sources if service.result is not None else {}
            rows = []
            for rec in sorted(service.corpus.records, key=lambda r: r.id):
                tmpl = templates.get(rec.id)
                rows.append(
                    {
                        "id": rec.id,
                        "log": rec.text,
                        "template": tmpl.render() if tmpl is not None else None,
                        "source": sources.get(rec.id),
                    }
                )
            return {"predictions": rows}

        @app.get("/api/metrics")
        def get_metrics(authorization: str | None = Header(default=None)):
            service._check_token(authorization)
            if not service.corpus.has_ground_truth():
                raise HTTPException(status_code=404, detail="corpus has no ground truth")
            templates = service._current_templates()
            return evaluate(templates, service.corpus).to_dict()

        if static_dir and Path(static_dir).is_dir():
            app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")
        else:

            @app.get("/", response_class=HTMLResponse)
            def index() -> Response:
                return HTMLResponse(_FALLBACK_PAGE)

        return app
