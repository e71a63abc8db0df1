"""HTTP service exposing the pipeline and project store to the review UI.

All responses are JSON with stable field names; errors are structured as
{"error": {"code", "message"}}. Long-running map-all work runs as an async
job polled via /api/jobs/{id}.
"""

from __future__ import annotations

import json
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from pathlib import Path

from fastapi import FastAPI, Form, Request, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles

from .corpus import CdeRecord
from .errors import DataError, UpstreamError
from .index.persist import IndexBundle
from .llm.gateway import LlmGateway, ValueMatch
from .pipeline import PipelineConfig, manual_search, map_values, parse_flat_config, recommend
from .project_store import MappingDecision, ProjectStore, StoreError, import_source_csv


def error_response(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": {"code": code, "message": message}})


@dataclass
class Job:
    job_id: str
    total: int
    completed: int = 0
    state: str = "running"  # running | done | error
    error: str | None = None

    def to_dict(self) -> dict:
        return {"job_id": self.job_id, "state": self.state, "total": self.total,
                "completed": self.completed, "error": self.error}


class JobManager:
    """Bounded worker pool with polled progress; progress is monotone and
    each job reaches a terminal state exactly once."""

    def __init__(self, max_workers: int = 2):
        self._executor = ThreadPoolExecutor(max_workers=max_workers)
        self._jobs: dict[str, Job] = {}
        self._lock = threading.Lock()

    def start(self, total: int, work) -> str:
        job_id = uuid.uuid4().hex[:12]
        job = Job(job_id=job_id, total=total)
        with self._lock:
            self._jobs[job_id] = job

        def tick():
            with self._lock:
                job.completed += 1

        def run():
            try:
                work(tick)
                with self._lock:
                    job.state = "done"
            except Exception as exc:  # job errors surface via polling
                with self._lock:
                    job.state = "error"
                    job.error = str(exc)

        if total == 0:
            job.state = "done"
        else:
            self._executor.submit(run)
        return job_id

    def get(self, job_id: str) -> Job | None:
        with self._lock:
            return self._jobs.get(job_id)


def record_to_dict(record: CdeRecord) -> dict:
    return {
        "tiny_id": record.tiny_id,
        "name": record.name,
        "collection": record.collection,
        "definition": record.definition,
        "designations": list(record.designations),
        "question_texts": list(record.question_texts),
        "permissible_values": [
            {"value_name": pv.value_name, "code": pv.code, "code_system": pv.code_system}
            for pv in record.permissible_values
        ],
        "detail_url": record.detail_url,
    }


def _matches_to_dicts(matches: list[ValueMatch]) -> list[dict]:
    return [
        {"source_value": m.source_value, "matched_value": m.matched_value, "score": m.score}
        for m in matches
    ]


def create_app(
    bundle: IndexBundle,
    store: ProjectStore,
    gateway: LlmGateway,
    base_config: PipelineConfig | None = None,
    static_dir: str | Path | None = None,
    cors_origins: tuple[str, ...] = (),
) -> FastAPI:
    app = FastAPI(title="cdemapper", docs_url=None, redoc_url=None)
    base = base_config or PipelineConfig()
    jobs = JobManager()

    if cors_origins:
        app.add_middleware(
            CORSMiddleware, allow_origins=list(cors_origins), allow_methods=["*"], allow_headers=["*"]
        )

    @app.exception_handler(StoreError)
    def _store_error(request: Request, exc: StoreError):
        status = 404 if "unknown" in str(exc) else 400
        return error_response(status, "store_error", str(exc))

    @app.exception_handler(UpstreamError)
    def _upstream_error(request: Request, exc: UpstreamError):
        return error_response(502, "upstream_error", str(exc))

    @app.exception_handler(DataError)
    def _data_error(request: Request, exc: DataError):
        return error_response(400, "data_error", str(exc))

    @app.exception_handler(RequestValidationError)
    def _validation_error(request: Request, exc: RequestValidationError):
        return error_response(422, "validation_error", str(exc))

    def project_or_404(project_id: str):
        return store.get_project(project_id)  # StoreError -> 404 via handler

    def element_config(project) -> PipelineConfig:
        return parse_flat_config({k: str(v) for k, v in project.config.items() if v != ""}, base)

    # -- projects --------------------------------------------------------------

    @app.post("/api/projects")
    def create_project(file: UploadFile, name: str = Form("project"), config: str = Form("")):
        try:
            flat = json.loads(config) if config else {}
        except json.JSONDecodeError:
            return error_response(400, "data_error", "config must be a JSON object of flat keys")
        cfg = parse_flat_config({k: str(v) for k, v in flat.items()}, base)
        result = import_source_csv(file.file.read())
        project = store.create_project(name, cfg.to_dict(), result.elements)
        return {
            "project_id": project.project_id,
            "name": project.name,
            "element_count": len(project.element_order),
            "rejected_rows": [{"line": line, "reason": reason} for line, reason in result.rejected_rows],
            "status_counts": project.status_counts(),
            "config": project.config,
        }

    @app.get("/api/projects")
    def list_projects():
        return [
            {
                "project_id": p.project_id,
                "name": p.name,
                "created_at": p.created_at,
                "element_count": len(p.element_order),
                "status_counts": p.status_counts(),
            }
            for p in store.list_projects()
        ]

    @app.get("/api/projects/{project_id}/elements")
    def list_elements(project_id: str, status: str = "", page: int = 1, page_size: int = 25, sort: str = ""):
        project = project_or_404(project_id)
        states = project.elements()
        if status:
            states = [s for s in states if s.status == status]
        if sort:
            reverse = sort.startswith("-")
            key = sort.lstrip("-")
            if key not in ("name", "status", "element_id"):
                return error_response(400, "data_error", f"unsupported sort key {key!r}")
            states = sorted(
                states,
                key=lambda s: getattr(s.element, key, "") if key != "status" else s.status,
                reverse=reverse,
            )
        total = len(states)
        page = max(1, page)
        page_size = max(1, min(page_size, 200))
        window = states[(page - 1) * page_size : page * page_size]
        return {
            "total": total,
            "page": page,
            "page_size": page_size,
            "items": [
                {
                    "element_id": s.element.element_id,
                    "name": s.element.name,
                    "description": s.element.description,
                    "values": s.element.value_set,
                    "status": s.status,
                    "selected_tiny_id": s.decision.selected_tiny_id if s.decision else None,
                }
                for s in window
            ],
        }

    # -- recommendations ---------------------------------------------------------

    @app.post("/api/projects/{project_id}/elements/{element_id}/candidates")
    def compute_candidates(project_id: str, element_id: str):
        project = project_or_404(project_id)
        state = project.states.get(element_id)
        if state is None:
            return error_response(404, "store_error", f"unknown element: {element_id!r}")
        candidates = recommend(state.element, element_config(project), bundle, gateway)
        store.record_candidates(project_id, candidates)
        return candidates.to_dict()

    @app.post("/api/projects/{project_id}/map-all")
    def map_all(project_id: str):
        project = project_or_404(project_id)
        pending = [s.element for s in project.elements() if s.status in ("unmapped", "candidates_ready")]
        cfg = element_config(project)

        def work(tick):
            for element in pending:
                store.record_candidates(project_id, recommend(element, cfg, bundle, gateway))
                tick()

        return {"job_id": jobs.start(len(pending), work)}

    @app.get("/api/jobs/{job_id}")
    def job_status(job_id: str):
        job = jobs.get(job_id)
        if job is None:
            return error_response(404, "store_error", f"unknown job: {job_id!r}")
        return job.to_dict()

    @app.post("/api/search")
    def search(body: dict):
        query = str(body.get("query", ""))
        if not query.strip():
            return error_response(400, "data_error", "query must be non-empty")
        collections = set(body["collections"]) if body.get("collections") else None
        cfg = base
        if "top_k" in body:
            cfg = parse_flat_config({"top_k": str(body["top_k"])}, cfg)
        if body.get("embedding") is not None:
            cfg = parse_flat_config({"embedding": "on" if body["embedding"] else "off"}, cfg)
        return manual_search(query, collections, bundle, cfg, gateway).to_dict()

    # -- decisions and values ------------------------------------------------------

    @app.post("/api/projects/{project_id}/elements/{element_id}/decision")
    def record_decision(project_id: str, element_id: str, body: dict):
        no_match = bool(body.get("no_match"))
        selected = body.get("selected_tiny_id")
        if no_match and selected:
            return error_response(400, "data_error", "a decision is either a selection or a no-match")
        if not no_match and not selected:
            return error_response(400, "data_error", "selected_tiny_id required unless no_match is true")
        decision = MappingDecision(
            element_id=element_id,
            selected_tiny_id=None if no_match else str(selected),
            origin=str(body.get("origin", "human_selected")),
            value_mappings=[
                ValueMatch(m["source_value"], m["matched_value"], float(m.get("score", 0.0)))
                for m in body.get("value_mappings", [])
            ],
        )
        status = store.record_decision(project_id, decision)
        return {"element_id": element_id, "status": status}

    @app.post("/api/projects/{project_id}/elements/{element_id}/value-mappings")
    def value_mappings(project_id: str, element_id: str, body: dict):
        project = project_or_404(project_id)
        state = project.states.get(element_id)
        if state is None:
            return error_response(404, "store_error", f"unknown element: {element_id!r}")
        target_id = str(body.get("target_tiny_id", ""))
        record = bundle.records.get(target_id)
        if record is None:
            return error_response(404, "store_error", f"unknown CDE: {target_id!r}")
        if not state.element.value_set:
            return {"available": False, "reason": "source element has no raw values", "matches": []}
        matches = map_values(state.element.value_set, record, gateway)
        if matches is None:
            return {"available": False, "reason": "target CDE has no permissible values", "matches": []}
        return {"available": True, "matches": _matches_to_dicts(matches)}

    # -- corpus and export ----------------------------------------------------------

    @app.get("/api/projects/{project_id}/export")
    def export(project_id: str):
        data = store.export_mappings(project_id)
        return Response(
            content=data,
            media_type="text/csv",
            headers={"Content-Disposition": 'attachment; filename="mappings.csv"'},
        )

    @app.get("/api/collections")
    def collections():
        return [{"name": name, "count": count} for name, count in bundle.collection_counts().items()]

    @app.get("/api/cde/{tiny_id}")
    def cde_detail(tiny_id: str):
        record = bundle.records.get(tiny_id)
        if record is None:
            return error_response(404, "store_error", f"unknown CDE: {tiny_id!r}")
        return record_to_dict(record)

    if static_dir:
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app


@dataclass
class ServiceConfig:
    """Flat key-value service configuration (see parse_service_config)."""

    listen_host: str = "127.0.0.1"
    listen_port: int = 8000
    index_path: str = "index"
    projects_dir: str = "projects"
    static_path: str | None = None
    cors_origins: tuple[str, ...] = ()
    mock_llm: bool = False
    llm: dict = dc_field(default_factory=dict)


def parse_service_config(path: str | Path) -> ServiceConfig:
    """Parse `key=value` lines ('#' comments allowed) into a ServiceConfig."""
    cfg = ServiceConfig()
    for raw_line in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataError(f"bad config line (expected key=value): {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key == "listen_host":
            cfg.listen_host = value
        elif key == "listen_port":
            cfg.listen_port = int(value)
        elif key == "index_path":
            cfg.index_path = value
        elif key == "projects_dir":
            cfg.projects_dir = value
        elif key == "static_path":
            cfg.static_path = value or None
        elif key == "cors_origins":
            cfg.cors_origins = tuple(o.strip() for o in value.split(",") if o.strip())
        elif key == "mock_llm":
            cfg.mock_llm = value.lower() in ("1", "true", "yes", "on")
        elif key in ("endpoint_url", "model_name", "embedding_model_name", "api_key_ref",
                     "request_timeout", "max_retries", "max_concurrent_requests", "audit_log_path"):
            cfg.llm[key] = value
        else:
            raise DataError(f"unknown service config key {key!r}")
    return cfg
