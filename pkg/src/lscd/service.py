"""HTTP front of the annotation module.

A thin FastAPI layer: all domain rules live in annotation.py.  Projects
persist under one data directory (a subdirectory per project) and are
reloaded from their event logs on startup.  Every domain error surfaces
as a structured JSON object {"error": {"code", "message"}} with a
matching HTTP status.  Handlers are synchronous and serialize through a
per-project lock, which implements the single-writer log contract.
"""

from __future__ import annotations

import threading
from pathlib import Path

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from fastapi.requests import Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .annotation import (
    ABSTAIN_LABEL,
    SCALE_LABELS,
    AnnotationError,
    AnnotationProject,
    CompletionStatus,
    InvalidRating,
    UnknownProject,
    create_project,
    load_project,
)
from .corpus import Period, UsageSample, load_corpus
from .wug import Judgment, layout_wug


class CreateProjectBody(BaseModel):
    targets: list[str]
    corpus1: str
    corpus2: str
    project_id: str = "project"
    sample_size: int = 25
    seed: int = 0
    annotators: list[str] = Field(default_factory=lambda: ["annotator1"])


class JudgmentBody(BaseModel):
    identifier1: str
    identifier2: str
    annotator: str
    judgment: int
    comment: str = ""


class AdvanceBody(BaseModel):
    close_open: bool = False


SCALE = [
    {"rating": r, "label": SCALE_LABELS[r]} for r in (4, 3, 2, 1)
] + [{"rating": 0, "label": ABSTAIN_LABEL}]


def _usage_payload(u: UsageSample) -> dict:
    return {
        "identifier": u.usage_id,
        "lemma": u.lemma,
        "context": u.context,
        "indexes_target_token": u.target_index,
        "grouping": u.period.grouping,
    }


def _status_payload(status: CompletionStatus) -> dict:
    return {
        "round": status.round,
        "complete": status.complete,
        "targets": {
            lemma: {
                "complete": t.complete,
                "unconnected_multicluster_pairs": t.unconnected_multicluster_pairs,
                "judged_pairs": t.judged_pairs,
                "total_scheduled": t.total_scheduled,
                "excluded_usages": t.excluded_usages,
                "flags": list(t.flags),
            }
            for lemma, t in status.targets.items()
        },
    }


def create_app(data_dir: str | Path) -> FastAPI:
    data_dir = Path(data_dir)
    data_dir.mkdir(parents=True, exist_ok=True)
    app = FastAPI(title="annotation service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    projects: dict[str, AnnotationProject] = {}
    locks: dict[str, threading.RLock] = {}
    registry_lock = threading.Lock()
    for sub in sorted(data_dir.iterdir()) if data_dir.exists() else []:
        if (sub / "project.json").exists():
            project = load_project(sub)
            projects[project.project_id] = project
            locks[project.project_id] = threading.RLock()

    def get_project(pid: str) -> tuple[AnnotationProject, threading.RLock]:
        project = projects.get(pid)
        if project is None:
            raise UnknownProject(f"no project {pid!r}")
        return project, locks[pid]

    @app.exception_handler(AnnotationError)
    def on_domain_error(_request: Request, exc: AnnotationError) -> JSONResponse:
        return JSONResponse(
            status_code=exc.http_status,
            content={"error": {"code": exc.code, "message": str(exc)}},
        )

    @app.exception_handler(ValueError)
    def on_value_error(_request: Request, exc: ValueError) -> JSONResponse:
        return JSONResponse(
            status_code=400,
            content={"error": {"code": "invalid_request", "message": str(exc)}},
        )

    @app.post("/projects")
    def post_project(body: CreateProjectBody):
        with registry_lock:
            if body.project_id in projects:
                raise ValueError(f"project {body.project_id!r} already exists")
            c1 = load_corpus(body.corpus1, Period.C1)
            c2 = load_corpus(body.corpus2, Period.C2)
            project = create_project(
                body.targets,
                c1,
                c2,
                sample_size=body.sample_size,
                seed=body.seed,
                annotators=body.annotators,
                project_id=body.project_id,
                data_dir=data_dir / body.project_id,
            )
            projects[project.project_id] = project
            locks[project.project_id] = threading.RLock()
        return {
            "project_id": project.project_id,
            "targets": project.targets,
            "annotators": project.annotators,
            "flags": project.flags,
            "round": project.round,
            "scheduled_pairs": len(project.scheduled),
        }

    @app.get("/projects/{pid}/next")
    def get_next(pid: str, annotator: str):
        project, lock = get_project(pid)
        with lock:
            scheduled = project.next_pair(annotator)
            judged, total = project.progress(annotator)
            payload = {
                "pair": None,
                "scale": SCALE,
                "progress": {"judged": judged, "total_scheduled": total},
            }
            if scheduled is not None:
                payload["pair"] = {
                    "lemma": scheduled.lemma,
                    "usage1": _usage_payload(scheduled.usage_1),
                    "usage2": _usage_payload(scheduled.usage_2),
                }
            return payload

    @app.post("/projects/{pid}/judgments")
    def post_judgment(pid: str, body: JudgmentBody):
        project, lock = get_project(pid)
        if body.judgment not in (0, 1, 2, 3, 4):
            raise InvalidRating(
                f"judgment must be 0 (abstain) or 1..4, got {body.judgment}"
            )
        if body.identifier1 == body.identifier2:
            raise InvalidRating("a pair must consist of two distinct usages")
        judgment = Judgment(
            body.identifier1, body.identifier2, body.annotator, body.judgment, body.comment
        )
        with lock:
            project.submit(judgment)
            judged, total = project.progress(body.annotator)
        return {"accepted": True, "progress": {"judged": judged, "total_scheduled": total}}

    @app.get("/projects/{pid}/status")
    def get_status(pid: str):
        project, lock = get_project(pid)
        with lock:
            return _status_payload(project.status())

    @app.post("/projects/{pid}/advance")
    def post_advance(pid: str, body: AdvanceBody | None = None):
        project, lock = get_project(pid)
        with lock:
            status = project.advance_round(close_open=body.close_open if body else False)
            return _status_payload(status)

    @app.get("/projects/{pid}/wug/{lemma}")
    def get_wug(pid: str, lemma: str):
        project, lock = get_project(pid)
        with lock:
            wug = project.build_wug(lemma, clustered=project.round >= 1)
            return layout_wug(wug, seed=project.seed)

    @app.get("/projects/{pid}/export/{lemma}")
    def get_export(pid: str, lemma: str):
        project, lock = get_project(pid)
        with lock:
            out_dir = data_dir / pid / "export" / lemma
            paths = project.export_wug(lemma, out_dir)
            files = {name: str(p) for name, p in paths.items()}
            contents = {
                name: p.read_text(encoding="utf-8")
                for name, p in paths.items()
                if p.suffix == ".tsv"
            }
            return {"files": files, "contents": contents}

    return app


def serve(data_dir: str | Path, host: str = "127.0.0.1", port: int = 8750) -> None:
    """Run the annotation service until interrupted."""
    import uvicorn

    uvicorn.run(create_app(data_dir), host=host, port=port, log_level="warning")
