"""Local HTTP API over a workspace, serving the steward dashboard.

Run submission is asynchronous: runs queue onto a bounded worker pool and
their status (queued -> running -> done | failed) is polled via
``GET /api/runs/{id}``.  Everything else is synchronous reads plus the
append-only decisions log.
"""

from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from fastapi import FastAPI, File, Form, HTTPException, UploadFile
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .errors import ConfigError, ToolkitError
from .pipeline import RunConfig, run_id_for, run_pipeline, tradeoff_curve
from .workspace import Workspace


class RunRequest(BaseModel):
    dataset: str
    epsilon: float
    semantics: str = "per-record"
    mode: str = "independent"
    alpha: float = 0.5
    lam: float = Field(0.5, alias="lambda")
    seed: int = 0
    attack_trials: int = 200

    model_config = {"populate_by_name": True}


class DecisionRequest(BaseModel):
    run_id: str
    decision: str
    rationale: str


def _config_for(ws: Workspace, req: RunRequest, epsilon: float | None = None) -> RunConfig:
    ws.dataset_paths(req.dataset)  # existence check
    rel = Path("datasets") / req.dataset
    return RunConfig.from_dict(
        {
            "dataset": str(rel / "genotypes.tsv"),
            "panel": str(rel / "panel.tsv"),
            "epsilon": req.epsilon if epsilon is None else epsilon,
            "semantics": req.semantics,
            "mode": req.mode,
            "lambda": req.lam,
            "alpha": req.alpha,
            "seed": req.seed,
            "attack_trials": req.attack_trials,
        },
        workspace=str(ws.root),
    )


def create_app(workspace_root, workers: int = 2, frontend_dir=None) -> FastAPI:
    ws = Workspace(workspace_root)
    app = FastAPI(title="genoshare", version="0.1.0")
    pool = ThreadPoolExecutor(max_workers=workers)
    status_lock = threading.Lock()
    run_status: dict[str, dict] = {}

    @app.exception_handler(ToolkitError)
    async def on_toolkit_error(_request, exc: ToolkitError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.get("/api/datasets")
    def list_datasets():
        return ws.list_datasets()

    @app.post("/api/datasets")
    def upload_dataset(name: str = Form(...), genotypes: UploadFile = File(...),
                       panel: UploadFile = File(...)):
        return ws.import_dataset(
            name,
            genotypes.file.read().decode("utf-8"),
            panel.file.read().decode("utf-8"),
        )

    def _execute(run_id: str, cfg: RunConfig):
        with status_lock:
            run_status[run_id]["status"] = "running"
        try:
            run_pipeline(cfg)
        except Exception as exc:
            with status_lock:
                run_status[run_id] = {"status": "failed", "error": str(exc)}
            return
        with status_lock:
            run_status[run_id] = {"status": "done"}

    @app.post("/api/runs")
    def submit_run(req: RunRequest):
        cfg = _config_for(ws, req)
        dataset_text = (ws.root / cfg.dataset).read_text()
        panel_text = (ws.root / cfg.panel).read_text()
        run_id = run_id_for(cfg, dataset_text, panel_text)
        if ws.has_run(run_id):
            with status_lock:
                run_status[run_id] = {"status": "done"}
            return {"run_id": run_id, "status": "done"}
        with status_lock:
            already = run_id in run_status and run_status[run_id]["status"] in (
                "queued", "running")
            if not already:
                run_status[run_id] = {"status": "queued"}
        if not already:  # one writer per run id
            pool.submit(_execute, run_id, cfg)
        with status_lock:
            return {"run_id": run_id, "status": run_status[run_id]["status"]}

    @app.get("/api/runs")
    def list_runs():
        return [{"run_id": run_id, "status": "done"} for run_id in ws.list_run_ids()]

    @app.get("/api/runs/{run_id}")
    def get_run(run_id: str):
        if ws.has_run(run_id):
            return {"run_id": run_id, "status": "done", "report": ws.load_report_dict(run_id)}
        with status_lock:
            state = run_status.get(run_id)
        if state is None:
            raise HTTPException(status_code=404, detail=f"unknown run {run_id!r}")
        return {"run_id": run_id, **state}

    @app.get("/api/tradeoff")
    def get_tradeoff(dataset: str, epsilons: str, semantics: str = "per-record",
                     mode: str = "independent", alpha: float = 0.5, lam: float = 0.5,
                     seed: int = 0, attack_trials: int = 200):
        try:
            grid = [float(v) for v in epsilons.split(",") if v.strip()]
        except ValueError:
            raise ConfigError(f"unparseable epsilons {epsilons!r}") from None
        req = RunRequest(dataset=dataset, epsilon=grid[0] if grid else 1.0,
                         semantics=semantics, mode=mode, alpha=alpha, lam=lam,
                         seed=seed, attack_trials=attack_trials)
        curve = tradeoff_curve(_config_for(ws, req), grid)
        return curve.to_dict()

    @app.post("/api/decisions")
    def post_decision(req: DecisionRequest):
        return ws.append_decision(req.run_id, req.decision, req.rationale)

    @app.get("/api/decisions")
    def get_decisions():
        return ws.list_decisions()

    if frontend_dir and Path(frontend_dir).is_dir():
        app.mount("/", StaticFiles(directory=frontend_dir, html=True), name="dashboard")
    return app


def serve(workspace_root, port: int = 8712, host: str = "127.0.0.1",
          workers: int = 2, frontend_dir=None):
    """Blocking server entry point used by the CLI."""
    import uvicorn

    app = create_app(workspace_root, workers=workers, frontend_dir=frontend_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")
