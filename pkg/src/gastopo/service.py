"""Local HTTP service: dataset snapshots, command dispatch, journal access
and static assets for the browser UI.

All mutation goes through POST /api/command; reads serve immutable snapshots
and stay consistent while commands run. Export pauses the applier.
"""

from __future__ import annotations

from pathlib import Path

import uvicorn
from fastapi import FastAPI
from fastapi.responses import FileResponse, HTMLResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from .commands import CommandProcessor
from .project import PLANS_DIR, load_project, save_project
from .serialize import (
    dataset_payload,
    journal_entry_record,
    layer_collection,
    nodes_collection,
    pipelines_collection,
)
from .validation import compute_statistics, topology_check

DEFAULT_HOST = "127.0.0.1"
DEFAULT_PORT = 8000

_PLACEHOLDER_PAGE = """<!doctype html>
<html><head><meta charset="utf-8"><title>gastopo</title></head>
<body><h1>gastopo service</h1>
<p>The API is up. Build the browser UI (frontend/) and pass its dist
directory via <code>gastopo serve &lt;project&gt; --ui &lt;dir&gt;</code>
to serve the map workspace here.</p></body></html>
"""


def create_app(
    processor: CommandProcessor,
    root: Path | None = None,
    ui_dir: Path | None = None,
) -> FastAPI:
    app = FastAPI(title="gastopo", docs_url=None, redoc_url=None)

    @app.get("/api/dataset")
    def get_dataset():
        return dataset_payload(processor.dataset)

    @app.get("/api/layers/{name}")
    def get_layer(name: str):
        dataset = processor.dataset
        if name == "nodes":
            return nodes_collection(dataset)
        if name == "pipelines":
            return pipelines_collection(dataset)
        cfg = dataset.layer_config(name)
        if cfg is None:
            return JSONResponse(
                status_code=404,
                content={"error": {"kind": "UnknownLayer", "message": f"no layer '{name}'"}},
            )
        if cfg.sublayer_of == "pipelines":
            return pipelines_collection(dataset, sublayer=name)
        return layer_collection(dataset, name)

    @app.get("/api/stats")
    def get_stats():
        return compute_statistics(processor.dataset)

    @app.get("/api/topology")
    def get_topology():
        # lenient: a report with dangling references is more useful than a 500
        return topology_check(processor.dataset, strict=False).as_dict()

    @app.get("/api/journal")
    def get_journal(since: int = 0):
        return [
            journal_entry_record(e) for e in processor.dataset.journal if e.seq > since
        ]

    @app.post("/api/command")
    async def post_command(envelope: dict):
        return processor.dispatch(envelope).as_dict()

    @app.post("/api/export")
    def post_export():
        if root is None:
            return JSONResponse(
                status_code=400,
                content={"error": {"kind": "IoError", "message": "service has no project root"}},
            )
        with processor.lock:  # pause the applier while files are written
            manifest = save_project(processor.dataset, root)
        return {"written": manifest.written_files()}

    @app.get("/plans/{file}")
    def get_plan(file: str):
        if root is not None:
            target = root / PLANS_DIR / file
            if target.is_file():
                return FileResponse(target)
        for overlay in processor.dataset.plan_overlays:
            if overlay.image_file == file and overlay.source_path:
                source = Path(overlay.source_path)
                if source.is_file():
                    return FileResponse(source)
        return JSONResponse(
            status_code=404,
            content={"error": {"kind": "IoError", "message": f"no plan image '{file}'"}},
        )

    if ui_dir is not None and (ui_dir / "index.html").is_file():
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    else:

        @app.get("/")
        def index():
            return HTMLResponse(_PLACEHOLDER_PAGE)

    return app


def serve(
    root: str | Path,
    host: str = DEFAULT_HOST,
    port: int = DEFAULT_PORT,
    ui_dir: str | Path | None = None,
) -> None:
    """Load a project directory and serve it until interrupted."""
    root = Path(root)
    processor = CommandProcessor(load_project(root))
    for warning in processor.dataset.warnings:
        print(f"warning: {warning}")
    app = create_app(processor, root=root, ui_dir=Path(ui_dir) if ui_dir else None)
    uvicorn.run(app, host=host, port=port, log_level="warning")
