"""HTTP prediction service.

Exposes loaded models over three endpoints:

    GET  /v1/health   liveness probe, 200 "ok"
    GET  /v1/model    loaded-model metadata (503 when nothing is loaded)
    POST /v1/predict  progression probabilities for one subject

Handlers are stateless over an immutable model set, so concurrent
identical requests return identical bodies, and every probability is
produced by the same code path as the command-line predict. Field
errors come back as 400 with the offending field named; requests that
are well-formed but incompatible with the loaded models come back 422.
The optional static mount under /ui serves the what-if workbench.
"""

from __future__ import annotations

import argparse
import os
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from . import wire
from .errors import SchemaViolation, ValidationError
from .model import load_model


def _error_body(message: str, field: Optional[str] = None) -> dict:
    return {"error": {"field": field, "message": message}}


def create_app(models: dict, ui_dir: Optional[str] = None) -> FastAPI:
    """Build the application around an immutable {Endpoint: bundle} map."""
    app = FastAPI(title="prognos", docs_url=None, redoc_url=None)
    app.state.models = dict(models)

    @app.get("/v1/health")
    def health() -> PlainTextResponse:
        return PlainTextResponse("ok")

    @app.get("/v1/model")
    def model_metadata() -> JSONResponse:
        if not app.state.models:
            return JSONResponse(_error_body("no model loaded"), status_code=503)
        return JSONResponse(wire.model_metadata(app.state.models))

    @app.post("/v1/predict")
    async def predict(request: Request) -> JSONResponse:
        if not app.state.models:
            return JSONResponse(_error_body("no model loaded"), status_code=503)
        try:
            doc = await request.json()
        except Exception:
            return JSONResponse(
                _error_body("request body must be valid JSON", "body"),
                status_code=400,
            )
        try:
            response = wire.build_prediction_response(app.state.models, doc)
        except SchemaViolation as exc:
            return JSONResponse(
                _error_body(exc.detail, exc.field), status_code=400
            )
        except ValidationError as exc:
            # structurally valid request the loaded models cannot serve
            return JSONResponse(_error_body(str(exc)), status_code=422)
        return JSONResponse(response)

    if ui_dir:
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def load_models_from_manifest(manifest_path: str) -> dict:
    """Read a manifest file and load every model it lists."""
    with open(manifest_path, "r", encoding="utf-8") as fh:
        text = fh.read()
    base = os.path.dirname(os.path.abspath(manifest_path))
    models = {}
    for ep, path in wire.load_manifest(text, base).items():
        bundle = load_model(path)
        if bundle.endpoint is not ep:
            raise ValidationError(
                f"manifest lists {path} under {ep.value}, but it predicts "
                f"{bundle.endpoint.value}"
            )
        models[ep] = bundle
    return models


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="prognos-serve", description="Serve loaded models over HTTP."
    )
    parser.add_argument(
        "--models", required=True, help="manifest JSON mapping endpoints to files"
    )
    parser.add_argument("--port", type=int, default=8000)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument(
        "--ui", default=None, help="static directory to mount under /ui"
    )
    args = parser.parse_args(argv)

    import uvicorn

    app = create_app(load_models_from_manifest(args.models), ui_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
