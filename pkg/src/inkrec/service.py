"""HTTP recognition service.

One classifier bundle and one rule set are loaded at startup and never
mutated afterwards, so concurrent requests share immutable state.  The
recognition endpoint emits exactly the canonical JSON that the CLI prints
for the same payload — parity is byte-level by construction.
"""

from __future__ import annotations

import logging
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .classifier import bundle_manifest_hash, load_bundle
from .ink import SchemaError, _parse_stroke_array
from .recognizer import recognize, result_to_json
from .rules import RuleSet, load_rules

logger = logging.getLogger(__name__)


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse({"error": {"code": code, "message": message}}, status_code=status)


def load_models(app: FastAPI, bundle_dir: str | Path, rules_path: str | Path | None) -> None:
    """Attach a bundle (and optionally rules) to a running app."""
    app.state.classifier = load_bundle(bundle_dir)
    app.state.manifest_hash = bundle_manifest_hash(bundle_dir)
    app.state.rules = load_rules(rules_path) if rules_path else RuleSet([])
    logger.info("loaded bundle %s (%d classes, %d rules)", bundle_dir,
                len(app.state.classifier.labels), len(app.state.rules))


def create_app(bundle_dir: str | Path | None = None,
               rules_path: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="inkrec", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"],
    )
    app.state.classifier = None
    app.state.rules = None
    app.state.manifest_hash = None
    if bundle_dir is not None:
        load_models(app, bundle_dir, rules_path)

    @app.get("/api/health")
    async def health():
        if app.state.classifier is None:
            return {"status": "starting"}
        return {
            "status": "ok",
            "classes": len(app.state.classifier.labels),
            "rules": len(app.state.rules),
        }

    @app.get("/api/models")
    async def models():
        c = app.state.classifier
        if c is None:
            return _error(503, "not_loaded", "no bundle is loaded")
        return {
            "labels": c.canonical_labels,
            "trained_labels": c.labels,
            "n_states": c.config.n_states,
            "config_hash": c.config_hash,
            "manifest_hash": app.state.manifest_hash,
            "rules": {"flag": app.state.rules.flag, "count": len(app.state.rules)},
        }

    @app.post("/api/recognize")
    async def recognize_endpoint(request: Request):
        if app.state.classifier is None:
            return _error(503, "not_loaded", "models are not loaded yet")
        try:
            body = await request.json()
        except Exception:
            return _error(400, "malformed", "request body is not valid JSON")
        if not isinstance(body, dict) or "strokes" not in body:
            return _error(400, "malformed", "body must be an object with a 'strokes' field")
        raw = body["strokes"]
        if not isinstance(raw, list):
            return _error(400, "malformed", "'strokes' must be an array of stroke arrays")
        if len(raw) == 0:
            return _error(400, "no_strokes", "payload contains no strokes")
        k = body.get("k", 1)
        if isinstance(k, bool) or not isinstance(k, int) or k < 1:
            return _error(400, "invalid_k", "'k' must be an integer >= 1")
        traces = []
        for i, stroke in enumerate(raw):
            if isinstance(stroke, list) and len(stroke) == 0:
                return _error(400, "empty_stroke", f"stroke {i} has no points")
            try:
                traces.append(_parse_stroke_array(stroke, f"stroke {i}"))
            except SchemaError as e:
                return _error(400, "malformed", str(e))
        result = recognize(app.state.classifier, app.state.rules, traces, k)
        return Response(content=result_to_json(result), media_type="application/json")

    return app
