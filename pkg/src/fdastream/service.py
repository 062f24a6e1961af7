"""HTTP service wiring ingestion, the outlyingness engine and FPCA drill-down.

Endpoints: GET /msplot, GET /series, POST /fpca, GET /fpca/topk, POST /ingest,
GET|PUT /config, GET /events (server-sent events), GET /layout (optional
sensor-grid topology).  All engine mutations funnel through the engine's
single-writer lock; FPCA requests run over immutable copies of the selected
rows.

Push policy: an ``msplot_delta`` is broadcast after every
``points_per_update`` time-point events (additions and removals count the
same) and immediately when a series is added or removed.  Recompute begin and
end are pushed as ``recompute_started`` / ``recompute_done``; the counter
behind the delta throttle resets at each new epoch.  Slow subscribers are
dropped once their buffer fills; clients reconnect with ``?resume_epoch=`` to
receive a fresh snapshot first.
"""

from __future__ import annotations

import json
import queue
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from fastapi import FastAPI, HTTPException, Query, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import StreamingResponse

from .engine import EngineConfig, StreamingEngine
from .errors import ConfigurationError, DataQualityError
from .fpca import (
    BasisSpec,
    SmoothedCurve,
    build_basis,
    fit_fpca,
    perturbation_curves,
    scree,
    select_lambda_gcv,
    smooth_curves,
    top_k_series,
)
from .ingest import apply_event, event_from_dict

DEFAULT_PORT = 8000
PORT_ENV_VAR = "FDA_STREAM_PORT"


@dataclass
class PushPolicy:
    points_per_update: int = 10
    min_interval: float = 0.0

    def validate(self) -> None:
        if self.points_per_update < 1:
            raise ConfigurationError("points_per_update must be >= 1")
        if self.min_interval < 0:
            raise ConfigurationError("min_interval must be >= 0")


@dataclass
class FpcaConfig:
    basis: str = "bspline"
    n_basis: int = 12
    penalty_order: int = 2
    lambda_: Union[float, str] = "gcv"

    def validate(self) -> None:
        BasisSpec(kind=self.basis, n_basis=self.n_basis, penalty_order=self.penalty_order).validate()
        if isinstance(self.lambda_, str):
            if self.lambda_ != "gcv":
                raise ConfigurationError("lambda must be a number >= 0 or 'gcv'")
        elif self.lambda_ < 0:
            raise ConfigurationError("lambda must be >= 0")


class _Subscriber:
    def __init__(self, buffer: int) -> None:
        self.queue: queue.Queue = queue.Queue(maxsize=buffer)
        self.dropped = threading.Event()


class Broadcaster:
    """Fan-out of server push events with bounded per-subscriber buffering."""

    def __init__(self, buffer: int = 256) -> None:
        self._buffer = buffer
        self._subs: set[_Subscriber] = set()
        self._lock = threading.Lock()

    def subscribe(self) -> _Subscriber:
        sub = _Subscriber(self._buffer)
        with self._lock:
            self._subs.add(sub)
        return sub

    def unsubscribe(self, sub: _Subscriber) -> None:
        with self._lock:
            self._subs.discard(sub)

    def broadcast(self, event: str, payload: dict) -> None:
        with self._lock:
            subs = list(self._subs)
        for sub in subs:
            try:
                sub.queue.put_nowait((event, payload))
            except queue.Full:
                sub.dropped.set()
                self.unsubscribe(sub)


@dataclass
class ServiceState:
    engine: StreamingEngine
    policy: PushPolicy
    fpca: FpcaConfig
    broadcaster: Broadcaster
    layout: Optional[dict] = None
    heartbeat: float = 0.25
    lock: threading.Lock = field(default_factory=threading.Lock)
    points_since_delta: int = 0
    last_delta_at: float = 0.0


def create_app(
    engine: Optional[StreamingEngine] = None,
    *,
    policy: Optional[PushPolicy] = None,
    fpca_config: Optional[FpcaConfig] = None,
    layout: Optional[dict] = None,
    heartbeat: float = 0.25,
    static_dir: Optional[str] = None,
) -> FastAPI:
    """Build the FastAPI app around one engine instance."""
    state = ServiceState(
        engine=engine or StreamingEngine(),
        policy=policy or PushPolicy(),
        fpca=fpca_config or FpcaConfig(),
        broadcaster=Broadcaster(),
        layout=layout,
        heartbeat=heartbeat,
    )
    state.policy.validate()
    state.fpca.validate()

    app = FastAPI(title="fdastream", version="0.1.0")
    app.state.service = state
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    def on_engine_event(ev: dict) -> None:
        kind = ev["type"]
        if kind == "recompute_done":
            with state.lock:
                state.points_since_delta = 0
        state.broadcaster.broadcast(kind, {k: v for k, v in ev.items() if k != "type"})

    state.engine.add_listener(on_engine_event)

    @app.exception_handler(DataQualityError)
    async def _data_error(_req: Request, exc: DataQualityError):
        return _json_error(400, str(exc))

    @app.exception_handler(ConfigurationError)
    async def _config_error(_req: Request, exc: ConfigurationError):
        return _json_error(422, str(exc))

    @app.get("/msplot")
    def get_msplot():
        view = state.engine.snapshot()
        if not view.points:
            raise HTTPException(status_code=404, detail="no data")
        return view.to_dict()

    @app.get("/series")
    def get_series(
        ids: str = Query(..., description="comma-separated series ids"),
        start: Optional[int] = None,
        end: Optional[int] = None,
    ):
        selection = _parse_selection(state.engine, ids)
        return state.engine.get_series(selection, start, end)

    @app.post("/ingest")
    def post_ingest(payload: dict):
        event = event_from_dict(payload)
        apply_event(state.engine, event)
        _maybe_push_delta(state, event.kind)
        epoch, t_count = state.engine.status()
        return {"status": "ok", "epoch": epoch, "t_count": t_count}

    @app.post("/fpca")
    def post_fpca(payload: dict):
        selection = _parse_selection(state.engine, payload.get("series_ids"))
        if len(selection) < 2:
            raise HTTPException(status_code=422, detail="selection must contain at least 2 series")
        model, lam = _run_fpca(state, selection, payload)
        e = model.basis.eval_matrix
        mean_curve = e @ model.mean_coefficients
        fpc_curves = model.components @ e.T
        return {
            "series_ids": list(model.series_ids),
            "times": model.basis.sample_times.tolist(),
            "mean_curve": mean_curve.tolist(),
            "eigenvalues": model.eigenvalues.tolist(),
            "explained_ratio": model.explained_ratio.tolist(),
            "scree": scree(model),
            "fpcs": [
                {
                    "index": j + 1,
                    "eigenvalue": float(model.eigenvalues[j]),
                    "values": fpc_curves[j].tolist(),
                }
                for j in range(model.n_components)
            ],
            "scores": {sid: model.scores[i].tolist() for i, sid in enumerate(model.series_ids)},
            "perturbations": [
                perturbation_curves(model, j + 1) for j in range(model.n_components)
            ],
            "lambda": lam,
        }

    @app.get("/fpca/topk")
    def get_topk(
        ids: str = Query(...),
        component: int = 1,
        k: int = 10,
        mode: str = "top",
        threshold: Optional[float] = None,
    ):
        selection = _parse_selection(state.engine, ids)
        if len(selection) < 2:
            raise HTTPException(status_code=422, detail="selection must contain at least 2 series")
        model, _ = _run_fpca(state, selection, {})
        ranking = top_k_series(model.series_ids, model.scores, component, k, mode, threshold)
        return {"ranking": ranking, "component": component, "mode": mode}

    @app.get("/config")
    def get_config():
        return _config_dict(state)

    @app.put("/config")
    def put_config(payload: dict):
        _apply_config(state, payload)
        return _config_dict(state)

    @app.get("/events")
    def get_events(resume_epoch: Optional[int] = None):
        sub = state.broadcaster.subscribe()

        def stream():
            try:
                if resume_epoch is not None:
                    view = state.engine.snapshot()
                    if view.points and view.epoch > resume_epoch:
                        yield _sse("msplot_delta", view.to_dict())
                while True:
                    if sub.dropped.is_set():
                        yield _sse("dropped", {"reason": "slow subscriber", "resume": "/events?resume_epoch="})
                        return
                    try:
                        name, payload = sub.queue.get(timeout=state.heartbeat)
                    except queue.Empty:
                        yield ": heartbeat\n\n"
                        continue
                    yield _sse(name, payload)
            finally:
                state.broadcaster.unsubscribe(sub)

        return StreamingResponse(stream(), media_type="text/event-stream")

    @app.get("/layout")
    def get_layout():
        if state.layout is None:
            raise HTTPException(status_code=404, detail="no sensor layout configured")
        view = state.engine.snapshot()
        outlying = {p.series_id for p in view.points if p.label == "outlying"}
        cells = []
        for cell in state.layout.get("cells", []):
            members = [str(s) for s in cell.get("series", [])]
            cells.append(
                {
                    "id": cell.get("id"),
                    "row": cell.get("row"),
                    "col": cell.get("col"),
                    "series": members,
                    "outlier_count": sum(1 for s in members if s in outlying),
                }
            )
        return {"cells": cells, "epoch": view.epoch}

    if static_dir and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=static_dir, html=True), name="ui")

    return app


def _json_error(status: int, detail: str):
    from fastapi.responses import JSONResponse

    return JSONResponse(status_code=status, content={"detail": detail})


def _sse(event: str, payload: dict) -> str:
    return f"event: {event}\ndata: {json.dumps(payload)}\n\n"


def _parse_selection(engine: StreamingEngine, ids) -> list[str]:
    if isinstance(ids, str):
        selection = [s for s in (part.strip() for part in ids.split(",")) if s]
    elif isinstance(ids, (list, tuple)):
        selection = [str(s) for s in ids]
    else:
        selection = []
    if not selection:
        raise HTTPException(status_code=422, detail="selection must not be empty")
    panel = engine.panel
    known = set(panel.series_ids) if panel is not None else set()
    unknown = [s for s in selection if s not in known]
    if unknown:
        raise HTTPException(
            status_code=422,
            detail=f"unknown series ids: {', '.join(sorted(unknown))}",
        )
    return selection


def _run_fpca(state: ServiceState, selection: list[str], payload: dict):
    cfg = state.fpca
    basis_kind = payload.get("basis", cfg.basis)
    n_basis = payload.get("n_basis", cfg.n_basis)
    penalty_order = payload.get("penalty_order", cfg.penalty_order)
    lam = payload.get("lambda", cfg.lambda_)

    rows, timestamps = state.engine.selection_matrix(selection)
    spec = BasisSpec(kind=basis_kind, n_basis=int(n_basis), penalty_order=int(penalty_order))
    basis = build_basis(spec, timestamps)
    if lam == "gcv":
        lam_value = select_lambda_gcv(rows, basis)
    else:
        lam_value = float(lam)
        if lam_value < 0:
            raise ConfigurationError("lambda must be >= 0")
    coefs = smooth_curves(rows, basis, lam_value)
    curves = [SmoothedCurve(coefs[i], lam_value, sid) for i, sid in enumerate(selection)]
    return fit_fpca(curves, basis), lam_value


def _maybe_push_delta(state: ServiceState, kind: str) -> None:
    view = None
    with state.lock:
        if kind in ("add_series", "remove_series"):
            view = state.engine.snapshot()
        else:
            state.points_since_delta += 1
            now = time.monotonic()
            if (
                state.points_since_delta >= state.policy.points_per_update
                and now - state.last_delta_at >= state.policy.min_interval
            ):
                state.points_since_delta -= state.policy.points_per_update
                state.last_delta_at = now
                view = state.engine.snapshot()
    if view is not None:
        state.broadcaster.broadcast("msplot_delta", view.to_dict())


def _config_dict(state: ServiceState) -> dict:
    cfg = state.engine.config
    return {
        "push_policy": {
            "points_per_update": state.policy.points_per_update,
            "min_interval": state.policy.min_interval,
        },
        "classify": {"mo_band": list(cfg.mo_band), "vo_cap": cfg.vo_cap},
        "drift": {
            "threshold": cfg.drift_threshold,
            "bin_count": cfg.drift_bins,
            "approx_budget": cfg.approx_budget,
        },
        "fpca": {
            "basis": state.fpca.basis,
            "n_basis": state.fpca.n_basis,
            "penalty_order": state.fpca.penalty_order,
            "lambda": state.fpca.lambda_,
        },
    }


def _apply_config(state: ServiceState, payload: dict) -> None:
    if not isinstance(payload, dict):
        raise ConfigurationError("config payload must be a JSON object")
    push = payload.get("push_policy")
    if push:
        candidate = PushPolicy(
            points_per_update=int(push.get("points_per_update", state.policy.points_per_update)),
            min_interval=float(push.get("min_interval", state.policy.min_interval)),
        )
        candidate.validate()
        state.policy = candidate

    engine_updates = {}
    cls = payload.get("classify")
    if cls:
        if "mo_band" in cls:
            band = cls["mo_band"]
            if not isinstance(band, (list, tuple)) or len(band) != 2:
                raise ConfigurationError("mo_band must be a [low, high] pair of fractions")
            engine_updates["mo_band"] = (float(band[0]), float(band[1]))
        if "vo_cap" in cls:
            engine_updates["vo_cap"] = float(cls["vo_cap"])
    drift = payload.get("drift")
    if drift:
        if "threshold" in drift:
            engine_updates["drift_threshold"] = float(drift["threshold"])
        if "bin_count" in drift:
            engine_updates["drift_bins"] = int(drift["bin_count"])
        if "approx_budget" in drift:
            engine_updates["approx_budget"] = int(drift["approx_budget"])
    if engine_updates:
        state.engine.configure(**engine_updates)

    fp = payload.get("fpca")
    if fp:
        candidate = FpcaConfig(
            basis=fp.get("basis", state.fpca.basis),
            n_basis=int(fp.get("n_basis", state.fpca.n_basis)),
            penalty_order=int(fp.get("penalty_order", state.fpca.penalty_order)),
            lambda_=fp.get("lambda", state.fpca.lambda_),
        )
        candidate.validate()
        state.fpca = candidate
