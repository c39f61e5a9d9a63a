"""HTTP inference service: predictions, what-if sweeps, importance reports.

Stateless between requests apart from the immutable model registry; every
response carries the serving model's version hash so clients can detect
model swaps.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .errors import DataError, FeatureWidthError
from .model import ModelParams, load_params
from .tracking import BallState, Frame, PitchSpec, PlayerState, Vec2
from .whatif import frame_probability, joint_whatif, rotate_velocity, sweep_rotations


@dataclass
class ServiceConfig:
    models: dict[str, str]  # name -> weight file path
    dataset_path: str | None = None  # labeled-frame JSONL for browsing
    importance_paths: dict[str, str] = field(default_factory=dict)
    max_request_bytes: int = 2_000_000

    def __post_init__(self):
        if not self.models:
            raise DataError("at least one model must be registered")


class PlayerPayload(BaseModel):
    id: str
    team: Literal["home", "away"]
    x: float
    y: float
    vx: float = 0.0
    vy: float = 0.0
    extrapolated: bool = False


class BallPayload(BaseModel):
    x: float
    y: float
    vx: float = 0.0
    vy: float = 0.0


class FramePayload(BaseModel):
    frame_id: int = 0
    timestamp: float = 0.0
    period: int = 1
    attacking_team: Literal["home", "away"]
    gender: Literal["women", "men"] = "women"
    ball: BallPayload
    players: list[PlayerPayload] = Field(min_length=1, max_length=22)

    def to_frame(self) -> Frame:
        return Frame(
            frame_id=self.frame_id,
            timestamp=self.timestamp,
            period=self.period,
            players=tuple(
                PlayerState(
                    player_id=p.id,
                    team=p.team,
                    position=Vec2(p.x, p.y),
                    velocity=Vec2(p.vx, p.vy),
                    extrapolated=p.extrapolated,
                )
                for p in self.players
            ),
            ball=BallState(Vec2(self.ball.x, self.ball.y), Vec2(self.ball.vx, self.ball.vy)),
            attacking_team=self.attacking_team,
        )


class RotationPayload(BaseModel):
    player_id: str
    degrees: float = Field(ge=-180.0, le=180.0)


class SweepPayload(BaseModel):
    player_id: str
    step: float = 15.0


class PredictRequest(BaseModel):
    model: str
    frame: FramePayload


class WhatIfRequest(BaseModel):
    model: str
    frame: FramePayload
    rotations: list[RotationPayload] = Field(default_factory=list)
    sweep: SweepPayload | None = None


@dataclass(frozen=True)
class _LoadedModel:
    name: str
    params: ModelParams
    version: str


def _error(status: int, code: str, message: str, field_path: str | None = None):
    body = {"code": code, "message": message}
    if field_path:
        body["field"] = field_path
    return JSONResponse(status_code=status, content=body)


def create_app(config: ServiceConfig) -> FastAPI:
    registry: dict[str, _LoadedModel] = {}
    for name, path in config.models.items():
        params = load_params(path)  # checksum failure aborts startup
        digest = hashlib.sha256(Path(path).read_bytes()).hexdigest()[:12]
        registry[name] = _LoadedModel(name=name, params=params, version=digest)

    stored_frames: list[dict] = []
    if config.dataset_path:
        stored_frames = load_labeled_frames_json(config.dataset_path)

    pitch = PitchSpec()
    app = FastAPI(title="counter-gnn inference service")

    @app.exception_handler(RequestValidationError)
    async def _validation_handler(request: Request, exc: RequestValidationError):
        err = exc.errors()[0]
        loc = ".".join(str(x) for x in err.get("loc", []) if x != "body")
        return _error(400, "bad_request", err.get("msg", "invalid request"), loc or None)

    @app.exception_handler(DataError)
    async def _data_handler(request: Request, exc: DataError):
        return _error(400, "data_error", str(exc))

    @app.middleware("http")
    async def _limit_size(request: Request, call_next):
        length = request.headers.get("content-length")
        if length and int(length) > config.max_request_bytes:
            return _error(413, "too_large", "request body exceeds size limit")
        return await call_next(request)

    def get_model(name: str) -> _LoadedModel:
        if name not in registry:
            raise KeyError(name)
        return registry[name]

    @app.get("/health")
    async def health():
        return {
            "status": "ok",
            "models": [{"name": m.name, "version": m.version} for m in registry.values()],
        }

    @app.get("/models")
    async def models():
        return {
            "models": [{"name": m.name, "version": m.version} for m in registry.values()]
        }

    @app.get("/frames")
    async def frames(dataset: str = "", offset: int = 0, limit: int = 20):
        offset = max(offset, 0)
        limit = max(min(limit, 200), 0)
        return {
            "total": len(stored_frames),
            "offset": offset,
            "frames": stored_frames[offset : offset + limit],
        }

    @app.post("/predict")
    async def predict_endpoint(req: PredictRequest):
        frame = req.frame.to_frame()
        if req.model == "all":
            preds = [
                {
                    "model": m.name,
                    "probability": frame_probability(m.params, frame, pitch, req.frame.gender),
                    "version": m.version,
                }
                for m in registry.values()
            ]
            return {"predictions": preds}
        try:
            m = get_model(req.model)
        except KeyError:
            return _error(404, "unknown_model", f"no model named {req.model!r}")
        try:
            p = frame_probability(m.params, frame, pitch, req.frame.gender)
        except FeatureWidthError as exc:
            return _error(400, "feature_width_mismatch", str(exc))
        return {"model": m.name, "probability": p, "version": m.version}

    @app.post("/whatif")
    async def whatif_endpoint(req: WhatIfRequest):
        try:
            m = get_model(req.model)
        except KeyError:
            return _error(404, "unknown_model", f"no model named {req.model!r}")
        frame = req.frame.to_frame()
        try:
            result = joint_whatif(
                m.params,
                frame,
                [(r.player_id, r.degrees) for r in req.rotations],
                pitch,
                req.frame.gender,
            )
            body = {
                "model": m.name,
                "version": m.version,
                "base_probability": result.base_probability,
                "new_probability": result.new_probability,
                "delta_percentage_points": result.delta_percentage_points,
            }
            if req.sweep is not None:
                sweep = sweep_rotations(
                    m.params, frame, req.sweep.player_id, req.sweep.step, pitch, req.frame.gender
                )
                body["sweep"] = {
                    "player_id": req.sweep.player_id,
                    "step": req.sweep.step,
                    "points": [{"degrees": d, "probability": p} for d, p in sweep.sweep],
                    "best_degrees": sweep.best_degrees,
                    "best_probability": sweep.new_probability,
                }
            return body
        except FeatureWidthError as exc:
            return _error(400, "feature_width_mismatch", str(exc))

    @app.get("/importance")
    async def importance(model: str = ""):
        if model not in registry:
            return _error(404, "unknown_model", f"no model named {model!r}")
        path = config.importance_paths.get(model)
        if not path or not Path(path).exists():
            return _error(404, "no_importance", f"no importance report for {model!r}")
        return json.loads(Path(path).read_text())

    return app


def frame_to_payload(frame: Frame, label: int | None = None, gender: str = "women") -> dict:
    obj = {
        "frame_id": frame.frame_id,
        "timestamp": frame.timestamp,
        "period": frame.period,
        "attacking_team": frame.attacking_team,
        "gender": gender,
        "ball": {
            "x": frame.ball.position.x,
            "y": frame.ball.position.y,
            "vx": frame.ball.velocity.x,
            "vy": frame.ball.velocity.y,
        },
        "players": [
            {
                "id": p.player_id,
                "team": p.team,
                "x": p.position.x,
                "y": p.position.y,
                "vx": p.velocity.x,
                "vy": p.velocity.y,
                "extrapolated": p.extrapolated,
            }
            for p in frame.players
        ],
    }
    if label is not None:
        obj["label"] = label
    return obj


def load_labeled_frames_json(path: str | Path) -> list[dict]:
    """Read the labeled-frame JSONL emitted by the detect command."""
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out
