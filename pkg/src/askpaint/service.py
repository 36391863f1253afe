"""Interactive steering over HTTP.

A session wraps one episode: upload an image, get the zero-hint
colorization and the model's first question, then answer questions one at
a time. An answer is either a custom display color (used verbatim after
conversion to model space) or delegated to the oracle against an uploaded
ground truth. Each answer advances the episode one forward pass.

Endpoints
  POST   /sessions                  create, runs forward pass 0
  POST   /sessions/{id}/answers     answer pending question, advance
  GET    /sessions/{id}             full history (``?include_arrays=1``
                                    adds float arrays for exact replay)
  DELETE /sessions/{id}             close
  GET    /checkpoints               available models
  GET    /blobs/{sha}               content-addressed PNG payloads
  GET    /healthz                   liveness

Images travel base64-embedded in JSON and are also registered in the blob
store under their SHA-256. Sessions are in-memory, serialized per session
by a lock, and reaped after a configurable idle TTL.
"""

from __future__ import annotations

import base64
import hashlib
import io
import json
import os
import secrets
import threading
import time
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np
import torch
from fastapi import FastAPI, HTTPException, Response
from PIL import Image
from pydantic import BaseModel

from .checkpoint import Checkpoint
from .colorspace import ColorSpaceSpec
from .data import _center_crop_resize
from .episode import EpisodeState, advance, init_episode
from .errors import ValidationError
from .model import ColorizerNet
from .oracle import NoiseConfig, compute_answer, perturb_answer
from .viz import heatmap_to_u8, png_bytes


@dataclass
class ServiceConfig:
    checkpoint_dir: Path = Path("checkpoints")
    port: int = 8000
    session_ttl_seconds: float = 1800.0
    reap_interval_seconds: float = 10.0
    static_dir: Path | None = None
    debug_noise_sigma: float = 0.0  # >0 re-enables answer noise (debugging only)

    @classmethod
    def load(cls, config_path: str | os.PathLike | None = None, env: dict | None = None) -> "ServiceConfig":
        """JSON file settings with environment-variable overrides."""
        env = dict(os.environ if env is None else env)
        raw: dict = {}
        if config_path is not None:
            with open(config_path) as fh:
                raw = json.load(fh)
        cfg = cls(
            checkpoint_dir=Path(raw.get("checkpoint_dir", "checkpoints")),
            port=int(raw.get("port", 8000)),
            session_ttl_seconds=float(raw.get("session_ttl_seconds", 1800.0)),
            reap_interval_seconds=float(raw.get("reap_interval_seconds", 10.0)),
            static_dir=Path(raw["static_dir"]) if raw.get("static_dir") else None,
            debug_noise_sigma=float(raw.get("debug_noise_sigma", 0.0)),
        )
        if env.get("ASKPAINT_CHECKPOINT_DIR"):
            cfg.checkpoint_dir = Path(env["ASKPAINT_CHECKPOINT_DIR"])
        if env.get("ASKPAINT_PORT"):
            cfg.port = int(env["ASKPAINT_PORT"])
        if env.get("ASKPAINT_SESSION_TTL"):
            cfg.session_ttl_seconds = float(env["ASKPAINT_SESSION_TTL"])
        if env.get("ASKPAINT_STATIC_DIR"):
            cfg.static_dir = Path(env["ASKPAINT_STATIC_DIR"])
        return cfg


class CreateSessionRequest(BaseModel):
    image_png_base64: str
    color_space: str | None = None
    max_answers: int | None = None
    checkpoint_id: str | None = None
    ground_truth_png_base64: str | None = None
    allow_resize: bool = False


class AnswerSubmission(BaseModel):
    mode: str  # "custom" | "oracle"
    color: list[int] | None = None
    ground_truth_png_base64: str | None = None


class BlobStore:
    """Refcounted content-addressed store of PNG payloads."""

    def __init__(self):
        self._lock = threading.Lock()
        self._data: dict[str, bytes] = {}
        self._refs: dict[str, int] = {}

    def put(self, payload: bytes) -> str:
        sha = hashlib.sha256(payload).hexdigest()
        with self._lock:
            self._data[sha] = payload
            self._refs[sha] = self._refs.get(sha, 0) + 1
        return sha

    def get(self, sha: str) -> bytes | None:
        with self._lock:
            return self._data.get(sha)

    def release(self, shas: list[str]) -> None:
        with self._lock:
            for sha in shas:
                n = self._refs.get(sha, 0) - 1
                if n <= 0:
                    self._refs.pop(sha, None)
                    self._data.pop(sha, None)
                else:
                    self._refs[sha] = n


@dataclass
class Session:
    session_id: str
    checkpoint_id: str
    color_space: ColorSpaceSpec
    episode: EpisodeState
    max_answers: int
    created_at: float
    last_activity: float
    status: str = "active"  # active | exhausted | closed
    ground_truth_y: torch.Tensor | None = None
    answers_meta: list[dict] = dc_field(default_factory=list)
    blob_hashes: list[str] = dc_field(default_factory=list)
    lock: threading.Lock = dc_field(default_factory=threading.Lock)

    def touch(self):
        self.last_activity = time.monotonic()
        if self.episode.exhausted and self.status == "active":
            self.status = "exhausted"


class SteeringService:
    """Session registry, checkpoint cache, and the episode-driving logic."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.blobs = BlobStore()
        self._sessions: dict[str, Session] = {}
        self._store_lock = threading.Lock()
        self._models: dict[str, tuple[ColorizerNet, ColorSpaceSpec, dict]] = {}
        self._models_lock = threading.Lock()
        self._stop = threading.Event()
        self._reaper: threading.Thread | None = None

    # -- checkpoints -------------------------------------------------------

    def list_checkpoint_ids(self) -> list[str]:
        if not self.config.checkpoint_dir.is_dir():
            return []
        return sorted(p.stem for p in self.config.checkpoint_dir.glob("*.ckpt"))

    def load_model(self, checkpoint_id: str) -> tuple[ColorizerNet, ColorSpaceSpec, dict]:
        with self._models_lock:
            if checkpoint_id in self._models:
                return self._models[checkpoint_id]
            path = self.config.checkpoint_dir / f"{checkpoint_id}.ckpt"
            if not path.exists():
                raise HTTPException(404, f"unknown checkpoint {checkpoint_id!r}")
            ckpt = Checkpoint.load(path)
            model = ckpt.to_model()
            model.eval()
            mode = ckpt.train_config_snapshot.get("color_space")
            if mode is None:
                mode = "lab_ab" if ckpt.model_config.color_channels == 2 else "rgb"
            meta = {
                "id": checkpoint_id,
                "image_size": list(ckpt.model_config.image_size),
                "color_channels": ckpt.model_config.color_channels,
                "color_space": mode,
                "step_count": ckpt.step_count,
                "trained_max_answers_t": ckpt.train_config_snapshot.get("max_answers_t"),
            }
            entry = (model, ColorSpaceSpec(mode), meta)
            self._models[checkpoint_id] = entry
            return entry

    # -- session registry --------------------------------------------------

    def get_session(self, session_id: str) -> Session:
        with self._store_lock:
            session = self._sessions.get(session_id)
        if session is None or session.status == "closed":
            raise HTTPException(404, f"unknown session {session_id!r}")
        return session

    def close_session(self, session_id: str) -> None:
        with self._store_lock:
            session = self._sessions.pop(session_id, None)
        if session is None:
            raise HTTPException(404, f"unknown session {session_id!r}")
        session.status = "closed"
        self.blobs.release(session.blob_hashes)

    def reap_idle(self) -> int:
        """Drop sessions idle beyond the TTL; never blocks on a busy session."""
        now = time.monotonic()
        reaped = 0
        with self._store_lock:
            candidates = list(self._sessions.items())
        for sid, session in candidates:
            if not session.lock.acquire(blocking=False):
                continue
            try:
                if now - session.last_activity > self.config.session_ttl_seconds:
                    with self._store_lock:
                        self._sessions.pop(sid, None)
                    session.status = "closed"
                    self.blobs.release(session.blob_hashes)
                    reaped += 1
            finally:
                session.lock.release()
        return reaped

    def start_reaper(self):
        if self._reaper is not None:
            return
        def loop():
            while not self._stop.wait(self.config.reap_interval_seconds):
                self.reap_idle()
        self._reaper = threading.Thread(target=loop, daemon=True)
        self._reaper.start()

    def stop_reaper(self):
        self._stop.set()
        if self._reaper is not None:
            self._reaper.join(timeout=5)
            self._reaper = None

    # -- payload helpers ----------------------------------------------------

    def _decode_png(self, b64: str, field: str) -> np.ndarray:
        try:
            raw = base64.b64decode(b64, validate=True)
            img = Image.open(io.BytesIO(raw))
            img.load()
        except Exception as exc:
            raise HTTPException(400, f"could not decode {field} as PNG: {exc}") from exc
        return np.asarray(img.convert("RGB"), dtype=np.uint8)

    def _fit_image(self, arr: np.ndarray, size: tuple[int, int], allow_resize: bool, field: str) -> np.ndarray:
        if arr.shape[:2] == tuple(size):
            return arr
        if not allow_resize:
            raise HTTPException(
                422,
                f"{field} is {arr.shape[1]}x{arr.shape[0]} but the checkpoint expects "
                f"{size[1]}x{size[0]}; pass allow_resize to crop/scale",
            )
        img = _center_crop_resize(Image.fromarray(arr), tuple(size))
        return np.asarray(img, dtype=np.uint8)

    def _image_payload(self, session: Session, array_u8: np.ndarray) -> dict:
        payload = png_bytes(array_u8)
        sha = self.blobs.put(payload)
        session.blob_hashes.append(sha)
        return {
            "png_base64": base64.b64encode(payload).decode("ascii"),
            "blob": sha,
        }

    def _prediction_payload(self, session: Session) -> dict:
        recon = session.color_space.from_model_space(
            session.episode.current_prediction, session.episode.input_x
        )
        return self._image_payload(session, recon)

    def _question_payload(self, session: Session) -> dict:
        q = session.episode.current_question
        out = self._image_payload(session, heatmap_to_u8(q))
        out["values"] = [[float(v) for v in row] for row in q.tolist()]
        return out

    # -- operations ----------------------------------------------------------

    def create_session(self, req: CreateSessionRequest) -> dict:
        checkpoint_ids = self.list_checkpoint_ids()
        checkpoint_id = req.checkpoint_id or (checkpoint_ids[0] if checkpoint_ids else None)
        if checkpoint_id is None:
            raise HTTPException(404, "no checkpoints available")
        model, default_space, meta = self.load_model(checkpoint_id)
        if req.color_space is not None:
            try:
                color_space = ColorSpaceSpec(req.color_space)
            except ValidationError as exc:
                raise HTTPException(422, str(exc)) from exc
            if color_space.color_channels != model.config.color_channels:
                raise HTTPException(
                    422,
                    f"color space {req.color_space!r} needs {color_space.color_channels} "
                    f"channels, checkpoint has {model.config.color_channels}",
                )
        else:
            color_space = default_space
        trained_t = meta.get("trained_max_answers_t")
        default_answers = (trained_t - 1) if trained_t else 3
        max_answers = default_answers if req.max_answers is None else req.max_answers
        if max_answers < 0:
            raise HTTPException(422, "max_answers must be >= 0")

        arr = self._decode_png(req.image_png_base64, "image")
        arr = self._fit_image(arr, model.config.image_size, req.allow_resize, "image")
        input_x = color_space.input_from_image(arr)
        ground_truth = None
        if req.ground_truth_png_base64 is not None:
            gt_arr = self._decode_png(req.ground_truth_png_base64, "ground_truth")
            gt_arr = self._fit_image(gt_arr, model.config.image_size, req.allow_resize, "ground_truth")
            _, ground_truth = color_space.to_model_space(gt_arr)

        episode = init_episode(input_x, max_answers, color_channels=model.config.color_channels)
        with torch.no_grad():
            episode = advance(episode, model)
        session = Session(
            session_id=secrets.token_hex(16),
            checkpoint_id=checkpoint_id,
            color_space=color_space,
            episode=episode,
            max_answers=max_answers,
            created_at=time.monotonic(),
            last_activity=time.monotonic(),
            ground_truth_y=ground_truth,
        )
        session.touch()
        with self._store_lock:
            self._sessions[session.session_id] = session
        return {
            "session_id": session.session_id,
            "checkpoint_id": checkpoint_id,
            "color_space": color_space.mode,
            "max_answers": max_answers,
            "step": session.episode.step_t,
            "exhausted": session.episode.exhausted,
            "prediction": self._prediction_payload(session),
            "question": self._question_payload(session),
        }

    def submit_answer(self, session_id: str, submission: AnswerSubmission) -> dict:
        session = self.get_session(session_id)
        with session.lock:
            if session.status != "active" or session.episode.exhausted:
                raise HTTPException(409, f"session is {session.status}; no more answers accepted")
            model, _, _ = self.load_model(session.checkpoint_id)
            if submission.mode == "custom":
                if submission.color is None:
                    raise HTTPException(422, "custom mode requires a color")
                try:
                    answer = session.color_space.answer_from_display_color(submission.color)
                except ValidationError as exc:
                    raise HTTPException(422, str(exc)) from exc
            elif submission.mode == "oracle":
                ground_truth = session.ground_truth_y
                if submission.ground_truth_png_base64 is not None:
                    gt_arr = self._decode_png(submission.ground_truth_png_base64, "ground_truth")
                    gt_arr = self._fit_image(
                        gt_arr, model.config.image_size, allow_resize=True, field="ground_truth"
                    )
                    _, ground_truth = session.color_space.to_model_space(gt_arr)
                if ground_truth is None:
                    raise HTTPException(422, "oracle mode requires a ground-truth image")
                answer = compute_answer(session.episode.current_question, ground_truth)
                if self.config.debug_noise_sigma > 0:
                    answer = perturb_answer(
                        answer, NoiseConfig(enabled=True, sigma=self.config.debug_noise_sigma)
                    )
            else:
                raise HTTPException(422, f"unknown answer mode {submission.mode!r}")
            with torch.no_grad():
                session.episode = advance(session.episode, model, answer)
            session.answers_meta.append(
                {
                    "mode": submission.mode,
                    "model_space": [float(v) for v in answer.tolist()],
                    "display_color": list(session.color_space.display_color_from_answer(answer)),
                }
            )
            session.touch()
            exhausted = session.episode.exhausted
            out = {
                "session_id": session.session_id,
                "step": session.episode.step_t,
                "exhausted": exhausted,
                "answer": session.answers_meta[-1],
                "prediction": self._prediction_payload(session),
                "question": None if exhausted else self._question_payload(session),
            }
            return out

    def session_detail(self, session_id: str, include_arrays: bool = False) -> dict:
        session = self.get_session(session_id)
        with session.lock:
            session.touch()
            episode = session.episode
            predictions = []
            questions = []
            for pred in episode.prediction_history:
                recon = session.color_space.from_model_space(pred, episode.input_x)
                predictions.append(self._image_payload(session, recon))
            for q in episode.question_history:
                questions.append(self._image_payload(session, heatmap_to_u8(q)))
            out = {
                "session_id": session.session_id,
                "checkpoint_id": session.checkpoint_id,
                "color_space": session.color_space.mode,
                "status": session.status,
                "step": episode.step_t,
                "max_answers": session.max_answers,
                "exhausted": episode.exhausted,
                "history": {
                    "predictions": predictions,
                    "questions": questions,
                    "answers": list(session.answers_meta),
                },
            }
            if include_arrays:
                out["arrays"] = {
                    "input_x": episode.input_x.tolist(),
                    "predictions": [p.tolist() for p in episode.prediction_history],
                    "questions": [q.tolist() for q in episode.question_history],
                    "answers": [a.tolist() for a in episode.answer_history],
                }
            return out


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    from contextlib import asynccontextmanager

    config = config or ServiceConfig.load()
    service = SteeringService(config)

    @asynccontextmanager
    async def lifespan(_app):
        service.start_reaper()
        yield
        service.stop_reaper()

    app = FastAPI(title="askpaint steering service", lifespan=lifespan)
    app.state.service = service

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.get("/checkpoints")
    def checkpoints():
        out = []
        for cid in service.list_checkpoint_ids():
            _, _, meta = service.load_model(cid)
            out.append(meta)
        return {"checkpoints": out}

    @app.post("/sessions", status_code=201)
    def create_session(req: CreateSessionRequest):
        return service.create_session(req)

    @app.post("/sessions/{session_id}/answers")
    def submit_answer(session_id: str, submission: AnswerSubmission):
        return service.submit_answer(session_id, submission)

    @app.get("/sessions/{session_id}")
    def session_detail(session_id: str, include_arrays: bool = False):
        return service.session_detail(session_id, include_arrays=include_arrays)

    @app.delete("/sessions/{session_id}")
    def close_session(session_id: str):
        service.close_session(session_id)
        return {"closed": True, "session_id": session_id}

    @app.get("/blobs/{sha}")
    def get_blob(sha: str):
        payload = service.blobs.get(sha)
        if payload is None:
            raise HTTPException(404, "unknown blob")
        return Response(content=payload, media_type="image/png")

    if config.static_dir is not None and Path(config.static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(config.static_dir), html=True), name="ui")

    return app
