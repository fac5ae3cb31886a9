"""HTTP session service for interactive segmentation.

A session holds one uploaded image plus a cumulative scribble map; the
superpixel partition, region graph, and bilateral grid are cached per
session (they depend only on the image and the solver parameters, never on
the scribbles) so interactive re-runs skip reconstruction.  Run with

    uvicorn geoseg.service:app
"""

from __future__ import annotations

import base64
import threading
import time
import uuid
from dataclasses import dataclass, field
from typing import Literal, Optional

import math

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field, field_validator

from .bilateral import BilateralGrid, bistochastize, build_grid
from .errors import (
    CorruptImageError,
    GeosegError,
    MissingSeedsError,
    UnsupportedFormatError,
)
from .imagecore import (
    BACKGROUND,
    FOREGROUND,
    UNLABELED,
    ImageBuffer,
    ScribbleMap,
    YuvImage,
    decode_image,
    encode_mask_png,
    rgb_to_yuv,
)
from .segmenter import SolverConfig, config_from_dict, segment
from .superpixel import SuperpixelGraph, SuperpixelPartition, build_graph, slic

DEFAULT_MAX_PIXELS = 16_000_000
DEFAULT_SESSION_TIMEOUT_S = 30 * 60

_LABEL_CODES = {"fg": FOREGROUND, "bg": BACKGROUND, "erase": UNLABELED}


class Stroke(BaseModel):
    label: Literal["fg", "bg", "erase"]
    points: list[tuple[float, float]] = Field(min_length=1)
    radius: float = Field(gt=0)

    @field_validator("points")
    @classmethod
    def _points_finite(cls, points):
        # json.loads happily admits NaN/Infinity literals.
        for x, y in points:
            if not (math.isfinite(x) and math.isfinite(y)):
                raise ValueError("stroke points must be finite")
        return points

    @field_validator("radius")
    @classmethod
    def _radius_finite(cls, radius):
        if not math.isfinite(radius):
            raise ValueError("radius must be finite")
        return radius


class ScribblePayload(BaseModel):
    strokes: list[Stroke]


def rasterize_stroke(
    labels: np.ndarray, points: list[tuple[float, float]], radius: float, code: int
) -> None:
    """Stamp a disk of the given radius swept along the polyline into labels.

    A pixel is covered when its center lies within `radius` of any segment
    (single-point strokes degenerate to one disk).
    """
    h, w = labels.shape
    pts = [(float(x), float(y)) for x, y in points]
    segments = list(zip(pts, pts[1:])) if len(pts) > 1 else [(pts[0], pts[0])]
    for (x0, y0), (x1, y1) in segments:
        lo_x = max(0, int(np.floor(min(x0, x1) - radius)))
        hi_x = min(w - 1, int(np.ceil(max(x0, x1) + radius)))
        lo_y = max(0, int(np.floor(min(y0, y1) - radius)))
        hi_y = min(h - 1, int(np.ceil(max(y0, y1) + radius)))
        if lo_x > hi_x or lo_y > hi_y:
            continue
        xs = np.arange(lo_x, hi_x + 1, dtype=np.float64)
        ys = np.arange(lo_y, hi_y + 1, dtype=np.float64)
        gx, gy = np.meshgrid(xs, ys)
        dx, dy = x1 - x0, y1 - y0
        seg_len2 = dx * dx + dy * dy
        if seg_len2 == 0.0:
            t = np.zeros_like(gx)
        else:
            t = np.clip(((gx - x0) * dx + (gy - y0) * dy) / seg_len2, 0.0, 1.0)
        px = x0 + t * dx
        py = y0 + t * dy
        covered = (gx - px) ** 2 + (gy - py) ** 2 <= radius * radius
        window = labels[lo_y : hi_y + 1, lo_x : hi_x + 1]
        window[covered] = code


@dataclass
class Session:
    image: ImageBuffer
    yuv: YuvImage
    scribbles: np.ndarray  # mutable cumulative label plane
    created_at: float
    last_used: float
    lock: threading.Lock = field(default_factory=threading.Lock)
    partition: Optional[SuperpixelPartition] = None
    graph: Optional[SuperpixelGraph] = None
    partition_key: Optional[tuple] = None
    grid: Optional[BilateralGrid] = None
    grid_key: Optional[tuple] = None
    last_mask_png: Optional[bytes] = None


class SessionStore:
    def __init__(self, timeout_s: float = DEFAULT_SESSION_TIMEOUT_S) -> None:
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()
        self.timeout_s = timeout_s

    def create(self, image: ImageBuffer) -> str:
        session_id = uuid.uuid4().hex
        now = time.monotonic()
        session = Session(
            image=image,
            yuv=rgb_to_yuv(image),
            scribbles=np.zeros(image.shape, dtype=np.uint8),
            created_at=now,
            last_used=now,
        )
        with self._lock:
            self._purge_locked(now)
            self._sessions[session_id] = session
        return session_id

    def get(self, session_id: str) -> Optional[Session]:
        now = time.monotonic()
        with self._lock:
            self._purge_locked(now)
            session = self._sessions.get(session_id)
            if session is not None:
                session.last_used = now
            return session

    def delete(self, session_id: str) -> bool:
        with self._lock:
            return self._sessions.pop(session_id, None) is not None

    def _purge_locked(self, now: float) -> None:
        expired = [
            sid
            for sid, s in self._sessions.items()
            if now - s.last_used > self.timeout_s
        ]
        for sid in expired:
            del self._sessions[sid]


def _session_pipeline_caches(
    session: Session, cfg: SolverConfig, enable_cache: bool
) -> dict:
    """Build or reuse the scribble-independent pipeline stages."""
    part_key = (cfg.k_target, cfg.compactness, cfg.slic_iters)
    if not (
        enable_cache
        and session.partition is not None
        and session.partition_key == part_key
    ):
        session.partition = slic(
            session.image, cfg.k_target, cfg.compactness, cfg.slic_iters
        )
        session.graph = build_graph(session.partition)
        session.partition_key = part_key
    grid_key = (cfg.grid.sigma_xy, cfg.grid.sigma_l, cfg.grid.sigma_uv)
    if not (
        enable_cache and session.grid is not None and session.grid_key == grid_key
    ):
        session.grid = bistochastize(build_grid(session.yuv, cfg.grid))
        session.grid_key = grid_key
    return {
        "partition": session.partition,
        "graph": session.graph,
        "grid": session.grid,
    }


def create_app(
    max_pixels: int = DEFAULT_MAX_PIXELS,
    session_timeout_s: float = DEFAULT_SESSION_TIMEOUT_S,
    enable_cache: bool = True,
    cors_origins: list[str] | None = None,
) -> FastAPI:
    app = FastAPI(title="geoseg", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=cors_origins if cors_origins is not None else ["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    store = SessionStore(timeout_s=session_timeout_s)
    app.state.store = store

    @app.exception_handler(RequestValidationError)
    async def _validation_handler(request: Request, exc: RequestValidationError):
        # The offending input may itself be unserializable (e.g. NaN), so
        # echo only locations and messages.
        detail = [
            {"loc": [str(part) for part in err.get("loc", ())],
             "msg": str(err.get("msg", ""))}
            for err in exc.errors()
        ]
        return JSONResponse(
            status_code=422,
            content={"error": "ValidationError", "detail": detail},
        )

    def _not_found() -> JSONResponse:
        return JSONResponse(status_code=404, content={"error": "UnknownSession"})

    @app.post("/sessions")
    async def create_session(request: Request):
        form = await request.form()
        upload = form.get("image")
        if upload is None:
            data = await request.body()
        else:
            data = await upload.read()
        try:
            image = decode_image(data)
        except (UnsupportedFormatError, CorruptImageError) as exc:
            return JSONResponse(
                status_code=400,
                content={"error": "UnsupportedFormat", "detail": str(exc)},
            )
        if image.width * image.height > max_pixels:
            return JSONResponse(
                status_code=413,
                content={
                    "error": "TooLarge",
                    "detail": f"image exceeds {max_pixels} pixels",
                },
            )
        session_id = store.create(image)
        return {"id": session_id, "w": image.width, "h": image.height}

    @app.post("/sessions/{session_id}/scribbles")
    def apply_scribbles(session_id: str, payload: ScribblePayload):
        session = store.get(session_id)
        if session is None:
            return _not_found()
        with session.lock:
            for stroke in payload.strokes:
                rasterize_stroke(
                    session.scribbles,
                    stroke.points,
                    stroke.radius,
                    _LABEL_CODES[stroke.label],
                )
            fg = int((session.scribbles == FOREGROUND).sum())
            bg = int((session.scribbles == BACKGROUND).sum())
        return {"fg": fg, "bg": bg}

    @app.post("/sessions/{session_id}/segment")
    def run_segmentation(session_id: str, overrides: dict | None = None):
        session = store.get(session_id)
        if session is None:
            return _not_found()
        with session.lock:
            try:
                cfg = config_from_dict(overrides or {})
            except GeosegError as exc:
                return JSONResponse(
                    status_code=422,
                    content={"error": "InvalidConfig", "detail": str(exc)},
                )
            scribbles = ScribbleMap(session.scribbles.copy())
            if not scribbles.is_valid_annotation():
                return JSONResponse(
                    status_code=409,
                    content={
                        "error": "MissingSeeds",
                        "detail": "need at least one foreground and one background stroke",
                    },
                )
            start = time.perf_counter()
            try:
                caches = _session_pipeline_caches(session, cfg, enable_cache)
                state = segment(session.image, scribbles, cfg, precomputed=caches)
            except MissingSeedsError as exc:
                return JSONResponse(
                    status_code=409,
                    content={"error": "MissingSeeds", "detail": str(exc)},
                )
            except GeosegError as exc:
                return JSONResponse(
                    status_code=500,
                    content={"error": type(exc).__name__, "detail": str(exc)},
                )
            wall_ms = (time.perf_counter() - start) * 1000.0
            mask_png = encode_mask_png(state.mask)
            session.last_mask_png = mask_png
        return {
            "stats": {
                "outer_iters": state.outer_iters,
                "wall_ms": wall_ms,
                "vertex_count": state.grid.vertex_count,
                "K": state.partition.k,
            },
            "mask_png": base64.b64encode(mask_png).decode("ascii"),
        }

    @app.get("/sessions/{session_id}/mask")
    def get_mask(session_id: str):
        session = store.get(session_id)
        if session is None:
            return _not_found()
        with session.lock:
            mask_png = session.last_mask_png
        if mask_png is None:
            return JSONResponse(status_code=404, content={"error": "NoMaskYet"})
        return Response(content=mask_png, media_type="image/png")

    @app.delete("/sessions/{session_id}", status_code=204)
    def delete_session(session_id: str):
        if not store.delete(session_id):
            return _not_found()
        return Response(status_code=204)

    return app


app = create_app()
