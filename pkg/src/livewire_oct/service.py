"""Interactive session service: line-delimited JSON over a local socket.

Each connection owns one annotation session; requests on a connection
are answered strictly in order, one JSON object per line. The same
handler also backs an optional WebSocket endpoint (one message per text
frame) for browser clients.
"""

import asyncio
import base64
import io
import json
import threading
from pathlib import Path

from PIL import Image
import numpy as np

from . import oct_io
from .annotate import ModeKind, Session
from .config import BoundaryId, PipelineConfig, default_config
from .errors import (
    AllColumnsFlagged,
    BadMagic,
    BothEmpty,
    ConfigError,
    DegenerateLoop,
    DegenerateSegment,
    DimensionMismatch,
    DuplicateAnchorColumn,
    InconsistentHeader,
    InsufficientAnchors,
    InvalidBand,
    InvalidBoundaryForScan,
    InvalidSpec,
    IoFailure,
    LengthMismatch,
    LivewireOctError,
    MissingSlice,
    NoPath,
    NothingToUndo,
    OutOfBounds,
    ScanMismatch,
    TooFewClicks,
    TruncatedFile,
)
from .livewire import Anchor, Boundary

_ERROR_CODES = {
    BadMagic: "bad_magic",
    TruncatedFile: "truncated_file",
    InconsistentHeader: "inconsistent_header",
    MissingSlice: "missing_slice",
    DimensionMismatch: "dimension_mismatch",
    IoFailure: "io_failure",
    ConfigError: "config_error",
    InvalidBand: "invalid_band",
    NoPath: "no_path",
    DuplicateAnchorColumn: "duplicate_anchor_column",
    DegenerateLoop: "degenerate_loop",
    OutOfBounds: "out_of_bounds",
    NothingToUndo: "nothing_to_undo",
    InsufficientAnchors: "insufficient_anchors",
    TooFewClicks: "too_few_clicks",
    InvalidBoundaryForScan: "invalid_boundary_for_scan",
    LengthMismatch: "length_mismatch",
    BothEmpty: "both_empty",
    DegenerateSegment: "degenerate_segment",
    AllColumnsFlagged: "all_columns_flagged",
    InvalidSpec: "invalid_spec",
    ScanMismatch: "scan_mismatch",
}

_VERBS = (
    "load_volume", "get_slice", "set_mode", "add_anchor", "undo_anchor",
    "commit", "splice", "filter_fluids", "export", "get_config", "set_config",
)


class _StepClock:
    """Deterministic clock for reproducible replays: 0, 1, 2, ..."""

    def __init__(self):
        self._t = -1.0

    def __call__(self) -> float:
        self._t += 1.0
        return self._t


def _error_code(exc: Exception) -> str:
    for cls, code in _ERROR_CODES.items():
        if isinstance(exc, cls):
            return code
    return "internal_error"


def _preview_payload(preview) -> dict:
    if preview is None:
        return {"kind": "empty"}
    if isinstance(preview, Boundary):
        return {
            "kind": "boundary",
            "boundary": preview.id.value if preview.id else None,
            "y": [float(v) for v in preview.y],
        }
    return {"kind": "polyline", "nodes": [[int(x), int(y)] for x, y in preview]}


class ProtocolSession:
    """One connection's protocol state machine."""

    def __init__(self, config: PipelineConfig | None = None):
        self.config = config if config is not None else default_config()
        self.volume = None
        self.session: Session | None = None

    # -- framing ----------------------------------------------------------

    def handle_line(self, line: str) -> str:
        try:
            request = json.loads(line)
        except json.JSONDecodeError as exc:
            return json.dumps(
                {"id": None, "ok": False,
                 "error": {"code": "bad_request", "message": f"bad JSON: {exc}"}}
            )
        return json.dumps(self.handle(request))

    def handle(self, request: dict) -> dict:
        req_id = request.get("id") if isinstance(request, dict) else None
        if not isinstance(request, dict) or "verb" not in request:
            return self._err(req_id, "bad_request", "request needs id and verb")
        verb = request["verb"]
        if verb not in _VERBS:
            return self._err(req_id, "unknown_verb", f"unknown verb {verb!r}")
        payload = request.get("payload") or {}
        try:
            result = getattr(self, f"_verb_{verb}")(payload)
        except LivewireOctError as exc:
            return self._err(req_id, _error_code(exc), str(exc))
        except (KeyError, TypeError, ValueError) as exc:
            return self._err(req_id, "bad_request", str(exc))
        return {"id": req_id, "ok": True, "payload": result}

    @staticmethod
    def _err(req_id, code: str, message: str) -> dict:
        return {"id": req_id, "ok": False,
                "error": {"code": code, "message": message}}

    def _require_session(self) -> Session:
        if self.session is None:
            raise ValueError("no volume loaded")
        return self.session

    # -- verbs --------------------------------------------------------------

    def _verb_load_volume(self, payload: dict) -> dict:
        path = Path(payload["path"])
        if path.suffix.lower() == ".vol":
            volume = oct_io.parse_vol_file(path)
        else:
            volume = oct_io.load_portable(path)
        self.volume = volume
        kwargs = {}
        if payload.get("fixed_clock"):
            kwargs["clock"] = _StepClock()
        self.session = Session(
            volume,
            int(payload.get("bscan_index", 0)),
            config=self.config,
            grader_id=str(payload.get("grader_id", "")),
            **kwargs,
        )
        return {
            "volume_id": volume.id,
            "num_bscans": len(volume.bscans),
            "width": volume.width,
            "height": volume.height,
            "scan_kind": volume.scan_kind.value,
            "eye": volume.eye.value,
        }

    def _verb_get_slice(self, payload: dict) -> dict:
        if self.volume is None:
            raise ValueError("no volume loaded")
        index = int(payload.get("index", 0))
        if not (0 <= index < len(self.volume.bscans)):
            raise OutOfBounds(f"no B-scan at index {index}")
        bscan = self.volume.bscans[index]
        gray = np.rint(bscan.pixels * 255.0).astype(np.uint8)
        buf = io.BytesIO()
        Image.fromarray(gray, mode="L").save(buf, format="PNG")
        return {
            "index": index,
            "width": bscan.width,
            "height": bscan.height,
            "png_base64": base64.b64encode(buf.getvalue()).decode("ascii"),
        }

    def _verb_set_mode(self, payload: dict) -> dict:
        session = self._require_session()
        kind = ModeKind(payload["mode"])
        boundary = None
        if payload.get("boundary") is not None:
            boundary = BoundaryId(payload["boundary"])
        session.set_mode(kind, boundary)
        return {"mode": kind.value,
                "boundary": boundary.value if boundary else None}

    def _verb_add_anchor(self, payload: dict) -> dict:
        session = self._require_session()
        preview = session.add_anchor(int(payload["x"]), float(payload["y"]))
        return _preview_payload(preview)

    def _verb_undo_anchor(self, payload: dict) -> dict:
        session = self._require_session()
        return _preview_payload(session.undo_anchor())

    def _verb_commit(self, payload: dict) -> dict:
        session = self._require_session()
        mode = session.mode
        record = session.commit()
        if mode is not None and mode.kind is ModeKind.FLUID:
            region = record.fluids[-1]
            return {"kind": "fluid", "area_px": region.area_px,
                    "n_fluids": len(record.fluids),
                    "contour": [[int(x), int(y)] for x, y in region.contour]}
        boundary = record.boundaries[mode.boundary]
        return {
            "kind": "boundary",
            "boundary": mode.boundary.value,
            "click_count": boundary.click_count,
            "elapsed_seconds": boundary.elapsed_seconds,
            "y": [float(v) for v in boundary.y],
        }

    def _verb_splice(self, payload: dict) -> dict:
        session = self._require_session()
        boundary = session.splice(
            BoundaryId(payload["boundary"]),
            Anchor(x=int(payload["x0"]), y=float(payload["y0"])),
            Anchor(x=int(payload["x1"]), y=float(payload["y1"])),
        )
        return _preview_payload(boundary)

    def _verb_filter_fluids(self, payload: dict) -> dict:
        session = self._require_session()
        kept = session.filter_fluids(
            None if payload.get("min_area_px") is None
            else int(payload["min_area_px"])
        )
        return {"kept": kept}

    def _verb_export(self, payload: dict) -> dict:
        session = self._require_session()
        out_dir = Path(payload["out_dir"])
        written = oct_io.export_record(session.committed, session.bscan, out_dir)
        return {"files": [str(p) for p in written]}

    def _verb_get_config(self, payload: dict) -> dict:
        return {"config": self.config.to_dict()}

    def _verb_set_config(self, payload: dict) -> dict:
        new_config = PipelineConfig.from_dict(payload["config"])
        self.config = new_config
        if self.session is not None:
            self.session.config = new_config
            self.session._cost_cache.clear()
        return {"config": self.config.to_dict()}


# --- TCP transport ----------------------------------------------------------


async def _serve_connection(reader, writer, config: PipelineConfig):
    handler = ProtocolSession(config)
    loop = asyncio.get_running_loop()
    try:
        while True:
            line = await reader.readline()
            if not line:
                break
            text = line.decode("utf-8", "replace").strip()
            if not text:
                continue
            # engine work runs off-loop; per-connection ordering is kept
            # by awaiting each response before reading the next request
            response = await loop.run_in_executor(None, handler.handle_line, text)
            writer.write(response.encode("utf-8") + b"\n")
            await writer.drain()
    except (ConnectionError, asyncio.IncompleteReadError):
        pass
    finally:
        writer.close()


async def start_server(
    host: str, port: int, config: PipelineConfig | None = None
) -> asyncio.AbstractServer:
    config = config if config is not None else default_config()

    async def handle(reader, writer):
        await _serve_connection(reader, writer, config)

    return await asyncio.start_server(handle, host, port)


def serve_forever(host: str, port: int, config: PipelineConfig | None = None):
    """Blocking entry point used by the CLI."""

    async def run():
        server = await start_server(host, port, config)
        addr = server.sockets[0].getsockname()
        print(f"livewire-oct service listening on {addr[0]}:{addr[1]}")
        async with server:
            await server.serve_forever()

    asyncio.run(run())


class ServiceServer:
    """TCP service on a background thread; for tests and embedding."""

    def __init__(self, config: PipelineConfig | None = None,
                 host: str = "127.0.0.1", port: int = 0):
        self.config = config
        self.host = host
        self.port = port
        self._loop = None
        self._server = None
        self._thread = None

    def __enter__(self) -> "ServiceServer":
        started = threading.Event()

        def run():
            self._loop = asyncio.new_event_loop()
            asyncio.set_event_loop(self._loop)
            self._server = self._loop.run_until_complete(
                start_server(self.host, self.port, self.config)
            )
            self.port = self._server.sockets[0].getsockname()[1]
            started.set()
            self._loop.run_forever()

        self._thread = threading.Thread(target=run, daemon=True)
        self._thread.start()
        if not started.wait(timeout=10):
            raise RuntimeError("service failed to start")
        return self

    def __exit__(self, *exc):
        async def shutdown():
            self._server.close()
            await self._server.wait_closed()
            tasks = [t for t in asyncio.all_tasks()
                     if t is not asyncio.current_task()]
            for task in tasks:
                task.cancel()
            await asyncio.gather(*tasks, return_exceptions=True)

        asyncio.run_coroutine_threadsafe(shutdown(), self._loop).result(timeout=10)
        self._loop.call_soon_threadsafe(self._loop.stop)
        self._thread.join(timeout=10)
        self._loop.close()
        return False


# --- WebSocket transport ------------------------------------------------


def create_ws_app(config: PipelineConfig | None = None):
    """FastAPI app exposing the same protocol at ws://<host>/session,
    one JSON message per text frame."""
    from fastapi import FastAPI, WebSocket, WebSocketDisconnect

    app = FastAPI(title="livewire-oct session service")
    cfg = config if config is not None else default_config()

    @app.websocket("/session")
    async def session_endpoint(websocket: WebSocket):
        await websocket.accept()
        handler = ProtocolSession(cfg)
        loop = asyncio.get_running_loop()
        try:
            while True:
                text = await websocket.receive_text()
                response = await loop.run_in_executor(
                    None, handler.handle_line, text
                )
                await websocket.send_text(response)
        except WebSocketDisconnect:
            pass

    return app


def serve_ws_forever(host: str, port: int, config: PipelineConfig | None = None):
    import uvicorn

    uvicorn.run(create_ws_app(config), host=host, port=port, log_level="warning")
