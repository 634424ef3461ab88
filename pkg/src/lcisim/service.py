"""HTTP service exposing the experiment commands.

Each endpoint is a thin wrapper: it validates the request body with the
pydantic model, calls the matching run_* function, and returns the
CommandResponse as JSON. Artifacts are returned inline (text or base64),
never written to disk by the server; writing files is the CLI's job.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .pgm import PgmFormatError
from .scene import SceneFormatError
from .schemas import (
    CommandResponse,
    PercentileCurveRequest,
    PixelMapRequest,
    RatioCurveRequest,
    RunOnceRequest,
    SweepRequest,
    VerifyRequest,
)
from . import experiments
from . import __version__

app = FastAPI(title="lcisim", version=__version__)


def _run(fn, req) -> CommandResponse:
    try:
        return fn(req)
    except (SceneFormatError, PgmFormatError, ValueError) as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/verify", response_model=CommandResponse)
def verify(req: VerifyRequest) -> CommandResponse:
    return _run(experiments.run_verify, req)


@app.post("/sweep-resolution", response_model=CommandResponse)
def sweep_resolution(req: SweepRequest) -> CommandResponse:
    return _run(experiments.run_sweep, req)


@app.post("/ratio-curve", response_model=CommandResponse)
def ratio_curve(req: RatioCurveRequest) -> CommandResponse:
    return _run(experiments.run_ratio_curve, req)


@app.post("/pixel-map", response_model=CommandResponse)
def pixel_map(req: PixelMapRequest) -> CommandResponse:
    return _run(experiments.run_pixel_map, req)


@app.post("/percentile-curve", response_model=CommandResponse)
def percentile_curve(req: PercentileCurveRequest) -> CommandResponse:
    return _run(experiments.run_percentile_curve, req)


@app.post("/run-once", response_model=CommandResponse)
def run_once(req: RunOnceRequest) -> CommandResponse:
    return _run(experiments.run_once, req)


def main() -> None:
    import uvicorn

    uvicorn.run(app, host="127.0.0.1", port=8000)


if __name__ == "__main__":
    main()
