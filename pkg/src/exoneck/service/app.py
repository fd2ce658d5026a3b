"""FastAPI application exposing the toolkit over HTTP.

Input problems (bad suit descriptions, unknown axes, unusable tensile
data) map to 422; a diverging simulation maps to 500 with the fault
message.  Endpoints are synchronous on purpose: every operation is
CPU-bound and deterministic, and FastAPI runs them on its threadpool.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..errors import ConfigError, FitError, SimulationFault
from . import handlers
from . import schemas as S


def create_app() -> FastAPI:
    app = FastAPI(title="exoneck", version=handlers.__version__)

    @app.exception_handler(ValueError)
    async def _value_error(request: Request, exc: ValueError):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.exception_handler(ConfigError)
    async def _config_error(request: Request, exc: ConfigError):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.exception_handler(FitError)
    async def _fit_error(request: Request, exc: FitError):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.exception_handler(SimulationFault)
    async def _sim_fault(request: Request, exc: SimulationFault):
        return JSONResponse(status_code=500,
                            content={"detail": f"simulation fault: {exc}"})

    @app.get("/health", response_model=S.HealthResponse)
    def health() -> S.HealthResponse:
        return handlers.health()

    @app.post("/fit", response_model=S.FitResponse)
    def fit(req: S.FitRequest) -> S.FitResponse:
        return handlers.fit(req)

    @app.post("/solve", response_model=S.SolveResponse)
    def solve(req: S.SolveRequest) -> S.SolveResponse:
        return handlers.solve(req)

    @app.post("/rom", response_model=S.RomResponse)
    def rom(req: S.RomRequest) -> S.RomResponse:
        return handlers.rom(req)

    @app.post("/workspace", response_model=S.WorkspaceResponse)
    def workspace(req: S.WorkspaceRequest) -> S.WorkspaceResponse:
        return handlers.workspace(req)

    @app.post("/design", response_model=S.DesignResponse)
    def design(req: S.DesignRequest) -> S.DesignResponse:
        return handlers.design(req)

    @app.post("/track", response_model=S.TrackResponse)
    def track(req: S.TrackRequest) -> S.TrackResponse:
        return handlers.run_track(req)

    return app
