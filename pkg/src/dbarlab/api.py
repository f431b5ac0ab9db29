"""HTTP service over the same operations the CLI runs.

Start with `uvicorn dbarlab.api:app`.  Every endpoint takes a RunConfig (plus its own
parameters) and returns the report payload; failed checks still return 200 with
"passed": false, configuration errors return 422 and computation errors 409.
"""

from __future__ import annotations

from typing import Literal

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__, service
from .errors import ConfigError, DbarLabError

app = FastAPI(title="dbarlab", version=__version__)


class PointRequest(BaseModel):
    config: service.RunConfig = Field(default_factory=service.RunConfig)
    point: str = Field("0,0,1,0", description="x1,y1,x2,y2")


class DivisionRequest(BaseModel):
    config: service.RunConfig = Field(default_factory=service.RunConfig)
    q: str = "0,0,2,0"
    max_degree: int = Field(12, ge=0, le=16)


class SolveRequest(BaseModel):
    config: service.RunConfig = Field(default_factory=service.RunConfig)
    form: Literal["dzb1", "z1dzb1", "mixed", "zb1dzb1", "zb2dzb1"] = "dzb1"
    levels: int = Field(3, ge=1, le=5)
    points: int = Field(8, ge=1, le=64)


class NormRequest(BaseModel):
    config: service.RunConfig = Field(default_factory=service.RunConfig)
    definition: Literal["hz", "tl"] = "hz"
    s: float = 0.5
    sigma: float = 0.7


class ExtendRequest(BaseModel):
    config: service.RunConfig = Field(default_factory=service.RunConfig)
    domain: Literal["halfplane", "graph"] = "halfplane"
    J: int = Field(12, ge=0, le=16)
    M: int = Field(6, ge=1, le=10)


class VerifyRequest(BaseModel):
    config: service.RunConfig = Field(default_factory=service.RunConfig)
    lemma: Literal["st-int", "shell-int", "h11", "gain"]
    alpha: float = 0.0
    beta: float = 1.0
    m: int = 2
    delta_min: float | None = None
    delta_max: float | None = None


class SuiteRequest(BaseModel):
    config: service.RunConfig = Field(default_factory=service.RunConfig)
    quick: bool = True
    only: list[int] | None = None


def _run(fn, *args) -> dict:
    try:
        return fn(*args).payload()
    except ConfigError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    except DbarLabError as exc:
        raise HTTPException(status_code=409, detail=f"{type(exc).__name__}: {exc}") from exc


def _point(text: str):
    try:
        return service.parse_point(text)
    except ConfigError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/geom/type")
def geom_type(req: PointRequest) -> dict:
    return _run(service.geom_type, req.config, _point(req.point))


@app.post("/geom/tau")
def geom_tau(req: PointRequest) -> dict:
    return _run(service.geom_tau, req.config, _point(req.point))


@app.post("/normalize")
def normalize(req: PointRequest) -> dict:
    return _run(service.normalize, req.config, _point(req.point))


@app.post("/bump")
def bump(req: PointRequest) -> dict:
    return _run(service.bump, req.config, _point(req.point))


@app.post("/division")
def division(req: DivisionRequest) -> dict:
    return _run(service.division, req.config, _point(req.q), range(0, req.max_degree + 1, 2))


@app.post("/leray")
def leray(req: PointRequest) -> dict:
    return _run(service.leray, req.config, _point(req.point))


@app.post("/solve")
def solve(req: SolveRequest) -> dict:
    return _run(service.solve, req.config, req.form, req.levels, req.points)


@app.post("/spaces/norm")
def spaces_norm(req: NormRequest) -> dict:
    return _run(service.spaces_norm, req.config, req.definition, req.s, req.sigma)


@app.post("/spaces/extend")
def spaces_extend(req: ExtendRequest) -> dict:
    return _run(service.spaces_extend, req.config, req.domain, req.J, req.M)


@app.post("/verify")
def verify(req: VerifyRequest) -> dict:
    return _run(service.verify, req.config, req.lemma, req.alpha, req.beta, req.m, req.delta_min, req.delta_max)


@app.post("/suite")
def suite(req: SuiteRequest) -> dict:
    return _run(service.suite, req.config, req.quick, req.only)
