"""HTTP service exposing the exact engine.

Every computation the command-line client offers is served from this
FastAPI application: lattice enumeration, rate tables, coefficient and
generator matrices, closed-form trajectories, the invariant suite, and
stochastic simulation.  Rate systems travel as rate-file text, tensors as
flat arrays with shape metadata, and exact rationals as ``p/q`` strings,
so every response round-trips losslessly.
"""
from __future__ import annotations

import math
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field, field_validator

from . import __version__
from .algebra import NotInvertibleError
from .dynamics import (
    ProbabilityTensor,
    assemble_omega,
    simulate_partitioning,
)
from .lattice import LatticeKind, enumerate_lattice, format_partition
from .rates import RateFileError, RateSystem, parse_rate_file
from .serialize import (
    frac_str,
    matrix_payload,
    rates_table_rows,
)
from .solver import (
    DegenerateRatesError,
    eta,
    markov_generator_direct,
    solve_universal,
    theta,
)
from .verify import run_verification

app = FastAPI(
    title="recomb",
    version=__version__,
    description="Exact recombination dynamics on partition lattices.",
)


# -- error mapping ---------------------------------------------------------------


@app.exception_handler(RateFileError)
@app.exception_handler(DegenerateRatesError)
@app.exception_handler(NotInvertibleError)
@app.exception_handler(ValueError)
async def _user_error(request: Request, exc: Exception) -> JSONResponse:
    return JSONResponse(status_code=400, content={"detail": str(exc)})


# -- request/response models --------------------------------------------------------


class EnumerateRequest(BaseModel):
    n: int = Field(ge=1)
    lattice: str = "interval"


class EnumerateResponse(BaseModel):
    n: int
    lattice: str
    elements: list[str]
    blocks: list[int]
    covers: list[tuple[int, int]]


class RateFileRequest(BaseModel):
    rate_file: str


class RatesResponse(BaseModel):
    n: int
    lattice: str
    classification: str
    witness: Optional[str]
    rows: list[dict[str, str]]


class MatrixResponse(BaseModel):
    name: str
    labels: list[str]
    rows: list[list[str]]


class TensorPayload(BaseModel):
    shape: list[int] = Field(min_length=1)
    values: list[float]

    def to_tensor(self) -> ProbabilityTensor:
        return ProbabilityTensor.from_flat(tuple(self.shape), self.values)


class SolveRequest(BaseModel):
    rate_file: str
    t_grid: list[float] = Field(min_length=1)
    omega0: Optional[TensorPayload] = None

    @field_validator("t_grid")
    @classmethod
    def _grid_increasing(cls, grid: list[float]) -> list[float]:
        if any(t < 0 for t in grid):
            raise ValueError("t_grid times must be nonnegative")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("t_grid must be strictly increasing")
        return grid


class SolveResponse(BaseModel):
    columns: list[str]
    times: list[float]
    rows: list[list[float]]
    exppoly: dict[str, list[dict]]
    max_degree: int
    omega_shape: Optional[list[int]] = None
    omega_rows: Optional[list[list[float]]] = None


class VerifyRequest(BaseModel):
    rate_file: str
    t_grid: list[float] = Field(default=[0.5, 1.0], min_length=1)
    dt: float = Field(default=1e-3, gt=0)
    seed: int = 0


class SimulateRequest(BaseModel):
    rate_file: str
    t_grid: list[float] = Field(min_length=1)
    samples: int = Field(ge=1)
    seed: int = 0


class SimulateResponse(BaseModel):
    samples: int
    seed: int
    rows: list[dict]
    max_z: float
    within_four_sigma: bool


# -- endpoints -------------------------------------------------------------------------


@app.get("/health")
async def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/api/enumerate", response_model=EnumerateResponse)
async def api_enumerate(req: EnumerateRequest) -> EnumerateResponse:
    kind = LatticeKind(req.lattice)
    lat = enumerate_lattice(kind, req.n)
    return EnumerateResponse(
        n=req.n,
        lattice=kind.value,
        elements=[format_partition(p) for p in lat.elements],
        blocks=[p.size for p in lat.elements],
        covers=sorted(lat.covers()),
    )


def _load(req_text: str) -> RateSystem:
    return parse_rate_file(req_text)


@app.post("/api/rates", response_model=RatesResponse)
async def api_rates(req: RateFileRequest) -> RatesResponse:
    rs = _load(req.rate_file)
    report = rs.classify()
    witness = None
    if report.witness is not None:
        sites, partition = report.witness
        witness = f"({{{','.join(map(str, sites))}}}, {format_partition(partition)})"
    return RatesResponse(
        n=rs.n,
        lattice=rs.lattice.kind.value,
        classification=report.kind.name,
        witness=witness,
        rows=rates_table_rows(rs),
    )


@app.post("/api/theta", response_model=MatrixResponse)
async def api_theta(req: RateFileRequest) -> MatrixResponse:
    rs = _load(req.rate_file)
    table = theta(rs).top
    labels = [format_partition(p) for p in rs.lattice.elements]
    return MatrixResponse(name="theta", **matrix_payload(labels, table.matrix()))


@app.post("/api/eta", response_model=MatrixResponse)
async def api_eta(req: RateFileRequest) -> MatrixResponse:
    rs = _load(req.rate_file)
    inverse = eta(theta(rs))
    labels = [format_partition(p) for p in rs.lattice.elements]
    return MatrixResponse(name="eta", **matrix_payload(labels, inverse.matrix()))


@app.post("/api/q", response_model=MatrixResponse)
async def api_q(req: RateFileRequest) -> MatrixResponse:
    rs = _load(req.rate_file)
    generator = markov_generator_direct(rs)
    labels = [format_partition(p) for p in rs.lattice.elements]
    return MatrixResponse(name="q", **matrix_payload(labels, generator.matrix()))


@app.post("/api/solve", response_model=SolveResponse)
async def api_solve(req: SolveRequest) -> SolveResponse:
    rs = _load(req.rate_file)
    sol = solve_universal(rs)
    columns = [format_partition(p) for p in rs.lattice.elements]
    rows = [[float(v) for v in sol.vector(t)] for t in req.t_grid]
    omega_shape = omega_rows = None
    if req.omega0 is not None:
        omega0 = req.omega0.to_tensor()
        if omega0.n != rs.n:
            raise ValueError(
                f"tensor has {omega0.n} sites but the rate system has {rs.n}"
            )
        omega_shape = list(omega0.shape)
        omega_rows = [
            assemble_omega(sol, omega0, t).flat() for t in req.t_grid
        ]
    return SolveResponse(
        columns=columns,
        times=list(req.t_grid),
        rows=rows,
        exppoly=sol.payload(),
        max_degree=sol.max_degree(),
        omega_shape=omega_shape,
        omega_rows=omega_rows,
    )


@app.post("/api/verify")
async def api_verify(req: VerifyRequest) -> dict:
    rs = _load(req.rate_file)
    report = run_verification(rs, t_grid=req.t_grid, dt=req.dt, seed=req.seed)
    return report.payload()


@app.post("/api/simulate", response_model=SimulateResponse)
async def api_simulate(req: SimulateRequest) -> SimulateResponse:
    rs = _load(req.rate_file)
    generator = markov_generator_direct(rs)
    sol = solve_universal(rs)
    rows: list[dict] = []
    max_z = 0.0
    for t in req.t_grid:
        empirical = simulate_partitioning(generator, t, req.samples, req.seed)
        analytic = sol.evaluate_all(t)
        for p in rs.lattice.elements:
            prob = float(analytic[p])
            freq = float(empirical[p])
            sigma = math.sqrt(max(prob * (1.0 - prob), 0.0) / req.samples)
            if sigma > 0:
                z = abs(freq - prob) / sigma
            else:
                # a zero-variance state must match exactly; flag it hard if not
                z = 0.0 if abs(freq - prob) < 1e-15 else 1e18
            max_z = max(max_z, z)
            rows.append({
                "t": t,
                "partition": format_partition(p),
                "empirical": freq,
                "analytic": prob,
                "sigma": sigma,
                "z": z,
            })
    return SimulateResponse(
        samples=req.samples,
        seed=req.seed,
        rows=rows,
        max_z=max_z,
        within_four_sigma=max_z <= 4.0,
    )
