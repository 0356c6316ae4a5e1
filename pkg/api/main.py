# api/main.py
"""
FastAPI server for the sticky toolkit.
"""

import os
import sys
from typing import List

import uvicorn
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

# Add parent directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from analysis.diagnostics import CheckRecord
from analysis.suites import run_suite, suite_names
from errors import StickyError
from kernel import StickyParams, transition_atom, transition_cdf, transition_density
from utils import TOOLKIT_VERSION, get_cors_origins

from .compare import compare_samplers

app = FastAPI(
    title="Sticky Toolkit API",
    description="Sticky reflected Brownian motion: kernels, samplers and diagnostics",
    version=TOOLKIT_VERSION,
)

# Enable CORS for the origins named in the environment
app.add_middleware(
    CORSMiddleware,
    allow_origins=get_cors_origins(),
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


# Request/Response Models
class KernelRequest(BaseModel):
    t: float = Field(gt=0)
    x: float = Field(ge=0)
    beta: float = Field(gt=0)
    y: List[float] = Field(default_factory=list, max_length=10_000)
    printed: bool = False


class KernelResponse(BaseModel):
    atom: float
    y: List[float]
    density: List[float]
    cdf: List[float]


class ValidateRequest(BaseModel):
    suite: str = "kernel-invariants"
    seed: int = Field(default=42, ge=0)


class ValidateResponse(BaseModel):
    suite: str
    seed: int
    version: str
    passed: bool
    checks: List[CheckRecord]


class CompareRequest(BaseModel):
    sampler1: str = "exact"
    sampler2: str = "timechange"
    t: float = Field(default=1.0, gt=0)
    x0: float = Field(default=0.0, ge=0)
    beta: float = Field(default=1.0, gt=0)
    n_paths: int = Field(default=2000, ge=100, le=100_000)
    seed: int = Field(default=42, ge=0)


class SamplerSummary(BaseModel):
    name: str
    atom_frequency: float


class CompareResponse(BaseModel):
    sampler1: SamplerSummary
    sampler2: SamplerSummary
    kernel_atom: float
    ks_statistic: float
    ks_pvalue: float
    atom_z: float
    agree: bool


@app.get("/")
async def root():
    """Health check endpoint."""
    return {"status": "ok", "message": "Sticky Toolkit API is running"}


@app.get("/api/health")
async def health_check():
    """Detailed health check."""
    return {
        "status": "healthy",
        "api_version": TOOLKIT_VERSION,
        "suites": suite_names(),
        "endpoints": [
            {"path": "/", "method": "GET", "description": "Root health check"},
            {"path": "/api/kernel", "method": "POST", "description": "Transition kernel on a y-grid"},
            {"path": "/api/validate", "method": "POST", "description": "Run a diagnostics suite"},
            {"path": "/api/compare", "method": "POST", "description": "Compare two samplers"},
            {"path": "/api/health", "method": "GET", "description": "Detailed health check"},
        ],
    }


@app.post("/api/kernel", response_model=KernelResponse)
def kernel_endpoint(request: KernelRequest):
    """Atom, density and cdf of p_t(x, .) at the requested points."""
    if any(y < 0 for y in request.y):
        raise HTTPException(status_code=400, detail="y values must be non-negative")
    params = StickyParams(beta=request.beta)
    try:
        atom = transition_atom(request.t, request.x, params, printed=request.printed)
        density = [transition_density(request.t, request.x, y, params, printed=request.printed) for y in request.y]
        cdf = [transition_cdf(request.t, request.x, y, params) for y in request.y]
    except StickyError as e:
        raise HTTPException(status_code=400, detail=str(e))
    return {"atom": atom, "y": request.y, "density": density, "cdf": cdf}


@app.post("/api/validate", response_model=ValidateResponse)
def validate_endpoint(request: ValidateRequest):
    """
    Run a diagnostics suite.

    Note: Monte Carlo suites (samplers, ergodic, local-time) take minutes.
    """
    if request.suite not in suite_names():
        raise HTTPException(status_code=400, detail=f"Unknown suite; choose one of {suite_names()}")
    try:
        report = run_suite(request.suite, seed=request.seed)
    except StickyError as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        raise HTTPException(status_code=500, detail=f"Validation failed: {str(e)}")
    return {**report.model_dump(), "passed": report.passed}


@app.post("/api/compare", response_model=CompareResponse)
async def compare_samplers_endpoint(request: CompareRequest):
    """
    Compare two samplers of the same kernel.

    Both ensembles are drawn in parallel; the verdict combines a two-sample
    KS test on the positive parts with a z-test on the atom frequencies.
    """
    if request.sampler1 == request.sampler2:
        raise HTTPException(status_code=400, detail="Please choose two different samplers")
    try:
        return await compare_samplers(
            request.sampler1,
            request.sampler2,
            request.t,
            request.x0,
            request.beta,
            request.n_paths,
            request.seed,
        )
    except StickyError as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        raise HTTPException(status_code=500, detail=f"Comparison failed: {str(e)}")


if __name__ == "__main__":
    print("Starting Sticky Toolkit API server...")
    print("API docs available at: http://localhost:8000/docs")
    uvicorn.run("api.main:app", host="0.0.0.0", port=8000, reload=True)
