"""HTTP service around the three parties. Binary wire messages travel base64-encoded."""
from __future__ import annotations

import base64
import math

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field, field_validator

from . import pipeline as pl
from .estimator import estimate_published
from .usecases import DataError, canonical

app = FastAPI(title="crisp", version="1.0")


def _b64(data: bytes) -> str:
    return base64.b64encode(data).decode()


def _unb64(s: str) -> bytes:
    try:
        return base64.b64decode(s, validate=True)
    except ValueError:
        raise HTTPException(422, "invalid base64 payload") from None


class RunParams(BaseModel):
    use_case: str = "smart"
    kappa: int = Field(128, ge=8, le=256)
    iterations: int | None = Field(None, ge=1)
    ric: float = Field(1.0, gt=0, le=1)
    batch: int = Field(1, ge=1, le=16)
    seed: int | None = None

    @field_validator("use_case")
    @classmethod
    def _known(cls, v):
        try:
            return canonical(v)
        except DataError as e:
            raise ValueError(str(e)) from None

    def agents(self):
        try:
            return pl.setup(self.use_case, self.kappa, self.iterations, self.ric, self.batch)
        except ValueError as e:
            raise HTTPException(422, str(e)) from None


class CollectReq(RunParams):
    n_points: int | None = Field(None, ge=1)


class CollectResp(BaseModel):
    m0: str
    n_msgs: int
    expected: float


class TransferReq(RunParams):
    m0: str
    tamper: str = "none"


class TransferResp(BaseModel):
    bundle: str
    proof_bytes: int
    zk_proof_bytes: int
    bound_proof_bytes: int
    t_prove_ms: float
    n_and: int


class BundleReq(RunParams):
    bundle: str


class VerifyResp(BaseModel):
    accepted: bool
    reasons: list[str]
    t_verify_ms: float


class ComputeResp(BaseModel):
    ct: str


class ReleaseReq(RunParams):
    ct: str
    tamper: str = "none"


class ReleaseResp(BaseModel):
    accepted: bool
    result: float | None
    trace: list[str]


class EstimateReq(BaseModel):
    use_case: str = "smart"
    n_points: int | None = Field(None, ge=1)
    ric: float = Field(1.0, gt=0, le=1)
    batch: int = Field(1, ge=1, le=16)
    kappa: int = Field(128, ge=8, le=256)
    preprocessing: bool = False


class PipelineReq(RunParams):
    n_points: int | None = Field(None, ge=1)
    tamper: str = "none"


def _tamper(t: str) -> str:
    if t not in pl.TAMPER_MODES:
        raise HTTPException(422, f"tamper must be one of {pl.TAMPER_MODES}")
    return t


@app.get("/health")
def health():
    return {"status": "ok"}


@app.post("/collect", response_model=CollectResp)
def collect(req: CollectReq):
    ag = req.agents()
    try:
        m0, expected = pl.collect(ag, req.n_points, req.seed)
    except (DataError, ValueError) as e:
        raise HTTPException(422, str(e)) from None
    return CollectResp(m0=_b64(m0), n_msgs=len(pl.unpack_messages(m0)), expected=expected)


@app.post("/transfer", response_model=TransferResp)
def transfer(req: TransferReq):
    ag = req.agents()
    try:
        bundle, st = pl.transfer(ag, _unb64(req.m0), req.seed, _tamper(req.tamper))
    except ValueError as e:
        raise HTTPException(422, str(e)) from None
    return TransferResp(bundle=_b64(bundle), proof_bytes=st["zk_proof_bytes"] + st["bound_proof_bytes"],
                        zk_proof_bytes=st["zk_proof_bytes"], bound_proof_bytes=st["bound_proof_bytes"],
                        t_prove_ms=st["t_prove_ms"], n_and=st.get("n_and", 0))


@app.post("/verify", response_model=VerifyResp)
def verify(req: BundleReq):
    ok, reasons, ms = pl.verify(req.agents(), _unb64(req.bundle))
    return VerifyResp(accepted=ok, reasons=reasons, t_verify_ms=ms)


@app.post("/compute", response_model=ComputeResp)
def compute(req: BundleReq):
    ag = req.agents()
    blob = _unb64(req.bundle)
    ok, reasons, _ = pl.verify(ag, blob)
    if not ok:
        raise HTTPException(409, "bundle rejected: " + ", ".join(reasons))
    return ComputeResp(ct=_b64(pl.compute(ag, blob)))


@app.post("/release", response_model=ReleaseResp)
def release(req: ReleaseReq):
    try:
        res, trace = pl.release(req.agents(), _unb64(req.ct), req.seed, _tamper(req.tamper))
    except ValueError as e:
        raise HTTPException(422, str(e)) from None
    return ReleaseResp(accepted=res is not None, result=res, trace=trace)


@app.post("/estimate")
def estimate(req: EstimateReq):
    try:
        est = estimate_published(req.use_case, req.n_points, req.ric, req.batch, req.preprocessing, req.kappa)
    except (DataError, ValueError) as e:
        raise HTTPException(422, str(e)) from None
    return est.as_dict()


@app.post("/pipeline")
def pipeline(req: PipelineReq):
    try:
        rep = pl.run_pipeline(req.use_case, req.n_points, req.kappa, req.iterations, req.ric, req.batch,
                              _tamper(req.tamper), req.seed)
    except (DataError, ValueError) as e:
        raise HTTPException(422, str(e)) from None
    d = rep.as_dict()
    if d["mean_abs_rel_err"] is not None and not math.isfinite(d["mean_abs_rel_err"]):
        d["mean_abs_rel_err"] = None
    return d
