import asyncio

import numpy as np
from fastapi import APIRouter

from app.config import Settings
from app.schemas import (
    CanonicalFormModel,
    ClassifyRequest,
    DecomposeRequest,
    OperatorModel,
    ParamsModel,
    StateRequest,
    SweepRequest,
    VerifyRequest,
    WitnessModel,
    WitnessRequest,
)
from app.services import combinatorics, pptstates, skewcanon, sweep
from app.services.verify import SeeSawConfig, certifier, classify_detection
from app.services.witnesses import detection_bound, npt_floor
from app.services.workflows import build_witness, envelope, state_params
from app.utils.errors import ParameterError
from app.utils.logger import logger

router = APIRouter()


@router.post("/witnesses")
async def create_witness(req: WitnessRequest):
    """Construct a witness of the requested kind."""
    u = req.u.to_skew() if req.u else None
    w = await asyncio.to_thread(
        build_witness, req.kind, d=req.d, n=req.n, lambdas=req.lambdas, mu=req.mu,
        d1=req.d1, d2=req.d2, combo=req.combo, u=u,
    )
    return envelope("build-witness", None, {
        "witness": WitnessModel.from_witness(w).model_dump(),
        "trace": float(w.op.trace().real),
        "bound": detection_bound(w),
        "npt_floor": npt_floor(w),
    })


@router.post("/states")
async def create_state(req: StateRequest):
    """Construct a PPT family member, from explicit parameters or by mode."""
    seed = Settings().SEED if req.seed is None else req.seed
    if req.params is not None:
        p = req.params.to_params()
    else:
        p = state_params(
            req.family, req.mode, d=req.d, n=req.n, mu=req.mu,
            d1=req.d1, d2=req.d2, combo=req.combo, a0=req.a0, seed=seed,
        )
    rho = await asyncio.to_thread(pptstates.build_state, p, req.normalize)
    return envelope("build-state", seed, {
        "state": OperatorModel.from_operator(rho).model_dump(),
        "params": ParamsModel.from_params(p).model_dump(),
        "conditions": pptstates.check_conditions(p).to_dict(),
        "normalization": pptstates.normalization(p),
    })


@router.post("/verify")
async def verify_witness(req: VerifyRequest):
    """See-saw certification over product states."""
    w = req.witness.to_witness()
    cfg = SeeSawConfig.from_settings(
        restarts=req.restarts, max_iters=req.max_iters, tol=req.tol, seed=req.seed, field=req.field,
    )
    certified, report = await certifier.is_entanglement_witness(w, cfg)
    return envelope("verify-witness", cfg.seed, {
        "provenance": certified.provenance,
        "report": report.to_dict(),
        "witness": WitnessModel.from_witness(certified).model_dump(),
    })


@router.post("/classify")
async def classify(req: ClassifyRequest):
    w = req.witness.to_witness()
    rho = req.state.to_operator()
    detection = await asyncio.to_thread(classify_detection, w, rho)
    result = detection.to_dict()
    result["provenance"] = w.provenance
    return envelope("classify", None, result)


@router.post("/decompose")
async def decompose(req: DecomposeRequest):
    if req.skew is not None:
        u = req.skew.to_skew()
    elif req.matrix is not None:
        u = skewcanon.validate_skew(np.array(req.matrix, dtype=float))
    else:
        raise ParameterError("decompose needs either 'skew' or 'matrix'.")
    form = await asyncio.to_thread(skewcanon.canonical_decompose, u)
    return envelope("decompose", None, {
        "form": CanonicalFormModel.from_form(form).model_dump(),
        "reassembly_error": float(np.max(np.abs(form.reassemble() - u.entries), initial=0.0)),
    })


@router.post("/sweep")
async def run_sweep(req: SweepRequest):
    seed = Settings().SEED if req.seed is None else req.seed
    d = req.d1 if req.family == "embedded" else req.d
    if d is None:
        raise ParameterError(f"{req.family} sweeps need {'d1' if req.family == 'embedded' else 'd'}.")
    n = req.n
    if n is None and req.family in ("canonical", "embedded"):
        n = d // 2
    job = sweep.SweepSpec(req.family, d, n=n, mu=req.mu, d2=req.d2, combo=req.combo)
    result = await sweep.run_sweep_async(job, draws=req.draws, seed=seed, mode=req.mode)
    logger.info(f"Sweep request served: {len(result.rows)} rows")
    return envelope("sweep", seed, {"rows": result.rows, "summary": result.summary})


@router.get("/enumerate/partitions/{n}")
async def enumerate_partitions(n: int):
    items = [list(p.parts) for p in combinatorics.partitions(n)]
    return envelope("enumerate", None, {"partitions": n, "count": len(items), "items": items})


@router.get("/enumerate/combos/{d2}/{d1}")
async def enumerate_combos(d2: int, d1: int):
    items = [list(c.indices) for c in combinatorics.combinations(d2, d1)]
    return envelope("enumerate", None, {"d2": d2, "d1": d1, "count": len(items), "items": items})
