"""
Request-level helpers shared by the CLI and the HTTP routes.
"""
from typing import Any, Dict, Optional, Sequence

import numpy as np

from app import __version__
from app.config import Settings
from app.services import pptstates, witnesses
from app.services.pptstates import PptFamilyParams
from app.services.skewcanon import SkewMatrix
from app.services.witnesses import Witness
from app.utils.errors import ParameterError

TOOL = "witnesskit"
WITNESS_KINDS = ("canonical", "opc", "partition", "embedded", "extended", "from-U")
STATE_FAMILIES = ("canonical", "partition", "embedded", "extended")
STATE_MODES = ("saturating", "sampled", "npt")


def _require(value, name: str, kind: str):
    if value is None:
        raise ParameterError(f"{kind} needs --{name}.")
    return value


def build_witness(
    kind: str,
    d: Optional[int] = None,
    n: Optional[int] = None,
    lambdas: Optional[Sequence[float]] = None,
    mu: Optional[Sequence[int]] = None,
    d1: Optional[int] = None,
    d2: Optional[int] = None,
    combo: Optional[Sequence[int]] = None,
    u: Optional[SkewMatrix] = None,
) -> Witness:
    if kind == "canonical":
        d = _require(d, "d", kind)
        if lambdas is not None:
            return witnesses.canonical_witness(d, lambdas)
        return witnesses.canonical_witness_unit(d, d // 2 if n is None else n)
    if kind == "opc":
        d = _require(d, "d", kind)
        return witnesses.opc_witness(d, d // 2 if n is None else n)
    if kind == "partition":
        return witnesses.partition_witness(_require(d, "d", kind), _require(mu, "mu", kind))
    if kind == "embedded":
        d1 = _require(d1, "d1", kind)
        d2 = _require(d2, "d2", kind)
        combo = _require(combo, "combo", kind)
        if lambdas is None:
            lambdas = [1.0] * (d1 // 2 if n is None else n)
        return witnesses.embedded_witness(d1, d2, combo, lambdas)
    if kind == "extended":
        return witnesses.extended_witness(_require(d, "d", kind))
    if kind == "from-U":
        return witnesses.witness_from_U(_require(u, "u", kind))
    raise ParameterError(f"Unknown witness kind {kind!r}; expected one of {WITNESS_KINDS}.")


def state_params(
    family: str,
    mode: str = "saturating",
    d: Optional[int] = None,
    n: Optional[int] = None,
    mu: Optional[Sequence[int]] = None,
    d1: Optional[int] = None,
    d2: Optional[int] = None,
    combo: Optional[Sequence[int]] = None,
    a0: float = 1.0,
    seed: int = 0,
) -> PptFamilyParams:
    """Family parameters for a saturating member, a sampled PPT member or a sampled NPT member."""
    if mode not in STATE_MODES:
        raise ParameterError(f"mode must be one of {STATE_MODES}, got {mode!r}.")
    if family not in STATE_FAMILIES:
        raise ParameterError(f"Unknown state family {family!r}; expected one of {STATE_FAMILIES}.")
    rng = np.random.default_rng(seed)

    if family == "canonical":
        d = _require(d, "d", family)
        n = d // 2 if n is None else n
        if mode == "saturating":
            return pptstates.saturating_params(d, n, a0)
        if mode == "npt":
            return pptstates.sample_npt_params(d, n, rng, a0)
        return pptstates.sample_params(d, n, rng, a0)

    if family == "partition":
        d = _require(d, "d", family)
        mu = _require(mu, "mu", family)
        if mode == "saturating":
            return pptstates.partition_saturating_params(d, mu, a0)
        if mode == "npt":
            return pptstates.sample_partition_npt_params(d, mu, rng, a0)
        return pptstates.sample_partition_params(d, mu, rng, a0)

    if mode == "npt":
        raise ParameterError(f"NPT members are defined for canonical and partition families, not {family!r}.")

    if family == "embedded":
        d1 = _require(d1, "d1", family)
        d2 = _require(d2, "d2", family)
        combo = _require(combo, "combo", family)
        n = d1 // 2 if n is None else n
        if mode == "saturating":
            return pptstates.embedded_saturating_params(d1, d2, combo, n, a0)
        return pptstates.sample_embedded_params(d1, d2, combo, n, rng, a0)

    d = _require(d, "d", family)
    if mode == "saturating":
        return pptstates.extended_saturating_params(d, a0)
    return pptstates.sample_extended_params(d, rng, a0)


def envelope(command: str, seed: Optional[int], result: Dict[str, Any], settings: Settings = None) -> Dict[str, Any]:
    """Report wrapper carrying everything needed to rerun the command."""
    settings = settings or Settings()
    return {
        "tool": TOOL,
        "version": __version__,
        "seed": seed,
        "tolerances": settings.tolerances(),
        "command": command,
        "result": result,
    }
