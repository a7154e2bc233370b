"""
JSON interchange models. Complex matrices travel as row-major re/im arrays.
"""
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, Field, model_validator

from app.services.densemat import BipartiteOperator
from app.services.pptstates import PptFamilyParams
from app.services.skewcanon import CanonicalForm, SkewMatrix
from app.services.witnesses import Witness, validate_witness
from app.utils.errors import DimensionMismatchError, ParameterError


def _key(k: int, l: int) -> str:
    return f"{k},{l}"


def _parse_key(key: str):
    try:
        k, l = key.split(",")
        return int(k), int(l)
    except ValueError:
        raise ParameterError(f"Coefficient key {key!r} must look like 'i,j'.")


class MatrixModel(BaseModel):
    rows: int
    cols: int
    re: List[float]
    im: List[float]

    @model_validator(mode="after")
    def check_size(self):
        if len(self.re) != self.rows * self.cols or len(self.im) != self.rows * self.cols:
            raise DimensionMismatchError(
                f"Matrix of {self.rows}x{self.cols} needs {self.rows * self.cols} re/im entries."
            )
        return self

    @classmethod
    def from_array(cls, m: np.ndarray) -> "MatrixModel":
        m = np.asarray(m, dtype=complex)
        return cls(rows=m.shape[0], cols=m.shape[1], re=m.real.ravel().tolist(), im=m.imag.ravel().tolist())

    def to_array(self) -> np.ndarray:
        return (np.array(self.re) + 1j * np.array(self.im)).reshape(self.rows, self.cols)


class OperatorModel(MatrixModel):
    d1: int
    d2: int

    @classmethod
    def from_operator(cls, op: BipartiteOperator) -> "OperatorModel":
        base = MatrixModel.from_array(op.matrix)
        return cls(d1=op.d1, d2=op.d2, **base.model_dump())

    def to_operator(self) -> BipartiteOperator:
        return BipartiteOperator(self.d1, self.d2, self.to_array())


class WitnessModel(OperatorModel):
    provenance: Dict[str, Any] = Field(default_factory=dict)
    certified: bool = False

    @classmethod
    def from_witness(cls, w: Witness) -> "WitnessModel":
        base = OperatorModel.from_operator(w.op)
        return cls(provenance=w.provenance, certified=w.certified, **base.model_dump())

    def to_witness(self) -> Witness:
        w = Witness(self.to_operator(), dict(self.provenance), self.certified)
        validate_witness(w)
        return w


class SkewModel(BaseModel):
    d: int
    upper: List[float]

    @classmethod
    def from_skew(cls, u: SkewMatrix) -> "SkewModel":
        return cls(d=u.d, upper=u.upper())

    def to_skew(self) -> SkewMatrix:
        return SkewMatrix.from_upper(self.d, self.upper)


class CanonicalFormModel(BaseModel):
    d: int
    q: MatrixModel
    lambdas: List[float]
    rank: int

    @classmethod
    def from_form(cls, form: CanonicalForm) -> "CanonicalFormModel":
        return cls(d=form.d, q=MatrixModel.from_array(form.q), lambdas=list(form.lambdas), rank=form.rank)


class ParamsModel(BaseModel):
    d: int
    n: int
    a0: float
    a: Dict[str, float] = Field(default_factory=dict)
    c: List[float] = Field(default_factory=list)
    family: str = "canonical"
    mu: Optional[List[int]] = None
    d2: Optional[int] = None
    combo: Optional[List[int]] = None
    kernel: Dict[str, float] = Field(default_factory=dict)

    @classmethod
    def from_params(cls, p: PptFamilyParams) -> "ParamsModel":
        return cls(
            d=p.d,
            n=p.n,
            a0=p.a0,
            a={_key(k, l): v for (k, l), v in sorted(p.a.items())},
            c=list(p.c),
            family=p.family,
            mu=list(p.mu) if p.mu is not None else None,
            d2=p.d2,
            combo=list(p.combo) if p.combo is not None else None,
            kernel={_key(i, j): v for (i, j), v in sorted(p.kernel.items())},
        )

    def to_params(self) -> PptFamilyParams:
        return PptFamilyParams(
            d=self.d,
            n=self.n,
            a0=self.a0,
            a={_parse_key(k): v for k, v in self.a.items()},
            c=tuple(self.c),
            family=self.family,
            mu=tuple(self.mu) if self.mu is not None else None,
            d2=self.d2,
            combo=tuple(self.combo) if self.combo is not None else None,
            kernel={_parse_key(k): v for k, v in self.kernel.items()},
        )


# ==================== REQUEST BODIES ====================

class WitnessRequest(BaseModel):
    kind: str
    d: Optional[int] = None
    n: Optional[int] = None
    lambdas: Optional[List[float]] = None
    mu: Optional[List[int]] = None
    d1: Optional[int] = None
    d2: Optional[int] = None
    combo: Optional[List[int]] = None
    u: Optional[SkewModel] = None


class StateRequest(BaseModel):
    family: str = "canonical"
    mode: str = "saturating"
    d: Optional[int] = None
    n: Optional[int] = None
    mu: Optional[List[int]] = None
    d1: Optional[int] = None
    d2: Optional[int] = None
    combo: Optional[List[int]] = None
    a0: float = 1.0
    seed: Optional[int] = None
    normalize: bool = True
    params: Optional[ParamsModel] = None


class VerifyRequest(BaseModel):
    witness: WitnessModel
    restarts: Optional[int] = None
    max_iters: Optional[int] = None
    tol: Optional[float] = None
    seed: Optional[int] = None
    field: str = "complex"


class ClassifyRequest(BaseModel):
    witness: WitnessModel
    state: OperatorModel


class DecomposeRequest(BaseModel):
    skew: Optional[SkewModel] = None
    matrix: Optional[List[List[float]]] = None


class SweepRequest(BaseModel):
    family: str = "canonical"
    mode: str = "sampled"
    d: Optional[int] = None
    n: Optional[int] = None
    mu: Optional[List[int]] = None
    d1: Optional[int] = None
    d2: Optional[int] = None
    combo: Optional[List[int]] = None
    draws: Optional[int] = None
    seed: Optional[int] = None
