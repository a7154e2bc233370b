"""
Dense operator algebra on bipartite spaces.
Basis ordering is |i,j> -> i*d2 + j, first factor slow.
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import linalg

from app.config import settings
from app.utils.errors import DimensionMismatchError, NotAStateError, NotHermitianError

SUBSYSTEMS = ("A", "B")


@dataclass(frozen=True, eq=False)
class BipartiteOperator:
    """Square complex matrix on C^d1 (x) C^d2."""
    d1: int
    d2: int
    matrix: np.ndarray

    def __post_init__(self):
        if self.d1 < 1 or self.d2 < 1:
            raise DimensionMismatchError(f"Factor dimensions must be positive, got ({self.d1}, {self.d2}).")
        m = np.array(self.matrix, dtype=complex)
        dim = self.d1 * self.d2
        if m.shape != (dim, dim):
            raise DimensionMismatchError(
                f"Matrix of shape {m.shape} does not match d1*d2 = {self.d1}*{self.d2} = {dim}."
            )
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.d1 * self.d2

    @property
    def dims(self) -> Tuple[int, int]:
        return self.d1, self.d2

    def tensor(self) -> np.ndarray:
        """Matrix as a rank-4 array indexed [i, k, j, l] = <i,k|op|j,l>."""
        return self.matrix.reshape(self.d1, self.d2, self.d1, self.d2)

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def hermitian_defect(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0))

    def is_hermitian(self, tol: float = None) -> bool:
        tol = settings.HERMITIAN_TOL if tol is None else tol
        return self.hermitian_defect() <= tol * max(1.0, float(np.max(np.abs(self.matrix), initial=0.0)))

    def allclose(self, other: "BipartiteOperator", atol: float = 1e-12) -> bool:
        return self.dims == other.dims and bool(np.allclose(self.matrix, other.matrix, rtol=0.0, atol=atol))

    def with_matrix(self, matrix: np.ndarray) -> "BipartiteOperator":
        return BipartiteOperator(self.d1, self.d2, matrix)

    def scaled(self, factor: float) -> "BipartiteOperator":
        return self.with_matrix(self.matrix * factor)

    def __add__(self, other: "BipartiteOperator") -> "BipartiteOperator":
        _require_same_dims(self, other)
        return self.with_matrix(self.matrix + other.matrix)

    def __sub__(self, other: "BipartiteOperator") -> "BipartiteOperator":
        _require_same_dims(self, other)
        return self.with_matrix(self.matrix - other.matrix)

    def __neg__(self) -> "BipartiteOperator":
        return self.with_matrix(-self.matrix)


def _require_same_dims(a: BipartiteOperator, b: BipartiteOperator):
    if a.dims != b.dims:
        raise DimensionMismatchError(f"Operator dimensions {a.dims} and {b.dims} differ.")


# ==================== CONSTRUCTION ====================

def identity(d1: int, d2: int) -> BipartiteOperator:
    return BipartiteOperator(d1, d2, np.eye(d1 * d2))


def zeros(d1: int, d2: int) -> BipartiteOperator:
    return BipartiteOperator(d1, d2, np.zeros((d1 * d2, d1 * d2)))


def flat_index(i: int, j: int, d2: int) -> int:
    return i * d2 + j


def ket_bra(d1: int, d2: int, ket: Tuple[int, int], bra: Tuple[int, int]) -> BipartiteOperator:
    """Matrix unit |ket><bra| with ket/bra given as (first, second) labels."""
    m = np.zeros((d1 * d2, d1 * d2))
    m[flat_index(*ket, d2), flat_index(*bra, d2)] = 1.0
    return BipartiteOperator(d1, d2, m)


def projector(vector: np.ndarray, d1: int, d2: int) -> BipartiteOperator:
    v = np.asarray(vector, dtype=complex).reshape(-1)
    if v.size != d1 * d2:
        raise DimensionMismatchError(f"Vector of length {v.size} does not live in {d1}x{d2}.")
    return BipartiteOperator(d1, d2, np.outer(v, v.conj()))


def product_vector(eta: np.ndarray, zeta: np.ndarray) -> np.ndarray:
    return np.kron(np.asarray(eta), np.asarray(zeta))


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product; entry ((i*rb+k),(j*cb+l)) = a[i,j]*b[k,l]."""
    return np.kron(np.asarray(a), np.asarray(b))


def local(a: np.ndarray, d2: int) -> np.ndarray:
    """A (x) I on the first factor."""
    return np.kron(np.asarray(a), np.eye(d2))


def swap(d: int) -> np.ndarray:
    """SWAP on C^d (x) C^d."""
    s = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            s[j * d + i, i * d + j] = 1.0
    return s


# ==================== OPERATIONS ====================

def partial_transpose(op: BipartiteOperator, subsystem: str = "A") -> BipartiteOperator:
    """Transpose one tensor factor; T_A swaps d1-blocks, T_B transposes within blocks."""
    if subsystem not in SUBSYSTEMS:
        raise ValueError(f"Unknown subsystem {subsystem!r}; expected one of {SUBSYSTEMS}.")
    t = op.tensor()
    axes = (2, 1, 0, 3) if subsystem == "A" else (0, 3, 2, 1)
    return op.with_matrix(t.transpose(axes).reshape(op.dim, op.dim))


def require_hermitian(op: BipartiteOperator, what: str = "operator") -> None:
    if not op.is_hermitian():
        raise NotHermitianError(
            f"{what} is not Hermitian: defect {op.hermitian_defect():.3e} exceeds {settings.HERMITIAN_TOL:g}."
        )


def eigenvalues(op: BipartiteOperator) -> np.ndarray:
    """Ascending spectrum of a Hermitian operator."""
    require_hermitian(op)
    h = (op.matrix + op.matrix.conj().T) / 2
    return linalg.eigvalsh(h)


def min_eigenvalue(op: BipartiteOperator) -> float:
    require_hermitian(op)
    h = (op.matrix + op.matrix.conj().T) / 2
    return float(linalg.eigvalsh(h, subset_by_index=[0, 0])[0])


def require_state(rho: BipartiteOperator, trace_tol: float = None) -> None:
    require_hermitian(rho, "density operator")
    trace_tol = settings.TRACE_TOL if trace_tol is None else trace_tol
    tr = rho.trace()
    if abs(tr - 1.0) > trace_tol:
        raise NotAStateError(f"Density operator has trace {tr.real:.12g}, expected 1.")


def expectation(w: BipartiteOperator, rho: BipartiteOperator, unit_trace: bool = True) -> float:
    """Tr(w rho) for Hermitian w and rho."""
    _require_same_dims(w, rho)
    require_hermitian(w, "witness")
    if unit_trace:
        require_state(rho)
    else:
        require_hermitian(rho, "density operator")
    value = np.einsum("ij,ji->", w.matrix, rho.matrix)
    scale = max(1.0, float(np.linalg.norm(w.matrix, 2)) * float(np.abs(rho.trace())))
    if abs(value.imag) > settings.EIGEN_TOL * scale:
        raise NotHermitianError(f"Tr(W rho) has imaginary part {value.imag:.3e}; inputs are corrupted.")
    return float(value.real)


def product_expectation(w: BipartiteOperator, eta: np.ndarray, zeta: np.ndarray) -> float:
    gamma = product_vector(eta, zeta)
    return float(np.vdot(gamma, w.matrix @ gamma).real)


def conjugate_second(op: BipartiteOperator, v: np.ndarray) -> BipartiteOperator:
    """(I (x) V) op (I (x) V^dagger) with V: C^d2 -> C^d2'."""
    v = np.asarray(v)
    if v.shape[1] != op.d2:
        raise DimensionMismatchError(f"Isometry with {v.shape[1]} columns cannot act on d2 = {op.d2}.")
    big = np.kron(np.eye(op.d1), v)
    return BipartiteOperator(op.d1, v.shape[0], big @ op.matrix @ big.conj().T)
