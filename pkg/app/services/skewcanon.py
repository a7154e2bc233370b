"""
Real skew-symmetric generators and their canonical block form.

Every real antisymmetric U can be written U = Q J Q^T with Q orthogonal and
J a direct sum of 2x2 blocks [[0, l], [-l, 0]] padded with zeros.
"""
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np
from scipy import linalg

from app.config import settings
from app.utils.errors import DimensionMismatchError, ParameterError
from app.utils.logger import logger


@dataclass(frozen=True, eq=False)
class SkewMatrix:
    d: int
    entries: np.ndarray

    def __post_init__(self):
        m = np.array(self.entries, dtype=float)
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    def upper(self) -> List[float]:
        """Strict upper triangle, row-major."""
        rows, cols = np.triu_indices(self.d, k=1)
        return [float(x) for x in self.entries[rows, cols]]

    @classmethod
    def from_upper(cls, d: int, upper: Sequence[float]) -> "SkewMatrix":
        expected = d * (d - 1) // 2
        if len(upper) != expected:
            raise DimensionMismatchError(f"Skew matrix of size {d} needs {expected} upper entries, got {len(upper)}.")
        m = np.zeros((d, d))
        rows, cols = np.triu_indices(d, k=1)
        m[rows, cols] = upper
        m[cols, rows] = -np.asarray(upper, dtype=float)
        return cls(d, m)


@dataclass(frozen=True, eq=False)
class CanonicalForm:
    q: np.ndarray
    lambdas: Tuple[float, ...]
    rank: int
    pivots: Tuple[int, ...] = field(default=())

    @property
    def d(self) -> int:
        return self.q.shape[0]

    @property
    def n(self) -> int:
        return len(self.lambdas)

    def j(self) -> np.ndarray:
        return build_J(self.d, self.lambdas).entries

    def reassemble(self) -> np.ndarray:
        return self.q @ self.j() @ self.q.T


@dataclass(frozen=True, eq=False)
class JTriple:
    d: int
    j: SkewMatrix
    jp: SkewMatrix
    jpp: SkewMatrix

    @property
    def blocks(self) -> int:
        return self.d // 4

    def generators(self) -> Tuple[SkewMatrix, SkewMatrix, SkewMatrix]:
        return self.j, self.jp, self.jpp


# ==================== VALIDATION ====================

def validate_skew(m: np.ndarray, tol: float = None) -> SkewMatrix:
    """Wraps m as a SkewMatrix when it is antisymmetric within tol."""
    tol = settings.HERMITIAN_TOL if tol is None else tol
    a = np.asarray(m)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"Skew generator must be square, got shape {a.shape}.")
    if np.iscomplexobj(a):
        if np.max(np.abs(a.imag), initial=0.0) > tol:
            raise ParameterError("Skew generator must be real.")
        a = a.real
    a = a.astype(float)
    defect = float(np.max(np.abs(a + a.T), initial=0.0))
    if defect > tol:
        raise ParameterError(f"Matrix is not antisymmetric: max |m + m^T| = {defect:.3e} exceeds {tol:g}.")
    return SkewMatrix(a.shape[0], (a - a.T) / 2)


def orthogonality_identity_check(u: SkewMatrix, alpha: np.ndarray) -> float:
    """|<alpha*|U|alpha>|, identically zero for antisymmetric U."""
    alpha = np.asarray(alpha, dtype=complex).reshape(-1)
    if alpha.size != u.d:
        raise DimensionMismatchError(f"Vector of length {alpha.size} does not match d = {u.d}.")
    # <alpha*| has components alpha_i (no conjugation)
    return float(abs(alpha @ u.entries @ alpha))


# ==================== CANONICAL FORM ====================

def build_J(d: int, lambdas: Sequence[float]) -> SkewMatrix:
    """Block diagonal J with [[0, l], [-l, 0]] on coordinates (2i, 2i+1)."""
    lambdas = [float(x) for x in lambdas]
    if 2 * len(lambdas) > d:
        raise ParameterError(f"{len(lambdas)} blocks do not fit in dimension {d}.")
    if any(x < 0 for x in lambdas):
        raise ParameterError("Invariant factors must be nonnegative.")
    j = np.zeros((d, d))
    for i, lam in enumerate(lambdas):
        j[2 * i, 2 * i + 1] = lam
        j[2 * i + 1, 2 * i] = -lam
    return SkewMatrix(d, j)


def _pivot(v: np.ndarray) -> int:
    return int(np.flatnonzero(np.abs(v) > 1e-8)[0])


def canonical_decompose(u: SkewMatrix) -> CanonicalForm:
    """Q, lambdas with U = Q J Q^T, lambdas descending and (Q^T U Q)[2i, 2i+1] = +lambda_i."""
    a = u.entries
    d = u.d
    if d == 0:
        return CanonicalForm(np.eye(0), (), 0)

    evals, evecs = linalg.eigh(a.T @ a)
    order = np.argsort(evals)[::-1]
    sigma = np.sqrt(np.clip(evals[order], 0.0, None))
    evecs = evecs[:, order]

    if sigma[0] == 0.0:
        return CanonicalForm(np.eye(d), (), 0)

    cutoff = settings.SKEW_RANK_TOL * sigma[0]
    candidates = evecs[:, sigma > cutoff]
    chosen: List[np.ndarray] = []
    pairs = []

    for _ in range(candidates.shape[1] // 2):
        basis = np.array(chosen).T if chosen else np.zeros((d, 0))
        residuals = candidates - basis @ (basis.T @ candidates)
        best = int(np.argmax(np.linalg.norm(residuals, axis=0)))
        v = residuals[:, best] / np.linalg.norm(residuals[:, best])

        w = -a @ v
        span = np.column_stack([basis, v])
        w = w - span @ (span.T @ w)
        w = w / np.linalg.norm(w)

        lam = float(v @ a @ w)
        chosen.extend([v, w])
        pairs.append((lam, v, w))

    pairs.sort(key=lambda p: (-round(p[0], 12), _pivot(p[1])))
    columns = [vec for _, v, w in pairs for vec in (v, w)]
    used = np.column_stack(columns) if columns else np.zeros((d, 0))
    complement = linalg.null_space(used.T) if columns else np.eye(d)
    q = np.column_stack([used, complement]) if complement.size else used

    lambdas = tuple(p[0] for p in pairs)
    logger.debug(f"Canonical form of {d}x{d} generator: rank {2 * len(lambdas)}, lambdas {lambdas}")
    return CanonicalForm(q, lambdas, 2 * len(lambdas), tuple(_pivot(p[1]) for p in pairs))


def random_orthogonal(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix."""
    z = rng.standard_normal((d, d))
    q, r = np.linalg.qr(z)
    return q * np.sign(np.diag(r))


def random_skew(d: int, rng: np.random.Generator, scale: float = 1.0) -> SkewMatrix:
    g = rng.standard_normal((d, d)) * scale
    return SkewMatrix(d, (g - g.T) / 2)


# ==================== THE J TRIPLE ====================

# action on e_{4k}..e_{4k+3}: column c holds the image of e_c
_J_BLOCK = np.array([[0, 1, 0, 0], [-1, 0, 0, 0], [0, 0, 0, 1], [0, 0, -1, 0]], dtype=float)
_JP_BLOCK = np.array([[0, 0, 0, 1], [0, 0, 1, 0], [0, -1, 0, 0], [-1, 0, 0, 0]], dtype=float)
_JPP_BLOCK = np.array([[0, 0, 1, 0], [0, 0, 0, -1], [-1, 0, 0, 0], [0, 1, 0, 0]], dtype=float)


def _tile(block: np.ndarray, d: int) -> np.ndarray:
    m = np.zeros((d, d))
    for k in range(d // 4):
        m[4 * k:4 * k + 4, 4 * k:4 * k + 4] = block
    return m


def build_J_triple(d: int) -> JTriple:
    """J, J', J'' as direct sums of 4x4 blocks, zero on the trailing d mod 4 coordinates."""
    if d < 4:
        raise ParameterError(f"The J triple needs d >= 4, got {d}.")
    return JTriple(
        d,
        SkewMatrix(d, _tile(_J_BLOCK, d)),
        SkewMatrix(d, _tile(_JP_BLOCK, d)),
        SkewMatrix(d, _tile(_JPP_BLOCK, d)),
    )
