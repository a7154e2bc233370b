"""
Entanglement witness constructions built from real skew-symmetric generators.

All witnesses share the shape

    W = I - d|psi><psi| - sum_U (U^T (x) I) SWAP (U (x) I)

whose product-state expectation is 1 - |<zeta|eta*>|^2 - sum_U |<zeta|U eta>|^2.
"""
import dataclasses
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.config import settings
from app.services.combinatorics import Combination, Partition, parse_partition
from app.services.densemat import (
    BipartiteOperator,
    conjugate_second,
    flat_index,
    local,
    min_eigenvalue,
    partial_transpose,
    projector,
    require_hermitian,
    swap,
)
from app.services.skewcanon import (
    SkewMatrix,
    build_J,
    build_J_triple,
    canonical_decompose,
)
from app.utils.errors import DimensionMismatchError, NotAStateError, NotHermitianError, ParameterError
from app.utils.logger import logger

LAMBDA_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class Witness:
    op: BipartiteOperator
    provenance: Dict[str, Any] = field(default_factory=dict)
    certified: bool = False

    @property
    def kind(self) -> str:
        return self.provenance.get("kind", "custom")

    @property
    def dims(self) -> Tuple[int, int]:
        return self.op.dims

    def with_certified(self, flag: bool) -> "Witness":
        return dataclasses.replace(self, certified=flag)


@dataclass(frozen=True, eq=False)
class WitnessSplit:
    o1_ta: BipartiteOperator
    o2_ta: BipartiteOperator
    w_opc: BipartiteOperator

    def reconstruct(self) -> BipartiteOperator:
        return self.o1_ta + self.o2_ta + self.w_opc


@dataclass(frozen=True, eq=False)
class ExtendedSplit:
    """W_C = w + D1^{T_A} + D2^{T_A} with D1, D2 positive rank-one projectors."""
    w: Witness
    d_one: BipartiteOperator
    d_two: BipartiteOperator


# ==================== BUILDING BLOCKS ====================

def max_entangled(d: int) -> BipartiteOperator:
    """|psi><psi| with psi = sum_i |ii> / sqrt(d)."""
    if d < 1:
        raise ParameterError(f"Dimension must be positive, got {d}.")
    psi = np.eye(d).reshape(d * d) / np.sqrt(d)
    return projector(psi, d, d)


def _twisted_swap(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """(left (x) I) SWAP (right (x) I)."""
    d = left.shape[0]
    return local(left, d) @ swap(d) @ local(right, d)


def _generator_term(u: np.ndarray) -> np.ndarray:
    """d (U^T (x) I) |psi><psi|^{T_A} (U (x) I), using |psi><psi|^{T_A} = SWAP / d."""
    return _twisted_swap(u.T, u)


def _skew_witness(d: int, generators: Sequence[np.ndarray]) -> np.ndarray:
    m = np.eye(d * d) - d * max_entangled(d).matrix.real
    for u in generators:
        m = m - _generator_term(np.asarray(u, dtype=float))
    return m


def _check_lambdas(d: int, lambdas: Sequence[float]) -> List[float]:
    lambdas = [float(x) for x in lambdas]
    if 2 * len(lambdas) > d:
        raise ParameterError(f"{len(lambdas)} blocks do not fit in dimension {d}.")
    for x in lambdas:
        if x < 0 or x > 1 + LAMBDA_SLACK:
            raise ParameterError(f"Invariant factor {x} outside [0, 1].")
    return lambdas


def _check_n(d: int, n: int) -> None:
    if n < 0 or 2 * n > d:
        raise ParameterError(f"Block count n={n} needs 0 <= 2n <= d = {d}.")


def _active_blocks(lambdas: Sequence[float]) -> int:
    return sum(1 for x in lambdas if x > 0)


# ==================== CANONICAL WITNESSES ====================

def witness_from_U(u: SkewMatrix) -> Witness:
    form = canonical_decompose(u)
    if form.lambdas and max(form.lambdas) > 1 + LAMBDA_SLACK:
        raise ParameterError(
            f"Generator has invariant factor {max(form.lambdas):.6g} > 1; <eta|U^T U|eta> <= 1 is required."
        )
    op = BipartiteOperator(u.d, u.d, _skew_witness(u.d, [u.entries]))
    return Witness(op, {
        "kind": "from-U",
        "d": u.d,
        "u_upper": u.upper(),
        "lambdas": list(form.lambdas),
        "n": _active_blocks(form.lambdas),
    })


def canonical_witness(d: int, lambdas: Sequence[float]) -> Witness:
    lambdas = _check_lambdas(d, lambdas)
    j = build_J(d, lambdas).entries
    op = BipartiteOperator(d, d, _skew_witness(d, [j]))
    logger.debug(f"Built canonical witness d={d} lambdas={lambdas}")
    return Witness(op, {"kind": "canonical", "d": d, "lambdas": lambdas, "n": _active_blocks(lambdas)})


def expanded_canonical_witness(d: int, lambdas: Sequence[float]) -> Witness:
    """W_C assembled term by term from its basis expansion."""
    lambdas = _check_lambdas(d, lambdas)
    w = np.eye(d * d)

    def idx(a, b):
        return flat_index(a, b, d)

    for k in range(d):
        for l in range(d):
            w[idx(k, k), idx(l, l)] -= 1.0

    for i, li in enumerate(lambdas):
        for j, lj in enumerate(lambdas):
            p = li * lj
            w[idx(2 * i + 1, 2 * j), idx(2 * j + 1, 2 * i)] -= p
            w[idx(2 * i + 1, 2 * j + 1), idx(2 * j, 2 * i)] += p
            w[idx(2 * i, 2 * j), idx(2 * j + 1, 2 * i + 1)] += p
            w[idx(2 * i, 2 * j + 1), idx(2 * j, 2 * i + 1)] -= p

    return Witness(
        BipartiteOperator(d, d, w),
        {"kind": "canonical", "d": d, "lambdas": lambdas, "n": _active_blocks(lambdas), "path": "expanded"},
    )


def canonical_witness_unit(d: int, n: int) -> Witness:
    _check_n(d, n)
    return canonical_witness(d, [1.0] * n)


def reduction_witness(d: int) -> Witness:
    """I - d|psi><psi|, the rank-zero canonical witness."""
    return canonical_witness(d, [])


def _embed_block(d: int, small: np.ndarray, labels: Sequence[int]) -> np.ndarray:
    """Place an operator on span{|a,b> : a, b in labels} into the d x d space."""
    k = len(labels)
    big = np.zeros((d * d, d * d))
    t = small.reshape(k, k, k, k)
    for a, x in enumerate(labels):
        for b, y in enumerate(labels):
            for c, z in enumerate(labels):
                for e, v in enumerate(labels):
                    big[flat_index(x, y, d), flat_index(z, v, d)] = t[a, b, c, e]
    return big


def _cross_term(d: int, xs: Sequence[int], ys: Sequence[int]) -> np.ndarray:
    """sum over x in xs, y in ys of |x,y><x,y| + |y,x><y,x| - |xx><yy| - |yy><xx|."""
    m = np.zeros((d * d, d * d))
    for x in xs:
        for y in ys:
            m[flat_index(x, y, d), flat_index(x, y, d)] += 1.0
            m[flat_index(y, x, d), flat_index(y, x, d)] += 1.0
            m[flat_index(x, x, d), flat_index(y, y, d)] -= 1.0
            m[flat_index(y, y, d), flat_index(x, x, d)] -= 1.0
    return m


def split_canonical(d: int, n: int) -> WitnessSplit:
    """W_C(1,...,1) = O1^{T_A} + O2^{T_A} + W_OPC."""
    _check_n(d, n)
    inside = list(range(2 * n))
    outside = list(range(2 * n, d))

    o1 = _cross_term(d, inside, outside)

    o2 = np.zeros((d * d, d * d))
    for i in outside:
        for j in outside:
            if i != j:
                o2[flat_index(i, j, d), flat_index(i, j, d)] += 1.0
                o2[flat_index(i, i, d), flat_index(j, j, d)] -= 1.0

    if n:
        full = _skew_witness(2 * n, [build_J(2 * n, [1.0] * n).entries])
        w_opc = _embed_block(d, full, inside)
    else:
        w_opc = np.zeros((d * d, d * d))

    return WitnessSplit(
        BipartiteOperator(d, d, o1),
        BipartiteOperator(d, d, o2),
        BipartiteOperator(d, d, w_opc),
    )


def opc_witness(d: int, n: int) -> Witness:
    """The full-rank canonical witness of the 2n x 2n corner, embedded in d x d."""
    split = split_canonical(d, n)
    return Witness(split.w_opc, {"kind": "opc", "d": d, "n": n})


def deficit_split(d: int, lambdas: Sequence[float]) -> Tuple[BipartiteOperator, BipartiteOperator]:
    """W_C(lambda) = O^{T_A} + remainder with O = sum (1 - l_i^2)(|2i,2i+1> - |2i+1,2i>)(h.c.)."""
    lambdas = _check_lambdas(d, lambdas)
    o_ta = np.zeros((d * d, d * d))
    for i, lam in enumerate(lambdas):
        weight = 1.0 - lam ** 2
        a, b = 2 * i, 2 * i + 1
        o_ta[flat_index(a, b, d), flat_index(a, b, d)] += weight
        o_ta[flat_index(b, a, d), flat_index(b, a, d)] += weight
        o_ta[flat_index(a, a, d), flat_index(b, b, d)] -= weight
        o_ta[flat_index(b, b, d), flat_index(a, a, d)] -= weight
    o_ta = BipartiteOperator(d, d, o_ta)
    return o_ta, canonical_witness(d, lambdas).op - o_ta


def conjugated_witness(d: int, lambdas: Sequence[float], q: np.ndarray, mode: str = "J") -> Witness:
    """W_J (generator Q J Q^T) or W_psi = (Q^T (x) I) W_J (Q (x) I), built independently."""
    lambdas = _check_lambdas(d, lambdas)
    q = np.asarray(q, dtype=float)
    if q.shape != (d, d):
        raise DimensionMismatchError(f"Orthogonal matrix must be {d}x{d}, got {q.shape}.")
    defect = float(np.max(np.abs(q @ q.T - np.eye(d))))
    if defect > settings.EIGEN_TOL:
        raise ParameterError(f"Matrix is not orthogonal: max |QQ^T - I| = {defect:.3e}.")

    j = build_J(d, lambdas).entries
    if mode == "J":
        m = _skew_witness(d, [q @ j @ q.T])
    elif mode == "psi":
        qq = local(q, d)
        m = np.eye(d * d) - d * (qq.T @ max_entangled(d).matrix.real @ qq) - _twisted_swap(j.T @ q.T, q @ j)
    else:
        raise ParameterError(f"Unknown conjugation mode {mode!r}; expected 'J' or 'psi'.")

    return Witness(BipartiteOperator(d, d, m), {
        "kind": "conjugated",
        "mode": mode,
        "d": d,
        "lambdas": lambdas,
        "q": q.tolist(),
        "n": _active_blocks(lambdas),
    })


# ==================== PARTITIONS AND EMBEDDINGS ====================

def _partition_for(d: int, mu: Sequence[int]) -> Partition:
    partition = mu if isinstance(mu, Partition) else parse_partition(mu)
    if d % 2 or 2 * partition.n != d:
        raise ParameterError(f"Partition {partition} must sum to d/2 for even d, got d={d}.")
    return partition


def _block_generators(d: int, partition: Partition) -> List[np.ndarray]:
    full = build_J(d, [1.0] * partition.n).entries
    gens = []
    for pairs in partition.blocks():
        u = np.zeros((d, d))
        sl = slice(2 * pairs.start, 2 * pairs.stop)
        u[sl, sl] = full[sl, sl]
        gens.append(u)
    return gens


def _partition_provenance(d: int, partition: Partition) -> Dict[str, Any]:
    return {"kind": "partition", "d": d, "mu": list(partition.parts), "n": partition.n}


def partition_witness(d: int, mu: Sequence[int]) -> Witness:
    """I - d|psi><psi| - sum_k (U_k^T (x) I) SWAP (U_k (x) I), one full-rank U_k per part."""
    partition = _partition_for(d, mu)
    op = BipartiteOperator(d, d, _skew_witness(d, _block_generators(d, partition)))
    return Witness(op, _partition_provenance(d, partition))


def partition_witness_blocks(d: int, mu: Sequence[int]) -> Witness:
    """Block canonical witnesses plus decomposable cross terms between blocks."""
    partition = _partition_for(d, mu)
    m = np.zeros((d * d, d * d))
    labels = [list(range(2 * b.start, 2 * b.stop)) for b in partition.blocks()]

    for mu_k, block in zip(partition.parts, labels):
        small = _skew_witness(2 * mu_k, [build_J(2 * mu_k, [1.0] * mu_k).entries])
        m += _embed_block(d, small, block)

    for a in range(len(labels)):
        for b in range(a + 1, len(labels)):
            m += _cross_term(d, labels[a], labels[b])

    provenance = _partition_provenance(d, partition)
    provenance["path"] = "blocks"
    return Witness(BipartiteOperator(d, d, m), provenance)


def embedded_witness(d1: int, d2: int, combo: Sequence[int], lambdas: Sequence[float]) -> Witness:
    """d1 x d1 canonical witness pushed into Im P_c of the second factor."""
    c = combo if isinstance(combo, Combination) else Combination(d1, d2, tuple(combo))
    lambdas = _check_lambdas(d1, lambdas)
    small = canonical_witness(d1, lambdas).op
    op = conjugate_second(small, c.isometry())
    return Witness(op, {
        "kind": "embedded",
        "d1": d1,
        "d2": d2,
        "combo": list(c.indices),
        "lambdas": lambdas,
        "n": _active_blocks(lambdas),
    })


def extended_witness(d: int) -> Witness:
    """Witness built from J, J' and J''; nonnegative on real product states only."""
    triple = build_J_triple(d)
    op = BipartiteOperator(d, d, _skew_witness(d, [g.entries for g in triple.generators()]))
    return Witness(op, {"kind": "extended", "d": d, "n": d // 4, "m": d % 4})


def extended_split(d: int) -> ExtendedSplit:
    triple = build_J_triple(d)
    parts = []
    for g in (triple.jp, triple.jpp):
        # sum_k J^T|k>|k> = sqrt(d) (J^T (x) I)|psi>
        v = np.zeros(d * d)
        for k in range(d):
            v += np.kron(g.entries.T[:, k], np.eye(d)[k])
        parts.append(projector(v, d, d))
    return ExtendedSplit(extended_witness(d), parts[0], parts[1])


# ==================== JAMIOLKOWSKI MAP ====================

def jamiolkowski_apply(w: Witness, rho: np.ndarray) -> np.ndarray:
    """phi(rho) = Tr_B(W (I (x) rho^T)), mapping operators on the second factor to the first."""
    rho = np.asarray(rho, dtype=complex)
    d1, d2 = w.dims
    if rho.shape != (d2, d2):
        raise DimensionMismatchError(f"Input of shape {rho.shape} does not act on d2 = {d2}.")
    if np.max(np.abs(rho - rho.conj().T), initial=0.0) > settings.HERMITIAN_TOL:
        raise NotHermitianError("Map input must be Hermitian.")
    if abs(np.trace(rho) - 1.0) > settings.EIGEN_TOL:
        raise NotAStateError(f"Map input has trace {np.trace(rho).real:.12g}, expected 1.")
    if np.linalg.eigvalsh((rho + rho.conj().T) / 2)[0] < -settings.EIGEN_TOL:
        raise NotAStateError("Map input must be positive semidefinite.")
    return np.einsum("ikjl,kl->ij", w.op.tensor(), rho)


def canonical_map(d: int, lambdas: Sequence[float], rho: np.ndarray) -> np.ndarray:
    """Closed form Tr(rho) I - rho - J^T rho^T J."""
    lambdas = _check_lambdas(d, lambdas)
    j = build_J(d, lambdas).entries
    rho = np.asarray(rho, dtype=complex)
    return np.trace(rho) * np.eye(d) - rho - j.T @ rho.T @ j


# ==================== DETECTION BOUNDS ====================

def canonical_norm_min(d: int, n: int) -> int:
    """Smallest normalization of the canonical PPT family."""
    return d + 4 * n * n + (d - 2 * n) * (d + 2 * n - 1)


def partition_denominator(d: int, mu: Sequence[int]) -> int:
    partition = _partition_for(d, mu)
    total, used = 0, 0
    for m in partition.parts:
        used += m
        total += 2 * m * (2 * m + 1) + 4 * m * (d - 2 * used)
    return total


def _canonical_bound(d: int, n: int) -> float:
    if n <= 1:
        return 0.0
    return -2.0 * n / canonical_norm_min(d, n)


def _canonical_floor(d: int, n: int) -> float:
    return -(4 * n * (n - 1) + (d - 2 * n) * (d + 2 * n - 1)) / (d + 2 * n)


def detection_bound(w: Witness) -> Optional[float]:
    """Lower bound of Tr(W rho) over the PPT family matching the witness, None when unknown."""
    p = w.provenance
    kind = w.kind
    if kind in ("canonical", "from-U", "conjugated"):
        return _canonical_bound(p["d"], p["n"])
    if kind == "embedded":
        return _canonical_bound(p["d1"], p["n"])
    if kind == "partition":
        return -2.0 * p["n"] / partition_denominator(p["d"], p["mu"])
    if kind == "extended" and p.get("m", 0) == 0:
        return -1.0 / (p["d"] + 2)
    return None


def npt_floor(w: Witness) -> Optional[float]:
    """Lower bound of Tr(W rho) over positive but not PPT family members."""
    p = w.provenance
    kind = w.kind
    if kind in ("canonical", "from-U", "conjugated"):
        return _canonical_floor(p["d"], p["n"])
    if kind == "embedded":
        return _canonical_floor(p["d1"], p["n"])
    if kind == "partition":
        return -(p["d"] - 2) / 2.0
    return None


def split_min_eigenvalues(split: WitnessSplit) -> Tuple[float, float]:
    """Minimum eigenvalues of O1 and O2 (the partial transposes of the split terms)."""
    return (
        min_eigenvalue(partial_transpose(split.o1_ta)),
        min_eigenvalue(partial_transpose(split.o2_ta)),
    )


def validate_witness(w: Witness) -> None:
    require_hermitian(w.op, "witness")
