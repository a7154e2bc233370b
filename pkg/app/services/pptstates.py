"""
Parametric PPT state families matched to the skew-symmetric witnesses.

Coefficient conventions
-----------------------
Every family lives on d x d (or d1 x d2 for embeddings) and is assembled
unnormalized as

    a0 * M on span{|kk>}  +  sum_{k != l} a[k,l] |k,l><k,l|  +  coupling terms

then divided by its trace N. Missing a/kernel keys mean 0.

Coupling terms of the canonical, partition and embedded families are
-C_i (|2x,2i><2i+1,2x+1| + h.c.) over "links" (i, x), where x is the next
pair of the same block taken cyclically (x = (i + 1) mod n for the canonical
family). Blocks of size one carry no link.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.config import settings
from app.services.combinatorics import Combination, Partition, parse_partition
from app.services.densemat import BipartiteOperator, conjugate_second, flat_index, partial_transpose
from app.services.witnesses import (
    Witness,
    canonical_witness_unit,
    embedded_witness,
    extended_witness,
    partition_witness,
)
from app.utils.errors import ParameterError
from app.utils.logger import logger

FAMILIES = ("canonical", "partition", "embedded", "extended")

Pair = Tuple[int, int]


@dataclass(frozen=True, eq=False)
class PptFamilyParams:
    d: int
    n: int
    a0: float
    a: Dict[Pair, float] = field(default_factory=dict)
    c: Tuple[float, ...] = ()
    family: str = "canonical"
    mu: Optional[Tuple[int, ...]] = None
    d2: Optional[int] = None
    combo: Optional[Tuple[int, ...]] = None
    kernel: Dict[Pair, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"Unknown family {self.family!r}; expected one of {FAMILIES}.")
        object.__setattr__(self, "a", {(int(k), int(l)): float(v) for (k, l), v in self.a.items()})
        object.__setattr__(self, "kernel", {(int(i), int(j)): float(v) for (i, j), v in self.kernel.items()})
        object.__setattr__(self, "c", tuple(float(x) for x in self.c))
        if self.mu is not None:
            object.__setattr__(self, "mu", parse_partition(self.mu).parts)
        if self.combo is not None:
            object.__setattr__(self, "combo", tuple(int(i) for i in self.combo))
        self._validate_shape()
        self._validate_coefficients()

    # ---- structure ----

    def _validate_shape(self):
        d, n = self.d, self.n
        if self.family == "extended":
            if d < 4 or d % 4:
                raise ParameterError(f"Extended family needs d to be a positive multiple of 4, got {d}.")
            if n != d // 4:
                raise ParameterError(f"Extended family at d={d} has n = {d // 4} blocks, got {n}.")
        elif self.family == "partition":
            if self.mu is None:
                raise ParameterError("Partition family needs mu.")
            if d % 2 or 2 * sum(self.mu) != d or n != d // 2:
                raise ParameterError(f"Partition {self.mu} must sum to d/2 = n, got d={d}, n={n}.")
        else:
            if n < 2 or 2 * n > d:
                raise ParameterError(f"Family needs 2 <= n and 2n <= d, got d={d}, n={n}.")
        if self.family == "embedded":
            if self.d2 is None or self.combo is None:
                raise ParameterError("Embedded family needs d2 and combo.")
            Combination(d, self.d2, self.combo)
        if len(self.c) != len(self.links()):
            raise ParameterError(f"Expected {len(self.links())} coupling coefficients, got {len(self.c)}.")

    def _validate_coefficients(self):
        if self.a0 < 0:
            raise ParameterError(f"a0 must be nonnegative, got {self.a0}.")
        for (k, l), v in self.a.items():
            if k == l or not (0 <= k < self.d and 0 <= l < self.d):
                raise ParameterError(f"Coefficient key ({k},{l}) is not an off-diagonal pair of range({self.d}).")
            if v < 0:
                raise ParameterError(f"Coefficient a[{k},{l}] = {v} is negative.")
        for i, x in enumerate(self.c):
            if x < 0:
                raise ParameterError(f"Coupling C[{i}] = {x} is negative.")
        if self.kernel:
            if self.family != "embedded":
                raise ParameterError("Kernel coefficients only apply to the embedded family.")
            allowed = set(self.combination().kernel_indices())
            for (i, j), v in self.kernel.items():
                if not 0 <= i < self.d or j not in allowed:
                    raise ParameterError(f"Kernel key ({i},{j}) must pair a first-factor label with a Ker P_c label.")
                if v < 0:
                    raise ParameterError(f"Kernel coefficient a[{i},{j}] = {v} is negative; positivity requires >= 0.")

    # ---- accessors ----

    def coefficient(self, k: int, l: int) -> float:
        return self.a.get((k, l), 0.0)

    def partition(self) -> Optional[Partition]:
        return Partition(self.mu) if self.mu is not None else None

    def combination(self) -> Optional[Combination]:
        return Combination(self.d, self.d2, self.combo) if self.combo is not None else None

    @property
    def pairs(self) -> int:
        """Number of 2x2 pairs carrying the a0 pair blocks."""
        return self.d // 2 if self.family == "partition" else self.n

    def links(self) -> List[Pair]:
        if self.family == "extended":
            return []
        if self.family == "partition":
            out = []
            for block in Partition(self.mu).blocks():
                size = len(block)
                if size >= 2:
                    out.extend((block.start + k, block.start + (k + 1) % size) for k in range(size))
            return out
        return [(i, (i + 1) % self.n) for i in range(self.n)]

    def same_pair(self, k: int, l: int) -> bool:
        lo, hi = min(k, l), max(k, l)
        return lo % 2 == 0 and hi == lo + 1 and hi < 2 * self.pairs


@dataclass(frozen=True)
class Violation:
    name: str
    kind: str
    margin: float


@dataclass
class ConditionReport:
    positivity_ok: bool
    ppt_ok: bool
    violated: List[Violation] = field(default_factory=list)
    checked: int = 0

    def to_dict(self) -> dict:
        return {
            "positivity_ok": self.positivity_ok,
            "ppt_ok": self.ppt_ok,
            "checked": self.checked,
            "violated": [{"name": v.name, "kind": v.kind, "margin": v.margin} for v in self.violated],
        }


# ==================== ASSEMBLY ====================

def _diagonal_block(p: PptFamilyParams) -> np.ndarray:
    """Coefficients of |kk><ll| in units of a0."""
    d = p.d
    m = np.ones((d, d))
    if p.family == "extended":
        for b in range(p.n):
            sl = slice(4 * b, 4 * b + 4)
            m[sl, sl] += 4 * np.eye(4) - np.ones((4, 4))
        return m
    for i in range(p.pairs):
        m[2 * i:2 * i + 2, 2 * i:2 * i + 2] += np.array([[1.0, -1.0], [-1.0, 1.0]])
    return m


def _extended_couplings(i: int) -> List[Tuple[Pair, Pair]]:
    b = 4 * i
    return [((b + 1, b + 2), (b + 3, b)), ((b, b + 3), (b + 2, b + 1))]


def _unnormalized(p: PptFamilyParams) -> np.ndarray:
    d = p.d
    m = np.zeros((d * d, d * d))

    def idx(x, y):
        return flat_index(x, y, d)

    block = p.a0 * _diagonal_block(p)
    for k in range(d):
        for l in range(d):
            m[idx(k, k), idx(l, l)] += block[k, l]

    for (k, l), v in p.a.items():
        m[idx(k, l), idx(k, l)] += v

    if p.family == "extended":
        for i in range(p.n):
            for ket, bra in _extended_couplings(i):
                m[idx(*ket), idx(*bra)] += p.a0
                m[idx(*bra), idx(*ket)] += p.a0
    else:
        for (i, x), ci in zip(p.links(), p.c):
            r, s = idx(2 * x, 2 * i), idx(2 * i + 1, 2 * x + 1)
            m[r, s] -= ci
            m[s, r] -= ci
    return m


def normalization(p: PptFamilyParams) -> float:
    """Trace N of the unnormalized operator."""
    total = sum(p.a.values()) + sum(p.kernel.values())
    if p.family == "extended":
        return 4 * p.a0 * p.d + total
    return (p.d + 2 * p.pairs) * p.a0 + total


def family_trace(p: PptFamilyParams) -> float:
    """Tr(W rho) * N against the family's witness, in closed form."""
    if p.family == "extended":
        cross = sum(v for (k, l), v in p.a.items() if k // 4 != l // 4)
        return cross - 16 * p.a0 * p.n ** 2 + 12 * p.a0 * p.n
    nonsame = sum(v for (k, l), v in p.a.items() if not p.same_pair(k, l))
    return -(p.d ** 2 - p.d - 2 * p.pairs) * p.a0 + nonsame - 2 * sum(p.c)


def _finish(p: PptFamilyParams, m: np.ndarray, normalize: bool = True) -> np.ndarray:
    norm = float(np.trace(m))
    if norm <= 0:
        raise ParameterError(f"Normalization N = {norm} must be positive.")
    return m / norm if normalize else m


def _require_family(p: PptFamilyParams, *families: str):
    if p.family not in families:
        raise ParameterError(f"Expected a {' or '.join(families)} family, got {p.family!r}.")


def build_family_state(p: PptFamilyParams) -> BipartiteOperator:
    _require_family(p, "canonical")
    return BipartiteOperator(p.d, p.d, _finish(p, _unnormalized(p)))


def build_partition_state(p: PptFamilyParams) -> BipartiteOperator:
    _require_family(p, "partition")
    return BipartiteOperator(p.d, p.d, _finish(p, _unnormalized(p)))


def build_embedded_state(p: PptFamilyParams) -> BipartiteOperator:
    """Core family pushed into Im P_c plus diagonal Ker P_c terms."""
    _require_family(p, "embedded")
    core = BipartiteOperator(p.d, p.d, _unnormalized(p))
    m = conjugate_second(core, p.combination().isometry()).matrix.real.copy()
    for (i, j), v in p.kernel.items():
        r = flat_index(i, j, p.d2)
        m[r, r] += v
    return BipartiteOperator(p.d, p.d2, _finish(p, m))


def build_extended_state(p: PptFamilyParams, normalize: bool = False) -> BipartiteOperator:
    """Extended family; unnormalized unless asked, matching its a0-scaled bound."""
    _require_family(p, "extended")
    return BipartiteOperator(p.d, p.d, _finish(p, _unnormalized(p), normalize))


def build_state(p: PptFamilyParams, normalize: bool = True) -> BipartiteOperator:
    if p.family == "canonical":
        return build_family_state(p)
    if p.family == "partition":
        return build_partition_state(p)
    if p.family == "embedded":
        return build_embedded_state(p)
    return build_extended_state(p, normalize=normalize)


def family_witness(p: PptFamilyParams) -> Witness:
    if p.family == "canonical":
        return canonical_witness_unit(p.d, p.n)
    if p.family == "partition":
        return partition_witness(p.d, p.mu)
    if p.family == "embedded":
        return embedded_witness(p.d, p.d2, p.combo, [1.0] * p.n)
    return extended_witness(p.d)


# ==================== CONDITIONS ====================

def _pair_family(p: PptFamilyParams, k: int, l: int) -> str:
    inside = 2 * p.pairs
    if k < inside and l < inside:
        if k % 2 == 0 and l % 2 == 0:
            return "even-even"
        if k % 2 == 1 and l % 2 == 1:
            return "odd-odd"
        return "even-odd"
    if k < inside or l < inside:
        return "block-complement"
    return "complement"


class _Checker:
    def __init__(self, tol: float):
        self.tol = tol
        self.violated: List[Violation] = []
        self.checked = 0

    def require(self, name: str, kind: str, lhs: float, rhs: float):
        self.checked += 1
        margin = lhs - rhs
        if margin < -self.tol:
            self.violated.append(Violation(name, kind, margin))

    def report(self) -> ConditionReport:
        return ConditionReport(
            positivity_ok=not any(v.kind == "positivity" for v in self.violated),
            ppt_ok=not any(v.kind == "ppt" for v in self.violated),
            violated=self.violated,
            checked=self.checked,
        )


def _tolerance(p: PptFamilyParams) -> float:
    return settings.TRACE_TOL * max(1.0, p.a0 ** 2)


def _check_linked(p: PptFamilyParams, chk: _Checker):
    a = p.coefficient
    a0sq = p.a0 ** 2
    for (i, x), ci in zip(p.links(), p.c):
        chk.require(
            f"link {i}: a[{2 * x},{2 * i}]*a[{2 * i + 1},{2 * x + 1}] >= C^2", "positivity",
            a(2 * x, 2 * i) * a(2 * i + 1, 2 * x + 1), ci ** 2,
        )
        chk.require(
            f"chain {i}: a[{2 * i + 1},{2 * i}]*a[{2 * x},{2 * x + 1}] >= C^2", "ppt",
            a(2 * i + 1, 2 * i) * a(2 * x, 2 * x + 1), ci ** 2,
        )
    for k in range(p.d):
        for l in range(k + 1, p.d):
            if p.same_pair(k, l):
                continue
            chk.require(
                f"{_pair_family(p, k, l)}: a[{k},{l}]*a[{l},{k}] >= a0^2", "ppt",
                a(k, l) * a(l, k), a0sq,
            )


def check_conditions(p: PptFamilyParams) -> ConditionReport:
    """Positivity and PPT inequalities of the family, margins as lhs - rhs."""
    if p.family == "partition":
        return check_partition_conditions(p)
    if p.family == "embedded":
        return check_embedded_conditions(p)
    if p.family == "extended":
        return check_extended_conditions(p)
    chk = _Checker(_tolerance(p))
    _check_linked(p, chk)
    return chk.report()


def check_partition_conditions(p: PptFamilyParams) -> ConditionReport:
    _require_family(p, "partition")
    chk = _Checker(_tolerance(p))
    _check_linked(p, chk)
    return chk.report()


def check_embedded_conditions(p: PptFamilyParams) -> ConditionReport:
    _require_family(p, "embedded")
    chk = _Checker(_tolerance(p))
    _check_linked(p, chk)
    for (i, j), v in sorted(p.kernel.items()):
        chk.require(f"kernel a[{i},{j}] >= 0", "positivity", v, 0.0)
    return chk.report()


def check_extended_conditions(p: PptFamilyParams) -> ConditionReport:
    _require_family(p, "extended")
    chk = _Checker(_tolerance(p))
    a = p.coefficient
    a0sq = p.a0 ** 2
    for i in range(p.n):
        b = 4 * i
        for (k1, l1), (k2, l2) in _extended_couplings(i):
            chk.require(f"block {i}: a[{k1},{l1}]*a[{k2},{l2}] >= a0^2", "positivity", a(k1, l1) * a(k2, l2), a0sq)
        for (k1, l1), (k2, l2) in (((b + 1, b), (b + 3, b + 2)), ((b, b + 1), (b + 2, b + 3))):
            chk.require(f"block {i}: a[{k1},{l1}]*a[{k2},{l2}] >= a0^2", "ppt", a(k1, l1) * a(k2, l2), a0sq)
    for k in range(p.d):
        for l in range(k + 1, p.d):
            if k // 4 != l // 4:
                chk.require(f"cross-block: a[{k},{l}]*a[{l},{k}] >= a0^2", "ppt", a(k, l) * a(l, k), a0sq)
    return chk.report()


# ==================== BOUNDARY MEMBERS ====================

def _all_pairs(d: int, value: float) -> Dict[Pair, float]:
    return {(k, l): value for k in range(d) for l in range(d) if k != l}


def saturating_params(d: int, n: int, a0: float = 1.0) -> PptFamilyParams:
    return PptFamilyParams(d=d, n=n, a0=a0, a=_all_pairs(d, a0), c=(a0,) * n)


def boundary_state(d: int, n: int, a0: float = 1.0) -> BipartiteOperator:
    """All multipliers at one: PPT and saturating the canonical bound."""
    if a0 <= 0:
        raise ParameterError(f"a0 must be positive, got {a0}.")
    return build_family_state(saturating_params(d, n, a0))


def partition_saturating_params(d: int, mu: Sequence[int], a0: float = 1.0) -> PptFamilyParams:
    partition = parse_partition(mu)
    links = sum(m for m in partition.parts if m >= 2)
    return PptFamilyParams(
        d=d, n=d // 2, a0=a0, a=_all_pairs(d, a0), c=(a0,) * links, family="partition", mu=partition.parts,
    )


def embedded_saturating_params(
    d1: int, d2: int, combo: Sequence[int], n: int, a0: float = 1.0, kernel_value: Optional[float] = None,
) -> PptFamilyParams:
    c = Combination(d1, d2, tuple(combo))
    kv = a0 if kernel_value is None else kernel_value
    kernel = {(i, j): kv for i in range(d1) for j in c.kernel_indices()}
    return PptFamilyParams(
        d=d1, n=n, a0=a0, a=_all_pairs(d1, a0), c=(a0,) * n,
        family="embedded", d2=d2, combo=c.indices, kernel=kernel,
    )


def extended_saturating_params(d: int, a0: float = 1.0) -> PptFamilyParams:
    return PptFamilyParams(d=d, n=d // 4, a0=a0, a=_all_pairs(d, a0), family="extended")


# ==================== SAMPLERS ====================

def _delta(rng: np.random.Generator, saturate: float, spread: float) -> float:
    return 1.0 if rng.random() < saturate else 1.0 + spread * rng.random()


def _sample_linked(
    d: int, pairs: int, links: Sequence[Pair], rng: np.random.Generator,
    a0: float, saturate: float, spread: float, perturb: float,
) -> Tuple[Dict[Pair, float], Tuple[float, ...]]:
    """Coefficients a0 * delta with delta >= 1 and couplings capped by the deltas they touch."""
    a: Dict[Pair, float] = {}
    delta: Dict[Pair, float] = {}
    for k in range(d):
        for l in range(k + 1, d):
            if k % 2 == 0 and l == k + 1 and l < 2 * pairs:
                for key in ((k, l), (l, k)):
                    delta[key] = _delta(rng, saturate, spread)
                    a[key] = a0 * delta[key]
            else:
                shared = _delta(rng, saturate, spread)
                for key in ((k, l), (l, k)):
                    delta[key] = shared
                    a[key] = a0 * shared * (1.0 + perturb * rng.random())
    c = []
    for i, x in links:
        cap = a0 * min(
            np.sqrt(delta[(2 * x, 2 * i)] * delta[(2 * i + 1, 2 * x + 1)]),
            np.sqrt(delta[(2 * i + 1, 2 * i)] * delta[(2 * x, 2 * x + 1)]),
        )
        c.append(float(cap) if rng.random() < saturate else float(cap * rng.random()))
    return a, tuple(c)


def _break_ppt(a: Dict[Pair, float], pairs: int, rng: np.random.Generator, a0: float) -> Dict[Pair, float]:
    """Shrink one cross-parity pair (2i, 2j+1), i != j, below a0."""
    i, j = rng.choice(pairs, size=2, replace=False)
    shrink = a0 * (0.1 + 0.8 * rng.random())
    a = dict(a)
    a[(2 * int(i), 2 * int(j) + 1)] = shrink
    a[(2 * int(j) + 1, 2 * int(i))] = shrink
    return a


def sample_params(
    d: int, n: int, rng: np.random.Generator, a0: float = 1.0,
    saturate: float = 0.3, spread: float = 1.0, perturb: float = 0.5,
) -> PptFamilyParams:
    links = [(i, (i + 1) % n) for i in range(n)]
    a, c = _sample_linked(d, n, links, rng, a0, saturate, spread, perturb)
    return PptFamilyParams(d=d, n=n, a0=a0, a=a, c=c)


def sample_npt_params(d: int, n: int, rng: np.random.Generator, a0: float = 1.0, **kwargs) -> PptFamilyParams:
    p = sample_params(d, n, rng, a0, **kwargs)
    return PptFamilyParams(d=d, n=n, a0=a0, a=_break_ppt(p.a, n, rng, a0), c=p.c)


def sample_partition_params(
    d: int, mu: Sequence[int], rng: np.random.Generator, a0: float = 1.0,
    saturate: float = 0.3, spread: float = 1.0, perturb: float = 0.5,
) -> PptFamilyParams:
    template = partition_saturating_params(d, mu, a0)
    a, c = _sample_linked(d, d // 2, template.links(), rng, a0, saturate, spread, perturb)
    return PptFamilyParams(d=d, n=d // 2, a0=a0, a=a, c=c, family="partition", mu=template.mu)


def sample_partition_npt_params(d: int, mu: Sequence[int], rng: np.random.Generator, a0: float = 1.0, **kwargs):
    p = sample_partition_params(d, mu, rng, a0, **kwargs)
    return PptFamilyParams(
        d=d, n=p.n, a0=a0, a=_break_ppt(p.a, d // 2, rng, a0), c=p.c, family="partition", mu=p.mu,
    )


def sample_embedded_params(
    d1: int, d2: int, combo: Sequence[int], n: int, rng: np.random.Generator, a0: float = 1.0,
    saturate: float = 0.3, spread: float = 1.0, perturb: float = 0.5,
) -> PptFamilyParams:
    c = Combination(d1, d2, tuple(combo))
    links = [(i, (i + 1) % n) for i in range(n)]
    a, couplings = _sample_linked(d1, n, links, rng, a0, saturate, spread, perturb)
    kernel = {(i, j): float(2 * a0 * rng.random()) for i in range(d1) for j in c.kernel_indices()}
    return PptFamilyParams(
        d=d1, n=n, a0=a0, a=a, c=couplings, family="embedded", d2=d2, combo=c.indices, kernel=kernel,
    )


def sample_extended_params(
    d: int, rng: np.random.Generator, a0: float = 1.0,
    saturate: float = 0.3, spread: float = 1.0, perturb: float = 0.5,
) -> PptFamilyParams:
    a: Dict[Pair, float] = {}

    def constrained(first: Pair, second: Pair, shared: bool):
        base = _delta(rng, saturate, spread)
        for key in (first, second):
            delta = base if shared else _delta(rng, saturate, spread)
            a[key] = a0 * delta * (1.0 + perturb * rng.random())

    for k in range(d):
        for l in range(k + 1, d):
            if k // 4 != l // 4:
                constrained((k, l), (l, k), shared=True)
    for i in range(d // 4):
        b = 4 * i
        for ket, bra in _extended_couplings(i):
            constrained(ket, bra, shared=False)
        constrained((b + 1, b), (b + 3, b + 2), shared=False)
        constrained((b, b + 1), (b + 2, b + 3), shared=False)
        for key in ((b, b + 2), (b + 2, b), (b + 1, b + 3), (b + 3, b + 1)):
            a[key] = float(2 * a0 * rng.random())
    return PptFamilyParams(d=d, n=d // 4, a0=a0, a=a, family="extended")


# ==================== GENERIC PPT STATES ====================

def random_ppt_state(d1: int, d2: int, rng: np.random.Generator) -> BipartiteOperator:
    """Ginibre density mixed with I/D just enough (times a random factor) to be PPT."""
    dim = d1 * d2
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    x = g @ g.conj().T
    x = BipartiteOperator(d1, d2, x / np.trace(x).real)
    low = float(np.linalg.eigvalsh(partial_transpose(x).matrix)[0])
    if low >= 0:
        return x
    weight = (0.5 + 0.5 * rng.random()) * (1.0 / dim) / (1.0 / dim - low)
    mixed = weight * x.matrix + (1 - weight) * np.eye(dim) / dim
    logger.debug(f"Mixed Ginibre draw with weight {weight:.4f} to reach PPT")
    return BipartiteOperator(d1, d2, mixed)
