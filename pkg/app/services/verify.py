"""
Numerical certification of witnesses and detection claims.

Product minimization is a see-saw: for fixed eta the best zeta is the lowest
eigenvector of B(eta)[k,l] = <eta,k|W|eta,l>, and symmetrically for eta.
Restarts are independent; each seeds numpy.random.default_rng([seed, index])
and the reduction keeps the lowest value, ties going to the lowest index.
"""
import asyncio
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from app.config import settings
from app.services.densemat import (
    BipartiteOperator,
    expectation,
    min_eigenvalue,
    partial_transpose,
    product_vector,
    require_hermitian,
)
from app.services.skewcanon import build_J
from app.services.witnesses import (
    Witness,
    canonical_witness,
    detection_bound,
    jamiolkowski_apply,
    npt_floor,
)
from app.utils.errors import NotAStateError, ParameterError, UncertifiedWitnessError
from app.utils.logger import logger

FIELDS = ("complex", "real")
CLASSES = ("undetected", "ppt_entangled_detected", "npt_window", "no-bound")


@dataclass(frozen=True)
class SeeSawConfig:
    restarts: int = 200
    max_iters: int = 500
    tol: float = 1e-12
    seed: int = 0
    field: str = "complex"

    def __post_init__(self):
        if self.restarts < 1:
            raise ParameterError(f"restarts must be >= 1, got {self.restarts}.")
        if self.max_iters < 1:
            raise ParameterError(f"max_iters must be >= 1, got {self.max_iters}.")
        if not self.tol > 0:
            raise ParameterError(f"tol must be positive, got {self.tol}.")
        if self.field not in FIELDS:
            raise ParameterError(f"field must be one of {FIELDS}, got {self.field!r}.")

    @classmethod
    def from_settings(cls, **overrides) -> "SeeSawConfig":
        values = {
            "restarts": settings.SEESAW_RESTARTS,
            "max_iters": settings.SEESAW_MAX_ITERS,
            "tol": settings.SEESAW_TOL,
            "seed": settings.SEED,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


@dataclass
class RestartResult:
    index: int
    value: float
    eta: np.ndarray
    zeta: np.ndarray
    iterations: int
    converged: bool
    monotone_violations: int


@dataclass
class CertReport:
    min_value: float
    argmin: Tuple[np.ndarray, np.ndarray]
    is_ew: bool
    restart_histogram: Dict[str, Any]
    cert_tol: float
    config: SeeSawConfig

    def to_dict(self) -> dict:
        eta, zeta = self.argmin
        return {
            "min_value": self.min_value,
            "is_ew": self.is_ew,
            "cert_tol": self.cert_tol,
            "argmin": {
                "eta": {"re": eta.real.tolist(), "im": eta.imag.tolist()},
                "zeta": {"re": zeta.real.tolist(), "im": zeta.imag.tolist()},
            },
            "restart_histogram": self.restart_histogram,
            "config": {
                "restarts": self.config.restarts,
                "max_iters": self.config.max_iters,
                "tol": self.config.tol,
                "seed": self.config.seed,
                "field": self.config.field,
            },
        }


@dataclass
class PptCheck:
    is_ppt: bool
    min_eigenvalue: float


@dataclass
class Detection:
    klass: str
    trace: float
    bound: Optional[float]
    npt_floor: Optional[float]
    margin: Optional[float]
    is_ppt: bool
    ppt_min_eigenvalue: float
    within_bound: Optional[bool]
    within_npt_floor: Optional[bool]

    def to_dict(self) -> dict:
        return {
            "class": self.klass,
            "trace": self.trace,
            "bound": self.bound,
            "npt_floor": self.npt_floor,
            "margin": self.margin,
            "is_ppt": self.is_ppt,
            "ppt_min_eigenvalue": self.ppt_min_eigenvalue,
            "within_bound": self.within_bound,
            "within_npt_floor": self.within_npt_floor,
        }


@dataclass
class KernelSpan:
    rank: int
    dim: int
    basis: np.ndarray
    accepted: int
    rejected: int
    families: Tuple[str, ...] = field(default_factory=tuple)

    @property
    def full(self) -> bool:
        return self.rank == self.dim

    def to_dict(self) -> dict:
        return {
            "rank": self.rank,
            "dim": self.dim,
            "full": self.full,
            "accepted": self.accepted,
            "rejected": self.rejected,
            "families": list(self.families),
        }


# ==================== SEE-SAW ====================

def _lowest(h: np.ndarray, real: bool) -> Tuple[float, np.ndarray]:
    h = (h + h.conj().T) / 2
    if real:
        h = h.real
    vals, vecs = linalg.eigh(h, subset_by_index=[0, 0])
    return float(vals[0]), vecs[:, 0]


def _random_unit(size: int, rng: np.random.Generator, real: bool) -> np.ndarray:
    v = rng.standard_normal(size)
    if not real:
        v = v + 1j * rng.standard_normal(size)
    return v / np.linalg.norm(v)


def _seesaw_restart(w4: np.ndarray, cfg: SeeSawConfig, index: int, slack: float) -> RestartResult:
    d1, d2 = w4.shape[0], w4.shape[1]
    real = cfg.field == "real"
    rng = np.random.default_rng([cfg.seed, index])
    eta = _random_unit(d1, rng, real)

    previous = None
    value = np.inf
    zeta = None
    violations = 0
    converged = False
    iterations = 0

    for iterations in range(1, cfg.max_iters + 1):
        _, zeta = _lowest(np.einsum("i,ikjl,j->kl", eta.conj(), w4, eta), real)
        value, eta = _lowest(np.einsum("k,ikjl,l->ij", zeta.conj(), w4, zeta), real)
        if previous is not None:
            if value > previous + slack:
                violations += 1
            if abs(previous - value) < cfg.tol:
                converged = True
                break
        previous = value

    return RestartResult(index, value, eta.astype(complex), zeta.astype(complex), iterations, converged, violations)


def _histogram(results: List[RestartResult], best: float) -> Dict[str, Any]:
    values = np.array([r.value for r in results])
    iters = np.array([r.iterations for r in results])
    counts, edges = np.histogram(values, bins=10)
    return {
        "restarts": len(results),
        "converged": int(sum(r.converged for r in results)),
        "iterations": {"min": int(iters.min()), "max": int(iters.max()), "mean": float(iters.mean())},
        "hits_near_best": int(np.sum(values <= best + 1e-8)),
        "monotone": all(r.monotone_violations == 0 for r in results),
        "monotone_violations": int(sum(r.monotone_violations for r in results)),
        "value_bins": {"edges": edges.tolist(), "counts": counts.tolist()},
    }


class CertificationService:
    """Runs see-saw restarts concurrently behind a semaphore."""

    def __init__(self, max_workers: int = None, cert_tol: float = None):
        self.max_workers = max_workers or settings.MAX_WORKERS
        self.cert_tol = settings.CERT_TOL if cert_tol is None else cert_tol

    async def product_minimize(self, w: Witness, cfg: SeeSawConfig = None) -> CertReport:
        cfg = cfg or SeeSawConfig.from_settings()
        require_hermitian(w.op, "witness")
        w4 = w.op.tensor()
        slack = 1e-12 * max(1.0, float(np.linalg.norm(w.op.matrix, 2)))

        sem = asyncio.Semaphore(self.max_workers)

        async def run(index: int) -> RestartResult:
            async with sem:
                return await asyncio.to_thread(_seesaw_restart, w4, cfg, index, slack)

        results = await asyncio.gather(*[run(i) for i in range(cfg.restarts)])
        best = min(results, key=lambda r: (r.value, r.index))
        histogram = _histogram(results, best.value)
        if not histogram["monotone"]:
            logger.warning(f"See-saw objective increased {histogram['monotone_violations']} times")

        report = CertReport(
            min_value=best.value,
            argmin=(best.eta, best.zeta),
            is_ew=best.value >= -self.cert_tol,
            restart_histogram=histogram,
            cert_tol=self.cert_tol,
            config=cfg,
        )
        logger.info(
            f"Certified {w.kind} witness over {cfg.field} products: min {best.value:.3e}, is_ew={report.is_ew}"
        )
        return report

    async def is_entanglement_witness(self, w: Witness, cfg: SeeSawConfig = None) -> Tuple[Witness, CertReport]:
        report = await self.product_minimize(w, cfg)
        return w.with_certified(report.is_ew), report


certifier = CertificationService()


def product_minimize(w: Witness, cfg: SeeSawConfig = None) -> CertReport:
    return asyncio.run(certifier.product_minimize(w, cfg))


def is_entanglement_witness(w: Witness, cfg: SeeSawConfig = None) -> Tuple[Witness, CertReport]:
    return asyncio.run(certifier.is_entanglement_witness(w, cfg))


# ==================== PPT AND DETECTION ====================

def is_ppt(rho: BipartiteOperator) -> PptCheck:
    require_hermitian(rho, "density operator")
    tr = rho.trace()
    if abs(tr - 1.0) > settings.EIGEN_TOL:
        raise NotAStateError(f"Density operator has trace {tr.real:.12g}, expected 1.")
    low = min_eigenvalue(partial_transpose(rho, "A"))
    return PptCheck(low >= -settings.EIGEN_TOL, low)


def classify_detection(w: Witness, rho: BipartiteOperator) -> Detection:
    """Tr(W rho) against the provenance bound and the PPT flag."""
    t = expectation(w.op, rho)
    ppt = is_ppt(rho)
    bound = detection_bound(w)
    floor = npt_floor(w)
    tol = settings.BOUND_TOL

    if bound is None:
        logger.info(f"No detection bound for {w.kind} witness {w.provenance}")
        return Detection("no-bound", t, None, floor, None, ppt.is_ppt, ppt.min_eigenvalue, None, None)

    if t >= -tol:
        klass = "undetected"
    elif ppt.is_ppt:
        klass = "ppt_entangled_detected"
    else:
        klass = "npt_window"

    within_bound = (t >= bound - tol) if ppt.is_ppt else None
    within_floor = (t >= floor - tol) if (floor is not None and not ppt.is_ppt) else None
    if within_bound is False:
        logger.warning(f"PPT state reaches {t:.6g} below the family bound {bound:.6g}")
    if within_floor is False:
        logger.warning(f"State reaches {t:.6g} below the NPT floor {floor:.6g}")

    return Detection(klass, t, bound, floor, t - bound, ppt.is_ppt, ppt.min_eigenvalue, within_bound, within_floor)


# ==================== KERNEL SPAN ====================

def _grid_vectors(size: int) -> List[np.ndarray]:
    eye = np.eye(size, dtype=complex)
    out = [eye[k] for k in range(size)]
    for k in range(size):
        for l in range(k + 1, size):
            out.append((eye[k] + eye[l]) / np.sqrt(2))
            out.append((eye[k] + 1j * eye[l]) / np.sqrt(2))
    return out


_MIXES = ((1.0, 0.0), (0.0, 1.0), (1 / np.sqrt(2), 1 / np.sqrt(2)))


def _pad(v: np.ndarray, d: int, offset: int = 0) -> np.ndarray:
    out = np.zeros(d, dtype=complex)
    out[offset:offset + v.size] = v
    return out


def _normalized(v: np.ndarray) -> Optional[np.ndarray]:
    norm = np.linalg.norm(v)
    return v / norm if norm > 1e-12 else None


def _kernel_setup(w: Witness) -> Tuple[int, int, np.ndarray]:
    p = w.provenance
    if w.kind == "canonical":
        lambdas = p["lambdas"]
        return p["d"], len(lambdas), build_J(p["d"], lambdas).entries
    if w.kind == "opc":
        return p["d"], p["n"], build_J(p["d"], [1.0] * p["n"]).entries
    raise ParameterError(f"No analytic kernel family is known for {w.kind} witnesses.")


def default_families(w: Witness) -> Tuple[str, ...]:
    return ("block", "mixed", "complement") if w.kind == "opc" else ("block", "conjugate")


def _grid_candidates(family: str, d: int, n: int, j: np.ndarray):
    inner = 2 * n
    if family == "block":
        for g in _grid_vectors(inner) if inner else []:
            eta = _pad(g, d)
            for alpha, beta in _MIXES:
                yield eta, alpha * eta.conj() + beta * (j @ eta)
    elif family == "conjugate":
        for g in _grid_vectors(d):
            yield g, g.conj()
    elif family == "mixed":
        if not inner or inner == d:
            return
        for g in _grid_vectors(inner):
            core = _pad(g, d)
            for c in range(inner, d):
                for c2 in range(inner, d):
                    e, e2 = np.eye(d)[c], np.eye(d)[c2]
                    for alpha, beta in _MIXES:
                        yield core + e, alpha * core.conj() + beta * (j @ core) + e2
    elif family == "complement":
        for c in range(inner, d):
            for c2 in range(inner, d):
                yield np.eye(d, dtype=complex)[c], np.eye(d, dtype=complex)[c2]


def _random_candidate(family: str, d: int, n: int, j: np.ndarray, rng: np.random.Generator):
    inner = 2 * n

    def cvec(size):
        return rng.standard_normal(size) + 1j * rng.standard_normal(size)

    phase = np.exp(2j * np.pi * rng.random())
    theta = rng.random() * np.pi / 2
    alpha, beta = np.cos(theta) * phase, np.sin(theta) * np.exp(2j * np.pi * rng.random())
    if family == "block" and inner:
        eta = _pad(cvec(inner), d)
        return eta, alpha * eta.conj() + beta * (j @ eta)
    if family == "conjugate":
        eta = cvec(d)
        return eta, eta.conj()
    if family == "mixed" and 0 < inner < d:
        core = _pad(cvec(inner), d)
        rest = _pad(cvec(d - inner), d, inner)
        rest2 = _pad(cvec(d - inner), d, inner)
        scale = cvec(1)[0]
        return core + rest, scale * (alpha * core.conj() + beta * (j @ core)) + rest2
    if family == "complement" and inner < d:
        return _pad(cvec(d - inner), d, inner), _pad(cvec(d - inner), d, inner)
    return None


def kernel_span_rank(
    w: Witness, budget: int = None, families: Sequence[str] = None, seed: int = None,
) -> KernelSpan:
    """Rank of the span of product vectors on which the certified witness vanishes."""
    if not w.certified:
        raise UncertifiedWitnessError("Kernel span probes need a witness certified by is_entanglement_witness.")
    d, n, j = _kernel_setup(w)
    families = tuple(families or default_families(w))
    dim = w.op.dim
    budget = settings.KERNEL_BUDGET_FACTOR * dim * dim if budget is None else budget
    rng = np.random.default_rng(settings.SEED if seed is None else seed)
    tol = settings.CERT_TOL

    vectors: List[np.ndarray] = []
    accepted = rejected = 0

    def consider(eta, zeta):
        nonlocal accepted, rejected
        eta, zeta = _normalized(eta), _normalized(zeta)
        if eta is None or zeta is None:
            return
        gamma = product_vector(eta, zeta)
        if abs(np.vdot(gamma, w.op.matrix @ gamma)) <= tol:
            vectors.append(gamma)
            accepted += 1
        else:
            rejected += 1

    for family in families:
        for eta, zeta in _grid_candidates(family, d, n, j):
            consider(eta, zeta)
    for k in range(budget):
        candidate = _random_candidate(families[k % len(families)], d, n, j, rng)
        if candidate is not None:
            consider(*candidate)

    if not vectors:
        return KernelSpan(0, dim, np.zeros((dim, 0)), accepted, rejected, families)
    _, s, vh = linalg.svd(np.array(vectors), full_matrices=False)
    rank = int(np.sum(s > settings.EIGEN_TOL * max(1.0, s[0])))
    logger.info(f"Kernel span of {w.kind} witness: rank {rank}/{dim} from {accepted} zeros ({rejected} rejected)")
    return KernelSpan(rank, dim, vh[:rank].T, accepted, rejected, families)


# ==================== MAP POSITIVITY ====================

def map_positivity_probe(lambdas: Sequence[float], d: int, samples: int = None, seed: int = None) -> float:
    """Worst lowest eigenvalue of phi(|x><x|) over random pure states."""
    samples = settings.MAP_PROBE_SAMPLES if samples is None else samples
    if samples < 1:
        raise ParameterError(f"samples must be >= 1, got {samples}.")
    w = canonical_witness(d, lambdas)
    rng = np.random.default_rng(settings.SEED if seed is None else seed)
    worst = np.inf
    for _ in range(samples):
        x = _random_unit(d, rng, real=False)
        image = jamiolkowski_apply(w, np.outer(x, x.conj()))
        worst = min(worst, float(np.linalg.eigvalsh((image + image.conj().T) / 2)[0]))
    return worst
