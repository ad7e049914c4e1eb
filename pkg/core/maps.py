"""Self-maps of R^n, the averaged (Krasnoselskij) transform, and sampled
estimation of enriched-contraction parameters.

A map T is a (b, theta)-enriched contraction under a quasi-norm if

    ||b(x - y) + Tx - Ty|| <= theta ||x - y||   for all x, y,

with b >= 0 and 0 <= theta < b + 1. With lambda = 1/(b+1) the averaged map
T_lambda x = (1 - lambda)x + lambda Tx is then a contraction with
coefficient c = lambda * theta.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum, auto
from typing import List, Optional, Sequence

import numpy as np

from core.errors import DegeneratePair, DimensionMismatch, EmptySampleSet, InvalidParameter
from core.expression import Expression
from core.quasi_space import REL_TOL_IDENTITY, QuasiNormSpec, as_vector, induced_distance, norms
from utils.sampling import as_pairs

logger = logging.getLogger(__name__)

STEP_THRESHOLD = 2.0
STEP_HIGH_VALUE = -1.0 / 3.0


class MapKind(Enum):
    AFFINE = auto()
    REFLECTION = auto()
    STEP = auto()
    POWER = auto()
    EXPRESSION = auto()
    AVERAGED = auto()


MAP_KIND_NAMES = {
    MapKind.AFFINE: "affine",
    MapKind.REFLECTION: "reflection",
    MapKind.STEP: "step",
    MapKind.POWER: "power",
    MapKind.EXPRESSION: "expr",
    MapKind.AVERAGED: "averaged",
}
MAP_KIND_BY_NAME = {name: kind for kind, name in MAP_KIND_NAMES.items()}


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Domain:
    """Advisory box [lo, hi]; only used to draw samples and random starts."""
    lo: np.ndarray
    hi: np.ndarray

    @classmethod
    def box(cls, lo, hi) -> "Domain":
        lo, hi = _frozen(np.atleast_1d(lo)), _frozen(np.atleast_1d(hi))
        if lo.shape != hi.shape:
            raise DimensionMismatch(f"domain lo/hi shapes differ: {lo.shape} vs {hi.shape}")
        if np.any(lo > hi):
            raise InvalidParameter("domain needs lo <= hi in every coordinate")
        return cls(lo, hi)

    @property
    def dim(self) -> int:
        return self.lo.size

    def to_dict(self) -> dict:
        return {"lo": self.lo.tolist(), "hi": self.hi.tolist()}


# ---------------------------------------------------------------------------
# Map description
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class MapSpec:
    """Description of a self-map T of R^dim."""
    kind: MapKind
    dim: int
    matrix: Optional[np.ndarray] = None         # affine
    offset: Optional[np.ndarray] = None         # affine
    inner: Optional["MapSpec"] = None           # power / averaged
    n_iter: int = 1                             # power
    exprs: Optional[tuple] = None               # expression sources
    lam: float = 1.0                            # averaged
    domain: Optional[Domain] = None
    _compiled: List[Expression] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.dim < 1:
            raise InvalidParameter(f"map dimension must be >= 1, got {self.dim}")
        if self.kind == MapKind.AFFINE:
            if self.matrix is None or self.matrix.shape != (self.dim, self.dim):
                raise DimensionMismatch(f"affine map needs a {self.dim}x{self.dim} matrix")
            if self.offset is None or self.offset.shape != (self.dim,):
                raise DimensionMismatch(f"affine map needs an offset of length {self.dim}")
            if not (np.all(np.isfinite(self.matrix)) and np.all(np.isfinite(self.offset))):
                raise InvalidParameter("affine map coefficients must be finite")
        elif self.kind == MapKind.STEP and self.dim != 1:
            raise DimensionMismatch("the step map acts on R^1")
        elif self.kind == MapKind.POWER:
            if self.inner is None:
                raise InvalidParameter("power map needs an inner map")
            if int(self.n_iter) != self.n_iter or self.n_iter < 1:
                raise InvalidParameter(f"power needs an integer N >= 1, got {self.n_iter}")
        elif self.kind == MapKind.AVERAGED:
            if self.inner is None:
                raise InvalidParameter("averaged map needs an inner map")
            if not (0 < self.lam <= 1):
                raise InvalidParameter(f"lambda must lie in (0, 1], got {self.lam}")
        elif self.kind == MapKind.EXPRESSION:
            if not self.exprs or len(self.exprs) != self.dim:
                raise DimensionMismatch(f"expression map needs {self.dim} formulas")
            compiled = [Expression(src, self.dim) for src in self.exprs]
            object.__setattr__(self, "_compiled", compiled)
        if self.inner is not None and self.inner.dim != self.dim:
            raise DimensionMismatch(f"inner map has dimension {self.inner.dim}, expected {self.dim}")
        if self.domain is not None and self.domain.dim != self.dim:
            raise DimensionMismatch(f"domain has dimension {self.domain.dim}, expected {self.dim}")

    # -- constructors ------------------------------------------------------
    @classmethod
    def affine(cls, matrix, offset=None, domain: Optional[Domain] = None) -> "MapSpec":
        A = _frozen(np.atleast_2d(matrix))
        n = A.shape[0]
        v = _frozen(np.zeros(n) if offset is None else np.atleast_1d(offset))
        return cls(MapKind.AFFINE, dim=n, matrix=A, offset=v, domain=domain)

    @classmethod
    def scalar(cls, alpha: float, dim: int, offset=None) -> "MapSpec":
        """x -> alpha x + offset."""
        return cls.affine(alpha * np.eye(dim), offset)

    @classmethod
    def identity(cls, dim: int) -> "MapSpec":
        return cls.scalar(1.0, dim)

    @classmethod
    def reflection(cls, dim: int = 2, domain: Optional[Domain] = None) -> "MapSpec":
        return cls(MapKind.REFLECTION, dim=dim, domain=domain)

    @classmethod
    def step(cls, domain: Optional[Domain] = None) -> "MapSpec":
        return cls(MapKind.STEP, dim=1, domain=domain)

    @classmethod
    def power(cls, inner: "MapSpec", n: int) -> "MapSpec":
        return cls(MapKind.POWER, dim=inner.dim, inner=inner, n_iter=n, domain=inner.domain)

    @classmethod
    def expression(cls, exprs: Sequence[str], domain: Optional[Domain] = None) -> "MapSpec":
        exprs = tuple(exprs)
        return cls(MapKind.EXPRESSION, dim=len(exprs), exprs=exprs, domain=domain)

    @property
    def name(self) -> str:
        return MAP_KIND_NAMES[self.kind]

    # -- serialization -----------------------------------------------------
    def to_dict(self) -> dict:
        d = {"kind": self.name}
        if self.kind == MapKind.AFFINE:
            d["matrix"] = self.matrix.tolist()
            d["offset"] = self.offset.tolist()
        elif self.kind == MapKind.REFLECTION:
            d["dim"] = self.dim
        elif self.kind == MapKind.POWER:
            d["inner"] = self.inner.to_dict()
            d["n_iter"] = self.n_iter
        elif self.kind == MapKind.AVERAGED:
            d["inner"] = self.inner.to_dict()
            d["lambda"] = self.lam
        elif self.kind == MapKind.EXPRESSION:
            d["exprs"] = list(self.exprs)
        if self.domain is not None and self.kind not in (MapKind.POWER, MapKind.AVERAGED):
            d["domain"] = self.domain.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict, dim: Optional[int] = None) -> "MapSpec":
        """Build a map from its JSON form; dim fills in for a reflection without one."""
        if not isinstance(d, dict) or "kind" not in d:
            raise InvalidParameter("map needs a 'kind'")
        kind = MAP_KIND_BY_NAME.get(d["kind"])
        if kind is None:
            raise InvalidParameter(f"unknown map kind {d['kind']!r}")
        domain = None
        if "domain" in d:
            box = d["domain"]
            if not isinstance(box, dict) or "lo" not in box or "hi" not in box:
                raise InvalidParameter("domain needs 'lo' and 'hi'")
            domain = Domain.box(box["lo"], box["hi"])

        if kind == MapKind.AFFINE:
            if "matrix" not in d:
                raise InvalidParameter("affine map needs 'matrix'")
            return cls.affine(d["matrix"], d.get("offset"), domain=domain)
        if kind == MapKind.REFLECTION:
            n = d.get("dim", dim if dim is not None else (domain.dim if domain else 2))
            return cls.reflection(int(n), domain=domain)
        if kind == MapKind.STEP:
            return cls.step(domain=domain)
        if kind == MapKind.EXPRESSION:
            exprs = d.get("exprs")
            if not isinstance(exprs, list) or not all(isinstance(e, str) for e in exprs):
                raise InvalidParameter("expression map needs 'exprs' as a list of strings")
            return cls.expression(exprs, domain=domain)
        if "inner" not in d:
            raise InvalidParameter(f"{d['kind']} map needs 'inner'")
        inner = cls.from_dict(d["inner"], dim=dim)
        if kind == MapKind.POWER:
            return cls.power(inner, d.get("n_iter", 1))
        return averaged_map(inner, float(d.get("lambda", 1.0)))


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------
def apply_rows(T: MapSpec, X: np.ndarray) -> np.ndarray:
    """Apply T to every row of X (shape (m, dim))."""
    if X.ndim != 2 or X.shape[1] != T.dim:
        raise DimensionMismatch(f"{T.name} map expects dimension {T.dim}, got shape {X.shape}")
    if T.kind == MapKind.AFFINE:
        return X @ T.matrix.T + T.offset
    if T.kind == MapKind.REFLECTION:
        return 1.0 - X
    if T.kind == MapKind.STEP:
        return np.where(X <= STEP_THRESHOLD, 0.0, STEP_HIGH_VALUE)
    if T.kind == MapKind.POWER:
        out = X
        for _ in range(int(T.n_iter)):
            out = apply_rows(T.inner, out)
        return out
    if T.kind == MapKind.AVERAGED:
        return (1.0 - T.lam) * X + T.lam * apply_rows(T.inner, X)
    return np.column_stack([f(X) for f in T._compiled])


def eval_map(T: MapSpec, x) -> np.ndarray:
    """Tx for a single point."""
    v = as_vector(x)
    if v.size != T.dim:
        raise DimensionMismatch(f"{T.name} map expects dimension {T.dim}, got {v.size}")
    return apply_rows(T, v[None, :])[0]


def averaged_map(T: MapSpec, lam: float) -> MapSpec:
    """T_lambda x = (1 - lambda) x + lambda Tx; it has the same fixed points as T."""
    if not (0 < lam <= 1):
        raise InvalidParameter(f"lambda must lie in (0, 1], got {lam}")
    return MapSpec(MapKind.AVERAGED, dim=T.dim, inner=T, lam=float(lam), domain=T.domain)


def fixed_point_residual(T: MapSpec, spec: QuasiNormSpec, x) -> float:
    """d(Tx, x)."""
    return induced_distance(spec, eval_map(T, x), x)


# ---------------------------------------------------------------------------
# Enriched-contraction parameters
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class EnrichedParams:
    """(b, theta) and the derived lambda = 1/(b+1), c = lambda * theta."""
    b: float
    theta: float
    lam: float
    c: float
    empirical: bool = False     # True when theta came from sampling

    @classmethod
    def from_b_theta(cls, b: float, theta: float, empirical: bool = False) -> "EnrichedParams":
        b, theta = float(b), float(theta)
        if not math.isfinite(b) or b < 0:
            raise InvalidParameter(f"b must be a finite number >= 0, got {b}")
        if not math.isfinite(theta) or theta < 0 or theta >= b + 1:
            raise InvalidParameter(f"theta must lie in [0, b+1) = [0, {b + 1:g}), got {theta}")
        lam = 1.0 / (b + 1.0)
        return cls(b=b, theta=theta, lam=lam, c=lam * theta, empirical=empirical)

    def to_dict(self) -> dict:
        return {"b": self.b, "theta": self.theta, "lambda": self.lam, "c": self.c,
                "empirical": self.empirical}

    @classmethod
    def from_dict(cls, d: dict) -> "EnrichedParams":
        if "b" not in d or "theta" not in d:
            raise InvalidParameter("enriched parameters need 'b' and 'theta'")
        return cls.from_b_theta(d["b"], d["theta"], bool(d.get("empirical", False)))


@dataclass
class EnrichmentCandidate:
    b: float
    theta_hat: float
    c: float
    qualifies: bool

    def to_dict(self) -> dict:
        return {"b": self.b, "theta_hat": self.theta_hat, "c": self.c, "qualifies": self.qualifies}


def _scalar_linear_part(T: MapSpec) -> Optional[float]:
    """alpha if T is x -> alpha x + v for a scalar alpha, else None."""
    if T.kind == MapKind.REFLECTION:
        return -1.0
    if T.kind == MapKind.AFFINE:
        alpha = T.matrix[0, 0]
        if np.array_equal(T.matrix, alpha * np.eye(T.dim)):
            return float(alpha)
        return None
    if T.kind == MapKind.POWER:
        inner = _scalar_linear_part(T.inner)
        return None if inner is None else inner ** int(T.n_iter)
    if T.kind == MapKind.AVERAGED:
        inner = _scalar_linear_part(T.inner)
        return None if inner is None else (1.0 - T.lam) + T.lam * inner
    return None


def analytic_theta(T: MapSpec, b: float) -> Optional[float]:
    """Exact enriched coefficient |b + alpha| for maps x -> alpha x + v.

    Covers the reflection (alpha = -1, giving |b - 1|), scalar affine maps,
    and their powers and averages. Returns None for other maps.
    """
    alpha = _scalar_linear_part(T)
    if alpha is None:
        return None
    return abs(b + alpha)


def estimate_theta(T: MapSpec, b: float, spec: QuasiNormSpec, samples) -> float:
    """Largest sampled ||b(x-y) + Tx - Ty|| / ||x-y||.

    A lower bound on the true enriched coefficient for this b.
    """
    if not math.isfinite(b) or b < 0:
        raise InvalidParameter(f"b must be >= 0, got {b}")
    X, Y = as_pairs(samples)
    if X.shape[0] == 0:
        raise EmptySampleSet("no sample pairs given")
    if X.shape != Y.shape or X.shape[1] != T.dim:
        raise DimensionMismatch(f"samples of shape {X.shape} do not fit a map on R^{T.dim}")
    D = X - Y
    nd = norms(spec, D)
    keep = nd > 0
    if not np.any(keep):
        raise DegeneratePair("every sampled pair has x == y")
    num = norms(spec, b * D[keep] + (apply_rows(T, X[keep]) - apply_rows(T, Y[keep])))
    theta_hat = float(np.max(num / nd[keep]))
    logger.debug(f"theta estimate for {T.name}, b={b:g} under {spec}: {theta_hat:.12g}")
    return theta_hat


def scan_enrichment(T: MapSpec, spec: QuasiNormSpec, b_grid: Sequence[float], samples,
                    require_positive_theta: bool = False) -> List[EnrichmentCandidate]:
    """theta_hat and c = theta_hat/(b+1) for every b in the grid.

    With require_positive_theta, grid points whose theta_hat is zero up to
    REL_TOL_IDENTITY do not qualify.
    """
    if len(b_grid) == 0:
        raise InvalidParameter("b grid is empty")
    pairs = as_pairs(samples)
    candidates = []
    for b in b_grid:
        b = float(b)
        theta_hat = estimate_theta(T, b, spec, pairs)
        qualifies = theta_hat < b + 1
        if require_positive_theta and theta_hat <= REL_TOL_IDENTITY:
            qualifies = False
        candidates.append(EnrichmentCandidate(b=b, theta_hat=theta_hat,
                                              c=theta_hat / (b + 1.0), qualifies=qualifies))
    return candidates


def select_enrichment(candidates: List[EnrichmentCandidate],
                      tie_tol: float = 1e-12) -> Optional[EnrichedParams]:
    """The qualifying candidate with smallest c; near-ties keep the earlier one."""
    best = None
    for cand in candidates:
        if not cand.qualifies:
            continue
        if best is None or cand.c < best.c - tie_tol:
            best = cand
    if best is None:
        return None
    return EnrichedParams.from_b_theta(best.b, best.theta_hat, empirical=True)


def search_enrichment(T: MapSpec, spec: QuasiNormSpec, b_grid: Sequence[float], samples,
                      require_positive_theta: bool = False) -> Optional[EnrichedParams]:
    """Pick the b from the grid that gives the smallest empirical c, if any qualifies."""
    candidates = scan_enrichment(T, spec, b_grid, samples, require_positive_theta)
    selected = select_enrichment(candidates)
    if selected is None:
        logger.info(f"{T.name}: no grid value of b gives theta_hat < b + 1")
    else:
        logger.info(f"{T.name}: selected b={selected.b:g}, theta_hat={selected.theta:.6g}, "
                    f"c={selected.c:.6g}")
    return selected
