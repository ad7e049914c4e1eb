"""Quasi-norms on R^n, the induced quasimetric, and sampled axiom checks.

Four quasi-norm families are supported:

- standard_p      the usual l_p norm, 1 <= p <= inf (C = 1)
- maligranda_ap   the a,p functional on R^2: ||x||_p if x_2 != 0, else a|x_1|
                  (C = max{a, 1/a})
- tychonoff_half  (sum sqrt|x_i|)^2, the l_1/2 quasi-norm truncated to R^n (C = 2)
- p_quasi         (sum |x_i|^p)^(1/p), 0 < p < 1 (C = 2^(1/p - 1))

Every check here is sampling-based: it can falsify an inequality on the
given samples, never prove it.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum, auto
from typing import List, Optional, Tuple

import numpy as np

from core.errors import DimensionMismatch, EmptySampleSet, IndexOutOfRange, InvalidParameter
from utils.sampling import as_pairs

logger = logging.getLogger(__name__)

REL_TOL_INEQUALITY = 1e-9
REL_TOL_IDENTITY = 1e-12


class NormKind(Enum):
    STANDARD_P = auto()
    MALIGRANDA_AP = auto()
    TYCHONOFF_HALF = auto()
    P_QUASI = auto()


KIND_NAMES = {
    NormKind.STANDARD_P: "standard_p",
    NormKind.MALIGRANDA_AP: "maligranda_ap",
    NormKind.TYCHONOFF_HALF: "tychonoff_half",
    NormKind.P_QUASI: "p_quasi",
}
KIND_BY_NAME = {name: kind for kind, name in KIND_NAMES.items()}


# ---------------------------------------------------------------------------
# Vectors
# ---------------------------------------------------------------------------
def as_vector(x, dim: Optional[int] = None) -> np.ndarray:
    """Coerce x to a finite 1-D float array, optionally of a given length."""
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1 or v.size == 0:
        raise DimensionMismatch(f"expected a non-empty coordinate list, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise InvalidParameter(f"vector has non-finite coordinates: {v.tolist()}")
    if dim is not None and v.size != dim:
        raise DimensionMismatch(f"expected dimension {dim}, got {v.size}")
    return v


def _parse_p(value) -> float:
    if isinstance(value, str):
        if value.strip().lower() in ("inf", "infinity", "+inf"):
            return math.inf
        raise InvalidParameter(f"p must be a number or 'inf', got {value!r}")
    return float(value)


# ---------------------------------------------------------------------------
# Quasi-norm description
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class QuasiNormSpec:
    """Tagged description of a quasi-norm on R^n."""
    kind: NormKind
    p: float = 1.0
    a: Optional[float] = None       # maligranda_ap only
    dim: Optional[int] = None       # None = any dimension (maligranda_ap is always 2)

    def __post_init__(self):
        if self.kind == NormKind.MALIGRANDA_AP and self.dim is None:
            object.__setattr__(self, "dim", 2)
        _validate(self)

    @classmethod
    def standard_p(cls, p=2.0, dim: Optional[int] = None) -> "QuasiNormSpec":
        return cls(NormKind.STANDARD_P, p=_parse_p(p), dim=dim)

    @classmethod
    def max_norm(cls, dim: Optional[int] = None) -> "QuasiNormSpec":
        return cls(NormKind.STANDARD_P, p=math.inf, dim=dim)

    @classmethod
    def maligranda_ap(cls, a: float, p=1.0) -> "QuasiNormSpec":
        return cls(NormKind.MALIGRANDA_AP, p=_parse_p(p), a=float(a), dim=2)

    @classmethod
    def tychonoff_half(cls, dim: Optional[int] = None) -> "QuasiNormSpec":
        return cls(NormKind.TYCHONOFF_HALF, p=0.5, dim=dim)

    @classmethod
    def p_quasi(cls, p: float, dim: Optional[int] = None) -> "QuasiNormSpec":
        return cls(NormKind.P_QUASI, p=float(p), dim=dim)

    @property
    def name(self) -> str:
        return KIND_NAMES[self.kind]

    @property
    def C(self) -> float:
        return quasi_triangle_constant(self)

    def to_dict(self) -> dict:
        d = {"kind": self.name}
        if self.kind != NormKind.TYCHONOFF_HALF:
            d["p"] = "inf" if math.isinf(self.p) else self.p
        if self.kind == NormKind.MALIGRANDA_AP:
            d["a"] = self.a
        if self.dim is not None:
            d["dim"] = self.dim
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "QuasiNormSpec":
        if not isinstance(d, dict) or "kind" not in d:
            raise InvalidParameter("quasi-norm needs a 'kind'")
        kind = KIND_BY_NAME.get(d["kind"])
        if kind is None:
            raise InvalidParameter(f"unknown quasi-norm kind {d['kind']!r}")
        dim = d.get("dim")
        if dim is not None:
            dim = int(dim)
        if kind == NormKind.STANDARD_P:
            return cls.standard_p(d.get("p", 2.0), dim=dim)
        if kind == NormKind.MALIGRANDA_AP:
            if "a" not in d:
                raise InvalidParameter("maligranda_ap needs 'a'")
            if dim not in (None, 2):
                raise InvalidParameter("maligranda_ap is defined on R^2 only")
            return cls.maligranda_ap(d["a"], d.get("p", 1.0))
        if kind == NormKind.TYCHONOFF_HALF:
            return cls.tychonoff_half(dim=dim)
        if "p" not in d:
            raise InvalidParameter("p_quasi needs 'p'")
        return cls.p_quasi(_parse_p(d["p"]), dim=dim)

    def __str__(self):
        if self.kind == NormKind.MALIGRANDA_AP:
            return f"maligranda_ap(a={self.a:g}, p={self.p:g})"
        if self.kind == NormKind.TYCHONOFF_HALF:
            return "tychonoff_half"
        return f"{self.name}(p={self.p:g})"


def _validate(spec: QuasiNormSpec):
    p = spec.p
    if spec.dim is not None and spec.dim < 1:
        raise InvalidParameter(f"dim must be >= 1, got {spec.dim}")
    if spec.kind == NormKind.STANDARD_P:
        if math.isnan(p) or p < 1:
            raise InvalidParameter(f"standard_p needs p >= 1, got {p}")
    elif spec.kind == NormKind.MALIGRANDA_AP:
        a = spec.a
        if a is None or not math.isfinite(a) or a <= 0 or a == 1:
            raise InvalidParameter(f"maligranda_ap needs a > 0 and a != 1, got {a}")
        if math.isnan(p) or p < 1:
            raise InvalidParameter(f"maligranda_ap needs 1 <= p <= inf, got {p}")
        if spec.dim != 2:
            raise InvalidParameter("maligranda_ap is defined on R^2 only")
    elif spec.kind == NormKind.P_QUASI:
        if not (0 < p < 1):
            raise InvalidParameter(f"p_quasi needs 0 < p < 1, got {p}")


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------
def _lp_rows(A: np.ndarray, p: float) -> np.ndarray:
    """l_p functional of each row of a nonnegative array (any p > 0)."""
    if math.isinf(p):
        return A.max(axis=1)
    if p == 1:
        return A.sum(axis=1)
    if p == 2:
        return np.sqrt((A * A).sum(axis=1))
    # Scale by the row max so A**p cannot overflow.
    m = A.max(axis=1)
    safe = np.where(m > 0, m, 1.0)
    return m * ((A / safe[:, None]) ** p).sum(axis=1) ** (1.0 / p)


def norms(spec: QuasiNormSpec, X) -> np.ndarray:
    """Quasi-norm of every row of X (a single vector is treated as one row)."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    n = X.shape[1]
    if spec.dim is not None and n != spec.dim:
        raise DimensionMismatch(f"{spec} expects dimension {spec.dim}, got {n}")
    A = np.abs(X)

    if spec.kind == NormKind.STANDARD_P:
        return _lp_rows(A, spec.p)
    if spec.kind == NormKind.MALIGRANDA_AP:
        return np.where(X[:, 1] != 0, _lp_rows(A, spec.p), spec.a * A[:, 0])
    if spec.kind == NormKind.TYCHONOFF_HALF:
        return np.sqrt(A).sum(axis=1) ** 2
    return _lp_rows(A, spec.p)


def eval_quasi_norm(spec: QuasiNormSpec, x) -> float:
    """||x|| under spec."""
    v = as_vector(x, spec.dim)
    return float(norms(spec, v)[0])


def quasi_triangle_constant(spec: QuasiNormSpec) -> float:
    """The analytic quasi-triangle constant C of the family."""
    if spec.kind == NormKind.STANDARD_P:
        return 1.0
    if spec.kind == NormKind.MALIGRANDA_AP:
        return max(spec.a, 1.0 / spec.a)
    if spec.kind == NormKind.TYCHONOFF_HALF:
        return 2.0
    return aoki_rolewicz_constant(spec.p)


def induced_distance(spec: QuasiNormSpec, x, y) -> float:
    """d(x, y) = ||x - y||."""
    u = as_vector(x, spec.dim)
    v = as_vector(y, spec.dim)
    if u.shape != v.shape:
        raise DimensionMismatch(f"cannot compare vectors of dimension {u.size} and {v.size}")
    return float(norms(spec, u - v)[0])


def aoki_rolewicz_exponent(C: float) -> float:
    """The p in (0, 1] with C = 2^(1/p - 1)."""
    if not math.isfinite(C) or C < 1:
        raise InvalidParameter(f"quasi-triangle constant must be >= 1, got {C}")
    return 1.0 / (1.0 + math.log2(C))


def aoki_rolewicz_constant(p: float) -> float:
    """C = 2^(1/p - 1) for p in (0, 1]."""
    if not (0 < p <= 1):
        raise InvalidParameter(f"exponent must lie in (0, 1], got {p}")
    return 2.0 ** (1.0 / p - 1.0)


# ---------------------------------------------------------------------------
# Sampled checks
# ---------------------------------------------------------------------------
def _pair_list(v: Optional[Tuple[np.ndarray, np.ndarray]]):
    if v is None:
        return None
    return [v[0].tolist(), v[1].tolist()]


@dataclass
class PNormReport:
    p: float
    holds: bool
    worst_ratio: float
    witness: Optional[Tuple[np.ndarray, np.ndarray]] = None
    samples_used: int = 0

    def to_dict(self) -> dict:
        return {"p": self.p, "holds": self.holds, "worst_ratio": self.worst_ratio,
                "witness": _pair_list(self.witness), "samples_used": self.samples_used}


@dataclass
class QuasiTriangleReport:
    claimed_C: float
    empirical_C: float
    holds: bool
    extremal_pair: Optional[Tuple[np.ndarray, np.ndarray]] = None
    violation_of_claimed_C: Optional[Tuple[np.ndarray, np.ndarray]] = None
    samples_used: int = 0

    def to_dict(self) -> dict:
        return {"claimed_C": self.claimed_C, "empirical_C": self.empirical_C,
                "holds": self.holds, "extremal_pair": _pair_list(self.extremal_pair),
                "violation_of_claimed_C": _pair_list(self.violation_of_claimed_C),
                "samples_used": self.samples_used}


@dataclass
class SeriesBoundReport:
    m: int
    lhs: float
    rhs: float
    holds: bool
    finite_sums_hold: bool = True
    worst_finite_sum_ratio: float = 0.0

    def to_dict(self) -> dict:
        return {"m": self.m, "lhs": self.lhs, "rhs": self.rhs, "holds": self.holds,
                "finite_sums_hold": self.finite_sums_hold,
                "worst_finite_sum_ratio": self.worst_finite_sum_ratio}


@dataclass
class HomogeneityReport:
    max_relative_error: float
    holds: bool
    samples_used: int = 0

    def to_dict(self) -> dict:
        return {"max_relative_error": self.max_relative_error, "holds": self.holds,
                "samples_used": self.samples_used}


@dataclass
class QuasimetricReport:
    claimed_K: float
    empirical_K: float
    max_asymmetry: float
    holds: bool
    witness: Optional[List[List[float]]] = field(default=None)

    def to_dict(self) -> dict:
        return {"claimed_K": self.claimed_K, "empirical_K": self.empirical_K,
                "max_asymmetry": self.max_asymmetry, "holds": self.holds,
                "witness": self.witness}


def _sample_arrays(spec: QuasiNormSpec, samples):
    X, Y = as_pairs(samples)
    if X.shape[0] == 0:
        raise EmptySampleSet("no sample pairs given")
    if X.shape != Y.shape:
        raise DimensionMismatch(f"pair shapes differ: {X.shape} vs {Y.shape}")
    if spec.dim is not None and X.shape[1] != spec.dim:
        raise DimensionMismatch(f"{spec} expects dimension {spec.dim}, got {X.shape[1]}")
    return X, Y


def check_p_norm(spec: QuasiNormSpec, p: float, samples,
                 tol: float = REL_TOL_INEQUALITY) -> PNormReport:
    """Test ||x+y||^p <= ||x||^p + ||y||^p on every sampled pair."""
    if not (0 < p <= 1):
        raise InvalidParameter(f"p-norm exponent must lie in (0, 1], got {p}")
    X, Y = _sample_arrays(spec, samples)
    nx, ny, ns = norms(spec, X), norms(spec, Y), norms(spec, X + Y)
    denom = nx ** p + ny ** p
    mask = denom > 0
    if not np.any(mask):
        return PNormReport(p=p, holds=True, worst_ratio=0.0, samples_used=0)

    idx = np.flatnonzero(mask)
    ratios = ns[idx] ** p / denom[idx]
    k = int(np.argmax(ratios))
    worst = float(ratios[k])
    holds = worst <= 1.0 + tol
    witness = None if holds else (X[idx[k]].copy(), Y[idx[k]].copy())
    logger.debug(f"p-norm check {spec} p={p}: worst ratio {worst:.6g} over {idx.size} pairs")
    return PNormReport(p=p, holds=holds, worst_ratio=worst, witness=witness,
                       samples_used=int(idx.size))


def check_quasi_triangle(spec: QuasiNormSpec, samples,
                         tol: float = REL_TOL_INEQUALITY) -> QuasiTriangleReport:
    """Largest sampled ||x+y|| / (||x|| + ||y||), compared with the analytic C."""
    X, Y = _sample_arrays(spec, samples)
    claimed = quasi_triangle_constant(spec)
    nx, ny, ns = norms(spec, X), norms(spec, Y), norms(spec, X + Y)
    denom = nx + ny
    idx = np.flatnonzero(denom > 0)
    if idx.size == 0:
        return QuasiTriangleReport(claimed_C=claimed, empirical_C=0.0, holds=True)

    ratios = ns[idx] / denom[idx]
    k = int(np.argmax(ratios))
    empirical = float(ratios[k])
    pair = (X[idx[k]].copy(), Y[idx[k]].copy())
    holds = empirical <= claimed * (1.0 + tol)
    if not holds:
        logger.warning(f"{spec}: sampled ratio {empirical:.6g} exceeds C={claimed:g}")
    return QuasiTriangleReport(claimed_C=claimed, empirical_C=empirical, holds=holds,
                               extremal_pair=pair,
                               violation_of_claimed_C=None if holds else pair,
                               samples_used=int(idx.size))


def check_series_bound(spec: QuasiNormSpec, terms, m: int,
                       tol: float = REL_TOL_INEQUALITY) -> SeriesBoundReport:
    """Finite form of the completeness bound ||sum x_n|| <= sum C^(n+1) ||x_n||.

    Also checks the intermediate inequality
    ||sum_{k=n}^{n+q} x_k|| <= sum_{k=n}^{n+q} C^(k-n+1) ||x_k||
    for every window inside the first m terms.
    """
    T = np.asarray(terms, dtype=float)
    if T.ndim == 1:
        T = T[:, None] if spec.dim in (None, 1) else T[None, :]
    if m < 1 or m > T.shape[0]:
        raise IndexOutOfRange(f"m={m} outside 1..{T.shape[0]}")
    T = T[:m]
    C = quasi_triangle_constant(spec)
    term_norms = norms(spec, T)

    lhs = float(norms(spec, T.sum(axis=0))[0])
    rhs = float(np.sum(C ** np.arange(2, m + 2) * term_norms))
    holds = lhs <= rhs * (1.0 + tol)

    worst = 0.0
    finite_ok = True
    for start in range(m):
        partial = norms(spec, np.cumsum(T[start:], axis=0))
        bound = np.cumsum(C ** np.arange(1, m - start + 1) * term_norms[start:])
        pos = bound > 0
        if np.any(partial[~pos] > 0):
            finite_ok = False
        if np.any(pos):
            r = float(np.max(partial[pos] / bound[pos]))
            worst = max(worst, r)
            if r > 1.0 + tol:
                finite_ok = False

    return SeriesBoundReport(m=m, lhs=lhs, rhs=rhs, holds=holds,
                             finite_sums_hold=finite_ok, worst_finite_sum_ratio=worst)


def check_homogeneity(spec: QuasiNormSpec, vectors, scalars,
                      tol: float = REL_TOL_IDENTITY) -> HomogeneityReport:
    """Relative error of ||t x|| = |t| ||x|| over paired samples (x_i, t_i)."""
    X = np.asarray(vectors, dtype=float)
    t = np.asarray(scalars, dtype=float).reshape(-1)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptySampleSet("no vectors given")
    if t.size != X.shape[0]:
        raise DimensionMismatch(f"{X.shape[0]} vectors but {t.size} scalars")
    scaled = norms(spec, X * t[:, None])
    expected = np.abs(t) * norms(spec, X)
    err = np.abs(scaled - expected)
    scale = np.maximum(expected, np.finfo(float).tiny)
    rel = np.where(expected > 0, err / scale, err)
    worst = float(rel.max())
    return HomogeneityReport(max_relative_error=worst, holds=worst <= tol,
                             samples_used=int(X.shape[0]))


def check_quasimetric(spec: QuasiNormSpec, triples,
                      tol: float = REL_TOL_INEQUALITY) -> QuasimetricReport:
    """Symmetry and d(x,z) <= K[d(x,y) + d(y,z)] with K = C on sampled triples."""
    X, Y, Z = (np.asarray(a, dtype=float) for a in triples)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptySampleSet("no triples given")
    if not (X.shape == Y.shape == Z.shape):
        raise DimensionMismatch("triple components have different shapes")
    K = quasi_triangle_constant(spec)
    dxy, dyx = norms(spec, X - Y), norms(spec, Y - X)
    dyz, dxz = norms(spec, Y - Z), norms(spec, X - Z)

    asym = np.abs(dxy - dyx) / np.maximum(dxy, np.finfo(float).tiny)
    max_asym = float(asym.max())

    denom = dxy + dyz
    idx = np.flatnonzero(denom > 0)
    empirical = 0.0
    witness = None
    if idx.size:
        ratios = dxz[idx] / denom[idx]
        k = int(np.argmax(ratios))
        empirical = float(ratios[k])
        j = idx[k]
        witness = [X[j].tolist(), Y[j].tolist(), Z[j].tolist()]
    holds = empirical <= K * (1.0 + tol) and max_asym <= REL_TOL_IDENTITY
    return QuasimetricReport(claimed_K=K, empirical_K=empirical, max_asymmetry=max_asym,
                             holds=holds, witness=witness)
