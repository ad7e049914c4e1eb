"""Fixed-point solvers for enriched contractions.

krasnoselskij_solve runs the averaged iteration x_{n+1} = (1-lambda)x_n + lambda Tx_n
with lambda = 1/(b+1); when b = 0 this is the plain Picard iteration.
asymptotic_solve applies the same scheme to an iterate U^N and then checks the
limit is fixed by U itself. maia_solve splits the work across two norms: it
stops in the complete norm d and reads contraction ratios in rho.

Every run records an IterationTrace; a run that stops without converging
raises a SolverError carrying that partial trace.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum, auto
from typing import Callable, List, Optional

import numpy as np

from core.errors import (
    DivergenceDetected,
    DominationViolated,
    EmptySampleSet,
    FixedPointNotSharedByU,
    InsufficientTrace,
    InvalidParameter,
    MaxIterationsExceeded,
    NumericalOverflow,
)
from core.maps import EnrichedParams, MapSpec, averaged_map, eval_map, fixed_point_residual
from core.quasi_space import REL_TOL_INEQUALITY, QuasiNormSpec, as_vector, induced_distance, norms
from utils.sampling import DEFAULT_SAMPLE_RADIUS, sample_vectors

logger = logging.getLogger(__name__)


def as_count(value, name: str, minimum: int = 1) -> int:
    """value as an int >= minimum; integral floats such as 1e4 are accepted."""
    if isinstance(value, bool) or not isinstance(value, (int, float, np.integer, np.floating)):
        raise InvalidParameter(f"{name} must be an integer >= {minimum}, got {value!r}")
    if not math.isfinite(value) or int(value) != value or value < minimum:
        raise InvalidParameter(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def as_real(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float, np.integer, np.floating)):
        raise InvalidParameter(f"{name} must be a number, got {value!r}")
    return float(value)


class SolveMode(Enum):
    SOLVE = auto()
    ASYMPTOTIC = auto()
    MAIA = auto()


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------
@dataclass
class SolverConfig:
    """Stopping and safety settings shared by all solvers."""
    tol: float = 1e-10                      # stop when d(x_{n+1}, x_n) <= tol
    max_iter: int = 10_000
    lambda_override: Optional[float] = None  # force lambda instead of 1/(b+1)
    divergence_window: int = 20             # ratios per divergence check
    divergence_margin: float = 1e-6         # window of ratios >= 1 - margin aborts
    overflow_limit: float = 1e150           # any |coordinate| above this aborts
    certify_slack: float = 10.0             # kappa: U(p) must satisfy d(U(p), p) <= kappa * tol

    def __post_init__(self):
        self.tol = as_real(self.tol, "tol")
        self.divergence_margin = as_real(self.divergence_margin, "divergence_margin")
        self.overflow_limit = as_real(self.overflow_limit, "overflow_limit")
        self.certify_slack = as_real(self.certify_slack, "certify_slack")
        if self.lambda_override is not None:
            self.lambda_override = as_real(self.lambda_override, "lambda_override")
        if not (self.tol > 0):
            raise InvalidParameter(f"tol must be > 0, got {self.tol}")
        self.max_iter = as_count(self.max_iter, "max_iter")
        self.divergence_window = as_count(self.divergence_window, "divergence_window")
        if self.lambda_override is not None and not (0 < self.lambda_override <= 1):
            raise InvalidParameter(f"lambda_override must lie in (0, 1], got {self.lambda_override}")
        if not (0 <= self.divergence_margin < 1):
            raise InvalidParameter(f"divergence_margin must lie in [0, 1), got {self.divergence_margin}")
        if not (self.overflow_limit > 0):
            raise InvalidParameter(f"overflow_limit must be > 0, got {self.overflow_limit}")
        if not (self.certify_slack > 0):
            raise InvalidParameter(f"certify_slack must be > 0, got {self.certify_slack}")

    def to_dict(self) -> dict:
        return {"tol": self.tol, "max_iter": self.max_iter,
                "lambda_override": self.lambda_override,
                "divergence_window": self.divergence_window,
                "divergence_margin": self.divergence_margin,
                "overflow_limit": self.overflow_limit,
                "certify_slack": self.certify_slack}


# ---------------------------------------------------------------------------
# Trace
# ---------------------------------------------------------------------------
@dataclass
class IterationTrace:
    """Iterates x_0, x_1, ..., residuals r_n = d(x_{n+1}, x_n) and ratios.

    ratios[j] = r_k / r_{k-1} with k = ratio_steps[j]; steps where r_{k-1} = 0
    have no ratio. When diagnostic_residuals is set (two-norm runs) the ratios
    are read from it instead of from residuals.
    """
    points: List[np.ndarray] = field(default_factory=list)
    residuals: List[float] = field(default_factory=list)
    ratios: List[float] = field(default_factory=list)
    ratio_steps: List[int] = field(default_factory=list)
    diagnostic_residuals: Optional[List[float]] = None

    @classmethod
    def start(cls, x0: np.ndarray, two_norm: bool = False) -> "IterationTrace":
        return cls(points=[x0.copy()], diagnostic_residuals=[] if two_norm else None)

    @classmethod
    def from_residuals(cls, residuals) -> "IterationTrace":
        """A 1-D trace (x_{k+1} = x_k + r_k) with the given residual sequence."""
        trace = cls.start(np.zeros(1))
        x = 0.0
        for r in residuals:
            x += float(r)
            trace.record(np.array([x]), float(r))
        return trace

    @property
    def ratio_series(self) -> List[float]:
        if self.diagnostic_residuals is not None:
            return self.diagnostic_residuals
        return self.residuals

    @property
    def iterations(self) -> int:
        return len(self.residuals)

    def record(self, point: np.ndarray, residual: float, diagnostic: Optional[float] = None):
        self.points.append(point)
        self.residuals.append(residual)
        if self.diagnostic_residuals is not None:
            self.diagnostic_residuals.append(diagnostic)
        series = self.ratio_series
        k = len(series) - 1
        if k >= 1 and series[k - 1] > 0:
            self.ratios.append(series[k] / series[k - 1])
            self.ratio_steps.append(k)

    def tail_ratios(self, window: int) -> List[float]:
        """Ratios belonging to the last `window` residual steps."""
        first = len(self.ratio_series) - window
        return [g for g, k in zip(self.ratios, self.ratio_steps) if k >= first]


@dataclass
class FixedPointResult:
    point: np.ndarray
    iterations: int
    trace: IterationTrace
    params: EnrichedParams
    certified_residual: float           # d(T(point), point) under the stopping norm
    lambda_used: float
    mode: SolveMode = SolveMode.SOLVE
    error_estimate: Optional[float] = None      # c/(1-c) * last residual, when lambda = 1/(b+1)
    n_iterate: Optional[int] = None             # asymptotic: N
    unit_residual: Optional[float] = None       # asymptotic: d(U(point), point)
    certified_residual_rho: Optional[float] = None  # maia: d(T(point), point) in rho


@dataclass
class CauchyReport:
    gamma_hat: float
    is_contractive_tail: bool
    window: int

    def to_dict(self) -> dict:
        return {"gamma_hat": self.gamma_hat, "is_contractive_tail": self.is_contractive_tail,
                "window": self.window}


@dataclass
class UniquenessReport:
    points: np.ndarray
    max_spread: float
    starts: int
    converged: bool             # every start converged and the limits agree within spread_tol

    def to_dict(self) -> dict:
        return {"starts": self.starts, "max_spread": self.max_spread, "converged": self.converged,
                "mean_point": self.points.mean(axis=0).tolist()}


# ---------------------------------------------------------------------------
# Error estimates and the ratio criterion
# ---------------------------------------------------------------------------
def error_bound(c: float, i: int, last_residual: float) -> float:
    """(c^i / (1-c)) * d(x_n, x_{n-1}), a bound on d(x_{n+i-1}, p)."""
    if not (0 <= c < 1):
        raise InvalidParameter(f"contraction coefficient must lie in [0, 1), got {c}")
    if int(i) != i or i < 1:
        raise InvalidParameter(f"i must be an integer >= 1, got {i}")
    if last_residual < 0:
        raise InvalidParameter(f"residual must be >= 0, got {last_residual}")
    return (c ** i / (1.0 - c)) * last_residual


def error_bounds(trace: IterationTrace, c: float, i_max: int = 3) -> List[dict]:
    """error_bound for every n >= 1 and i = 1..i_max along a trace.

    Row {"n", "i", "target", "bound"} bounds d(x_target, p), target = n + i - 1,
    from d(x_n, x_{n-1}) = residuals[n-1].
    """
    rows = []
    for n in range(1, len(trace.residuals) + 1):
        r = trace.residuals[n - 1]
        for i in range(1, i_max + 1):
            rows.append({"n": n, "i": i, "target": n + i - 1, "bound": error_bound(c, i, r)})
    return rows


def iterations_needed(c: float, first_residual: float, eps: float) -> int:
    """Smallest n with c^n/(1-c) * d(x_1, x_0) <= eps."""
    if not (0 <= c < 1):
        raise InvalidParameter(f"contraction coefficient must lie in [0, 1), got {c}")
    if eps <= 0:
        raise InvalidParameter(f"eps must be > 0, got {eps}")
    if first_residual <= 0:
        return 0
    if c == 0:
        return 1
    n = math.ceil(math.log(eps * (1.0 - c) / first_residual) / math.log(c))
    n = max(n, 1)
    # Guard against log rounding on either side.
    while n > 1 and error_bound(c, n - 1, first_residual) <= eps:
        n -= 1
    while error_bound(c, n, first_residual) > eps:
        n += 1
    return n


def cauchy_ratio_check(trace: IterationTrace, window: int,
                       margin: float = 1e-6) -> CauchyReport:
    """gamma_hat = largest ratio over the last `window` steps.

    Ratios are skipped where the previous residual is 0; if none remain the
    sequence has already settled and gamma_hat is 0.
    """
    if int(window) != window or window < 1:
        raise InvalidParameter(f"window must be an integer >= 1, got {window}")
    if len(trace.ratio_series) < window + 1:
        raise InsufficientTrace(f"need {window + 1} residuals, trace has {len(trace.ratio_series)}")
    tail = trace.tail_ratios(window)
    gamma_hat = max(tail) if tail else 0.0
    return CauchyReport(gamma_hat=gamma_hat, is_contractive_tail=gamma_hat < 1.0 - margin,
                        window=window)


def _window_diverges(trace: IterationTrace, window: int, margin: float) -> bool:
    if len(trace.ratio_series) < window + 1:
        return False
    tail = trace.tail_ratios(window)
    return len(tail) == window and min(tail) >= 1.0 - margin


# ---------------------------------------------------------------------------
# Iteration core
# ---------------------------------------------------------------------------
def _iterate(T_lam: MapSpec, x0: np.ndarray, stop_spec: QuasiNormSpec,
             cfg: SolverConfig, diag_spec: Optional[QuasiNormSpec] = None,
             on_iteration: Optional[Callable] = None) -> IterationTrace:
    """Picard iteration of T_lam until the stopping residual drops to cfg.tol."""
    trace = IterationTrace.start(x0, two_norm=diag_spec is not None)
    x = x0
    for k in range(1, cfg.max_iter + 1):
        x_next = eval_map(T_lam, x)
        if not np.all(np.isfinite(x_next)) or np.max(np.abs(x_next)) > cfg.overflow_limit:
            logger.warning(f"Iterate {k} left the range |x| <= {cfg.overflow_limit:g}")
            raise NumericalOverflow(f"iterate {k} exceeded {cfg.overflow_limit:g} in magnitude",
                                    trace)
        r = induced_distance(stop_spec, x_next, x)
        diag = induced_distance(diag_spec, x_next, x) if diag_spec is not None else None
        trace.record(x_next, r, diag)
        logger.debug(f"iter {k}: residual {r:.6e}")
        if on_iteration:
            on_iteration(k, x_next, r)

        if r <= cfg.tol:
            return trace
        if _window_diverges(trace, cfg.divergence_window, cfg.divergence_margin):
            gamma = cauchy_ratio_check(trace, cfg.divergence_window, cfg.divergence_margin).gamma_hat
            logger.warning(f"Ratios stayed >= {1 - cfg.divergence_margin:g} for "
                           f"{cfg.divergence_window} steps (gamma_hat={gamma:.6g})")
            raise DivergenceDetected(f"residual ratios >= 1 - {cfg.divergence_margin:g} over a "
                                     f"window of {cfg.divergence_window} (gamma_hat={gamma:.6g})",
                                     trace, gamma_hat=gamma)
        x = x_next

    logger.warning(f"No convergence after {cfg.max_iter} iterations "
                   f"(last residual {trace.residuals[-1]:.3e})")
    raise MaxIterationsExceeded(f"residual still {trace.residuals[-1]:.3e} after "
                                f"{cfg.max_iter} iterations", trace)


def _lambda_for(params: EnrichedParams, cfg: SolverConfig) -> float:
    if params.c >= 1:
        raise InvalidParameter(f"c = {params.c} is not < 1")
    return cfg.lambda_override if cfg.lambda_override is not None else params.lam


def _error_estimate(params: EnrichedParams, lam: float, trace: IterationTrace) -> Optional[float]:
    if lam != params.lam or not trace.residuals:
        return None
    return error_bound(params.c, 1, trace.residuals[-1])


# ---------------------------------------------------------------------------
# Solvers
# ---------------------------------------------------------------------------
def krasnoselskij_solve(T: MapSpec, params: EnrichedParams, spec: QuasiNormSpec, x0,
                        cfg: Optional[SolverConfig] = None,
                        on_iteration: Optional[Callable] = None) -> FixedPointResult:
    """Approximate the fixed point of a (b, theta)-enriched contraction T."""
    cfg = cfg or SolverConfig()
    x0 = as_vector(x0, T.dim)
    lam = _lambda_for(params, cfg)
    T_lam = averaged_map(T, lam)
    logger.info(f"Krasnoselskij solve: map={T.name} dim={T.dim} norm={spec} "
                f"b={params.b:g} lambda={lam:g} c={params.c:g}")

    trace = _iterate(T_lam, x0, spec, cfg, on_iteration=on_iteration)
    point = trace.points[-1]
    certified = fixed_point_residual(T, spec, point)
    logger.info(f"Converged in {trace.iterations} iterations, d(Tp, p)={certified:.3e}")
    return FixedPointResult(point=point, iterations=trace.iterations, trace=trace, params=params,
                            certified_residual=certified, lambda_used=lam,
                            error_estimate=_error_estimate(params, lam, trace))


def asymptotic_solve(U: MapSpec, N: int, params: EnrichedParams, spec: QuasiNormSpec, x0,
                     cfg: Optional[SolverConfig] = None,
                     on_iteration: Optional[Callable] = None) -> FixedPointResult:
    """Solve with U^N (params describe U^N), then certify that U fixes the limit."""
    cfg = cfg or SolverConfig()
    result = krasnoselskij_solve(MapSpec.power(U, N), params, spec, x0, cfg, on_iteration)
    unit = fixed_point_residual(U, spec, result.point)
    result.mode = SolveMode.ASYMPTOTIC
    result.n_iterate = int(N)
    result.unit_residual = unit

    threshold = cfg.tol * cfg.certify_slack
    if unit > threshold:
        logger.warning(f"d(U(p), p) = {unit:.3e} exceeds {threshold:.3e}")
        raise FixedPointNotSharedByU(f"limit of U^{N} iteration is not fixed by U: "
                                     f"d(U(p), p) = {unit:.3e} > {threshold:.3e}",
                                     result.trace, result=result, unit_residual=unit)
    return result


def check_domination(spec_d: QuasiNormSpec, spec_rho: QuasiNormSpec, samples,
                     tol: float = REL_TOL_INEQUALITY) -> float:
    """Verify ||z||_d <= ||z||_rho on every sample; returns the largest ratio.

    Raises DominationViolated with the worst offending vector.
    """
    Z = np.asarray(samples, dtype=float)
    if Z.ndim == 1:
        Z = Z[None, :]
    if Z.shape[0] == 0 or Z.size == 0:
        raise EmptySampleSet("no domination samples given")
    nd, nr = norms(spec_d, Z), norms(spec_rho, Z)
    ratio = nd / np.maximum(nr, np.finfo(float).tiny)
    bad = nd > nr * (1.0 + tol)
    if np.any(bad):
        k = int(np.argmax(np.where(bad, ratio, -np.inf)))
        logger.warning(f"||z||_d = {nd[k]:.6g} > ||z||_rho = {nr[k]:.6g} at z={Z[k].tolist()}")
        raise DominationViolated(f"norm domination fails at z={Z[k].tolist()}: "
                                 f"{nd[k]:.6g} > {nr[k]:.6g}",
                                 witness=Z[k].copy(), norm_d=float(nd[k]), norm_rho=float(nr[k]))
    positive = nr > 0
    return float(ratio[positive].max()) if np.any(positive) else 0.0


def maia_solve(T: MapSpec, spec_d: QuasiNormSpec, spec_rho: QuasiNormSpec,
               params: EnrichedParams, x0, cfg: Optional[SolverConfig] = None,
               domination_samples=None,
               on_iteration: Optional[Callable] = None) -> FixedPointResult:
    """Two-norm solve: params hold under rho, stopping is measured in d."""
    cfg = cfg or SolverConfig()
    if domination_samples is None:
        raise EmptySampleSet("maia_solve needs domination samples")
    x0 = as_vector(x0, T.dim)
    worst = check_domination(spec_d, spec_rho, domination_samples)
    logger.info(f"Domination ||z||_d <= ||z||_rho holds on samples (max ratio {worst:.6g})")

    lam = _lambda_for(params, cfg)
    trace = _iterate(averaged_map(T, lam), x0, spec_d, cfg, diag_spec=spec_rho,
                     on_iteration=on_iteration)
    point = trace.points[-1]
    result = FixedPointResult(point=point, iterations=trace.iterations, trace=trace,
                              params=params,
                              certified_residual=fixed_point_residual(T, spec_d, point),
                              lambda_used=lam, mode=SolveMode.MAIA,
                              certified_residual_rho=fixed_point_residual(T, spec_rho, point))
    if lam == params.lam and trace.diagnostic_residuals:
        result.error_estimate = error_bound(params.c, 1, trace.diagnostic_residuals[-1])
    logger.info(f"Maia solve converged in {trace.iterations} iterations")
    return result


def uniqueness_probe(T: MapSpec, params: EnrichedParams, spec: QuasiNormSpec,
                     starts: int = 100, radius: float = DEFAULT_SAMPLE_RADIUS, seed: int = 0,
                     cfg: Optional[SolverConfig] = None, jobs: int = 1,
                     spread_tol: float = 1e-6) -> UniquenessReport:
    """Solve from many random starts; the limits should coincide."""
    if starts < 1:
        raise InvalidParameter(f"starts must be >= 1, got {starts}")
    cfg = cfg or SolverConfig()
    X0 = sample_vectors(T.dim, starts, radius, seed)

    def _solve(x0):
        return krasnoselskij_solve(T, params, spec, x0, cfg).point

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            points = list(pool.map(_solve, X0))
    else:
        points = [_solve(x0) for x0 in X0]
    P = np.array(points)
    spread = max(float(norms(spec, P - P[i]).max()) for i in range(P.shape[0]))
    logger.info(f"Uniqueness probe: {starts} starts, max pairwise distance {spread:.3e}")
    return UniquenessReport(points=P, max_spread=spread, starts=starts,
                            converged=spread <= spread_tol)
