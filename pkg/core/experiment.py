"""Config-driven experiment runs.

run_experiment loads a config, executes its mode and writes the artifacts:

    solve / asymptotic / maia   trace.csv + result.json
    estimate / verify_norm      report.json
    any failure                 diagnostic.json (+ the partial trace.csv if one exists)

It returns an ExperimentOutcome with the exit status and the one-line summary

    mode=<m> status=<s> point=[...] iters=<k> residual=<r> [verdict=<v>]
"""

import logging
import os
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from converters.result_to_json import diagnostic_to_dict, dumps, result_to_dict
from converters.trace_to_csv import trace_to_csv
from core.config import Mode, SOLVING_MODES, ExperimentConfig
from core.errors import EXIT_OK, InvalidParameter, QuasiFixError, SolverError, describe_error
from core.maps import (
    EnrichedParams,
    EnrichmentCandidate,
    MapSpec,
    analytic_theta,
    estimate_theta,
    scan_enrichment,
    select_enrichment,
)
from core.quasi_space import (
    NormKind,
    aoki_rolewicz_exponent,
    check_homogeneity,
    check_p_norm,
    check_quasi_triangle,
    check_quasimetric,
    check_series_bound,
)
from core.solver import (
    CauchyReport,
    IterationTrace,
    asymptotic_solve,
    cauchy_ratio_check,
    krasnoselskij_solve,
    maia_solve,
    uniqueness_probe,
)
from utils.file_utils import remove_if_present, write_lines_atomic, write_text_atomic
from utils.sampling import (
    DEFAULT_B_GRID,
    SamplePairs,
    axis_pairs,
    cancelling_pairs,
    sample_pairs,
    sample_triples,
    sample_vectors,
)

logger = logging.getLogger(__name__)

TRACE_FILE = "trace.csv"
RESULT_FILE = "result.json"
REPORT_FILE = "report.json"
DIAGNOSTIC_FILE = "diagnostic.json"
ARTIFACTS = (TRACE_FILE, RESULT_FILE, REPORT_FILE, DIAGNOSTIC_FILE)

SERIES_TRIALS = 100
SERIES_MAX_TERMS = 10


@dataclass
class ExperimentOutcome:
    exit_status: int
    status: str
    summary: str
    files: List[str] = field(default_factory=list)


@dataclass
class _RunOutput:
    document: dict
    point: np.ndarray
    iterations: int = 0
    residual: Optional[float] = None
    trace: Optional[IterationTrace] = None
    status: str = "ok"
    verdict: Optional[str] = None


def summary_line(mode: str, status: str, point, iterations: int,
                 residual: Optional[float], verdict: Optional[str] = None) -> str:
    pt = "[" + ",".join(f"{float(v):.12g}" for v in point) + "]"
    res = f"{residual:.6e}" if residual is not None else "-"
    line = f"mode={mode} status={status} point={pt} iters={iterations} residual={res}"
    if verdict is not None:
        line += f" verdict={verdict}"
    return line


# ---------------------------------------------------------------------------
# Shared pieces
# ---------------------------------------------------------------------------
def target_map(cfg: ExperimentConfig) -> MapSpec:
    """The map the enriched parameters describe (U^N when n_iterate is set)."""
    if cfg.n_iterate is not None:
        return MapSpec.power(cfg.map, cfg.n_iterate)
    return cfg.map


def config_pairs(cfg: ExperimentConfig) -> SamplePairs:
    s = cfg.samples
    domain = cfg.map.domain if cfg.map is not None else None
    if domain is not None:
        return sample_pairs(cfg.dim, s.count, s.radius, s.seed, domain.lo, domain.hi)
    return sample_pairs(cfg.dim, s.count, s.radius, s.seed)


def resolve_params(cfg: ExperimentConfig) -> Tuple[EnrichedParams, Optional[List[EnrichmentCandidate]]]:
    """(b, theta) from the config: given, analytic, sampled, or searched over b_grid."""
    T = target_map(cfg)
    spec = cfg.param_norm
    if cfg.b_grid is not None:
        candidates = scan_enrichment(T, spec, cfg.b_grid, config_pairs(cfg),
                                     cfg.require_positive_theta)
        params = select_enrichment(candidates)
        if params is None:
            raise InvalidParameter(f"no b in {cfg.b_grid} gives theta_hat < b + 1 for {T.name}")
        return params, candidates
    if cfg.theta is not None:
        return EnrichedParams.from_b_theta(cfg.b, cfg.theta), None
    theta = analytic_theta(T, cfg.b)
    if theta is not None:
        return EnrichedParams.from_b_theta(cfg.b, theta), None
    theta = estimate_theta(T, cfg.b, spec, config_pairs(cfg))
    logger.info(f"No analytic theta for {T.name}; sampled theta_hat={theta:.6g}")
    return EnrichedParams.from_b_theta(cfg.b, theta, empirical=True), None


def tail_cauchy(trace: IterationTrace, window: int, margin: float) -> Optional[CauchyReport]:
    window = min(window, len(trace.ratio_series) - 1)
    if window < 1:
        return None
    return cauchy_ratio_check(trace, window, margin)


# ---------------------------------------------------------------------------
# Modes
# ---------------------------------------------------------------------------
def _run_solver(cfg: ExperimentConfig, jobs: int) -> _RunOutput:
    params, candidates = resolve_params(cfg)
    if cfg.mode == Mode.SOLVE:
        result = krasnoselskij_solve(cfg.map, params, cfg.norm, cfg.x0, cfg.solver)
    elif cfg.mode == Mode.ASYMPTOTIC:
        result = asymptotic_solve(cfg.map, cfg.n_iterate, params, cfg.norm, cfg.x0, cfg.solver)
    else:
        s = cfg.samples
        Z = sample_vectors(cfg.dim, s.count, s.radius, s.seed)
        result = maia_solve(cfg.map, cfg.norm, cfg.second_norm, params, cfg.x0, cfg.solver, Z)

    context = {"norm": cfg.norm.to_dict(), "map": cfg.map.to_dict(), "x0": cfg.x0,
               "x0_source": cfg.x0_source, "solver": cfg.solver.to_dict(),
               "trace_file": TRACE_FILE}
    if cfg.second_norm is not None:
        context["second_norm"] = cfg.second_norm.to_dict()
    if candidates is not None:
        context["b_grid"] = [c.to_dict() for c in candidates]
    if cfg.probe is not None and cfg.mode == Mode.SOLVE:
        p = cfg.probe
        probe = uniqueness_probe(cfg.map, params, cfg.norm, p.starts, p.radius, p.seed,
                                 cfg.solver, jobs)
        context["uniqueness"] = probe.to_dict()

    cauchy = tail_cauchy(result.trace, cfg.solver.divergence_window, cfg.solver.divergence_margin)
    doc = result_to_dict(result, cauchy, **context)
    return _RunOutput(document=doc, point=result.point, iterations=result.iterations,
                      residual=doc["final_residual"], trace=result.trace, status="converged")


def _run_estimate(cfg: ExperimentConfig) -> _RunOutput:
    grid = cfg.b_grid or ([cfg.b] if cfg.b is not None else DEFAULT_B_GRID)
    T = target_map(cfg)
    candidates = scan_enrichment(T, cfg.norm, grid, config_pairs(cfg), cfg.require_positive_theta)
    selected = select_enrichment(candidates)
    rows = []
    for cand in candidates:
        row = cand.to_dict()
        row["analytic_theta"] = analytic_theta(T, cand.b)
        rows.append(row)
    verdict = "enriched" if selected is not None else "not_enriched"
    logger.info(f"Estimate for {T.name}: {verdict}")
    doc = {
        "mode": "estimate",
        "status": "ok",
        "norm": cfg.norm.to_dict(),
        "map": T.to_dict(),
        "samples": {"count": cfg.samples.count, "range": cfg.samples.radius,
                    "seed": cfg.samples.seed},
        "require_positive_theta": cfg.require_positive_theta,
        "candidates": rows,
        "selected": selected.to_dict() if selected is not None else None,
        "verdict": verdict,
    }
    return _RunOutput(document=doc, point=np.array([]), verdict=verdict)


def basis_pairs(dim: int) -> SamplePairs:
    """(e_i, e_j) for every i != j."""
    eye = np.eye(dim)
    idx = [(i, j) for i in range(dim) for j in range(dim) if i != j]
    if not idx:
        return np.empty((0, dim)), np.empty((0, dim))
    return eye[[i for i, _ in idx]], eye[[j for _, j in idx]]


def _series_report(spec, dim: int, cfg: ExperimentConfig) -> dict:
    rng = np.random.default_rng(cfg.samples.seed + 4)
    holds = True
    finite_ok = True
    worst = 0.0
    for _ in range(SERIES_TRIALS):
        m = int(rng.integers(1, SERIES_MAX_TERMS + 1))
        terms = rng.uniform(-cfg.samples.radius, cfg.samples.radius, size=(m, dim))
        rep = check_series_bound(spec, terms, m)
        holds = holds and rep.holds
        finite_ok = finite_ok and rep.finite_sums_hold
        worst = max(worst, rep.worst_finite_sum_ratio)
    basis = check_series_bound(spec, np.eye(dim), dim)
    return {"trials": SERIES_TRIALS, "holds": holds and basis.holds,
            "finite_sums_hold": finite_ok and basis.finite_sums_hold,
            "worst_finite_sum_ratio": max(worst, basis.worst_finite_sum_ratio),
            "basis": basis.to_dict()}


def _run_verify_norm(cfg: ExperimentConfig) -> _RunOutput:
    spec = cfg.norm
    dim = cfg.dim
    s = cfg.samples
    X, Y = sample_pairs(dim, s.count, s.radius, s.seed)
    extra = [basis_pairs(dim)]
    if spec.kind == NormKind.MALIGRANDA_AP:
        family = cancelling_pairs if spec.a > 1 else axis_pairs
        extra.append(family(dim, s.count, s.radius, s.seed + 1))
    X = np.vstack([X] + [e[0] for e in extra])
    Y = np.vstack([Y] + [e[1] for e in extra])

    C = spec.C
    p_ar = aoki_rolewicz_exponent(C)
    p = cfg.p_norm_exponent if cfg.p_norm_exponent is not None else p_ar
    scalars = sample_vectors(1, X.shape[0], s.radius, s.seed + 2)[:, 0]

    homogeneity = check_homogeneity(spec, X, scalars)
    triangle = check_quasi_triangle(spec, (X, Y))
    p_norm = check_p_norm(spec, p, (X, Y))
    quasimetric = check_quasimetric(spec, sample_triples(dim, s.count, s.radius, s.seed + 3))
    series = _series_report(spec, dim, cfg)

    holds = homogeneity.holds and triangle.holds and quasimetric.holds and series["holds"]
    verdict = "holds" if holds else "violated"
    logger.info(f"verify_norm {spec}: empirical C={triangle.empirical_C:.6g} (C={C:g}), {verdict}")
    doc = {
        "mode": "verify_norm",
        "status": "ok",
        "norm": spec.to_dict(),
        "dim": dim,
        "C": C,
        "aoki_rolewicz_exponent": p_ar,
        "samples": {"count": s.count, "range": s.radius, "seed": s.seed,
                    "pairs_used": int(X.shape[0])},
        "homogeneity": homogeneity.to_dict(),
        "quasi_triangle": triangle.to_dict(),
        "empirical_C": triangle.empirical_C,
        "holds": triangle.holds,
        "p_norm": p_norm.to_dict(),
        "quasimetric": quasimetric.to_dict(),
        "series_bound": series,
        "verdict": verdict,
    }
    return _RunOutput(document=doc, point=np.array([]), verdict=verdict)


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------
def run_experiment(config_path: str, out_dir: str, jobs: int = 1) -> ExperimentOutcome:
    """Run one config and write its artifacts into out_dir."""
    os.makedirs(out_dir, exist_ok=True)
    for name in ARTIFACTS:
        remove_if_present(os.path.join(out_dir, name))
    written = []

    def _write(name: str, text: Optional[str] = None, lines: Optional[List[str]] = None):
        path = os.path.join(out_dir, name)
        if lines is not None:
            write_lines_atomic(path, lines)
        else:
            write_text_atomic(path, text)
        written.append(path)

    mode_name = "unknown"
    try:
        cfg = ExperimentConfig.from_file(config_path)
        mode_name = cfg.mode_name
        logger.info(f"Running {mode_name} experiment from {config_path}")
        if cfg.mode in SOLVING_MODES:
            out = _run_solver(cfg, jobs)
            _write(TRACE_FILE, lines=trace_to_csv(out.trace))
            _write(RESULT_FILE, dumps(out.document))
        elif cfg.mode == Mode.ESTIMATE:
            out = _run_estimate(cfg)
            _write(REPORT_FILE, dumps(out.document))
        else:
            out = _run_verify_norm(cfg)
            _write(REPORT_FILE, dumps(out.document))
    except QuasiFixError as e:
        exit_status, status, description = describe_error(e)
        logger.error(f"{description}: {e}")
        trace = e.trace if isinstance(e, SolverError) else None
        point, residual = [], None
        if trace is not None and trace.points:
            _write(TRACE_FILE, lines=trace_to_csv(trace))
            point = trace.points[-1]
            residual = trace.residuals[-1] if trace.residuals else None
        _write(DIAGNOSTIC_FILE, dumps(diagnostic_to_dict(e)))
        iterations = e.iterations if isinstance(e, SolverError) else 0
        return ExperimentOutcome(exit_status=exit_status, status=status,
                                 summary=summary_line(mode_name, status, point, iterations, residual),
                                 files=written)

    summary = summary_line(mode_name, out.status, out.point, out.iterations, out.residual,
                           out.verdict)
    logger.info(f"Finished: {summary}")
    return ExperimentOutcome(exit_status=EXIT_OK, status=out.status, summary=summary,
                             files=written)
