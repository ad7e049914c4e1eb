"""Solver results, check reports and failure diagnostics as JSON documents.

All documents are dumped with sorted keys and two-space indentation, so the
same run always produces the same bytes. Non-finite floats become null.

result.json (solve / asymptotic / maia, success only):
    mode, status, point, iterations, certified_residual, final_residual,
    lambda, params {b, theta, lambda, c, empirical}, error_estimate,
    cauchy {gamma_hat, is_contractive_tail, window} or null,
    trace_rows (rows of the trace CSV, x_0 included),
    norm, map, x0, x0_source, solver {...}, trace_file
    plus n_iterate, unit_residual (asymptotic), second_norm,
    certified_residual_rho (maia), uniqueness (solve with probe)

diagnostic.json (any failure):
    error, message, status, exit_status, iterations, and where known
    gamma_hat, unit_residual, witness, norm_d, norm_rho
"""

import json
import logging
import math
from typing import Optional

import numpy as np

from core.errors import (
    DivergenceDetected,
    DominationViolated,
    FixedPointNotSharedByU,
    SolverError,
    describe_error,
)
from core.solver import CauchyReport, FixedPointResult, SolveMode

logger = logging.getLogger(__name__)

SOLVE_MODE_NAMES = {
    SolveMode.SOLVE: "solve",
    SolveMode.ASYMPTOTIC: "asymptotic",
    SolveMode.MAIA: "maia",
}


def to_jsonable(obj):
    """Recursively convert numpy values and non-finite floats."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dumps(doc: dict) -> str:
    return json.dumps(to_jsonable(doc), indent=2, sort_keys=True) + "\n"


def result_to_dict(result: FixedPointResult, cauchy: Optional[CauchyReport] = None,
                   **context) -> dict:
    """result.json document; context adds norm/map/x0/solver descriptions."""
    trace = result.trace
    doc = {
        "mode": SOLVE_MODE_NAMES[result.mode],
        "status": "converged",
        "point": result.point,
        "iterations": result.iterations,
        "certified_residual": result.certified_residual,
        "final_residual": trace.residuals[-1] if trace.residuals else 0.0,
        "lambda": result.lambda_used,
        "params": result.params.to_dict(),
        "error_estimate": result.error_estimate,
        "cauchy": cauchy.to_dict() if cauchy is not None else None,
        "trace_rows": len(trace.points),
    }
    if result.mode == SolveMode.ASYMPTOTIC:
        doc["n_iterate"] = result.n_iterate
        doc["unit_residual"] = result.unit_residual
    if result.mode == SolveMode.MAIA:
        doc["certified_residual_rho"] = result.certified_residual_rho
    doc.update(context)
    return doc


def diagnostic_to_dict(exc: BaseException) -> dict:
    """diagnostic.json document for a failed run."""
    exit_status, status, description = describe_error(exc)
    doc = {
        "error": type(exc).__name__,
        "message": str(exc),
        "status": status,
        "description": description,
        "exit_status": exit_status,
        "iterations": exc.iterations if isinstance(exc, SolverError) else 0,
    }
    if isinstance(exc, DivergenceDetected):
        doc["gamma_hat"] = exc.gamma_hat
    if isinstance(exc, FixedPointNotSharedByU):
        doc["unit_residual"] = exc.unit_residual
        if exc.result is not None:
            doc["point"] = exc.result.point
    if isinstance(exc, DominationViolated):
        doc["witness"] = exc.witness
        doc["norm_d"] = exc.norm_d
        doc["norm_rho"] = exc.norm_rho
    return doc
