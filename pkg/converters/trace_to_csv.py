"""IterationTrace to CSV.

Layout, one row per iterate x_n (n = 0, 1, ..., N):

    n,x_1,...,x_d,residual,ratio[,residual_rho]

- residual  d(x_{n+1}, x_n); empty on the last row
- ratio     residual_n / residual_{n-1}; empty where undefined
- residual_rho  only when the trace carries second-norm residuals (maia runs)

Floats are written with repr(), so they read back bit-exactly. Lines end
with "\\n".
"""

import logging
from typing import List

from core.solver import IterationTrace

logger = logging.getLogger(__name__)

DELIMITER = ","


def _fmt(v) -> str:
    return repr(float(v))


def trace_header(dim: int, with_rho: bool = False) -> str:
    cols = ["n"] + [f"x_{i}" for i in range(1, dim + 1)] + ["residual", "ratio"]
    if with_rho:
        cols.append("residual_rho")
    return DELIMITER.join(cols)


def trace_to_csv(trace: IterationTrace) -> List[str]:
    """Return the CSV lines (header first) for a trace."""
    dim = trace.points[0].size if trace.points else 0
    rho = trace.diagnostic_residuals
    ratio_at = dict(zip(trace.ratio_steps, trace.ratios))

    lines = [trace_header(dim, rho is not None)]
    for n, x in enumerate(trace.points):
        row = [str(n)] + [_fmt(v) for v in x]
        row.append(_fmt(trace.residuals[n]) if n < len(trace.residuals) else "")
        row.append(_fmt(ratio_at[n]) if n in ratio_at else "")
        if rho is not None:
            row.append(_fmt(rho[n]) if n < len(rho) else "")
        lines.append(DELIMITER.join(row))
    logger.debug(f"Trace exported: {len(trace.points)} rows, dim {dim}")
    return lines
