"""Built-in quasi-norms and maps, as listed by `main.py catalog`."""

from dataclasses import dataclass

from core.maps import MAP_KIND_NAMES, STEP_HIGH_VALUE, STEP_THRESHOLD, MapKind
from core.quasi_space import KIND_NAMES, NormKind


@dataclass(frozen=True)
class CatalogEntry:
    category: str       # "norm" or "map"
    name: str           # JSON "kind"
    params: str
    summary: str
    origin: str         # where the entry comes from, and the bundled config using it


NORM_ENTRIES = [
    CatalogEntry("norm", KIND_NAMES[NormKind.STANDARD_P],
                 'p: number >= 1 or "inf"; dim: optional integer',
                 "(sum |x_i|^p)^(1/p), max |x_i| for p = inf; C = 1",
                 "classical l_p norm; rho and d of configs/maia_linf_l1.json"),
    CatalogEntry("norm", KIND_NAMES[NormKind.MALIGRANDA_AP],
                 'a: number > 0, a != 1; p: number >= 1 or "inf"; dim = 2',
                 "||x||_p if x_2 != 0, else a|x_1|; C = max{a, 1/a}",
                 "Maligranda a,p quasi-norm; configs/example_3_3.json"),
    CatalogEntry("norm", KIND_NAMES[NormKind.TYCHONOFF_HALF],
                 "dim: optional integer",
                 "(sum sqrt|x_i|)^2; C = 2",
                 "Tychonoff l_1/2 space, truncated to R^n; configs/tychonoff_verify.json"),
    CatalogEntry("norm", KIND_NAMES[NormKind.P_QUASI],
                 "p: number in (0, 1); dim: optional integer",
                 "(sum |x_i|^p)^(1/p); C = 2^(1/p - 1)",
                 "l_p for 0 < p < 1, Aoki-Rolewicz p-normable model"),
]

MAP_ENTRIES = [
    CatalogEntry("map", MAP_KIND_NAMES[MapKind.AFFINE],
                 "matrix: n x n list of rows; offset: length-n list (default 0)",
                 "x -> Ax + v",
                 "linear test problems, analytic theta for scalar matrices"),
    CatalogEntry("map", MAP_KIND_NAMES[MapKind.REFLECTION],
                 "dim: optional integer (default: the norm's dimension, else 2)",
                 "x -> (1 - x_1, ..., 1 - x_n); fixed point (1/2, ..., 1/2)",
                 "reflection example on the a,p plane; configs/example_3_3.json"),
    CatalogEntry("map", MAP_KIND_NAMES[MapKind.STEP],
                 "none (acts on R^1)",
                 f"x -> 0 if x <= {STEP_THRESHOLD:g}, else {STEP_HIGH_VALUE:.6g}",
                 "step example, U^2 a contraction; configs/example_4_1.json"),
    CatalogEntry("map", MAP_KIND_NAMES[MapKind.POWER],
                 "inner: map; n_iter: integer >= 1",
                 "the n_iter-th iterate of inner",
                 "asymptotic U^N result; configs/example_4_1.json"),
    CatalogEntry("map", MAP_KIND_NAMES[MapKind.EXPRESSION],
                 'exprs: list of n formulas over x1..xn, e.g. ["if(x1 <= 2, 0, -1/3)"]',
                 "coordinate i of Tx is exprs[i]",
                 "user formula"),
    CatalogEntry("map", MAP_KIND_NAMES[MapKind.AVERAGED],
                 "inner: map; lambda: number in (0, 1]",
                 "x -> (1 - lambda) x + lambda inner(x)",
                 "Krasnoselskij averaged map T_lambda, Fix(T_lambda) = Fix(inner)"),
]


def list_catalog() -> str:
    """The catalog as text, norms first, in a fixed order."""
    lines = []
    for title, entries in (("Quasi-norms", NORM_ENTRIES), ("Maps", MAP_ENTRIES)):
        lines.append(f"{title}:")
        for e in entries:
            lines.append(f"  {e.name} — {e.origin}")
            lines.append(f"      {e.summary}")
            lines.append(f"      parameters: {e.params}")
        lines.append("")
    return "\n".join(lines)
