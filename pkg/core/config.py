"""Experiment configuration: one JSON document per run.

    {
      "mode": "solve" | "asymptotic" | "maia" | "estimate" | "verify_norm",
      "norm": {...},                     quasi-norm (maia: the complete norm d)
      "second_norm": {...},              maia only: rho, in which params hold
      "map": {...},
      "params": {"b": 0.5, "theta": 0.5} | {"b": 0.5} | {"b_grid": [...]},
      "require_positive_theta": false,
      "x0": [2, 2] | "random:<seed>",
      "n_iterate": 2,                    asymptotic only
      "solver": {"tol": 1e-10, "max_iter": 10000, ...},
      "samples": {"count": 10000, "range": 10, "seed": 0},
      "probe": {"starts": 100, "seed": 0, "radius": 10},
      "p_norm_exponent": 0.5             verify_norm only
    }
"""

import json
import logging
from dataclasses import dataclass, field, fields
from enum import Enum, auto
from typing import List, Optional

import numpy as np

from core.errors import ConfigParseError, InvalidParameter, QuasiFixError
from core.maps import MapSpec
from core.quasi_space import QuasiNormSpec, as_vector
from core.solver import SolverConfig, as_count, as_real
from utils.sampling import DEFAULT_SAMPLE_RADIUS, SampleConfig, random_point

logger = logging.getLogger(__name__)

RANDOM_X0_PREFIX = "random:"


class Mode(Enum):
    SOLVE = auto()
    ASYMPTOTIC = auto()
    MAIA = auto()
    ESTIMATE = auto()
    VERIFY_NORM = auto()


MODE_NAMES = {
    Mode.SOLVE: "solve",
    Mode.ASYMPTOTIC: "asymptotic",
    Mode.MAIA: "maia",
    Mode.ESTIMATE: "estimate",
    Mode.VERIFY_NORM: "verify_norm",
}
MODE_BY_NAME = {name: mode for mode, name in MODE_NAMES.items()}

SOLVING_MODES = (Mode.SOLVE, Mode.ASYMPTOTIC, Mode.MAIA)

_TOP_LEVEL_KEYS = {"mode", "norm", "second_norm", "map", "params", "require_positive_theta",
                   "x0", "n_iterate", "solver", "samples", "probe", "p_norm_exponent"}


@dataclass
class ProbeConfig:
    """Multi-start uniqueness probe (solve mode)."""
    starts: int = 100
    seed: int = 0
    radius: float = DEFAULT_SAMPLE_RADIUS   # starts uniform on [-radius, radius]^n

    def __post_init__(self):
        self.starts = as_count(self.starts, "starts")
        self.seed = as_count(self.seed, "seed", minimum=0)
        self.radius = as_real(self.radius, "radius")
        if not (self.radius > 0):
            raise InvalidParameter(f"radius must be > 0, got {self.radius}")


@dataclass
class ExperimentConfig:
    mode: Mode
    norm: QuasiNormSpec
    map: Optional[MapSpec] = None
    second_norm: Optional[QuasiNormSpec] = None
    b: Optional[float] = None
    theta: Optional[float] = None
    b_grid: Optional[List[float]] = None
    require_positive_theta: bool = False
    x0: Optional[np.ndarray] = None
    x0_source: str = ""                     # as written in the file, e.g. "random:7"
    n_iterate: Optional[int] = None
    solver: SolverConfig = field(default_factory=SolverConfig)
    samples: SampleConfig = field(default_factory=SampleConfig)
    probe: Optional[ProbeConfig] = None
    p_norm_exponent: Optional[float] = None
    filename: str = "<dict>"

    @property
    def mode_name(self) -> str:
        return MODE_NAMES[self.mode]

    @property
    def dim(self) -> Optional[int]:
        if self.map is not None:
            return self.map.dim
        return self.norm.dim

    @property
    def param_norm(self) -> QuasiNormSpec:
        """The norm in which the enriched condition is stated."""
        return self.second_norm if self.mode == Mode.MAIA else self.norm

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        """Load and validate a config file."""
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except OSError as e:
            raise ConfigParseError(f"cannot read config: {e}") from e
        except json.JSONDecodeError as e:
            raise ConfigParseError(f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}") from e
        return cls.from_dict(data, filename=path)

    @classmethod
    def from_dict(cls, data: dict, filename: str = "<dict>") -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigParseError("config must be a JSON object")
        unknown = sorted(set(data) - _TOP_LEVEL_KEYS)
        if unknown:
            raise ConfigParseError(f"unknown key(s) {unknown}", unknown[0])

        mode_raw = _require(data, "mode")
        mode = MODE_BY_NAME.get(mode_raw) if isinstance(mode_raw, str) else None
        if mode is None:
            raise ConfigParseError(f"unknown mode {data['mode']!r}; expected one of "
                                   f"{sorted(MODE_BY_NAME)}", "mode")

        norm = _section("norm", QuasiNormSpec.from_dict, _require(data, "norm"))
        cfg = cls(mode=mode, norm=norm, filename=filename)

        if "second_norm" in data:
            cfg.second_norm = _section("second_norm", QuasiNormSpec.from_dict, data["second_norm"])

        x0_raw = data.get("x0")
        if "map" in data:
            hint = norm.dim
            if hint is None and isinstance(x0_raw, list):
                hint = len(x0_raw)
            cfg.map = _section("map", MapSpec.from_dict, data["map"], hint)

        _parse_params(cfg, data)
        cfg.require_positive_theta = bool(data.get("require_positive_theta", False))
        cfg.solver = _section("solver", _dataclass_from, SolverConfig, data.get("solver", {}))
        cfg.samples = _section("samples", _samples_from, data.get("samples", {}))
        if "probe" in data:
            cfg.probe = _section("probe", _dataclass_from, ProbeConfig, data["probe"])
        if "n_iterate" in data:
            n = data["n_iterate"]
            if not isinstance(n, int) or isinstance(n, bool) or n < 1:
                raise ConfigParseError(f"must be an integer >= 1, got {n!r}", "n_iterate")
            cfg.n_iterate = n
        if "p_norm_exponent" in data:
            p = data["p_norm_exponent"]
            if not isinstance(p, (int, float)) or not (0 < p <= 1):
                raise ConfigParseError(f"must lie in (0, 1], got {p!r}", "p_norm_exponent")
            cfg.p_norm_exponent = float(p)

        _check_mode(cfg)
        if x0_raw is not None:
            cfg.x0, cfg.x0_source = _parse_x0(x0_raw, cfg)
        elif mode in SOLVING_MODES:
            raise ConfigParseError(f"required in {MODE_NAMES[mode]} mode", "x0")
        _check_dimensions(cfg)
        logger.debug(f"Loaded {MODE_NAMES[mode]} config from {filename}")
        return cfg


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------
def _require(data: dict, key: str):
    if key not in data:
        raise ConfigParseError("missing required key", key)
    return data[key]


def _section(key: str, fn, *args):
    """Run a parser for one config section, tagging failures with the key."""
    try:
        return fn(*args)
    except ConfigParseError as e:
        if e.key:
            raise
        raise ConfigParseError(str(e), key) from e
    except (QuasiFixError, TypeError, ValueError) as e:
        raise ConfigParseError(str(e), key) from e


def _dataclass_from(cls, d: dict):
    if not isinstance(d, dict):
        raise ConfigParseError("must be an object")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(d) - known)
    if unknown:
        raise ConfigParseError(f"unknown field(s) {unknown}")
    return cls(**d)


def _samples_from(d: dict) -> SampleConfig:
    if not isinstance(d, dict):
        raise ConfigParseError("must be an object")
    unknown = sorted(set(d) - {"count", "range", "seed"})
    if unknown:
        raise ConfigParseError(f"unknown field(s) {unknown}")
    cfg = SampleConfig(count=as_count(d.get("count", SampleConfig.count), "count"),
                       radius=as_real(d.get("range", SampleConfig.radius), "range"),
                       seed=as_count(d.get("seed", SampleConfig.seed), "seed", minimum=0))
    if not (cfg.radius > 0):
        raise ConfigParseError(f"range must be > 0, got {cfg.radius}")
    return cfg


def _parse_params(cfg: ExperimentConfig, data: dict):
    params = data.get("params")
    if params is None:
        return
    if not isinstance(params, dict):
        raise ConfigParseError("must be an object", "params")
    if "b_grid" in params:
        grid = params["b_grid"]
        if (not isinstance(grid, list) or not grid
                or not all(isinstance(b, (int, float)) and b >= 0 for b in grid)):
            raise ConfigParseError("b_grid must be a non-empty list of numbers >= 0", "params")
        cfg.b_grid = [float(b) for b in grid]
    if "b" in params:
        b = params["b"]
        if not isinstance(b, (int, float)) or b < 0:
            raise ConfigParseError(f"b must be a number >= 0, got {b!r}", "params")
        cfg.b = float(b)
    if "theta" in params:
        theta = params["theta"]
        if not isinstance(theta, (int, float)) or theta < 0:
            raise ConfigParseError(f"theta must be a number >= 0, got {theta!r}", "params")
        if cfg.b is None:
            raise ConfigParseError("theta given without b", "params")
        cfg.theta = float(theta)
    if cfg.b is not None and cfg.b_grid is not None:
        raise ConfigParseError("give either b or b_grid, not both", "params")


def _check_mode(cfg: ExperimentConfig):
    name = cfg.mode_name
    if cfg.mode != Mode.VERIFY_NORM and cfg.map is None:
        raise ConfigParseError(f"required in {name} mode", "map")
    if cfg.mode in SOLVING_MODES and cfg.b is None and cfg.b_grid is None:
        raise ConfigParseError(f"{name} mode needs params.b or params.b_grid", "params")
    if cfg.mode == Mode.ASYMPTOTIC and cfg.n_iterate is None:
        raise ConfigParseError("required in asymptotic mode", "n_iterate")
    if cfg.mode == Mode.MAIA and cfg.second_norm is None:
        raise ConfigParseError("required in maia mode", "second_norm")
    if cfg.mode == Mode.VERIFY_NORM and cfg.norm.dim is None and cfg.map is None:
        raise ConfigParseError("verify_norm needs a dimension: set norm.dim", "norm")


def _parse_x0(raw, cfg: ExperimentConfig):
    dim = cfg.dim
    if isinstance(raw, str):
        if not raw.startswith(RANDOM_X0_PREFIX):
            raise ConfigParseError(f"expected a list or 'random:<seed>', got {raw!r}", "x0")
        try:
            seed = int(raw[len(RANDOM_X0_PREFIX):])
        except ValueError as e:
            raise ConfigParseError(f"bad seed in {raw!r}", "x0") from e
        if dim is None:
            raise ConfigParseError("random x0 needs a known dimension", "x0")
        domain = cfg.map.domain if cfg.map is not None else None
        if domain is not None:
            return random_point(dim, seed, lo=domain.lo, hi=domain.hi), raw
        return random_point(dim, seed, radius=DEFAULT_SAMPLE_RADIUS), raw
    if not isinstance(raw, list):
        raise ConfigParseError(f"expected a list or 'random:<seed>', got {raw!r}", "x0")
    x0 = _section("x0", as_vector, raw, dim)
    return x0, json.dumps(raw)


def _check_dimensions(cfg: ExperimentConfig):
    dim = cfg.dim
    for key, spec in (("norm", cfg.norm), ("second_norm", cfg.second_norm)):
        if spec is not None and spec.dim is not None and dim is not None and spec.dim != dim:
            raise ConfigParseError(f"dimension {spec.dim} does not match the map's {dim}", key)
    if cfg.x0 is not None and dim is not None and cfg.x0.size != dim:
        raise ConfigParseError(f"has dimension {cfg.x0.size}, expected {dim}", "x0")
