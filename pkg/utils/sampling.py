"""Seeded sample generation for the sampling-based checks.

All generators draw from numpy.random.default_rng(seed), so the same seed
always yields the same samples.
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from core.errors import DimensionMismatch

DEFAULT_SAMPLE_COUNT = 10_000
DEFAULT_SAMPLE_RADIUS = 10.0
DEFAULT_SEED = 0

# b values spanning lambda in {1, 0.8, 2/3, 0.5, 1/3, 0.2, 0.1}
DEFAULT_B_GRID = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 9.0]

SamplePairs = Tuple[np.ndarray, np.ndarray]


@dataclass
class SampleConfig:
    """How test samples are drawn."""
    count: int = DEFAULT_SAMPLE_COUNT
    radius: float = DEFAULT_SAMPLE_RADIUS   # uniform on [-radius, radius]^n
    seed: int = DEFAULT_SEED


def _bounds(dim: int, radius: float, lo=None, hi=None):
    if lo is None or hi is None:
        return np.full(dim, -radius), np.full(dim, radius)
    return np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)


def sample_vectors(dim: int, count: int = DEFAULT_SAMPLE_COUNT,
                   radius: float = DEFAULT_SAMPLE_RADIUS, seed: int = DEFAULT_SEED,
                   lo: Optional[Sequence[float]] = None,
                   hi: Optional[Sequence[float]] = None) -> np.ndarray:
    """Return a (count, dim) array uniform on [lo, hi] (default [-radius, radius]^dim)."""
    rng = np.random.default_rng(seed)
    low, high = _bounds(dim, radius, lo, hi)
    return rng.uniform(low, high, size=(count, dim))


def sample_pairs(dim: int, count: int = DEFAULT_SAMPLE_COUNT,
                 radius: float = DEFAULT_SAMPLE_RADIUS, seed: int = DEFAULT_SEED,
                 lo: Optional[Sequence[float]] = None,
                 hi: Optional[Sequence[float]] = None) -> SamplePairs:
    """Return two (count, dim) arrays X, Y; row i is the pair (x_i, y_i)."""
    rng = np.random.default_rng(seed)
    low, high = _bounds(dim, radius, lo, hi)
    return rng.uniform(low, high, size=(count, dim)), rng.uniform(low, high, size=(count, dim))


def sample_triples(dim: int, count: int = DEFAULT_SAMPLE_COUNT,
                   radius: float = DEFAULT_SAMPLE_RADIUS, seed: int = DEFAULT_SEED):
    rng = np.random.default_rng(seed)
    shape = (count, dim)
    return (rng.uniform(-radius, radius, shape),
            rng.uniform(-radius, radius, shape),
            rng.uniform(-radius, radius, shape))


def cancelling_pairs(dim: int = 2, count: int = DEFAULT_SAMPLE_COUNT,
                     radius: float = DEFAULT_SAMPLE_RADIUS, seed: int = DEFAULT_SEED,
                     max_offset: float = 1e-3) -> SamplePairs:
    """Pairs whose sum has a zero second coordinate.

    x = (u, s, ...), y = (v, -s, ...) with 0 < |s| <= max_offset, u and v of the
    same sign. For the a,p quasi-norm with a > 1 the ratio
    ||x+y|| / (||x|| + ||y||) along this family tends to a from below as s -> 0.
    """
    if dim < 2:
        raise ValueError("cancelling_pairs needs dim >= 2")
    rng = np.random.default_rng(seed)
    X = rng.uniform(-radius, radius, size=(count, dim))
    Y = rng.uniform(-radius, radius, size=(count, dim))
    sign = np.where(rng.random(count) < 0.5, -1.0, 1.0)
    X[:, 0] = sign * rng.uniform(0.0, radius, size=count)
    Y[:, 0] = sign * rng.uniform(0.0, radius, size=count)
    s = rng.uniform(0.0, max_offset, size=count)
    s[s == 0.0] = max_offset
    X[:, 1] = s
    Y[:, 1] = -s
    X[:, 2:] = 0.0
    Y[:, 2:] = 0.0
    return X, Y


def axis_pairs(dim: int = 2, count: int = DEFAULT_SAMPLE_COUNT,
               radius: float = DEFAULT_SAMPLE_RADIUS, seed: int = DEFAULT_SEED,
               max_offset: float = 1e-3) -> SamplePairs:
    """Pairs x = (u, 0, ...), y = (0, s, ...) with u != 0 and 0 < s <= max_offset.

    For the a,p quasi-norm with a < 1, x sits on the axis where the norm is
    a|x_1|, so ||x+y|| / (||x|| + ||y||) tends to 1/a from below as s -> 0.
    """
    if dim < 2:
        raise ValueError("axis_pairs needs dim >= 2")
    rng = np.random.default_rng(seed)
    X = np.zeros((count, dim))
    Y = np.zeros((count, dim))
    u = rng.uniform(-radius, radius, size=count)
    u[u == 0.0] = radius
    s = rng.uniform(0.0, max_offset, size=count)
    s[s == 0.0] = max_offset
    X[:, 0] = u
    Y[:, 1] = s
    return X, Y


def random_point(dim: int, seed: int, radius: float = DEFAULT_SAMPLE_RADIUS,
                 lo: Optional[Sequence[float]] = None,
                 hi: Optional[Sequence[float]] = None) -> np.ndarray:
    """A single uniform point, as used by "random:<seed>" initial points."""
    return sample_vectors(dim, 1, radius, seed, lo, hi)[0]


def as_pairs(samples) -> SamplePairs:
    """Normalize samples to a pair of (m, n) arrays.

    Accepts either a tuple (X, Y) of 2-D arrays or a sequence of (x, y)
    vector pairs.
    """
    if (isinstance(samples, tuple) and len(samples) == 2
            and all(isinstance(a, np.ndarray) and a.ndim == 2 for a in samples)):
        X, Y = samples
        return np.asarray(X, dtype=float), np.asarray(Y, dtype=float)
    pairs = list(samples)
    if not pairs:
        return np.empty((0, 0)), np.empty((0, 0))
    xs = [np.atleast_1d(np.asarray(x, dtype=float)) for x, _ in pairs]
    ys = [np.atleast_1d(np.asarray(y, dtype=float)) for _, y in pairs]
    sizes = {v.shape for v in xs + ys}
    if len(sizes) != 1:
        raise DimensionMismatch(f"sample vectors have mixed shapes {sorted(sizes)}")
    return np.array(xs), np.array(ys)
