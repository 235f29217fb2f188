"""Score distributions over [0, 1] and the dyadic bucket map.

Four distributions are supported:

* ``Uniform()``            continuous uniform on [0, 1) at 53-bit resolution
* ``DiscreteUniform(N)``   uniform on {0, 1/N, ..., (N-1)/N}, N a power of two
* ``GeoFinite(depth)``     mass 2^-k on 2^-k for k = 1..depth, and the
                           remaining 2^-depth on 2^-(depth+1)
* ``GeoInfinite()``        mass 2^-k on 2^-k for every k >= 1

Every sampler consumes exactly one uniform per score.  The geometric-like
samplers are the bucket map applied to a (discrete) uniform draw, so two
sketches fed from the same source see coupled scores.

All dyadic values are exact in binary floating point, so comparisons between
scores never suffer rounding ties.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rng import UniformSource

# 53-bit uniforms are multiples of 2^-53; the zero draw stands in for every
# bucket deeper than 2^-53 when sampling GeoInfinite.
_FLOAT_BITS = 53
_GEO_INFINITE_FLOOR = 2.0 ** -(_FLOAT_BITS + 1)


def map_g(x: float, truncation: int | float = math.inf) -> float:
    """Dyadic bucket of ``x``: the 2^-k with 2^-k <= x < 2^-(k-1).

    With a finite ``truncation`` N', every ``x < 2^-N'`` (including 0) maps to
    the floor bucket 2^-(N'+1).
    """
    if math.isinf(truncation):
        if not 0.0 < x < 1.0:
            raise ValueError(f"map_g with infinite truncation needs 0 < x < 1, got {x!r}")
        mant, exp = math.frexp(x)
        return math.ldexp(1.0, exp - 1)
    depth = _check_depth(truncation)
    if not 0.0 <= x < 1.0:
        raise ValueError(f"map_g needs 0 <= x < 1, got {x!r}")
    if x < math.ldexp(1.0, -depth):
        return math.ldexp(1.0, -depth - 1)
    mant, exp = math.frexp(x)
    return math.ldexp(1.0, exp - 1)


def map_g_array(x: np.ndarray, truncation: int | float = math.inf) -> np.ndarray:
    """Vectorised :func:`map_g` (no range checks)."""
    x = np.asarray(x, dtype=np.float64)
    _, exp = np.frexp(x)
    out = np.ldexp(1.0, exp - 1)
    if math.isinf(truncation):
        return out
    depth = _check_depth(truncation)
    return np.where(x < math.ldexp(1.0, -depth), math.ldexp(1.0, -depth - 1), out)


def _check_depth(depth) -> int:
    if isinstance(depth, bool) or int(depth) != depth or depth < 1:
        raise ValueError(f"truncation depth must be a positive integer, got {depth!r}")
    if depth > _FLOAT_BITS - 1:
        raise ValueError(f"truncation depth above {_FLOAT_BITS - 1} is not representable")
    return int(depth)


class ScoreDistribution:
    """Base class; concrete distributions are frozen dataclasses."""

    linear: bool = False

    def from_uniform(self, u: float) -> float:
        raise NotImplementedError

    def from_uniform_array(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def sample(self, src: UniformSource) -> float:
        return self.from_uniform(src.random())

    def sample_many(self, src: UniformSource, n: int) -> np.ndarray:
        return self.from_uniform_array(src.take(n))

    def cdf_below(self, p: float) -> float:
        """Probability mass of [0, p)."""
        raise NotImplementedError

    def support(self) -> list[float]:
        """Finite support in increasing order (discrete distributions only)."""
        raise NotImplementedError(f"{self!r} has no finite support")

    def in_support(self, x: float) -> bool:
        raise NotImplementedError


@dataclass(frozen=True)
class Uniform(ScoreDistribution):
    linear = True

    def from_uniform(self, u: float) -> float:
        return u

    def from_uniform_array(self, u: np.ndarray) -> np.ndarray:
        return u

    def cdf_below(self, p: float) -> float:
        return min(max(float(p), 0.0), 1.0)

    def in_support(self, x: float) -> bool:
        return 0.0 <= x <= 1.0


@dataclass(frozen=True)
class DiscreteUniform(ScoreDistribution):
    n: int
    linear = True

    def __post_init__(self):
        n = self.n
        if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
            raise ValueError(f"DiscreteUniform needs a positive integer N, got {n!r}")
        if n & (n - 1):
            raise ValueError(f"DiscreteUniform N must be a power of two, got {n}")
        if n > 2 ** _FLOAT_BITS:
            raise ValueError(f"DiscreteUniform N above 2^{_FLOAT_BITS} is not representable")

    def from_uniform(self, u: float) -> float:
        n = self.n
        return math.floor(u * n) / n

    def from_uniform_array(self, u: np.ndarray) -> np.ndarray:
        return np.floor(u * self.n) / self.n

    def cdf_below(self, p: float) -> float:
        n = self.n
        count = min(max(math.ceil(float(p) * n), 0), n)
        return count / n

    def support(self) -> list[float]:
        return [j / self.n for j in range(self.n)]

    def in_support(self, x: float) -> bool:
        return 0.0 <= x < 1.0 and (x * self.n).is_integer()


@dataclass(frozen=True)
class GeoFinite(ScoreDistribution):
    depth: int

    def __post_init__(self):
        _check_depth(self.depth)

    @property
    def base(self) -> DiscreteUniform:
        """The discrete uniform whose bucket map yields this distribution."""
        return DiscreteUniform(2 ** self.depth)

    def from_uniform(self, u: float) -> float:
        return map_g(self.base.from_uniform(u), self.depth)

    def from_uniform_array(self, u: np.ndarray) -> np.ndarray:
        return map_g_array(self.base.from_uniform_array(u), self.depth)

    def mass(self, x: float) -> float:
        d = self.depth
        if x == math.ldexp(1.0, -d - 1):
            return math.ldexp(1.0, -d)
        if self.in_support(x):
            return x
        return 0.0

    def cdf_below(self, p: float) -> float:
        return math.fsum(self.mass(x) for x in self.support() if x < p)

    def support(self) -> list[float]:
        return [math.ldexp(1.0, -k) for k in range(self.depth + 1, 0, -1)]

    def in_support(self, x: float) -> bool:
        if x <= 0.0 or x > 0.5:
            return False
        mant, exp = math.frexp(x)
        return mant == 0.5 and -exp <= self.depth


@dataclass(frozen=True)
class GeoInfinite(ScoreDistribution):
    linear = True

    def from_uniform(self, u: float) -> float:
        if u == 0.0:
            return _GEO_INFINITE_FLOOR
        return map_g(u)

    def from_uniform_array(self, u: np.ndarray) -> np.ndarray:
        out = map_g_array(np.where(u == 0.0, 0.5, u))
        return np.where(u == 0.0, _GEO_INFINITE_FLOOR, out)

    def cdf_below(self, p: float) -> float:
        # Tail sum over {2^-k < p, k >= 1} telescopes to 2^(1-j), j the first such k.
        p = float(p)
        if p <= 0.0:
            return 0.0
        if p > 0.5:
            return 1.0
        mant, exp = math.frexp(p)
        j = 2 - exp if mant == 0.5 else 1 - exp
        return math.ldexp(1.0, 1 - max(j, 1))

    def in_support(self, x: float) -> bool:
        if x <= 0.0 or x > 0.5:
            return False
        return math.frexp(x)[0] == 0.5


def sample_score(dist: ScoreDistribution, src: UniformSource) -> float:
    return dist.sample(src)


def cdf_below(dist: ScoreDistribution, p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"cutoff must lie in [0, 1], got {p!r}")
    return dist.cdf_below(p)
