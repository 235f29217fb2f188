"""Chernoff tails and bucket-limit sizing.

All logarithms are natural.  Bucket limits are rounded up, with a 1e-9
slack so that formula values sitting exactly on an integer (``12 * ln e``)
are not bumped by floating-point noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

SIZING_VARIANTS = ("DonD", "DonDPrime", "CVM1", "CVM2", "CVM2Refuse", "Tracking")

_CEIL_SLACK = 1e-9


@dataclass(frozen=True)
class TailBound:
    exact: float
    bound: float


def _check_tail_args(N: int, p: float, eps: float) -> None:
    if isinstance(N, bool) or int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer, got {N!r}")
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must lie in (0, 1], got {p!r}")
    if not 0.0 < eps <= 1.0:
        raise ValueError(f"eps must lie in (0, 1], got {eps!r}")


def _log_binom_pmf(N: int, x: int, p: float) -> float:
    if p == 1.0:
        return 0.0 if x == N else -math.inf
    return (
        math.lgamma(N + 1) - math.lgamma(x + 1) - math.lgamma(N - x + 1)
        + x * math.log(p) + (N - x) * math.log1p(-p)
    )


def _log_sum(logs: list[float]) -> float:
    top = max(logs, default=-math.inf)
    if top == -math.inf:
        return -math.inf
    return top + math.log(math.fsum(math.exp(v - top) for v in logs))


def _exact_tail(N: int, p: float, lo: int, hi: int) -> float:
    if lo > hi:
        return 0.0
    return min(1.0, math.exp(_log_sum([_log_binom_pmf(N, x, p) for x in range(lo, hi + 1)])))


def binomial_tail_upper(N: int, p: float, eps: float) -> TailBound:
    """Pr(X >= Np(1+eps)) for X ~ Bin(N, p), exact and the e^{-Np eps^2/3} bound."""
    _check_tail_args(N, p, eps)
    lo = math.ceil(N * p * (1 + eps) - _CEIL_SLACK)
    return TailBound(_exact_tail(N, p, max(lo, 0), N), math.exp(-N * p * eps * eps / 3))


def binomial_tail_lower(N: int, p: float, eps: float) -> TailBound:
    """Pr(X <= Np(1-eps)) for X ~ Bin(N, p), exact and the e^{-Np eps^2/2} bound."""
    _check_tail_args(N, p, eps)
    hi = math.floor(N * p * (1 - eps) + _CEIL_SLACK)
    return TailBound(_exact_tail(N, p, 0, min(hi, N)), math.exp(-N * p * eps * eps / 2))


def implication_check(N: int, p: float, eps: float, beta: float) -> bool:
    """Whether ``Np >= 3 eps^-2 ln(1/beta)``, which forces both tails below beta."""
    if not 0.0 < beta <= 1.0:
        raise ValueError(f"beta must lie in (0, 1], got {beta!r}")
    return N * p >= 3.0 / (eps * eps) * math.log(1.0 / beta)


@dataclass(frozen=True)
class SizingParams:
    epsilon: float
    delta: float
    m: int
    n: int | None = None
    variant: str = "CVM2"

    def __post_init__(self):
        if not 0.0 < self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in (0, 1], got {self.epsilon!r}")
        # delta above 1 is meaningless as a guarantee but the formulas stay defined
        if not self.delta > 0.0:
            raise ValueError(f"delta must be positive, got {self.delta!r}")
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"m must be a positive integer, got {self.m!r}")
        if self.n is not None and (int(self.n) != self.n or self.n < 1):
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if self.variant not in SIZING_VARIANTS:
            raise ValueError(f"unknown sizing variant {self.variant!r}")


@dataclass(frozen=True)
class SizingResult:
    s: int
    variant: str
    formula: str
    terms: tuple[float, ...]

    def p0_exponent(self, f0: int) -> int:
        return p0_exponent(f0, self.s)

    def p0(self, f0: int) -> float:
        return math.ldexp(1.0, -self.p0_exponent(f0))


def p0_exponent(f0: int, s: int) -> int:
    """Smallest k >= 0 with 2^k * s >= 2 * f0, i.e. ceil(log2(2 f0 / s)) clamped at 0."""
    k = 0
    while (s << k) < 2 * f0:
        k += 1
    return k


def _ceil(x: float) -> int:
    return max(1, math.ceil(x - _CEIL_SLACK))


def bucket_limit(params: SizingParams) -> SizingResult:
    eps, delta, m = params.epsilon, params.delta, params.m
    v = params.variant
    ln = math.log
    if v == "DonD":
        terms = (24 * ln(4 * m / delta), 24 / eps**2 * ln(96 / (eps**2 * delta)))
        formula = "max{24 ln(4m/delta), (24/eps^2) ln(96/(eps^2 delta))}"
        value = max(terms)
    elif v in ("DonDPrime", "CVM1", "CVM2"):
        terms = (24 * ln(4 * m / delta), 6 / eps**2 * ln(8 / delta))
        formula = "max{24 ln(4m/delta), (6/eps^2) ln(8/delta)}"
        value = max(terms)
    elif v == "CVM2Refuse":
        n_prime = m if params.n is None else min(params.n, m)
        terms = (12 * ln(4 * n_prime / delta), 6 / eps**2 * ln(8 / delta))
        formula = "12 ln(4n'/delta) + (6/eps^2) ln(8/delta), n' = min(n, m)"
        value = sum(terms)
    else:
        terms = (12 / eps**2 * ln(8 * m / delta),)
        formula = "(12/eps^2) ln(8m/delta)"
        value = terms[0]
    return SizingResult(_ceil(value), v, formula, terms)
