"""Oracles, checkers, stream generators and the Monte Carlo runner.

The checkers work on traced transcripts:

* :func:`check_monotone`   cutoffs never increase
* :func:`check_fair`       at every step, an element whose latest appearance
                           so far is at j is in the list iff q_j < p_t
* :func:`coupled_dond_pair`  algorithms D and D' driven by the same discrete
                           uniform draws keep p'_t <= p_t <= 2 p'_t
* :func:`credit_substitution_check`  re-runs D with every credit score
                           replaced by 0 (final members) or 1 (the rest)
                           and reports which of the two possible relations
                           between the cutoffs held

:func:`monte_carlo` runs independent seeded trials of one variant on a fixed
stream and aggregates bias, spread and failure frequencies.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

from .rng import HARNESS_KEY, STREAM_KEY, UniformSource, make_generator
from .scores import DiscreteUniform, GeoFinite, Uniform, map_g
from .sizing import SizingParams, bucket_limit, p0_exponent
from .sketch import (
    CutoffSketch,
    SketchConfig,
    Status,
    Transcript,
    UpdateRule,
    run,
)

# ---------------------------------------------------------------------------
# streams


@dataclass(frozen=True)
class AllDistinct:
    f0: int


@dataclass(frozen=True)
class Repeated:
    """Elements 1..f0 in round-robin order, ``reps`` passes."""

    f0: int
    reps: int


@dataclass(frozen=True)
class Zipf:
    """``m - f0`` Zipf(exponent) draws over 1..f0 plus one copy of each element, shuffled."""

    f0: int
    exponent: float
    m: int


@dataclass(frozen=True)
class Permuted:
    base: "StreamSpec"
    seed: int


StreamSpec = AllDistinct | Repeated | Zipf | Permuted


def stream_f0(spec: StreamSpec) -> int:
    return spec.base.f0 if isinstance(spec, Permuted) else spec.f0


def generate_stream(spec: StreamSpec, seed: int = 0) -> list[int]:
    """Materialise ``spec`` as a list of integer tokens in 1..F0."""
    if isinstance(spec, Permuted):
        base = generate_stream(spec.base, seed)
        order = make_generator(spec.seed, STREAM_KEY, 1).permutation(len(base))
        return [base[i] for i in order]
    if not isinstance(spec, (AllDistinct, Repeated, Zipf)):
        raise TypeError(f"unknown stream spec {spec!r}")
    if spec.f0 < 0:
        raise ValueError("f0 must be non-negative")
    if isinstance(spec, AllDistinct):
        return list(range(1, spec.f0 + 1))
    if isinstance(spec, Repeated):
        if spec.reps < 1:
            raise ValueError("reps must be at least 1")
        return list(range(1, spec.f0 + 1)) * spec.reps
    if isinstance(spec, Zipf):
        if spec.f0 > spec.m:
            raise ValueError(f"f0={spec.f0} exceeds stream length m={spec.m}")
        if spec.f0 == 0:
            if spec.m:
                raise ValueError("a non-empty stream has at least one distinct element")
            return []
        gen = make_generator(seed, STREAM_KEY, 0)
        ranks = np.arange(1, spec.f0 + 1, dtype=np.float64)
        weights = ranks ** -float(spec.exponent)
        draws = gen.choice(spec.f0, size=spec.m - spec.f0, p=weights / weights.sum()) + 1
        out = np.concatenate([draws, np.arange(1, spec.f0 + 1)])
        gen.shuffle(out)
        return out.tolist()


# ---------------------------------------------------------------------------
# oracles


def exact_f0(stream) -> int:
    return len(set(stream))


@dataclass(frozen=True)
class LastOccurrence:
    """1-indexed times of final appearances, and the final time of each element."""

    F: frozenset
    last: dict


def last_occurrences(stream: Sequence[Hashable]) -> LastOccurrence:
    last = {}
    for t, a in enumerate(stream, start=1):
        last[a] = t
    return LastOccurrence(frozenset(last.values()), last)


@dataclass(frozen=True)
class FairnessResult:
    ok: bool
    violation: tuple[int, int] | None = None

    def __bool__(self) -> bool:
        return self.ok


def check_fair(transcript: Transcript, stream: Sequence[Hashable]) -> FairnessResult:
    """Check the fairness biconditional at every recorded step.

    ``violation`` is the first offending ``(t, j)`` pair, 1-indexed.
    """
    last: dict = {}
    scores: dict[int, float] = {}
    for rec in transcript:
        t = rec.t
        if rec.score is None:
            raise ValueError("fairness needs a transcript with recorded scores")
        if stream[t - 1] != rec.element:
            raise ValueError(f"transcript step {t} does not match the stream")
        last[rec.element] = t
        scores[t] = rec.score
        members, p = rec.members, rec.cutoff
        for a, j in last.items():
            if (a in members) != (scores[j] < p):
                return FairnessResult(False, (t, j))
    return FairnessResult(True)


def check_monotone(cutoffs) -> bool:
    """True iff the cutoff sequence (or a transcript's) never increases."""
    if isinstance(cutoffs, Transcript):
        cutoffs = cutoffs.cutoffs
    prev = 1.0
    for p in cutoffs:
        if p > prev:
            return False
        prev = p
    return True


# ---------------------------------------------------------------------------
# coupling


@dataclass
class CoupledRun:
    ok: bool
    dond: Transcript
    dond_prime: Transcript
    first_violation: int | None = None


def coupled_dond_pair(stream, depth: int, s: int, seed: int) -> CoupledRun:
    """Run D on u ~ U_{2^depth} and D' on g(u) from the same draws."""
    base = DiscreteUniform(2 ** depth)
    src = UniformSource(seed, HARNESS_KEY, 0)
    u = base.sample_many(src, len(stream)).tolist()
    q = [map_g(x, depth) for x in u]
    d = CutoffSketch(s, UpdateRule.MAX_SCORE, base, trace=True).feed(stream, u)
    dp = CutoffSketch(s, UpdateRule.MAX_SCORE, GeoFinite(depth), trace=True).feed(stream, q)
    bad = None
    for rd, rp in zip(d.transcript, dp.transcript):
        if not rp.cutoff <= rd.cutoff <= 2 * rp.cutoff:
            bad = rd.t
            break
    return CoupledRun(bad is None, d.transcript, dp.transcript, bad)


# ---------------------------------------------------------------------------
# credit substitution


@dataclass(frozen=True)
class CreditSubstitutionReport:
    S: frozenset
    x: int
    c_next: float
    p_m: float
    p_m_sub: float
    branch: int | None

    @property
    def equal_branch(self) -> bool:
        return self.p_m == self.p_m_sub <= self.c_next

    @property
    def credit_branch(self) -> bool:
        return self.p_m == self.c_next < self.p_m_sub

    @property
    def holds(self) -> bool:
        """Exactly one of the two relations holds."""
        return self.equal_branch != self.credit_branch


def credit_substitution_check(stream, seed: int, s: int) -> CreditSubstitutionReport | None:
    """Compare a D run with its credit-substituted re-run.

    Returns None when F0 <= s (the final cutoff is 1 and there is no
    (x+1)-th credit to compare against).
    """
    if exact_f0(stream) <= s:
        return None
    src = UniformSource(seed, HARNESS_KEY, 1)
    q = Uniform().sample_many(src, len(stream)).tolist()
    orig = CutoffSketch(s, UpdateRule.MAX_SCORE, Uniform()).feed(stream, q)
    S = orig.list.elements()
    occ = last_occurrences(stream)
    credits = sorted(q[t - 1] for t in occ.F)
    x = len(S)
    c_next = credits[x]
    sub = [
        q[t - 1] if occ.last[a] != t else (0.0 if a in S else 1.0)
        for t, a in enumerate(stream, start=1)
    ]
    rerun = CutoffSketch(s, UpdateRule.MAX_SCORE, Uniform()).feed(stream, sub)
    report = CreditSubstitutionReport(S, x, c_next, orig.cutoff, rerun.cutoff, None)
    branch = None
    if report.holds:
        branch = 1 if report.equal_branch else 2
    return CreditSubstitutionReport(S, x, c_next, orig.cutoff, rerun.cutoff, branch)


# ---------------------------------------------------------------------------
# Monte Carlo


@dataclass(frozen=True)
class Experiment:
    """One Monte Carlo configuration.

    Give either ``s`` or ``sizing``; with ``sizing`` the bucket limit comes
    from :func:`bucket_limit` and ``epsilon`` defaults to the sizing epsilon.
    Trial ``i`` runs the sketch keyed ``(base_seed, i)`` on one fixed stream
    generated from ``base_seed``.
    """

    variant: str
    stream: StreamSpec
    trials: int
    base_seed: int = 0
    s: int | None = None
    sizing: SizingParams | None = None
    epsilon: float | None = None
    n_cap: int | None = None
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if (self.s is None) == (self.sizing is None):
            raise ValueError("give exactly one of s or sizing")

    @property
    def bucket_limit(self) -> int:
        return self.s if self.s is not None else bucket_limit(self.sizing).s

    @property
    def eps(self) -> float | None:
        if self.epsilon is not None:
            return self.epsilon
        return self.sizing.epsilon if self.sizing is not None else None


@dataclass
class MonteCarloReport:
    variant: str
    f0: int
    s: int
    trials: int
    mean_estimate: float
    standard_error: float
    empirical_bias: float
    failure_rate: float | None
    abort_rate: float
    p_small_rate: float
    estimates: np.ndarray = field(repr=False, default=None)

    FIELDS = (
        "variant", "f0", "s", "trials", "mean_estimate", "standard_error",
        "empirical_bias", "failure_rate", "abort_rate", "p_small_rate",
    )

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.FIELDS}


def _trial_chunk(args) -> list[tuple[float, float, bool]]:
    variant, s, seed, ids, stream, n_cap = args
    out = []
    for i in ids:
        r = run(SketchConfig(variant, s, seed=seed, instance_id=i), stream, n_cap=n_cap)
        out.append((r.estimate, r.final_cutoff, r.status is Status.ABORTED))
    return out


def monte_carlo(exp: Experiment) -> MonteCarloReport:
    stream = generate_stream(exp.stream, exp.base_seed)
    f0 = exact_f0(stream)
    s = exp.bucket_limit
    ids = list(range(exp.trials))
    if exp.workers > 1:
        chunks = [ids[k::exp.workers] for k in range(exp.workers)]
        with ProcessPoolExecutor(exp.workers) as pool:
            parts = list(pool.map(
                _trial_chunk,
                [(exp.variant, s, exp.base_seed, c, stream, exp.n_cap) for c in chunks],
            ))
        by_id = {}
        for c, part in zip(chunks, parts):
            by_id.update(zip(c, part))
        results = [by_id[i] for i in ids]
    else:
        results = _trial_chunk((exp.variant, s, exp.base_seed, ids, stream, exp.n_cap))
    return _aggregate(exp, f0, s, results)


def _aggregate(exp: Experiment, f0: int, s: int, results) -> MonteCarloReport:
    est = np.array([e for e, _, aborted in results if not aborted], dtype=np.float64)
    cut = np.array([p for _, p, aborted in results if not aborted], dtype=np.float64)
    aborts = sum(1 for *_, aborted in results if aborted)
    n = exp.trials
    if est.size:
        mean = float(est.mean())
        se = float(est.std(ddof=1) / math.sqrt(est.size)) if est.size > 1 else math.nan
    else:
        mean = se = math.nan
    eps = exp.eps
    failure = None
    if eps is not None:
        outside = np.count_nonzero((est < (1 - eps) * f0) | (est > (1 + eps) * f0))
        failure = (int(outside) + aborts) / n
    p0 = math.ldexp(1.0, -p0_exponent(f0, s))
    p_small = int(np.count_nonzero(cut < p0)) / n
    return MonteCarloReport(
        exp.variant, f0, s, n, mean, se, mean - f0, failure, aborts / n, p_small, est,
    )
