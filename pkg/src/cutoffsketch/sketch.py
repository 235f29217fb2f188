"""Cutoff-based distinct-elements sketches.

A cutoff sketch keeps at most ``s`` (element, score) pairs.  Each arrival
draws a fresh score ``q``; the element is dropped from the list and
re-inserted only when ``q`` is below the current cutoff ``p``.  When the list
overflows to ``s + 1`` entries an update rule lowers the cutoff and filters
the list down again.  The estimate is ``|L| / D([0, p))``.

Update rules:

``MAX_SCORE``   new cutoff is the largest score in the list (algorithms D, D').
``CVM1_HALVE``  halve the cutoff if the largest score is exactly half of it,
                otherwise abort.
``CVM2_HALVE``  halve and filter, repeated until the list fits.  In refuse
                mode a single halving is applied and, if nothing was shed,
                the incoming element is refused instead.

:class:`BernoulliSketch` is the coin-flip form of CVM2 with refusal: each
arrival is kept with probability ``p``, and an overflow keeps every entry
with probability 1/2 while halving ``p``.

Named variants (see :data:`VARIANTS`):

=============  ===========  ===================
variant        rule         default scores
=============  ===========  ===================
DonD           MAX_SCORE    Uniform()
DonDPrime      MAX_SCORE    GeoInfinite()
CVM1           CVM1_HALVE   GeoInfinite()
CVM2           CVM2_HALVE   GeoInfinite()
CVM2Refuse     (Bernoulli)  none
=============  ===========  ===================

With dyadic scores, looping CVM2 halvings stops exactly at the largest
score, so CVM2 and DonDPrime produce identical transcripts from identical
scores.
"""

from __future__ import annotations

import enum
import heapq
import itertools
import math
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

from .rng import SKETCH_KEY, UniformSource
from .scores import GeoInfinite, ScoreDistribution, Uniform


class UpdateRule(enum.Enum):
    MAX_SCORE = "max_score"
    CVM1_HALVE = "cvm1_halve"
    CVM2_HALVE = "cvm2_halve"


class Status(enum.Enum):
    RUNNING = "running"
    ABORTED = "aborted"


class SketchAborted(RuntimeError):
    """Raised when a CVM1 sketch is stepped or queried after aborting."""


VARIANTS: dict[str, tuple[UpdateRule | None, ScoreDistribution | None]] = {
    "DonD": (UpdateRule.MAX_SCORE, Uniform()),
    "DonDPrime": (UpdateRule.MAX_SCORE, GeoInfinite()),
    "CVM1": (UpdateRule.CVM1_HALVE, GeoInfinite()),
    "CVM2": (UpdateRule.CVM2_HALVE, GeoInfinite()),
    "CVM2Refuse": (None, None),
}


# ---------------------------------------------------------------------------
# list operations


@dataclass
class CutoffList:
    """Distinct elements with their scores; ``marked`` is the last insert."""

    entries: dict = field(default_factory=dict)
    marked: Hashable | None = None

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, a) -> bool:
        return a in self.entries

    def elements(self) -> frozenset:
        return frozenset(self.entries)

    def copy(self) -> "CutoffList":
        return CutoffList(dict(self.entries), self.marked)


def remove(lst: CutoffList, a) -> CutoffList:
    """Copy of ``lst`` without element ``a``."""
    out = lst.copy()
    out.entries.pop(a, None)
    if out.marked == a:
        out.marked = None
    return out


def filter_below(lst: CutoffList, p: float) -> CutoffList:
    """Copy of ``lst`` keeping only entries with score strictly below ``p``."""
    kept = {a: q for a, q in lst.entries.items() if q < p}
    return CutoffList(kept, lst.marked if lst.marked in kept else None)


def max_score(lst: CutoffList) -> float:
    if not lst.entries:
        raise ValueError("max_score of an empty list is undefined")
    return max(lst.entries.values())


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class StepRecord:
    t: int
    element: Hashable
    score: float | None
    cutoff: float
    members: frozenset
    draws: tuple = ()
    refused: bool = False


@dataclass
class Transcript:
    records: list[StepRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    @property
    def cutoffs(self) -> list[float]:
        return [r.cutoff for r in self.records]

    @property
    def scores(self) -> list[float | None]:
        return [r.score for r in self.records]


@dataclass
class EstimateReport:
    estimate: float
    final_cutoff: float
    final_list_size: int
    status: Status
    steps_processed: int
    transcript: Transcript | None = None

    @property
    def aborted(self) -> bool:
        return self.status is Status.ABORTED


@dataclass(frozen=True)
class SketchConfig:
    """Everything needed to build a sketch reproducibly.

    ``dist`` overrides the variant's default score distribution.  ``refuse``
    enables the refuse-adjoined step (not allowed for CVM1).
    """

    variant: str
    s: int
    seed: int = 0
    instance_id: int = 0
    dist: ScoreDistribution | None = None
    refuse: bool = False
    trace: bool = False

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; choose from {sorted(VARIANTS)}")
        if isinstance(self.s, bool) or int(self.s) != self.s or self.s < 1:
            raise ValueError(f"bucket limit s must be a positive integer, got {self.s!r}")


# ---------------------------------------------------------------------------
# score-form sketch


class CutoffSketch:
    """Score-form cutoff sketch (D, D', CVM1, CVM2).

    The sketch owns a :class:`UniformSource` keyed by ``(seed, instance_id)``.
    ``step(a)`` draws a score from it; ``step(a, score=q)`` injects one,
    which the harness uses for coupled and substituted runs.
    """

    def __init__(
        self,
        s: int,
        rule: UpdateRule,
        dist: ScoreDistribution,
        *,
        seed: int = 0,
        instance_id: int = 0,
        refuse: bool = False,
        trace: bool = False,
    ):
        if s < 1:
            raise ValueError("bucket limit s must be at least 1")
        if refuse and rule is UpdateRule.CVM1_HALVE:
            raise ValueError("refuse mode replaces abort; it cannot be combined with CVM1")
        self.s = int(s)
        self.rule = rule
        self.dist = dist
        self.refuse = refuse
        self.list = CutoffList()
        self.cutoff = 1.0
        self.t = 0
        self.status = Status.RUNNING
        self.transcript = Transcript() if trace else None
        self.src = UniformSource(seed, SKETCH_KEY, instance_id)
        # max-heap of (-score, tiebreak, element); stale items are skipped lazily
        self._heap: list = []
        self._tick = itertools.count()

    @classmethod
    def from_config(cls, config: SketchConfig) -> "CutoffSketch":
        rule, default_dist = VARIANTS[config.variant]
        if rule is None:
            raise ValueError(f"{config.variant} is not a score-form variant")
        return cls(
            config.s,
            rule,
            config.dist or default_dist,
            seed=config.seed,
            instance_id=config.instance_id,
            refuse=config.refuse,
            trace=config.trace,
        )

    def __len__(self) -> int:
        return len(self.list.entries)

    def step(self, a, score: float | None = None) -> "CutoffSketch":
        """Process one arrival.  Returns ``self`` for chaining."""
        if self.status is Status.ABORTED:
            raise SketchAborted("cannot step an aborted sketch")
        q = self.dist.sample(self.src) if score is None else score
        entries = self.list.entries
        entries.pop(a, None)
        if q < self.cutoff:
            entries[a] = q
            self.list.marked = a
            heapq.heappush(self._heap, (-q, next(self._tick), a))
        else:
            self.list.marked = None
        refused = False
        if len(entries) > self.s:
            refused = self._overflow(a)
            if self.status is Status.ABORTED:
                return self
        self.t += 1
        if self.transcript is not None:
            self.transcript.records.append(
                StepRecord(self.t, a, q, self.cutoff, frozenset(entries), refused=refused)
            )
        return self

    def step_refuse(self, a, score: float | None = None) -> "CutoffSketch":
        if not self.refuse:
            raise ValueError("step_refuse needs a sketch built with refuse=True")
        return self.step(a, score)

    def feed(self, stream: Iterable, scores: Sequence[float] | None = None) -> "CutoffSketch":
        """Step through ``stream``; stops early if the sketch aborts.

        Scores are drawn in one batch, which consumes the source exactly as
        per-element draws would.
        """
        stream = list(stream)
        if scores is None:
            scores = self.dist.sample_many(self.src, len(stream)).tolist()
        elif len(scores) != len(stream):
            raise ValueError("scores and stream differ in length")
        if self.transcript is not None:
            for a, q in zip(stream, scores):
                self.step(a, q)
                if self.status is Status.ABORTED:
                    break
            return self
        # Inlined common path; overflow goes through the shared handler.
        entries = self.list.entries
        heap = self._heap
        push = heapq.heappush
        tick = self._tick
        s = self.s
        lst = self.list
        if self.status is Status.ABORTED:
            raise SketchAborted("cannot step an aborted sketch")
        for a, q in zip(stream, scores):
            entries.pop(a, None)
            if q < self.cutoff:
                entries[a] = q
                lst.marked = a
                push(heap, (-q, next(tick), a))
                if len(entries) > s:
                    self._overflow(a)
                    if self.status is Status.ABORTED:
                        break
            else:
                lst.marked = None
            self.t += 1
        return self

    def _top(self) -> float:
        """Largest live score; drops stale heap items on the way."""
        heap, entries = self._heap, self.list.entries
        while True:
            negq, _, a = heap[0]
            if entries.get(a) == -negq:
                return -negq
            heapq.heappop(heap)

    def _filter(self, p: float) -> None:
        heap, entries = self._heap, self.list.entries
        while heap and -heap[0][0] >= p:
            negq, _, a = heapq.heappop(heap)
            if entries.get(a) == -negq:
                del entries[a]
        if self.list.marked not in entries:
            self.list.marked = None
        if len(heap) > 4 * (self.s + 1) + 64:
            self._heap = [(-q, next(self._tick), a) for a, q in entries.items()]
            heapq.heapify(self._heap)

    def _overflow(self, a) -> bool:
        """Apply the update rule to an (s+1)-entry list; returns True on refusal."""
        p = self.cutoff
        top = self._top()
        rule = self.rule
        if rule is UpdateRule.MAX_SCORE:
            p = top
        elif rule is UpdateRule.CVM1_HALVE:
            if top != p / 2:
                self.status = Status.ABORTED
                return False
            p = p / 2
        elif self.refuse:
            p = p / 2
        else:
            # halve-and-filter until something is shed, i.e. until p <= top
            p = p / 2
            while p > top:
                p = p / 2
        self.cutoff = p
        self._filter(p)
        if len(self.list.entries) > self.s:
            # only reachable in refuse mode: nothing shed, so a_t is still present
            del self.list.entries[a]
            self.list.marked = None
            return True
        return False

    def estimate(self, n_cap: int | None = None, m_cap: int | None = None) -> EstimateReport:
        """Current estimate ``|L| / D([0, p))``.

        When the cutoff carries no mass below it, fall back to the smaller of
        the known caps; ``m_cap`` defaults to the number of elements seen.
        """
        if self.status is Status.ABORTED:
            raise SketchAborted("an aborted sketch has no estimate")
        size = len(self.list.entries)
        if size == 0:
            est = 0.0
        else:
            mass = self.dist.cdf_below(self.cutoff)
            if mass > 0:
                est = size / mass
            else:
                est = float(_fallback_cap(n_cap, m_cap, self.t))
        return EstimateReport(est, self.cutoff, size, self.status, self.t, self.transcript)

    def report(self, n_cap=None, m_cap=None) -> EstimateReport:
        """Like :meth:`estimate`, but reports aborts instead of raising."""
        if self.status is Status.ABORTED:
            return EstimateReport(
                math.nan, self.cutoff, len(self.list.entries), self.status, self.t, self.transcript
            )
        return self.estimate(n_cap, m_cap)


def _fallback_cap(n_cap, m_cap, steps) -> int:
    if m_cap is None:
        m_cap = steps
    return m_cap if n_cap is None else min(n_cap, m_cap)


# ---------------------------------------------------------------------------
# Bernoulli-form sketch


class BernoulliSketch:
    """CVM2 with refusal, in coin-flip form.

    Stored values are the cutoff at which an entry was admitted (or last
    survived a halving).  The estimate is ``|L| / p``.

    With ``refuse=False`` an overflow that sheds nothing is followed by
    further coin-flip halvings until the list fits, matching the score-form
    CVM2 loop.
    """

    def __init__(
        self, s: int, *, seed: int = 0, instance_id: int = 0, trace: bool = False, refuse: bool = True
    ):
        if s < 1:
            raise ValueError("bucket limit s must be at least 1")
        self.s = int(s)
        self.refuse = refuse
        self.list = CutoffList()
        self.cutoff = 1.0
        self.t = 0
        self.status = Status.RUNNING
        self.transcript = Transcript() if trace else None
        self.src = UniformSource(seed, SKETCH_KEY, instance_id)
        self._draws: list | None = [] if trace else None

    @classmethod
    def from_config(cls, config: SketchConfig) -> "BernoulliSketch":
        if config.variant != "CVM2Refuse":
            raise ValueError(f"{config.variant} is not the Bernoulli-form variant")
        return cls(config.s, seed=config.seed, instance_id=config.instance_id, trace=config.trace)

    def __len__(self) -> int:
        return len(self.list.entries)

    def _coin(self, p: float) -> bool:
        bit = self.src.random() < p
        if self._draws is not None:
            self._draws.append(bit)
        return bit

    def admit(self, a) -> bool:
        """Insert ``a`` at the current cutoff and resolve any overflow.

        Returns True if ``a`` was refused.
        """
        entries = self.list.entries
        entries[a] = self.cutoff
        self.list.marked = a
        if len(entries) <= self.s:
            return False
        if self._draws is None:
            rand = self.src.random
            keep = lambda: rand() < 0.5  # noqa: E731
        else:
            keep = lambda: self._coin(0.5)  # noqa: E731
        before = len(entries)
        while True:
            kept = [x for x in entries if keep()]
            self.cutoff = p = self.cutoff / 2
            self.list.entries = entries = dict.fromkeys(kept, p)
            if len(entries) < before or self.refuse:
                break
        if len(entries) == before:
            del entries[a]
            self.list.marked = None
            return True
        if a not in entries:
            self.list.marked = None
        return False

    def step(self, a) -> "BernoulliSketch":
        self.list.entries.pop(a, None)
        refused = False
        if self._coin(self.cutoff):
            refused = self.admit(a)
        else:
            self.list.marked = None
        self.t += 1
        self._record(a, refused)
        return self

    def _record(self, a, refused: bool) -> None:
        if self.transcript is None:
            return
        self.transcript.records.append(
            StepRecord(
                self.t, a, None, self.cutoff, frozenset(self.list.entries),
                draws=tuple(self._draws), refused=refused,
            )
        )
        self._draws.clear()

    def feed(self, stream: Iterable) -> "BernoulliSketch":
        if self.transcript is not None:
            for a in stream:
                self.step(a)
            return self
        entries = self.list.entries
        rand = self.src.random
        s = self.s
        for a in stream:
            entries.pop(a, None)
            if rand() < self.cutoff:
                entries[a] = self.cutoff
                if len(entries) > s:
                    self.admit(a)
                    entries = self.list.entries
            self.t += 1
        return self

    def estimate(self, n_cap: int | None = None, m_cap: int | None = None) -> EstimateReport:
        size = len(self.list.entries)
        est = size / self.cutoff if size else 0.0
        return EstimateReport(est, self.cutoff, size, self.status, self.t, self.transcript)

    report = estimate


# ---------------------------------------------------------------------------
# drivers


def make_sketch(config: SketchConfig) -> CutoffSketch | BernoulliSketch:
    if config.variant == "CVM2Refuse":
        return BernoulliSketch.from_config(config)
    return CutoffSketch.from_config(config)


def step(sketch, a, score: float | None = None):
    """Advance ``sketch`` by one element (functional-style alias)."""
    if isinstance(sketch, BernoulliSketch):
        if score is not None:
            raise ValueError("the Bernoulli form does not take injected scores")
        return sketch.step(a)
    return sketch.step(a, score)


def run(
    config: SketchConfig,
    stream: Iterable,
    n_cap: int | None = None,
    m_cap: int | None = None,
    scores: Sequence[float] | None = None,
) -> EstimateReport:
    """Fold a fresh sketch over ``stream`` and report.

    Aborts come back as ``status=ABORTED`` with a NaN estimate; they are
    never silently replaced by a number.
    """
    sketch = make_sketch(config)
    if scores is not None:
        if isinstance(sketch, BernoulliSketch):
            raise ValueError("the Bernoulli form does not take injected scores")
        sketch.feed(stream, scores)
    else:
        sketch.feed(stream)
    return sketch.report(n_cap, m_cap)
