"""Distinct-element estimation over a stream of sets.

Each arriving set only needs three queries: membership, cardinality and
picking its i-th element.  Ranges and axis-aligned integer cuboids provide
them in O(1) / O(d).

:func:`process_set` walks a set by geometric jumps under the current
cutoff, so each element is visited with probability ``p`` without
enumerating the set.  Visited elements are admitted into a
:class:`~cutoffsketch.sketch.BernoulliSketch`, which handles overflow,
halving and refusal exactly as in the per-element algorithm.

Two geometric modes are available.  ``"fast"`` draws each jump by
inversion (one uniform per jump).  ``"debug"`` scans Bernoulli(p) coins
and never looks past the end of the set, so on singleton sets it consumes
the source exactly like :meth:`BernoulliSketch.step`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator

from .rng import UniformSource
from .sketch import BernoulliSketch, EstimateReport, SketchConfig, StepRecord


class DelphicSet:
    """Membership, cardinality and 1-indexed picking."""

    def __len__(self) -> int:
        raise NotImplementedError

    def __contains__(self, x) -> bool:
        raise NotImplementedError

    def pick(self, i: int):
        raise NotImplementedError

    def __iter__(self) -> Iterator:
        for i in range(1, len(self) + 1):
            yield self.pick(i)

    def _check_index(self, i: int) -> None:
        if not 1 <= i <= len(self):
            raise IndexError(f"pick index {i} outside 1..{len(self)}")


@dataclass(frozen=True)
class RangeSet(DelphicSet):
    """Integers lo..hi inclusive, in ascending order."""

    lo: int
    hi: int

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty range: lo={self.lo} > hi={self.hi}")

    def __len__(self) -> int:
        return self.hi - self.lo + 1

    def __contains__(self, x) -> bool:
        return isinstance(x, int) and self.lo <= x <= self.hi

    def pick(self, i: int) -> int:
        self._check_index(i)
        return self.lo + i - 1


@dataclass(frozen=True)
class CuboidSet(DelphicSet):
    """Integer points of [a_1..b_1] x ... x [a_d..b_d], last coordinate fastest."""

    bounds: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if not self.bounds:
            raise ValueError("a cuboid needs at least one dimension")
        for j, (a, b) in enumerate(self.bounds):
            if a < 1:
                raise ValueError(f"dimension {j + 1}: lower bound {a} below 1")
            if a > b:
                raise ValueError(f"dimension {j + 1}: a={a} > b={b}")

    @classmethod
    def of(cls, *bounds: tuple[int, int]) -> "CuboidSet":
        return cls(tuple((int(a), int(b)) for a, b in bounds))

    def __len__(self) -> int:
        return math.prod(b - a + 1 for a, b in self.bounds)

    def __contains__(self, x) -> bool:
        if not isinstance(x, tuple) or len(x) != len(self.bounds):
            return False
        return all(a <= c <= b for c, (a, b) in zip(x, self.bounds))

    def pick(self, i: int) -> tuple[int, ...]:
        self._check_index(i)
        r = i - 1
        coords = []
        for a, b in reversed(self.bounds):
            r, digit = divmod(r, b - a + 1)
            coords.append(a + digit)
        return tuple(reversed(coords))


def sample_geometric(
    src: UniformSource, p: float, *, mode: str = "fast", limit: int | None = None
) -> int:
    """Geo(p) on {1, 2, ...}: trials up to and including the first success.

    In ``"debug"`` mode the coins are scanned one by one; with ``limit`` set,
    at most ``limit`` coins are drawn and ``limit + 1`` is returned when all
    of them fail (the caller only needs to know the jump overshoots).
    """
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must lie in (0, 1], got {p!r}")
    if mode == "debug":
        k = 0
        while limit is None or k < limit:
            k += 1
            if src.random() < p:
                return k
        return limit + 1
    if mode != "fast":
        raise ValueError(f"unknown geometric mode {mode!r}")
    if p == 1.0:
        src.random()
        return 1
    u = src.random()
    return 1 + int(math.floor(math.log1p(-u) / math.log1p(-p)))


def process_set(sketch: BernoulliSketch, S: DelphicSet, *, mode: str = "fast") -> BernoulliSketch:
    """Fold one set into ``sketch``.

    Members of ``S`` already in the list are removed first, then indices
    C = G_1, G_1 + G_2, ... (i.i.d. geometric jumps at the current cutoff)
    are visited while C <= |S|.  Every visited index is consumed once, even
    if its element ends up refused.
    """
    entries = sketch.list.entries
    for x in [x for x in entries if x in S]:
        del entries[x]
    sketch.list.marked = None
    size = len(S)
    trace = sketch.transcript is not None
    src = sketch.src
    refused_any = False
    c = _jump(sketch, src, size, mode, trace)
    while c <= size:
        refused_any |= sketch.admit(S.pick(c))
        c += _jump(sketch, src, size - c, mode, trace)
    sketch.t += 1
    if trace:
        _record_set(sketch, S, refused_any)
    return sketch


def _jump(sketch: BernoulliSketch, src: UniformSource, remaining: int, mode: str, trace: bool) -> int:
    p = sketch.cutoff
    if mode == "debug" and trace:
        # same scan as sample_geometric, but coins go into the transcript
        for k in range(1, remaining + 1):
            if sketch._coin(p):
                return k
        return remaining + 1
    return sample_geometric(src, p, mode=mode, limit=remaining)


def _record_set(sketch: BernoulliSketch, S: DelphicSet, refused: bool) -> None:
    label = S.pick(1) if len(S) == 1 else S
    sketch.transcript.records.append(
        StepRecord(
            sketch.t, label, None, sketch.cutoff, frozenset(sketch.list.entries),
            draws=tuple(sketch._draws), refused=refused,
        )
    )
    sketch._draws.clear()


def run_set_stream(
    config: SketchConfig,
    sets: Iterable[DelphicSet],
    n_cap: int | None = None,
    m_cap: int | None = None,
    *,
    mode: str = "fast",
) -> EstimateReport:
    """Estimate |S_1 u ... u S_m| as ``|L| / p`` after folding every set."""
    if config.variant != "CVM2Refuse":
        raise ValueError("set streams run on the CVM2Refuse (Bernoulli) sketch")
    sketch = BernoulliSketch.from_config(config)
    for S in sets:
        process_set(sketch, S, mode=mode)
    return sketch.estimate(n_cap, m_cap)
