import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cutoffsketch.scores import DiscreteUniform, GeoFinite, GeoInfinite, Uniform
from cutoffsketch.sketch import (
    VARIANTS,
    BernoulliSketch,
    CutoffList,
    CutoffSketch,
    SketchAborted,
    SketchConfig,
    Status,
    UpdateRule,
    filter_below,
    make_sketch,
    max_score,
    remove,
    run,
)

SCORE_VARIANTS = ["DonD", "DonDPrime", "CVM1", "CVM2"]


class ScriptedSource:
    """Stand-in uniform source replaying a fixed list of draws."""

    def __init__(self, draws):
        self.draws = list(draws)

    def random(self):
        return self.draws.pop(0)


def _sketch(rule, s, dist=Uniform(), **kw):
    return CutoffSketch(s, rule, dist, trace=True, **kw)


class TestListOps:
    def test_remove(self):
        lst = CutoffList({"a": 0.1, "b": 0.2})
        assert remove(lst, "a").entries == {"b": 0.2}
        assert remove(CutoffList({"a": 0.1}), "c").entries == {"a": 0.1}
        assert remove(CutoffList(), "a").entries == {}
        assert lst.entries == {"a": 0.1, "b": 0.2}

    def test_filter_strict(self):
        assert filter_below(CutoffList({"a": 0.1, "b": 0.6}), 0.5).entries == {"a": 0.1}
        assert filter_below(CutoffList({"a": 0.5}), 0.5).entries == {}
        lst = CutoffList({"a": 0.1, "b": 0.99})
        assert filter_below(lst, 1.0).entries == lst.entries

    def test_max_score(self):
        assert max_score(CutoffList({"a": 0.1, "b": 0.6})) == 0.6
        assert max_score(CutoffList({"a": 0.3})) == 0.3
        with pytest.raises(ValueError):
            max_score(CutoffList())


class TestStep:
    def test_insert_when_space(self):
        sk = _sketch(UpdateRule.MAX_SCORE, 3)
        sk.step("a", 0.4)
        assert sk.list.entries == {"a": 0.4}
        assert sk.cutoff == 1.0

    def test_high_score_removes_present_element(self):
        sk = _sketch(UpdateRule.MAX_SCORE, 3, dist=GeoInfinite())
        sk.step("a", 0.25).step("b", 0.125)
        sk.cutoff = 0.5  # pretend earlier overflows happened
        sk.step("a", 0.5)
        assert sk.list.elements() == {"b"}

    def test_max_score_overflow(self):
        s = 9
        sk = _sketch(UpdateRule.MAX_SCORE, s)
        scores = [0.1 * k for k in range(1, 10)] + [0.05]
        for i, q in enumerate(scores):
            sk.step(i, q)
        assert sk.cutoff == 0.9000000000000001 or sk.cutoff == max(scores)
        assert len(sk) == s
        assert all(q < sk.cutoff for q in sk.list.entries.values())
        assert 8 not in sk.list  # the element that held the maximum

    def test_cvm1_aborts_without_half_score(self):
        sk = _sketch(UpdateRule.CVM1_HALVE, 2, dist=GeoInfinite())
        sk.step("a", 0.25).step("b", 0.125).step("c", 0.125)
        assert sk.status is Status.ABORTED
        assert sk.t == 2
        with pytest.raises(SketchAborted):
            sk.step("d", 0.5)
        with pytest.raises(SketchAborted):
            sk.estimate()
        assert math.isnan(sk.report().estimate)

    def test_cvm1_halves_when_max_is_half(self):
        sk = _sketch(UpdateRule.CVM1_HALVE, 2, dist=GeoInfinite())
        sk.step("a", 0.5).step("b", 0.125).step("c", 0.25)
        assert sk.status is Status.RUNNING
        assert sk.cutoff == 0.5
        assert sk.list.elements() == {"b", "c"}

    def test_cvm2_loop_halves_until_shed(self):
        sk = _sketch(UpdateRule.CVM2_HALVE, 2, dist=GeoInfinite())
        sk.step("a", 0.125).step("b", 0.0625).step("c", 0.125)
        assert sk.cutoff == 0.125
        assert sk.list.elements() == {"b"}

    def test_refuse_when_single_halving_sheds_nothing(self):
        sk = _sketch(UpdateRule.CVM2_HALVE, 2, dist=GeoInfinite(), refuse=True)
        sk.step_refuse("a", 0.125).step_refuse("b", 0.0625).step_refuse("c", 0.125)
        assert sk.cutoff == 0.5
        assert sk.list.elements() == {"a", "b"}
        assert sk.transcript[-1].refused

    def test_refuse_matches_plain_when_filter_sheds(self):
        scores = [0.25, 0.125, 0.5, 0.0625, 0.25]
        plain = _sketch(UpdateRule.CVM2_HALVE, 2, dist=GeoInfinite())
        ref = _sketch(UpdateRule.CVM2_HALVE, 2, dist=GeoInfinite(), refuse=True)
        for i, q in enumerate(scores[:3]):
            plain.step(i, q)
            ref.step(i, q)
        assert plain.list.entries == ref.list.entries
        assert plain.cutoff == ref.cutoff == 0.5

    def test_refuse_not_allowed_with_cvm1(self):
        with pytest.raises(ValueError):
            CutoffSketch(3, UpdateRule.CVM1_HALVE, GeoInfinite(), refuse=True)
        with pytest.raises(ValueError):
            _sketch(UpdateRule.MAX_SCORE, 3).step_refuse("a", 0.1)

    @pytest.mark.parametrize("rule", [UpdateRule.MAX_SCORE, UpdateRule.CVM2_HALVE])
    def test_refuse_identity_below_capacity(self, rule):
        stream = [1, 2, 3, 2, 1, 4, 4, 5]
        plain = make_sketch(SketchConfig("CVM2" if rule is UpdateRule.CVM2_HALVE else "DonD",
                                         8, seed=3, trace=True)).feed(stream)
        ref = make_sketch(SketchConfig("CVM2" if rule is UpdateRule.CVM2_HALVE else "DonD",
                                       8, seed=3, trace=True, refuse=True)).feed(stream)
        assert plain.transcript.records == ref.transcript.records

    def test_max_score_refuse_never_refuses(self):
        stream = list(range(300)) * 2
        plain = run(SketchConfig("DonD", 7, seed=5, trace=True), stream)
        ref = run(SketchConfig("DonD", 7, seed=5, trace=True, refuse=True), stream)
        assert plain.transcript.records == ref.transcript.records


class TestBernoulliForm:
    def _sk(self, s, draws, refuse=True):
        sk = BernoulliSketch(s, trace=True, refuse=refuse)
        sk.src = ScriptedSource(draws)
        return sk

    def test_rejected_coin_leaves_element_out(self):
        sk = self._sk(3, [0.1, 0.9])
        sk.step("a")
        sk.cutoff = 0.5
        sk.step("a")
        assert "a" not in sk.list

    def test_overflow_all_kept_refuses_current(self):
        sk = self._sk(2, [0.0, 0.0, 0.0, 0.1, 0.2, 0.3])
        sk.step("a").step("b").step("c")
        assert sk.list.elements() == {"a", "b"}
        assert sk.cutoff == 0.5
        assert sk.transcript[-1].refused

    def test_survivors_carry_new_cutoff(self):
        sk = self._sk(2, [0.0, 0.0, 0.0, 0.1, 0.9, 0.3])
        sk.step("a").step("b").step("c")
        assert sk.list.entries == {"a": 0.5, "c": 0.5}

    def test_insert_stores_previous_cutoff(self):
        sk = self._sk(4, [0.1])
        sk.cutoff = 0.25
        sk.step("x")
        assert sk.list.entries == {"x": 0.25}

    def test_no_refuse_keeps_halving(self):
        # first pass keeps all three, second pass drops b
        sk = self._sk(2, [0.0, 0.0, 0.0, 0.1, 0.2, 0.3, 0.1, 0.9, 0.3], refuse=False)
        sk.step("a").step("b").step("c")
        assert sk.cutoff == 0.25
        assert sk.list.entries == {"a": 0.25, "c": 0.25}

    def test_estimate_divides_by_cutoff(self):
        sk = BernoulliSketch(10)
        sk.list.entries = {1: 0.25, 2: 0.25, 3: 0.25}
        sk.cutoff = 0.25
        assert sk.estimate().estimate == 12.0


class TestEstimate:
    def test_empty(self):
        assert _sketch(UpdateRule.MAX_SCORE, 3).estimate().estimate == 0.0

    def test_linear_division(self):
        sk = _sketch(UpdateRule.MAX_SCORE, 5, dist=GeoInfinite())
        for a in "abc":
            sk.step(a, 0.125)
        sk.cutoff = 0.25
        assert sk.estimate().estimate == 12.0

    def test_zero_mass_falls_back_to_caps(self):
        depth = 3
        sk = _sketch(UpdateRule.MAX_SCORE, 5, dist=GeoFinite(depth))
        sk.step("a", 2.0 ** -(depth + 1))
        sk.cutoff = 2.0 ** -(depth + 1)
        assert sk.estimate(n_cap=50, m_cap=70).estimate == 50
        assert sk.estimate(n_cap=90, m_cap=70).estimate == 70
        assert sk.estimate().estimate == sk.t

    def test_report_fields(self):
        rep = run(SketchConfig("DonD", 4, seed=1), [1, 2, 3, 1])
        assert (rep.estimate, rep.final_cutoff, rep.final_list_size, rep.steps_processed) == (
            3.0, 1.0, 3, 4)
        assert rep.status is Status.RUNNING


class TestRun:
    @pytest.mark.parametrize("variant", sorted(VARIANTS))
    def test_small_stream_exact(self, variant):
        rep = run(SketchConfig(variant, 10, seed=4), [1, 2, 3])
        assert rep.estimate == 3
        assert rep.final_cutoff == 1.0

    @pytest.mark.parametrize("variant", sorted(VARIANTS))
    def test_empty_stream(self, variant):
        assert run(SketchConfig(variant, 3), []).estimate == 0.0

    def test_cvm1_abort_rate_below_bound(self):
        m, s, trials = 1000, 16, 400
        stream = list(range(m))
        aborts = sum(run(SketchConfig("CVM1", s, seed=2, instance_id=i), stream).aborted
                     for i in range(trials))
        bound = m * 2.0 ** -s
        assert aborts / trials <= bound + 3.5 * math.sqrt(bound * (1 - bound) / trials)

    def test_injected_scores_reproduce_drawn_run(self):
        cfg = SketchConfig("DonD", 6, seed=9, trace=True)
        stream = [i % 40 for i in range(200)]
        drawn = run(cfg, stream)
        injected = run(cfg, stream, scores=drawn.transcript.scores)
        assert drawn.transcript.records == injected.transcript.records

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SketchConfig("HLL", 5)
        with pytest.raises(ValueError):
            SketchConfig("DonD", 0)

    def test_dist_override(self):
        cfg = SketchConfig("DonD", 4, dist=DiscreteUniform(2 ** 10), trace=True)
        rep = run(cfg, range(100))
        assert all(DiscreteUniform(2 ** 10).in_support(r.score) for r in rep.transcript)


streams = st.lists(st.integers(0, 30), max_size=120)


class TestProperties:
    @settings(max_examples=60, deadline=None)
    @given(streams, st.integers(1, 8), st.sampled_from(SCORE_VARIANTS + ["CVM2Refuse"]),
           st.integers(0, 2 ** 32))
    def test_bucket_limit_and_monotone_cutoff(self, stream, s, variant, seed):
        rep = run(SketchConfig(variant, s, seed=seed, trace=True), stream)
        prev = 1.0
        for r in rep.transcript:
            assert len(r.members) <= s
            assert r.cutoff <= prev
            prev = r.cutoff

    @settings(max_examples=60, deadline=None)
    @given(streams, st.integers(1, 8), st.sampled_from(SCORE_VARIANTS), st.integers(0, 2 ** 32))
    def test_fast_path_matches_traced_path(self, stream, s, variant, seed):
        fast = make_sketch(SketchConfig(variant, s, seed=seed)).feed(stream)
        slow = make_sketch(SketchConfig(variant, s, seed=seed, trace=True)).feed(stream)
        assert fast.list.entries == slow.list.entries
        assert (fast.cutoff, fast.t, fast.status) == (slow.cutoff, slow.t, slow.status)

    @settings(max_examples=60, deadline=None)
    @given(streams, st.integers(1, 8), st.integers(0, 2 ** 32))
    def test_bernoulli_fast_path_matches_traced_path(self, stream, s, seed):
        fast = BernoulliSketch(s, seed=seed).feed(stream)
        slow = BernoulliSketch(s, seed=seed, trace=True).feed(stream)
        assert fast.list.entries == slow.list.entries
        assert fast.cutoff == slow.cutoff

    @settings(max_examples=40, deadline=None)
    @given(streams, st.integers(1, 8), st.integers(0, 2 ** 32))
    def test_max_score_overflow_postcondition(self, stream, s, seed):
        sk = CutoffSketch(s, UpdateRule.MAX_SCORE, Uniform(), seed=seed, trace=True)
        prev_members, prev_p = frozenset(), 1.0
        for a in stream:
            before = len(sk)
            sk.step(a)
            rec = sk.transcript[-1]
            if rec.cutoff < prev_p:
                # step-4 fired: list was full and a_t was new and admitted
                assert before == s and a not in prev_members and rec.score < prev_p
                assert a not in rec.members or rec.score < rec.cutoff
            prev_members, prev_p = rec.members, rec.cutoff

    @settings(max_examples=40, deadline=None)
    @given(streams, st.integers(1, 8), st.integers(0, 2 ** 32))
    def test_cvm2_equals_dond_prime_on_dyadic_scores(self, stream, s, seed):
        a = run(SketchConfig("CVM2", s, seed=seed, trace=True), stream)
        b = run(SketchConfig("DonDPrime", s, seed=seed, trace=True), stream)
        assert a.transcript.records == b.transcript.records

    @settings(max_examples=30, deadline=None)
    @given(streams, st.integers(1, 5), st.sampled_from(sorted(VARIANTS)), st.integers(0, 99))
    def test_determinism(self, stream, s, variant, seed):
        a = run(SketchConfig(variant, s, seed=seed, trace=True), stream)
        b = run(SketchConfig(variant, s, seed=seed, trace=True), stream)
        assert a == b or (math.isnan(a.estimate) and a.transcript.records == b.transcript.records)


def test_score_form_and_bernoulli_form_agree_in_distribution():
    """Final (set, cutoff) of score-form CVM2 and coin-flip CVM2 (no refusal)."""
    stream = [1, 2, 3, 1, 4, 2, 5, 3, 4, 5]
    s, trials = 2, 20000
    score_form, coin_form = Counter(), Counter()
    for i in range(trials):
        a = CutoffSketch(s, UpdateRule.CVM2_HALVE, GeoInfinite(), seed=1, instance_id=i).feed(stream)
        b = BernoulliSketch(s, seed=2, instance_id=i, refuse=False).feed(stream)
        score_form[(a.list.elements(), a.cutoff)] += 1
        coin_form[(b.list.elements(), b.cutoff)] += 1
    for key in set(score_form) | set(coin_form):
        f1, f2 = score_form[key] / trials, coin_form[key] / trials
        pooled = (f1 + f2) / 2
        sd = math.sqrt(2 * pooled * (1 - pooled) / trials)
        assert abs(f1 - f2) <= 3.5 * sd + 1e-12, key
