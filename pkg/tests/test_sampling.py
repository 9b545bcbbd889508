import datetime as dt

import numpy as np
import pytest
import scipy.stats

from speechmood.corpus import Assessment, Call, CallKind, Segment
from speechmood.sampling import (
    CapacityError,
    SamplingPlan,
    sample_assessment_segments,
    sample_personal_segments,
    weight,
    weighted_sample_without_replacement,
)


class TestWeight:
    def test_assessment_day(self):
        assert weight(0) == 4

    def test_linear_rampdown(self):
        assert weight(1) == 3
        assert weight(2) == 2

    def test_outside_range(self):
        assert weight(3) == 1
        assert weight(10) == 1

    def test_no_future_assessment(self):
        assert weight(None) == 1

    def test_nonincreasing_and_at_least_one(self):
        vals = [weight(d) for d in range(20)]
        assert all(v >= 1 for v in vals)
        assert all(b <= a for a, b in zip(vals, vals[1:]))

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            weight(-1)


def segs(n):
    return [Segment(segment_id=f"g{i}", call_id="c", start_s=i * 5.0, end_s=i * 5.0 + 4.0)
            for i in range(n)]


class TestAssessmentSampling:
    def test_under_cap_takes_all(self):
        out = sample_assessment_segments(segs(7), 10, np.random.default_rng(0))
        assert len(out) == 7

    def test_over_cap_takes_cap_distinct(self):
        out = sample_assessment_segments(segs(25), 10, np.random.default_rng(0))
        assert len(out) == 10
        assert len({s.segment_id for s in out}) == 10

    def test_deterministic_given_seed(self):
        a = sample_assessment_segments(segs(25), 10, np.random.default_rng(42))
        b = sample_assessment_segments(segs(25), 10, np.random.default_rng(42))
        assert [s.segment_id for s in a] == [s.segment_id for s in b]

    def test_output_subset_of_input(self):
        pool = segs(30)
        out = sample_assessment_segments(pool, 10, np.random.default_rng(1))
        ids = {s.segment_id for s in pool}
        assert all(s.segment_id in ids for s in out)


class TestWeightedSampling:
    def test_n_equals_available(self):
        items = list(range(8))
        out = weighted_sample_without_replacement(items, [1.0] * 8, 8, np.random.default_rng(0))
        assert sorted(out) == items

    def test_capacity_error(self):
        with pytest.raises(CapacityError):
            weighted_sample_without_replacement([1, 2], [1.0, 1.0], 3, np.random.default_rng(0))

    def test_no_duplicates(self):
        rng = np.random.default_rng(1)
        items = list(range(40))
        w = rng.uniform(0.5, 4.0, 40)
        out = weighted_sample_without_replacement(items, w, 15, rng)
        assert len(set(out)) == 15

    def test_uniform_weights_chi_square(self):
        # equal weights must behave uniformly: chi-square over 10k replays
        rng = np.random.default_rng(2)
        items = list(range(5))
        counts = np.zeros(5)
        for _ in range(10_000):
            for v in weighted_sample_without_replacement(items, [2.0] * 5, 2, rng):
                counts[v] += 1
        _, p = scipy.stats.chisquare(counts)
        assert p > 0.01

    def test_inclusion_ratio_single_draw(self):
        # one weight-4 item among weight-1 items, n=1: inclusion rate ratio ~ 4
        rng = np.random.default_rng(3)
        n_items = 10
        weights = np.ones(n_items)
        weights[0] = 4.0
        replays = 100_000
        keys = rng.exponential(size=(replays, n_items)) / weights
        chosen = np.argmin(keys, axis=1)
        rate_heavy = np.mean(chosen == 0)
        rate_light = np.mean(chosen != 0) / (n_items - 1)
        assert 3.6 <= rate_heavy / rate_light <= 4.4

    def test_deterministic_bitwise(self):
        items = list(range(50))
        w = [float(1 + i % 4) for i in range(50)]
        a = weighted_sample_without_replacement(items, w, 12, np.random.default_rng(9))
        b = weighted_sample_without_replacement(items, w, 12, np.random.default_rng(9))
        assert a == b


class TestPersonalSampling:
    def _fixture(self):
        calls = []
        assessments = []
        segments = []
        for i in range(4):
            sid = "S01"
            day = dt.date(2024, 3, 10) + dt.timedelta(days=7)
            assessments.append(Assessment(assessment_id=f"a{i}", subject_id=sid,
                                          date=day, hamd=0, ymrs=0))
            call = Call(call_id=f"c{i}", subject_id=sid, kind=CallKind.PERSONAL,
                        start_time=dt.datetime(2024, 3, 10 + i, 12), duration_s=60.0,
                        audio_path=f"c{i}.wav")
            calls.append(call)
            for g in range(3):
                segments.append(Segment(segment_id=f"c{i}-g{g}", call_id=f"c{i}",
                                        start_s=g * 6.0, end_s=g * 6.0 + 5.0))
        return segments, calls, assessments

    def test_weighted_by_call_proximity(self):
        segments, calls, assessments = self._fixture()
        out = sample_personal_segments(segments, calls, assessments, 5,
                                       np.random.default_rng(0))
        assert len(out) == 5
        assert len({s.segment_id for s in out}) == 5

    def test_unknown_call_rejected(self):
        segments, calls, assessments = self._fixture()
        orphan = Segment(segment_id="x", call_id="nope", start_s=0, end_s=4)
        with pytest.raises(ValueError, match="unknown call"):
            sample_personal_segments(segments + [orphan], calls, assessments, 2,
                                     np.random.default_rng(0))


class TestPlan:
    def test_plan_echo_fields(self):
        plan = SamplingPlan(assessment_cap=10, personal_budget=100, seed=7)
        assert SamplingPlan.from_dict(plan.to_dict()) == plan

    def test_invalid_cap(self):
        with pytest.raises(ValueError):
            SamplingPlan(assessment_cap=0)
