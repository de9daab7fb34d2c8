import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from jpegid.dc_feature import FeatureParams, FeatureVector
from jpegid.errors import ParamsMismatch, ShapeMismatch
from jpegid.feature_store import FeatureRecord
from jpegid.matcher import EvalReport, MatchParams, evaluate, identify, match

STRICT = MatchParams(sign_policy="strict")
vectors = st.lists(st.integers(-8, 8), min_size=1, max_size=60)
thresholds = st.floats(0, 10, allow_nan=False)


def fv(values, w=None, params=FeatureParams()):
    values = np.asarray(values)
    return FeatureVector(params, w or 8 * values.size, 8, values)


def rec(image_id, values, **kw):
    return FeatureRecord(image_id, fv(values, **kw))


class TestParams:
    def test_defaults(self):
        p = MatchParams()
        assert (p.d_enrolled, p.d_query, p.sign_policy, p.skip_large) == (4, 4, "zero_wildcard", True)

    @pytest.mark.parametrize("kw", [{"d_enrolled": -1}, {"d_query": -0.5}, {"sign_policy": "loose"}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            MatchParams(**kw)


class TestMatchExamples:
    def test_identical_is_same(self):
        d = match([1, -2, 0, 9], fv([1, -2, 0, 9]))
        assert d.same and d.conflict_index is None
        assert (d.compared, d.skipped) == (3, 1)

    def test_first_conflict_index(self):
        e = [1, 2, 0, 0, 1, 2, 1, 3, -3]
        q = [1, 2, 0, 0, 1, 2, 1, -3, 3]
        for params in (MatchParams(), STRICT):
            d = match(e, fv(q), params)
            assert (d.verdict, d.conflict_index) == ("different", 7)

    def test_large_enrolled_skipped(self):
        d = match([5], fv([-2]))
        assert d.same and (d.compared, d.skipped) == (0, 1)

    def test_large_query_skipped(self):
        assert match([-2], fv([5])).same
        assert not match([-2], fv([4])).same

    def test_threshold_inclusive(self):
        assert not match([4.0], fv([-1])).same
        assert match([4.0001], fv([-1])).same

    def test_zero_policy_table(self):
        assert match([0], fv([2]), STRICT).verdict == "different"
        assert match([2], fv([0]), STRICT).verdict == "different"
        d = match([0], fv([2]))
        assert d.same and d.compared == 1

    def test_real_valued_estimates(self):
        assert match([0.25, -0.5], fv([1, -1])).same
        assert match([0.25, -0.5], fv([1, 1])).conflict_index == 1

    def test_no_skip_ablation(self):
        p = MatchParams(skip_large=False)
        assert match([5], fv([-2]), p).verdict == "different"

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            match([1, 2], fv([1, 2, 3]))


class TestMatchProperties:
    @given(vectors, thresholds, thresholds, st.sampled_from(["strict", "zero_wildcard"]))
    def test_reflexive(self, v, de, dq, policy):
        d = match(v, fv(v), MatchParams(de, dq, policy))
        assert d.same
        assert d.compared + d.skipped == len(v)

    @given(vectors, vectors, st.sampled_from(["strict", "zero_wildcard"]))
    def test_counts_partition(self, a, b, policy):
        n = min(len(a), len(b))
        d = match(a[:n], fv(b[:n]), MatchParams(sign_policy=policy))
        assert d.compared + d.skipped == n
        assert (d.verdict == "different") == (d.conflict_index is not None)

    @given(vectors, vectors, st.sampled_from(["strict", "zero_wildcard"]))
    def test_prefix(self, a, b, policy):
        n = min(len(a), len(b))
        a, b = a[:n], b[:n]
        p = MatchParams(sign_policy=policy)
        d = match(a, fv(b), p)
        if d.conflict_index is not None:
            k = d.conflict_index + 1
            t = match(a[:k], fv(b[:k]), p)
            assert (t.verdict, t.conflict_index) == (d.verdict, d.conflict_index)
            # and the tail can be anything
            assert match(a[:k] + [0] * (n - k), fv(b[:k] + [5] * (n - k)), p).conflict_index == d.conflict_index

    @given(vectors, vectors, thresholds, thresholds, thresholds, thresholds)
    def test_skip_monotone(self, a, b, de1, dq1, de2, dq2):
        n = min(len(a), len(b))
        a, b = a[:n], b[:n]
        lo = MatchParams(min(de1, de2), min(dq1, dq2))
        hi = MatchParams(max(de1, de2), max(dq1, dq2))
        dlo, dhi = match(a, fv(b), lo), match(a, fv(b), hi)
        assert dlo.compared <= dhi.compared
        if dhi.same:
            assert dlo.same

    @given(vectors, vectors, thresholds, thresholds)
    def test_policy_nesting(self, a, b, de, dq):
        n = min(len(a), len(b))
        a, b = a[:n], b[:n]
        if match(a, fv(b), MatchParams(de, dq, "strict")).same:
            assert match(a, fv(b), MatchParams(de, dq, "zero_wildcard")).same


class TestReport:
    def test_precision_recall(self):
        r = EvalReport(tp=3, fp=1, fn=2, tn=10)
        assert r.precision == 0.75 and r.recall == 0.6

    def test_vacuous(self):
        r = EvalReport()
        assert (r.precision, r.recall) == (1.0, 1.0)

    def test_add(self):
        assert EvalReport(1, 2, 3, 4) + EvalReport(1, 1, 1, 1) == EvalReport(2, 3, 4, 5)

    def test_as_dict(self):
        assert EvalReport(1, 0, 0, 0).as_dict()["precision"] == 1.0


class TestEvaluate:
    def test_single_record_self_query(self):
        db = [rec("a", [3, -1, 0, 2])]
        r = evaluate(db, [(fv([3, -1, 0, 2]), "a")])
        assert r == EvalReport(tp=1) and r.precision == r.recall == 1

    def test_absent_original_is_all_tn(self):
        db = [rec("a", [1, 1, 1]), rec("b", [-1, 1, 1])]
        r = evaluate(db, [(fv([1, -1, -1]), "zzz")])
        assert r == EvalReport(tn=2)

    def test_tally_by_hand(self):
        db = [rec("a", [1, 1, 1]), rec("b", [1, 1, -1]), rec("c", [0, 0, 0])]
        queries = [(fv([1, 1, 1]), "a"), (fv([-1, 1, -1]), "b")]
        # q1: a same (tp), b different (tn), c wildcard same (fp)
        # q2: a diff (tn), b diff (fn), c same (fp)
        assert evaluate(db, queries) == EvalReport(tp=1, fp=2, fn=1, tn=2)

    def test_empty_queries(self):
        r = evaluate([rec("a", [1])], [])
        assert r == EvalReport() and r.precision == r.recall == 1

    def test_resized_query_uses_estimate(self):
        enrolled = FeatureVector(FeatureParams(), 32, 16, np.array([2, 2, -3, -3, 2, 2, -3, -3]))
        db = [FeatureRecord("big", enrolled)]
        small = FeatureVector(FeatureParams(), 16, 8, np.array([2, -3]))
        assert evaluate(db, [(small, "big")]) == EvalReport(tp=1)
        wrong = FeatureVector(FeatureParams(), 16, 8, np.array([-2, 3]))
        assert evaluate(db, [(wrong, "big")]) == EvalReport(fn=1)

    def test_larger_query_counts_as_different(self):
        db = [rec("small", [1])]
        big = fv([1, 1])
        assert evaluate(db, [(big, "small")]) == EvalReport(fn=1)

    def test_params_mismatch(self):
        db = [rec("a", [1], params=FeatureParams(10, 50))]
        q = fv([1])
        with pytest.raises(ParamsMismatch):
            identify(q, db)
        assert identify(q, db, force=True) == ["a"]
