import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import ttest_ind

from endotex.errors import (
    EmptyBatch,
    InvalidParameters,
    IoFailure,
    LengthMismatch,
    SingleClassPresent,
    TooFewRuns,
)
from endotex.evaluation import (
    BenchResult,
    auc_one_vs_rest,
    confusion_matrix,
    evaluate_predictions,
    fps_benchmark,
    mcc_from_confusion,
    metrics_from_counts,
    save_report,
    weighted_f1,
    welch_t_test,
)

REFERENCE_COUNTS = dict(tp=435, tn=15576, fp=286, fn=286)


def labels_from_counts(tp, tn, fp, fn):
    """Binary label/prediction pair realising exactly these counts."""
    y_true = np.concatenate(
        [np.ones(tp + fn, dtype=int), np.zeros(fp + tn, dtype=int)]
    )
    y_pred = np.concatenate(
        [np.ones(tp, dtype=int), np.zeros(fn, dtype=int),
         np.ones(fp, dtype=int), np.zeros(tn, dtype=int)]
    )
    return y_true, y_pred


def brute_confusion(y_true, y_pred, k):
    cm = np.zeros((k, k), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        cm[t, p] += 1
    return cm


def brute_auc(y_true, score, cls):
    """Pair-counting AUC: wins plus half-ties over all pos/neg pairs."""
    pos = score[y_true == cls]
    neg = score[y_true != cls]
    wins = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                wins += 1.0
            elif p == q:
                wins += 0.5
    return wins / (pos.size * neg.size)


class TestMetricsFromCounts:
    def test_reference_counts(self):
        m = metrics_from_counts(**REFERENCE_COUNTS)
        # tp == fn+fp here makes precision, recall and F1 coincide
        assert abs(m["precision"] - 0.60) < 0.005
        assert abs(m["recall"] - 0.60) < 0.005
        assert abs(m["f1"] - 0.60) < 0.005
        assert abs(m["mcc"] - 0.57) < 0.02

    def test_exact_formulas(self):
        m = metrics_from_counts(tp=6, tn=10, fp=2, fn=4)
        assert m["precision"] == 6 / 8
        assert m["recall"] == 6 / 10
        assert m["specificity"] == 10 / 12
        assert m["accuracy"] == 16 / 22
        assert m["f1"] == pytest.approx(2 * (6 / 8) * (6 / 10) / (6 / 8 + 6 / 10))
        assert m["mcc"] == pytest.approx(
            (6 * 10 - 2 * 4) / np.sqrt(8 * 10 * 12 * 14)
        )

    def test_empty_denominators_score_zero(self):
        m = metrics_from_counts(tp=0, tn=5, fp=0, fn=0)
        assert m["precision"] == 0.0 and m["recall"] == 0.0
        assert m["f1"] == 0.0 and m["mcc"] == 0.0

    def test_report_agrees_with_counts(self):
        y_true, y_pred = labels_from_counts(**REFERENCE_COUNTS)
        m = metrics_from_counts(**REFERENCE_COUNTS)
        report = evaluate_predictions(y_true, y_pred)
        assert report.per_class["precision"][1] == pytest.approx(m["precision"])
        assert report.per_class["recall"][1] == pytest.approx(m["recall"])
        assert report.per_class["f1"][1] == pytest.approx(m["f1"])
        assert report.accuracy == pytest.approx(m["accuracy"])
        assert report.mcc == pytest.approx(m["mcc"])


class TestConfusionMatrix:
    def test_hand_example(self):
        cm = confusion_matrix([0, 0, 1, 2], [0, 1, 1, 2])
        assert np.array_equal(cm, [[1, 1, 0], [0, 1, 0], [0, 0, 1]])

    def test_explicit_class_count_pads(self):
        cm = confusion_matrix([0, 1], [1, 0], n_classes=4)
        assert cm.shape == (4, 4) and cm.sum() == 2

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 40), st.integers(2, 5))
    def test_matches_counting_loop(self, seed, n, k):
        rng = np.random.default_rng(seed)
        y_true = rng.integers(0, k, size=n)
        y_pred = rng.integers(0, k, size=n)
        cm = confusion_matrix(y_true, y_pred, k)
        assert np.array_equal(cm, brute_confusion(y_true, y_pred, k))
        assert np.array_equal(cm.sum(axis=1), np.bincount(y_true, minlength=k))

    def test_validation(self):
        with pytest.raises(LengthMismatch):
            confusion_matrix([0, 1], [0])
        with pytest.raises(EmptyBatch):
            confusion_matrix([], [])


class TestEvaluatePredictions:
    def test_perfect_predictions(self):
        y = np.array([0, 1, 2, 0, 1, 2])
        report = evaluate_predictions(y, y)
        assert report.accuracy == 1.0 and report.mcc == 1.0
        for vals in report.per_class.values():
            assert np.all(vals == 1.0)

    def test_always_wrong_binary_is_anticorrelated(self):
        y = np.array([0, 1] * 10)
        report = evaluate_predictions(y, 1 - y)
        assert report.accuracy == 0.0 and report.mcc == -1.0

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_per_class_matches_counting(self, seed):
        rng = np.random.default_rng(seed)
        k = int(rng.integers(2, 5))
        y_true = rng.integers(0, k, size=60)
        y_pred = rng.integers(0, k, size=60)
        report = evaluate_predictions(y_true, y_pred, k)
        assert report.accuracy == pytest.approx(np.mean(y_true == y_pred))
        for c in range(k):
            tp = int(np.sum((y_true == c) & (y_pred == c)))
            fp = int(np.sum((y_true != c) & (y_pred == c)))
            fn = int(np.sum((y_true == c) & (y_pred != c)))
            if tp + fp:
                assert report.per_class["precision"][c] == pytest.approx(tp / (tp + fp))
            if tp + fn:
                assert report.per_class["recall"][c] == pytest.approx(tp / (tp + fn))

    def test_weighted_is_support_weighted(self):
        y_true = np.array([0, 0, 0, 1])
        y_pred = np.array([0, 0, 1, 1])
        report = evaluate_predictions(y_true, y_pred)
        f1 = report.per_class["f1"]
        expect = (f1 * report.support).sum() / report.support.sum()
        assert report.weighted["f1"] == pytest.approx(expect)
        assert report.macro["f1"] == pytest.approx(f1.mean())
        assert weighted_f1(y_true, y_pred) == report.weighted["f1"]

    def test_weighted_f1_hand_value(self):
        # class 0: P=1, R=2/3, F1=0.8; class 1: P=1/2, R=1, F1=2/3
        got = weighted_f1([0, 0, 0, 1], [0, 0, 1, 1])
        assert got == pytest.approx((0.8 * 3 + (2 / 3) * 1) / 4)

    def test_absent_class_flags_degenerate(self):
        report = evaluate_predictions([0, 0, 1], [0, 1, 1], n_classes=3)
        assert "class_2" in report.degenerate
        assert report.per_class["recall"][2] == 0.0

    def test_class_names_fix_the_layout(self):
        report = evaluate_predictions([0, 1], [0, 1], class_names=["a", "b", "c"])
        assert report.confusion.shape == (3, 3)
        assert report.class_names == ["a", "b", "c"]

    def test_to_dict_is_json_ready(self):
        report = evaluate_predictions([0, 1, 1], [0, 1, 0])
        doc = json.loads(json.dumps(report.to_dict()))
        assert doc["confusion"] == report.confusion.tolist()
        assert doc["accuracy"] == report.accuracy

    def test_render_text_mentions_names_and_summary(self):
        report = evaluate_predictions([0, 1], [0, 1], class_names=["polyp", "normal"])
        text = report.render_text()
        assert "polyp" in text and "normal" in text
        assert "accuracy 1.0000" in text and "mcc" in text


class TestMcc:
    @settings(max_examples=80, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_binary_reduction(self, seed):
        rng = np.random.default_rng(seed)
        tn, fp, fn, tp = [int(v) for v in rng.integers(0, 30, size=4)]
        cm = np.array([[tn, fp], [fn, tp]])
        den = np.sqrt(float(tp + fp) * (tp + fn) * (tn + fp) * (tn + fn))
        expect = (tp * tn - fp * fn) / den if den > 0 else 0.0
        assert mcc_from_confusion(cm) == pytest.approx(expect, abs=1e-12)

    def test_transpose_symmetry(self):
        cm = np.array([[5, 2, 1], [0, 7, 3], [2, 2, 9]])
        assert mcc_from_confusion(cm) == pytest.approx(mcc_from_confusion(cm.T))

    def test_identity_is_one(self):
        assert mcc_from_confusion(np.diag([4, 5, 6])) == pytest.approx(1.0)

    def test_degenerate_returns_zero(self):
        # every prediction in one column: p @ p == s^2
        assert mcc_from_confusion(np.array([[3, 0], [5, 0]])) == 0.0


class TestAuc:
    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_matches_pair_counting(self, seed):
        rng = np.random.default_rng(seed)
        y = rng.integers(0, 3, size=30)
        if np.unique(y).size < 2:
            y[0], y[1] = 0, 1
        # one decimal forces ties so the half-credit branch is exercised
        scores = np.round(rng.random((30, 3)), 1)
        got = auc_one_vs_rest(y, scores)
        for c in range(3):
            if c in got["skipped"]:
                assert got["per_class"][c] is None
            else:
                assert got["per_class"][c] == pytest.approx(brute_auc(y, scores[:, c], c))

    def test_perfect_and_reversed_ranking(self):
        y = np.array([0, 0, 1, 1])
        scores = np.array([[0.9, 0.1], [0.8, 0.2], [0.1, 0.9], [0.2, 0.8]])
        got = auc_one_vs_rest(y, scores)
        assert got["per_class"] == [1.0, 1.0] and got["macro"] == 1.0
        flipped = auc_one_vs_rest(y, scores[:, ::-1])
        assert flipped["per_class"] == [0.0, 0.0]

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(0)
        y = rng.integers(0, 2, size=40)
        scores = rng.random((40, 2))
        base = auc_one_vs_rest(y, scores)
        warped = auc_one_vs_rest(y, np.exp(3.0 * scores + 1.0))
        assert base["per_class"] == warped["per_class"]

    def test_absent_class_skipped_not_fatal(self):
        y = np.array([0, 0, 1, 1])
        scores = np.random.default_rng(1).random((4, 3))
        got = auc_one_vs_rest(y, scores)
        assert got["skipped"] == [2]
        assert got["per_class"][2] is None
        valid = [v for v in got["per_class"] if v is not None]
        assert got["macro"] == pytest.approx(np.mean(valid))

    def test_skipped_class_lands_in_report_degenerate(self):
        y = np.array([0, 0, 1, 1])
        scores = np.random.default_rng(1).random((4, 3))
        report = evaluate_predictions(y, y, n_classes=3, scores=scores)
        assert "auc_class_2" in report.degenerate
        assert report.auc["skipped"] == [2]

    def test_validation(self):
        with pytest.raises(SingleClassPresent):
            auc_one_vs_rest(np.zeros(5, dtype=int), np.ones((5, 2)))
        with pytest.raises(LengthMismatch):
            auc_one_vs_rest(np.array([0, 1]), np.ones((3, 2)))


class TestWelch:
    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(2, 30), st.integers(2, 30))
    def test_matches_scipy(self, seed, na, nb):
        rng = np.random.default_rng(seed)
        a = rng.normal(0.0, 1.0, size=na)
        b = rng.normal(0.3, 2.0, size=nb)
        got = welch_t_test(a, b)
        ref = ttest_ind(a, b, equal_var=False)
        assert got["t"] == pytest.approx(ref.statistic, rel=1e-10)
        assert got["p"] == pytest.approx(ref.pvalue, rel=1e-9, abs=1e-12)

    def test_antisymmetric_in_the_groups(self):
        a = np.array([1.0, 2.0, 3.0])
        b = np.array([2.0, 4.0, 9.0])
        ab, ba = welch_t_test(a, b), welch_t_test(b, a)
        assert ab["t"] == pytest.approx(-ba["t"])
        assert ab["p"] == pytest.approx(ba["p"])

    def test_identical_constant_groups(self):
        got = welch_t_test([2.0, 2.0, 2.0], [2.0, 2.0])
        assert got["t"] == 0.0 and got["p"] == 1.0

    def test_distinct_constant_groups(self):
        got = welch_t_test([1.0, 1.0], [2.0, 2.0])
        assert got["t"] == -np.inf and got["p"] == 0.0

    def test_too_few_runs(self):
        with pytest.raises(TooFewRuns):
            welch_t_test([1.0], [2.0, 3.0])


class TestFpsBenchmark:
    def test_counts_calls_and_reports(self):
        calls = []
        result = fps_benchmark(calls.append, range(10), warmup=3)
        assert len(calls) == 13  # 3 warmup + 10 timed
        assert result.n_items == 10 and result.warmup == 3 and result.workers == 1
        assert result.fps > 0 and result.mean_latency_ms > 0
        assert result.p95_latency_ms >= 0

    def test_thread_pool_mode(self):
        calls = []
        result = fps_benchmark(calls.append, range(8), warmup=0, workers=2)
        assert len(calls) == 8 and result.workers == 2 and result.fps > 0

    def test_to_dict_round_trips(self):
        r = BenchResult(fps=40.0, mean_latency_ms=25.0, p95_latency_ms=30.0,
                        n_items=100, warmup=5)
        doc = r.to_dict()
        assert doc["fps"] == 40.0 and doc["workers"] == 1
        assert set(doc) == {"fps", "mean_latency_ms", "p95_latency_ms",
                            "n_items", "warmup", "workers"}

    def test_validation(self):
        with pytest.raises(EmptyBatch):
            fps_benchmark(lambda x: x, [])
        with pytest.raises(InvalidParameters):
            fps_benchmark(lambda x: x, [1], warmup=-1)
        with pytest.raises(InvalidParameters):
            fps_benchmark(lambda x: x, [1], workers=0)


class TestSaveReport:
    def test_writes_json_and_text(self, tmp_path):
        report = evaluate_predictions([0, 1, 1], [0, 1, 0], class_names=["a", "b"])
        jp, tp_ = tmp_path / "r.json", tmp_path / "r.txt"
        save_report(report, jp, tp_)
        assert json.loads(jp.read_text()) == json.loads(json.dumps(report.to_dict()))
        assert tp_.read_text() == report.render_text()

    def test_text_is_optional(self, tmp_path):
        report = evaluate_predictions([0, 1], [0, 1])
        save_report(report, tmp_path / "only.json")
        assert (tmp_path / "only.json").exists()

    def test_blocked_path(self, tmp_path):
        blocker = tmp_path / "plain.txt"
        blocker.write_text("file")
        report = evaluate_predictions([0, 1], [0, 1])
        with pytest.raises(IoFailure):
            save_report(report, blocker / "r.json")
