import numpy as np
import pytest
from hypothesis import given, strategies as st

from trajtax.cv import CvProtocol, stratified_kfold
from trajtax.errors import ProtocolError
from trajtax.metrics import ConfusionCounts, f1_scores


def brute_force_f1(y_true, y_pred):
    """Independent F1 from per-sample loops; zero-denominator classes score 0."""
    labels = sorted(set(y_true) | set(y_pred))
    per_class, support = {}, {}
    tp_total = fp_total = fn_total = 0
    for c in labels:
        tp = sum(1 for t, p in zip(y_true, y_pred) if t == c and p == c)
        fp = sum(1 for t, p in zip(y_true, y_pred) if t != c and p == c)
        fn = sum(1 for t, p in zip(y_true, y_pred) if t == c and p != c)
        per_class[c] = 0.0 if 2 * tp + fp + fn == 0 else 2 * tp / (2 * tp + fp + fn)
        support[c] = tp + fn
        tp_total, fp_total, fn_total = tp_total + tp, fp_total + fp, fn_total + fn
    macro = sum(per_class.values()) / len(labels)
    micro = 2 * tp_total / (2 * tp_total + fp_total + fn_total)
    weighted = sum(per_class[c] * support[c] for c in labels) / sum(support.values())
    return macro, micro, weighted


def counts(tp, fp, fn):
    return ConfusionCounts(tuple(str(i) for i in range(len(tp))), tuple(tp), tuple(fp), tuple(fn))


labels_strategy = st.integers(1, 5).flatmap(
    lambda k: st.lists(st.tuples(st.integers(0, k - 1), st.integers(0, k - 1)), min_size=1, max_size=50)
)


@given(labels_strategy)
def test_f1_matches_brute_force(pairs):
    y_true = [f"c{t}" for t, _ in pairs]
    y_pred = [f"c{p}" for _, p in pairs]
    got = f1_scores(ConfusionCounts.from_predictions(y_true, y_pred))
    assert np.allclose(got, brute_force_f1(y_true, y_pred), rtol=0, atol=1e-12)
    assert all(0.0 <= v <= 1.0 for v in got)


@given(labels_strategy)
def test_f1_matches_sklearn(pairs):
    from sklearn.metrics import f1_score

    y_true = [f"c{t}" for t, _ in pairs]
    y_pred = [f"c{p}" for _, p in pairs]
    labels = sorted(set(y_true) | set(y_pred))
    macro, micro, weighted = f1_scores(ConfusionCounts.from_predictions(y_true, y_pred))
    assert micro == pytest.approx(f1_score(y_true, y_pred, average="micro", labels=labels, zero_division=0), abs=1e-12)
    assert weighted == pytest.approx(f1_score(y_true, y_pred, average="weighted", labels=labels, zero_division=0), abs=1e-12)
    assert macro == pytest.approx(f1_score(y_true, y_pred, average="macro", labels=labels, zero_division=0), abs=1e-12)


@given(labels_strategy, st.randoms(use_true_random=False))
def test_f1_invariant_to_class_order(pairs, rnd):
    y_true = [f"c{t}" for t, _ in pairs]
    y_pred = [f"c{p}" for _, p in pairs]
    labels = sorted(set(y_true) | set(y_pred))
    shuffled = list(labels)
    rnd.shuffle(shuffled)
    a = f1_scores(ConfusionCounts.from_predictions(y_true, y_pred, labels))
    b = f1_scores(ConfusionCounts.from_predictions(y_true, y_pred, shuffled))
    assert np.allclose(a, b, atol=1e-12)


def test_perfect_prediction():
    y = ["a", "b", "c", "a"]
    assert f1_scores(ConfusionCounts.from_predictions(y, y)) == (1.0, 1.0, 1.0)


def test_imbalanced_weighted_and_macro():
    # class 0: 90 samples all right; class 1: 10 samples, none predicted as 1
    c = counts(tp=[90, 0], fp=[10, 0], fn=[0, 10])
    macro, _, weighted = f1_scores(c)
    f1_0 = 180 / 190
    assert macro == pytest.approx((f1_0 + 0) / 2)
    assert weighted == pytest.approx(0.9 * f1_0)
    # per-class F1 exactly 1.0 / 0.0 with support 90 / 10
    c2 = counts(tp=[90, 0], fp=[0, 0], fn=[0, 10])
    macro2, _, weighted2 = f1_scores(c2)
    assert (macro2, weighted2) == (pytest.approx(0.5), pytest.approx(0.9))


def test_micro_all_one_class():
    c = counts(tp=[50, 0], fp=[50, 0], fn=[0, 50])
    assert f1_scores(c)[1] == pytest.approx(0.5)


def test_zero_support_rejected():
    with pytest.raises(ValueError):
        f1_scores(counts([0], [3], [0]))


def test_equal_per_class_f1_gives_weighted_equal_micro():
    # both classes F1 = 0.8 with different supports
    c = counts(tp=[4, 8], fp=[1, 2], fn=[1, 2])
    macro, micro, weighted = f1_scores(c)
    assert weighted == pytest.approx(micro, abs=1e-12) == pytest.approx(0.8)


def test_balanced_support_macro_equals_weighted():
    c = counts(tp=[3, 7, 5], fp=[2, 1, 4], fn=[7, 3, 5])
    macro, _, weighted = f1_scores(c)
    assert macro == pytest.approx(weighted, abs=1e-12)


# -- stratified folds ---------------------------------------------------------------


def test_even_split():
    folds = stratified_kfold(["A"] * 40 + ["B"] * 40, 5, 0)
    for f in folds:
        assert (f < 40).sum() == 8 and (f >= 40).sum() == 8


def test_uneven_split_and_partition():
    labels = ["F"] * 38 + ["M"] * 28
    folds = stratified_kfold(labels, 5, 14159)
    for f in folds:
        assert (f < 38).sum() in (7, 8)
        assert (f >= 38).sum() in (5, 6)
    allidx = np.concatenate(folds)
    assert sorted(allidx.tolist()) == list(range(66))


@given(st.lists(st.sampled_from("abcd"), min_size=20, max_size=120), st.integers(2, 5), st.integers(0, 2**31))
def test_fold_partition_and_balance(labels, k, seed):
    from collections import Counter

    if min(Counter(labels).values()) < k:
        with pytest.raises(ProtocolError):
            stratified_kfold(labels, k, seed)
        return
    folds = stratified_kfold(labels, k, seed)
    assert sorted(np.concatenate(folds).tolist()) == list(range(len(labels)))
    for c in set(labels):
        sizes = [sum(labels[i] == c for i in f) for f in folds]
        assert max(sizes) - min(sizes) <= 1
    assert [f.tolist() for f in folds] == [f.tolist() for f in stratified_kfold(labels, k, seed)]


def test_small_class_error_names_class():
    with pytest.raises(ProtocolError, match="tiny"):
        stratified_kfold(["big"] * 10 + ["tiny"] * 3, 5, 0)


def test_protocol_validation():
    assert CvProtocol().iterations == 20
    assert CvProtocol().seeds == (14159, 26535, 89793, 23846)
    with pytest.raises(ProtocolError):
        CvProtocol(seeds=())
    with pytest.raises(ProtocolError):
        CvProtocol(folds=1)
