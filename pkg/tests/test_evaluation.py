from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sitgrid.classifiers import ClassifierSpec
from sitgrid.errors import GroupLargerThanFold, LengthMismatch, TooFewRows
from sitgrid.evaluation import (
    FoldError,
    classification_report,
    cross_validate,
    fold_seed,
    kfold_split,
)
from sitgrid.features import FeatureMatrix


def check_partition(plan, n):
    seen = np.zeros(n, dtype=int)
    for train, test in plan.splits():
        assert len(np.intersect1d(train, test)) == 0
        assert len(train) + len(test) == n
        seen[test] += 1
    assert (seen == 1).all()


def test_1800_rows_ten_folds():
    labels = [c for c in ("still", "left", "right", "front", "back", "empty") for _ in range(300)]
    for stratified in (True, False):
        plan = kfold_split(1800, labels, k=10, stratified=stratified, seed=0)
        for train, test in plan.splits():
            assert len(train) == 1620 and len(test) == 180
        check_partition(plan, 1800)


def test_leave_one_out():
    plan = kfold_split(10, k=10, stratified=False)
    assert plan.fold_sizes().tolist() == [1] * 10


def test_uneven_split():
    plan = kfold_split(7, k=3, stratified=False)
    assert sorted(plan.fold_sizes().tolist(), reverse=True) == [3, 2, 2]


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 400).flatmap(lambda n: st.tuples(st.just(n), st.integers(2, min(n, 25)))),
       st.integers(0, 2**31))
def test_random_partitions(nk, seed):
    n, k = nk
    labels = [str(i % 3) for i in range(n)]
    plan = kfold_split(n, labels, k=k, seed=seed)
    check_partition(plan, n)
    sizes = plan.fold_sizes()
    assert sizes.max() - sizes.min() <= 1
    for c in "012":
        per = np.bincount(plan.assignments[[i for i, l in enumerate(labels) if l == c]], minlength=k)
        assert per.max() - per.min() <= 1


def test_group_aware_keeps_groups_together():
    groups = [f"p{i // 5}/e{i % 2}" for i in range(100)]
    plan = kfold_split(100, groups=groups, k=5, group_aware=True, seed=1)
    check_partition(plan, 100)
    fold_of = {}
    for g, f in zip(groups, plan.assignments):
        assert fold_of.setdefault(g, f) == f


def test_split_errors():
    with pytest.raises(TooFewRows):
        kfold_split(3, k=5, stratified=False)
    with pytest.raises(LengthMismatch):
        kfold_split(10, labels=["a"] * 9, k=2)
    with pytest.raises(GroupLargerThanFold):
        kfold_split(10, groups=["g"] * 6 + list("abcd"), k=5, group_aware=True)


def test_split_deterministic_and_seeded():
    labels = ["a", "b"] * 50
    a = kfold_split(100, labels, k=10, seed=3)
    b = kfold_split(100, labels, k=10, seed=3)
    c = kfold_split(100, labels, k=10, seed=4)
    assert np.array_equal(a.assignments, b.assignments)
    assert not np.array_equal(a.assignments, c.assignments)
    assert fold_seed(3, 0) == fold_seed(3, 0) != fold_seed(3, 1)


def _confusion_labels(cm, classes):
    y_true, y_pred = [], []
    for i, row in enumerate(cm):
        for j, count in enumerate(row):
            y_true += [classes[i]] * count
            y_pred += [classes[j]] * count
    return y_true, y_pred


def test_report_two_class_example():
    t, p = _confusion_labels([[8, 2], [1, 9]], ("left", "right"))
    r = classification_report(t, p)
    assert r.precision[0] == pytest.approx(float(Fraction(8, 9)), abs=1e-15)
    assert r.recall[0] == pytest.approx(0.8, abs=1e-15)
    assert r.f1[0] == pytest.approx(float(Fraction(16, 19)), abs=1e-15)
    assert r.support.tolist() == [10, 10] and r.n == 20
    assert r.accuracy == 17 / 20
    text = r.to_text()
    assert "avg / total" in text and text.splitlines()[-3].split()[-1] == "20"
    assert r.confusion_csv() == "true\\pred,left,right\nleft,8,2\nright,1,9\n"


def test_report_zero_division_flags():
    r = classification_report(["a", "a", "b"], ["a", "a", "a"], ("a", "b", "c"))
    assert r.precision[1] == 0 and r.recall[2] == 0
    assert "precision:b" in r.zero_division and "recall:c" in r.zero_division
    assert r.support.tolist() == [2, 1, 0]


def test_report_length_mismatch():
    with pytest.raises(LengthMismatch):
        classification_report(["a"], ["a", "b"])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.sampled_from("abc"), st.sampled_from("abc")), min_size=1, max_size=60))
def test_report_invariants_and_order_equivariance(pairs):
    t = [a for a, _ in pairs]
    p = [b for _, b in pairs]
    r = classification_report(t, p, ("a", "b", "c"))
    assert r.support.sum() == len(t)
    assert (r.confusion.sum(axis=1) == r.support).all()
    assert r.accuracy == np.trace(r.confusion) / len(t)
    s = classification_report(t, p, ("c", "a", "b"))
    perm = [2, 0, 1]
    assert np.array_equal(s.confusion, r.confusion[np.ix_(perm, perm)])
    assert np.array_equal(s.f1, r.f1[perm])
    assert s.accuracy == r.accuracy


def _blobs(n=60):
    rng = np.random.default_rng(0)
    X = np.vstack([rng.normal(0, 1, (n // 2, 3)), rng.normal(3, 1, (n // 2, 3))])
    return FeatureMatrix(("a", "b", "c"), X, ["x"] * (n // 2) + ["y"] * (n // 2))


def test_cross_validate_pools_every_row_once():
    fm = _blobs(62)
    plan = kfold_split(len(fm), fm.labels, k=5, seed=2)
    cv = cross_validate(fm, ClassifierSpec("gnb"), plan)
    assert None not in cv.predictions and len(cv.predictions) == 62
    weighted = sum(a * s for a, s in zip(cv.fold_accuracies, cv.fold_sizes)) / 62
    assert cv.pooled_accuracy == pytest.approx(weighted, abs=1e-12)
    assert cv.pooled_accuracy >= 0.9
    assert cv.report().n == 62


def test_cross_validate_deterministic():
    fm = _blobs()
    plan = kfold_split(len(fm), fm.labels, k=4, seed=0)
    spec = ClassifierSpec("rf", {"n_trees": 5}, seed=1)
    assert cross_validate(fm, spec, plan).predictions == cross_validate(fm, spec, plan).predictions


def test_fold_error_carries_fold():
    fm = _blobs(20)
    plan = kfold_split(20, k=2, stratified=False, seed=0)
    # a fold whose training rows hold one class only
    plan = type(plan)(2, np.array([0] * 10 + [1] * 10), False)
    with pytest.raises(FoldError) as exc:
        cross_validate(fm, ClassifierSpec("gnb"), plan)
    assert exc.value.fold == 0


def test_plan_length_must_match():
    with pytest.raises(LengthMismatch):
        cross_validate(_blobs(20), ClassifierSpec("gnb"), kfold_split(10, k=2, stratified=False))
