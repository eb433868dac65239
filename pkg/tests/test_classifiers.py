import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import cart_oracle, cart_predict, gnb_posteriors
from sitgrid.classifiers import (
    FAMILIES,
    ClassifierModel,
    ClassifierSpec,
    dumps_model,
    fit,
    gradient_check,
    load_model,
    loads_model,
    predict,
    predict_proba,
    save_model,
)
from sitgrid.classifiers.forest import DecisionTree, RandomForest
from sitgrid.classifiers.logistic import softmax_loss_grad
from sitgrid.errors import (
    ConfigError,
    ConvergenceWarning,
    CorruptModel,
    DegenerateLabels,
    FeatureMismatch,
    FormatVersionMismatch,
    NonFiniteInput,
)
from sitgrid.features import FeatureMatrix

FAST = {
    "rf": {"n_trees": 10},
    "gnb": {},
    "lr": {"max_iter": 300},
    "svm": {"epochs": 20},
    "dnn": {"hidden": (8,), "epochs": 20},
}


def blobs(n_per=20, d=4, classes=("a", "b", "c"), seed=0, spread=1.0):
    rng = np.random.default_rng(seed)
    X, y = [], []
    for i, c in enumerate(classes):
        center = np.zeros(d)
        center[i % d] = 4.0
        X.append(rng.normal(center, spread, (n_per, d)))
        y += [c] * n_per
    names = tuple(f"x{i}" for i in range(d))
    return FeatureMatrix(names, np.vstack(X), y)


@pytest.fixture(scope="module")
def toy():
    return blobs()


@pytest.fixture(scope="module")
def models(toy):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        return {f: fit(ClassifierSpec(f, FAST[f], seed=3), toy) for f in FAMILIES}


# --- RF ------------------------------------------------------------------

def _consistent_dataset(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, 13))
    d = int(rng.integers(1, 4))
    X = rng.integers(0, 5, (n, d)).astype(float)
    y = rng.integers(0, 3, n)
    seen = {}
    keep = []
    for i in range(n):
        key = tuple(X[i])
        if key in seen and seen[key] != y[i]:
            continue
        seen[key] = y[i]
        keep.append(i)
    return X[keep], y[keep]


@pytest.mark.parametrize("seed", range(10))
def test_single_tree_matches_exhaustive_cart(seed):
    X, y = _consistent_dataset(seed)
    classes = np.unique(y)
    y = np.searchsorted(classes, y)
    tree = cart_oracle(X.tolist(), y.tolist())
    forest = RandomForest(n_trees=1, max_features=None, bootstrap=False).fit(X, y, len(classes))
    grid = np.array(np.meshgrid(*[np.arange(-0.5, 5.0, 0.5)] * X.shape[1])).reshape(X.shape[1], -1).T
    queries = np.vstack([X, grid])
    expected = [cart_predict(tree, q.tolist()) for q in queries]
    assert forest.predict(queries).tolist() == expected
    assert (forest.predict(X) == y).all()


def test_six_point_separable():
    X = np.array([[0.0, 1.0], [1.0, 3.0], [2.0, 0.0], [3.0, 2.0], [4.0, 5.0], [5.0, 4.0]])
    y = np.array([0, 0, 1, 1, 0, 1])
    t = DecisionTree().fit(X, y, 2)
    oracle = cart_oracle(X.tolist(), y.tolist())
    assert t.predict(X).tolist() == [cart_predict(oracle, x) for x in X.tolist()] == y.tolist()


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_tree_perfect_on_consistent_data(seed):
    X, y = _consistent_dataset(seed)
    t = DecisionTree().fit(X, y, 3)
    assert (t.predict(X) == y).all()


def test_tree_depth_limit():
    X = np.arange(8.0)[:, None]
    y = np.array([0, 1] * 4)
    t = DecisionTree(max_depth=1).fit(X, y, 2)
    assert t.feature_[1] == -1 and t.feature_[2] == -1


# --- GNB -----------------------------------------------------------------

def test_gnb_symmetric_boundary():
    fm = FeatureMatrix(("x",), np.array([[-2.0], [-1.0], [1.0], [2.0]]), ["A", "A", "B", "B"])
    m = fit(ClassifierSpec("gnb"), fm)
    p = predict_proba(m, np.array([[0.0], [-1e-3], [1e-3]]))
    assert abs(p[0, 0] - 0.5) < 1e-12
    assert predict(m, np.array([[-1e-3], [1e-3]])) == ["A", "B"]


def test_gnb_matches_closed_form():
    rng = np.random.default_rng(7)
    X = np.vstack([rng.normal(m, s, (6, 4)) for m, s in ((0, 1), (2, 0.5), (-1, 2))])
    y = ["a"] * 6 + ["b"] * 6 + ["c"] * 6
    m = fit(ClassifierSpec("gnb"), FeatureMatrix(tuple("wxyz"), X, y))
    queries = rng.normal(0.5, 1.5, (25, 4))
    got = predict_proba(m, queries)
    for q, row in zip(queries, got):
        classes, post = gnb_posteriors(X.tolist(), y, q.tolist())
        assert classes == list(m.classes)
        assert np.abs(row - post).max() < 1e-9


def test_gnb_variance_floor(toy):
    m = fit(ClassifierSpec("gnb"), toy)
    est = m.estimator
    assert est.epsilon_ == pytest.approx(1e-9 * toy.X.var(axis=0).max(), rel=1e-12)
    assert (est.var_ >= est.epsilon_).all()


# --- LR ------------------------------------------------------------------

def test_lr_separable_toy_within_500_iterations():
    rng = np.random.default_rng(1)
    X = rng.uniform(-1, 1, (60, 2))
    y = ["pos" if a + 0.5 * b > 0.1 else "neg" for a, b in X]
    X += np.where(np.array(y)[:, None] == "pos", 0.2, -0.2)
    fm = FeatureMatrix(("a", "b"), X, y)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        m = fit(ClassifierSpec("lr", {"max_iter": 500}), fm)
    assert predict(m, fm) == y
    assert m.estimator.n_iter_ <= 500


def test_lr_warns_at_iteration_cap(toy):
    with pytest.warns(ConvergenceWarning):
        fit(ClassifierSpec("lr", {"max_iter": 3, "tol": 0.0}), toy)


def test_zero_init_bias_gradient():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(9, 3))
    y = np.array([0, 1, 2] * 3)
    Y = np.eye(3)[y]
    _, gW, gb = softmax_loss_grad(np.zeros((3, 3)), np.zeros(3), X, Y, 1e-4)
    assert np.allclose(gb, (np.full((9, 3), 1 / 3) - Y).mean(axis=0), atol=1e-15)
    assert np.allclose(gW, X.T @ (np.full((9, 3), 1 / 3) - Y) / 9, atol=1e-15)


@pytest.mark.parametrize("family,params", [
    ("lr", None),
    ("lr", {"l2": 0.1}),
    ("dnn", {"hidden": (6, 5)}),
    ("dnn", {"hidden": (4,), "weight_decay": 0.01}),
    ("dnn", {"hidden": ()}),
])
def test_gradient_checks(family, params):
    rng = np.random.default_rng(0)
    X = rng.normal(size=(16, 5))
    y = rng.integers(0, 3, 16)
    assert gradient_check(family, X, y, params, seed=1) < 1e-4


def test_gradient_check_rejects_other_families():
    with pytest.raises(ConfigError):
        gradient_check("rf", np.zeros((2, 2)), np.array([0, 1]))


# --- all families --------------------------------------------------------

@pytest.mark.parametrize("family", FAMILIES)
def test_proba_rows_sum_to_one_and_argmax_is_predict(models, family):
    m = models[family]
    X = np.random.default_rng(9).normal(2, 3, (50, 4))
    p = predict_proba(m, X)
    assert p.shape == (50, 3)
    assert (p >= 0).all() and np.abs(p.sum(axis=1) - 1).max() < 1e-9
    assert predict(m, X) == [m.classes[i] for i in p.argmax(axis=1)]
    assert set(predict(m, X)) <= set(m.classes)


@pytest.mark.parametrize("family", FAMILIES)
def test_fits_separable_blobs(models, toy, family):
    acc = np.mean(np.array(predict(models[family], toy)) == np.array(toy.labels))
    assert acc >= 0.9


@pytest.mark.parametrize("family", FAMILIES)
def test_persistence_round_trip(models, toy, tmp_path, family):
    m = models[family]
    save_model(m, tmp_path / "m.json")
    back = load_model(tmp_path / "m.json")
    assert np.array_equal(predict_proba(back, toy), predict_proba(m, toy))
    assert predict(back, toy) == predict(m, toy)
    assert dumps_model(back) == dumps_model(m)
    doc = json.loads(dumps_model(m))
    assert set(doc) == {"format_version", "family", "classes", "feature_names", "seed", "params"}


@pytest.mark.parametrize("family", FAMILIES)
def test_fit_is_deterministic(toy, family):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        a = fit(ClassifierSpec(family, FAST[family], seed=5), toy)
        b = fit(ClassifierSpec(family, FAST[family], seed=5), toy)
    assert dumps_model(a) == dumps_model(b)


@pytest.mark.parametrize("family", ["gnb", "lr"])
def test_order_free_estimators(toy, family):
    perm = np.random.default_rng(0).permutation(len(toy))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        a = fit(ClassifierSpec(family, FAST[family]), toy)
        b = fit(ClassifierSpec(family, FAST[family]), toy.take(perm))
    assert np.allclose(predict_proba(a, toy), predict_proba(b, toy), rtol=0, atol=1e-9)


def test_dnn_without_hidden_layers(toy):
    m = fit(ClassifierSpec("dnn", {"hidden": (), "epochs": 10}), toy)
    p = predict_proba(m, toy)
    assert np.abs(p.sum(axis=1) - 1).max() < 1e-9


def test_fit_guards(toy):
    with pytest.raises(DegenerateLabels):
        fit(ClassifierSpec("gnb"), FeatureMatrix(("x",), np.zeros((3, 1)), ["left"] * 3))
    bad = np.array(toy.X)
    bad[0, 0] = np.nan
    with pytest.raises(NonFiniteInput):
        fit(ClassifierSpec("gnb"), bad, toy.labels)
    with pytest.raises(ConfigError):
        ClassifierSpec("knn")
    with pytest.raises(ConfigError):
        ClassifierSpec("rf", {"n_trees": 0})
    with pytest.raises(ConfigError):
        ClassifierSpec("rf", {"depth": 3})


def test_feature_mismatch(models, toy):
    m = models["gnb"]
    with pytest.raises(FeatureMismatch):
        predict(m, toy.select(["x1", "x0", "x2", "x3"]))
    with pytest.raises(FeatureMismatch):
        predict(m, np.zeros((2, 3)))


def test_corrupt_models(models):
    text = dumps_model(models["lr"])
    with pytest.raises(CorruptModel):
        loads_model("{not json")
    with pytest.raises(CorruptModel):
        loads_model("[]")
    doc = json.loads(text)
    del doc["params"]["model"]
    with pytest.raises(CorruptModel):
        loads_model(json.dumps(doc))
    doc = json.loads(text)
    doc["family"] = "knn"
    with pytest.raises(CorruptModel):
        loads_model(json.dumps(doc))
    doc = json.loads(text)
    doc["format_version"] = 2
    with pytest.raises(FormatVersionMismatch):
        loads_model(json.dumps(doc))
    assert issubclass(FormatVersionMismatch, CorruptModel)


def test_model_dict_round_trip(models):
    for m in models.values():
        assert ClassifierModel.from_dict(m.to_dict()).to_dict() == m.to_dict()
