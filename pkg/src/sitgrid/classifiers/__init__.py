"""Five classifier families behind one fit/predict interface.

>>> model = fit(ClassifierSpec("gnb"), fm)          # doctest: +SKIP
>>> predict(model, fm)                               # doctest: +SKIP
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import (
    ConfigError,
    CorruptModel,
    DegenerateLabels,
    FeatureMismatch,
    FormatVersionMismatch,
    NonFiniteInput,
)
from .forest import RandomForest
from .logistic import LogisticRegression, softmax_loss_grad
from .mlp import MLP, init_layers, loss_and_grads
from .naive_bayes import GaussianNB
from .svm import LinearSVM

FORMAT_VERSION = 1
FAMILIES = ("rf", "gnb", "lr", "svm", "dnn")
_ESTIMATORS = {
    "rf": RandomForest,
    "gnb": GaussianNB,
    "lr": LogisticRegression,
    "svm": LinearSVM,
    "dnn": MLP,
}
# gradient-trained families see standardized inputs
_STANDARDIZED = {"lr", "svm", "dnn"}


@dataclass(frozen=True)
class ClassifierSpec:
    family: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown classifier family {self.family!r}")
        object.__setattr__(self, "params", dict(self.params))
        try:
            self.build()
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{self.family}: {exc}") from None

    def build(self):
        return _ESTIMATORS[self.family](**self.params)

    @classmethod
    def from_dict(cls, d) -> "ClassifierSpec":
        if isinstance(d, str):
            return cls(d)
        unknown = set(d) - {"family", "params", "seed"}
        if unknown:
            raise ConfigError(f"unknown classifier fields {sorted(unknown)}")
        return cls(d["family"], d.get("params", {}), int(d.get("seed", 0)))

    def to_dict(self) -> dict:
        return {"family": self.family, "params": dict(self.params), "seed": self.seed}


@dataclass(eq=False)
class ClassifierModel:
    family: str
    classes: tuple[str, ...]
    feature_names: tuple[str, ...]
    seed: int
    hyperparameters: dict
    estimator: object
    scaler: tuple[np.ndarray, np.ndarray] | None = None

    def transform(self, X):
        if self.scaler is None:
            return X
        mean, scale = self.scaler
        return (X - mean) / scale

    def to_dict(self) -> dict:
        params = {"hyperparameters": self.hyperparameters, "model": self.estimator.to_params()}
        if self.scaler is not None:
            params["scaler"] = {"mean": self.scaler[0].tolist(), "scale": self.scaler[1].tolist()}
        return {
            "format_version": FORMAT_VERSION,
            "family": self.family,
            "classes": list(self.classes),
            "feature_names": list(self.feature_names),
            "seed": self.seed,
            "params": params,
        }

    @classmethod
    def from_dict(cls, d) -> "ClassifierModel":
        try:
            version = d["format_version"]
            if not isinstance(version, int):
                raise CorruptModel("format_version must be an integer")
            if version > FORMAT_VERSION:
                raise FormatVersionMismatch(
                    f"model format {version} is newer than supported {FORMAT_VERSION}"
                )
            if version < 1:
                raise FormatVersionMismatch(f"unsupported model format {version}")
            family = d["family"]
            if family not in FAMILIES:
                raise CorruptModel(f"unknown family {family!r}")
            params = d["params"]
            hyper = params["hyperparameters"]
            estimator = _ESTIMATORS[family].from_params(hyper, params["model"])
            scaler = None
            if "scaler" in params:
                scaler = (np.array(params["scaler"]["mean"], dtype=float),
                          np.array(params["scaler"]["scale"], dtype=float))
            return cls(family, tuple(d["classes"]), tuple(d["feature_names"]),
                       int(d["seed"]), hyper, estimator, scaler)
        except CorruptModel:
            raise
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise CorruptModel(f"malformed model document: {exc!r}") from None


def _features(fm_or_X, names=None):
    """(X, names) from a FeatureMatrix or a plain 2-D array."""
    if hasattr(fm_or_X, "names") and hasattr(fm_or_X, "X"):
        return np.asarray(fm_or_X.X, dtype=float), tuple(fm_or_X.names)
    X = np.atleast_2d(np.asarray(fm_or_X, dtype=float))
    return X, names


def fit(spec: ClassifierSpec, fm, labels=None) -> ClassifierModel:
    """Train ``spec`` on a FeatureMatrix (or on ``X`` plus ``labels``)."""
    X, names = _features(fm)
    if labels is None:
        labels = fm.labels
    labels = list(labels)
    if names is None:
        names = tuple(f"f{i}" for i in range(X.shape[1]))
    if len(labels) != X.shape[0]:
        raise FeatureMismatch("labels do not align with rows")
    if not np.all(np.isfinite(X)):
        raise NonFiniteInput("training features contain NaN or infinity")
    classes = tuple(sorted(set(labels)))
    if len(classes) < 2:
        raise DegenerateLabels(f"need at least two classes, got {list(classes)}")
    if X.shape[0] < len(classes):
        raise DegenerateLabels("fewer rows than classes")
    y = np.array([classes.index(l) for l in labels])
    scaler = None
    if spec.family in _STANDARDIZED:
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale[scale == 0] = 1.0
        scaler = (mean, scale)
        X = (X - mean) / scale
    est = spec.build()
    est.fit(X, y, len(classes), spec.seed)
    return ClassifierModel(spec.family, classes, names, spec.seed,
                           est.hyperparameters(), est, scaler)


def _check_input(model, fm):
    X, names = _features(fm)
    if names is not None and tuple(names) != model.feature_names:
        raise FeatureMismatch("feature names/order differ from the training features")
    if X.shape[1] != len(model.feature_names):
        raise FeatureMismatch(
            f"expected {len(model.feature_names)} features, got {X.shape[1]}"
        )
    return model.transform(X)


def predict_proba(model: ClassifierModel, fm) -> np.ndarray:
    """(n, C) class probabilities in ``model.classes`` order."""
    X = _check_input(model, fm)
    if model.family == "rf":
        return model.estimator.votes(X)
    return model.estimator.proba(X)


def predict(model: ClassifierModel, fm) -> list[str]:
    proba = predict_proba(model, fm)
    return [model.classes[i] for i in np.argmax(proba, axis=1)]


def dumps_model(model: ClassifierModel) -> str:
    return json.dumps(model.to_dict(), sort_keys=True, indent=1) + "\n"


def save_model(model: ClassifierModel, dest) -> None:
    Path(dest).write_text(dumps_model(model), encoding="utf-8")


def loads_model(text: str) -> ClassifierModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorruptModel(f"not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise CorruptModel("model document must be a JSON object")
    return ClassifierModel.from_dict(doc)


def load_model(source) -> ClassifierModel:
    return loads_model(Path(source).read_text(encoding="utf-8"))


def _flatten(arrays):
    return np.concatenate([a.ravel() for a in arrays])


def _unflatten(vec, shapes):
    out, pos = [], 0
    for s in shapes:
        size = int(np.prod(s))
        out.append(vec[pos:pos + size].reshape(s))
        pos += size
    return out


def numeric_gradient(f, theta, h=1e-5):
    """Central finite differences of scalar ``f`` at ``theta``."""
    grad = np.zeros_like(theta)
    for i in range(theta.size):
        old = theta[i]
        theta[i] = old + h
        up = f(theta)
        theta[i] = old - h
        down = f(theta)
        theta[i] = old
        grad[i] = (up - down) / (2 * h)
    return grad


def relative_error(analytic, numeric, floor=1e-6):
    """Elementwise ``|a - n| / max(|a|, |n|, floor)``."""
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / denom


def gradient_check(family: str, X, y, params: dict | None = None, seed: int = 0, h: float = 1e-5):
    """Max relative error between analytic and finite-difference loss gradients.

    Parameters are drawn at random from ``seed`` so the check does not sit
    at a symmetric point. ``params`` overrides the family hyperparameters
    (``l2`` for lr; ``hidden`` and ``weight_decay`` for dnn).
    """
    params = dict(params or {})
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    n_classes = int(y.max()) + 1
    Y = np.eye(n_classes)[y]
    rng = np.random.default_rng(seed)
    d = X.shape[1]
    if family == "lr":
        l2 = params.get("l2", 1e-4)
        shapes = [(d, n_classes), (n_classes,)]
        theta = rng.normal(0, 0.5, d * n_classes + n_classes)

        def loss(t):
            W, b = _unflatten(t, shapes)
            return softmax_loss_grad(W, b, X, Y, l2)[0]

        W, b = _unflatten(theta, shapes)
        _, gW, gb = softmax_loss_grad(W, b, X, Y, l2)
        analytic = _flatten([gW, gb])
    elif family == "dnn":
        hidden = tuple(params.get("hidden", (64, 32)))
        wd = params.get("weight_decay", 0.0)
        layers = init_layers((d, *hidden, n_classes), rng)
        layers = [(W, rng.normal(0, 0.1, b.shape)) for W, b in layers]
        shapes = [a.shape for pair in layers for a in pair]
        theta = _flatten([a for pair in layers for a in pair])

        def to_layers(t):
            flat = _unflatten(t, shapes)
            return list(zip(flat[0::2], flat[1::2]))

        def loss(t):
            return loss_and_grads(to_layers(t), X, Y, wd)[0]

        _, grads = loss_and_grads(to_layers(theta), X, Y, wd)
        analytic = _flatten([a for pair in grads for a in pair])
    else:
        raise ConfigError("gradient_check supports only 'lr' and 'dnn'")
    numeric = numeric_gradient(loss, theta.copy(), h)
    return float(relative_error(analytic, numeric).max())


__all__ = [
    "FAMILIES",
    "FORMAT_VERSION",
    "ClassifierModel",
    "ClassifierSpec",
    "fit",
    "gradient_check",
    "load_model",
    "loads_model",
    "dumps_model",
    "predict",
    "predict_proba",
    "save_model",
]
