"""Gaussian naive Bayes."""
from __future__ import annotations

import numpy as np


def log_softmax(scores):
    shifted = scores - scores.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


class GaussianNB:
    """Per-class, per-feature Gaussians with empirical class priors.

    Every variance gets ``var_smoothing * max(feature variance)`` added, so
    no stored variance falls below that floor.
    """

    def __init__(self, var_smoothing=1e-9):
        if var_smoothing < 0:
            raise ValueError("var_smoothing must be >= 0")
        self.var_smoothing = var_smoothing

    def hyperparameters(self):
        return {"var_smoothing": self.var_smoothing}

    def fit(self, X, y, n_classes, seed=0):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        d = X.shape[1]
        eps = self.var_smoothing * float(X.var(axis=0).max()) if len(X) else 0.0
        if eps <= 0:
            eps = self.var_smoothing or np.finfo(float).tiny
        self.epsilon_ = eps
        self.theta_ = np.zeros((n_classes, d))
        self.var_ = np.zeros((n_classes, d))
        self.class_prior_ = np.zeros(n_classes)
        for c in range(n_classes):
            Xc = X[y == c]
            self.theta_[c] = Xc.mean(axis=0)
            self.var_[c] = Xc.var(axis=0) + eps
            self.class_prior_[c] = len(Xc) / len(X)
        return self

    def joint_log_likelihood(self, X):
        X = np.asarray(X, dtype=float)
        out = np.empty((X.shape[0], len(self.class_prior_)))
        for c in range(len(self.class_prior_)):
            ll = -0.5 * np.sum(np.log(2.0 * np.pi * self.var_[c]))
            ll = ll - 0.5 * np.sum((X - self.theta_[c]) ** 2 / self.var_[c], axis=1)
            out[:, c] = np.log(self.class_prior_[c]) + ll
        return out

    def proba(self, X):
        return np.exp(log_softmax(self.joint_log_likelihood(X)))

    def to_params(self):
        return {
            "epsilon": self.epsilon_,
            "theta": self.theta_.tolist(),
            "var": self.var_.tolist(),
            "class_prior": self.class_prior_.tolist(),
        }

    @classmethod
    def from_params(cls, hyper, p):
        m = cls(**hyper)
        m.epsilon_ = float(p["epsilon"])
        m.theta_ = np.array(p["theta"], dtype=float)
        m.var_ = np.array(p["var"], dtype=float)
        m.class_prior_ = np.array(p["class_prior"], dtype=float)
        return m
