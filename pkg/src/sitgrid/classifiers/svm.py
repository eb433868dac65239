"""One-vs-rest linear SVM trained with Pegasos-style subgradient steps."""
from __future__ import annotations

import numpy as np

from .naive_bayes import log_softmax


class LinearSVM:
    """Hinge loss plus ``lam/2 * ||w||^2`` per class, step size ``1/(lam*t)``.

    A constant input column stands in for the bias, so it is regularized
    along with the weights. All one-vs-rest problems advance together over
    the same shuffled mini-batches.
    """

    def __init__(self, lam=1e-4, epochs=200, batch_size=16):
        if lam <= 0 or epochs < 1 or batch_size < 1:
            raise ValueError("invalid SVM hyperparameters")
        self.lam = lam
        self.epochs = epochs
        self.batch_size = batch_size

    def hyperparameters(self):
        return {"lam": self.lam, "epochs": self.epochs, "batch_size": self.batch_size}

    def fit(self, X, y, n_classes, seed=0):
        X = np.asarray(X, dtype=float)
        n = X.shape[0]
        Xa = np.hstack([X, np.ones((n, 1))])
        Y = np.where(np.eye(n_classes)[np.asarray(y, dtype=int)] > 0, 1.0, -1.0)
        W = np.zeros((Xa.shape[1], n_classes))
        rng = np.random.default_rng(seed)
        lam = self.lam
        t = 0
        for _ in range(self.epochs):
            perm = rng.permutation(n)
            for start in range(0, n, self.batch_size):
                batch = perm[start:start + self.batch_size]
                t += 1
                xb, yb = Xa[batch], Y[batch]
                active = (yb * (xb @ W)) < 1.0
                grad = lam * W - xb.T @ (yb * active) / len(batch)
                W -= grad / (lam * t)
        self.W_ = W
        return self

    def decision(self, X):
        X = np.asarray(X, dtype=float)
        return X @ self.W_[:-1] + self.W_[-1]

    def proba(self, X):
        # softmax over raw margins; not calibrated
        return np.exp(log_softmax(self.decision(X)))

    def to_params(self):
        return {"W": self.W_.tolist()}

    @classmethod
    def from_params(cls, hyper, p):
        m = cls(**hyper)
        m.W_ = np.array(p["W"], dtype=float)
        return m
