"""Multinomial logistic regression trained by full-batch gradient descent."""
from __future__ import annotations

import warnings

import numpy as np

from ..errors import ConvergenceWarning
from .naive_bayes import log_softmax


def softmax_loss_grad(W, b, X, Y, l2):
    """Mean cross-entropy plus ``l2/2 * ||W||^2`` and its gradient.

    ``Y`` is one-hot (n, C). The bias is not penalized.
    """
    n = X.shape[0]
    logp = log_softmax(X @ W + b)
    loss = -np.sum(Y * logp) / n + 0.5 * l2 * np.sum(W * W)
    delta = (np.exp(logp) - Y) / n
    return loss, X.T @ delta + l2 * W, delta.sum(axis=0)


class LogisticRegression:
    def __init__(self, l2=1e-4, learning_rate=0.1, max_iter=2000, tol=1e-6):
        if l2 < 0 or learning_rate <= 0 or max_iter < 1:
            raise ValueError("invalid logistic regression hyperparameters")
        self.l2 = l2
        self.learning_rate = learning_rate
        self.max_iter = max_iter
        self.tol = tol

    def hyperparameters(self):
        return {"l2": self.l2, "learning_rate": self.learning_rate,
                "max_iter": self.max_iter, "tol": self.tol}

    def fit(self, X, y, n_classes, seed=0):
        X = np.asarray(X, dtype=float)
        Y = np.eye(n_classes)[np.asarray(y, dtype=int)]
        W = np.zeros((X.shape[1], n_classes))
        b = np.zeros(n_classes)
        lr = self.learning_rate
        loss, gW, gb = softmax_loss_grad(W, b, X, Y, self.l2)
        self.converged_ = False
        it = 0
        while it < self.max_iter:
            it += 1
            W_new, b_new = W - lr * gW, b - lr * gb
            new_loss, new_gW, new_gb = softmax_loss_grad(W_new, b_new, X, Y, self.l2)
            if new_loss > loss:
                # overshoot: retry from the same point with half the step
                lr *= 0.5
                if lr < 1e-12:
                    self.converged_ = True
                    break
                continue
            done = loss - new_loss < self.tol
            W, b, loss, gW, gb = W_new, b_new, new_loss, new_gW, new_gb
            if done:
                self.converged_ = True
                break
        if not self.converged_:
            warnings.warn(f"logistic regression hit max_iter={self.max_iter}", ConvergenceWarning)
        self.n_iter_ = it
        self.loss_ = float(loss)
        self.W_, self.b_ = W, b
        return self

    def decision(self, X):
        return np.asarray(X, dtype=float) @ self.W_ + self.b_

    def proba(self, X):
        return np.exp(log_softmax(self.decision(X)))

    def to_params(self):
        return {"W": self.W_.tolist(), "b": self.b_.tolist()}

    @classmethod
    def from_params(cls, hyper, p):
        m = cls(**hyper)
        m.W_ = np.array(p["W"], dtype=float)
        m.b_ = np.array(p["b"], dtype=float)
        return m
