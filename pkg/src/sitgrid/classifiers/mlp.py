"""Feed-forward ReLU network with a softmax output."""
from __future__ import annotations

import numpy as np

from .naive_bayes import log_softmax


def init_layers(sizes, rng):
    """Uniform init scaled by fan-in and fan-out; zero biases."""
    params = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        params.append((rng.uniform(-limit, limit, (fan_in, fan_out)), np.zeros(fan_out)))
    return params


def forward(params, X):
    """Return (logits, cache) where cache holds each layer's input and pre-activation."""
    cache = []
    a = X
    for i, (W, b) in enumerate(params):
        z = a @ W + b
        cache.append((a, z))
        a = z if i == len(params) - 1 else np.maximum(z, 0.0)
    return a, cache


def loss_and_grads(params, X, Y, weight_decay=0.0):
    """Mean softmax cross-entropy (+ ``weight_decay/2 * sum ||W||^2``) and gradients."""
    n = X.shape[0]
    logits, cache = forward(params, X)
    logp = log_softmax(logits)
    loss = -np.sum(Y * logp) / n
    if weight_decay:
        loss += 0.5 * weight_decay * sum(np.sum(W * W) for W, _ in params)
    grads = [None] * len(params)
    delta = (np.exp(logp) - Y) / n
    for i in range(len(params) - 1, -1, -1):
        a, _ = cache[i]
        W = params[i][0]
        gW = a.T @ delta
        if weight_decay:
            gW = gW + weight_decay * W
        grads[i] = (gW, delta.sum(axis=0))
        if i > 0:
            delta = (delta @ W.T) * (cache[i - 1][1] > 0)
    return loss, grads


class MLP:
    def __init__(self, hidden=(64, 32), learning_rate=0.01, momentum=0.9, batch_size=32,
                 epochs=200, validation_fraction=0.1, patience=20, weight_decay=0.0):
        if learning_rate <= 0 or not 0 <= momentum < 1 or batch_size < 1 or epochs < 1:
            raise ValueError("invalid MLP hyperparameters")
        if not 0 <= validation_fraction < 1:
            raise ValueError("validation_fraction must lie in [0, 1)")
        self.hidden = tuple(int(h) for h in hidden)
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.batch_size = batch_size
        self.epochs = epochs
        self.validation_fraction = validation_fraction
        self.patience = patience
        self.weight_decay = weight_decay

    def hyperparameters(self):
        return {
            "hidden": list(self.hidden),
            "learning_rate": self.learning_rate,
            "momentum": self.momentum,
            "batch_size": self.batch_size,
            "epochs": self.epochs,
            "validation_fraction": self.validation_fraction,
            "patience": self.patience,
            "weight_decay": self.weight_decay,
        }

    def fit(self, X, y, n_classes, seed=0):
        X = np.asarray(X, dtype=float)
        Y = np.eye(n_classes)[np.asarray(y, dtype=int)]
        n = X.shape[0]
        rng = np.random.default_rng(seed)
        params = init_layers((X.shape[1], *self.hidden, n_classes), rng)
        n_val = int(round(self.validation_fraction * n))
        if n_val >= 1 and n - n_val >= 2:
            perm = rng.permutation(n)
            val, train = perm[:n_val], perm[n_val:]
        else:
            val, train = None, np.arange(n)
        Xt, Yt = X[train], Y[train]
        velocity = [(np.zeros_like(W), np.zeros_like(b)) for W, b in params]
        best = (np.inf, [(W.copy(), b.copy()) for W, b in params])
        since_best = 0
        self.epochs_run_ = 0
        for _ in range(self.epochs):
            self.epochs_run_ += 1
            order = rng.permutation(len(train))
            for start in range(0, len(train), self.batch_size):
                batch = order[start:start + self.batch_size]
                _, grads = loss_and_grads(params, Xt[batch], Yt[batch], self.weight_decay)
                for i, ((W, b), (gW, gb), (vW, vb)) in enumerate(zip(params, grads, velocity)):
                    vW = self.momentum * vW - self.learning_rate * gW
                    vb = self.momentum * vb - self.learning_rate * gb
                    velocity[i] = (vW, vb)
                    params[i] = (W + vW, b + vb)
            if val is None:
                continue
            val_loss, _ = loss_and_grads(params, X[val], Y[val], 0.0)
            if val_loss < best[0]:
                best = (val_loss, [(W.copy(), b.copy()) for W, b in params])
                since_best = 0
            else:
                since_best += 1
                if since_best >= self.patience:
                    break
        self.params_ = best[1] if val is not None else params
        return self

    def decision(self, X):
        return forward(self.params_, np.asarray(X, dtype=float))[0]

    def proba(self, X):
        return np.exp(log_softmax(self.decision(X)))

    def to_params(self):
        return {"layers": [{"W": W.tolist(), "b": b.tolist()} for W, b in self.params_]}

    @classmethod
    def from_params(cls, hyper, p):
        m = cls(**hyper)
        m.params_ = [
            (np.array(l["W"], dtype=float).reshape(len(l["W"]), len(l["b"])),
             np.array(l["b"], dtype=float))
            for l in p["layers"]
        ]
        return m
