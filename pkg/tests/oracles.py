"""Slow, independent reference implementations used as test oracles.

Nothing here imports the code under test; the sensor placements are typed
out cell by cell.
"""
import math
from fractions import Fraction

# (row, col) -> sensor index, 1-based, one entry per occupied cell
PLACEMENTS = {
    (1, 1): 16, (1, 3): 31, (1, 5): 9, (1, 7): 14,
    (2, 2): 24, (2, 4): 23, (2, 6): 1, (2, 8): 12,
    (3, 1): 18, (3, 3): 29, (3, 5): 11, (3, 7): 10,
    (4, 2): 26, (4, 4): 21, (4, 6): 3, (4, 8): 8,
    (5, 1): 20, (5, 3): 27, (5, 5): 15, (5, 7): 6,
    (6, 2): 28, (6, 4): 17, (6, 6): 5, (6, 8): 4,
    (7, 1): 22, (7, 3): 25, (7, 5): 13, (7, 7): 2,
    (8, 2): 30, (8, 4): 19, (8, 6): 7, (8, 8): 0,
}


def brute_com(values):
    num_r = num_c = mass = 0.0
    for (r, c), idx in PLACEMENTS.items():
        m = max(values[idx], 0.0)
        num_r += m * r
        num_c += m * c
        mass += m
    if mass < 1e-9:
        return 4.5, 4.5
    return num_r / mass, num_c / mass


def brute_quadrants(values):
    tl = tr = bl = br = 0.0
    for (r, c), idx in PLACEMENTS.items():
        v = values[idx]
        if r <= 4 and c <= 4:
            tl += v
        elif r <= 4:
            tr += v
        elif c <= 4:
            bl += v
        else:
            br += v
    return tl, tr, bl, br


def brute_edges(values):
    top = bottom = left = right = 0.0
    for (r, c), idx in PLACEMENTS.items():
        v = values[idx]
        if r in (1, 2):
            top += v
        if r in (7, 8):
            bottom += v
        if c in (1, 2):
            left += v
        if c in (7, 8):
            right += v
    return top, bottom, left, right


def brute_grid(values):
    grid = [[0.0] * 8 for _ in range(8)]
    for (r, c), idx in PLACEMENTS.items():
        grid[r - 1][c - 1] = values[idx]
    return grid


# --- exhaustive CART -------------------------------------------------------

def _gini(labels):
    n = len(labels)
    if n == 0:
        return Fraction(0)
    counts = {}
    for l in labels:
        counts[l] = counts.get(l, 0) + 1
    return 1 - sum(Fraction(c, n) ** 2 for c in counts.values())


def _majority(labels):
    counts = {}
    for l in labels:
        counts[l] = counts.get(l, 0) + 1
    best = max(counts.values())
    return min(l for l, c in counts.items() if c == best)


def cart_oracle(X, y):
    """Grow a full-depth Gini tree by trying every (feature, midpoint) split.

    Ties in weighted child impurity go to the lowest feature, then the
    lowest threshold. Impurities are exact fractions.
    """
    rows = list(range(len(X)))

    def grow(idx):
        labels = [y[i] for i in idx]
        if len(set(labels)) <= 1:
            return ("leaf", _majority(labels))
        best = None
        for f in range(len(X[0])):
            vals = sorted(set(X[i][f] for i in idx))
            for a, b in zip(vals, vals[1:]):
                thr = (a + b) / 2.0
                if not a <= thr < b:
                    thr = a
                left = [y[i] for i in idx if X[i][f] <= thr]
                right = [y[i] for i in idx if X[i][f] > thr]
                n = len(idx)
                score = Fraction(len(left), n) * _gini(left) + Fraction(len(right), n) * _gini(right)
                if best is None or score < best[0]:
                    best = (score, f, thr)
        if best is None:
            return ("leaf", _majority(labels))
        _, f, thr = best
        return ("split", f, thr,
                grow([i for i in idx if X[i][f] <= thr]),
                grow([i for i in idx if X[i][f] > thr]))

    return grow(rows)


def cart_predict(tree, x):
    while tree[0] == "split":
        _, f, thr, left, right = tree
        tree = left if x[f] <= thr else right
    return tree[1]


# --- Gaussian naive Bayes --------------------------------------------------

def gnb_posteriors(X, y, x, var_smoothing=1e-9):
    """Closed-form Bayes rule with per-class independent Gaussians."""
    d = len(X[0])
    n = len(X)

    def mean(v):
        return math.fsum(v) / len(v)

    def var(v):
        m = mean(v)
        return math.fsum((t - m) ** 2 for t in v) / len(v)

    eps = var_smoothing * max(var([row[j] for row in X]) for j in range(d))
    classes = sorted(set(y))
    logs = []
    for c in classes:
        rows = [X[i] for i in range(n) if y[i] == c]
        lp = math.log(len(rows) / n)
        for j in range(d):
            col = [r[j] for r in rows]
            mu, s2 = mean(col), var(col) + eps
            lp += -0.5 * math.log(2 * math.pi * s2) - (x[j] - mu) ** 2 / (2 * s2)
        logs.append(lp)
    top = max(logs)
    w = [math.exp(l - top) for l in logs]
    z = math.fsum(w)
    return classes, [v / z for v in w]
