"""K-fold cross-validation, classification reports and their renderings."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .classifiers import ClassifierSpec, fit, predict
from .errors import GroupLargerThanFold, LengthMismatch, SitgridError, TooFewRows


@dataclass(frozen=True, eq=False)
class FoldPlan:
    k: int
    assignments: np.ndarray
    stratified: bool = True
    group_aware: bool = False
    seed: int = 0

    def __post_init__(self):
        a = np.asarray(self.assignments, dtype=int)
        a.setflags(write=False)
        object.__setattr__(self, "assignments", a)

    def __len__(self):
        return self.k

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)

    def splits(self):
        for f in range(self.k):
            yield self.train_indices(f), self.test_indices(f)

    def fold_sizes(self) -> np.ndarray:
        return np.bincount(self.assignments, minlength=self.k)


def fold_seed(root_seed: int, fold: int) -> int:
    """Seed for fold ``fold``, derived from the root seed."""
    return int(np.random.SeedSequence([root_seed, fold]).generate_state(1, np.uint64)[0] >> 1)


def kfold_split(n, labels=None, groups=None, k=10, stratified=True, group_aware=False, seed=0):
    """Deterministic K-fold partition of ``n`` rows.

    Rows are shuffled (within each class when stratified), laid end to end
    class by class and dealt to folds round-robin. That keeps fold sizes
    within one of each other overall and per class. With ``group_aware``
    whole groups are assigned, largest first, to the currently smallest
    fold; stratification is then ignored.
    """
    if k < 2:
        raise TooFewRows("k must be >= 2")
    if n < k:
        raise TooFewRows(f"cannot split {n} rows into {k} folds")
    rng = np.random.default_rng(seed)
    assign = np.empty(n, dtype=int)
    if group_aware:
        if groups is None or len(groups) != n:
            raise LengthMismatch("group-aware folding needs one group key per row")
        keys = list(dict.fromkeys(groups))
        members: dict = {g: [] for g in keys}
        for i, g in enumerate(groups):
            members[g].append(i)
        cap = -(-n // k)
        too_big = [g for g in keys if len(members[g]) > cap]
        if too_big:
            raise GroupLargerThanFold(f"group {too_big[0]!r} exceeds fold size {cap}")
        if len(keys) < k:
            raise TooFewRows(f"{len(keys)} groups cannot fill {k} folds")
        shuffled = [keys[i] for i in rng.permutation(len(keys))]
        shuffled.sort(key=lambda g: -len(members[g]))
        sizes = np.zeros(k, dtype=int)
        for g in shuffled:
            f = int(np.argmin(sizes))
            assign[members[g]] = f
            sizes[f] += len(members[g])
    else:
        if stratified:
            if labels is None or len(labels) != n:
                raise LengthMismatch("stratified folding needs one label per row")
            labels = list(labels)
            order = []
            for c in sorted(set(labels)):
                idx = np.array([i for i, l in enumerate(labels) if l == c])
                order.extend(idx[rng.permutation(len(idx))])
            order = np.array(order, dtype=int)
        else:
            order = rng.permutation(n)
        assign[order] = np.arange(n) % k
    return FoldPlan(k, assign, stratified and not group_aware, group_aware, seed)


@dataclass
class ClassificationReport:
    classes: tuple[str, ...]
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    confusion: np.ndarray
    accuracy: float
    macro: dict
    weighted: dict
    zero_division: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return int(self.support.sum())

    def to_dict(self) -> dict:
        return {
            "classes": list(self.classes),
            "per_class": {
                c: {
                    "precision": float(self.precision[i]),
                    "recall": float(self.recall[i]),
                    "f1": float(self.f1[i]),
                    "support": int(self.support[i]),
                }
                for i, c in enumerate(self.classes)
            },
            "macro_avg": self.macro,
            "weighted_avg": self.weighted,
            "accuracy": self.accuracy,
            "n": self.n,
            "confusion": self.confusion.tolist(),
            "zero_division": list(self.zero_division),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    def to_text(self, digits: int = 2) -> str:
        """Plain-text table with per-class rows and an ``avg / total`` line."""
        width = max([len(c) for c in self.classes] + [len("avg / total")])
        head = f"{'':>{width}} {'precision':>9} {'recall':>9} {'f1-score':>9} {'support':>9}"
        lines = [head, ""]
        for i, c in enumerate(self.classes):
            lines.append(
                f"{c:>{width}} {self.precision[i]:>9.{digits}f} {self.recall[i]:>9.{digits}f}"
                f" {self.f1[i]:>9.{digits}f} {int(self.support[i]):>9d}"
            )
        w = self.weighted
        lines.append("")
        lines.append(
            f"{'avg / total':>{width}} {w['precision']:>9.{digits}f} {w['recall']:>9.{digits}f}"
            f" {w['f1']:>9.{digits}f} {self.n:>9d}"
        )
        lines.append("")
        lines.append(f"accuracy: {self.accuracy:.{digits}f}")
        return "\n".join(lines) + "\n"

    def confusion_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["true\\pred", *self.classes])
        for c, row in zip(self.classes, self.confusion):
            w.writerow([c, *[int(v) for v in row]])
        return buf.getvalue()


def _safe_div(num, den, what, classes, flags):
    out = np.zeros_like(num, dtype=float)
    for i in range(len(num)):
        if den[i] == 0:
            flags.append(f"{what}:{classes[i]}")
        else:
            out[i] = num[i] / den[i]
    return out


def classification_report(y_true, y_pred, classes=None) -> ClassificationReport:
    """Per-class precision/recall/F1 with macro and support-weighted averages.

    Undefined ratios (zero denominators) are reported as 0 and listed in
    ``zero_division``.
    """
    y_true, y_pred = list(y_true), list(y_pred)
    if len(y_true) != len(y_pred):
        raise LengthMismatch(f"{len(y_true)} true labels vs {len(y_pred)} predictions")
    if classes is None:
        classes = sorted(set(y_true) | set(y_pred))
    classes = tuple(classes)
    pos = {c: i for i, c in enumerate(classes)}
    unknown = (set(y_true) | set(y_pred)) - set(classes)
    if unknown:
        raise LengthMismatch(f"labels outside the class order: {sorted(unknown)}")
    C = len(classes)
    cm = np.zeros((C, C), dtype=int)
    for t, p in zip(y_true, y_pred):
        cm[pos[t], pos[p]] += 1
    tp = np.diag(cm).astype(float)
    support = cm.sum(axis=1)
    predicted = cm.sum(axis=0)
    flags: list[str] = []
    precision = _safe_div(tp, predicted, "precision", classes, flags)
    recall = _safe_div(tp, support, "recall", classes, flags)
    f1 = np.zeros(C)
    for i in range(C):
        s = precision[i] + recall[i]
        if s > 0:
            f1[i] = 2 * precision[i] * recall[i] / s
        else:
            flags.append(f"f1:{classes[i]}")
    n = len(y_true)
    accuracy = float(np.trace(cm) / n) if n else 0.0
    macro = {k: float(v.mean()) if C else 0.0
             for k, v in (("precision", precision), ("recall", recall), ("f1", f1))}
    wts = support / n if n else np.zeros(C)
    weighted = {k: float(v @ wts)
                for k, v in (("precision", precision), ("recall", recall), ("f1", f1))}
    return ClassificationReport(classes, precision, recall, f1, support, cm,
                                accuracy, macro, weighted, flags)


class FoldError(SitgridError):
    def __init__(self, fold, cause):
        super().__init__(f"fold {fold}: {cause}")
        self.fold = fold
        self.cause = cause


@dataclass
class CVResult:
    family: str
    fold_accuracies: list[float]
    fold_sizes: list[int]
    predictions: list[str]
    labels: tuple[str, ...]

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.fold_accuracies))

    @property
    def sd_accuracy(self) -> float:
        return float(np.std(self.fold_accuracies))

    @property
    def pooled_accuracy(self) -> float:
        hits = sum(p == t for p, t in zip(self.predictions, self.labels))
        return hits / len(self.labels)

    def report(self, classes=None) -> ClassificationReport:
        return classification_report(self.labels, self.predictions, classes)


def cross_validate(fm, spec: ClassifierSpec, plan: FoldPlan) -> CVResult:
    """Fit on each fold's training rows and predict its test rows.

    Each fold trains with a seed derived from ``spec.seed`` and the fold id.
    """
    if len(plan.assignments) != len(fm):
        raise LengthMismatch("fold plan does not match the feature matrix")
    pooled: list = [None] * len(fm)
    accs, sizes = [], []
    for f, (train, test) in enumerate(plan.splits()):
        try:
            fold_spec = ClassifierSpec(spec.family, spec.params, fold_seed(spec.seed, f))
            model = fit(fold_spec, fm.take(train))
            pred = predict(model, fm.take(test))
        except SitgridError as exc:
            raise FoldError(f, exc) from exc
        for i, p in zip(test, pred):
            pooled[i] = p
        truth = [fm.labels[i] for i in test]
        accs.append(sum(p == t for p, t in zip(pred, truth)) / len(test))
        sizes.append(len(test))
    return CVResult(spec.family, accs, sizes, pooled, tuple(fm.labels))
