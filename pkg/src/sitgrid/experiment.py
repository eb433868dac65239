"""Declarative experiments: data -> preprocessing -> features -> K-fold CV.

An experiment is described by a JSON document (see ``ExperimentSpec``);
``run_experiment`` executes it and ``write_result`` lays the artifacts out
as ``result.json``, ``report.txt``, ``confusion.csv``, ``plot.csv`` and one
``model_<family>.json`` per classifier.
"""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .classifiers import FAMILIES, ClassifierSpec, dumps_model, fit
from .data import POSTURES, REALISTIC_POSTURES, Dataset, format_float, load_dataset
from .errors import ConfigError, MissingFeature, SitgridError, SpecError, StageError
from .evaluation import cross_validate, kfold_split
from .features import (
    FeatureMatrix,
    FeatureSpec,
    build_feature_matrix,
    feature_importance,
    select_recurrent,
)
from .preprocess import OutlierPolicy, preprocess_pipeline
from .synth import GeneratorConfig, generate

_SPEC_FIELDS = {
    "name", "variant", "dataset", "synth", "normalized", "mats", "recurrent",
    "class_subset", "age_group", "include_participants", "exclude_participants",
    "features", "top_k_features", "classifiers", "k", "seed", "stratified",
    "group_aware", "outlier", "baseline", "importance",
}


@dataclass(frozen=True)
class ExperimentSpec:
    """One cell of the experiment matrix.

    ``dataset`` is a canonical CSV path; when absent, data are synthesized
    from ``synth`` (generator overrides) with the experiment seed.
    """

    name: str = "experiment"
    variant: str = "controlled"
    dataset: str | None = None
    synth: dict | None = None
    normalized: bool = True
    mats: str | None = None
    recurrent: str = "full"
    class_subset: tuple[str, ...] | None = None
    age_group: str = "both"
    include_participants: tuple[str, ...] | None = None
    exclude_participants: tuple[str, ...] = ()
    features: FeatureSpec = field(default_factory=FeatureSpec)
    top_k_features: int | None = None
    classifiers: tuple[ClassifierSpec, ...] = tuple(ClassifierSpec(f) for f in FAMILIES)
    k: int = 10
    seed: int = 0
    stratified: bool = True
    group_aware: bool = False
    outlier: OutlierPolicy = field(default_factory=OutlierPolicy)
    baseline: str | None = None
    importance: bool = True

    def __post_init__(self):
        if self.variant not in ("controlled", "realistic"):
            raise SpecError(f"unknown variant {self.variant!r}")
        mats = self.mats or ("seat" if self.variant == "controlled" else "both")
        object.__setattr__(self, "mats", mats)
        if self.variant == "controlled":
            if mats != "seat":
                raise SpecError("the controlled variant only has the seat mat")
            if self.recurrent != "full":
                raise SpecError("recurrent selection applies to the realistic variant only")
        if self.recurrent not in ("full", "t3", "t234"):
            raise SpecError(f"unknown recurrent selector {self.recurrent!r}")
        labels = POSTURES if self.variant == "controlled" else REALISTIC_POSTURES
        if self.class_subset is not None:
            subset = tuple(self.class_subset)
            bad = set(subset) - set(labels)
            if bad:
                raise SpecError(f"class_subset has labels outside the {self.variant} set: {sorted(bad)}")
            if len(subset) < 2:
                raise SpecError("class_subset needs at least two labels")
            object.__setattr__(self, "class_subset", subset)
        if self.age_group not in ("young", "senior", "both"):
            raise SpecError(f"unknown age group {self.age_group!r}")
        if self.include_participants is not None:
            object.__setattr__(self, "include_participants", tuple(self.include_participants))
        object.__setattr__(self, "exclude_participants", tuple(self.exclude_participants))
        if self.features.mats != mats:
            object.__setattr__(self, "features", FeatureSpec(
                self.features.include_raw, self.features.include_com,
                self.features.include_quadrants, self.features.include_edges,
                mats, self.features.whitelist,
            ))
        if not self.classifiers:
            raise SpecError("at least one classifier is required")
        object.__setattr__(self, "classifiers", tuple(self.classifiers))
        if self.k < 2:
            raise SpecError("k must be >= 2")
        if self.top_k_features is not None and self.top_k_features < 1:
            raise SpecError("top_k_features must be >= 1")
        if self.dataset is None and self.synth is not None:
            GeneratorConfig.from_dict(self.synth, self.variant)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        unknown = set(d) - _SPEC_FIELDS
        if unknown:
            raise SpecError(f"unknown experiment fields {sorted(unknown)}")
        d = dict(d)
        seed = int(d.get("seed", 0))
        if "features" in d:
            d["features"] = FeatureSpec.from_dict(d["features"])
        if "classifiers" in d:
            specs = []
            for c in d["classifiers"]:
                c = {"family": c} if isinstance(c, str) else dict(c)
                c.setdefault("seed", seed)
                specs.append(ClassifierSpec.from_dict(c))
            d["classifiers"] = tuple(specs)
        else:
            d["classifiers"] = tuple(ClassifierSpec(f, seed=seed) for f in FAMILIES)
        if "outlier" in d:
            o = d["outlier"]
            d["outlier"] = OutlierPolicy(o.get("mode", "sigma_multiple"), o.get("k", 4.0), o.get("cap"))
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "ExperimentSpec":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from None
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "variant": self.variant,
            "dataset": self.dataset,
            "synth": self.synth,
            "normalized": self.normalized,
            "mats": self.mats,
            "recurrent": self.recurrent,
            "class_subset": None if self.class_subset is None else list(self.class_subset),
            "age_group": self.age_group,
            "include_participants": (None if self.include_participants is None
                                     else list(self.include_participants)),
            "exclude_participants": list(self.exclude_participants),
            "features": self.features.to_dict(),
            "top_k_features": self.top_k_features,
            "classifiers": [c.to_dict() for c in self.classifiers],
            "k": self.k,
            "seed": self.seed,
            "stratified": self.stratified,
            "group_aware": self.group_aware,
            "outlier": {"mode": self.outlier.mode, "k": self.outlier.k, "cap": self.outlier.cap},
            "baseline": self.baseline,
            "importance": self.importance,
        }


@dataclass
class ClassifierResult:
    family: str
    pooled_accuracy: float
    mean_accuracy: float
    sd_accuracy: float
    fold_accuracies: list[float]
    report: object
    model: object

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "pooled_accuracy": self.pooled_accuracy,
            "mean_accuracy": self.mean_accuracy,
            "sd_accuracy": self.sd_accuracy,
            "fold_accuracies": self.fold_accuracies,
            "report": self.report.to_dict(),
        }


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    n_rows: int
    class_counts: dict
    feature_names: tuple[str, ...]
    classifiers: list[ClassifierResult]
    importance: list
    plot_rows: list
    timing: dict = field(default_factory=dict)

    def accuracy(self, family: str) -> float:
        for c in self.classifiers:
            if c.family == family:
                return c.pooled_accuracy
        raise KeyError(family)

    def to_dict(self) -> dict:
        # timing is left out so identical runs serialize identically
        return {
            "tool_version": __version__,
            "spec": self.spec.to_dict(),
            "n_rows": self.n_rows,
            "class_counts": self.class_counts,
            "feature_names": list(self.feature_names),
            "classifiers": [c.to_dict() for c in self.classifiers],
            "feature_importance": [[n, s] for n, s in self.importance],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    def report_text(self) -> str:
        parts = [f"experiment: {self.spec.name}", f"rows: {self.n_rows}", ""]
        for c in self.classifiers:
            parts.append(f"== {c.family}  pooled accuracy {c.pooled_accuracy:.4f}"
                         f"  (fold mean {c.mean_accuracy:.4f} +/- {c.sd_accuracy:.4f})")
            parts.append(c.report.to_text())
        return "\n".join(parts)

    def confusion_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        for i, c in enumerate(self.classifiers):
            rep = c.report
            if i == 0:
                w.writerow(["family", "true\\pred", *rep.classes])
            for label, row in zip(rep.classes, rep.confusion):
                w.writerow([c.family, label, *[int(v) for v in row]])
        return buf.getvalue()


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except SitgridError as exc:
        raise StageError(name, exc) from exc


def load_experiment_data(spec: ExperimentSpec) -> Dataset:
    if spec.dataset is not None:
        return load_dataset(spec.dataset, spec.variant)
    overrides = dict(spec.synth or {})
    overrides.setdefault("seed", spec.seed)
    return generate(spec.variant, GeneratorConfig.from_dict(overrides, spec.variant))


def prepare_features(spec: ExperimentSpec, ds: Dataset | None = None):
    """Run the data stages of ``spec`` and return (dataset, feature matrix).

    Preprocessing runs on each participant's whole file before the class
    subset is applied, so baselines do not depend on which classes are kept.
    """
    if ds is None:
        ds = _stage("load", load_experiment_data, spec)

    def keep_participant(r):
        if spec.include_participants is not None and r.participant_id not in spec.include_participants:
            return False
        if r.participant_id in spec.exclude_participants:
            return False
        return spec.age_group == "both" or r.age_group == spec.age_group

    ds = _stage("filter", ds.filter, keep_participant)
    ds = _stage("preprocess", preprocess_pipeline, ds, spec.outlier, spec.normalized, spec.baseline)
    if spec.class_subset is not None:
        subset = set(spec.class_subset)
        ds = _stage("class_subset", ds.filter, lambda r: r.posture in subset)
    if spec.variant == "realistic":
        ds = _stage("recurrent", select_recurrent, ds, spec.recurrent)
    fm = _stage("featurize", build_feature_matrix, ds, spec.features)
    return ds, fm


def run_experiment(spec: ExperimentSpec, ds: Dataset | None = None) -> ExperimentResult:
    timing = {}
    t0 = time.perf_counter()
    ds, fm = prepare_features(spec, ds)
    if len(fm) == 0:
        raise StageError("featurize", SpecError("no rows left after filtering"))
    timing["data"] = time.perf_counter() - t0

    importance = []
    if spec.importance or spec.top_k_features:
        t = time.perf_counter()
        importance = _stage("importance", feature_importance, fm, None, spec.seed)
        timing["importance"] = time.perf_counter() - t
    if spec.top_k_features:
        keep = [n for n, _ in importance[: spec.top_k_features]]
        fm = fm.select([n for n in fm.names if n in keep])

    plan = _stage("split", kfold_split, len(fm), fm.labels, fm.groups, spec.k,
                  spec.stratified, spec.group_aware, spec.seed)
    classes = sorted(set(fm.labels))
    results = []
    for cspec in spec.classifiers:
        t = time.perf_counter()
        cv = _stage(f"cross_validate:{cspec.family}", cross_validate, fm, cspec, plan)
        model = _stage(f"fit:{cspec.family}", fit, cspec, fm)
        results.append(ClassifierResult(
            cspec.family, cv.pooled_accuracy, cv.mean_accuracy, cv.sd_accuracy,
            cv.fold_accuracies, cv.report(classes), model,
        ))
        timing[cspec.family] = time.perf_counter() - t

    plot_fm = build_feature_matrix(ds, FeatureSpec(False, True, False, False, "seat"))
    counts = {c: fm.labels.count(c) for c in classes}
    timing["total"] = time.perf_counter() - t0
    return ExperimentResult(spec, len(fm), counts, fm.names, results, importance,
                            posture_plot_rows(plot_fm), timing)


def posture_plot_rows(fm: FeatureMatrix):
    """(label, seat CoM row, seat CoM col) per sample."""
    missing = [n for n in ("seat_com_row", "seat_com_col") if n not in fm.names]
    if missing:
        raise MissingFeature(f"posture plot needs {missing}")
    rows = fm.column("seat_com_row")
    cols = fm.column("seat_com_col")
    return [(l, float(r), float(c)) for l, r, c in zip(fm.labels, rows, cols)]


def dumps_posture_plot(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["class", "com_row", "com_col"])
    for label, r, c in rows:
        w.writerow([label, format_float(r), format_float(c)])
    return buf.getvalue()


def emit_posture_plot(fm: FeatureMatrix, out) -> int:
    """Write the seat center-of-mass scatter data as CSV; returns the row count."""
    rows = posture_plot_rows(fm)
    Path(out).write_bytes(dumps_posture_plot(rows).encode("utf-8"))
    return len(rows)


def write_result(result: ExperimentResult, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "result.json").write_bytes(result.to_json().encode("utf-8"))
    (out / "report.txt").write_bytes(result.report_text().encode("utf-8"))
    (out / "confusion.csv").write_bytes(result.confusion_csv().encode("utf-8"))
    (out / "plot.csv").write_bytes(dumps_posture_plot(result.plot_rows).encode("utf-8"))
    for c in result.classifiers:
        (out / f"model_{c.family}.json").write_bytes(dumps_model(c.model).encode("utf-8"))
    return out


def percent(x: float) -> int:
    """Nearest integer percent, halves rounded up."""
    return int(math.floor(x * 100 + 0.5))


@dataclass
class MatrixSummary:
    names: list[str]
    families: list[str]
    accuracies: dict  # name -> family -> float
    errors: dict  # name -> message
    results: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        rows = []
        for name in self.names:
            if name in self.errors:
                rows.append({"name": name, "error": self.errors[name]})
                continue
            accs = self.accuracies[name]
            rows.append({
                "name": name,
                "accuracy": {f: accs[f] for f in self.families if f in accs},
                "percent": {f: percent(accs[f]) for f in self.families if f in accs},
            })
        return {"tool_version": __version__, "families": self.families, "rows": rows}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    def to_text(self) -> str:
        width = max([len(n) for n in self.names] + [10])
        lines = [f"{'experiment':<{width}} " + " ".join(f"{f.upper():>5}" for f in self.families)]
        for name in self.names:
            if name in self.errors:
                lines.append(f"{name:<{width}} FAILED: {self.errors[name]}")
                continue
            accs = self.accuracies[name]
            cells = [f"{percent(accs[f]):>4}%" if f in accs else f"{'-':>5}" for f in self.families]
            lines.append(f"{name:<{width}} " + " ".join(cells))
        return "\n".join(lines) + "\n"


def run_matrix(specs, out_dir=None) -> MatrixSummary:
    """Run every spec; a failing spec is recorded and the rest still run."""
    specs = list(specs)
    if not specs:
        raise ConfigError("the experiment matrix is empty")
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        raise ConfigError("experiment names must be unique")
    families = []
    for s in specs:
        for c in s.classifiers:
            if c.family not in families:
                families.append(c.family)
    accuracies, errors, results = {}, {}, {}
    for s in specs:
        try:
            res = run_experiment(s)
        except SitgridError as exc:
            errors[s.name] = str(exc)
            continue
        results[s.name] = res
        accuracies[s.name] = {c.family: c.pooled_accuracy for c in res.classifiers}
        if out_dir is not None:
            write_result(res, Path(out_dir) / s.name)
    summary = MatrixSummary(names, families, accuracies, errors, results)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "summary.json").write_bytes(summary.to_json().encode("utf-8"))
        (out / "summary.txt").write_bytes(summary.to_text().encode("utf-8"))
    return summary


def bundled_matrix() -> list[ExperimentSpec]:
    """The bundled experiment specs in ``sitgrid/matrix``, ordered by file name."""
    root = resources.files("sitgrid") / "matrix"
    files = sorted((p for p in root.iterdir() if p.name.endswith(".json")), key=lambda p: p.name)
    return [ExperimentSpec.from_dict(json.loads(p.read_text(encoding="utf-8"))) for p in files]


def load_specs(path) -> list[ExperimentSpec]:
    """Specs from a JSON file (object or list of objects) or a directory of them."""
    p = Path(path)
    if p.is_dir():
        return [s for f in sorted(p.glob("*.json")) for s in load_specs(f)]
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: invalid JSON: {exc}") from None
    docs = doc if isinstance(doc, list) else [doc]
    return [ExperimentSpec.from_dict(d) for d in docs]
