"""Command-line entry point: ``sitgrid <command> ...``.

Exit codes: 0 success, 1 usage/configuration error, 2 data error,
3 stage failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

from . import __version__
from .classifiers import FAMILIES, ClassifierSpec, fit, load_model, predict, save_model
from .data import load_dataset, save_dataset
from .errors import ConfigError, ConvergenceWarning, DataError, SitgridError, StageError
from .evaluation import classification_report, cross_validate, kfold_split
from .experiment import (
    ExperimentSpec,
    bundled_matrix,
    emit_posture_plot,
    load_specs,
    run_experiment,
    run_matrix,
    write_result,
)
from .features import (
    RECURRENT_SELECTORS,
    FeatureSpec,
    build_feature_matrix,
    load_feature_matrix,
    save_feature_matrix,
    select_recurrent,
)
from .preprocess import OutlierPolicy, preprocess_pipeline
from .synth import GeneratorConfig, generate

log = logging.getLogger("sitgrid")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_STAGE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _read_json(path):
    if path is None:
        return {}
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise UsageError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None


def _write_text(path, text):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_bytes(text.encode("utf-8"))


def cmd_synth(args):
    overrides = _read_json(args.config)
    if args.seed is not None:
        overrides["seed"] = args.seed
    cfg = GeneratorConfig.from_dict(overrides, args.variant)
    ds = generate(args.variant, cfg)
    save_dataset(ds, args.out)
    log.info("wrote %d %s records to %s", len(ds), args.variant, args.out)


def cmd_preprocess(args):
    ds = load_dataset(args.input)
    if args.outlier_cap is not None:
        policy = OutlierPolicy.absolute(args.outlier_cap)
    else:
        policy = OutlierPolicy.sigma(args.outlier_k)
    out = preprocess_pipeline(ds, policy, not args.no_normalize, args.baseline)
    save_dataset(out, args.out)


def cmd_featurize(args):
    ds = load_dataset(args.input)
    if ds.variant == "realistic":
        ds = select_recurrent(ds, args.recurrent)
    elif args.recurrent != "full":
        raise UsageError("--recurrent applies only to realistic data")
    groups = [g.strip() for g in args.features.split(",") if g.strip()]
    whitelist = args.whitelist.split(",") if args.whitelist else None
    mats = args.mats or ("seat" if ds.variant == "controlled" else "both")
    spec = FeatureSpec.from_groups(groups, mats, whitelist)
    save_feature_matrix(build_feature_matrix(ds, spec), args.out)


def _classifier_spec(args):
    params = _read_json(args.config)
    return ClassifierSpec(args.family, params, args.seed or 0)


def cmd_train(args):
    fm = load_feature_matrix(args.input)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        model = fit(_classifier_spec(args), fm)
    save_model(model, args.out)


def cmd_predict(args):
    model = load_model(args.model)
    fm = load_feature_matrix(args.input)
    labels = predict(model, fm)
    _write_text(args.out, "prediction\n" + "".join(f"{l}\n" for l in labels))


def cmd_evaluate(args):
    fm = load_feature_matrix(args.input)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.model:
        model = load_model(args.model)
        pred = predict(model, fm)
        report = classification_report(fm.labels, pred, sorted(set(fm.labels) | set(model.classes)))
        summary = {"mode": "holdout", "model": Path(args.model).name, "accuracy": report.accuracy}
    else:
        if not args.family:
            raise UsageError("evaluate needs --model or --family")
        spec = _classifier_spec(args)
        plan = kfold_split(len(fm), fm.labels, fm.groups, args.k,
                           not args.no_stratify, args.group_aware, args.seed or 0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConvergenceWarning)
            cv = cross_validate(fm, spec, plan)
        report = cv.report(sorted(set(fm.labels)))
        summary = {
            "mode": "kfold",
            "family": spec.family,
            "k": args.k,
            "pooled_accuracy": cv.pooled_accuracy,
            "mean_accuracy": cv.mean_accuracy,
            "sd_accuracy": cv.sd_accuracy,
            "fold_accuracies": cv.fold_accuracies,
        }
    summary["report"] = report.to_dict()
    _write_text(out / "report.json", json.dumps(summary, indent=1, sort_keys=True) + "\n")
    _write_text(out / "report.txt", report.to_text())
    _write_text(out / "confusion.csv", report.confusion_csv())


def _apply_seed(spec, seed):
    if seed is None:
        return spec
    d = spec.to_dict()
    d["seed"] = seed
    for c in d["classifiers"]:
        c["seed"] = seed
    return ExperimentSpec.from_dict(d)


def cmd_experiment(args):
    if not args.config:
        raise UsageError("experiment needs --config SPEC.json")
    specs = load_specs(args.config)
    if len(specs) != 1:
        raise UsageError("experiment expects exactly one spec; use 'matrix' for several")
    spec = _apply_seed(specs[0], args.seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        result = run_experiment(spec)
    write_result(result, args.out)
    for c in result.classifiers:
        print(f"{c.family}: {c.pooled_accuracy:.4f}")
    log.info("timing (s): %s", {k: round(v, 2) for k, v in result.timing.items()})


def cmd_matrix(args):
    specs = load_specs(args.config) if args.config else bundled_matrix()
    if args.only:
        wanted = set(args.only)
        specs = [s for s in specs if s.name in wanted]
        if not specs:
            raise UsageError("no experiment matches --only")
    specs = [_apply_seed(s, args.seed) for s in specs]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        summary = run_matrix(specs, args.out)
    sys.stdout.write(summary.to_text())
    if summary.errors:
        return EXIT_STAGE
    return EXIT_OK


def cmd_plot(args):
    fm = load_feature_matrix(args.input)
    emit_posture_plot(fm, args.out)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="random seed")
    common.add_argument("--config", default=None, help="JSON configuration file")
    common.add_argument("--out", required=True, help="output file or directory")

    p = _Parser(prog="sitgrid", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"sitgrid {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth", parents=[common], help="generate a synthetic dataset")
    s.add_argument("--variant", choices=("controlled", "realistic"), required=True)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("preprocess", parents=[common], help="outlier replacement and normalization")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--no-normalize", action="store_true")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--outlier-k", type=float, default=4.0)
    g.add_argument("--outlier-cap", type=float, default=None)
    s.add_argument("--baseline", choices=("still", "all"), default=None)
    s.set_defaults(func=cmd_preprocess)

    s = sub.add_parser("featurize", parents=[common], help="build a feature matrix")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--features", default="raw,com,quadrants,edges")
    s.add_argument("--mats", choices=("seat", "back", "both"), default=None)
    s.add_argument("--recurrent", choices=RECURRENT_SELECTORS, default="full")
    s.add_argument("--whitelist", default=None, help="comma-separated feature names")
    s.set_defaults(func=cmd_featurize)

    s = sub.add_parser("train", parents=[common], help="fit one classifier and save it")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--family", choices=FAMILIES, required=True)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("predict", parents=[common], help="label a feature file with a saved model")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--model", required=True)
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("evaluate", parents=[common],
                       help="report for a saved model, or K-fold CV of a family")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--model", default=None)
    s.add_argument("--family", choices=FAMILIES, default=None)
    s.add_argument("--k", type=int, default=10)
    s.add_argument("--no-stratify", action="store_true")
    s.add_argument("--group-aware", action="store_true")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("experiment", parents=[common], help="run one experiment spec")
    s.set_defaults(func=cmd_experiment)

    s = sub.add_parser("matrix", parents=[common],
                       help="run a set of experiment specs (default: the bundled matrix)")
    s.add_argument("--only", nargs="*", default=None, help="experiment names to run")
    s.set_defaults(func=cmd_matrix)

    s = sub.add_parser("plot", parents=[common], help="seat center-of-mass scatter data")
    s.add_argument("--in", dest="input", required=True)
    s.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # --help/--version exit 0; argument errors exit EXIT_USAGE
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        code = args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"sitgrid: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StageError as exc:
        print(f"sitgrid: {exc}", file=sys.stderr)
        return EXIT_DATA if isinstance(exc.cause, DataError) and exc.stage == "load" else EXIT_STAGE
    except (DataError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"sitgrid: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SitgridError as exc:
        print(f"sitgrid: {exc}", file=sys.stderr)
        return EXIT_STAGE
    return code or EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
