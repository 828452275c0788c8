"""Command-line entry point.

Subcommands: analyze, regress, select, importance, simulate. Exit codes:
0 ok, 2 data error, 3 convergence failure, 4 rank-deficient design.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .core import reml_fit
from .dataset_io import SchemaConfig, SimFeature, load_dataset, load_schema, simulate_dataset, write_dataset
from .errors import ConvergenceError, DataError, RankDeficiencyError
from .regression import CRITERIA, encode_features, forward_select, permutation_importance
from .reporting import (PlotSpec, dumps, forest_plot, funnel_plot, importance_plot, regression_plot,
                        selection_plot, summary_table)

EXIT_OK, EXIT_DATA, EXIT_CONVERGENCE, EXIT_RANK = 0, 2, 3, 4
OUT_ENV = "MLMETA_OUT"


def _provenance(args, command) -> dict:
    keys = ("input", "schema", "out", "alpha", "criterion", "features", "exclude_study",
            "folds", "permutations", "seed")
    cfg = {k: getattr(args, k) for k in keys if hasattr(args, k)}
    return {"command": command, "version": __version__, "config": cfg}


def _load(args):
    schema = load_schema(args.schema) if args.schema else SchemaConfig()
    dataset = load_dataset(args.input, schema)
    if args.exclude_study:
        dataset = dataset.exclude(args.exclude_study)
    return dataset, schema


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, obj):
    path.write_text(dumps(obj), encoding="utf-8")


def _with_provenance(data: dict, prov: dict) -> dict:
    return {**data, "provenance": prov}


def _write_plot(output, stem: Path, prov):
    stem.with_suffix(".svg").write_text(output.svg, encoding="utf-8")
    _write_json(stem.with_suffix(".json"), _with_provenance(output.data, prov))


def _parse_features(text):
    if not text:
        return []
    return [f.strip() for f in text.split(",") if f.strip()]


def cmd_analyze(args) -> int:
    dataset, _ = _load(args)
    out = _outdir(args)
    prov = _provenance(args, "analyze")
    fit = reml_fit(dataset)
    text, data = summary_table(fit, alpha=args.alpha)
    (out / "summary.txt").write_text(text, encoding="utf-8")
    _write_json(out / "summary.json", _with_provenance(data, prov))
    _write_plot(forest_plot(fit, dataset, PlotSpec("forest", alpha=args.alpha)), out / "forest", prov)
    _write_plot(funnel_plot(fit, dataset, PlotSpec("funnel", alpha=args.alpha)), out / "funnel", prov)
    print(text, end="")
    return EXIT_OK


def cmd_regress(args) -> int:
    dataset, schema = _load(args)
    features = _parse_features(args.features)
    specs = schema.feature_map
    undeclared = [f for f in features if f not in specs]
    if undeclared:
        raise DataError(f"features not declared in schema: {', '.join(undeclared)}")
    if not features:
        return cmd_analyze(args)
    out = _outdir(args)
    prov = _provenance(args, "regress")
    null_fit = reml_fit(dataset)
    X = encode_features(dataset, specs, features)
    fit = reml_fit(dataset, X)
    text, data = summary_table(null_fit, fit, alpha=args.alpha)
    (out / "summary.txt").write_text(text, encoding="utf-8")
    _write_json(out / "summary.json", _with_provenance(data, prov))
    _write_plot(forest_plot(fit, dataset, PlotSpec("forest", alpha=args.alpha)), out / "forest", prov)
    for name in features:
        if specs[name].kind == "numeric":
            _write_plot(regression_plot(fit, dataset, name, PlotSpec("regression", alpha=args.alpha)),
                        out / f"regression_{name}", prov)
    print(text, end="")
    return EXIT_OK


def cmd_select(args) -> int:
    dataset, schema = _load(args)
    if not schema.features:
        raise DataError("schema declares no features to select from")
    out = _outdir(args)
    prov = _provenance(args, "select")
    path = forward_select(dataset, schema.feature_map, args.criterion)
    _write_json(out / "selection.json", _with_provenance(path.to_dict(), prov))
    lines = [f"criterion: {path.criterion} ({path.likelihood} likelihood)",
             f"null: AIC={path.null.aic:.3f} BIC={path.null.bic:.3f} RMSE={path.null.rmse:.5f}"]
    for step in path.steps:
        lines.append(f"step {step.step}: base = [{', '.join(step.base_model)}] "
                     f"({path.criterion}={step.base_value:.3f})")
        for c in sorted(step.candidates, key=lambda c: (not c.ok, c.value(path.criterion) if c.ok else 0.0, c.feature)):
            if c.ok:
                lines.append(f"  + {c.feature:<20} AIC={c.aic:.3f} BIC={c.bic:.3f} RMSE={c.rmse:.5f}")
            else:
                lines.append(f"  + {c.feature:<20} skipped: {c.error}")
        verdict = "accepted" if step.accepted else "rejected"
        lines.append(f"  -> {step.chosen} {verdict}")
    lines.append(f"selected: [{', '.join(path.selected)}]")
    text = "\n".join(lines) + "\n"
    (out / "selection.txt").write_text(text, encoding="utf-8")
    _write_plot(selection_plot(path, PlotSpec("selection", alpha=args.alpha)), out / "selection_plot", prov)
    print(text, end="")
    return EXIT_OK


def cmd_importance(args) -> int:
    dataset, schema = _load(args)
    features = _parse_features(args.features) or [f.name for f in schema.features]
    if not features:
        raise DataError("no features to evaluate")
    out = _outdir(args)
    prov = _provenance(args, "importance")
    report = permutation_importance(dataset, schema.feature_map, features, K=args.folds,
                                    B=args.permutations, seed=args.seed)
    _write_json(out / "importance.json", _with_provenance(report.to_dict(), prov))
    lines = [f"K={report.folds} B={report.permutations} seed={report.seed}",
             f"{'feature':<20} {'mean':>8} {'p2.5':>8} {'p25':>8} {'p75':>8} {'p97.5':>8}"]
    for f in report.ordered():
        pc = f.percentiles
        lines.append(f"{f.feature:<20} {f.mean:8.4f} {pc[2.5]:8.4f} {pc[25.0]:8.4f} {pc[75.0]:8.4f} {pc[97.5]:8.4f}")
    text = "\n".join(lines) + "\n"
    (out / "importance.txt").write_text(text, encoding="utf-8")
    _write_plot(importance_plot(report, PlotSpec("importance", alpha=args.alpha)), out / "importance_plot", prov)
    print(text, end="")
    return EXIT_OK


def _range_or_int(text):
    parts = [int(p) for p in str(text).split(":")]
    if len(parts) == 1:
        return parts[0]
    if len(parts) == 2:
        return tuple(parts)
    raise argparse.ArgumentTypeError(f"expected N or LOW:HIGH, got {text!r}")


def cmd_simulate(args) -> int:
    out = _outdir(args)
    feats = []
    if args.planted_maxprev is not None:
        feats.append(SimFeature("maxprev", "numeric", effect=args.planted_maxprev, low=0.142, high=0.995))
    for i in range(args.noise_features):
        feats.append(SimFeature(f"noise{i + 1}", "numeric", low=0.0, high=1.0))
    mu = args.mu
    if mu is None:
        # intercepts of the reference null fit and maxprev regression
        mu = 1.2384 if args.planted_maxprev is None else 0.9796
    dataset, truth = simulate_dataset(args.studies, args.trials, args.n, mu=mu,
                                      sigma2_xi=args.sigma2_xi, sigma2_zeta=args.sigma2_zeta,
                                      features=feats, seed=args.seed)
    schema = SchemaConfig(features=tuple(f.spec() for f in feats))
    write_dataset(dataset, out / "dataset.csv", schema)
    (out / "schema.json").write_text(dumps(schema.to_dict()), encoding="utf-8")
    prov = {"command": "simulate", "version": __version__,
            "config": {k: (list(v) if isinstance(v, tuple) else v) for k, v in vars(args).items()
                       if k not in ("func",)}}
    _write_json(out / "truth.json", {**truth, "provenance": prov})
    print(f"wrote {dataset.m} trials in {dataset.h} studies to {out / 'dataset.csv'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    default_out = os.environ.get(OUT_ENV, "mlmeta_out")
    parser = argparse.ArgumentParser(prog="mlmeta", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_input=True):
        if with_input:
            p.add_argument("--input", required=True, help="delimited trial file")
            p.add_argument("--schema", help="JSON schema declaring features")
            p.add_argument("--exclude-study", action="append", default=[], metavar="ID",
                           help="drop a study before fitting (repeatable)")
        p.add_argument("--out", default=default_out, help=f"output directory (env {OUT_ENV})")
        p.add_argument("--alpha", type=float, default=0.05, help="significance level for intervals")

    p = sub.add_parser("analyze", help="fit the null three-level model")
    common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("regress", help="fit a meta-regression on chosen features")
    common(p)
    p.add_argument("--features", default="", help="comma-separated feature names")
    p.set_defaults(func=cmd_regress)

    p = sub.add_parser("select", help="forward feature selection")
    common(p)
    p.add_argument("--criterion", default="AIC", type=str.upper, choices=CRITERIA)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("importance", help="K-fold permutation feature importance")
    common(p)
    p.add_argument("--features", default="", help="comma-separated features (default: all declared)")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--permutations", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_importance)

    p = sub.add_parser("simulate", help="write a synthetic dataset and its ground truth")
    common(p, with_input=False)
    p.add_argument("--studies", type=int, default=20)
    p.add_argument("--trials", type=_range_or_int, default=(1, 8), help="N or LOW:HIGH per study")
    p.add_argument("--n", type=_range_or_int, default=(100, 2000), help="N or LOW:HIGH instances per trial")
    p.add_argument("--mu", type=float, default=None,
                   help="population DA-scale mean (default 1.2384, or 0.9796 with --planted-maxprev)")
    p.add_argument("--sigma2-xi", type=float, default=0.0173)
    p.add_argument("--sigma2-zeta", type=float, default=0.0099)
    p.add_argument("--planted-maxprev", type=float, default=None,
                   help="add a maxprev feature with this DA-scale effect")
    p.add_argument("--noise-features", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except RankDeficiencyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RANK
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (DataError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
