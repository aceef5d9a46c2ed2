"""Command line entry point.

Every subcommand reads an optional JSON config (``--config``), applies
``--set key=value`` overrides and ``--seed``, then writes its artifacts
under ``--out``. Exit codes: 0 success, 2 configuration error, 3 data
error, 4 any other failure.
"""
import argparse
import csv
import json
import os
import sys

from . import harness, modelselect, plots
from .errors import ConfigError, DataError
from .treerank import RankingTree

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_RUNTIME = 0, 2, 3, 4


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _config(args):
    cfg = harness.ExperimentConfig.load(args.config) if args.config else harness.ExperimentConfig()
    over = {}
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        over[key.strip()] = _parse_value(value)
    if args.seed is not None:
        over["seed"] = args.seed
    if getattr(args, "paper_scale", False):
        cfg = cfg.paper_scale()
    return cfg.replace(**over) if over else cfg


def _write(path, text):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as fh:
        fh.write(text)


def _dataset(cfg, path):
    if path:
        return harness.ingest_csv(path, {"sensors": cfg.sensors})
    train, _, _ = harness.load_data(cfg)
    return train


def cmd_generate(args, cfg):
    if cfg.source != "synth":
        raise ConfigError("generate needs a synthetic data source")
    train, test, spec = harness.load_data(cfg)
    spec_seed, s_train, s_test, _ = cfg.seeds()
    os.makedirs(args.out, exist_ok=True)
    _write(os.path.join(args.out, "spec.json"), spec.to_json(indent=1) + "\n")
    harness.export_dataset(train, spec, os.path.join(args.out, "train"), {"spec": spec_seed, "sample": s_train})
    harness.export_dataset(test, spec, os.path.join(args.out, "test"), {"spec": spec_seed, "sample": s_test})
    return ["spec.json", "train.csv", "train.json", "test.csv", "test.json"]


def cmd_train(args, cfg):
    data = _dataset(cfg, args.data)
    _, _, _, runs = cfg.seeds()
    tree = harness.fit_learner(cfg, data, int(runs.generate_state(1)[0]))
    _write(args.out, tree.to_json(indent=1) + "\n")
    return [args.out]


def cmd_score(args, cfg):
    try:
        with open(args.tree) as fh:
            tree = RankingTree.from_json(fh.read())
    except (OSError, ValueError, KeyError) as exc:
        raise DataError(f"cannot load tree {args.tree}: {exc}") from None
    data = harness.ingest_csv(args.data, {"sensors": tree.params.get("n_sensors", 1)})
    scores = tree.score(data)
    os.makedirs(os.path.dirname(os.path.abspath(args.out)), exist_ok=True)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "label", "score"])
        for i, (y, s) in enumerate(zip(data.labels.tolist(), scores.tolist())):
            w.writerow([i, y, repr(s)])
    return [args.out]


def cmd_evaluate(args, cfg):
    report = harness.evaluate(cfg)
    os.makedirs(args.out, exist_ok=True)
    _write(os.path.join(args.out, "report.json"), report.to_json() + "\n")
    plots.emit_plots(report, args.out)
    print(f"mean test AUC {report.mean_auc:.4f} (sd {report.std_auc:.4f}) over {len(report.runs)} runs")
    return ["report.json"]


def cmd_compare(args, cfg):
    report = harness.compare_local_vs_global(cfg)
    os.makedirs(args.out, exist_ok=True)
    _write(os.path.join(args.out, "comparison.json"), report.to_json() + "\n")
    plots.emit_plots(report, args.out)
    print(f"functional {report.first.mean_auc:.4f}  filtered {report.second.mean_auc:.4f}  "
          f"mean paired delta {report.mean_delta:+.4f}")
    return ["comparison.json"]


def cmd_select_dim(args, cfg):
    data = _dataset(cfg, args.data)
    cands = [int(c) for c in args.candidates.split(",")] if args.candidates else list(
        modelselect.DEFAULT_CANDIDATES)
    kw = harness._grow_kw(cfg)
    report = modelselect.select_dimension(data, cands, modelselect.PenaltySchedule(args.c_v), **kw)
    _write(args.out, report.to_csv())
    print(f"selected N = {report.selected}")
    return [args.out]


def build_parser():
    p = argparse.ArgumentParser(prog="ftreerank", description="Ranking trees for labelled curves.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_default):
        sp.add_argument("--config", help="JSON experiment config")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config field")
        sp.add_argument("--seed", type=int, help="master seed (overrides the config)")
        sp.add_argument("--out", default=out_default, help="output path")
        sp.add_argument("--paper-scale", action="store_true",
                        help="5000-curve pool, 2000-curve resamples and test set, 50 resamples")

    sp = sub.add_parser("generate", help="sample a synthetic dataset")
    common(sp, "data")
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("train", help="grow a ranking tree and save it as JSON")
    common(sp, "tree.json")
    sp.add_argument("--data", help="training CSV (default: synthetic data from the config)")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("score", help="score curves with a saved tree")
    common(sp, "scores.csv")
    sp.add_argument("--tree", required=True)
    sp.add_argument("--data", required=True)
    sp.set_defaults(func=cmd_score)

    sp = sub.add_parser("evaluate", help="run the configured protocol; write report and plots")
    common(sp, "report")
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("compare", help="paired functional vs globally filtered evaluation")
    common(sp, "compare")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("select-dim", help="choose N by penalized training AUC")
    common(sp, "select_dim.csv")
    sp.add_argument("--data", help="training CSV (default: synthetic data from the config)")
    sp.add_argument("--candidates", help="comma separated N values")
    sp.add_argument("--c-v", type=float, default=1.0, help="capacity constant in V_N = c_v * N")
    sp.set_defaults(func=cmd_select_dim)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config(args)
        args.func(args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001 - reported through the exit code
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
