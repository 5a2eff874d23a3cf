"""Command-line entry points.

Subcommands: synth | train | eval | score | gradcheck | sweep-k. Options
come from an optional key=value config file plus flags; flags win. Every
report embeds the resolved config hash, the seed, and the code version,
and reruns with identical inputs produce byte-identical outputs. Exit
codes: 0 success, 1 gradcheck tolerance breach, 2 usage/config/data
errors, 3 training divergence.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .errors import AnchorGladError, TrainingDivergedError
from .evaluation import run_both_orientations, score_graphs
from .gradcheck import TOLERANCE, run_suite
from .graphs import load_tudataset, save_tudataset
from .modelfile import load_model, save_model
from .runconfig import RunConfig
from .synth import synth_connectivity_corpus, synth_hexagon_corpus
from .training import train, write_training_log
from . import plots

_CONFIG_FLAGS = (
    ("--data-dir", "data_dir", str, "directory holding the TUDataset files"),
    ("--dataset", "dataset", str, "dataset name (file prefix)"),
    ("--anomaly-label", "anomaly_label", int, "label treated as abnormal"),
    ("--out-dir", "out_dir", str, "output directory for reports"),
    ("--feature-mode", "feature_mode", str, "auto|attributes|labels|degree"),
    ("--hidden-dims", "hidden_dims", str, "comma-separated layer widths"),
    ("--epochs", "epochs", int, "training epochs"),
    ("--batch-size", "batch_size", int, "mini-batch size"),
    ("--learning-rate", "learning_rate", float, "optimizer step size"),
    ("--optimizer", "optimizer", str, "sgd|adam"),
    ("--seed", "seed", int, "root RNG seed"),
    ("--folds", "folds", int, "cross-validation fold count"),
    ("--anchor-k", "anchor_k", int, "anchor sampling ratio factor"),
    ("--fe-kind", "fe_kind", str, "node-channel readout: max|mean"),
)

_CONFIG_BOOL_FLAGS = (
    ("--normalize", "normalize", "L2-normalize representations (default on)"),
    ("--ablate-constant-weights", "ablate_constant_weights",
     "force alpha = beta = 1 instead of the anomaly-aware rule"),
    ("--ablate-drop-dist3", "ablate_drop_dist3",
     "drop the anchor-separation term from both losses"),
    ("--refresh-anchors-per-epoch", "refresh_anchors_per_epoch",
     "resample anchors and weights every epoch"),
)


def _add_config_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=None, help="key=value config file")
    for flag, _, typ, help_text in _CONFIG_FLAGS:
        parser.add_argument(flag, type=typ, default=None, help=help_text)
    for flag, _, help_text in _CONFIG_BOOL_FLAGS:
        parser.add_argument(flag, action=argparse.BooleanOptionalAction,
                            default=None, help=help_text)


def _resolve_config(args) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    overrides = {dest: getattr(args, dest) for _, dest, _, _ in _CONFIG_FLAGS}
    overrides.update({dest: getattr(args, dest) for _, dest, _ in _CONFIG_BOOL_FLAGS})
    cfg.apply_overrides(overrides)
    return cfg


def _load_data(cfg: RunConfig):
    if not cfg.data_dir or not cfg.dataset:
        raise AnchorGladError("data_dir and dataset are required (flag or config)")
    gset = load_tudataset(cfg.data_dir, cfg.dataset, feature_mode=cfg.feature_mode)
    return gset.with_anomaly_label(cfg.anomaly_label)


def cmd_synth(args) -> int:
    make = {"hexagon": synth_hexagon_corpus,
            "connectivity": synth_connectivity_corpus}[args.kind]
    try:
        corpus = make(args.normal, args.abnormal, args.seed)
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    name = args.name or args.kind
    out_dir = Path(args.out_dir)
    save_tudataset(corpus, out_dir, name)
    print(f"wrote {len(corpus)} graphs ({args.normal} normal / {args.abnormal} "
          f"abnormal) to {out_dir}/{name}_*.txt")
    return 0


def _paths(cfg: RunConfig, stem: str) -> Path:
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir / stem


def cmd_train(args) -> int:
    cfg = _resolve_config(args)
    gset = _load_data(cfg)
    stem = f"{cfg.dataset}_A{cfg.anomaly_label}"
    try:
        model = train(gset, cfg.to_train_config())
    except TrainingDivergedError as err:
        path = _paths(cfg, f"{stem}_checkpoint.bin")
        if err.checkpoint is not None:
            save_model(err.checkpoint, path)
        print(f"error: {err}; checkpoint written to {path}", file=sys.stderr)
        return 3
    model_path = _paths(cfg, f"{stem}_model.bin")
    log_path = _paths(cfg, f"{stem}_train_log.csv")
    fig_path = _paths(cfg, f"{stem}_train_curves.png")
    save_model(model, model_path)
    write_training_log(model.log, log_path)
    plots.save_training_curves(model.log, fig_path)
    final = model.log[-1]
    print(f"trained {cfg.dataset} (A={cfg.anomaly_label}) for {final.epoch} epochs: "
          f"dist3={final.dist3:.4f} loss_p={final.loss_p:.4f} "
          f"loss_n={final.loss_n:.4f} alpha={model.weights.alpha} "
          f"beta={model.weights.beta}")
    print(f"model: {model_path}")
    print(f"log: {log_path}")
    print(f"figure: {fig_path}")
    return 0


def _write_report(report, json_path: Path, csv_path: Path) -> None:
    json_path.write_text(report.to_json())
    csv_path.write_text(report.csv_header() + "\n" + report.csv_row() + "\n")


def _eval_once(cfg: RunConfig) -> int:
    gset = _load_data(cfg)
    tcfg = cfg.to_train_config()
    rep0, rep1 = run_both_orientations(gset, tcfg, cfg.folds, cfg.seed,
                                       config_hash=cfg.config_hash())
    tag = "" if rep0.ablation == "none" else f"_abl-{rep0.ablation}"
    for rep in (rep0, rep1):
        stem = f"{cfg.dataset}_eval_A{rep.orientation}{tag}"
        _write_report(rep, _paths(cfg, f"{stem}.json"), _paths(cfg, f"{stem}.csv"))
        print(f"A={rep.orientation}: mean AUC {rep.mean_auc:.4f} "
              f"± {rep.std_auc:.4f} over {rep.k} folds [{rep.ablation}]")
    fig_path = _paths(cfg, f"{cfg.dataset}_eval_aucs{tag}.png")
    plots.save_fold_auc_bars([rep0, rep1], fig_path)
    print(f"reports in {Path(cfg.out_dir).resolve()}")
    return 0


def _parse_k_range(text: str) -> list[int]:
    if ".." in text:
        lo, hi = text.split("..", 1)
        lo, hi = int(lo), int(hi)
    else:
        lo, hi = 1, int(text)
    if lo < 1 or hi < lo:
        raise AnchorGladError(f"bad sweep range {text!r}; use e.g. 1..6")
    return list(range(lo, hi + 1))


def _sweep(cfg: RunConfig, k_values: list[int]) -> int:
    gset = _load_data(cfg)
    rows = []
    for k in k_values:
        kcfg_run = RunConfig(**{**vars(cfg), "anchor_k": k})
        tcfg = kcfg_run.to_train_config()
        for rep in run_both_orientations(gset, tcfg, cfg.folds, cfg.seed,
                                         config_hash=kcfg_run.config_hash()):
            rows.append({"anchor_k": k, "orientation": rep.orientation,
                         "mean_auc": rep.mean_auc, "std_auc": rep.std_auc,
                         "report": rep})
            print(f"k={k} A={rep.orientation}: mean AUC {rep.mean_auc:.4f} "
                  f"± {rep.std_auc:.4f}")
    csv_path = _paths(cfg, f"{cfg.dataset}_sweep_k.csv")
    header = "anchor_k," + rows[0]["report"].csv_header()
    lines = [header]
    lines.extend(f"{row['anchor_k']}," + row["report"].csv_row() for row in rows)
    csv_path.write_text("\n".join(lines) + "\n")
    fig_path = _paths(cfg, f"{cfg.dataset}_sweep_k.png")
    plots.save_sweep_curve(rows, fig_path)
    print(f"sweep table: {csv_path}")
    print(f"figure: {fig_path}")
    return 0


def cmd_eval(args) -> int:
    cfg = _resolve_config(args)
    if args.sweep_k:
        return _sweep(cfg, _parse_k_range(args.sweep_k))
    return _eval_once(cfg)


def cmd_sweep_k(args) -> int:
    cfg = _resolve_config(args)
    return _sweep(cfg, _parse_k_range(args.range))


def cmd_score(args) -> int:
    cfg = _resolve_config(args)
    gset = _load_data(cfg)
    train_dir = args.train_data_dir or cfg.data_dir
    train_name = args.train_dataset or cfg.dataset
    train_set = (gset if (train_dir, train_name) == (cfg.data_dir, cfg.dataset)
                 else load_tudataset(train_dir, train_name,
                                     feature_mode=cfg.feature_mode)
                 .with_anomaly_label(cfg.anomaly_label))
    model = load_model(args.model, train_set)
    results = score_graphs(gset.graphs, model)
    header = "graph,dist_p,dist_n,score_g,predicted"
    lines = [header]
    for i, r in enumerate(results):
        label = "abnormal" if r.predicted_abnormal else "normal"
        lines.append(f"{i},{r.dist_p!r},{r.dist_n!r},{r.score_g!r},{label}")
        print(f"graph {i}: dist_p={r.dist_p:.4f} dist_n={r.dist_n:.4f} "
              f"score={r.score_g:+.4f} -> {label}")
    if not results:
        print("(no graphs to score)")
    if args.out:
        Path(args.out).write_text("\n".join(lines) + "\n")
        print(f"score table: {args.out}")
    return 0


def cmd_gradcheck(args) -> int:
    report = run_suite(seed=args.seed, op_trials=args.op_trials,
                       composite_trials=args.composite_trials)
    for line in report.lines():
        print(line)
    print(f"{report.trials} trials, worst relative error {report.worst:.3e} "
          f"(tolerance {TOLERANCE:.0e})")
    if not report.passed:
        print("gradcheck FAILED", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="anchorglad",
        description="anchor-guided graph-level anomaly detection")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic TUDataset corpus")
    p.add_argument("kind", choices=("hexagon", "connectivity"))
    p.add_argument("--normal", type=int, required=True, help="normal graph count")
    p.add_argument("--abnormal", type=int, required=True, help="abnormal graph count")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--name", default=None, help="dataset name (default: kind)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a model, write model file + log")
    _add_config_options(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="cross-validated AUC, both orientations")
    _add_config_options(p)
    p.add_argument("--sweep-k", default=None, metavar="LO..HI",
                   help="sweep the anchor ratio factor instead of one eval")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep-k", help="AUC vs anchor sampling ratio factor")
    _add_config_options(p)
    p.add_argument("--range", required=True, metavar="LO..HI",
                   help="k values to sweep, e.g. 1..6")
    p.set_defaults(func=cmd_sweep_k)

    p = sub.add_parser("score", help="score graphs with a saved model")
    _add_config_options(p)
    p.add_argument("--model", required=True, help="model file from train")
    p.add_argument("--train-data-dir", default=None,
                   help="dataset dir the model was trained on (default: --data-dir)")
    p.add_argument("--train-dataset", default=None,
                   help="dataset name the model was trained on (default: --dataset)")
    p.add_argument("--out", default=None, help="write the score table as CSV")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("gradcheck", help="finite-difference check of all ops")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--op-trials", type=int, default=10)
    p.add_argument("--composite-trials", type=int, default=6)
    p.set_defaults(func=cmd_gradcheck)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except AnchorGladError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
