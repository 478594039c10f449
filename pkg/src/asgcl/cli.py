"""Command line entry point: ``asgcl <command> [options]``.

Exit codes: 0 ok, 2 usage, 3 configuration, 4 data, 5 numeric failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .augment import DegenerateSpectrumError, optimize_delta, write_trajectory_csv
from .config import ConfigError, RunConfig
from .data import DataError, load_dataset
from .evaluation import evaluate
from .experiments import ROBUSTNESS_RATIOS, param_sweep, robustness_sweep, spectra_comparison, write_rows_csv
from .trainer import TrainingError, fit, load_checkpoint, save_checkpoint, write_training_log

log = logging.getLogger("asgcl")

EXIT_USAGE, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 2, 3, 4, 5


def _common(p):
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--epochs", type=int)
    p.add_argument("--hidden", type=int)
    p.add_argument("--eps", type=float, help="perturbation budget in (0, 1]")
    p.add_argument("--rounds", type=int, help="spectral optimization rounds")
    p.add_argument("--no-spectral", action="store_true")
    p.add_argument("--symmetric-encoder", action="store_true")
    p.add_argument("--no-upper", action="store_true")
    p.add_argument("--no-lower", action="store_true")
    p.add_argument("--raw-diffusion", action="store_true",
                   help="diffuse with D^-1/2 A D^-1/2 (no self-loops)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="asgcl", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    _common(sub.add_parser("augment", help="optimize flip probabilities, write diagnostics"))
    _common(sub.add_parser("train", help="train the encoder, write checkpoint and log"))
    p = sub.add_parser("eval", help="classification/clustering metrics from a checkpoint")
    _common(p)
    p.add_argument("--checkpoint", help="defaults to <out>/checkpoint.bin")
    p = sub.add_parser("spectra", help="Laplacian distance: optimized vs random flips")
    _common(p)
    p.add_argument("--budgets", type=float, nargs="+")
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--n", type=int, default=100)
    p = sub.add_parser("robustness", help="accuracy under edge deletion / feature masking")
    _common(p)
    p.add_argument("--kind", choices=["edge", "feature", "both"], default="both")
    p.add_argument("--ratios", type=float, nargs="+", default=list(ROBUSTNESS_RATIOS))
    p.add_argument("--retrain", action="store_true", help="retrain per ratio instead of re-embedding")
    p = sub.add_parser("sweep", help="retrain over a parameter grid")
    _common(p)
    p.add_argument("--param", choices=["eps", "k", "alpha_beta"], required=True)
    p.add_argument("--values", nargs="+", required=True,
                   help="numbers, or alpha:beta pairs for alpha_beta")
    return parser


def resolve_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    changes = {}
    for name in ("seed", "epochs", "hidden", "eps", "rounds"):
        v = getattr(args, name)
        if v is not None:
            changes[name] = v
    if args.eps is not None:
        changes["eps_views"] = None
    for flag in ("no_spectral", "symmetric_encoder", "no_upper", "no_lower", "raw_diffusion"):
        if getattr(args, flag):
            changes[flag] = True
    cfg = cfg.with_train(**changes)
    if args.out:
        cfg = dataclasses.replace(cfg, out=args.out)
    return cfg


def _write_manifest(out: Path, command: str, cfg: RunConfig, argv) -> None:
    manifest = {
        "command": command,
        "argv": list(argv),
        "artifact_version": __version__,
        "seed": cfg.train.seed,
        "config": cfg.to_dict(),
    }
    (out / f"manifest_{command}.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def cmd_augment(cfg: RunConfig, out: Path) -> None:
    g = load_dataset(cfg.dataset, seed=cfg.train.seed)
    t = cfg.train
    rng = np.random.default_rng(t.seed)
    summary = []
    for view, eps in enumerate(t.view_budgets(), start=1):
        res = optimize_delta(g, eps, t.rounds, t.step, rng, t.noise)
        write_trajectory_csv(res, out / f"augment_view{view}.csv")
        iu, ju = np.nonzero(np.triu(res.delta, 1))
        with open(out / f"delta_view{view}.csv", "w") as fh:
            fh.write("i,j,prob\n")
            for i, j in zip(iu, ju):
                fh.write(f"{i},{j},{res.delta[i, j]!r}\n")
        summary.append({"view": view, "eps": eps, "initial_loss": res.initial_loss,
                        "final_loss": res.final_loss, "nnz": int(np.count_nonzero(res.delta)),
                        "noise_rounds": res.noise_rounds})
        print(f"view {view}: eps={eps:g} L_S {res.initial_loss:.6g} -> {res.final_loss:.6g}")
    _write_json(out / "augment_summary.json", summary)


def cmd_train(cfg: RunConfig, out: Path) -> None:
    g = load_dataset(cfg.dataset, seed=cfg.train.seed)
    res = fit(g, cfg.train)
    save_checkpoint(out / "checkpoint.bin", res.weights, res.state, cfg.train,
                    extra={"dataset": cfg.dataset.to_dict()})
    write_training_log(res.log, out / "train_log.csv")
    if res.log:
        print(f"epochs={len(res.log)} final total loss {res.log[-1].total:.6g}")


def cmd_eval(cfg: RunConfig, out: Path, checkpoint) -> None:
    path = Path(checkpoint) if checkpoint else out / "checkpoint.bin"
    if not path.exists():
        raise DataError(f"checkpoint not found: {path}")
    try:
        weights, _, train_cfg, _ = load_checkpoint(path)
    except (ValueError, KeyError) as exc:
        raise DataError(str(exc)) from exc
    g = load_dataset(cfg.dataset, seed=cfg.train.seed)
    if g.labels is None:
        raise DataError("dataset has no labels")
    records = []
    for task in cfg.eval.tasks:
        rep = evaluate(g, weights, task, cfg.eval.seeds, self_loops=not train_cfg.raw_diffusion,
                       dataset=cfg.dataset.name)
        records.append(rep.to_record())
        print(task, {k: round(v, 4) for k, v in rep.mean().items()})
    _write_json(out / "metrics.json", records)
    rows = [{"task": r["task"], "dataset": r["dataset"], "metric": m, "mean": r["mean"][m],
             "std": r["std"][m], "seed_count": r["seed_count"]}
            for r in records for m in sorted(r["mean"])]
    write_rows_csv(rows, out / "metrics.csv")


def cmd_spectra(cfg: RunConfig, out: Path, args) -> None:
    t = cfg.train
    sbm = cfg.dataset.sbm
    kw = {}
    if sbm is not None:
        kw = dict(blocks=sbm.blocks, p_in=sbm.p_in, p_out=sbm.p_out, feature_noise=sbm.feature_noise)
    budgets = args.budgets or [t.eps]
    for b in budgets:
        if not 0 < b <= 1:
            raise ConfigError(f"budget must be in (0, 1], got {b}")
    seeds = range(t.seed, t.seed + args.seeds)
    rows = spectra_comparison(budgets, seeds, n=args.n, rounds=t.rounds, step=t.step, **kw)
    write_rows_csv(rows, out / "spectra.csv")
    for r in rows:
        print(f"eps={r['eps']:g} {r['method']:>14}: {r['distance_mean']:.4f} +- {r['distance_std']:.4f}")


def cmd_robustness(cfg: RunConfig, out: Path, args) -> None:
    g = load_dataset(cfg.dataset, seed=cfg.train.seed)
    for r in args.ratios:
        if not 0 <= r <= 0.8:
            raise ConfigError(f"ratios must be in [0, 0.8], got {r}")
    kinds = ["edge", "feature"] if args.kind == "both" else [args.kind]
    weights = None if args.retrain else fit(g, cfg.train).weights
    rows = []
    for kind in kinds:
        rows += robustness_sweep(g, cfg.train, kind, args.ratios, cfg.eval.seeds, args.retrain, weights)
    write_rows_csv(rows, out / "robustness.csv")
    for r in rows:
        print(f"{r['kind']:>7} {r['ratio']:.1f}: {r['accuracy_mean']:.4f}")


def _parse_values(param, values):
    try:
        if param == "alpha_beta":
            return [tuple(float(x) for x in v.split(":", 1)) for v in values]
        if param == "k":
            return [int(v) for v in values]
        return [float(v) for v in values]
    except ValueError as exc:
        raise ConfigError(f"bad sweep value: {exc}") from exc


def cmd_sweep(cfg: RunConfig, out: Path, args) -> None:
    g = load_dataset(cfg.dataset, seed=cfg.train.seed)
    values = _parse_values(args.param, args.values)
    try:
        rows = param_sweep(g, cfg.train, args.param, values, cfg.eval.seeds)
    except DataError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    write_rows_csv(rows, out / f"sweep_{args.param}.csv")
    for r in rows:
        print(r)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_manifest(out, args.command, cfg, argv)
        if args.command == "augment":
            cmd_augment(cfg, out)
        elif args.command == "train":
            cmd_train(cfg, out)
        elif args.command == "eval":
            cmd_eval(cfg, out, args.checkpoint)
        elif args.command == "spectra":
            cmd_spectra(cfg, out, args)
        elif args.command == "robustness":
            cmd_robustness(cfg, out, args)
        elif args.command == "sweep":
            cmd_sweep(cfg, out, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (TrainingError, DegenerateSpectrumError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


if __name__ == "__main__":
    sys.exit(main())
