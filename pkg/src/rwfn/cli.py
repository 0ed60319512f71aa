"""Command-line interface: ``rwfn {gen-data, split, train, eval, params}``.

Exit codes: 0 success, 1 other failure, 2 configuration error, 3 numeric
abort during training, 4 checkpoint/dataset incompatibility.  The
``RWFN_LOG_LEVEL`` environment variable (DEBUG, INFO, WARNING, ...) sets
log verbosity; it never changes outputs.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import __version__
from .checkpoint import read_checkpoint, save_checkpoint, theory_from_dict
from .config import load_config, public, resolve
from .errors import CompatibilityError, ConfigError, NumericError, RwfnError
from .evaluation import TASKS, FrequencyPrior, format_report
from .experiment import (Dataset, load_dataset, make_split, run_eval, run_training, select)
from .groundings import ntn_counts, rwfn_counts
from .scenes import FeatureSchema, save_scenes

log = logging.getLogger("rwfn")

# dimensions of the reference setting: 100 classes, 70 predicates, n = 105
PAPER_DIMS = {"classes": 100, "predicates": 70, "hidden_unary": 500, "hidden_binary": 1000, "k": 5}


def _setup_logging():
    level = os.environ.get("RWFN_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _config(args):
    return load_config(getattr(args, "config", None), getattr(args, "set", None) or [])


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


# --- commands --------------------------------------------------------------------

def cmd_gen_data(args) -> int:
    config = _config(args)
    ds = load_dataset(config)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_scenes(out, ds.scenes, ds.classes, ds.predicates)
    n_triples = sum(len(s.triples) for s in ds.scenes)
    print(f"wrote {len(ds.scenes)} scenes, {n_triples} triples to {out}")
    return 0


def cmd_split(args) -> int:
    config = _config(args)
    manifest = make_split(config, load_dataset(config))
    _write(Path(args.out), json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    print(f"train {len(manifest['train'])} / test {len(manifest['test'])} scenes, "
          f"{len(manifest['unseen'])} unseen triple types -> {args.out}")
    return 0


def _absolute_paths(config: dict) -> dict:
    cfg = public(config)
    cfg["dataset"] = dict(cfg["dataset"])
    if cfg["dataset"]["path"] is not None:
        cfg["dataset"]["path"] = str(resolve(config, cfg["dataset"]["path"]).resolve())
    cfg["kb"] = dict(cfg["kb"])
    if cfg["kb"]["constraints_file"] is not None:
        cfg["kb"]["constraints_file"] = str(resolve(config, cfg["kb"]["constraints_file"]).resolve())
    return cfg


def _train_once(config: dict, out: Path):
    def progress(rec):
        log.info("epoch %d objective %.6f satisfiability %.6f",
                 rec["epoch"], rec["objective"], rec["satisfiability"])

    try:
        result = run_training(config, progress=progress)
    except NumericError as exc:
        if exc.last_good is not None:
            out.mkdir(parents=True, exist_ok=True)
            np.save(out / "last_good.npy", exc.last_good)
        raise
    out.mkdir(parents=True, exist_ok=True)
    stored = _absolute_paths(config)
    save_checkpoint(out / "checkpoint.json", result.theory, stored,
                    extra={"prior": dict(result.prior)})
    _write(out / "trace.jsonl", result.report.to_jsonl())
    _write(out / "split.json", json.dumps(result.manifest, indent=1, sort_keys=True) + "\n")
    print(f"{out}: satisfiability {result.report.initial_satisfiability:.4f} -> "
          f"{result.report.final_satisfiability:.4f} after {result.report.epochs} epochs")
    return result


def summarize(runs: List[List[dict]]) -> str:
    """Mean +- 2 SD of each report cell over repeated runs."""
    lines = [f"{'task':<14}{'N':>5}{'recall':>22}{'zero-shot':>22}"]
    for i, row in enumerate(runs[0]):
        cells = []
        for key in ("recall", "zero_shot_recall"):
            vals = [r[i].get(key) for r in runs]
            if any(v is None for v in vals):
                cells.append("-")
                continue
            sd = float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0
            cells.append(f"{np.mean(vals):.4f} +- {2 * sd:.4f}")
        lines.append(f"{row['task']:<14}{row['n']:>5}{cells[0]:>22}{cells[1]:>22}")
    return "\n".join(lines) + f"\n({len(runs)} runs, mean +- 2 SD)\n"


def cmd_train(args) -> int:
    config = _config(args)
    out = Path(args.out)
    if args.repeats < 1:
        raise ConfigError("--repeats must be at least 1", field="repeats")
    if args.repeats == 1:
        _train_once(config, out)
        return 0
    rows = []
    for r in range(args.repeats):
        cfg = dict(config, seed=config["seed"] + r)
        result = _train_once(cfg, out / f"seed{cfg['seed']}")
        test = select(result.dataset, result.manifest["test"])
        rows.append(run_eval(cfg, result.theory, test, result.prior, result.manifest["unseen"]))
    text = summarize(rows)
    _write(out / "summary.txt", text)
    sys.stdout.write(text)
    return 0


def cmd_eval(args) -> int:
    ckpt = Path(args.checkpoint)
    if not ckpt.is_file():
        raise ConfigError(f"checkpoint {str(ckpt)!r} not found", field="checkpoint")
    doc = read_checkpoint(ckpt)
    if args.config is not None or args.set:
        config = _config(args)
    elif doc.get("config"):
        config = load_config(None, [])
        config.update({k: v for k, v in doc["config"].items()})
    else:
        raise ConfigError("checkpoint stores no config; pass --config", field="config")
    if args.data is not None:
        config["dataset"] = dict(config["dataset"], path=str(Path(args.data).resolve()))
    dataset = load_dataset(config)
    theory = theory_from_dict(doc, dataset.signature([]))
    if FeatureSchema(dataset.classes) != theory.features.schema:
        raise CompatibilityError("dataset feature schema differs from the checkpoint's")

    split_path = Path(args.split) if args.split else ckpt.parent / "split.json"
    if args.split and not split_path.is_file():
        raise ConfigError(f"split manifest {str(split_path)!r} not found", field="split")
    if split_path.is_file():
        manifest = json.loads(split_path.read_text())
        scenes = select(dataset, manifest["test"])
        unseen = manifest.get("unseen") or None
    else:
        scenes, unseen = dataset.scenes, None
    prior = FrequencyPrior(doc.get("extra", {}).get("prior") or
                           FrequencyPrior.uniform(dataset.predicates))
    rows = run_eval(config, theory, scenes, prior, unseen, args.tasks, args.n)
    text = format_report(rows)
    if args.out:
        _write(Path(args.out), text)
    sys.stdout.write(text)
    return 0


def params_table(n_classes: int, n_unary: int, n_binary: int, B1: int, B2: int, k: int) -> str:
    schema = FeatureSchema(tuple(f"c{i}" for i in range(n_classes)))
    mn1, mn2 = schema.unary_dim, schema.binary_dim
    r1, t1 = rwfn_counts(mn1, B1), ntn_counts(mn1, k)
    r2, t2 = rwfn_counts(mn2, B2), ntn_counts(mn2, k)
    lines = [f"{'model':<8}{'arity':>6}{'mn':>6}{'B/k':>6}{'total':>12}{'learnable':>12}",
             f"{'rwfn':<8}{1:>6}{mn1:>6}{B1:>6}{r1.total:>12}{r1.learnable:>12}",
             f"{'ntn':<8}{1:>6}{mn1:>6}{k:>6}{t1.total:>12}{t1.learnable:>12}",
             f"{'rwfn':<8}{2:>6}{mn2:>6}{B2:>6}{r2.total:>12}{r2.learnable:>12}",
             f"{'ntn':<8}{2:>6}{mn2:>6}{k:>6}{t2.total:>12}{t2.learnable:>12}"]

    def ratio(a, b):
        return f"{a}:{b} (1:{round(b / a)})" if a else f"{a}:{b}"

    shared1 = 2 * mn1 * B1 + B1 + 2 * B1 * n_unary
    lines.append(f"learnable ratio, unary rwfn:ntn      {ratio(r1.learnable, t1.learnable)}")
    lines.append(f"space, {n_unary} unary predicates: rwfn_ws {shared1}, "
                 f"rwfn {r1.total * n_unary}, ntn {t1.total * n_unary}")
    lines.append(f"space ratio, unary rwfn_ws:ntn      {ratio(shared1, t1.total * n_unary)}")
    if n_binary:
        shared2 = 2 * mn2 * B2 + B2 + 2 * B2 * n_binary
        full_ws = shared1 + shared2
        full_ntn = t1.total * n_unary + t2.total * n_binary
        lines.append(f"space, full theory: rwfn_ws {full_ws}, "
                     f"rwfn {r1.total * n_unary + r2.total * n_binary}, ntn {full_ntn}")
        lines.append(f"space ratio, full rwfn_ws:ntn       {ratio(full_ws, full_ntn)}")
    return "\n".join(lines) + "\n"


def cmd_params(args) -> int:
    if args.config is None and not args.set:
        d = PAPER_DIMS
        text = params_table(d["classes"], d["classes"], d["predicates"], d["hidden_unary"],
                            d["hidden_binary"], d["k"])
    else:
        config = _config(args)
        ds: Dataset = load_dataset(config)
        m = config["model"]
        text = params_table(len(ds.classes), len(ds.classes), len(ds.predicates),
                            m["hidden"]["unary"], m["hidden"]["binary"], m["k"])
    sys.stdout.write(text)
    return 0


# --- entry point --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rwfn", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"rwfn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(p, required=True):
        p.add_argument("config", nargs=None if required else "?", default=None,
                       help="experiment config (YAML)")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config key, e.g. training.epochs=500")

    p = sub.add_parser("gen-data", help="write the configured dataset to a file")
    with_config(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("split", help="write a train/test split manifest")
    with_config(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="train a grounded theory and write a checkpoint")
    with_config(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--repeats", type=int, default=1,
                   help="train and evaluate R seeds, reporting mean +- 2 SD")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    p.add_argument("checkpoint")
    p.add_argument("--config", default=None, help="config (default: the one stored in the checkpoint)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.add_argument("--data", default=None, help="dataset file overriding the config")
    p.add_argument("--split", default=None, help="split manifest (default: next to the checkpoint)")
    p.add_argument("--tasks", nargs="+", choices=TASKS, default=None)
    p.add_argument("--n", nargs="+", type=int, default=None)
    p.add_argument("--out", default=None, help="also write the report here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("params", help="parameter and space accounting")
    with_config(p, required=False)
    p.set_defaults(func=cmd_params)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except RwfnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
