"""Command-line driver: train, eval, predict, gradcheck, ablate (and synthetic data)."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .config import ModelConfig, load_config, save_config, small_config
from .data import get_schema, load_data, save_dataset, select
from .errors import BMGFError, ConfigError, DataError
from .gradcheck import TOLERANCE, check_model
from .training import Checkpoint, ablate, ablation_table, evaluate_model, predict_labels, train

log = logging.getLogger("bmgf")


def _config(args) -> ModelConfig:
    config = load_config(args.config) if args.config else ModelConfig()
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "schema", None):
        get_schema(args.schema)
        changes["schema"] = args.schema
    return config.replace(**changes) if changes else config


def cmd_train(args) -> int:
    config = _config(args)
    instances = load_data(args.data, get_schema(config.schema))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_config(config, out / "config.json")
    result = train(config, instances, out)
    print(f"best epoch {result.best.epoch}  validation metric {result.best.best_metric:.4f}")
    print(f"checkpoint written to {out / 'best.ckpt.json'}")
    return 0


def _load_checkpoint(args):
    ckpt = Checkpoint.load(args.checkpoint)
    schema = get_schema(ckpt.config.schema)
    if getattr(args, "schema", None) and get_schema(args.schema) != schema:
        raise ConfigError(f"checkpoint schema {schema.name} does not match requested schema {args.schema}")
    return ckpt.to_model(), schema


def cmd_eval(args) -> int:
    model, schema = _load_checkpoint(args)
    instances = load_data(args.data, schema)
    if args.split:
        instances = select(instances, args.split)
        if not instances:
            raise DataError(f"no instances tagged {args.split!r} in {args.data}")
    report = evaluate_model(model, instances, schema)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "eval_report.json").write_text(report.to_json() + "\n", encoding="utf-8")
        (out / "eval_report.txt").write_text(report.to_text() + "\n", encoding="utf-8")
    print(report.to_json() if args.json else report.to_text())
    return 0


def _read_pairs(path: str) -> list[tuple[str, str]]:
    """Pairs from an instance file (4 columns) or a plain arg1<TAB>arg2 file with header."""
    lines = Path(path).read_text(encoding="utf-8").split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise DataError(f"{path}: empty file")
    header = lines[0].split("\t")
    pairs = []
    for i, line in enumerate(lines[1:], start=2):
        cols = line.split("\t")
        if len(cols) != len(header) or len(cols) not in (2, 4):
            raise DataError(f"{path}:{i}: expected {len(header)} tab-separated columns")
        pairs.append((cols[-2], cols[-1]))
    return pairs


def cmd_predict(args) -> int:
    model, _ = _load_checkpoint(args)
    if args.data:
        pairs = _read_pairs(args.data)
    elif args.arg1 is not None and args.arg2 is not None:
        pairs = [(args.arg1, args.arg2)]
    else:
        raise ConfigError("predict needs --data or both --arg1 and --arg2")
    labels, probs = predict_labels(model, pairs)
    for (a1, a2), label, row in zip(pairs, labels, probs):
        print(json.dumps({"arg1": a1, "arg2": a2, "label": label,
                          "probs": {name: float(p) for name, p in zip(model.labels, row)}}))
    return 0


def cmd_gradcheck(args) -> int:
    base = small_config()
    if args.config:
        base = base.replace(**{k: v for k, v in load_config(args.config).to_dict().items()
                               if k in ("hidden_dim", "perspectives", "encoder_layers", "encoder_heads",
                                        "fusion_heads", "conv_ops", "conv_filters", "mode",
                                        "use_segment_embeddings", "enable_matching", "enable_fusion")})
    start = args.seed if args.seed is not None else 0
    failed = False
    records = []
    for seed in range(start, start + args.seeds):
        report = check_model(seed, base, max_coords=args.coords)
        failed |= not report.passed
        records.append({"seed": seed, "errors": {k: float(v) for k, v in report.errors.items()},
                        "passed": report.passed, "seconds": report.seconds})
        cells = "  ".join(f"{k}={v:.2e}" for k, v in report.errors.items())
        print(f"seed {seed}: {cells}  {'ok' if report.passed else 'FAIL'}")
    if args.out:
        Path(args.out).write_text(json.dumps(records, indent=2) + "\n", encoding="utf-8")
    print(f"{'FAILED' if failed else 'passed'}: tolerance {TOLERANCE:g}")
    return 1 if failed else 0


def cmd_ablate(args) -> int:
    config = _config(args)
    instances = load_data(args.data, get_schema(config.schema))
    rows = ablate(config, instances, args.out)
    table = ablation_table(rows)
    print(table)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "ablation.txt").write_text(table + "\n", encoding="utf-8")
        (out / "ablation.json").write_text(json.dumps(
            [{"name": r.name, "config": r.config.to_dict(), "report": r.report.to_dict()} for r in rows],
            indent=2) + "\n", encoding="utf-8")
    return 0


def cmd_synthetic(args) -> int:
    from .synthetic import make_dataset

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    instances = make_dataset(args.seed or 0)
    for split in ("train", "validation", "test"):
        save_dataset(select(instances, split), out / f"{split}.tsv")
    print(f"wrote {len(instances)} synthetic instances to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bmgf", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True, data=True, out=True, seed=True, schema=True):
        if config:
            p.add_argument("--config", help="flat JSON document of ModelConfig fields")
        if data:
            p.add_argument("--data", help="instance TSV file or a directory of them")
        if out:
            p.add_argument("--out", help="output directory")
        if seed:
            p.add_argument("--seed", type=int)
        if schema:
            p.add_argument("--schema", help="pdtb4 | pdtb11 | conll15 | binary:<class> | custom:<a>,<b>,...")

    p = sub.add_parser("train", help="train a model and keep the best checkpoint")
    common(p)
    p.set_defaults(func=cmd_train, required=("data", "out"))

    p = sub.add_parser("eval", help="evaluate a checkpoint on an instance file")
    common(p, config=False, seed=False)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--split", choices=("train", "validation", "test", "blind"))
    p.add_argument("--json", action="store_true", help="print the JSON report instead of text")
    p.set_defaults(func=cmd_eval, required=("data",))

    p = sub.add_parser("predict", help="label one pair or every pair in a file")
    common(p, config=False, out=False, seed=False)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--arg1")
    p.add_argument("--arg2")
    p.set_defaults(func=cmd_predict, required=())

    p = sub.add_parser("gradcheck", help="finite-difference check of every module")
    common(p, data=False, schema=False)
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--coords", type=int, default=12, help="coordinates probed per parameter tensor")
    p.set_defaults(func=cmd_gradcheck, required=())

    p = sub.add_parser("ablate", help="train/evaluate every SE x BM x GF combination plus siamese")
    common(p)
    p.set_defaults(func=cmd_ablate, required=("data",))

    p = sub.add_parser("synthetic", help="write the synthetic planted-connective dataset")
    common(p, config=False, data=False, schema=False)
    p.set_defaults(func=cmd_synthetic, required=("out",))
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("BMGF_LOG", "WARNING").upper(),
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    missing = [f"--{name}" for name in args.required if not getattr(args, name, None)]
    if missing:
        parser.error(f"{args.command} requires {', '.join(missing)}")
    try:
        return args.func(args)
    except BMGFError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
