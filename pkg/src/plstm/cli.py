"""Batch command-line surface: stats, train, eval, benchmark.

Exit codes: 0 success, 2 data/I-O error, 3 config error. A fixed seed makes
every command's file outputs byte-for-byte reproducible. PLSTM_SEED and
PLSTM_OUT_DIR environment variables override the seed and output directory.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import corpus
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .evaluation import benchmark, classification_report, confusion, render4
from .model import BRANCH_NAMES, init_model, summary
from .train import TrainConfig, encode_dataset, predict_labels, train, write_epoch_csv

EXIT_OK = 0
EXIT_DATA = 2
EXIT_CONFIG = 3

_CONFIG_FIELDS = {
    "epochs": int,
    "batch_size": int,
    "seed": int,
    "verbose": int,
    "hidden": int,
    "embedding_dim": int,
    "seq_len": int,
    "learning_rate": float,
    "dropout_embed": float,
    "dropout_recurrent": float,
    "gate_mode": str,
    "clip_norm": float,
    "aggregation": str,
}


class ConfigError(ValueError):
    pass


def load_config(path) -> TrainConfig:
    """key=value config; keys named after the hyperparameter vocabulary
    (embedding_dim, hidden, learning_rate, dropout_embed, ...)."""
    values = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{line_no}: expected key=value, got {line!r}")
        key, _, raw = line.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in _CONFIG_FIELDS:
            raise ConfigError(f"{path}:{line_no}: unknown key {key!r}")
        try:
            values[key] = _CONFIG_FIELDS[key](raw) if raw.lower() != "none" else None
        except ValueError as exc:
            raise ConfigError(f"{path}:{line_no}: bad value for {key}: {raw!r}") from exc
    if "embedding_dim" in values:
        values["embed_dim"] = values.pop("embedding_dim")
    return TrainConfig(**values)


def dump_config(config: TrainConfig, path):
    names = [(k, "embedding_dim" if k == "embed_dim" else k)
             for k in sorted(config.__dict__) if k != "active_branches"]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for attr, key in sorted(names, key=lambda kv: kv[1]):
            fh.write(f"{key}={getattr(config, attr)}\n")


def _load_texts(path):
    fmt = corpus.guess_format(path)
    if str(path).lower().endswith(".txt"):
        return corpus.load_plain_text(path), None
    examples = corpus.load_labeled_dataset(path, fmt)
    return [ex.doc for ex in examples], examples


def cmd_stats(args) -> int:
    try:
        docs, _ = _load_texts(args.data)
        table = corpus.frequency_table(docs, args.top_k)
        vocab = corpus.build_vocabulary(docs)
    except corpus.CorpusError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    lines = ["rank,word,count,distribution_pct\n"]
    for rank, (word, count, pct) in enumerate(table.entries, start=1):
        lines.append(f"{rank},{word},{count},{pct:.2f}\n")
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(lines)
    print(f"documents: {len(docs)}")
    print(f"tokens: {table.total_tokens}")
    print(f"vocabulary: {len(vocab.word_to_id)}")
    return EXIT_OK


def cmd_train(args) -> int:
    try:
        config = load_config(args.config) if args.config else TrainConfig()
        if args.seed is not None:
            config.seed = args.seed
        if args.epochs is not None:
            config.epochs = args.epochs
        config.validate()
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        examples = corpus.load_labeled_dataset(args.data, corpus.guess_format(args.data))
        if not examples:
            raise corpus.CorpusError(f"no examples in {args.data}")
        vocab = corpus.build_vocabulary([ex.doc for ex in examples])
    except corpus.CorpusError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    data = encode_dataset(examples, vocab, config.seq_len)
    model = init_model(
        vocab.size, config.embed_dim, config.hidden, seed=config.seed,
        seq_len=config.seq_len, aggregation=config.aggregation,
        gate_mode=config.gate_mode, dropout_embed=config.dropout_embed,
        dropout_recurrent=config.dropout_recurrent,
    )
    model, logs = train(model, data, config)
    save_checkpoint(model, out / "model.ckpt")
    write_epoch_csv(logs, config.active_branches, out / "epochs.csv")
    dump_config(config, out / "config_resolved.cfg")
    (out / "summary.txt").write_text(summary(model), encoding="utf-8")
    return EXIT_OK


def _per_branch_reports(model, data):
    preds = predict_labels(model, data)
    reports = {}
    for name in BRANCH_NAMES:
        counts = confusion(preds[name].tolist(), data.labels.tolist())
        reports[name] = classification_report(counts)
    return reports


def cmd_eval(args) -> int:
    try:
        model = load_checkpoint(args.checkpoint)
    except CheckpointError as exc:
        print(f"error: bad checkpoint: {exc}", file=sys.stderr)
        return EXIT_DATA
    try:
        examples = corpus.load_labeled_dataset(args.data, corpus.guess_format(args.data))
        if not examples:
            raise corpus.CorpusError(f"no examples in {args.data}")
        vocab = corpus.build_vocabulary([ex.doc for ex in examples])
    except corpus.CorpusError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    data = encode_dataset(examples, vocab, model.seq_len)
    reports = _per_branch_reports(model, data)
    print(f"{'branch':<10}{'precision':>10}{'recall':>10}{'f1':>10}{'accuracy':>10}")
    rows = ["branch,precision,recall,f1,accuracy\n"]
    for name in BRANCH_NAMES:
        r = reports[name]
        cells = [render4(r.precision), render4(r.recall), render4(r.f1), render4(r.accuracy)]
        print(f"{name:<10}" + "".join(f"{c:>10}" for c in cells))
        rows.append(f"{name},{','.join(cells)}\n")
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.writelines(rows)
    return EXIT_OK


def cmd_benchmark(args) -> int:
    try:
        config = load_config(args.config) if args.config else TrainConfig()
        config.validate()
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    datasets = []
    for path in args.datasets:
        name = Path(path).stem
        try:
            _, examples = _load_texts(path)
        except corpus.CorpusError as exc:
            datasets.append((name, None, str(exc)))
            continue
        datasets.append((name, examples, "unlabeled plain text, no label file"
                         if examples is None else ""))
    runnable = [(n, ex) for n, ex, _ in datasets]
    results = benchmark(runnable, config)
    by_name = {r.dataset: r for r in results}
    for name, _, reason in datasets:
        if reason:
            by_name[name].skipped = reason
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_lines = ["dataset,V,branch,mean_train_acc,entire_corpus_acc\n"]
    txt_lines = [f"{'dataset':<16}{'V':>8}{'branch':>10}{'train':>10}{'entire':>10}\n"]
    ok = 0
    for name, _, _ in datasets:
        r = by_name[name]
        if r.skipped:
            csv_lines.append(f"{name},,,skipped: {r.skipped},\n")
            txt_lines.append(f"{name:<16} skipped: {r.skipped}\n")
            continue
        ok += 1
        for branch in r.mean_train_acc:
            csv_lines.append(f"{name},{r.vocab_len},{branch},"
                             f"{r.mean_train_acc[branch]:.2f},{r.entire_corpus_acc[branch]:.2f}\n")
            txt_lines.append(f"{name:<16}{r.vocab_len:>8}{branch:>10}"
                             f"{r.mean_train_acc[branch]:>10.2f}{r.entire_corpus_acc[branch]:>10.2f}\n")
    (out / "benchmark.csv").write_text("".join(csv_lines), encoding="utf-8")
    (out / "benchmark.txt").write_text("".join(txt_lines), encoding="utf-8")
    sys.stdout.write("".join(txt_lines))
    return EXIT_OK if ok else EXIT_DATA


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plstm",
                                     description="parallel bidirectional LSTM sarcasm classifier")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="corpus frequency statistics")
    p.add_argument("--data", required=True)
    p.add_argument("--top-k", type=int, default=100)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("train", help="train the four-branch model")
    p.add_argument("--data", required=True)
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="per-branch classification report")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("benchmark", help="cross-training benchmark over datasets")
    p.add_argument("--config")
    p.add_argument("--datasets", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if "PLSTM_SEED" in os.environ and hasattr(args, "seed") and args.seed is None:
        args.seed = int(os.environ["PLSTM_SEED"])
    if "PLSTM_OUT_DIR" in os.environ and getattr(args, "out", None) is None:
        args.out = os.environ["PLSTM_OUT_DIR"]
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
