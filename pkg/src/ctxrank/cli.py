"""Command-line surface.

Commands: gen-synth, embed, train, eval, rank, grad-check, experiment.
Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import corpus, embedding, experiment, metrics, training
from .errors import DataError, NumericError
from .features import FeatureExtractor, MASKS
from .model_io import load_model, save_model

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; this tool reserves 2 for data errors
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_embedding_flags(p: _Parser) -> None:
    p.add_argument("--embeddings", default=None, help="EMB1 file; ids not found fall back to hashing")
    p.add_argument("--hash-dim", type=int, default=embedding.DEFAULT_DIM, help="hash fallback dimension")
    p.add_argument("--hash-seed", type=int, default=embedding.DEFAULT_SEED, help="hash fallback seed")


def _extractor(args, dataset) -> FeatureExtractor:
    store = embedding.load_embeddings(args.embeddings) if args.embeddings else None
    return FeatureExtractor(dataset, store, fallback_dim=args.hash_dim, fallback_seed=args.hash_seed)


def _parse_attrs(spec: str) -> dict[str, tuple[str, ...]]:
    pools: dict[str, tuple[str, ...]] = {}
    for name in [a.strip() for a in spec.split(",") if a.strip()]:
        if name in corpus.DEFAULT_ATTR_POOLS:
            pools[name] = tuple(corpus.DEFAULT_ATTR_POOLS[name])
        else:
            pools[name] = tuple(f"{name}{i}" for i in range(8))
    return pools


def cmd_gen_synth(args) -> int:
    spec = corpus.SynthSpec(
        n_queries=args.queries,
        docs_per_query=args.docs_per_query,
        attr_pools=_parse_attrs(args.attrs),
        context_strength=args.alpha,
        seed=args.seed,
        good_fraction=args.good_fraction,
    )
    ds = corpus.gen_synthetic(spec)
    corpus.save_dataset(ds, args.out)
    print(f"wrote {len(ds.queries)} queries, {len(ds.documents)} docs, {len(ds.judgments)} judgments to {args.out}")
    return EXIT_OK


def cmd_embed(args) -> int:
    ds = corpus.load_dataset(args.data)
    entries: dict[str, object] = {}
    for d in ds.documents:
        entries[d.id] = embedding.hash_embed(d.title + " " + d.body, args.dim, args.seed)
    for q in ds.queries:
        entries[q.id] = embedding.hash_embed(q.text, args.dim, args.seed)
        for attr, value in (q.context or {}).items():
            entries.setdefault(f"ctx::{attr}::{value}", embedding.hash_embed(value, args.dim, args.seed))
    store = embedding.EmbeddingStore(dim=args.dim, entries=entries)
    embedding.save_embeddings(store, args.out)
    print(f"wrote {len(entries)} vectors of dim {args.dim} to {args.out}")
    return EXIT_OK


def _load_train_data(paths: list[str]):
    loaded = [(Path(p).name or f"ds{i}", corpus.load_dataset(p)) for i, p in enumerate(paths)]
    if len(loaded) == 1:
        return loaded[0][1]
    return experiment.merge_datasets([(tag, ds, 1) for tag, ds in loaded])


def cmd_train(args) -> int:
    dataset = _load_train_data(args.data)
    extractor = _extractor(args, dataset)
    config = training.TrainConfig(
        loss=args.loss,
        margin=args.margin,
        learning_rate=args.lr,
        batch_size=args.batch_size,
        epochs=args.epochs,
        max_pairs_per_query=args.max_pairs,
        seed=args.seed,
        mask=MASKS[args.ablation],
        n_cross=args.n_cross,
        hidden_widths=tuple(int(w) for w in args.hidden.split(",") if w),
    )
    model, history = training.train(dataset, extractor, config)
    save_model(model, args.out)
    if args.loss_log:
        Path(args.loss_log).write_text(training.history_tsv(history), encoding="utf-8")
    print(f"trained {config.epochs} epochs on {history[0].pair_count} pairs; model written to {args.out}")
    print(f"first epoch mean pair loss {history[0].mean_loss:.6f}, last {history[-1].mean_loss:.6f}")
    return EXIT_OK


def cmd_eval(args) -> int:
    model = load_model(args.model)
    dataset = corpus.load_dataset(args.data)
    extractor = _extractor(args, dataset)
    mask = MASKS[args.override_mask] if args.override_mask else None
    report = metrics.evaluate(model, dataset, extractor, k=args.k, mask=mask)
    text = report.to_tsv()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    return EXIT_OK


def cmd_rank(args) -> int:
    model = load_model(args.model)
    dataset = corpus.load_dataset(args.data)
    extractor = _extractor(args, dataset)
    context: dict[str, str] = {}
    for item in args.context or []:
        if "=" not in item:
            raise DataError(f"context must be key=value, got {item!r}")
        key, value = item.split("=", 1)
        context[key] = value
    ranked = experiment.rank_query(model, dataset, extractor, args.query, context, args.top_n)
    print("rank\tdoc_id\tscore\ttitle")
    for i, doc in enumerate(ranked, start=1):
        print(f"{i}\t{doc.doc_id}\t{doc.score:.6f}\t{doc.title}")
    return EXIT_OK


def cmd_grad_check(args) -> int:
    worst_overall = 0.0
    for loss in training.LOSS_KINDS:
        worst = max(training.grad_check(seed, loss=loss) for seed in range(args.seeds))
        worst_overall = max(worst_overall, worst)
        status = "ok" if worst < args.tolerance else "FAIL"
        print(f"{loss}: max relative error {worst:.3e} over {args.seeds} configs [{status}]")
    if worst_overall >= args.tolerance:
        print(f"gradient check failed tolerance {args.tolerance}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def _parse_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def _dataset_refs(spec: str) -> list[experiment.DatasetRef]:
    refs = []
    for item in [s.strip() for s in spec.split(",") if s.strip()]:
        has_context = None
        path = item
        if item.endswith(":ctx"):
            path, has_context = item[: -len(":ctx")], True
        elif item.endswith(":noctx"):
            path, has_context = item[: -len(":noctx")], False
        refs.append(experiment.DatasetRef(path=path, has_context=has_context))
    return refs


def cmd_experiment(args) -> int:
    values = _parse_config_file(args.config) if args.config else {}

    def pick(flag, key, default, cast=str):
        if flag is not None:
            return flag
        if key in values:
            return cast(values[key])
        return default

    datasets = pick(args.datasets, "datasets", None)
    if not datasets:
        raise DataError("experiment needs datasets (flag --datasets or config key datasets)")
    refs = _dataset_refs(datasets) if isinstance(datasets, str) else datasets
    repeats = pick(args.repeat, "repeat", "")
    if repeats:
        factors = [int(r) for r in str(repeats).split(",")]
        if len(factors) != len(refs):
            raise DataError(f"repeat list has {len(factors)} entries for {len(refs)} datasets")
        for ref, factor in zip(refs, factors):
            ref.repeat = factor

    out_dir = pick(args.out, "out_dir", None)
    if not out_dir:
        raise DataError("experiment needs an output directory (--out or config key out_dir)")
    seeds = tuple(int(s) for s in str(pick(args.seeds, "seeds", "0")).split(","))
    ablations = tuple(
        a.strip() for a in str(pick(args.ablations, "ablations", "full,no_context")).split(",") if a.strip()
    )
    train_config = training.TrainConfig(
        loss=pick(args.loss, "loss", "hinge"),
        margin=pick(args.margin, "margin", 1.0, float),
        learning_rate=pick(args.lr, "lr", 0.001, float),
        batch_size=pick(args.batch_size, "batch_size", 32, int),
        epochs=pick(args.epochs, "epochs", 30, int),
        max_pairs_per_query=pick(args.max_pairs, "max_pairs", 100, int),
        n_cross=pick(args.n_cross, "n_cross", 2, int),
        hidden_widths=tuple(
            int(w) for w in str(pick(args.hidden, "hidden_widths", "64,64")).split(",") if w
        ),
    )
    config = experiment.ExperimentConfig(
        datasets=refs,
        out_dir=out_dir,
        train=train_config,
        ablations=ablations,
        k=pick(args.k, "k", 10, int),
        seeds=seeds,
        embeddings=pick(args.embeddings, "embeddings", None),
        train_fraction=pick(args.train_fraction, "train_fraction", 0.8, float),
        threads=pick(args.threads, "threads", None, int),
    )
    report_path = experiment.run_experiment(config)
    print(f"report written to {report_path}")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(
        prog="ctxrank",
        description="Contextual learning-to-rank engine with a synthetic benchmark harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser("gen-synth", formatter_class=fmt, help="generate a synthetic dataset")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--queries", type=int, default=50, help="number of queries")
    p.add_argument("--docs-per-query", type=int, default=20, help="judged docs per query group")
    p.add_argument("--attrs", default="geo,job_family", help="comma-separated context attribute names")
    p.add_argument("--alpha", type=float, default=1.0, help="probability a query carries context")
    p.add_argument("--seed", type=int, default=0, help="generation seed")
    p.add_argument("--good-fraction", type=float, default=0.15, help="fraction of grade-2 docs per group")
    p.set_defaults(func=cmd_gen_synth)

    p = sub.add_parser("embed", formatter_class=fmt, help="export hash-fallback embeddings to EMB1")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--out", required=True, help="output EMB1 file")
    p.add_argument("--dim", type=int, default=embedding.DEFAULT_DIM, help="vector dimension")
    p.add_argument("--seed", type=int, default=embedding.DEFAULT_SEED, help="hash seed")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("train", formatter_class=fmt, help="train a model on one or more datasets")
    p.add_argument("--data", action="append", required=True, help="dataset directory (repeat for mixed training)")
    p.add_argument("--out", required=True, help="output model file")
    p.add_argument("--loss", choices=training.LOSS_KINDS, default="hinge", help="pairwise loss")
    p.add_argument("--margin", type=float, default=1.0, help="hinge margin")
    p.add_argument("--lr", type=float, default=0.001, help="Adam learning rate")
    p.add_argument("--batch-size", type=int, default=32, help="pairs per mini-batch")
    p.add_argument("--epochs", type=int, default=30, help="training epochs")
    p.add_argument("--max-pairs", type=int, default=100, help="pair cap per query group")
    p.add_argument("--seed", type=int, default=0, help="training seed")
    p.add_argument("--ablation", choices=sorted(MASKS), default="full", help="feature ablation mask")
    p.add_argument("--n-cross", type=int, default=2, help="number of cross layers")
    p.add_argument("--hidden", default="64,64", help="hidden layer widths, comma separated")
    p.add_argument("--loss-log", default=None, help="optional per-epoch loss TSV")
    _add_embedding_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", formatter_class=fmt, help="evaluate a model on a dataset")
    p.add_argument("--model", required=True, help="model file")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--k", type=int, default=10, help="metric cutoff")
    p.add_argument("--out", default=None, help="report TSV path (default: stdout)")
    p.add_argument(
        "--override-mask",
        choices=sorted(MASKS),
        default=None,
        help="evaluate under this ablation mask instead of the model's",
    )
    _add_embedding_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("rank", formatter_class=fmt, help="rank documents for an ad-hoc query")
    p.add_argument("--model", required=True, help="model file")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--query", required=True, help="query text or a dataset query id")
    p.add_argument("--context", action="append", default=None, metavar="KEY=VALUE", help="context attribute, repeatable")
    p.add_argument("--top-n", type=int, default=10, help="results to show")
    _add_embedding_flags(p)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("grad-check", formatter_class=fmt, help="verify analytic gradients")
    p.add_argument("--seeds", type=int, default=50, help="seeded configs per loss kind")
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.set_defaults(func=cmd_grad_check)

    p = sub.add_parser("experiment", formatter_class=fmt, help="run the full experiment grid")
    p.add_argument("--config", default=None, help="key=value config file")
    p.add_argument("--datasets", default=None, help="comma list of dataset dirs, each optionally :ctx or :noctx")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--seeds", default=None, help="comma list of seeds")
    p.add_argument("--ablations", default=None, help="comma list of ablation names")
    p.add_argument("--k", type=int, default=None, help="metric cutoff (config: k, default 10)")
    p.add_argument("--loss", choices=training.LOSS_KINDS, default=None)
    p.add_argument("--margin", type=float, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--max-pairs", type=int, default=None)
    p.add_argument("--n-cross", type=int, default=None)
    p.add_argument("--hidden", default=None)
    p.add_argument("--embeddings", default=None)
    p.add_argument("--train-fraction", type=float, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--repeat", default=None, help="comma list of per-dataset repeat factors")
    p.set_defaults(func=cmd_experiment)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse handles --help and usage errors
        return int(exc.code or 0)
    try:
        return args.func(args)
    except DataError as exc:
        print(f"ctxrank: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"ctxrank: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"ctxrank: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"ctxrank: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
