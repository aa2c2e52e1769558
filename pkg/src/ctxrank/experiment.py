"""Experiment harness: per-seed 80/20 splits, single and mixed training,
ablation sweeps, cross-dataset evaluation, and TSV reports.

Every cell (training combo, ablation, seed) trains one model, saves it,
evaluates it on every dataset's held-out test split and contributes rows to
``report.tsv``. ``summary.tsv`` aggregates means over seeds. Split manifests
are emitted so train/test separation is auditable. All outputs are
byte-deterministic functions of the config.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from . import metrics as metrics_mod
from .corpus import Dataset, Document, Judgment, Query, load_dataset, split_train_test
from .embedding import load_embeddings
from .errors import DataError
from .features import FeatureExtractor, MASKS
from .model_io import RankerModel, load_model, save_model
from .training import TrainConfig, history_tsv, train

ENV_THREADS = "CTXRANK_THREADS"


@dataclass
class DatasetRef:
    path: str
    has_context: bool | None = None  # None: detect from the queries
    tag: str = ""
    repeat: int = 1

    def __post_init__(self):
        if not self.tag:
            self.tag = Path(self.path).name or "dataset"
        if self.repeat < 1:
            raise ValueError(f"repeat must be >= 1, got {self.repeat}")


@dataclass
class ExperimentConfig:
    datasets: list[DatasetRef]
    out_dir: str
    train: TrainConfig = TrainConfig()
    ablations: tuple[str, ...] = ("full", "no_context")
    k: int = 10
    seeds: tuple[int, ...] = (0,)
    embeddings: str | None = None
    train_fraction: float = 0.8
    threads: int | None = None

    def __post_init__(self):
        if not self.datasets:
            raise ValueError("at least one dataset is required")
        if not self.seeds:
            raise ValueError("at least one seed is required")
        tags = [d.tag for d in self.datasets]
        if len(set(tags)) != len(tags):
            raise ValueError(f"dataset tags must be unique, got {tags}")
        for name in self.ablations:
            if name not in MASKS:
                raise ValueError(f"unknown ablation {name!r}, expected one of {sorted(MASKS)}")


def effective_threads(requested: int | None) -> int:
    threads = requested if requested and requested > 0 else 1
    cap = os.environ.get(ENV_THREADS)
    if cap:
        try:
            threads = min(threads, max(1, int(cap)))
        except ValueError:
            pass
    return threads


def merge_datasets(parts: list[tuple[str, Dataset, int]]) -> Dataset:
    """Concatenate datasets for mixed training, tag-prefixing every id so
    uniqueness invariants survive; repeated query groups reference the
    same documents."""
    schemas = {tuple(ds.context_attrs) for _, ds, _ in parts}
    if len(schemas) != 1:
        raise DataError(
            "schema incompatibility between mixed datasets: attribute lists differ: "
            + "; ".join(f"{tag}={list(ds.context_attrs)}" for tag, ds, _ in parts)
        )
    documents: list[Document] = []
    queries: list[Query] = []
    judgments: list[Judgment] = []
    for tag, ds, repeat in parts:
        for d in ds.documents:
            documents.append(Document(id=f"{tag}::{d.id}", title=d.title, body=d.body))
        for rep in range(repeat):
            suffix = f"::rep{rep}" if rep else ""
            for q in ds.queries:
                queries.append(Query(id=f"{tag}::{q.id}{suffix}", text=q.text, context=q.context))
            for j in ds.judgments:
                judgments.append(
                    Judgment(
                        query_id=f"{tag}::{j.query_id}{suffix}",
                        doc_id=f"{tag}::{j.doc_id}",
                        label=j.label,
                    )
                )
    return Dataset(
        documents=documents,
        queries=queries,
        judgments=judgments,
        context_attrs=list(parts[0][1].context_attrs),
    )


@dataclass
class _Cell:
    combo_tag: str
    ablation: str
    seed: int


@dataclass
class CellResult:
    cell: _Cell
    rows: list[tuple]  # (train, ablation, ctx_flag, eval_tag, seed, metrics)
    model_path: str


def _ctx_flag(ablation: str) -> str:
    return "w/o" if ablation == "no_context" else "w/"


def run_experiment(config: ExperimentConfig) -> Path:
    """Run the full grid and return the path of report.tsv."""
    out = Path(config.out_dir)
    (out / "models").mkdir(parents=True, exist_ok=True)
    (out / "logs").mkdir(exist_ok=True)
    (out / "reports").mkdir(exist_ok=True)
    (out / "splits").mkdir(exist_ok=True)

    store = load_embeddings(config.embeddings) if config.embeddings else None
    loaded = [(ref, load_dataset(ref.path)) for ref in config.datasets]
    schemas = {tuple(ds.context_attrs) for _, ds in loaded}
    if len(schemas) != 1:
        raise DataError(
            "schema incompatibility between datasets: "
            + "; ".join(f"{ref.tag}={list(ds.context_attrs)}" for ref, ds in loaded)
        )

    # per-seed splits and their manifests
    splits: dict[tuple[str, int], tuple[Dataset, Dataset]] = {}
    for seed in config.seeds:
        for ref, ds in loaded:
            train_ds, test_ds = split_train_test(ds, config.train_fraction, seed)
            splits[(ref.tag, seed)] = (train_ds, test_ds)
            manifest = ["query_id\tsplit"]
            train_ids = {q.id for q in train_ds.queries}
            for q in ds.queries:
                manifest.append(f"{q.id}\t{'train' if q.id in train_ids else 'test'}")
            path = out / "splits" / f"{ref.tag}__seed{seed}.tsv"
            path.write_text("\n".join(manifest) + "\n", encoding="utf-8")

    # evaluation extractors are shared: stats depend only on the corpus
    eval_extractors = {ref.tag: FeatureExtractor(ds, store) for ref, ds in loaded}

    combos: list[tuple[str, list[DatasetRef]]] = [(ref.tag, [ref]) for ref, _ in loaded]
    if len(loaded) > 1:
        combos.append(("mixed", [ref for ref, _ in loaded]))

    cells = [
        _Cell(combo_tag=tag, ablation=ablation, seed=seed)
        for tag, _ in combos
        for ablation in config.ablations
        for seed in config.seeds
    ]
    combo_refs = dict(combos)

    def run_cell(cell: _Cell) -> CellResult:
        refs = combo_refs[cell.combo_tag]
        if len(refs) == 1:
            train_ds = splits[(refs[0].tag, cell.seed)][0]
        else:
            train_ds = merge_datasets(
                [(ref.tag, splits[(ref.tag, cell.seed)][0], ref.repeat) for ref in refs]
            )
        extractor = FeatureExtractor(train_ds, store)
        cfg = replace(config.train, seed=cell.seed, mask=MASKS[cell.ablation])
        model, history = train(train_ds, extractor, cfg)

        stem = f"{cell.combo_tag}__{cell.ablation}__seed{cell.seed}"
        model_path = out / "models" / f"{stem}.ctxr"
        save_model(model, model_path)
        (out / "logs" / f"{stem}.tsv").write_text(history_tsv(history), encoding="utf-8")

        # evaluate from the persisted artifact so reports reproduce from disk
        persisted = load_model(model_path)
        rows = []
        for ref, _ in loaded:
            test_ds = splits[(ref.tag, cell.seed)][1]
            report = metrics_mod.evaluate(
                persisted, test_ds, eval_extractors[ref.tag], k=config.k
            )
            (out / "reports" / f"{stem}__eval_{ref.tag}.tsv").write_text(
                report.to_tsv(), encoding="utf-8"
            )
            rows.append(
                (
                    cell.combo_tag,
                    cell.ablation,
                    _ctx_flag(cell.ablation),
                    ref.tag,
                    cell.seed,
                    report.mean_ndcg,
                    report.mean_ap,
                    report.mean_precision,
                    report.mean_recall,
                )
            )
        return CellResult(cell=cell, rows=rows, model_path=str(model_path))

    threads = effective_threads(config.threads)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run_cell, cells))
    else:
        results = [run_cell(cell) for cell in cells]

    header = f"train_data\tablation\tcontext_features\teval_data\tseed\tndcg@{config.k}\tmap\tp@{config.k}\trecall@{config.k}"
    lines = [header]
    for result in results:
        for row in result.rows:
            lines.append(
                f"{row[0]}\t{row[1]}\t{row[2]}\t{row[3]}\t{row[4]}"
                f"\t{row[5]:.6f}\t{row[6]:.6f}\t{row[7]:.6f}\t{row[8]:.6f}"
            )
    report_path = out / "report.tsv"
    report_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    # summary: mean over seeds per (combo, ablation, eval dataset)
    acc: dict[tuple[str, str, str], list[tuple[float, float, float, float]]] = {}
    order: list[tuple[str, str, str]] = []
    for result in results:
        for row in result.rows:
            key = (row[0], row[1], row[3])
            if key not in acc:
                acc[key] = []
                order.append(key)
            acc[key].append(row[5:9])
    sum_lines = [
        f"train_data\tablation\tcontext_features\teval_data\tseeds\tndcg@{config.k}\tmap\tp@{config.k}\trecall@{config.k}"
    ]
    for key in order:
        vals = acc[key]
        means = [sum(v[i] for v in vals) / len(vals) for i in range(4)]
        sum_lines.append(
            f"{key[0]}\t{key[1]}\t{_ctx_flag(key[1])}\t{key[2]}\t{len(vals)}"
            f"\t{means[0]:.6f}\t{means[1]:.6f}\t{means[2]:.6f}\t{means[3]:.6f}"
        )
    (out / "summary.tsv").write_text("\n".join(sum_lines) + "\n", encoding="utf-8")
    return report_path


# ---------------------------------------------------------------------------
# Ad-hoc ranking
# ---------------------------------------------------------------------------


@dataclass
class RankedDoc:
    doc_id: str
    score: float
    title: str


def rank_query(
    model: RankerModel,
    dataset: Dataset,
    extractor: FeatureExtractor,
    query_text: str,
    context: dict[str, str] | None = None,
    top_n: int = 10,
) -> list[RankedDoc]:
    """Score documents for an ad-hoc query under the trained model.

    If ``query_text`` matches a dataset query id or text and that query has
    judgments, only its judged candidates are scored; otherwise the whole
    corpus is. Context keys must belong to the model's schema; no context
    means all context features are zero.
    """
    if context:
        unknown = set(context) - set(model.schema.context_attrs)
        if unknown:
            raise DataError(f"unknown context attribute(s): {sorted(unknown)}")
    matched = None
    for q in dataset.queries:
        if q.id == query_text or q.text == query_text:
            matched = q
            break
    groups = dataset.judgments_by_query()
    if matched is not None and groups[matched.id]:
        docs = [dataset.doc(j.doc_id) for j in groups[matched.id]]
    else:
        docs = list(dataset.documents)
    query = Query(
        id=matched.id if matched is not None else "::adhoc::",
        text=query_text,
        context=dict(context) if context else None,
    )
    scores = metrics_mod.score_group(model, extractor, query, docs)
    order = sorted(range(len(docs)), key=lambda i: (-scores[i], docs[i].id))
    top = order[: max(0, top_n)] if top_n else order
    return [RankedDoc(doc_id=docs[i].id, score=float(scores[i]), title=docs[i].title) for i in top]
