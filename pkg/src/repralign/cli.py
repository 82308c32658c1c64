"""Command-line interface.

    repralign thas      alignment curves and THAS per subsample seed
    repralign adbi      Davies-Bouldin curves and ADBI per subsample seed
    repralign alc       few-shot learning curve and ALC
    repralign cluster   Ward dendrograms only (reusable via --dendrogram)
    repralign featurize bag-of-words matrix from a JSONL corpus
    repralign report    Table-style matrices from cells files
    repralign correlate Pearson/Spearman between two metrics of cells files

Settings come from defaults, then ``--config`` (TOML, ``[common]`` and
``[<command>]`` sections), then ``--from-artifact`` (the config embedded in
a previous output), then flags.  Exit codes: 0 success, 2 usage or
validation error, 3 failure during computation.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import alignment, fewshot, hierclust, ingest, quality, stats, svg
from .core import EmbeddedDataset, subsample, validate_dataset
from .errors import ReprAlignError, ValidationError
from .rng import Xoshiro256, derive_seed

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("repralign")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 2, 3
DATASET_COMMANDS = ("thas", "adbi", "alc", "cluster")
COMMANDS = (*DATASET_COMMANDS, "featurize", "report", "correlate")
# not part of the embedded provenance: they do not change any output
NON_PROVENANCE = ("out", "workers", "config", "from_artifact")


@dataclass
class RunConfig:
    command: str = ""
    matrix: str | None = None
    labels: str | None = None
    matrix_format: str | None = None
    corpus: str | None = None
    text_field: str = "text"
    label_field: str = "label"
    min_count: int = 2
    vocab: str | None = None
    positive: str | None = None
    representation: str = "repr"
    dataset: str = "data"
    subsample: int = 10000
    seeds: int = 5
    seed_base: int = 0
    k_stride: int = 1
    low_memory: bool = False
    all_labels: bool = False
    dendrogram: str | None = None
    n_grid: list[int] = field(default_factory=lambda: list(fewshot.DEFAULT_NS))
    lambdas: list[float] = field(default_factory=lambda: list(fewshot.DEFAULT_LAMBDAS))
    folds: int = 5
    metric: str = "accuracy"
    test_fraction: float = 0.2
    test_matrix: str | None = None
    test_labels: str | None = None
    cells: list[str] = field(default_factory=list)
    x_metric: str = "ALC"
    y_metrics: list[str] = field(default_factory=lambda: ["THAS", "ADBI"])
    granularity: str = "both"
    columns: list[str] | None = None
    log_x: bool = False
    out: str = "repralign-out"
    workers: int = 0
    config: str | None = None
    from_artifact: str | None = None

    def provenance(self) -> dict:
        return {k: v for k, v in dataclasses.asdict(self).items() if k not in NON_PROVENANCE}

    def validate(self) -> None:
        def need(cond: bool, msg: str):
            if not cond:
                raise ValidationError(msg)

        need(self.command in COMMANDS, f"unknown command {self.command!r}")
        if self.command in DATASET_COMMANDS or self.command == "featurize":
            has_matrix = self.matrix is not None
            need(has_matrix or self.corpus is not None, "give --matrix and --labels, or --corpus")
            need(not (has_matrix and self.corpus), "--matrix and --corpus are mutually exclusive")
            if has_matrix:
                need(self.labels is not None, "--matrix requires --labels")
        if self.command == "featurize":
            need(self.corpus is not None, "featurize needs --corpus")
        if self.command in ("thas", "adbi", "alc"):
            need(self.positive is not None, "--positive is required")
        need(self.subsample >= 2, "--subsample must be >= 2")
        need(self.seeds >= 1, "--seeds must be >= 1")
        need(self.seed_base >= 0, "--seed-base must be >= 0")
        need(self.k_stride >= 1, "--k-stride must be >= 1")
        need(self.min_count >= 1, "--min-count must be >= 1")
        need(self.folds >= 2, "--folds must be >= 2")
        need(len(self.n_grid) > 0 and all(n >= self.folds for n in self.n_grid), "--n-grid values must be >= folds")
        need(len(self.lambdas) > 0 and all(l > 0 for l in self.lambdas), "--lambdas must be positive")
        need(self.metric in fewshot.METRICS, f"--metric must be one of {fewshot.METRICS}")
        need(0.0 < self.test_fraction < 1.0, "--test-fraction must lie in (0, 1)")
        need((self.test_matrix is None) == (self.test_labels is None), "--test-matrix and --test-labels go together")
        need(self.granularity in ("cells", "means", "both"), "--granularity must be cells, means or both")
        need(self.workers >= 1, "--workers must be >= 1")
        if self.command in ("report", "correlate"):
            need(len(self.cells) > 0, "--cells is required")
        if self.dendrogram is not None and self.seeds > 1:
            need("{seed}" in self.dendrogram, "with several seeds, --dendrogram must contain '{seed}'")


def _default_workers() -> int:
    env = os.environ.get("REPRALIGN_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValidationError(f"REPRALIGN_WORKERS must be an integer, got {env!r}") from None
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:
        return max(1, os.cpu_count() or 1)


# ------------------------------------------------------------------ parsing


def _int_list(text: str) -> list[int]:
    text = text.strip()
    if ":" in text:
        parts = [int(p) for p in text.split(":")]
        if len(parts) != 3:
            raise argparse.ArgumentTypeError("ranges are start:stop:step (inclusive stop)")
        start, stop, step = parts
        return list(range(start, stop + 1, step))
    return [int(p) for p in text.split(",") if p]


def _float_list(text: str) -> list[float]:
    return [float(p) for p in text.split(",") if p]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="repralign", description="Task alignment of vector representations.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    S = argparse.SUPPRESS

    def common(p):
        p.add_argument("--config", default=S, help="TOML file with [common] and [<command>] sections")
        p.add_argument("--from-artifact", default=S, help="re-run with the config embedded in an output CSV")
        p.add_argument("--out", default=S, help="output directory")
        p.add_argument("--workers", type=int, default=S)

    def data(p):
        p.add_argument("--matrix", default=S, help="vectors: .npy, .csv or sparse .npz")
        p.add_argument("--matrix-format", default=S, choices=["csv", "npy", "npz"])
        p.add_argument("--labels", default=S, help="one label per line, or id,label CSV")
        p.add_argument("--corpus", default=S, help="JSONL corpus, featurized as bag-of-words")
        p.add_argument("--text-field", default=S)
        p.add_argument("--label-field", default=S)
        p.add_argument("--min-count", type=int, default=S)
        p.add_argument("--positive", default=S, help="name of the positive class")
        p.add_argument("--representation", default=S, help="representation name for cells output")
        p.add_argument("--dataset", default=S, help="dataset name for cells output")

    def clustering(p):
        p.add_argument("--subsample", type=int, default=S, help="points per seed (default 10000, capped at n)")
        p.add_argument("--seeds", type=int, default=S, help="number of subsample seeds (default 5)")
        p.add_argument("--seed-base", type=int, default=S, help="first seed value (default 0)")
        p.add_argument("--low-memory", action="store_const", const=True, default=S)
        p.add_argument("--dendrogram", default=S, help="reuse cached dendrograms; '{seed}' expands per seed")

    p = sub.add_parser("thas", help="task hierarchical alignment score")
    common(p), data(p), clustering(p)
    p.add_argument("--all-labels", action="store_const", const=True, default=S)
    p.add_argument("--log-x", action="store_const", const=True, default=S)

    p = sub.add_parser("adbi", help="Davies-Bouldin curves and ADBI")
    common(p), data(p), clustering(p)
    p.add_argument("--k-stride", type=int, default=S)
    p.add_argument("--log-x", action="store_const", const=True, default=S)

    p = sub.add_parser("cluster", help="write Ward dendrograms")
    common(p), data(p), clustering(p)

    p = sub.add_parser("alc", help="few-shot learning curve and ALC")
    common(p), data(p)
    p.add_argument("--seeds", type=int, default=S)
    p.add_argument("--seed-base", type=int, default=S)
    p.add_argument("--n-grid", type=_int_list, default=S, help="e.g. 100:1000:100 or 100,200")
    p.add_argument("--lambdas", type=_float_list, default=S)
    p.add_argument("--folds", type=int, default=S)
    p.add_argument("--metric", choices=fewshot.METRICS, default=S)
    p.add_argument("--test-fraction", type=float, default=S)
    p.add_argument("--test-matrix", default=S)
    p.add_argument("--test-labels", default=S)
    p.add_argument("--dendrogram", default=S, help=argparse.SUPPRESS)

    p = sub.add_parser("featurize", help="bag-of-words features from a JSONL corpus")
    common(p)
    p.add_argument("--corpus", default=S)
    p.add_argument("--text-field", default=S)
    p.add_argument("--label-field", default=S)
    p.add_argument("--min-count", type=int, default=S)
    p.add_argument("--vocab", default=S, help="reuse a vocabulary artifact (transform mode)")

    p = sub.add_parser("report", help="report matrices from cells files")
    common(p)
    p.add_argument("--cells", nargs="+", default=S)
    p.add_argument("--columns", type=lambda s: s.split(","), default=S)
    p.add_argument("--dendrogram", default=S, help=argparse.SUPPRESS)

    p = sub.add_parser("correlate", help="correlate metrics across cells files")
    common(p)
    p.add_argument("--cells", nargs="+", default=S)
    p.add_argument("--x", dest="x_metric", default=S)
    p.add_argument("--y", dest="y_metrics", action="append", default=S)
    p.add_argument("--granularity", choices=["cells", "means", "both"], default=S)
    p.add_argument("--dendrogram", default=S, help=argparse.SUPPRESS)
    return parser


def _coerce(name: str, value):
    f = {f.name: f for f in dataclasses.fields(RunConfig)}.get(name)
    if f is None:
        raise ValidationError(f"unknown setting {name!r}")
    if isinstance(value, str) and name == "n_grid":
        return _int_list(value)
    if isinstance(value, str) and name == "lambdas":
        return _float_list(value)
    if isinstance(value, str) and name in ("cells", "y_metrics"):
        return [value]
    return value


def resolve_config(argv: list[str]) -> tuple[RunConfig, bool]:
    args = _build_parser().parse_args(argv)
    given = {k: v for k, v in vars(args).items() if k not in ("verbose",)}
    cfg = RunConfig(command=args.command)
    layers: list[dict] = []
    if "config" in given:
        with open(given["config"], "rb") as fh:
            doc = tomllib.load(fh)
        layers.append(dict(doc.get("common", {})))
        layers.append(dict(doc.get(args.command, {})))
    if "from_artifact" in given:
        _, _, _, meta = ingest.read_tagged_csv(given["from_artifact"])
        embedded = meta.get("config")
        if not isinstance(embedded, dict):
            raise ValidationError(f"{given['from_artifact']} carries no embedded config")
        if embedded.get("command") != args.command:
            raise ValidationError(f"artifact was produced by {embedded.get('command')!r}, not {args.command!r}")
        layers.append(embedded)
    layers.append(given)
    for layer in layers:
        for key, value in layer.items():
            key = key.replace("-", "_")
            setattr(cfg, key, _coerce(key, value))
    if cfg.workers in (0, None):
        cfg.workers = _default_workers()
    cfg.validate()
    return cfg, args.verbose


# ------------------------------------------------------------------ helpers


def _load_dataset(cfg: RunConfig, positive_required: bool = True) -> EmbeddedDataset:
    if cfg.corpus:
        corpus = ingest.load_jsonl_corpus(cfg.corpus, cfg.text_field, cfg.label_field)
        vocab = ingest.load_vocabulary(cfg.vocab) if cfg.vocab else None
        matrix, _ = ingest.bow_featurize(corpus, cfg.min_count, vocab, workers=cfg.workers)
        labels, names = corpus.labels, list(corpus.label_vocab)
    else:
        matrix = ingest.load_dense_matrix(cfg.matrix, cfg.matrix_format)
        labels, names = ingest.load_labels(cfg.labels, expected_rows=matrix.shape[0])
    positive = cfg.positive if cfg.positive is not None else names[0]
    return validate_dataset(matrix, labels, names, positive)


def _seeds(cfg: RunConfig) -> list[int]:
    return [cfg.seed_base + i for i in range(cfg.seeds)]


def _subsamples(cfg: RunConfig, ds: EmbeddedDataset) -> list[tuple[int, EmbeddedDataset]]:
    size = min(cfg.subsample, ds.n)
    if size == ds.n:
        return [(s, ds) for s in _seeds(cfg)]
    return [(s, subsample(ds, size, s)) for s in _seeds(cfg)]


def _dendrogram_for(cfg: RunConfig, seed: int, sub: EmbeddedDataset, cache: dict) -> hierclust.Dendrogram:
    key = sub.fingerprint()
    if key in cache:
        return cache[key]
    if cfg.dendrogram:
        dn = ingest.load_dendrogram(cfg.dendrogram.replace("{seed}", str(seed)))
        dn.check_against(sub)
    else:
        dn = hierclust.ward_cluster(sub, low_memory=cfg.low_memory, workers=cfg.workers)
    cache[key] = dn
    return dn


def _meta(cfg: RunConfig, **extra) -> dict:
    return {"config": cfg.provenance(), **extra}


def _mean_std(values: list[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    return float(arr.mean()), (float(arr.std(ddof=1)) if arr.size > 1 else 0.0)


def _report_line(name: str, values: list[float]) -> str:
    mean, std = _mean_std(values)
    if len(values) > 1:
        return f"{name} = {mean:.4f} ± {std:.4f} over {len(values)} seeds"
    return f"{name} = {mean:.4f}"


# ----------------------------------------------------------------- commands


def prepare_dataset(cfg: RunConfig) -> EmbeddedDataset:
    return _load_dataset(cfg)


def cmd_cluster(cfg: RunConfig, ds: EmbeddedDataset, out: Path) -> None:
    cache: dict = {}
    for seed, sub in _subsamples(cfg, ds):
        dn = _dendrogram_for(cfg, seed, sub, cache)
        ingest.save_dendrogram(out / f"dendrogram_seed{seed}.csv", dn, _meta(cfg, seed=seed, subsample=sub.n))
        print(f"seed {seed}: {dn.n} points, total merge cost {float(dn.cost.sum()):.6g}")


def cmd_thas(cfg: RunConfig, ds: EmbeddedDataset, out: Path) -> None:
    cache: dict = {}
    labels = [ds.positive_class]
    if cfg.all_labels:
        counts = ds.label_counts()
        labels = [l for l in range(ds.n_labels) if 0 < counts[l] < ds.n]
    per_label: dict[int, list[float]] = {l: [] for l in labels}
    curves = []
    summary_rows = []
    for seed, sub in _subsamples(cfg, ds):
        dn = _dendrogram_for(cfg, seed, sub, cache)
        for lab in labels:
            res = alignment.thas(sub, dn, lab)
            per_label[lab].append(res.thas)
            summary_rows.append((seed, ds.label_vocab[lab], res.thas))
            if lab == ds.positive_class:
                curves.append(res.curve.values)
                ingest.save_curve(
                    out / f"alignment_seed{seed}.csv",
                    "alignment-curve",
                    ["k", "alignment"],
                    [res.curve.index, res.curve.values],
                    _meta(cfg, seed=seed, positive_class=ds.label_vocab[lab], thas=res.thas, subsample=sub.n),
                )
    pos = ds.positive_class
    mean_curve = np.mean(np.vstack(curves), axis=0)
    k = np.arange(1, len(mean_curve) + 1)
    tau_mean, tau_std = _mean_std(per_label[pos])
    meta = _meta(cfg, positive_class=ds.label_vocab[pos], thas_mean=tau_mean, seeds=_seeds(cfg))
    if len(curves) > 1:
        meta["thas_std"] = tau_std
    ingest.save_curve(out / "alignment_mean.csv", "alignment-curve", ["k", "alignment"], [k, mean_curve], meta)
    smeta = _meta(cfg, thas_mean=tau_mean)
    if len(curves) > 1:
        smeta["thas_std"] = tau_std
    if cfg.all_labels:
        smeta["thas_label_mean"] = float(np.mean([np.mean(v) for v in per_label.values()]))
    ingest.write_tagged_csv(out / "thas_summary.csv", "thas-summary", ["seed", "label", "thas"], summary_rows, smeta)
    cells = [(cfg.representation, cfg.dataset, "THAS", tau_mean)]
    ingest.save_cells(out / "cells.csv", [stats.Cell(*c) for c in cells], _meta(cfg))
    svg.line_chart(
        out / "alignment.svg",
        [(f"seed {s}", k, c) for s, c in zip(_seeds(cfg), curves)] if len(curves) > 1 else [("", k, curves[0])],
        title=f"Task hierarchical alignment: {cfg.representation} / {cfg.dataset}",
        xlabel="clusters k",
        ylabel="alignment a(P_k)",
        logx=cfg.log_x,
    )
    print(_report_line(f"THAS[{ds.label_vocab[pos]}]", per_label[pos]))
    if cfg.all_labels:
        for lab in labels:
            if lab != pos:
                print(_report_line(f"THAS[{ds.label_vocab[lab]}]", per_label[lab]))
        print(f"THAS label mean = {smeta['thas_label_mean']:.4f}")


def cmd_adbi(cfg: RunConfig, ds: EmbeddedDataset, out: Path) -> None:
    cache: dict = {}
    adbis, curves = [], []
    rows = []
    ks = None
    for seed, sub in _subsamples(cfg, ds):
        dn = _dendrogram_for(cfg, seed, sub, cache)
        res = quality.dbi_curve(sub, dn, cfg.k_stride)
        adbis.append(res.adbi)
        curves.append(res.curve.values)
        ks = res.curve.index
        rows.append((seed, res.adbi, res.n_infinite))
        ingest.save_curve(
            out / f"dbi_seed{seed}.csv",
            "dbi-curve",
            ["k", "dbi"],
            [res.curve.index, res.curve.values],
            _meta(cfg, seed=seed, stride=cfg.k_stride, excluded_levels=res.n_infinite, adbi=res.adbi, subsample=sub.n),
        )
    stacked = np.vstack(curves)
    stacked = np.where(np.isfinite(stacked), stacked, np.nan)
    with np.errstate(invalid="ignore"):
        mean_curve = np.nanmean(stacked, axis=0) if np.isfinite(stacked).any() else stacked[0]
    mean, std = _mean_std(adbis)
    meta = _meta(cfg, adbi_mean=mean, stride=cfg.k_stride, seeds=_seeds(cfg))
    if len(adbis) > 1:
        meta["adbi_std"] = std
    ingest.save_curve(out / "dbi_mean.csv", "dbi-curve", ["k", "dbi"], [ks, mean_curve], meta)
    ingest.write_tagged_csv(out / "adbi_summary.csv", "adbi-summary", ["seed", "adbi", "excluded_levels"], rows, meta)
    ingest.save_cells(out / "cells.csv", [stats.Cell(cfg.representation, cfg.dataset, "ADBI", mean)], _meta(cfg))
    svg.line_chart(
        out / "dbi.svg",
        [("", ks, mean_curve)],
        title=f"Davies-Bouldin index: {cfg.representation} / {cfg.dataset}",
        xlabel="clusters k",
        ylabel="DBI",
        logx=cfg.log_x,
    )
    print(_report_line("ADBI", adbis))


def _split(cfg: RunConfig, ds: EmbeddedDataset) -> tuple[EmbeddedDataset, EmbeddedDataset]:
    if cfg.test_matrix:
        matrix = ingest.load_dense_matrix(cfg.test_matrix)
        labels, names = ingest.load_labels(cfg.test_labels, expected_rows=matrix.shape[0])
        remap = {name: i for i, name in enumerate(ds.label_vocab)}
        unknown = [n for n in names if n not in remap]
        if unknown:
            raise ValidationError(f"test labels not present in training labels: {unknown}")
        ids = np.array([remap[names[i]] for i in labels], dtype=np.int64)
        test = validate_dataset(matrix, ids, ds.label_vocab, ds.positive_class)
        return ds, test
    n_test = int(round(cfg.test_fraction * ds.n))
    if not 1 <= n_test < ds.n:
        raise ValidationError("test split is empty or covers everything")
    rng = Xoshiro256(derive_seed(cfg.seed_base, 0x7E57))
    test_rows = np.sort(np.asarray(rng.sample_indices(ds.n, n_test), dtype=np.int64))
    mask = np.zeros(ds.n, dtype=bool)
    mask[test_rows] = True
    pool, test = ds.take(np.flatnonzero(~mask)), ds.take(test_rows)
    if test.positive_mask.all() or not test.positive_mask.any():
        raise ValidationError("test split lacks one of the classes; change --seed-base or --test-fraction")
    return pool, test


def cmd_alc(cfg: RunConfig, ds: EmbeddedDataset, out: Path) -> None:
    pool, test = _split(cfg, ds)
    if max(cfg.n_grid) > pool.n:
        raise ValidationError(f"largest N ({max(cfg.n_grid)}) exceeds the training pool ({pool.n})")
    res = fewshot.learning_curve(
        pool, test, cfg.n_grid, _seeds(cfg), cfg.metric, cfg.lambdas, cfg.folds, workers=cfg.workers
    )
    meta = _meta(cfg, metric_kind=cfg.metric, seeds=list(res.seeds), grid=list(cfg.lambdas), alc=res.alc, flagged=[list(f) for f in res.flagged])
    ingest.save_curve(
        out / "learning_curve.csv",
        "learning-curve",
        ["N", "mean_metric", "std_metric"],
        [res.curve.index, res.curve.values, res.std],
        meta,
    )
    per_seed = [
        (s, n, res.per_seed[i, j], res.lambdas[i, j])
        for i, s in enumerate(res.seeds)
        for j, n in enumerate(res.curve.index)
    ]
    ingest.write_tagged_csv(out / "learning_curve_per_seed.csv", "learning-curve-cells", ["seed", "N", "metric", "lambda"], per_seed, _meta(cfg))
    ingest.save_cells(out / "cells.csv", [stats.Cell(cfg.representation, cfg.dataset, "ALC", res.alc)], _meta(cfg))
    svg.line_chart(
        out / "learning_curve.svg",
        [("", res.curve.index, res.curve.values)],
        title=f"Few-shot learning curve: {cfg.representation} / {cfg.dataset}",
        xlabel="training samples N",
        ylabel=cfg.metric,
    )
    print(f"ALC ({cfg.metric}) = {res.alc:.4f}")


def cmd_featurize(cfg: RunConfig, out: Path) -> None:
    corpus = ingest.load_jsonl_corpus(cfg.corpus, cfg.text_field, cfg.label_field)
    vocab = ingest.load_vocabulary(cfg.vocab) if cfg.vocab else None
    matrix, vocab = ingest.bow_featurize(corpus, cfg.min_count, vocab, workers=cfg.workers)
    import scipy.sparse as sp

    sp.save_npz(out / "bow.npz", matrix, compressed=False)
    ingest.write_labels(out / "labels.txt", corpus.labels, corpus.label_vocab)
    ingest.save_vocabulary(out / "vocabulary.csv", vocab)
    ingest.write_tagged_csv(
        out / "featurize_summary.csv",
        "featurize-summary",
        ["documents", "terms", "nonzeros"],
        [(matrix.shape[0], matrix.shape[1], matrix.nnz)],
        _meta(cfg, built_from=vocab.built_from),
    )
    print(f"{matrix.shape[0]} documents x {matrix.shape[1]} terms, {matrix.nnz} nonzeros")


def _all_cells(cfg: RunConfig) -> list:
    cells = []
    for path in cfg.cells:
        cells.extend(ingest.load_cells(path))
    return cells


def cmd_report(cfg: RunConfig, out: Path) -> None:
    cells = _all_cells(cfg)
    for metric in sorted({c[2] for c in cells}):
        rep = stats.build_report(cells, metric, columns=cfg.columns, descending=metric.upper() != "ADBI")
        ingest.save_report(out / f"report_{metric}.csv", rep, _meta(cfg))
        text = rep.to_text()
        (out / f"report_{metric}.txt").write_text(text, encoding="utf8")
        print(text)


def cmd_correlate(cfg: RunConfig, out: Path) -> None:
    cells = _all_cells(cfg)
    grans = ["cells", "means"] if cfg.granularity == "both" else [cfg.granularity]
    rows = []
    for y_metric in cfg.y_metrics:
        for gran in grans:
            xs, ys, tags = stats.pairs_from_cells(cells, cfg.x_metric, y_metric, gran)
            rep = stats.correlate(xs, ys, tags)
            rows.append((cfg.x_metric, y_metric, gran, len(xs), rep.pearson_r, rep.pearson_p, rep.spearman_r, rep.spearman_p))
            ingest.write_tagged_csv(
                out / f"pairs_{y_metric}_{gran}.csv", "correlation-pairs", ["x", "y", "tag"], rep.pairs, _meta(cfg, x=cfg.x_metric, y=y_metric)
            )
            groups: dict[str, tuple[list, list]] = {}
            for x, y, tag in rep.pairs:
                g = groups.setdefault(tag.split(":")[0], ([], []))
                g[0].append(x)
                g[1].append(y)
            svg.scatter(
                out / f"scatter_{y_metric}_{gran}.svg",
                [(name, xs_, ys_) for name, (xs_, ys_) in groups.items()],
                title=f"{cfg.x_metric} vs {y_metric} ({gran})",
                xlabel=cfg.x_metric,
                ylabel=y_metric,
            )
            print(
                f"{'mu ' if gran == 'means' else ''}{cfg.x_metric} vs {y_metric} (n={len(xs)}): "
                f"r_p = {rep.pearson_r:.3f} (p={rep.pearson_p:.3g})  r_s = {rep.spearman_r:.3f} (p={rep.spearman_p:.3g})"
            )
    ingest.write_tagged_csv(
        out / "correlation.csv",
        "correlation",
        ["x_metric", "y_metric", "granularity", "n", "pearson_r", "pearson_p", "spearman_r", "spearman_p"],
        rows,
        _meta(cfg),
    )


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        cfg, verbose = resolve_config(argv)
    except SystemExit as exc:  # argparse usage errors
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    except (ReprAlignError, OSError, ValueError, tomllib.TOMLDecodeError) as exc:
        _print_error(exc)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    out = Path(cfg.out)
    ds = None
    try:
        out.mkdir(parents=True, exist_ok=True)
        if cfg.command in DATASET_COMMANDS:
            ds = prepare_dataset(cfg)
            if cfg.command == "alc":
                _split(cfg, ds)
    except (ReprAlignError, OSError, ValueError) as exc:
        _print_error(exc)
        return EXIT_USAGE
    try:
        if cfg.command == "thas":
            cmd_thas(cfg, ds, out)
        elif cfg.command == "adbi":
            cmd_adbi(cfg, ds, out)
        elif cfg.command == "cluster":
            cmd_cluster(cfg, ds, out)
        elif cfg.command == "alc":
            cmd_alc(cfg, ds, out)
        elif cfg.command == "featurize":
            cmd_featurize(cfg, out)
        elif cfg.command == "report":
            cmd_report(cfg, out)
        elif cfg.command == "correlate":
            cmd_correlate(cfg, out)
    except ValidationError as exc:
        _print_error(exc)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - mapped to the runtime exit code
        _print_error(exc)
        return EXIT_RUNTIME
    return EXIT_OK


def _print_error(exc: BaseException) -> None:
    code = exc.code if isinstance(exc, ReprAlignError) else type(exc).__name__
    print(f"error[{code}]: {exc}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
