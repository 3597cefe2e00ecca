"""Experiment orchestration: cross-validation, modality splits, reports,
and the two zero-shot transfer evaluations.

The unit of splitting is the object, never the record: all observations of
an object live in exactly one fold, and every fitted statistic
(standardizer, PCA, probe weights, aggregate baseline) comes from training
objects only.
"""

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .embeddings import EmbeddingTable
from .metrics import (
    MetricTriple,
    aggregate_baseline,
    argmax_bucket,
    bucket_accuracy,
    density_mse,
    emd,
)
from .probes import ProbePipeline, TrainConfig, fit_pipeline
from .scalardata import (
    BASE10_SCHEME,
    BucketScheme,
    EmpiricalDistribution,
    ModalityLabel,
    ScalarRecord,
    build_distribution,
    detect_modality,
    filter_min_count,
    log_median,
)

logger = logging.getLogger(__name__)

SUBSETS = ("all", "unimodal", "multimodal")


@dataclass(frozen=True)
class FoldPlan:
    seed: int
    n_folds: int
    assignments: Dict[str, int]


def make_folds(objects: Sequence[str], seed: int, n_folds: int = 10) -> FoldPlan:
    """Seeded shuffle then round-robin assignment; fold sizes differ by at
    most one.  Independent of input order (objects are sorted first)."""
    objs = sorted(objects)
    if len(objs) != len(set(objs)):
        raise ValueError("duplicate object names")
    if len(objs) < n_folds:
        raise ValueError(f"need at least {n_folds} objects, got {len(objs)}")
    perm = np.random.default_rng(seed).permutation(len(objs))
    assignments = {objs[p]: i % n_folds for i, p in enumerate(perm)}
    return FoldPlan(seed=seed, n_folds=n_folds, assignments=assignments)


@dataclass
class ProbingDataset:
    """Per-object targets for one attribute: empirical distribution,
    log-median, modality label."""

    attribute: str
    scheme: BucketScheme
    objects: List[str]
    dists: Dict[str, EmpiricalDistribution]
    log_medians: Dict[str, float]
    modality: Dict[str, ModalityLabel]

    @classmethod
    def from_records(cls, records: Sequence[ScalarRecord], attribute: str,
                     scheme: BucketScheme = BASE10_SCHEME,
                     min_total: Optional[int] = None) -> "ProbingDataset":
        by_object: Dict[str, list] = {}
        for r in records:
            if r.attribute == attribute:
                by_object.setdefault(r.object, []).append(r)
        dists = {}
        log_medians = {}
        modality = {}
        for obj in sorted(by_object):
            try:
                dist = build_distribution(by_object[obj], scheme)
            except ValueError as exc:
                logger.warning("skipping object %r: %s", obj, exc)
                continue
            dists[obj] = dist
            usable = [r for r in by_object[obj] if math.isfinite(r.value) and r.value > 0]
            log_medians[obj] = log_median(usable)
            modality[obj] = detect_modality(dist)
        if min_total is not None:
            keep = {d.object for d in filter_min_count(dists.values(), min_total)}
            dists = {o: d for o, d in dists.items() if o in keep}
            log_medians = {o: v for o, v in log_medians.items() if o in keep}
            modality = {o: m for o, m in modality.items() if o in keep}
        return cls(attribute=attribute, scheme=scheme, objects=sorted(dists),
                   dists=dists, log_medians=log_medians, modality=modality)


def split_by_modality(dataset: ProbingDataset) -> Dict[str, List[str]]:
    """Objects routed by modality label; sizes logged."""
    out: Dict[str, List[str]] = {"unimodal": [], "multimodal": []}
    for obj in dataset.objects:
        out[dataset.modality[obj].label].append(obj)
    logger.info("modality split: %d unimodal, %d multimodal",
                len(out["unimodal"]), len(out["multimodal"]))
    return out


def fit_fold(dataset: ProbingDataset, table: EmbeddingTable,
             train_objects: Sequence[str], probe_kind: str,
             lam: Optional[float] = None,
             cfg: Optional[TrainConfig] = None) -> ProbePipeline:
    """Fit the full pipeline on training objects only."""
    X = table.matrix(train_objects)
    if probe_kind == "rgr":
        targets = np.array([dataset.log_medians[o] for o in train_objects])
    else:
        targets = np.stack([dataset.dists[o].probs for o in train_objects])
    return fit_pipeline(X, targets, probe_kind, lam=lam, cfg=cfg,
                        scheme=dataset.scheme)


@dataclass(frozen=True)
class ReportRow:
    attribute: str
    encoder: str
    probe: str
    subset: str
    n: int
    accuracy: float
    mse: float
    emd: float  # normalized by bucket count
    emd_unnormalized: float


_SUBSET_RANK = {s: i for i, s in enumerate(SUBSETS)}


@dataclass
class EvalReport:
    rows: List[ReportRow]
    config: dict = field(default_factory=dict)

    def sorted_rows(self) -> List[ReportRow]:
        return sorted(self.rows, key=lambda r: (r.attribute, r.encoder, r.probe,
                                                _SUBSET_RANK[r.subset]))


CSV_COLUMNS = ("attribute", "encoder", "probe", "subset", "n",
               "accuracy", "mse", "emd", "emd_unnormalized")


def emit_report(report: EvalReport, path, fmt: str = "csv") -> None:
    if fmt == "csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for r in report.sorted_rows():
                writer.writerow([r.attribute, r.encoder, r.probe, r.subset, r.n,
                                 repr(r.accuracy), repr(r.mse), repr(r.emd),
                                 repr(r.emd_unnormalized)])
    elif fmt == "json":
        payload = {
            "config": report.config,
            "rows": [vars(r) for r in report.sorted_rows()],
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    else:
        raise ValueError(f"unknown report format {fmt!r}")


def load_report(path) -> EvalReport:
    """Inverse of emit_report(..., fmt="json")."""
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    rows = [ReportRow(**r) for r in payload["rows"]]
    return EvalReport(rows=rows, config=payload["config"])


def _evaluate_objects(dataset, table, objects, predict) -> Dict[str, List[MetricTriple]]:
    """Per-subset metric triples for the given test objects under one
    predictor (a callable object -> EmpiricalDistribution)."""
    triples: Dict[str, List[MetricTriple]] = {s: [] for s in SUBSETS}
    for obj in objects:
        truth = dataset.dists[obj]
        pred = predict(obj)
        t = MetricTriple(
            accuracy=float(bucket_accuracy(pred, truth)),
            mse=density_mse(pred, truth),
            emd=emd(pred, truth),
        )
        triples["all"].append(t)
        triples[dataset.modality[obj].label].append(t)
    return triples


def _mean_triple(triples: Sequence[MetricTriple]) -> MetricTriple:
    return MetricTriple(
        accuracy=float(np.mean([t.accuracy for t in triples])),
        mse=float(np.mean([t.mse for t in triples])),
        emd=float(np.mean([t.emd for t in triples])),
    )


def run_cv(dataset: ProbingDataset, table: EmbeddingTable, probe_kind: str,
           cfg: Optional[TrainConfig] = None, lam: Optional[float] = None,
           seed: int = 0, n_folds: int = 10) -> EvalReport:
    """10-fold cross-validation of one probe against one embedding table,
    with per-fold aggregate-baseline rows for calibration.

    Metrics are averaged fold-wise (mean of per-fold means; folds missing a
    subset are skipped for that subset); n counts test objects over all
    folds, so n_all = n_unimodal + n_multimodal.
    """
    if probe_kind not in ("rgr", "mcc"):
        raise ValueError(f"unknown probe kind {probe_kind!r}")
    cfg = cfg or TrainConfig()
    kept = [o for o in dataset.objects if o in table.entries]
    dropped = len(dataset.objects) - len(kept)
    if dropped:
        logger.warning("dropped %d object(s) with no embedding", dropped)
    if not kept:
        raise ValueError("no dataset object has an embedding in the table")
    plan = make_folds(kept, seed=seed, n_folds=n_folds)

    fold_means: Dict[tuple, List[MetricTriple]] = {}
    counts = {s: 0 for s in SUBSETS}
    for f in range(n_folds):
        test = [o for o in kept if plan.assignments[o] == f]
        train = [o for o in kept if plan.assignments[o] != f]
        pipeline = fit_fold(dataset, table, train, probe_kind, lam=lam, cfg=cfg)
        baseline = aggregate_baseline([dataset.dists[o] for o in train])
        predictors = {
            probe_kind: lambda o: pipeline.predict_distribution(table.entries[o]),
            "aggregate": lambda o: baseline,
        }
        for name, predict in predictors.items():
            triples = _evaluate_objects(dataset, table, test, predict)
            for subset in SUBSETS:
                if triples[subset]:
                    fold_means.setdefault((name, subset), []).append(
                        _mean_triple(triples[subset]))
        for subset in SUBSETS:
            counts[subset] += sum(
                1 for o in test
                if subset == "all" or dataset.modality[o].label == subset)

    rows = []
    for name in (probe_kind, "aggregate"):
        for subset in SUBSETS:
            means = fold_means.get((name, subset))
            if not means:
                continue
            m = _mean_triple(means)
            rows.append(ReportRow(
                attribute=dataset.attribute, encoder=table.encoder_name,
                probe=name, subset=subset, n=counts[subset],
                accuracy=m.accuracy, mse=m.mse,
                emd=m.emd / dataset.scheme.count, emd_unnormalized=m.emd,
            ))
    config = {
        "attribute": dataset.attribute,
        "encoder": table.encoder_name,
        "probe": probe_kind,
        "lambda": lam if lam is not None else (1.0 if probe_kind == "rgr" else 0.01),
        "scheme": dataset.scheme.as_dict(),
        "seed": seed,
        "n_folds": n_folds,
        "standardized": True,
        "pca_k": cfg.pca_k,
        "pca_threshold": cfg.pca_threshold,
        "mse_variant": "density",
        "emd_normalization": dataset.scheme.count,
        "n_objects": len(kept),
        "dropped_missing_embedding": dropped,
    }
    rows.sort(key=lambda r: (r.attribute, r.encoder, r.probe, _SUBSET_RANK[r.subset]))
    return EvalReport(rows=rows, config=config)


@dataclass(frozen=True)
class RelativePair:
    object_a: str
    object_b: str
    attribute: str
    label: str  # bigger | smaller | similar

    def __post_init__(self):
        if self.object_a == self.object_b:
            raise ValueError(f"relative pair compares {self.object_a!r} to itself")
        if self.label not in ("bigger", "smaller", "similar"):
            raise ValueError(f"unknown relative label {self.label!r}")


def load_relative_pairs(path) -> List[RelativePair]:
    """TSV rows: object_a, object_b, attribute, label."""
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise ValueError(
                    f"{path}:{lineno}: expected 4 tab-separated fields, got {len(parts)}")
            try:
                pairs.append(RelativePair(*parts))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    return pairs


@dataclass
class RelativeEvalResult:
    accuracy: float
    n_evaluated: int
    n_skipped: int


def eval_relative(pipeline: ProbePipeline, table: EmbeddingTable,
                  pairs: Sequence[RelativePair],
                  tau: float = 0.1, bucket_slack: int = 0) -> RelativeEvalResult:
    """Zero-shot relative comparison accuracy.

    rgr compares point estimates: |difference| < tau (log10 units) means
    similar, otherwise the sign decides.  mcc compares argmax buckets;
    "similar" means the buckets differ by at most bucket_slack (0 = exact
    equality).  Pairs with a missing embedding are skipped and counted.
    """
    correct = 0
    used = 0
    skipped = 0
    for pair in pairs:
        if pair.object_a not in table.entries or pair.object_b not in table.entries:
            skipped += 1
            continue
        va, vb = table.entries[pair.object_a], table.entries[pair.object_b]
        if pipeline.kind == "rgr":
            da = pipeline.predict_point(va) - pipeline.predict_point(vb)
            if abs(da) < tau:
                predicted = "similar"
            else:
                predicted = "bigger" if da > 0 else "smaller"
        else:
            ba = argmax_bucket(pipeline.predict_distribution(va))
            bb = argmax_bucket(pipeline.predict_distribution(vb))
            if abs(ba - bb) <= bucket_slack:
                predicted = "similar"
            else:
                predicted = "bigger" if ba > bb else "smaller"
        used += 1
        correct += int(predicted == pair.label)
    if used == 0:
        raise ValueError("no relative pair had embeddings for both objects")
    return RelativeEvalResult(accuracy=correct / used, n_evaluated=used,
                              n_skipped=skipped)


def eval_price_transfer(pipeline: ProbePipeline, table: EmbeddingTable,
                        product_dists: Sequence[EmpiricalDistribution]
                        ) -> tuple[MetricTriple, int]:
    """Zero-shot evaluation of a trained probe on product price
    distributions; same metric code path as run_cv."""
    if not product_dists:
        raise ValueError("no product distributions given")
    for d in product_dists:
        if d.scheme != pipeline.scheme:
            raise ValueError(
                f"scheme mismatch: probe uses {pipeline.scheme}, product "
                f"{d.object!r} uses {d.scheme}")
    usable = [d for d in product_dists if d.object in table.entries]
    skipped = len(product_dists) - len(usable)
    if skipped:
        logger.warning("dropped %d product(s) with no embedding", skipped)
    if not usable:
        raise ValueError("no product has an embedding in the table")
    triples = []
    for d in usable:
        pred = pipeline.predict_distribution(table.entries[d.object])
        triples.append(MetricTriple(
            accuracy=float(bucket_accuracy(pred, d)),
            mse=density_mse(pred, d),
            emd=emd(pred, d),
        ))
    return _mean_triple(triples), len(usable)
