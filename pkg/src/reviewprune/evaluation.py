"""Evaluation machinery: confusion tallies against the deletion truth set,
precision/recall/F1, repeated stratified cross-validation, Cohen's kappa,
topic-intrusion task generation, and Topic Log Odds."""

from __future__ import annotations

import csv
import math
import warnings
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .corpus import DeletionLabel
from .recommender import DELETE, Recommendation
from .topics import HDPModel, TopicDistribution


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be nonnegative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(
            tp=self.tp + other.tp,
            fp=self.fp + other.fp,
            fn=self.fn + other.fn,
            tn=self.tn + other.tn,
        )


def confusion(recs: list[Recommendation], labels: list[DeletionLabel]) -> ConfusionMatrix:
    """Tally recommendations against the truth set, keyed by
    (element_id, release_ordinal). Labeled elements with no recommendation
    count as predicted keep; a recommendation without a label is an error."""
    truth = {(l.element_id, l.release_ordinal): l.deleted for l in labels}
    predicted_delete = set()
    orphans = []
    for rec in recs:
        key = (rec.element_id, rec.release_ordinal)
        if key not in truth:
            orphans.append(key)
        elif rec.predicted == DELETE:
            predicted_delete.add(key)
    if orphans:
        raise ValueError(f"recommendations without labels: {sorted(set(orphans))}")
    tp = fp = fn = tn = 0
    for key, deleted in truth.items():
        flagged = key in predicted_delete
        if flagged and deleted:
            tp += 1
        elif flagged and not deleted:
            fp += 1
        elif not flagged and deleted:
            fn += 1
        else:
            tn += 1
    return ConfusionMatrix(tp=tp, fp=fp, fn=fn, tn=tn)


def prf1(m: ConfusionMatrix) -> tuple[float, float, float]:
    """(precision, recall, F1) with the 0/0 -> 0 convention."""
    precision = m.tp / (m.tp + m.fp) if m.tp + m.fp else 0.0
    recall = m.tp / (m.tp + m.fn) if m.tp + m.fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def cohen_kappa(a: list, b: list) -> float:
    """Chance-corrected agreement between two label vectors."""
    if len(a) != len(b):
        raise ValueError(f"label vectors differ in length: {len(a)} vs {len(b)}")
    if not a:
        raise ValueError("cohen_kappa requires at least one item")
    n = len(a)
    observed = sum(1 for x, y in zip(a, b) if x == y) / n
    count_a, count_b = Counter(a), Counter(b)
    categories = set(count_a) | set(count_b)
    expected = sum((count_a[c] / n) * (count_b[c] / n) for c in categories)
    if expected == 1.0:
        return 1.0 if observed == 1.0 else 0.0
    return (observed - expected) / (1.0 - expected)


# -- cross-validation ---------------------------------------------------------


@dataclass
class CvRun:
    precision: float
    recall: float
    f1: float


@dataclass
class CvResult:
    runs: list[CvRun]

    @property
    def mean_precision(self) -> float:
        return sum(r.precision for r in self.runs) / len(self.runs)

    @property
    def mean_recall(self) -> float:
        return sum(r.recall for r in self.runs) / len(self.runs)

    @property
    def mean_f1(self) -> float:
        return sum(r.f1 for r in self.runs) / len(self.runs)


def stratified_folds(labels: list, k: int, rng: np.random.Generator) -> list[list[int]]:
    """Disjoint index folds covering the dataset, preserving class
    proportions within one item per class."""
    by_class: dict = {}
    for i, label in enumerate(labels):
        by_class.setdefault(label, []).append(i)
    folds: list[list[int]] = [[] for _ in range(k)]
    offset = 0
    for label in sorted(by_class, key=str):
        idx = np.array(by_class[label])
        if len(idx) < k:
            warnings.warn(
                f"class {label!r} has {len(idx)} members for {k} folds; "
                "stratification is best-effort",
                stacklevel=2,
            )
        rng.shuffle(idx)
        for pos, i in enumerate(idx):
            folds[(pos + offset) % k].append(int(i))
        offset += len(idx) % k
    return [sorted(f) for f in folds]


def kfold_cv(
    data: list,
    labels: list,
    fit,
    predict,
    positive_label,
    k: int = 10,
    repeats: int = 10,
    seed: int = 0,
) -> CvResult:
    """Repeated stratified k-fold cross-validation.

    `fit(train_data, train_labels)` returns a model; `predict(model, item)`
    returns a label. Per run, fold predictions are pooled into one confusion
    matrix (micro-averaging); runs are then averaged by the caller via
    CvResult.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    if k > len(data):
        raise ValueError(f"k={k} exceeds dataset size {len(data)}")
    if len(set(labels)) < 2:
        raise ValueError("cross-validation needs both classes present")
    root = np.random.SeedSequence(seed)
    runs = []
    for run_seed in root.spawn(repeats):
        rng = np.random.Generator(np.random.PCG64(run_seed))
        folds = stratified_folds(labels, k, rng)
        tally = ConfusionMatrix()
        for fold in folds:
            test_idx = set(fold)
            train_data = [data[i] for i in range(len(data)) if i not in test_idx]
            train_labels = [labels[i] for i in range(len(data)) if i not in test_idx]
            model = fit(train_data, train_labels)
            tp = fp = fn = tn = 0
            for i in fold:
                got = predict(model, data[i]) == positive_label
                truth = labels[i] == positive_label
                if got and truth:
                    tp += 1
                elif got:
                    fp += 1
                elif truth:
                    fn += 1
                else:
                    tn += 1
            tally = tally + ConfusionMatrix(tp=tp, fp=fp, fn=fn, tn=tn)
        p, r, f1 = prf1(tally)
        runs.append(CvRun(precision=p, recall=r, f1=f1))
    return CvResult(runs=runs)


# -- topic intrusion ----------------------------------------------------------


@dataclass
class IntrusionTask:
    review_id: str
    shown_topics: tuple[int, int, int]
    intruder_id: int
    judge_selections: list[int] = field(default_factory=list)

    def __post_init__(self):
        if len(self.shown_topics) != 3:
            raise ValueError("intrusion tasks show exactly three topics")
        if self.intruder_id not in self.shown_topics:
            raise ValueError("the intruder must be among the shown topics")

    @property
    def n_judges(self) -> int:
        return len(self.judge_selections)


@dataclass(frozen=True)
class TLOScore:
    review_id: str
    value: float


def intrusion_task_from_theta(
    theta: TopicDistribution, rng: np.random.Generator
) -> IntrusionTask:
    """Build one task: the two highest-probability topics plus an intruder
    drawn from the topics below the review's 25th-percentile probability."""
    probs = np.asarray(theta.probabilities)
    if len(probs) < 3:
        raise ValueError("insufficient topics for intrusion (need at least 3)")
    ranked = np.argsort(-probs, kind="stable")
    top_two = {int(ranked[0]), int(ranked[1])}
    cutoff = np.percentile(probs, 25)
    eligible = [t for t in range(len(probs)) if probs[t] < cutoff and t not in top_two]
    if not eligible:
        eligible = [t for t in range(len(probs)) if t not in top_two]
    intruder = int(eligible[rng.integers(0, len(eligible))])
    shown = list(top_two | {intruder})
    shown.sort()
    rng.shuffle(shown)
    return IntrusionTask(
        review_id=theta.review_id,
        shown_topics=tuple(int(t) for t in shown),
        intruder_id=intruder,
    )


def make_intrusion_tasks(model: HDPModel, review_ids=None, seed: int = 0) -> list[IntrusionTask]:
    """One task per fitted review; deterministic for a fixed seed."""
    if model.n_topics < 3:
        raise ValueError(
            f"insufficient topics for intrusion: model has {model.n_topics}, need >= 3"
        )
    rng = np.random.Generator(np.random.PCG64(seed))
    ids = list(review_ids) if review_ids is not None else list(model.review_ids)
    return [intrusion_task_from_theta(model.theta(rid), rng) for rid in ids]


def tlo(task: IntrusionTask, theta: TopicDistribution) -> TLOScore:
    """Mean over judges of ln(theta of the true intruder) minus ln(theta of
    the judge's pick); 0 means every judge found the intruder."""
    if task.n_judges < 1:
        raise ValueError(f"task {task.review_id} has no judge selections")
    probs = theta.probabilities
    for shown in task.shown_topics:
        if probs[shown] <= 0.0:
            raise ValueError(
                f"theta for shown topic {shown} is not strictly positive; "
                "smoothing contract violated upstream"
            )
    total = 0.0
    for selected in task.judge_selections:
        if selected not in task.shown_topics:
            raise ValueError(f"judge selection {selected} is not among the shown topics")
        total += math.log(probs[task.intruder_id]) - math.log(probs[selected])
    return TLOScore(review_id=task.review_id, value=total / task.n_judges)


# -- bundled benchmark --------------------------------------------------------


@dataclass(frozen=True)
class BenchmarkRow:
    app: str
    matrix: ConfusionMatrix
    printed_f1: float


def load_benchmark_rows() -> list[BenchmarkRow]:
    """The bundled per-app confusion benchmark used to self-check the metric
    implementation (25 apps with known F1 scores)."""
    text = resources.files("reviewprune._resources").joinpath(
        "benchmark_confusion.csv"
    ).read_text(encoding="utf-8")
    rows = []
    for row in csv.DictReader(text.splitlines()):
        rows.append(
            BenchmarkRow(
                app=row["app"],
                matrix=ConfusionMatrix(
                    tp=int(row["tp"]), fp=int(row["fp"]), fn=int(row["fn"]), tn=int(row["tn"])
                ),
                printed_f1=float(row["f1"]),
            )
        )
    return rows


@dataclass
class BenchmarkCheck:
    rows: list[tuple[BenchmarkRow, float]]   # (row, recomputed F1)
    rows_within_tolerance: int
    mean_recomputed_f1: float
    tolerance: float


def benchmark_check(tolerance: float = 0.01) -> BenchmarkCheck:
    """Recompute F1 from the bundled confusion rows and compare with the
    recorded values."""
    rows = load_benchmark_rows()
    checked = []
    within = 0
    for row in rows:
        _, _, f1 = prf1(row.matrix)
        checked.append((row, f1))
        if abs(f1 - row.printed_f1) <= tolerance + 1e-12:
            within += 1
    mean_f1 = sum(f1 for _, f1 in checked) / len(checked)
    return BenchmarkCheck(
        rows=checked,
        rows_within_tolerance=within,
        mean_recomputed_f1=mean_f1,
        tolerance=tolerance,
    )
