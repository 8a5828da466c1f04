"""Random-forest deletion recommender over the six cluster features.

Trees are grown on balanced bootstraps (equal draws from each class, with
replacement) because real corpora are overwhelmingly keep-labeled; splits
minimize Gini impurity over a random subset of 3 of the 6 features.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .signals import FEATURE_NAMES, ClusterFeatures
from .topics import Cluster

DELETE = "delete"
KEEP = "keep"

MODEL_FORMAT_VERSION = 1

_CLUSTER_KEY = re.compile(r"^(?P<element>.+)@w(?P<ordinal>-?\d+)#t\d+$")


class DegenerateLabelsError(ValueError):
    """Training labels cover only one class."""


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_depth: int | None = None
    min_split: int = 2
    n_features: int = 3          # ceil(sqrt(6))
    seed: int = 0
    balanced_bootstrap: bool = True


@dataclass(frozen=True)
class Recommendation:
    element_id: str
    release_ordinal: int
    cluster_id: str
    predicted: str
    score: float

    def __post_init__(self):
        if (self.predicted == DELETE) != (self.score >= 0.5):
            raise ValueError("predicted must be delete exactly when score >= 0.5")


@dataclass
class ForestModel:
    trees: list[dict]
    params: ForestParams

    def to_json(self) -> str:
        payload = {
            "format_version": MODEL_FORMAT_VERSION,
            "kind": "deletion-forest",
            "feature_names": list(FEATURE_NAMES),
            "params": {
                "n_trees": self.params.n_trees,
                "max_depth": self.params.max_depth,
                "min_split": self.params.min_split,
                "n_features": self.params.n_features,
                "seed": self.params.seed,
                "balanced_bootstrap": self.params.balanced_bootstrap,
            },
            "trees": self.trees,
        }
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ForestModel":
        payload = json.loads(text)
        if payload.get("format_version") != MODEL_FORMAT_VERSION:
            raise ValueError(f"unsupported model format {payload.get('format_version')!r}")
        return cls(trees=payload["trees"], params=ForestParams(**payload["params"]))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "ForestModel":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def _gini(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return float(1.0 - (p * p).sum())


def _best_split(x: np.ndarray, y: np.ndarray, feature_ids: np.ndarray):
    """Minimal weighted-Gini split over the candidate features; None when no
    feature admits a threshold."""
    best = None
    n = len(y)
    for f in feature_ids:
        order = np.argsort(x[:, f], kind="stable")
        values = x[order, f]
        labels = y[order]
        distinct = np.nonzero(values[1:] > values[:-1])[0]
        if len(distinct) == 0:
            continue
        left = np.zeros(2)
        right = np.bincount(labels, minlength=2).astype(float)
        cut = 0
        for idx in distinct:
            while cut <= idx:
                left[labels[cut]] += 1
                right[labels[cut]] -= 1
                cut += 1
            threshold = (values[idx] + values[idx + 1]) / 2.0
            score = (cut * _gini(left) + (n - cut) * _gini(right)) / n
            if best is None or score < best[0] - 1e-12:
                best = (score, int(f), float(threshold))
    return best


def _grow_tree(x, y, params: ForestParams, rng: np.random.Generator, depth: int) -> dict:
    counts = np.bincount(y, minlength=2)
    if (
        counts[0] == 0
        or counts[1] == 0
        or len(y) < params.min_split
        or (params.max_depth is not None and depth >= params.max_depth)
    ):
        return {"n": [int(counts[0]), int(counts[1])]}
    feature_ids = rng.choice(len(FEATURE_NAMES), size=params.n_features, replace=False)
    feature_ids.sort()
    split = _best_split(x, y, feature_ids)
    if split is None:
        return {"n": [int(counts[0]), int(counts[1])]}
    _, f, threshold = split
    mask = x[:, f] <= threshold
    return {
        "f": f,
        "t": threshold,
        "l": _grow_tree(x[mask], y[mask], params, rng, depth + 1),
        "r": _grow_tree(x[~mask], y[~mask], params, rng, depth + 1),
    }


def _tree_vote(node: dict, vec) -> int:
    while "f" in node:
        node = node["l"] if vec[node["f"]] <= node["t"] else node["r"]
    neg, pos = node["n"]
    return 1 if pos >= neg else 0


def _as_bool_labels(y) -> np.ndarray:
    out = []
    for label in y:
        if isinstance(label, bool):
            out.append(label)
        elif label in ("deleted", DELETE, 1):
            out.append(True)
        elif label in ("not-deleted", KEEP, 0):
            out.append(False)
        else:
            raise ValueError(f"unrecognized label {label!r}")
    return np.array(out, dtype=np.int64)


def train_forest(
    X: list[ClusterFeatures], y, params: ForestParams | None = None
) -> ForestModel:
    """Fit the forest. Rows are canonicalized by cluster_id before any
    sampling, so training is invariant to input order under a fixed seed."""
    params = params or ForestParams()
    labels = _as_bool_labels(y)
    if len(X) != len(labels):
        raise ValueError("X and y must align")
    if len(X) < 2:
        raise ValueError("need at least two training rows")
    if labels.min() == labels.max():
        raise DegenerateLabelsError("degenerate labels: both classes are required")

    order = np.argsort(np.array([f.cluster_id for f in X]), kind="stable")
    matrix = np.array([X[i].vector() for i in order])
    labels = labels[order]
    pos_pool = np.nonzero(labels == 1)[0]
    neg_pool = np.nonzero(labels == 0)[0]

    seeds = np.random.SeedSequence(params.seed).spawn(params.n_trees)
    trees = []
    for tree_seed in seeds:
        rng = np.random.Generator(np.random.PCG64(tree_seed))
        if params.balanced_bootstrap:
            k = min(len(pos_pool), len(neg_pool))
            idx = np.concatenate(
                [
                    pos_pool[rng.integers(0, len(pos_pool), size=k)],
                    neg_pool[rng.integers(0, len(neg_pool), size=k)],
                ]
            )
        else:
            idx = rng.integers(0, len(labels), size=len(labels))
        trees.append(_grow_tree(matrix[idx], labels[idx], params, rng, depth=0))
    return ForestModel(trees=trees, params=params)


def _keys_for(x: ClusterFeatures, cluster: Cluster | None) -> tuple[str, int]:
    if cluster is not None:
        return cluster.element_id, cluster.release_ordinal
    match = _CLUSTER_KEY.match(x.cluster_id)
    if match:
        return match.group("element"), int(match.group("ordinal"))
    # standalone feature rows act as their own element
    return x.cluster_id, 0


def predict(model: ForestModel, x: ClusterFeatures, cluster: Cluster | None = None) -> Recommendation:
    """Majority vote across trees; ties at exactly 0.5 recommend deletion."""
    vec = x.vector()
    votes = sum(_tree_vote(tree, vec) for tree in model.trees)
    score = votes / len(model.trees)
    element_id, release_ordinal = _keys_for(x, cluster)
    return Recommendation(
        element_id=element_id,
        release_ordinal=release_ordinal,
        cluster_id=x.cluster_id,
        predicted=DELETE if score >= 0.5 else KEEP,
        score=score,
    )


def aggregate_to_element(recs: list[Recommendation]) -> list[Recommendation]:
    """Element-level roll-up: an element is flagged when any of its clusters
    fires; the score is the maximum member score."""
    by_key: dict[tuple[str, int], Recommendation] = {}
    for rec in recs:
        key = (rec.element_id, rec.release_ordinal)
        best = by_key.get(key)
        if best is None or rec.score > best.score:
            by_key[key] = rec
    out = []
    for (element_id, release_ordinal), best in sorted(by_key.items()):
        out.append(
            Recommendation(
                element_id=element_id,
                release_ordinal=release_ordinal,
                cluster_id=best.cluster_id,
                predicted=DELETE if best.score >= 0.5 else KEEP,
                score=best.score,
            )
        )
    return out


def recommendations_to_csv(recs: list[Recommendation]) -> str:
    rows = ["element_id,release_ordinal,cluster_id,predicted,score"]
    for r in sorted(recs, key=lambda x: (x.release_ordinal, x.element_id, x.cluster_id)):
        rows.append(f"{r.element_id},{r.release_ordinal},{r.cluster_id},{r.predicted},{r.score!r}")
    return "\n".join(rows) + "\n"


def recommendations_from_csv(text: str) -> list[Recommendation]:
    import csv

    out = []
    for row in csv.DictReader(text.splitlines()):
        out.append(
            Recommendation(
                element_id=row["element_id"],
                release_ordinal=int(row["release_ordinal"]),
                cluster_id=row["cluster_id"],
                predicted=row["predicted"],
                score=float(row["score"]),
            )
        )
    return out
