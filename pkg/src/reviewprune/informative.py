"""Multinomial Naive Bayes filter separating informative reviews (usable
content: problems, feature concerns) from non-informative ones (bare praise,
emotion, ads)."""

from __future__ import annotations

import csv
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

INFORMATIVE = "informative"
NON_INFORMATIVE = "non-informative"
CLASSES = (INFORMATIVE, NON_INFORMATIVE)

MODEL_FORMAT_VERSION = 1


class DegenerateTrainingError(ValueError):
    """Training data covers fewer than two classes."""


@dataclass(frozen=True)
class LabeledReview:
    review_id: str
    tokens: tuple[str, ...]
    label: str

    def __post_init__(self):
        if self.label not in CLASSES:
            raise ValueError(f"label must be one of {CLASSES}, got {self.label!r}")


@dataclass
class NBModel:
    """Trained multinomial NB with Laplace smoothing.

    log_prior maps class -> log P(class); log_likelihood maps class ->
    {token: log P(token | class)} over the training vocabulary.
    """

    log_prior: dict[str, float]
    log_likelihood: dict[str, dict[str, float]]
    vocabulary: frozenset[str]
    smoothing_alpha: float
    oov_log_likelihood: dict[str, float] = field(default_factory=dict)

    def to_json(self) -> str:
        payload = {
            "format_version": MODEL_FORMAT_VERSION,
            "kind": "informative-nb",
            "smoothing_alpha": self.smoothing_alpha,
            "log_prior": self.log_prior,
            "log_likelihood": {c: dict(sorted(t.items())) for c, t in self.log_likelihood.items()},
            "oov_log_likelihood": self.oov_log_likelihood,
        }
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "NBModel":
        payload = json.loads(text)
        if payload.get("format_version") != MODEL_FORMAT_VERSION:
            raise ValueError(f"unsupported model format {payload.get('format_version')!r}")
        vocab = frozenset(payload["log_likelihood"][INFORMATIVE])
        return cls(
            log_prior=payload["log_prior"],
            log_likelihood=payload["log_likelihood"],
            vocabulary=vocab,
            smoothing_alpha=payload["smoothing_alpha"],
            oov_log_likelihood=payload.get("oov_log_likelihood", {}),
        )

    def save(self, path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "NBModel":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def train_nb(data: list[LabeledReview], alpha: float = 1.0) -> NBModel:
    """Fit the classifier. Both classes must be present; alpha > 0."""
    if alpha <= 0:
        raise ValueError("smoothing alpha must be positive")
    present = {d.label for d in data}
    if len(present) < 2:
        raise DegenerateTrainingError(
            f"degenerate training data: only {sorted(present)} present, need both classes"
        )
    counts = {c: Counter() for c in CLASSES}
    docs_per_class = Counter()
    for d in data:
        docs_per_class[d.label] += 1
        counts[d.label].update(d.tokens)
    vocabulary = frozenset(set(counts[INFORMATIVE]) | set(counts[NON_INFORMATIVE]))
    v = len(vocabulary)
    n_docs = len(data)

    log_prior = {c: math.log(docs_per_class[c] / n_docs) for c in CLASSES}
    log_likelihood: dict[str, dict[str, float]] = {}
    oov = {}
    for c in CLASSES:
        total = sum(counts[c].values())
        denom = total + alpha * v
        log_likelihood[c] = {
            token: math.log((counts[c][token] + alpha) / denom) for token in sorted(vocabulary)
        }
        oov[c] = math.log(alpha / denom) if v else 0.0
    return NBModel(
        log_prior=log_prior,
        log_likelihood=log_likelihood,
        vocabulary=vocabulary,
        smoothing_alpha=alpha,
        oov_log_likelihood=oov,
    )


def posteriors(model: NBModel, tokens) -> dict[str, float]:
    """Normalized class posteriors for a bag of words; out-of-vocabulary
    tokens are ignored."""
    tokens = [t for t in tokens if t in model.vocabulary]
    scores = {}
    for c in CLASSES:
        table = model.log_likelihood[c]
        scores[c] = model.log_prior[c] + sum(table[t] for t in tokens)
    peak = max(scores.values())
    norm = sum(math.exp(s - peak) for s in scores.values())
    return {c: math.exp(scores[c] - peak) / norm for c in CLASSES}


def classify(model: NBModel, tokens) -> tuple[str, float]:
    """Return (label, posterior of that label).

    An empty (or fully out-of-vocabulary) token list is non-informative by
    convention, scored with the class prior.
    """
    known = [t for t in tokens if t in model.vocabulary]
    if not known:
        return NON_INFORMATIVE, math.exp(model.log_prior[NON_INFORMATIVE])
    scores = posteriors(model, known)
    label = max(CLASSES, key=lambda c: (scores[c], c == NON_INFORMATIVE))
    return label, scores[label]


def load_labeled_csv(path, preprocess=None) -> list[LabeledReview]:
    """Read the labeled-review CSV (review_id, label, text).

    `preprocess` maps text to a token sequence; it defaults to the standard
    normalization pipeline.
    """
    if preprocess is None:
        from . import textprep

        stoplist = textprep.StopList.default()
        preprocess = lambda text: textprep.preprocess(text, stoplist).tokens
    out = []
    with open(path, newline="", encoding="utf-8") as f:
        for line, row in enumerate(csv.DictReader(f), start=2):
            try:
                out.append(
                    LabeledReview(
                        review_id=row["review_id"].strip(),
                        tokens=tuple(preprocess(row["text"])),
                        label=row["label"].strip(),
                    )
                )
            except (KeyError, AttributeError) as exc:
                raise ValueError(f"{path}:{line}: malformed labeled review ({exc})")
    return out


def bundled_seed_training() -> list[LabeledReview]:
    """Labeled seed corpus shipped with the package, used to bootstrap a
    filter when no user-trained model is configured."""
    text = resources.files("reviewprune._resources").joinpath("informative_seed.csv").read_text(
        encoding="utf-8"
    )
    from . import textprep

    stoplist = textprep.StopList.default()
    out = []
    for row in csv.DictReader(text.splitlines()):
        tokens = textprep.preprocess(row["text"], stoplist).tokens
        out.append(LabeledReview(review_id=row["review_id"], tokens=tokens, label=row["label"]))
    return out
