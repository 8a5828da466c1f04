"""Lexicon sentiment scoring and the six per-cluster features fed to the
recommender: review count, average rating, rating delta against the release,
average polarity, average objectivity, and uninstall/refund mentions."""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from importlib import resources

from .corpus import Review
from .textprep import NEGATORS, TokenizedText
from .topics import Cluster

# review counts as an uninstall signal when any token starts with these
_UNINSTALL_PATTERN = re.compile(r"\b(?:uninstal|refund)", re.IGNORECASE)

NEGATION_WINDOW = 2

FEATURE_NAMES = (
    "n_reviews",
    "avg_rating",
    "delta_rating",
    "avg_polarity",
    "avg_objectivity",
    "uninstall_count",
)


@dataclass
class SentimentLexicon:
    """term -> (polarity in [-1, 1], subjectivity in [0, 1])."""

    entries: dict[str, tuple[float, float]]
    negators: frozenset[str] = field(default_factory=lambda: frozenset(NEGATORS))

    def __post_init__(self):
        for term, (pol, subj) in self.entries.items():
            if not -1.0 <= pol <= 1.0:
                raise ValueError(f"lexicon polarity out of range for {term!r}: {pol}")
            if not 0.0 <= subj <= 1.0:
                raise ValueError(f"lexicon subjectivity out of range for {term!r}: {subj}")

    @classmethod
    def from_rows(cls, rows) -> "SentimentLexicon":
        entries = {}
        for row in rows:
            entries[row["term"].strip().lower()] = (
                float(row["polarity"]),
                float(row["subjectivity"]),
            )
        return cls(entries=entries)

    @classmethod
    def from_file(cls, path) -> "SentimentLexicon":
        with open(path, newline="", encoding="utf-8") as f:
            return cls.from_rows(csv.DictReader(f))

    @classmethod
    def default(cls) -> "SentimentLexicon":
        text = resources.files("reviewprune._resources").joinpath(
            "sentiment_lexicon.csv"
        ).read_text(encoding="utf-8")
        return cls.from_rows(csv.DictReader(text.splitlines()))


@dataclass(frozen=True)
class ClusterFeatures:
    cluster_id: str
    n_reviews: int
    avg_rating: float
    delta_rating: float
    avg_polarity: float
    avg_objectivity: float
    uninstall_count: int

    def vector(self) -> tuple[float, ...]:
        return (
            float(self.n_reviews),
            self.avg_rating,
            self.delta_rating,
            self.avg_polarity,
            self.avg_objectivity,
            float(self.uninstall_count),
        )


def score_sentiment(review: TokenizedText, lex: SentimentLexicon) -> tuple[float, float]:
    """(polarity, objectivity) for one review.

    Polarity is the mean of matched-term polarities, sign-flipped when a
    negator appears in the two preceding tokens. Objectivity keeps the
    upstream naming: it is the mean matched subjectivity (0 = factual,
    1 = opinionated). No matches scores (0, 0).
    """
    polarities, subjectivities = [], []
    tokens = review.tokens
    for i, token in enumerate(tokens):
        entry = lex.entries.get(token)
        if entry is None:
            continue
        pol, subj = entry
        window = tokens[max(0, i - NEGATION_WINDOW):i]
        if any(t in lex.negators for t in window):
            pol = -pol
        polarities.append(pol)
        subjectivities.append(subj)
    if not polarities:
        return 0.0, 0.0
    return sum(polarities) / len(polarities), sum(subjectivities) / len(subjectivities)


def count_uninstall(reviews: list[Review]) -> int:
    """Number of reviews (not mentions) whose raw text talks about
    uninstalling or a refund."""
    return sum(1 for r in reviews if _UNINSTALL_PATTERN.search(r.text))


def featurize(
    cluster: Cluster,
    reviews: dict[str, Review],
    tokenized: dict[str, TokenizedText],
    release_avg: float,
    lex: SentimentLexicon,
) -> ClusterFeatures:
    """Compute the six features for one cluster.

    `reviews` and `tokenized` map review_id to the member records; the
    release average rating comes from the cluster's window.
    """
    if not cluster.review_ids:
        raise ValueError(f"cluster {cluster.cluster_id} has no members")
    if not 1.0 <= release_avg <= 5.0:
        raise ValueError(f"release average rating {release_avg} outside [1, 5]")
    member_ids = sorted(cluster.review_ids)
    try:
        members = [reviews[rid] for rid in member_ids]
        member_tokens = [tokenized[rid] for rid in member_ids]
    except KeyError as exc:
        raise ValueError(f"cluster {cluster.cluster_id} references unknown review {exc}")

    avg_rating = sum(r.rating for r in members) / len(members)
    sentiments = [score_sentiment(t, lex) for t in member_tokens]
    avg_polarity = sum(s[0] for s in sentiments) / len(sentiments)
    avg_objectivity = sum(s[1] for s in sentiments) / len(sentiments)
    return ClusterFeatures(
        cluster_id=cluster.cluster_id,
        n_reviews=len(members),
        avg_rating=avg_rating,
        delta_rating=avg_rating - release_avg,
        avg_polarity=avg_polarity,
        avg_objectivity=avg_objectivity,
        uninstall_count=count_uninstall(members),
    )


def features_to_csv(rows: list[ClusterFeatures]) -> str:
    out = ["cluster_id," + ",".join(FEATURE_NAMES)]
    for f in sorted(rows, key=lambda x: x.cluster_id):
        out.append(
            f"{f.cluster_id},{f.n_reviews},{f.avg_rating!r},{f.delta_rating!r},"
            f"{f.avg_polarity!r},{f.avg_objectivity!r},{f.uninstall_count}"
        )
    return "\n".join(out) + "\n"


def features_from_csv(text: str) -> list[ClusterFeatures]:
    out = []
    for row in csv.DictReader(text.splitlines()):
        out.append(
            ClusterFeatures(
                cluster_id=row["cluster_id"],
                n_reviews=int(row["n_reviews"]),
                avg_rating=float(row["avg_rating"]),
                delta_rating=float(row["delta_rating"]),
                avg_polarity=float(row["avg_polarity"]),
                avg_objectivity=float(row["avg_objectivity"]),
                uninstall_count=int(row["uninstall_count"]),
            )
        )
    return out
