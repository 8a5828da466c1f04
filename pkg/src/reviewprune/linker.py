"""Review-to-UI-element traceability links: TF-IDF cosine similarity over a
shared vector space, thresholded at 0.65 by default."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

from .textprep import TokenizedText
from .uiextract import UIElement, description_tokens

DEFAULT_THRESHOLD = 0.65
WEIGHTING_SCHEME = "tf_raw/idf_smooth/l2"


@dataclass(frozen=True)
class ReviewLink:
    review_id: str
    element_id: str
    release_ordinal: int
    similarity: float


@dataclass
class TfIdfSpace:
    """Vocabulary statistics for one window's corpus (reviews plus element
    descriptions live in the same space so their similarities compare)."""

    doc_freq: dict[str, int]
    n_docs: int
    scheme: str = WEIGHTING_SCHEME
    _idf: dict[str, float] = field(init=False, repr=False, default_factory=dict)

    def idf(self, token: str) -> float:
        cached = self._idf.get(token)
        if cached is None:
            df = self.doc_freq.get(token, 0)
            cached = math.log((1 + self.n_docs) / (1 + df)) + 1.0
            self._idf[token] = cached
        return cached

    def vector(self, tokens) -> dict[str, float]:
        """L2-normalized tf-idf vector (raw term counts times idf)."""
        weights = {t: tf * self.idf(t) for t, tf in Counter(tokens).items()}
        norm = math.sqrt(sum(w * w for w in weights.values()))
        if norm == 0.0:
            return {}
        return {t: w / norm for t, w in weights.items()}


def build_space(docs) -> TfIdfSpace:
    """Build the shared space; at least one nonempty document is required."""
    doc_freq: Counter[str] = Counter()
    n_docs = 0
    nonempty = False
    for doc in docs:
        n_docs += 1
        uniq = set(doc)
        if uniq:
            nonempty = True
        doc_freq.update(uniq)
    if n_docs == 0 or not nonempty:
        raise ValueError("cannot build a tf-idf space from an all-empty corpus")
    return TfIdfSpace(doc_freq=dict(doc_freq), n_docs=n_docs)


def cosine(a, b, space: TfIdfSpace) -> float:
    """Cosine of the two documents' tf-idf vectors; 0 when either is empty."""
    va, vb = space.vector(a), space.vector(b)
    if len(vb) < len(va):
        va, vb = vb, va
    return sum(w * vb.get(t, 0.0) for t, w in va.items())


def link(
    reviews: list[TokenizedText],
    elements: list[UIElement],
    threshold: float = DEFAULT_THRESHOLD,
    element_tokens: dict[str, list[str]] | None = None,
) -> list[ReviewLink]:
    """All (review, element) pairs whose similarity reaches the threshold.

    The space is built from this window's review tokens plus the element
    descriptions. `element_tokens` overrides the default description
    tokenization when the caller has already computed it.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    if not reviews or not elements:
        return []
    if element_tokens is None:
        element_tokens = {e.element_id: description_tokens(e) for e in elements}
    docs = [list(r.tokens) for r in reviews] + [element_tokens[e.element_id] for e in elements]
    if not any(docs):
        return []
    space = build_space(docs)
    links = []
    element_vectors = {e.element_id: space.vector(element_tokens[e.element_id]) for e in elements}
    for review in reviews:
        rv = space.vector(review.tokens)
        if not rv:
            continue
        for element in elements:
            ev = element_vectors[element.element_id]
            sim = sum(w * ev.get(t, 0.0) for t, w in rv.items())
            if sim >= threshold:
                links.append(
                    ReviewLink(
                        review_id=review.source_id,
                        element_id=element.element_id,
                        release_ordinal=element.release_ordinal,
                        similarity=sim,
                    )
                )
    return links


def links_to_csv(links: list[ReviewLink]) -> str:
    rows = ["review_id,element_id,release_ordinal,similarity"]
    for l in sorted(links, key=lambda x: (x.release_ordinal, x.element_id, x.review_id)):
        rows.append(f"{l.review_id},{l.element_id},{l.release_ordinal},{l.similarity!r}")
    return "\n".join(rows) + "\n"


def links_from_csv(text: str) -> list[ReviewLink]:
    import csv

    out = []
    for row in csv.DictReader(text.splitlines()):
        out.append(
            ReviewLink(
                review_id=row["review_id"],
                element_id=row["element_id"],
                release_ordinal=int(row["release_ordinal"]),
                similarity=float(row["similarity"]),
            )
        )
    return out
