"""Nonparametric topic clustering of the reviews linked to a UI element.

The sampler is a collapsed Gibbs scheme over the Chinese Restaurant
Franchise: each document seats tokens at tables, each table serves a dish
(topic) shared across documents, and the number of topics is inferred
rather than fixed. Review-level topic distributions are read off the final
assignment state and smoothed by the global dish weights.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .linker import ReviewLink
from .textprep import TokenizedText


@dataclass(frozen=True)
class HdpParams:
    gamma: float = 1.0        # top-level (dish) concentration
    alpha0: float = 1.0       # document-level (table) concentration
    eta: float = 0.5          # symmetric word smoothing
    sweeps: int = 1000
    burn_in: int = 500
    seed: int = 0

    def __post_init__(self):
        if min(self.gamma, self.alpha0, self.eta) <= 0:
            raise ValueError("gamma, alpha0 and eta must all be positive")
        if self.sweeps < 1 or not 0 <= self.burn_in < self.sweeps:
            raise ValueError("need sweeps >= 1 and 0 <= burn_in < sweeps")


@dataclass(frozen=True)
class TopicDistribution:
    review_id: str
    probabilities: tuple[float, ...]

    def argmax(self) -> int:
        return int(np.argmax(self.probabilities))


@dataclass(frozen=True)
class Cluster:
    cluster_id: str
    element_id: str
    release_ordinal: int
    topic_id: int
    review_ids: frozenset[str]


def derive_seed(master_seed: int, element_id: str) -> int:
    """Stable per-element seed so fits are order-independent."""
    digest = hashlib.sha256(f"{master_seed}:{element_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big")


def smoothed_distribution(counts, alpha0: float, beta) -> tuple[float, ...]:
    """Review-level topic probabilities from assignment counts, smoothed by
    the global dish weights: (n_t + alpha0 * beta_t) / (n + alpha0)."""
    counts = np.asarray(counts, dtype=float)
    beta = np.asarray(beta, dtype=float)
    probs = (counts + alpha0 * beta) / (counts.sum() + alpha0)
    return tuple(float(p) for p in probs)


class HDPModel:
    """Sampler state for one element's linked reviews."""

    def __init__(self, docs: list[list[str]], review_ids: list[str], params: HdpParams):
        if not docs:
            raise ValueError("fit_hdp requires at least one document")
        if not any(docs):
            raise ValueError("fit_hdp requires at least one nonempty document")
        if len(docs) != len(review_ids):
            raise ValueError("docs and review_ids must align")
        self.params = params
        self.review_ids = list(review_ids)
        self._doc_index = {rid: i for i, rid in enumerate(review_ids)}
        self.vocab = sorted({w for doc in docs for w in doc})
        self._word_index = {w: i for i, w in enumerate(self.vocab)}
        self.docs = [np.array([self._word_index[w] for w in doc], dtype=np.int64) for doc in docs]
        self.n_vocab = len(self.vocab)

        cap = 8
        self._n_kw = np.zeros((cap, self.n_vocab))
        self._n_k = np.zeros(cap)
        self._m_k = np.zeros(cap, dtype=np.int64)
        self._m_total = 0
        self._active: list[int] = []
        self._free_topics: list[int] = []
        self._n_slots = 0

        # per-doc seating: table index per token, dish and size per table
        self._t_ji = [np.full(len(doc), -1, dtype=np.int64) for doc in self.docs]
        self._table_dish: list[list[int]] = [[] for _ in self.docs]
        self._table_size: list[list[int]] = [[] for _ in self.docs]
        self._free_tables: list[list[int]] = [[] for _ in self.docs]

        self._rng = np.random.Generator(np.random.PCG64(params.seed))
        self.mean_topic_count = 0.0
        self.fitted = False

    # -- topic slot management -------------------------------------------------

    def _grow(self):
        cap = self._n_kw.shape[0]
        self._n_kw = np.vstack([self._n_kw, np.zeros((cap, self.n_vocab))])
        self._n_k = np.concatenate([self._n_k, np.zeros(cap)])
        self._m_k = np.concatenate([self._m_k, np.zeros(cap, dtype=np.int64)])

    def _new_topic(self) -> int:
        if self._free_topics:
            k = self._free_topics.pop()
        else:
            k = self._n_slots
            self._n_slots += 1
            while k >= self._n_kw.shape[0]:
                self._grow()
        self._active.append(k)
        self._active.sort()
        return k

    def _maybe_retire_topic(self, k: int):
        if self._m_k[k] == 0 and self._n_k[k] == 0:
            self._active.remove(k)
            self._free_topics.append(k)
            self._free_topics.sort(reverse=True)

    # -- seating bookkeeping ----------------------------------------------------

    def _word_prob_active(self, w: int) -> np.ndarray:
        active = self._active
        eta, v = self.params.eta, self.n_vocab
        return (self._n_kw[active, w] + eta) / (self._n_k[active] + v * eta)

    def _remove_token(self, j: int, i: int):
        t = self._t_ji[j][i]
        w = self.docs[j][i]
        k = self._table_dish[j][t]
        self._table_size[j][t] -= 1
        self._n_kw[k, w] -= 1
        self._n_k[k] -= 1
        if self._table_size[j][t] == 0:
            self._table_dish[j][t] = -1
            self._free_tables[j].append(t)
            self._free_tables[j].sort(reverse=True)
            self._m_k[k] -= 1
            self._m_total -= 1
            self._maybe_retire_topic(k)

    def _sample_index(self, probs: np.ndarray) -> int:
        total = probs.sum()
        u = self._rng.random() * total
        return int(np.searchsorted(np.cumsum(probs), u, side="right").clip(0, len(probs) - 1))

    def _seat_token(self, j: int, i: int):
        w = self.docs[j][i]
        active = self._active
        f_active = self._word_prob_active(w) if active else np.zeros(0)

        occupied = [t for t in range(len(self._table_dish[j])) if self._table_dish[j][t] >= 0]
        pos = {k: idx for idx, k in enumerate(active)}
        table_probs = np.array(
            [self._table_size[j][t] * f_active[pos[self._table_dish[j][t]]] for t in occupied]
        )
        gamma, alpha0 = self.params.gamma, self.params.alpha0
        new_dish_mass = float(self._m_k[active] @ f_active) if active else 0.0
        p_new = alpha0 * (new_dish_mass + gamma / self.n_vocab) / (self._m_total + gamma)
        probs = np.concatenate([table_probs, [p_new]])
        choice = self._sample_index(probs)

        if choice < len(occupied):
            t = occupied[choice]
            k = self._table_dish[j][t]
        else:
            k = self._sample_dish_for_word(w, f_active)
            t = self._open_table(j, k)
        self._table_size[j][t] += 1
        self._t_ji[j][i] = t
        self._n_kw[k, w] += 1
        self._n_k[k] += 1

    def _sample_dish_for_word(self, w: int, f_active: np.ndarray) -> int:
        active = self._active
        probs = np.concatenate(
            [self._m_k[active] * f_active, [self.params.gamma / self.n_vocab]]
        )
        choice = self._sample_index(probs)
        if choice == len(active):
            k = self._new_topic()
        else:
            k = active[choice]
        return k

    def _open_table(self, j: int, k: int) -> int:
        if self._free_tables[j]:
            t = self._free_tables[j].pop()
            self._table_dish[j][t] = k
            self._table_size[j][t] = 0
        else:
            t = len(self._table_dish[j])
            self._table_dish[j].append(k)
            self._table_size[j].append(0)
        self._m_k[k] += 1
        self._m_total += 1
        return t

    # -- dish resampling ---------------------------------------------------------

    def _table_word_counts(self, j: int, t: int) -> dict[int, int]:
        counts: dict[int, int] = {}
        for i, table in enumerate(self._t_ji[j]):
            if table == t:
                w = int(self.docs[j][i])
                counts[w] = counts.get(w, 0) + 1
        return counts

    def _resample_dish(self, j: int, t: int):
        old_k = self._table_dish[j][t]
        counts = self._table_word_counts(j, t)
        size = self._table_size[j][t]
        # detach table
        for w, c in counts.items():
            self._n_kw[old_k, w] -= c
        self._n_k[old_k] -= size
        self._m_k[old_k] -= 1
        self._m_total -= 1
        self._maybe_retire_topic(old_k)

        active = self._active
        eta, v, gamma = self.params.eta, self.n_vocab, self.params.gamma
        log_probs = np.empty(len(active) + 1)
        for idx, k in enumerate(active):
            ll = 0.0
            for w, c in counts.items():
                base = self._n_kw[k, w]
                for step in range(c):
                    ll += math.log(base + eta + step)
            total = self._n_k[k]
            for step in range(size):
                ll -= math.log(total + v * eta + step)
            log_probs[idx] = math.log(self._m_k[k]) + ll if self._m_k[k] > 0 else ll
        ll_new = 0.0
        for w, c in counts.items():
            for step in range(c):
                ll_new += math.log(eta + step)
        for step in range(size):
            ll_new -= math.log(v * eta + step)
        log_probs[-1] = math.log(gamma) + ll_new

        log_probs -= log_probs.max()
        choice = self._sample_index(np.exp(log_probs))
        if choice == len(active):
            k = self._new_topic()
        else:
            k = active[choice]
        self._table_dish[j][t] = k
        for w, c in counts.items():
            self._n_kw[k, w] += c
        self._n_k[k] += size
        self._m_k[k] += 1
        self._m_total += 1

    # -- fitting -----------------------------------------------------------------

    def _sweep(self):
        for j, doc in enumerate(self.docs):
            for i in range(len(doc)):
                self._remove_token(j, i)
                self._seat_token(j, i)
        for j in range(len(self.docs)):
            for t in range(len(self._table_dish[j])):
                if self._table_dish[j][t] >= 0:
                    self._resample_dish(j, t)

    def fit(self, validate_sweeps: bool = False) -> "HDPModel":
        # initial seating uses the same predictive rule as a sweep, minus removal
        for j, doc in enumerate(self.docs):
            for i in range(len(doc)):
                self._seat_token(j, i)
        post_burn_k = []
        for sweep in range(self.params.sweeps):
            self._sweep()
            if validate_sweeps:
                self.assert_consistent()
            if sweep >= self.params.burn_in:
                post_burn_k.append(len(self._active))
        self.mean_topic_count = float(np.mean(post_burn_k)) if post_burn_k else float(
            len(self._active)
        )
        self.fitted = True
        return self

    # -- read-off ------------------------------------------------------------------

    @property
    def n_topics(self) -> int:
        return len(self._active)

    def _dense_topic_ids(self) -> dict[int, int]:
        return {slot: dense for dense, slot in enumerate(self._active)}

    def global_topic_weights(self) -> np.ndarray:
        """Dish weights normalized over the realized topics."""
        m = self._m_k[self._active].astype(float)
        return m / m.sum()

    def doc_topic_counts(self, j: int) -> np.ndarray:
        dense = self._dense_topic_ids()
        counts = np.zeros(len(self._active))
        for i, t in enumerate(self._t_ji[j]):
            k = self._table_dish[j][t]
            counts[dense[k]] += 1
        return counts

    def theta(self, review_id: str) -> TopicDistribution:
        """Smoothed topic distribution for a fitted review."""
        if review_id not in self._doc_index:
            raise KeyError(f"review {review_id!r} was not in the fitted corpus")
        j = self._doc_index[review_id]
        probs = smoothed_distribution(
            self.doc_topic_counts(j), self.params.alpha0, self.global_topic_weights()
        )
        return TopicDistribution(review_id=review_id, probabilities=probs)

    def assert_consistent(self):
        total_tokens = sum(len(doc) for doc in self.docs)
        if int(self._n_kw.sum()) != total_tokens:
            raise AssertionError("topic-word counts out of sync with corpus size")
        if int(self._n_k.sum()) != total_tokens:
            raise AssertionError("topic totals out of sync with corpus size")
        for j in range(len(self.docs)):
            sizes = [s for t, s in enumerate(self._table_size[j]) if self._table_dish[j][t] >= 0]
            if sum(sizes) != len(self.docs[j]):
                raise AssertionError(f"table sizes of doc {j} out of sync")
        if int(self._m_k.sum()) != self._m_total:
            raise AssertionError("dish table-counts out of sync")

    def state_dump(self) -> str:
        """Canonical JSON dump of the full sampler state."""
        dense = self._dense_topic_ids()
        payload = {
            "format_version": 1,
            "kind": "hdp-crf-state",
            "params": {
                "gamma": self.params.gamma,
                "alpha0": self.params.alpha0,
                "eta": self.params.eta,
                "sweeps": self.params.sweeps,
                "burn_in": self.params.burn_in,
                "seed": self.params.seed,
            },
            "vocab": self.vocab,
            "review_ids": self.review_ids,
            "n_topics": self.n_topics,
            "mean_topic_count": self.mean_topic_count,
            "tables": [
                {
                    "token_tables": [int(t) for t in self._t_ji[j]],
                    "table_dishes": [
                        dense[k] if k >= 0 else -1 for k in self._table_dish[j]
                    ],
                }
                for j in range(len(self.docs))
            ],
            "topic_word_counts": {
                str(dense[k]): {
                    self.vocab[w]: int(self._n_kw[k, w])
                    for w in range(self.n_vocab)
                    if self._n_kw[k, w] > 0
                }
                for k in self._active
            },
            "global_weights": [float(x) for x in self.global_topic_weights()],
        }
        return json.dumps(payload, sort_keys=True)


def fit_hdp(
    docs: list[TokenizedText] | list[list[str]],
    params: HdpParams | None = None,
    validate_sweeps: bool = False,
) -> HDPModel:
    """Fit the topic model over one element's linked reviews."""
    params = params or HdpParams()
    if docs and isinstance(docs[0], TokenizedText):
        review_ids = [d.source_id for d in docs]
        token_docs = [list(d.tokens) for d in docs]
    else:
        review_ids = [f"doc{i}" for i in range(len(docs))]
        token_docs = [list(d) for d in docs]
    model = HDPModel(token_docs, review_ids, params)
    return model.fit(validate_sweeps=validate_sweeps)


def form_clusters(
    model: HDPModel, links: list[ReviewLink], tau_topic: float = 0.25
) -> list[Cluster]:
    """Non-exclusive clusters: per topic, every review with theta above the
    threshold, plus each review's argmax topic unconditionally."""
    if not links:
        return []
    keys = {(l.element_id, l.release_ordinal) for l in links}
    if len(keys) != 1:
        raise ValueError(f"links must target a single (element, window), got {sorted(keys)}")
    element_id, release_ordinal = keys.pop()
    link_ids = {l.review_id for l in links}
    linked_ids = [rid for rid in model.review_ids if rid in link_ids]

    members: dict[int, set[str]] = {}
    for rid in linked_ids:
        dist = model.theta(rid)
        for topic, prob in enumerate(dist.probabilities):
            if prob >= tau_topic:
                members.setdefault(topic, set()).add(rid)
        members.setdefault(dist.argmax(), set()).add(rid)

    clusters = []
    for topic in sorted(members):
        ids = members[topic]
        if not ids:
            continue
        clusters.append(
            Cluster(
                cluster_id=f"{element_id}@w{release_ordinal}#t{topic}",
                element_id=element_id,
                release_ordinal=release_ordinal,
                topic_id=topic,
                review_ids=frozenset(ids),
            )
        )
    return clusters


def clusters_to_csv(clusters: list[Cluster]) -> str:
    rows = ["cluster_id,element_id,release_ordinal,topic_id,review_id"]
    for c in sorted(clusters, key=lambda x: (x.release_ordinal, x.element_id, x.topic_id)):
        for rid in sorted(c.review_ids):
            rows.append(f"{c.cluster_id},{c.element_id},{c.release_ordinal},{c.topic_id},{rid}")
    return "\n".join(rows) + "\n"


def clusters_from_csv(text: str) -> list[Cluster]:
    import csv
    from collections import defaultdict

    grouped: dict[tuple, set] = defaultdict(set)
    for row in csv.DictReader(text.splitlines()):
        key = (row["cluster_id"], row["element_id"], int(row["release_ordinal"]), int(row["topic_id"]))
        grouped[key].add(row["review_id"])
    return [
        Cluster(
            cluster_id=cid,
            element_id=eid,
            release_ordinal=rel,
            topic_id=topic,
            review_ids=frozenset(ids),
        )
        for (cid, eid, rel, topic), ids in sorted(grouped.items())
    ]
