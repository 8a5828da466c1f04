"""Pipeline orchestration and command-line entry points.

Subcommands: run (the full six-stage pipeline), evaluate, intrusion,
train-informative, benchmark-check. Runs are pure functions of
(inputs, config, seed): artifacts and reports are byte-deterministic.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__, corpus, evaluation, informative, linker, recommender, signals, textprep, topics, uiextract

log = logging.getLogger("reviewprune")

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INPUT = 2

EXPECTED_BENCHMARK_MEAN_F1 = 0.74
BENCHMARK_MEAN_TOLERANCE = 0.01


class ConfigError(Exception):
    """Invalid configuration or missing input (exit code 2)."""


@dataclass
class PipelineConfig:
    app_id: str
    reviews: Path
    releases: Path
    layouts_root: Path
    out: Path
    labels: Path | None = None
    stoplist: Path | None = None
    lexicon: Path | None = None
    informative_model: Path | None = None
    informative_training: Path | None = None
    forest_model: Path | None = None
    link_threshold: float = linker.DEFAULT_THRESHOLD
    tau_topic: float = 0.25
    hdp: topics.HdpParams = field(default_factory=topics.HdpParams)
    rf: recommender.ForestParams = field(default_factory=recommender.ForestParams)
    seed: int = 0
    config_hash: str = ""

    @classmethod
    def from_file(cls, path, overrides: dict | None = None) -> "PipelineConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}")
        if overrides:
            raw.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(raw, base_dir=path.parent)

    @classmethod
    def from_dict(cls, raw: dict, base_dir: Path) -> "PipelineConfig":
        def require(key):
            if key not in raw or raw[key] in (None, ""):
                raise ConfigError(f"config is missing required key {key!r}")
            return raw[key]

        def resolve(value):
            if value in (None, ""):
                return None
            p = Path(value)
            return p if p.is_absolute() else base_dir / p

        if "seed" not in raw:
            raise ConfigError("config must pin an integer 'seed' (no wall-clock seeding)")
        threshold = float(raw.get("link_threshold", linker.DEFAULT_THRESHOLD))
        if not 0.0 < threshold <= 1.0:
            raise ConfigError(f"link_threshold must be in (0, 1], got {threshold}")
        tau = float(raw.get("tau_topic", 0.25))
        if not 0.0 < tau <= 1.0:
            raise ConfigError(f"tau_topic must be in (0, 1], got {tau}")
        try:
            hdp_params = topics.HdpParams(seed=0, **raw.get("hdp", {}))
            rf_params = recommender.ForestParams(seed=0, **raw.get("rf", {}))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad hdp/rf parameters: {exc}")

        hashable = {k: raw[k] for k in sorted(raw) if k != "out"}
        config_hash = hashlib.sha256(
            json.dumps(hashable, sort_keys=True).encode("utf-8")
        ).hexdigest()[:16]

        return cls(
            app_id=str(require("app_id")),
            reviews=resolve(require("reviews")),
            releases=resolve(require("releases")),
            layouts_root=resolve(require("layouts_root")),
            out=resolve(require("out")),
            labels=resolve(raw.get("labels")),
            stoplist=resolve(raw.get("stoplist")),
            lexicon=resolve(raw.get("lexicon")),
            informative_model=resolve(raw.get("informative_model")),
            informative_training=resolve(raw.get("informative_training")),
            forest_model=resolve(raw.get("forest_model")),
            link_threshold=threshold,
            tau_topic=tau,
            hdp=hdp_params,
            rf=rf_params,
            seed=int(raw["seed"]),
            config_hash=config_hash,
        )

    def validate_inputs(self):
        for name, p in (
            ("reviews", self.reviews),
            ("releases", self.releases),
            ("layouts_root", self.layouts_root),
        ):
            if not p.exists():
                raise ConfigError(f"{name} path does not exist: {p}")


# -- pipeline stages -----------------------------------------------------------


def _stage_corpus(cfg: PipelineConfig, store: corpus.CorpusStore):
    releases = corpus.load_releases(cfg.releases, cfg.app_id)
    if not releases:
        raise ConfigError(f"release manifest {cfg.releases} lists no releases")
    loaded = corpus.load_reviews(cfg.reviews, cfg.app_id)
    for reject in loaded.rejected:
        log.warning("reviews line %d rejected: %s", reject.line, reject.reason)
    reviews = corpus.attribute_windows(loaded.reviews, releases)
    store.save_releases(releases)
    store.save_reviews(reviews)
    return releases, reviews


def _stage_textprep(cfg: PipelineConfig, store: corpus.CorpusStore, reviews):
    stoplist = textprep.StopList.from_file(cfg.stoplist) if cfg.stoplist else textprep.StopList.default()
    tokenized = {
        r.review_id: textprep.preprocess(r.text, stoplist, source_id=r.review_id)
        for r in reviews
    }
    lines = [
        json.dumps(
            {"review_id": rid, "tokens": list(t.tokens)}, sort_keys=True, ensure_ascii=False
        )
        for rid, t in sorted(tokenized.items())
    ]
    store.save_artifact("textprep", "tokens.jsonl", "\n".join(lines) + "\n")
    return stoplist, tokenized


def _informative_model(cfg: PipelineConfig) -> informative.NBModel:
    if cfg.informative_model:
        if not cfg.informative_model.exists():
            raise ConfigError(f"informative_model path does not exist: {cfg.informative_model}")
        return informative.NBModel.load(cfg.informative_model)
    if cfg.informative_training:
        if not cfg.informative_training.exists():
            raise ConfigError(
                f"informative_training path does not exist: {cfg.informative_training}"
            )
        data = informative.load_labeled_csv(cfg.informative_training)
    else:
        data = informative.bundled_seed_training()
    return informative.train_nb(data)


def _stage_informative(cfg: PipelineConfig, store: corpus.CorpusStore, tokenized):
    model = _informative_model(cfg)
    store.save_artifact("informative", "model.json", model.to_json() + "\n")
    decisions = {}
    rows = ["review_id,label,posterior"]
    for rid in sorted(tokenized):
        label, posterior = informative.classify(model, tokenized[rid].tokens)
        decisions[rid] = label
        rows.append(f"{rid},{label},{posterior!r}")
    store.save_artifact("informative", "decisions.csv", "\n".join(rows) + "\n")
    informative_ids = {rid for rid, label in decisions.items() if label == informative.INFORMATIVE}
    return model, informative_ids


def _release_dirs(cfg: PipelineConfig, releases) -> dict[int, Path]:
    found = {}
    for release in releases:
        candidate = cfg.layouts_root / release.version
        if candidate.is_dir():
            found[release.ordinal] = candidate
        else:
            log.warning(
                "no layout directory for release %s under %s", release.version, cfg.layouts_root
            )
    if not found:
        raise ConfigError(
            f"no release layout directories found under {cfg.layouts_root} "
            f"(expected one subdirectory per release version)"
        )
    return found


def _find_strings(release_dir: Path) -> uiextract.StringTable:
    preferred = release_dir / "res" / "values" / "strings.xml"
    if preferred.exists():
        return uiextract.parse_strings(preferred)
    matches = sorted(release_dir.rglob("strings.xml"))
    if matches:
        return uiextract.parse_strings(matches[0])
    return uiextract.StringTable()


def _find_layout_dir(release_dir: Path) -> Path:
    for candidate in (release_dir / "res" / "layout", release_dir / "layout"):
        if candidate.is_dir():
            return candidate
    return release_dir


def _stage_uiextract(cfg: PipelineConfig, store: corpus.CorpusStore, releases):
    elements = []
    for ordinal, release_dir in sorted(_release_dirs(cfg, releases).items()):
        strings = _find_strings(release_dir)
        elements.extend(
            uiextract.parse_layouts(_find_layout_dir(release_dir), strings, ordinal)
        )
    store.save_artifact("uiextract", "elements.csv", uiextract.elements_to_csv(elements))
    return elements


def _stage_linker(cfg: PipelineConfig, store, reviews, tokenized, informative_ids, elements, stoplist):
    by_window: dict[int, list] = {}
    for r in reviews:
        if r.review_id in informative_ids:
            by_window.setdefault(r.window_ordinal, []).append(tokenized[r.review_id])
    by_release: dict[int, list] = {}
    for e in elements:
        by_release.setdefault(e.release_ordinal, []).append(e)

    links = []
    for window, window_reviews in sorted(by_window.items()):
        window_elements = by_release.get(window, [])
        if not window_elements:
            continue
        element_tokens = {
            e.element_id: uiextract.description_tokens(e, stoplist) for e in window_elements
        }
        links.extend(
            linker.link(
                window_reviews,
                window_elements,
                threshold=cfg.link_threshold,
                element_tokens=element_tokens,
            )
        )
    store.save_artifact("linker", "links.csv", linker.links_to_csv(links))
    return links


def _stage_topics(cfg: PipelineConfig, store, links, tokenized):
    grouped: dict[tuple[str, int], list] = {}
    for l in links:
        grouped.setdefault((l.element_id, l.release_ordinal), []).append(l)

    clusters = []
    thetas_rows = ["element_id,release_ordinal,review_id,topic_id,probability"]
    words_rows = ["element_id,release_ordinal,topic_id,top_words"]
    models = {}
    for (element_id, ordinal), element_links in sorted(grouped.items()):
        review_ids = sorted({l.review_id for l in element_links})
        docs = [tokenized[rid] for rid in review_ids]
        params = topics.HdpParams(
            gamma=cfg.hdp.gamma,
            alpha0=cfg.hdp.alpha0,
            eta=cfg.hdp.eta,
            sweeps=cfg.hdp.sweeps,
            burn_in=cfg.hdp.burn_in,
            seed=topics.derive_seed(cfg.seed, f"{element_id}@w{ordinal}"),
        )
        model = topics.fit_hdp(docs, params)
        models[(element_id, ordinal)] = model
        clusters.extend(topics.form_clusters(model, element_links, tau_topic=cfg.tau_topic))
        store.save_artifact(
            "topics", f"model_{element_id}@w{ordinal}.json", model.state_dump() + "\n"
        )
        state = json.loads(model.state_dump())
        for rid in review_ids:
            for topic_id, prob in enumerate(model.theta(rid).probabilities):
                thetas_rows.append(f"{element_id},{ordinal},{rid},{topic_id},{prob!r}")
        for topic_id in sorted(state["topic_word_counts"], key=int):
            counts = state["topic_word_counts"][topic_id]
            top = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:10]
            words_rows.append(
                f"{element_id},{ordinal},{topic_id},{' '.join(w for w, _ in top)}"
            )
    store.save_artifact("topics", "clusters.csv", topics.clusters_to_csv(clusters))
    store.save_artifact("topics", "thetas.csv", "\n".join(thetas_rows) + "\n")
    store.save_artifact("topics", "topic_words.csv", "\n".join(words_rows) + "\n")
    return clusters, models


def _stage_signals(cfg: PipelineConfig, store, clusters, reviews, tokenized):
    lex = signals.SentimentLexicon.from_file(cfg.lexicon) if cfg.lexicon else signals.SentimentLexicon.default()
    reviews_by_id = {r.review_id: r for r in reviews}
    window_avgs = {}
    features = []
    for cluster in sorted(clusters, key=lambda c: c.cluster_id):
        window = cluster.release_ordinal
        if window not in window_avgs:
            window_avgs[window] = corpus.release_avg_rating(reviews, window)
        features.append(
            signals.featurize(cluster, reviews_by_id, tokenized, window_avgs[window], lex)
        )
    store.save_artifact("signals", "features.csv", signals.features_to_csv(features))
    return features


def _stage_recommender(cfg: PipelineConfig, store, clusters, features, labels):
    clusters_by_id = {c.cluster_id: c for c in clusters}
    if cfg.forest_model:
        if not cfg.forest_model.exists():
            raise ConfigError(f"forest_model path does not exist: {cfg.forest_model}")
        model = recommender.ForestModel.load(cfg.forest_model)
    else:
        if labels is None:
            raise ConfigError(
                "no forest_model configured and no labels available to train one; "
                "provide 'forest_model' or 'labels' in the config"
            )
        truth = {(l.element_id, l.release_ordinal): l.deleted for l in labels}
        train_x, train_y = [], []
        for feat in features:
            cluster = clusters_by_id[feat.cluster_id]
            key = (cluster.element_id, cluster.release_ordinal)
            if key in truth:
                train_x.append(feat)
                train_y.append(truth[key])
        if len(train_x) < 2 or len(set(train_y)) < 2:
            raise ConfigError(
                "labels must cover at least one deleted and one kept cluster to train"
            )
        params = recommender.ForestParams(
            n_trees=cfg.rf.n_trees,
            max_depth=cfg.rf.max_depth,
            min_split=cfg.rf.min_split,
            n_features=cfg.rf.n_features,
            seed=cfg.seed,
            balanced_bootstrap=cfg.rf.balanced_bootstrap,
        )
        model = recommender.train_forest(train_x, train_y, params)
    store.save_artifact("recommender", "model.json", model.to_json() + "\n")

    cluster_recs = [
        recommender.predict(model, feat, clusters_by_id[feat.cluster_id]) for feat in features
    ]
    element_recs = recommender.aggregate_to_element(cluster_recs)
    store.save_artifact(
        "recommender", "cluster_recommendations.csv", recommender.recommendations_to_csv(cluster_recs)
    )
    store.save_artifact(
        "recommender", "element_recommendations.csv", recommender.recommendations_to_csv(element_recs)
    )
    return model, cluster_recs, element_recs


def _build_report(cfg, store, reviews, informative_ids, elements, links, clusters, features, cluster_recs, element_recs):
    link_sim = {(l.review_id, l.element_id, l.release_ordinal): l.similarity for l in links}
    features_by_id = {f.cluster_id: f for f in features}
    recs_by_cluster = {r.cluster_id: r for r in cluster_recs}
    clusters_by_key: dict[tuple[str, int], list] = {}
    for c in clusters:
        clusters_by_key.setdefault((c.element_id, c.release_ordinal), []).append(c)

    entries = []
    for rec in element_recs:
        key = (rec.element_id, rec.release_ordinal)
        cluster_entries = []
        for c in sorted(clusters_by_key[key], key=lambda x: x.cluster_id):
            feat = features_by_id[c.cluster_id]
            crec = recs_by_cluster[c.cluster_id]
            evidence = sorted(
                c.review_ids,
                key=lambda rid: (-link_sim.get((rid, c.element_id, c.release_ordinal), 0.0), rid),
            )[:3]
            cluster_entries.append(
                {
                    "cluster_id": c.cluster_id,
                    "topic_id": c.topic_id,
                    "predicted": crec.predicted,
                    "score": crec.score,
                    "features": {
                        "n_reviews": feat.n_reviews,
                        "avg_rating": feat.avg_rating,
                        "delta_rating": feat.delta_rating,
                        "avg_polarity": feat.avg_polarity,
                        "avg_objectivity": feat.avg_objectivity,
                        "uninstall_count": feat.uninstall_count,
                    },
                    "evidence_reviews": [
                        {
                            "review_id": rid,
                            "similarity": link_sim.get(
                                (rid, c.element_id, c.release_ordinal), 0.0
                            ),
                        }
                        for rid in evidence
                    ],
                }
            )
        entries.append(
            {
                "element_id": rec.element_id,
                "release_ordinal": rec.release_ordinal,
                "predicted": rec.predicted,
                "score": rec.score,
                "clusters": cluster_entries,
            }
        )

    report = {
        "metadata": {
            "app_id": cfg.app_id,
            "config_hash": cfg.config_hash,
            "seed": cfg.seed,
            "package_version": __version__,
            "link_threshold": cfg.link_threshold,
            "tau_topic": cfg.tau_topic,
            "n_reviews": len(reviews),
            "n_informative": len(informative_ids),
            "n_elements": len({(e.element_id, e.release_ordinal) for e in elements}),
            "n_links": len(links),
            "n_clusters": len(clusters),
        },
        "recommendations": entries,
    }
    body = json.dumps(report, sort_keys=True, indent=2) + "\n"
    store.save_artifact("report", "report.json", body)

    lines = [
        f"# Deletion recommendations for {cfg.app_id}",
        "",
        f"- config hash: `{cfg.config_hash}`, seed: {cfg.seed}, version: {__version__}",
        f"- reviews: {len(reviews)} ({len(informative_ids)} informative), "
        f"links: {len(links)}, clusters: {len(clusters)}",
        "",
        "| element | window | prediction | score |",
        "|---|---|---|---|",
    ]
    for rec in element_recs:
        lines.append(
            f"| {rec.element_id} | {rec.release_ordinal} | {rec.predicted} | {rec.score:.3f} |"
        )
    lines.append("")
    store.save_artifact("report", "summary.md", "\n".join(lines) + "\n")
    return report


def run_pipeline(cfg: PipelineConfig) -> dict:
    """Execute the six stages in order, persisting every artifact."""
    cfg.validate_inputs()
    store = corpus.CorpusStore(cfg.out)
    releases, reviews = _stage_corpus(cfg, store)
    stoplist, tokenized = _stage_textprep(cfg, store, reviews)
    _, informative_ids = _stage_informative(cfg, store, tokenized)
    elements = _stage_uiextract(cfg, store, releases)
    links = _stage_linker(cfg, store, reviews, tokenized, informative_ids, elements, stoplist)
    clusters, _ = _stage_topics(cfg, store, links, tokenized)
    features = _stage_signals(cfg, store, clusters, reviews, tokenized)
    labels = corpus.load_labels(cfg.labels) if cfg.labels else None
    if labels is not None:
        store.save_labels(labels)
    _, cluster_recs, element_recs = _stage_recommender(cfg, store, clusters, features, labels)
    return _build_report(
        cfg, store, reviews, informative_ids, elements, links, clusters, features,
        cluster_recs, element_recs,
    )


# -- evaluate ------------------------------------------------------------------


def run_evaluate(cfg: PipelineConfig, with_cv: bool = False, ignore_unlabeled: bool = False) -> dict:
    store = corpus.CorpusStore(cfg.out)
    if cfg.labels and cfg.labels.exists():
        labels = corpus.load_labels(cfg.labels)
    elif store.has_artifact("corpus", "labels.csv"):
        labels = store.load_labels()
    else:
        raise ConfigError("evaluate requires a label file (config key 'labels')")
    if not labels:
        raise ConfigError("the label file contains no labels")
    if not store.has_artifact("recommender", "element_recommendations.csv"):
        raise ConfigError(f"no prior run artifacts under {cfg.out}; run the pipeline first")
    recs = recommender.recommendations_from_csv(
        store.load_artifact("recommender", "element_recommendations.csv")
    )
    if ignore_unlabeled:
        keyed = {(l.element_id, l.release_ordinal) for l in labels}
        recs = [r for r in recs if (r.element_id, r.release_ordinal) in keyed]

    matrix = evaluation.confusion(recs, labels)
    precision, recall, f1 = evaluation.prf1(matrix)
    report = {
        "confusion": {"tp": matrix.tp, "fp": matrix.fp, "fn": matrix.fn, "tn": matrix.tn},
        "precision": precision,
        "recall": recall,
        "f1": f1,
        "per_app": {},
    }
    by_app: dict[str, list] = {}
    for label in labels:
        by_app.setdefault(label.app_id, []).append(label)
    for app_id, app_labels in sorted(by_app.items()):
        keyed = {(l.element_id, l.release_ordinal) for l in app_labels}
        app_recs = [r for r in recs if (r.element_id, r.release_ordinal) in keyed]
        m = evaluation.confusion(app_recs, app_labels)
        p, r, f = evaluation.prf1(m)
        report["per_app"][app_id] = {
            "confusion": {"tp": m.tp, "fp": m.fp, "fn": m.fn, "tn": m.tn},
            "precision": p,
            "recall": r,
            "f1": f,
        }

    if with_cv:
        features = signals.features_from_csv(store.load_artifact("signals", "features.csv"))
        clusters = topics.clusters_from_csv(store.load_artifact("topics", "clusters.csv"))
        clusters_by_id = {c.cluster_id: c for c in clusters}
        truth = {(l.element_id, l.release_ordinal): l.deleted for l in labels}
        data, y = [], []
        for feat in features:
            c = clusters_by_id[feat.cluster_id]
            key = (c.element_id, c.release_ordinal)
            if key in truth:
                data.append(feat)
                y.append("deleted" if truth[key] else "not-deleted")
        if len(data) < 2 or len(set(y)) < 2:
            raise ConfigError("cross-validation needs labeled clusters of both classes")
        k = min(10, len(data))
        params = recommender.ForestParams(seed=cfg.seed)
        cv = evaluation.kfold_cv(
            data,
            y,
            fit=lambda xs, ys: recommender.train_forest(xs, ys, params),
            predict=lambda m, x: "deleted"
            if recommender.predict(m, x).predicted == recommender.DELETE
            else "not-deleted",
            positive_label="deleted",
            k=k,
            repeats=10,
            seed=cfg.seed,
        )
        report["cv"] = {
            "k": k,
            "repeats": 10,
            "mean_precision": cv.mean_precision,
            "mean_recall": cv.mean_recall,
            "mean_f1": cv.mean_f1,
            "runs": [{"precision": r.precision, "recall": r.recall, "f1": r.f1} for r in cv.runs],
        }

    store.save_artifact("report", "evaluation.json", json.dumps(report, sort_keys=True, indent=2) + "\n")
    return report


# -- intrusion -----------------------------------------------------------------


def _load_thetas(store: corpus.CorpusStore) -> dict[tuple[str, int], dict[str, list[float]]]:
    import csv as _csv

    text = store.load_artifact("topics", "thetas.csv")
    grouped: dict[tuple[str, int], dict[str, dict[int, float]]] = {}
    for row in _csv.DictReader(text.splitlines()):
        key = (row["element_id"], int(row["release_ordinal"]))
        grouped.setdefault(key, {}).setdefault(row["review_id"], {})[int(row["topic_id"])] = float(
            row["probability"]
        )
    out: dict[tuple[str, int], dict[str, list[float]]] = {}
    for key, reviews in grouped.items():
        out[key] = {
            rid: [probs[t] for t in sorted(probs)] for rid, probs in sorted(reviews.items())
        }
    return out


def run_intrusion_tasks(cfg: PipelineConfig) -> tuple[int, int]:
    """Emit intrusion tasks (and a private answer key) for every fitted
    model with at least three topics. Returns (tasks, skipped models)."""
    import numpy as np

    store = corpus.CorpusStore(cfg.out)
    if not store.has_artifact("topics", "thetas.csv"):
        raise ConfigError(f"no fitted topic models under {cfg.out}; run the pipeline first")
    thetas = _load_thetas(store)
    topic_words = {}
    if store.has_artifact("topics", "topic_words.csv"):
        import csv as _csv

        for row in _csv.DictReader(store.load_artifact("topics", "topic_words.csv").splitlines()):
            topic_words[(row["element_id"], int(row["release_ordinal"]), int(row["topic_id"]))] = row[
                "top_words"
            ]

    task_rows = ["task_id,element_id,release_ordinal,review_id,topic_a,topic_b,topic_c,words_a,words_b,words_c"]
    answer_rows = ["task_id,intruder_id"]
    n_tasks = 0
    skipped = 0
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    for (element_id, ordinal), reviews in sorted(thetas.items()):
        n_topics = len(next(iter(reviews.values())))
        if n_topics < 3:
            skipped += 1
            continue
        for rid in sorted(reviews):
            dist = topics.TopicDistribution(review_id=rid, probabilities=tuple(reviews[rid]))
            task = evaluation.intrusion_task_from_theta(dist, rng)
            task_id = f"{element_id}@w{ordinal}/{rid}"
            a, b, c = task.shown_topics
            words = [topic_words.get((element_id, ordinal, t), "") for t in (a, b, c)]
            task_rows.append(
                f"{task_id},{element_id},{ordinal},{rid},{a},{b},{c},{words[0]},{words[1]},{words[2]}"
            )
            answer_rows.append(f"{task_id},{task.intruder_id}")
            n_tasks += 1
    store.save_artifact("intrusion", "tasks.csv", "\n".join(task_rows) + "\n")
    store.save_artifact("intrusion", "answers.csv", "\n".join(answer_rows) + "\n")
    return n_tasks, skipped


def run_intrusion_tlo(cfg: PipelineConfig, judgments_path) -> dict:
    """Score a filled judgments file (task_id, judge_id, selected_topic)."""
    import csv as _csv

    store = corpus.CorpusStore(cfg.out)
    judgments_path = Path(judgments_path)
    if not judgments_path.exists():
        raise ConfigError(f"judgments file not found: {judgments_path}")
    if not store.has_artifact("intrusion", "tasks.csv"):
        raise ConfigError("no intrusion tasks have been generated; run 'intrusion' first")

    tasks: dict[str, dict] = {}
    for row in _csv.DictReader(store.load_artifact("intrusion", "tasks.csv").splitlines()):
        tasks[row["task_id"]] = row
    answers = {}
    for row in _csv.DictReader(store.load_artifact("intrusion", "answers.csv").splitlines()):
        answers[row["task_id"]] = int(row["intruder_id"])

    selections: dict[str, list[int]] = {}
    unknown = []
    with open(judgments_path, newline="", encoding="utf-8") as f:
        for row in _csv.DictReader(f):
            task_id = row["task_id"].strip()
            if task_id not in tasks:
                unknown.append(task_id)
                continue
            selections.setdefault(task_id, []).append(int(row["selected_topic"]))
    if unknown:
        raise ConfigError(f"judgments reference unknown tasks: {sorted(set(unknown))}")

    thetas = _load_thetas(corpus.CorpusStore(cfg.out))
    scores = []
    rows = ["task_id,review_id,n_judges,tlo"]
    for task_id in sorted(selections):
        meta = tasks[task_id]
        shown = (int(meta["topic_a"]), int(meta["topic_b"]), int(meta["topic_c"]))
        task = evaluation.IntrusionTask(
            review_id=meta["review_id"],
            shown_topics=shown,
            intruder_id=answers[task_id],
            judge_selections=selections[task_id],
        )
        key = (meta["element_id"], int(meta["release_ordinal"]))
        dist = topics.TopicDistribution(
            review_id=meta["review_id"], probabilities=tuple(thetas[key][meta["review_id"]])
        )
        score = evaluation.tlo(task, dist)
        scores.append(score.value)
        rows.append(f"{task_id},{score.review_id},{task.n_judges},{score.value!r}")
    if not scores:
        raise ConfigError("the judgments file matched no tasks")
    report = {
        "n_tasks_scored": len(scores),
        "mean_tlo": sum(scores) / len(scores),
        "median_tlo": sorted(scores)[len(scores) // 2],
        "min_tlo": min(scores),
        "max_tlo": max(scores),
    }
    store.save_artifact("intrusion", "tlo_scores.csv", "\n".join(rows) + "\n")
    store.save_artifact(
        "intrusion", "tlo_report.json", json.dumps(report, sort_keys=True, indent=2) + "\n"
    )
    return report


# -- command wiring --------------------------------------------------------------


def _load_config(args) -> PipelineConfig:
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "out", None) is not None:
        overrides["out"] = args.out
    if getattr(args, "threshold", None) is not None:
        overrides["link_threshold"] = args.threshold
    return PipelineConfig.from_file(args.config, overrides)


def cmd_run(args) -> int:
    cfg = _load_config(args)
    report = run_pipeline(cfg)
    flagged = [r for r in report["recommendations"] if r["predicted"] == recommender.DELETE]
    print(
        f"run complete: {len(report['recommendations'])} element recommendations, "
        f"{len(flagged)} flagged for deletion -> {cfg.out}"
    )
    return EXIT_OK


def cmd_evaluate(args) -> int:
    cfg = _load_config(args)
    report = run_evaluate(cfg, with_cv=args.cv, ignore_unlabeled=args.ignore_unlabeled)
    m = report["confusion"]
    print(
        f"confusion tp={m['tp']} fp={m['fp']} fn={m['fn']} tn={m['tn']} "
        f"precision={report['precision']:.4f} recall={report['recall']:.4f} f1={report['f1']:.4f}"
    )
    if "cv" in report:
        cv = report["cv"]
        print(
            f"cv ({cv['repeats']}x{cv['k']}-fold): mean precision={cv['mean_precision']:.4f} "
            f"recall={cv['mean_recall']:.4f} f1={cv['mean_f1']:.4f}"
        )
    return EXIT_OK


def cmd_intrusion(args) -> int:
    cfg = _load_config(args)
    if args.judgments:
        report = run_intrusion_tlo(cfg, args.judgments)
        print(
            f"scored {report['n_tasks_scored']} tasks: mean TLO {report['mean_tlo']:.4f}, "
            f"median {report['median_tlo']:.4f}"
        )
    else:
        n_tasks, skipped = run_intrusion_tasks(cfg)
        print(f"wrote {n_tasks} intrusion tasks ({skipped} models below 3 topics skipped)")
    return EXIT_OK


def cmd_train_informative(args) -> int:
    data = informative.load_labeled_csv(args.labeled)
    if args.balance:
        import numpy as np

        by_label: dict[str, list] = {}
        for d in data:
            by_label.setdefault(d.label, []).append(d)
        if len(by_label) < 2:
            raise ConfigError("training data must contain both classes")
        floor = min(len(v) for v in by_label.values())
        rng = np.random.Generator(np.random.PCG64(args.seed or 0))
        balanced = []
        for label in sorted(by_label):
            pool = by_label[label]
            picks = rng.choice(len(pool), size=floor, replace=False)
            balanced.extend(pool[i] for i in sorted(picks))
        data = balanced
    model = informative.train_nb(data, alpha=args.alpha)
    model.save(args.model_out)
    print(f"trained on {len(data)} labeled reviews -> {args.model_out}")
    if args.cv:
        cv = evaluation.kfold_cv(
            [d.tokens for d in data],
            [d.label for d in data],
            fit=lambda xs, ys: informative.train_nb(
                [
                    informative.LabeledReview(review_id=str(i), tokens=tuple(x), label=y)
                    for i, (x, y) in enumerate(zip(xs, ys))
                ],
                alpha=args.alpha,
            ),
            predict=lambda m, tokens: informative.classify(m, tokens)[0],
            positive_label=informative.INFORMATIVE,
            k=min(10, len(data)),
            repeats=10,
            seed=args.seed or 0,
        )
        print(
            f"cv: mean precision={cv.mean_precision:.4f} recall={cv.mean_recall:.4f} "
            f"f1={cv.mean_f1:.4f}"
        )
    return EXIT_OK


def cmd_benchmark_check(args) -> int:
    check = evaluation.benchmark_check(tolerance=args.tolerance)
    for row, recomputed in check.rows:
        marker = "ok" if abs(recomputed - row.printed_f1) <= check.tolerance + 1e-12 else "MISMATCH"
        print(f"{row.app:40s} recorded={row.printed_f1:<5} recomputed={recomputed:.4f} {marker}")
    print(
        f"{check.rows_within_tolerance}/{len(check.rows)} rows within {check.tolerance}; "
        f"mean recomputed F1 = {check.mean_recomputed_f1:.4f} "
        f"(recorded mean {EXPECTED_BENCHMARK_MEAN_F1})"
    )
    ok = (
        check.rows_within_tolerance >= len(check.rows) - 1
        and abs(check.mean_recomputed_f1 - EXPECTED_BENCHMARK_MEAN_F1) <= BENCHMARK_MEAN_TOLERANCE
    )
    return EXIT_OK if ok else EXIT_INTERNAL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reviewprune",
        description="Recommend user-driven deletions of app UI functionality from review corpora.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", required=True, help="pipeline config file (JSON)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", help="override the output directory")

    p_run = sub.add_parser("run", help="execute the full pipeline")
    add_common(p_run)
    p_run.add_argument("--threshold", type=float, help="override the link threshold")
    p_run.set_defaults(func=cmd_run)

    p_eval = sub.add_parser("evaluate", help="score a prior run against the truth set")
    add_common(p_eval)
    p_eval.add_argument("--cv", action="store_true", help="also run repeated 10-fold CV")
    p_eval.add_argument(
        "--ignore-unlabeled",
        action="store_true",
        help="drop recommendations that have no label instead of failing",
    )
    p_eval.set_defaults(func=cmd_evaluate)

    p_intr = sub.add_parser("intrusion", help="emit intrusion tasks or score judgments")
    add_common(p_intr)
    p_intr.add_argument("--judgments", help="filled judgments CSV (task_id, judge_id, selected_topic)")
    p_intr.set_defaults(func=cmd_intrusion)

    p_train = sub.add_parser("train-informative", help="train the informativeness filter")
    p_train.add_argument("--labeled", required=True, help="labeled CSV (review_id, label, text)")
    p_train.add_argument("--model-out", required=True, help="where to write the model")
    p_train.add_argument("--alpha", type=float, default=1.0, help="Laplace smoothing")
    p_train.add_argument("--balance", action="store_true", help="downsample to balanced classes")
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--cv", action="store_true", help="report repeated 10-fold CV metrics")
    p_train.set_defaults(func=cmd_train_informative)

    p_bench = sub.add_parser(
        "benchmark-check", help="recompute F1 over the bundled confusion benchmark"
    )
    p_bench.add_argument("--tolerance", type=float, default=0.01)
    p_bench.set_defaults(func=cmd_benchmark_check)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, corpus.CorpusError) as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001 - boundary: report stage failures cleanly
        print(f"{args.command}: internal failure: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
