"""Domain records (releases, reviews, deletion labels), file ingestion with
per-record error collection, release-window attribution, and a directory
store for pipeline artifacts."""

from __future__ import annotations

import bisect
import csv
import json
import os
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path


class CorpusError(Exception):
    """Fatal ingestion or store failure."""


class EmptyWindowError(CorpusError):
    """No reviews attributed to the requested release window."""


@dataclass(frozen=True)
class Release:
    app_id: str
    version: str
    ordinal: int
    released_at: datetime
    avg_rating: float | None = None


@dataclass(frozen=True)
class Review:
    review_id: str
    app_id: str
    text: str
    rating: int
    posted_at: datetime
    window_ordinal: int | None = None


@dataclass(frozen=True)
class DeletionLabel:
    app_id: str
    element_id: str
    release_ordinal: int
    deleted: bool


@dataclass(frozen=True)
class RejectedRecord:
    line: int
    reason: str


@dataclass
class ReviewLoad:
    """Result of parsing a review file: accepted rows plus per-line rejects."""

    reviews: list[Review]
    rejected: list[RejectedRecord]


def parse_timestamp(value) -> datetime:
    """Parse an ISO-8601 timestamp; naive values are taken as UTC."""
    if not isinstance(value, str):
        raise ValueError(f"timestamp must be an ISO-8601 string, got {value!r}")
    raw = value.strip()
    if raw.endswith(("Z", "z")):
        raw = raw[:-1] + "+00:00"
    try:
        ts = datetime.fromisoformat(raw)
    except ValueError as exc:
        raise ValueError(f"unparsable timestamp {value!r}") from exc
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def _format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _review_from_record(record: dict, app_id: str, line: int) -> Review:
    text = str(record.get("text") or "").strip()
    if not text:
        raise ValueError("empty text")
    try:
        rating = int(record["rating"])
    except (KeyError, TypeError, ValueError):
        raise ValueError(f"missing or non-integer rating {record.get('rating')!r}")
    if not 1 <= rating <= 5:
        raise ValueError(f"rating {rating} outside 1-5")
    if "timestamp" not in record or record["timestamp"] in (None, ""):
        raise ValueError("missing timestamp")
    posted_at = parse_timestamp(record["timestamp"])
    review_id = str(record.get("id") or "").strip() or f"{app_id}#L{line}"
    return Review(
        review_id=review_id,
        app_id=app_id,
        text=text,
        rating=rating,
        posted_at=posted_at,
    )


def load_reviews(path, app_id: str) -> ReviewLoad:
    """Load reviews from a .jsonl (one object per line) or .csv file.

    Malformed records are collected with their line numbers instead of
    aborting; the load only fails if the file is missing, unreadable, or
    yields no valid record at all.
    """
    path = Path(path)
    if not path.exists():
        raise CorpusError(f"review file not found: {path}")
    reviews: list[Review] = []
    rejected: list[RejectedRecord] = []

    def consume(record, line):
        try:
            reviews.append(_review_from_record(record, app_id, line))
        except ValueError as exc:
            rejected.append(RejectedRecord(line=line, reason=str(exc)))

    if path.suffix.lower() == ".csv":
        with open(path, newline="", encoding="utf-8") as f:
            reader = csv.DictReader(f)
            for line, record in enumerate(reader, start=2):
                consume(record, line)
    else:
        with open(path, encoding="utf-8") as f:
            for line, raw in enumerate(f, start=1):
                raw = raw.strip()
                if not raw:
                    continue
                try:
                    record = json.loads(raw)
                except json.JSONDecodeError as exc:
                    rejected.append(RejectedRecord(line=line, reason=f"invalid JSON: {exc}"))
                    continue
                consume(record, line)

    if not reviews and rejected:
        raise CorpusError(f"all {len(rejected)} records in {path} were rejected")
    return ReviewLoad(reviews=reviews, rejected=rejected)


def load_releases(path, app_id: str) -> list[Release]:
    """Load the release manifest: CSV lines of version,ISO-8601 timestamp.

    Ordinals are assigned from timestamp order; equal timestamps are an
    error because windows would be ambiguous.
    """
    path = Path(path)
    if not path.exists():
        raise CorpusError(f"release manifest not found: {path}")
    raw = []
    with open(path, newline="", encoding="utf-8") as f:
        for line, row in enumerate(csv.reader(f), start=1):
            if not row or row[0].strip().startswith("#"):
                continue
            if row[0].strip().lower() == "version":
                continue
            if len(row) < 2:
                raise CorpusError(f"{path}:{line}: expected 'version,timestamp'")
            raw.append((row[0].strip(), parse_timestamp(row[1])))
    raw.sort(key=lambda item: item[1])
    for (_, a), (_, b) in zip(raw, raw[1:]):
        if a == b:
            raise CorpusError(f"releases of {app_id} share timestamp {a.isoformat()}")
    return [
        Release(app_id=app_id, version=version, ordinal=i, released_at=ts)
        for i, (version, ts) in enumerate(raw)
    ]


def load_labels(path) -> list[DeletionLabel]:
    """Load the truth-set CSV: app_id, element_id, release_ordinal, deleted."""
    path = Path(path)
    if not path.exists():
        raise CorpusError(f"label file not found: {path}")
    labels = []
    seen = set()
    with open(path, newline="", encoding="utf-8") as f:
        for line, row in enumerate(csv.DictReader(f), start=2):
            try:
                label = DeletionLabel(
                    app_id=row["app_id"].strip(),
                    element_id=row["element_id"].strip(),
                    release_ordinal=int(row["release_ordinal"]),
                    deleted=row["deleted"].strip() in ("1", "true", "True"),
                )
            except (KeyError, ValueError, AttributeError) as exc:
                raise CorpusError(f"{path}:{line}: malformed label row ({exc})")
            key = (label.app_id, label.element_id, label.release_ordinal)
            if key in seen:
                raise CorpusError(f"{path}:{line}: duplicate label key {key}")
            seen.add(key)
            labels.append(label)
    return labels


def attribute_windows(reviews: list[Review], releases: list[Release]) -> list[Review]:
    """Assign each review the ordinal of the latest release at or before its
    posting time; reviews older than the first release attach to window 0."""
    if not releases:
        raise CorpusError("attribute_windows requires at least one release")
    ordered = sorted(releases, key=lambda r: r.ordinal)
    times = [r.released_at for r in ordered]
    out = []
    for review in reviews:
        idx = bisect.bisect_right(times, review.posted_at) - 1
        ordinal = ordered[max(idx, 0)].ordinal
        out.append(replace(review, window_ordinal=ordinal))
    return out


def release_avg_rating(reviews: list[Review], release_ordinal: int) -> float:
    """Arithmetic mean rating of the reviews attributed to one window."""
    ratings = [r.rating for r in reviews if r.window_ordinal == release_ordinal]
    if not ratings:
        raise EmptyWindowError(f"no reviews in window {release_ordinal}")
    return sum(ratings) / len(ratings)


class CorpusStore:
    """Directory-backed store for corpus records and per-stage artifacts.

    Serialization is canonical (sorted keys, fixed timestamp format), so
    saving the same data twice produces byte-identical files.
    """

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _stage_dir(self, stage: str) -> Path:
        d = self.root / stage
        d.mkdir(parents=True, exist_ok=True)
        return d

    def artifact_path(self, stage: str, name: str) -> Path:
        return self._stage_dir(stage) / name

    def save_artifact(self, stage: str, name: str, text: str) -> Path:
        path = self.artifact_path(stage, name)
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        return path

    def load_artifact(self, stage: str, name: str) -> str:
        path = self.artifact_path(stage, name)
        if not path.exists():
            raise CorpusError(f"missing artifact {stage}/{name} under {self.root}")
        with open(path, encoding="utf-8", newline="") as f:
            return f.read()

    def has_artifact(self, stage: str, name: str) -> bool:
        return self.artifact_path(stage, name).exists()

    def save_reviews(self, reviews: list[Review]) -> Path:
        lines = []
        for r in reviews:
            record = {
                "id": r.review_id,
                "app_id": r.app_id,
                "text": r.text,
                "rating": r.rating,
                "timestamp": _format_timestamp(r.posted_at),
            }
            if r.window_ordinal is not None:
                record["window_ordinal"] = r.window_ordinal
            lines.append(json.dumps(record, sort_keys=True, ensure_ascii=False))
        return self.save_artifact("corpus", "reviews.jsonl", "\n".join(lines) + "\n")

    def load_reviews(self) -> list[Review]:
        reviews = []
        for raw in self.load_artifact("corpus", "reviews.jsonl").splitlines():
            if not raw.strip():
                continue
            rec = json.loads(raw)
            reviews.append(
                Review(
                    review_id=rec["id"],
                    app_id=rec["app_id"],
                    text=rec["text"],
                    rating=rec["rating"],
                    posted_at=parse_timestamp(rec["timestamp"]),
                    window_ordinal=rec.get("window_ordinal"),
                )
            )
        return reviews

    def save_releases(self, releases: list[Release]) -> Path:
        lines = []
        for r in sorted(releases, key=lambda x: x.ordinal):
            lines.append(
                json.dumps(
                    {
                        "app_id": r.app_id,
                        "version": r.version,
                        "ordinal": r.ordinal,
                        "released_at": _format_timestamp(r.released_at),
                    },
                    sort_keys=True,
                )
            )
        return self.save_artifact("corpus", "releases.jsonl", "\n".join(lines) + "\n")

    def load_releases(self) -> list[Release]:
        releases = []
        for raw in self.load_artifact("corpus", "releases.jsonl").splitlines():
            if not raw.strip():
                continue
            rec = json.loads(raw)
            releases.append(
                Release(
                    app_id=rec["app_id"],
                    version=rec["version"],
                    ordinal=rec["ordinal"],
                    released_at=parse_timestamp(rec["released_at"]),
                )
            )
        return releases

    def save_labels(self, labels: list[DeletionLabel]) -> Path:
        rows = ["app_id,element_id,release_ordinal,deleted"]
        for l in sorted(labels, key=lambda x: (x.app_id, x.element_id, x.release_ordinal)):
            rows.append(f"{l.app_id},{l.element_id},{l.release_ordinal},{int(l.deleted)}")
        return self.save_artifact("corpus", "labels.csv", "\n".join(rows) + "\n")

    def load_labels(self) -> list[DeletionLabel]:
        tmp = self.artifact_path("corpus", "labels.csv")
        if not tmp.exists():
            raise CorpusError(f"missing artifact corpus/labels.csv under {self.root}")
        return load_labels(tmp)

    def list_artifacts(self) -> list[str]:
        found = []
        for dirpath, _, filenames in os.walk(self.root):
            for name in filenames:
                found.append(str(Path(dirpath, name).relative_to(self.root)))
        return sorted(found)
