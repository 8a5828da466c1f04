import json
from datetime import datetime, timedelta, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reviewprune.corpus import (
    CorpusError,
    CorpusStore,
    DeletionLabel,
    EmptyWindowError,
    Release,
    Review,
    attribute_windows,
    load_labels,
    load_releases,
    load_reviews,
    parse_timestamp,
    release_avg_rating,
)

UTC = timezone.utc


def _release(ordinal, iso, app_id="app"):
    return Release(app_id=app_id, version=f"v{ordinal}", ordinal=ordinal, released_at=parse_timestamp(iso))


def _review(rid, iso, rating=3, app_id="app", text="something broke"):
    return Review(review_id=rid, app_id=app_id, text=text, rating=rating, posted_at=parse_timestamp(iso))


class TestLoadReviews:
    def test_jsonl_happy_path(self, tmp_path):
        path = tmp_path / "reviews.jsonl"
        path.write_text(
            json.dumps({"text": "crashes a lot", "rating": 1, "timestamp": "2020-01-02T00:00:00Z"})
            + "\n"
        )
        out = load_reviews(path, "app")
        assert len(out.reviews) == 1 and not out.rejected
        assert out.reviews[0].rating == 1
        assert out.reviews[0].text == "crashes a lot"

    def test_bad_rating_rejected_with_line(self, tmp_path):
        path = tmp_path / "reviews.jsonl"
        lines = [
            json.dumps({"text": "ok", "rating": 3, "timestamp": "2020-01-02T00:00:00Z"}),
            json.dumps({"text": "bad", "rating": 6, "timestamp": "2020-01-02T00:00:00Z"}),
        ]
        path.write_text("\n".join(lines) + "\n")
        out = load_reviews(path, "app")
        assert len(out.reviews) == 1
        assert len(out.rejected) == 1
        assert out.rejected[0].line == 2
        assert "6" in out.rejected[0].reason

    def test_order_preserved(self, tmp_path):
        path = tmp_path / "reviews.jsonl"
        lines = [
            json.dumps({"id": f"r{i}", "text": f"t{i}", "rating": 3, "timestamp": "2020-01-02T00:00:00Z"})
            for i in range(5)
        ]
        path.write_text("\n".join(lines) + "\n")
        out = load_reviews(path, "app")
        assert [r.review_id for r in out.reviews] == [f"r{i}" for i in range(5)]

    def test_csv_format(self, tmp_path):
        path = tmp_path / "reviews.csv"
        path.write_text(
            "id,text,rating,timestamp\n"
            "a,loves it,5,2020-01-02T00:00:00Z\n"
            ",missing id,2,2020-01-03T00:00:00Z\n"
        )
        out = load_reviews(path, "myapp")
        assert out.reviews[0].review_id == "a"
        # synthesized deterministic id from (app_id, line)
        assert out.reviews[1].review_id == "myapp#L3"

    def test_missing_file(self, tmp_path):
        with pytest.raises(CorpusError, match="not found"):
            load_reviews(tmp_path / "nope.jsonl", "app")

    def test_all_rejected_is_fatal(self, tmp_path):
        path = tmp_path / "reviews.jsonl"
        path.write_text(json.dumps({"text": "", "rating": 9, "timestamp": "x"}) + "\n")
        with pytest.raises(CorpusError, match="rejected"):
            load_reviews(path, "app")

    def test_unparsable_timestamp_rejected(self, tmp_path):
        path = tmp_path / "reviews.jsonl"
        path.write_text(
            json.dumps({"text": "fine", "rating": 3, "timestamp": "2020-01-02T00:00:00Z"})
            + "\n"
            + json.dumps({"text": "bad ts", "rating": 3, "timestamp": "not-a-date"})
            + "\n"
        )
        out = load_reviews(path, "app")
        assert len(out.rejected) == 1 and out.rejected[0].line == 2


class TestLoadReleases:
    def test_manifest(self, tmp_path):
        path = tmp_path / "releases.csv"
        path.write_text("version,timestamp\n1.0,2020-01-01T00:00:00Z\n1.1,2020-02-01T00:00:00Z\n")
        releases = load_releases(path, "app")
        assert [r.ordinal for r in releases] == [0, 1]
        assert releases[0].version == "1.0"
        assert releases[0].released_at < releases[1].released_at

    def test_unordered_input_sorted(self, tmp_path):
        path = tmp_path / "releases.csv"
        path.write_text("2.0,2020-03-01T00:00:00Z\n1.0,2020-01-01T00:00:00Z\n")
        releases = load_releases(path, "app")
        assert [r.version for r in releases] == ["1.0", "2.0"]

    def test_duplicate_timestamp_rejected(self, tmp_path):
        path = tmp_path / "releases.csv"
        path.write_text("1.0,2020-01-01T00:00:00Z\n1.1,2020-01-01T00:00:00Z\n")
        with pytest.raises(CorpusError, match="share timestamp"):
            load_releases(path, "app")


class TestAttributeWindows:
    def test_between_releases(self):
        releases = [_release(0, "2020-01-01T00:00:00Z"), _release(1, "2020-02-01T00:00:00Z")]
        out = attribute_windows([_review("r", "2020-01-15T00:00:00Z")], releases)
        assert out[0].window_ordinal == 0

    def test_exact_boundary_inclusive(self):
        releases = [_release(0, "2020-01-01T00:00:00Z"), _release(1, "2020-02-01T00:00:00Z")]
        out = attribute_windows([_review("r", "2020-02-01T00:00:00Z")], releases)
        assert out[0].window_ordinal == 1

    def test_before_first_release(self):
        releases = [_release(0, "2020-01-01T00:00:00Z")]
        out = attribute_windows([_review("r", "2019-12-01T00:00:00Z")], releases)
        assert out[0].window_ordinal == 0

    def test_total_and_idempotent(self):
        releases = [_release(i, f"2020-0{i+1}-01T00:00:00Z") for i in range(3)]
        reviews = [_review(f"r{i}", f"2020-0{i+1}-15T00:00:00Z") for i in range(3)]
        once = attribute_windows(reviews, releases)
        twice = attribute_windows(once, releases)
        assert all(r.window_ordinal is not None for r in once)
        assert once == twice

    @given(
        st.lists(st.integers(min_value=0, max_value=10_000), min_size=1, max_size=30),
        st.lists(st.integers(min_value=1, max_value=10), min_size=1, max_size=8, unique=True),
    )
    @settings(max_examples=100)
    def test_matches_bruteforce_oracle(self, review_offsets, release_gaps):
        base = datetime(2020, 1, 1, tzinfo=UTC)
        release_times = []
        t = base
        for gap in sorted(release_gaps):
            t = t + timedelta(days=gap)
            release_times.append(t)
        releases = [
            Release(app_id="a", version=str(i), ordinal=i, released_at=ts)
            for i, ts in enumerate(release_times)
        ]
        reviews = [
            Review(review_id=str(i), app_id="a", text="x", rating=3, posted_at=base + timedelta(hours=off))
            for i, off in enumerate(review_offsets)
        ]
        got = attribute_windows(reviews, releases)
        for review in got:
            # oracle: last release at or before the posting time, floor 0
            expected = 0
            for release in releases:
                if release.released_at <= review.posted_at:
                    expected = release.ordinal
            assert review.window_ordinal == expected


class TestReleaseAvgRating:
    def test_mean(self):
        reviews = [
            _review("a", "2020-01-02T00:00:00Z", rating=4),
            _review("b", "2020-01-03T00:00:00Z", rating=2),
            _review("c", "2020-01-04T00:00:00Z", rating=3),
        ]
        reviews = attribute_windows(reviews, [_release(0, "2020-01-01T00:00:00Z")])
        assert release_avg_rating(reviews, 0) == 3.0

    def test_singleton(self):
        reviews = attribute_windows(
            [_review("a", "2020-01-02T00:00:00Z", rating=5)], [_release(0, "2020-01-01T00:00:00Z")]
        )
        assert release_avg_rating(reviews, 0) == 5.0

    def test_empty_window(self):
        with pytest.raises(EmptyWindowError, match="no reviews in window"):
            release_avg_rating([], 0)


class TestLabels:
    def test_load(self, tmp_path):
        path = tmp_path / "labels.csv"
        path.write_text("app_id,element_id,release_ordinal,deleted\napp,btn,0,1\napp,btn,1,0\n")
        labels = load_labels(path)
        assert labels[0] == DeletionLabel(app_id="app", element_id="btn", release_ordinal=0, deleted=True)
        assert labels[1].deleted is False

    def test_duplicate_key_rejected(self, tmp_path):
        path = tmp_path / "labels.csv"
        path.write_text("app_id,element_id,release_ordinal,deleted\napp,btn,0,1\napp,btn,0,0\n")
        with pytest.raises(CorpusError, match="duplicate"):
            load_labels(path)


class TestCorpusStore:
    def test_round_trip_byte_identical(self, tmp_path):
        store = CorpusStore(tmp_path / "store")
        releases = [_release(0, "2020-01-01T00:00:00Z"), _release(1, "2020-02-01T05:30:00Z")]
        reviews = attribute_windows(
            [
                _review("r1", "2020-01-05T12:00:00Z", rating=2, text="breaks often"),
                _review("r2", "2020-02-02T00:00:00Z", rating=5, text="unicode ok ✓"),
            ],
            releases,
        )
        labels = [DeletionLabel(app_id="app", element_id="e", release_ordinal=0, deleted=True)]
        store.save_releases(releases)
        store.save_reviews(reviews)
        store.save_labels(labels)
        first = {name: store.load_artifact(*name.split("/", 1)) for name in store.list_artifacts()}

        assert store.load_releases() == releases
        assert store.load_reviews() == reviews
        assert store.load_labels() == labels

        # re-save the reloaded data: files must be byte-identical
        store.save_releases(store.load_releases())
        store.save_reviews(store.load_reviews())
        store.save_labels(store.load_labels())
        second = {name: store.load_artifact(*name.split("/", 1)) for name in store.list_artifacts()}
        assert first == second

    def test_artifacts(self, tmp_path):
        store = CorpusStore(tmp_path / "store")
        store.save_artifact("linker", "links.csv", "a,b\n1,2\n")
        assert store.has_artifact("linker", "links.csv")
        assert store.load_artifact("linker", "links.csv") == "a,b\n1,2\n"
        assert "linker/links.csv" in store.list_artifacts()

    def test_missing_artifact(self, tmp_path):
        store = CorpusStore(tmp_path / "store")
        with pytest.raises(CorpusError, match="missing artifact"):
            store.load_artifact("linker", "links.csv")
