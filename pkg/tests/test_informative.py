import math

import numpy as np
import pytest

from reviewprune.informative import (
    INFORMATIVE,
    NON_INFORMATIVE,
    DegenerateTrainingError,
    LabeledReview,
    NBModel,
    bundled_seed_training,
    classify,
    posteriors,
    train_nb,
)


def _labeled(rid, tokens, label):
    return LabeledReview(review_id=rid, tokens=tuple(tokens), label=label)


@pytest.fixture(scope="module")
def separable_model():
    data = [
        _labeled("i1", ["crash", "bug"], INFORMATIVE),
        _labeled("i2", ["battery", "drain"], INFORMATIVE),
        _labeled("n1", ["love", "great"], NON_INFORMATIVE),
        _labeled("n2", ["nice", "awesome"], NON_INFORMATIVE),
    ]
    return train_nb(data), data


@pytest.fixture(scope="module")
def seed_model():
    return train_nb(bundled_seed_training())


class TestTrain:
    def test_separable_docs_classify_to_own_class(self, separable_model):
        model, data = separable_model
        for doc in data:
            label, _ = classify(model, doc.tokens)
            assert label == doc.label

    def test_balanced_priors(self, separable_model):
        model, _ = separable_model
        assert model.log_prior[INFORMATIVE] == pytest.approx(math.log(0.5), abs=1e-12)
        assert model.log_prior[NON_INFORMATIVE] == pytest.approx(math.log(0.5), abs=1e-12)

    def test_priors_exponentiate_to_one(self, separable_model):
        model, _ = separable_model
        total = sum(math.exp(p) for p in model.log_prior.values())
        assert abs(total - 1.0) <= 1e-12

    def test_vocabulary_covered_in_both_classes(self, separable_model):
        model, _ = separable_model
        for token in model.vocabulary:
            assert token in model.log_likelihood[INFORMATIVE]
            assert token in model.log_likelihood[NON_INFORMATIVE]

    def test_single_class_rejected(self):
        data = [_labeled("a", ["x"], INFORMATIVE), _labeled("b", ["y"], INFORMATIVE)]
        with pytest.raises(DegenerateTrainingError, match="degenerate"):
            train_nb(data)

    def test_bad_alpha(self, separable_model):
        _, data = separable_model
        with pytest.raises(ValueError, match="alpha"):
            train_nb(data, alpha=0.0)

    def test_deterministic(self, separable_model):
        _, data = separable_model
        assert train_nb(data).to_json() == train_nb(data).to_json()


class TestClassify:
    def test_posteriors_sum_to_one(self, separable_model):
        model, _ = separable_model
        for tokens in (["crash"], ["love", "crash"], ["bug", "nice", "battery"]):
            post = posteriors(model, tokens)
            assert abs(sum(post.values()) - 1.0) <= 1e-9

    def test_bag_of_words_order_invariance(self, separable_model):
        model, _ = separable_model
        a = classify(model, ["crash", "love", "battery"])
        b = classify(model, ["battery", "love", "crash"])
        assert a == b

    def test_oov_tokens_ignored(self, separable_model):
        model, _ = separable_model
        assert classify(model, ["crash"]) == classify(model, ["crash", "zzz_unseen"])

    def test_empty_tokens_non_informative_with_prior(self, separable_model):
        model, _ = separable_model
        label, score = classify(model, [])
        assert label == NON_INFORMATIVE
        assert score == pytest.approx(math.exp(model.log_prior[NON_INFORMATIVE]), abs=1e-12)

    def test_duplicate_training_doc_keeps_argmax_stable(self, separable_model):
        _, data = separable_model
        probes = [["crash"], ["bug", "battery"], ["love"], ["awesome", "nice"], ["drain"]]
        base = train_nb(data)
        # duplicate one document per class so classes stay balanced
        enlarged = data + [
            _labeled("i1dup", data[0].tokens, INFORMATIVE),
            _labeled("n1dup", data[2].tokens, NON_INFORMATIVE),
        ]
        enlarged_model = train_nb(enlarged)
        for probe in probes:
            assert classify(base, probe)[0] == classify(enlarged_model, probe)[0]


class TestSeedModel:
    def test_praise_is_non_informative(self, seed_model):
        from reviewprune.textprep import StopList, preprocess

        tokens = preprocess("The app is nice", StopList.default()).tokens
        assert classify(seed_model, tokens)[0] == NON_INFORMATIVE

    def test_emotion_is_non_informative(self, seed_model):
        from reviewprune.textprep import StopList, preprocess

        tokens = preprocess("I hate this app!", StopList.default()).tokens
        assert classify(seed_model, tokens)[0] == NON_INFORMATIVE

    def test_problem_report_is_informative(self, seed_model):
        from reviewprune.textprep import StopList, preprocess

        tokens = preprocess(
            "The app crashes when I rotate the screen during playback", StopList.default()
        ).tokens
        assert classify(seed_model, tokens)[0] == INFORMATIVE


class TestSerialization:
    def test_round_trip(self, separable_model):
        model, _ = separable_model
        clone = NBModel.from_json(model.to_json())
        assert clone.to_json() == model.to_json()
        assert classify(clone, ["crash", "love"]) == classify(model, ["crash", "love"])

    def test_save_load(self, separable_model, tmp_path):
        model, _ = separable_model
        path = tmp_path / "nb.json"
        model.save(path)
        assert NBModel.load(path).to_json() == model.to_json()

    def test_version_gate(self):
        with pytest.raises(ValueError, match="format"):
            NBModel.from_json('{"format_version": 99}')


def make_separable_corpus(n_docs=200, seed=7):
    """Synthetic corpus from two disjoint token pools (half per class)."""
    rng = np.random.default_rng(seed)
    informative_pool = [f"prob{i}" for i in range(30)]
    praise_pool = [f"nice{i}" for i in range(30)]
    docs = []
    for i in range(n_docs):
        pool = informative_pool if i % 2 == 0 else praise_pool
        label = INFORMATIVE if i % 2 == 0 else NON_INFORMATIVE
        size = int(rng.integers(3, 9))
        tokens = [pool[int(j)] for j in rng.integers(0, len(pool), size=size)]
        docs.append(_labeled(f"d{i}", tokens, label))
    return docs


def test_synthetic_corpus_single_cv_run():
    from reviewprune.evaluation import kfold_cv

    docs = make_separable_corpus()
    result = kfold_cv(
        [d.tokens for d in docs],
        [d.label for d in docs],
        fit=lambda xs, ys: train_nb(
            [_labeled(str(i), x, y) for i, (x, y) in enumerate(zip(xs, ys))]
        ),
        predict=lambda m, tokens: classify(m, tokens)[0],
        positive_label=INFORMATIVE,
        k=10,
        repeats=1,
        seed=3,
    )
    assert result.mean_f1 >= 0.95
