import csv
from importlib import resources

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reviewprune.textprep import (
    NEGATORS,
    StopList,
    expand_contractions,
    lemmatize,
    normalize,
    preprocess,
)


@pytest.fixture(scope="module")
def stoplist():
    return StopList.default()


class TestExpandContractions:
    def test_cant_expands_to_can_not(self):
        assert expand_contractions("can't") == "can not"

    def test_wont_expands_per_shipped_table(self):
        # verified against the shipped table entry won't -> will not
        table = dict(
            (r["contraction"], r["expansion"])
            for r in csv.DictReader(
                resources.files("reviewprune._resources")
                .joinpath("contractions.csv")
                .read_text()
                .splitlines()
            )
        )
        assert table["won't"] == "will not"
        assert expand_contractions("won't stop") == "will not stop"

    def test_non_contraction_untouched(self):
        assert expand_contractions("cannot") == "cannot"

    def test_case_insensitive_lookup(self):
        assert expand_contractions("Can't") == "can not"

    def test_curly_apostrophe_folded(self):
        assert expand_contractions("can’t") == "can not"

    def test_every_table_entry_expands(self):
        rows = csv.DictReader(
            resources.files("reviewprune._resources")
            .joinpath("contractions.csv")
            .read_text()
            .splitlines()
        )
        for row in rows:
            assert expand_contractions(row["contraction"]) == row["expansion"]


class TestNormalize:
    def test_emoji_and_punctuation_removed(self):
        assert normalize("Great 👍 app!!!") == "great app"

    def test_empty_identity(self):
        assert normalize("") == ""

    def test_digits_and_case(self):
        assert normalize("v2.0 UPDATE") == "v update"

    def test_whitespace_collapsed(self):
        assert normalize("a   b\t\nc") == "a b c"


class TestLemmatize:
    @pytest.mark.parametrize(
        "form,lemma",
        [
            ("deciding", "decide"),
            ("decided", "decide"),
            ("decide", "decide"),
            ("apps", "app"),
            ("crashes", "crash"),
            ("studies", "study"),
            ("running", "run"),
            ("stopped", "stop"),
            ("making", "make"),
            ("used", "use"),
            ("listening", "listen"),
            ("went", "go"),
            ("children", "child"),
            ("fixes", "fix"),
            ("cases", "case"),
            ("boxes", "box"),
            ("removing", "remove"),
            ("organizing", "organize"),
            ("tried", "try"),
            ("keys", "key"),
            ("status", "status"),
            ("thing", "thing"),
            ("need", "need"),
        ],
    )
    def test_known_forms(self, form, lemma):
        assert lemmatize(form) == lemma

    def test_dictionary_values_are_fixed_points(self):
        rows = csv.DictReader(
            resources.files("reviewprune._resources")
            .joinpath("lemmas.csv")
            .read_text()
            .splitlines()
        )
        for row in rows:
            assert lemmatize(row["lemma"]) == row["lemma"], row

    @given(st.text(alphabet="abcdefghijklmnopqrstuvwxyz", min_size=1, max_size=12))
    @settings(max_examples=300)
    def test_idempotent(self, word):
        once = lemmatize(word)
        assert lemmatize(once) == once


class TestStopList:
    def test_negators_always_exempt(self):
        sl = StopList(base=frozenset({"not", "no", "never", "the"}))
        for negator in NEGATORS:
            assert negator not in sl
        assert "the" in sl

    def test_effective_formula(self):
        sl = StopList(
            base=frozenset({"a", "b"}),
            additions=frozenset({"c"}),
            removals=frozenset({"b"}),
        )
        assert sl.effective == frozenset({"a", "c"})

    def test_file_format_exemptions(self):
        sl = StopList.from_lines(["# comment", "the", "-can", "it", ""])
        assert "the" in sl and "it" in sl
        assert "can" not in sl

    def test_default_keeps_domain_keywords(self, stoplist):
        for word in ("uninstall", "refund", "delete", "remove", "can"):
            assert word not in stoplist


class TestPreprocess:
    def test_traced_example(self, stoplist):
        got = preprocess("I can't uninstall it!", stoplist)
        assert got.tokens == ("can", "not", "uninstall")
        assert got.raw_text == "I can't uninstall it!"

    def test_all_stop_words(self, stoplist):
        assert preprocess("it is the of a", stoplist).tokens == ()

    def test_emoji_only(self, stoplist):
        assert preprocess("😀😀", stoplist).tokens == ()

    @given(st.text(max_size=60))
    @settings(max_examples=200)
    def test_tokens_lowercase_alphabetic_and_unstopped(self, text):
        stoplist = StopList.default()
        out = preprocess(text, stoplist)
        for token in out.tokens:
            assert token.isalpha() and token == token.lower()
            assert token not in stoplist

    @given(st.text(max_size=60))
    @settings(max_examples=150)
    def test_token_level_idempotence(self, text):
        stoplist = StopList.default()
        first = preprocess(text, stoplist).tokens
        again = preprocess(" ".join(first), stoplist).tokens
        assert again == first
