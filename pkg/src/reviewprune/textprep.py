"""Deterministic review-text normalization: contraction expansion, symbol
stripping, stop-word removal, and dictionary-plus-rules lemmatization."""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from importlib import resources

NEGATORS = frozenset({"not", "no", "never"})

_VOWELS = "aeiou"
_APOSTROPHES = "’‘ʼ`´"
_NON_ALPHA = re.compile(r"[^a-z]+")
_CONTRACTION_TOKEN = re.compile(r"'?[a-z]+(?:'[a-z]+)*", re.IGNORECASE)


def _resource_text(name: str) -> str:
    return resources.files("reviewprune._resources").joinpath(name).read_text(encoding="utf-8")


def _load_contractions() -> dict[str, str]:
    table = {}
    reader = csv.DictReader(_resource_text("contractions.csv").splitlines())
    for row in reader:
        table[row["contraction"].lower()] = row["expansion"].lower()
    return table


def _load_lemma_table() -> dict[str, str]:
    table = {}
    reader = csv.DictReader(_resource_text("lemmas.csv").splitlines())
    for row in reader:
        table[row["form"]] = row["lemma"]
    return table


_CONTRACTIONS = _load_contractions()
_LEMMAS = _load_lemma_table()


@dataclass(frozen=True)
class TokenizedText:
    """A review reduced to lowercase lemmas, with the original text retained
    for raw keyword scans."""

    source_id: str
    tokens: tuple[str, ...]
    raw_text: str


@dataclass
class StopList:
    """Stop list with user-editable additions and exemptions.

    Negators are always exempted regardless of the base list or additions,
    because downstream sentiment negation depends on them surviving.
    """

    base: frozenset[str]
    removals: frozenset[str] = frozenset()
    additions: frozenset[str] = frozenset()
    _effective: frozenset[str] = field(init=False, repr=False)

    def __post_init__(self):
        effective = (set(self.base) | set(self.additions)) - set(self.removals) - NEGATORS
        object.__setattr__(self, "_effective", frozenset(effective))

    def __contains__(self, word: str) -> bool:
        return word in self._effective

    @property
    def effective(self) -> frozenset[str]:
        return self._effective

    @classmethod
    def from_lines(cls, lines) -> "StopList":
        """Parse the stop-list file format: one word per line, '#' comments,
        '-' prefix marks an exemption."""
        base, removals = set(), set()
        for line in lines:
            word = line.strip().lower()
            if not word or word.startswith("#"):
                continue
            if word.startswith("-"):
                removals.add(word[1:].strip())
            else:
                base.add(word)
        return cls(base=frozenset(base), removals=frozenset(removals))

    @classmethod
    def from_file(cls, path) -> "StopList":
        with open(path, encoding="utf-8") as f:
            return cls.from_lines(f)

    @classmethod
    def default(cls) -> "StopList":
        return cls.from_lines(_resource_text("stoplist.txt").splitlines())


def expand_contractions(text: str) -> str:
    """Replace every contraction found in the shipped table by its expansion.

    Curly apostrophes are folded to ASCII before lookup; words not in the
    table are left untouched.
    """
    folded = text
    for ch in _APOSTROPHES:
        folded = folded.replace(ch, "'")

    def repl(m: re.Match) -> str:
        return _CONTRACTIONS.get(m.group(0).lower(), m.group(0))

    return _CONTRACTION_TOKEN.sub(repl, folded)


def normalize(text: str) -> str:
    """Lowercase and replace every non-letter (emoji, punctuation, digits,
    non-ASCII symbols) with a single space, collapsing whitespace runs."""
    return _NON_ALPHA.sub(" ", text.lower()).strip()


def _strip_ing_ed(word: str) -> str | None:
    """Suffix stage for -ing/-ed; returns None when no rule applies."""
    if word.endswith("ing") and len(word) >= 5:
        stem = word[:-3]
    elif word.endswith("ied") and len(word) >= 5:
        return word[:-3] + "y"
    elif word.endswith("ed") and len(word) >= 4 and not word.endswith("eed"):
        stem = word[:-2]
    else:
        return None
    if not any(c in _VOWELS for c in stem):
        return None
    return _restore_stem(stem)


def _restore_stem(stem: str) -> str:
    # undo consonant doubling: stopp -> stop, runn -> run
    if len(stem) >= 3 and stem[-1] == stem[-2] and stem[-1] in "bdfgmnprt":
        return stem[:-1]
    # v, z, u never end English words: remov -> remove, organiz -> organize
    if stem[-1] in "vzu":
        return stem + "e"
    # short stems ending consonant-after-vowel lost a silent e: mak -> make, us -> use
    groups = sum(
        1 for i, c in enumerate(stem) if c in _VOWELS and (i == 0 or stem[i - 1] not in _VOWELS)
    )
    if groups == 1 and stem[-1] not in _VOWELS + "wxy" and len(stem) >= 2 and stem[-2] in _VOWELS:
        if len(stem) == 2 or stem[-3] not in _VOWELS:
            return stem + "e"
    return stem


def _strip_plural(word: str) -> str | None:
    if len(word) <= 3 or not word.endswith("s"):
        return None
    if word.endswith(("ss", "us", "is")):
        return None
    if word.endswith("ies") and len(word) >= 5:
        return word[:-3] + "y"
    if word.endswith(("sses", "shes", "ches", "xes", "zzes")):
        return word[:-2]
    if word.endswith(("ses", "zes")):
        return word[:-1]
    return word[:-1]


def _lemmatize_once(token: str) -> str:
    hit = _LEMMAS.get(token)
    if hit is not None:
        return hit
    stripped = _strip_ing_ed(token)
    if stripped is not None:
        return stripped
    plural = _strip_plural(token)
    if plural is not None:
        return plural
    return token


def lemmatize(token: str) -> str:
    """Map an inflected form to its dictionary lemma.

    Dictionary lookup first, then orthographic suffix rules (-ing/-ed/-ies/-s
    with undoubling and silent-e restoration). Applied to a fixed point, so
    the result is idempotent by construction.
    """
    current = token
    for _ in range(5):
        reduced = _lemmatize_once(current)
        if reduced == current:
            return current
        current = reduced
    return current


def preprocess(text: str, stoplist: StopList | None = None, source_id: str = "") -> TokenizedText:
    """Full normalization pipeline: expand contractions, strip symbols,
    split, drop stop words, lemmatize. The raw text is retained."""
    if stoplist is None:
        stoplist = StopList.default()
    cleaned = normalize(expand_contractions(text))
    lemmas = (lemmatize(w) for w in cleaned.split() if w not in stoplist)
    # a lemma may itself land on a stop word ("willing" -> "will"); filter again
    tokens = [lemma for lemma in lemmas if lemma not in stoplist]
    return TokenizedText(source_id=source_id, tokens=tuple(tokens), raw_text=text)
