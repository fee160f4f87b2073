"""Phrase-prefix tagging and grammatical transforms.

Three transforms make template slot fillers grammatical:

1. article insertion before a leading noun/adjective, or after a
   leading transitive verb when a noun/adjective follows,
2. gerund conversion of a leading bare verb,
3. pluralization of the word after a leading number.

The conditions are keyed on the first word's tag, so at most one rule
applies to a given phrase and transforms never chain.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Protocol, Sequence

from .errors import TransformNotApplicable

ARTICLES = ("a", "an", "the")
VOWELS = "aeiou"


class PosTag(enum.Enum):
    NOUN = "noun"
    ADJECTIVE = "adjective"
    VERB_INFINITIVE = "verb-infinitive"
    VERB_OTHER = "verb-other"
    NUMBER = "number"
    OTHER = "other"


class TransformKind(enum.Enum):
    PREPEND_ARTICLE = "prepend-article"
    GERUNDIZE = "gerundize"
    PLURALIZE_AFTER_NUMBER = "pluralize-after-number"


@dataclass(frozen=True)
class Transform:
    """One grammatical transform; article variants carry their article."""

    kind: TransformKind
    article: str | None = None

    def __post_init__(self):
        if self.kind is TransformKind.PREPEND_ARTICLE:
            if self.article not in ARTICLES:
                raise ValueError(f"article must be one of {ARTICLES}, got {self.article!r}")
        elif self.article is not None:
            raise ValueError(f"{self.kind.value} takes no article")


@dataclass(frozen=True)
class PhraseVariant:
    """A transformed surface form of a head or tail phrase.

    ``article_index`` locates an inserted article inside ``words`` so
    that masking can skip it: articles belong to the sentence frame,
    not to the entity.
    """

    words: tuple[str, ...]
    applied: frozenset[Transform]
    article_index: int | None = None

    def __post_init__(self):
        if not self.words:
            raise ValueError("variant words must be non-empty")

    def content_indices(self) -> tuple[int, ...]:
        """Indices of entity words within ``words`` (articles excluded)."""
        return tuple(i for i in range(len(self.words)) if i != self.article_index)


def identity_variant(phrase: Sequence[str]) -> PhraseVariant:
    return PhraseVariant(tuple(phrase), frozenset())


# --- tagging ------------------------------------------------------------

class Tagger(Protocol):
    """Replaceable part-of-speech seam; implementations map word -> PosTag."""

    def tag(self, word: str) -> PosTag: ...


_NOUN_SUFFIXES = ("tion", "sion", "ment", "ness", "ance", "ence", "ship", "hood", "ism", "ity", "ology", "graphy")
_ADJ_SUFFIXES = ("ous", "ful", "ive", "ible", "able", "less", "ish", "ical")
_VERB_INF_SUFFIXES = ("ize", "ise", "ify")
_VERB_OTHER_SUFFIXES = ("ing", "ed")


class LexiconTagger:
    """Most-frequent-tag lookup with suffix heuristics; falls back to OTHER."""

    def __init__(self, lexicon: dict[str, PosTag]):
        self._lexicon = dict(lexicon)

    @classmethod
    def bundled(cls) -> "LexiconTagger":
        return _bundled_tagger()

    def tag(self, word: str) -> PosTag:
        found = self._lexicon.get(word)
        if found is not None:
            return found
        if word.replace(",", "").replace(".", "").isdigit():
            return PosTag.NUMBER
        if word.endswith("ly"):
            return PosTag.OTHER
        for suffixes, tag in (
            (_NOUN_SUFFIXES, PosTag.NOUN),
            (_ADJ_SUFFIXES, PosTag.ADJECTIVE),
            (_VERB_INF_SUFFIXES, PosTag.VERB_INFINITIVE),
            (_VERB_OTHER_SUFFIXES, PosTag.VERB_OTHER),
        ):
            if any(word.endswith(s) and len(word) > len(s) + 1 for s in suffixes):
                return tag
        return PosTag.OTHER


def _read_pairs(name: str) -> list[tuple[str, str]]:
    pairs = []
    text = resources.files("triplemine.data").joinpath(name).read_text("utf-8")
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        left, _, right = line.partition("\t")
        pairs.append((left.strip(), right.strip()))
    return pairs


@lru_cache(maxsize=1)
def _bundled_tagger() -> LexiconTagger:
    lexicon: dict[str, PosTag] = {}
    for word, tag in _read_pairs("lexicon.tsv"):
        if word in lexicon:
            raise ValueError(f"duplicate lexicon entry {word!r}")
        lexicon[word] = PosTag(tag)
    return LexiconTagger(lexicon)


@lru_cache(maxsize=2)
def _exceptions(name: str) -> dict[str, str]:
    return dict(_read_pairs(name))


def tag_prefix(phrase: Sequence[str], tagger: Tagger | None = None) -> tuple[PosTag, PosTag | None]:
    """Tags of the first word and, when present, the second word."""
    if not phrase:
        raise ValueError("phrase must be non-empty")
    tagger = tagger or LexiconTagger.bundled()
    first = tagger.tag(phrase[0])
    second = tagger.tag(phrase[1]) if len(phrase) > 1 else None
    return first, second


# --- inflection ---------------------------------------------------------

def gerund(word: str) -> str:
    """Bare verb -> gerund (jump -> jumping) via suffix rules + exceptions."""
    exceptions = _exceptions("gerund_exceptions.tsv")
    if word in exceptions:
        return exceptions[word]
    if word.endswith("ie"):
        return word[:-2] + "ying"
    # drop a silent final e (make -> making, argue -> arguing) but keep it
    # after e/o/y where it is pronounced (see -> seeing, canoe -> canoeing)
    if len(word) > 2 and word.endswith("e") and word[-2] not in "aeioy":
        return word[:-1] + "ing"
    if _is_cvc_monosyllable(word):
        return word + word[-1] + "ing"
    return word + "ing"


def _is_cvc_monosyllable(word: str) -> bool:
    if len(word) < 3:
        return False
    last, mid, prev = word[-1], word[-2], word[-3]
    if last in VOWELS or last in "wxy":
        return False
    if mid not in VOWELS or prev in VOWELS:
        return False
    # one vowel group == one syllable, which is where doubling applies
    groups = 0
    in_vowel = False
    for ch in word:
        if ch in VOWELS:
            if not in_vowel:
                groups += 1
            in_vowel = True
        else:
            in_vowel = False
    return groups == 1


def pluralize(word: str) -> str:
    """Singular noun -> plural (leg -> legs) via suffix rules + irregulars."""
    exceptions = _exceptions("plural_exceptions.tsv")
    if word in exceptions:
        return exceptions[word]
    if word.endswith(("s", "x", "z", "ch", "sh")):
        return word + "es"
    if word.endswith("y") and len(word) > 1 and word[-2] not in VOWELS:
        return word[:-1] + "ies"
    return word + "s"


def indefinite_article(word: str) -> str:
    """Vowel-initial heuristic; deliberately no phonetic exceptions."""
    return "an" if word[:1] in VOWELS else "a"


# --- transform application ----------------------------------------------

def _article_position(phrase: Sequence[str], tagger: Tagger) -> int | None:
    """Where an article goes for this phrase, or None if rule 1 is off.

    Leading noun/adjective: position 0. Leading transitive verb with a
    noun/adjective after it: position 1 (before the object).
    """
    first, second = tag_prefix(phrase, tagger)
    if first in (PosTag.NOUN, PosTag.ADJECTIVE):
        return 0
    if first is PosTag.VERB_OTHER and second in (PosTag.NOUN, PosTag.ADJECTIVE):
        return 1
    return None


def apply_transform(phrase: Sequence[str], transform: Transform, tagger: Tagger | None = None) -> tuple[str, ...]:
    """Apply one transform to a phrase, or raise TransformNotApplicable."""
    if not phrase:
        raise ValueError("phrase must be non-empty")
    tagger = tagger or LexiconTagger.bundled()
    words = tuple(phrase)
    first, _ = tag_prefix(words, tagger)

    if transform.kind is TransformKind.PREPEND_ARTICLE:
        position = _article_position(words, tagger)
        if position is None:
            raise TransformNotApplicable(f"no article slot in {words!r}")
        return words[:position] + (transform.article,) + words[position:]

    if transform.kind is TransformKind.GERUNDIZE:
        if first is not PosTag.VERB_INFINITIVE:
            raise TransformNotApplicable(f"first word of {words!r} is not a bare verb")
        return (gerund(words[0]),) + words[1:]

    if first is not PosTag.NUMBER:
        raise TransformNotApplicable(f"first word of {words!r} is not a number")
    if len(words) < 2:
        raise TransformNotApplicable(f"{words!r} has no word to pluralize")
    return (words[0], pluralize(words[1])) + words[2:]


def enumerate_variants(phrase: Sequence[str], tagger: Tagger | None = None) -> list[PhraseVariant]:
    """All phrase variants: identity plus every applicable single transform.

    Article insertion contributes one variant per article, including
    ungrammatical ones ("an pet store"); ranking, not rules, filters
    those. Deduplicated by surface form, identity first.
    """
    if not phrase:
        raise ValueError("phrase must be non-empty")
    tagger = tagger or LexiconTagger.bundled()
    words = tuple(phrase)
    variants = [identity_variant(words)]
    seen = {words}

    article_pos = _article_position(words, tagger)
    candidates: list[tuple[Transform, int | None]] = []
    if article_pos is not None:
        candidates.extend(
            (Transform(TransformKind.PREPEND_ARTICLE, article), article_pos) for article in ARTICLES
        )
    else:
        for kind in (TransformKind.GERUNDIZE, TransformKind.PLURALIZE_AFTER_NUMBER):
            candidates.append((Transform(kind), None))

    for transform, position in candidates:
        try:
            transformed = apply_transform(words, transform, tagger)
        except TransformNotApplicable:
            continue
        if transformed in seen:
            continue
        seen.add(transformed)
        variants.append(PhraseVariant(transformed, frozenset([transform]), position))
    return variants


def deterministic_variant(phrase: Sequence[str], tagger: Tagger | None = None) -> PhraseVariant:
    """The single variant used by template+grammar mode.

    Applies whichever rule fires, choosing the indefinite article by the
    vowel heuristic (which reproduces "an outer space", wrongly but
    faithfully). Falls back to the identity variant.
    """
    tagger = tagger or LexiconTagger.bundled()
    words = tuple(phrase)
    position = _article_position(words, tagger)
    if position is not None:
        transform = Transform(TransformKind.PREPEND_ARTICLE, indefinite_article(words[position]))
        return PhraseVariant(apply_transform(words, transform, tagger), frozenset([transform]), position)
    for kind in (TransformKind.GERUNDIZE, TransformKind.PLURALIZE_AFTER_NUMBER):
        transform = Transform(kind)
        try:
            return PhraseVariant(apply_transform(words, transform, tagger), frozenset([transform]))
        except TransformNotApplicable:
            continue
    return identity_variant(words)
