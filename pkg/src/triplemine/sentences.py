"""Rendering triples into candidate sentences.

Four strategies, in increasing sophistication: relation-name
concatenation, a single fixed template, the fixed template plus
deterministic grammar transforms, and full enumeration of every
template x head-variant x tail-variant combination (the input to
coherency ranking).
"""

from __future__ import annotations

import dataclasses
import json
import math
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Sequence

from .core import Triple
from .morpho import PhraseVariant, Tagger, deterministic_variant, enumerate_variants, identity_variant

HEAD_SLOT = "{0}"
TAIL_SLOT = "{1}"

MODE_CONCAT = "concat"
MODE_TEMPLATE = "template"
MODE_TEMPLATE_GRAMMAR = "template+grammar"
MODE_COHERENCY = "coherency"
GENERATION_MODES = (MODE_CONCAT, MODE_TEMPLATE, MODE_TEMPLATE_GRAMMAR, MODE_COHERENCY)


@dataclass(frozen=True)
class Template:
    """One sentence pattern for a relation; ordinal is its registry position."""

    relation: str
    ordinal: int
    pattern: str

    def __post_init__(self):
        tokens = self.pattern.split()
        if tokens.count(HEAD_SLOT) != 1 or tokens.count(TAIL_SLOT) != 1:
            raise ValueError(
                f"template {self.relation}[{self.ordinal}] must contain exactly one "
                f"{HEAD_SLOT} and one {TAIL_SLOT}: {self.pattern!r}"
            )

    @property
    def template_id(self) -> tuple[str, int]:
        return (self.relation, self.ordinal)

    def tokens(self) -> tuple[str, ...]:
        return tuple(self.pattern.lower().split())


class TemplateRegistry:
    """Relation -> ordered template list, loaded from the bundled JSON.

    The data file is kept verbatim, known typos included ("SimlarTo",
    "are have similar meanings"); fixing them would silently change
    which sentences get scored.
    """

    def __init__(self, patterns_by_relation: dict[str, Sequence[str]]):
        self._templates: dict[str, tuple[Template, ...]] = {}
        for relation, patterns in patterns_by_relation.items():
            if not patterns:
                raise ValueError(f"relation {relation!r} has no templates")
            self._templates[relation] = tuple(
                Template(relation, ordinal, pattern) for ordinal, pattern in enumerate(patterns)
            )

    @classmethod
    def bundled(cls) -> "TemplateRegistry":
        return _bundled_registry()

    def relations(self) -> tuple[str, ...]:
        return tuple(self._templates)

    def templates_for(self, relation: str) -> tuple[Template, ...]:
        try:
            return self._templates[relation]
        except KeyError:
            raise KeyError(f"no templates for relation {relation!r}") from None

    def first(self, relation: str) -> Template:
        return self.templates_for(relation)[0]


@lru_cache(maxsize=1)
def _bundled_registry() -> TemplateRegistry:
    raw = resources.files("triplemine.data").joinpath("templates.json").read_text("utf-8")
    return TemplateRegistry(json.loads(raw))


@dataclass(frozen=True)
class CandidateSentence:
    """A rendered sentence plus the provenance needed to mask it later.

    head_start/tail_start are the token offsets where the head and tail
    variants were substituted; they make span recovery exact even when
    the same word appears in both slots.
    """

    words: tuple[str, ...]
    head_variant: PhraseVariant
    tail_variant: PhraseVariant
    head_start: int
    tail_start: int
    template_id: tuple[str, int] | None = None
    coherency_loglik: float | None = None

    def __post_init__(self):
        if self.coherency_loglik is not None and not math.isfinite(self.coherency_loglik):
            raise ValueError(f"coherency loglik must be finite, got {self.coherency_loglik}")

    @property
    def text(self) -> str:
        return " ".join(self.words)

    @property
    def transform_count(self) -> int:
        return len(self.head_variant.applied) + len(self.tail_variant.applied)

    def with_loglik(self, loglik: float) -> "CandidateSentence":
        return dataclasses.replace(self, coherency_loglik=loglik)


def _as_variant(value: PhraseVariant | Sequence[str]) -> PhraseVariant:
    if isinstance(value, PhraseVariant):
        return value
    return identity_variant(value)


def render(
    template: Template,
    head: PhraseVariant | Sequence[str],
    tail: PhraseVariant | Sequence[str],
) -> CandidateSentence:
    """Substitute head and tail into the template's slots, nothing else."""
    head_v, tail_v = _as_variant(head), _as_variant(tail)
    words: list[str] = []
    head_start = tail_start = -1
    for token in template.tokens():
        if token == HEAD_SLOT:
            head_start = len(words)
            words.extend(head_v.words)
        elif token == TAIL_SLOT:
            tail_start = len(words)
            words.extend(tail_v.words)
        else:
            words.append(token)
    return CandidateSentence(
        words=tuple(words),
        head_variant=head_v,
        tail_variant=tail_v,
        head_start=head_start,
        tail_start=tail_start,
        template_id=template.template_id,
    )


_CAMEL_RE = re.compile(r"[A-Z]+(?![a-z])|[A-Z][a-z]*|[a-z]+|[0-9]+")


def split_relation_words(relation: str) -> tuple[str, ...]:
    """Camel-case split of a relation id: AtLocation -> (at, location).

    Multi-capital runs stay together (ExternalURL -> external url).
    """
    return tuple(part.lower() for part in _CAMEL_RE.findall(relation))


def generate_concatenation(triple: Triple) -> CandidateSentence:
    """head + relation words + tail: "ferret at location pet store"."""
    relation_words = split_relation_words(triple.relation)
    head_v, tail_v = identity_variant(triple.head), identity_variant(triple.tail)
    words = triple.head + relation_words + triple.tail
    return CandidateSentence(
        words=words,
        head_variant=head_v,
        tail_variant=tail_v,
        head_start=0,
        tail_start=len(triple.head) + len(relation_words),
        template_id=None,
    )


def generate_deterministic(
    triple: Triple,
    mode: str = MODE_TEMPLATE,
    registry: TemplateRegistry | None = None,
    tagger: Tagger | None = None,
) -> CandidateSentence:
    """Render with the relation's first template.

    template mode uses the raw phrases; template+grammar additionally
    applies every applicable transform with the deterministic article
    choice.
    """
    if mode not in (MODE_TEMPLATE, MODE_TEMPLATE_GRAMMAR):
        raise ValueError(f"mode must be {MODE_TEMPLATE!r} or {MODE_TEMPLATE_GRAMMAR!r}, got {mode!r}")
    registry = registry or TemplateRegistry.bundled()
    template = registry.first(triple.relation)
    if mode == MODE_TEMPLATE:
        return render(template, triple.head, triple.tail)
    return render(
        template,
        deterministic_variant(triple.head, tagger),
        deterministic_variant(triple.tail, tagger),
    )


def enumerate_candidates(
    triple: Triple,
    registry: TemplateRegistry | None = None,
    tagger: Tagger | None = None,
) -> list[CandidateSentence]:
    """Every template x head-variant x tail-variant, deduplicated by text."""
    registry = registry or TemplateRegistry.bundled()
    head_variants = enumerate_variants(triple.head, tagger)
    tail_variants = enumerate_variants(triple.tail, tagger)
    candidates: list[CandidateSentence] = []
    seen: set[str] = set()
    for template in registry.templates_for(triple.relation):
        for head_v in head_variants:
            for tail_v in tail_variants:
                candidate = render(template, head_v, tail_v)
                if candidate.text in seen:
                    continue
                seen.add(candidate.text)
                candidates.append(candidate)
    return candidates


def generate(
    triple: Triple,
    mode: str,
    registry: TemplateRegistry | None = None,
    tagger: Tagger | None = None,
) -> CandidateSentence | list[CandidateSentence]:
    """Dispatch on generation mode; coherency returns the candidate set."""
    if mode == MODE_CONCAT:
        return generate_concatenation(triple)
    if mode in (MODE_TEMPLATE, MODE_TEMPLATE_GRAMMAR):
        return generate_deterministic(triple, mode, registry, tagger)
    if mode == MODE_COHERENCY:
        return enumerate_candidates(triple, registry, tagger)
    raise ValueError(f"unknown generation mode {mode!r}")
