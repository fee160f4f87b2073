"""Core domain types and triple-record parsing.

All surface text is processed lowercase: templates and the scoring
models are uncased, so case is stripped once, at the boundary.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Iterator

from .errors import DataError, EmptyPhraseError, UnknownRelationError

#: Input record layouts. ckbc-tsv rows carry a trailing 1/0 label.
CKBC_TSV = "ckbc-tsv"
CANDIDATE_TSV = "candidate-tsv"
FORMATS = (CKBC_TSV, CANDIDATE_TSV)


@lru_cache(maxsize=1)
def relation_registry() -> frozenset[str]:
    """The closed set of relation identifiers (the template registry keys)."""
    raw = resources.files("triplemine.data").joinpath("templates.json").read_text("utf-8")
    return frozenset(json.loads(raw))


def normalize_surface(phrase: str) -> tuple[str, ...]:
    """Lowercase a phrase, map underscores to spaces, and split into words.

    Raises EmptyPhraseError if nothing is left after normalization.
    """
    words = phrase.replace("_", " ").lower().split()
    if not words:
        raise EmptyPhraseError(f"phrase {phrase!r} is empty after normalization")
    return tuple(words)


@dataclass(frozen=True)
class Triple:
    """A head-relation-tail assertion, e.g. (ferret, AtLocation, pet store)."""

    head: tuple[str, ...]
    relation: str
    tail: tuple[str, ...]
    source_id: str | None = None

    def __post_init__(self):
        for side, words in (("head", self.head), ("tail", self.tail)):
            if not words or any(not w for w in words):
                raise EmptyPhraseError(f"{side} of triple must have non-empty tokens, got {words!r}")
        if self.relation not in relation_registry():
            raise UnknownRelationError(self.relation)

    @classmethod
    def from_phrases(cls, head: str, relation: str, tail: str, source_id: str | None = None) -> "Triple":
        return cls(normalize_surface(head), relation, normalize_surface(tail), source_id)

    @property
    def head_text(self) -> str:
        return " ".join(self.head)

    @property
    def tail_text(self) -> str:
        return " ".join(self.tail)

    def __str__(self) -> str:
        return f"({self.head_text}, {self.relation}, {self.tail_text})"


@dataclass(frozen=True)
class LabeledTriple:
    """A triple plus its valid/invalid ground-truth label."""

    triple: Triple
    label: bool


def parse_triple_line(line: str, fmt: str, line_number: int | None = None) -> Triple | LabeledTriple:
    """Parse one tab-separated record.

    ckbc-tsv:      relation<TAB>head<TAB>tail<TAB>label   -> LabeledTriple
    candidate-tsv: relation<TAB>head<TAB>tail             -> Triple
    """
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}, expected one of {FORMATS}")
    fields = line.rstrip("\n").split("\t")
    expected = 4 if fmt == CKBC_TSV else 3
    if len(fields) < expected:
        raise DataError(
            f"expected {expected} tab-separated fields for {fmt}, got {len(fields)}: {line!r}",
            line_number,
        )
    relation, head, tail = fields[0].strip(), fields[1], fields[2]
    if relation not in relation_registry():
        raise UnknownRelationError(relation, line_number)
    try:
        triple = Triple.from_phrases(head, relation, tail)
    except EmptyPhraseError as exc:
        raise EmptyPhraseError(str(exc), line_number) from exc
    if fmt == CANDIDATE_TSV:
        return triple
    label_field = fields[3].strip()
    if label_field not in ("0", "1"):
        raise DataError(f"label must be 0 or 1, got {label_field!r}", line_number)
    return LabeledTriple(triple, label_field == "1")


def format_triple_line(record: Triple | LabeledTriple) -> str:
    """Serialize a record back to its tab-separated form."""
    if isinstance(record, LabeledTriple):
        t = record.triple
        return f"{t.relation}\t{t.head_text}\t{t.tail_text}\t{int(record.label)}"
    return f"{record.relation}\t{record.head_text}\t{record.tail_text}"


def read_triple_file(
    path,
    fmt: str,
    skip_bad_records: bool = False,
    on_skip=None,
) -> Iterator[Triple | LabeledTriple]:
    """Yield parsed records from a TSV file, one per non-blank line.

    With skip_bad_records, malformed lines are reported through
    ``on_skip(error)`` (if given) instead of aborting the run.
    """
    with open(path, encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            if not line.strip() or line.startswith("#"):
                continue
            try:
                yield parse_triple_line(line, fmt, line_number)
            except DataError as exc:
                if not skip_bad_records:
                    raise
                if on_skip is not None:
                    on_skip(exc)
