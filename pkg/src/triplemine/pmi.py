"""Greedy masked span likelihoods and the weighted, direction-averaged PMI.

A span's likelihood is approximated greedily: mask every span word,
ask the model for each true word's probability, commit the most
probable one, and repeat until the span is filled. The product of the
committed probabilities estimates the span likelihood. Conditionals
see the other span; marginals keep it masked throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .backends import MASK, MaskedQuery, MaskedScorer, TokenProbability
from .errors import BackendError, SpanNotFoundError
from .sentences import CandidateSentence

TARGET_HEAD = "head"
TARGET_TAIL = "tail"
KEEP_NONE = "none"
KEEP_OTHER_SPAN = "other-span"


@dataclass(frozen=True)
class SpanRoles:
    """A sentence plus the token positions owned by the head and tail."""

    tokens: tuple[str, ...]
    head_positions: tuple[int, ...]
    tail_positions: tuple[int, ...]

    def __post_init__(self):
        for name, positions in (("head", self.head_positions), ("tail", self.tail_positions)):
            if not positions:
                raise ValueError(f"{name} span is empty")
            if any(not 0 <= p < len(self.tokens) for p in positions):
                raise ValueError(f"{name} positions {positions} out of bounds")
        if set(self.head_positions) & set(self.tail_positions):
            raise ValueError("head and tail spans overlap")


@dataclass(frozen=True)
class GreedyStep:
    position: int
    token: str
    logprob: float


@dataclass(frozen=True)
class GreedyTrace:
    """The committed (position, token, logprob) sequence and its log total."""

    steps: tuple[GreedyStep, ...]
    total_loglik: float


def locate_spans(sentence: CandidateSentence) -> SpanRoles:
    """Recover maskable head/tail positions from render-time slot offsets.

    Inserted articles are excluded: they stay visible during masking,
    like any other template word.
    """
    head = _span_positions(sentence, sentence.head_start, sentence.head_variant)
    tail = _span_positions(sentence, sentence.tail_start, sentence.tail_variant)
    return SpanRoles(tokens=sentence.words, head_positions=head, tail_positions=tail)


def _span_positions(sentence: CandidateSentence, start: int, variant) -> tuple[int, ...]:
    if start < 0 or start + len(variant.words) > len(sentence.words):
        raise SpanNotFoundError(f"slot offset {start} invalid in {sentence.text!r}")
    positions = []
    for index in variant.content_indices():
        position = start + index
        if sentence.words[position] != variant.words[index]:
            raise SpanNotFoundError(
                f"expected {variant.words[index]!r} at position {position} of {sentence.text!r}, "
                f"found {sentence.words[position]!r}"
            )
        positions.append(position)
    return tuple(positions)


def greedy_span_loglik(
    roles: SpanRoles,
    target: str,
    keep_masked: str,
    backend: MaskedScorer,
) -> GreedyTrace:
    """Greedy unmasking of one span; see module docstring.

    Each round queries every still-masked target position for its true
    token in a single backend call; the highest-probability position is
    committed (ties to the lowest index).
    """
    if target not in (TARGET_HEAD, TARGET_TAIL):
        raise ValueError(f"target must be {TARGET_HEAD!r} or {TARGET_TAIL!r}")
    if keep_masked not in (KEEP_NONE, KEEP_OTHER_SPAN):
        raise ValueError(f"keep_masked must be {KEEP_NONE!r} or {KEEP_OTHER_SPAN!r}")

    if target == TARGET_TAIL:
        target_positions, other_positions = roles.tail_positions, roles.head_positions
    else:
        target_positions, other_positions = roles.head_positions, roles.tail_positions

    truth = {position: roles.tokens[position] for position in target_positions}
    tokens = list(roles.tokens)
    for position in target_positions:
        tokens[position] = MASK
    if keep_masked == KEEP_OTHER_SPAN:
        for position in other_positions:
            tokens[position] = MASK

    remaining = sorted(truth)
    steps: list[GreedyStep] = []
    for round_index in range(len(remaining)):
        query = MaskedQuery(
            tokens=tuple(tokens),
            targets=tuple((position, truth[position]) for position in remaining),
        )
        try:
            probabilities = backend.masked_probabilities(query)
        except BackendError as exc:
            raise type(exc)(f"round {round_index + 1}: {exc}") from exc
        best = _argmax_lowest_index(probabilities)
        steps.append(GreedyStep(best.position, best.token, best.logprob))
        tokens[best.position] = best.token
        remaining.remove(best.position)

    return GreedyTrace(steps=tuple(steps), total_loglik=math.fsum(s.logprob for s in steps))


def _argmax_lowest_index(probabilities: list[TokenProbability]) -> TokenProbability:
    best = probabilities[0]
    for candidate in probabilities[1:]:
        if candidate.logprob > best.logprob or (
            candidate.logprob == best.logprob and candidate.position < best.position
        ):
            best = candidate
    return best


@dataclass(frozen=True)
class PmiScore:
    """Directional log-likelihood components and their weighted average.

    value = ((lam * cond_tail - marg_tail) + (lam * cond_head - marg_head)) / 2
    """

    cond_tail: float
    marg_tail: float
    cond_head: float
    marg_head: float
    lam: float
    value: float

    def __post_init__(self):
        for name in ("cond_tail", "marg_tail", "cond_head", "marg_head", "value"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def components(self) -> tuple[float, float, float, float]:
        return (self.cond_tail, self.marg_tail, self.cond_head, self.marg_head)

    @classmethod
    def from_components(
        cls, cond_tail: float, marg_tail: float, cond_head: float, marg_head: float, lam: float
    ) -> "PmiScore":
        return cls(
            cond_tail=cond_tail,
            marg_tail=marg_tail,
            cond_head=cond_head,
            marg_head=marg_head,
            lam=lam,
            value=recombine(cond_tail, marg_tail, cond_head, marg_head, lam),
        )


def recombine(cond_tail: float, marg_tail: float, cond_head: float, marg_head: float, lam: float) -> float:
    """The weighted PMI average for one triple; no model calls involved."""
    return ((lam * cond_tail - marg_tail) + (lam * cond_head - marg_head)) / 2.0


def span_components(roles: SpanRoles, backend: MaskedScorer) -> tuple[float, float, float, float]:
    """(cond_tail, marg_tail, cond_head, marg_head) via four greedy traces."""
    cond_tail = greedy_span_loglik(roles, TARGET_TAIL, KEEP_NONE, backend).total_loglik
    marg_tail = greedy_span_loglik(roles, TARGET_TAIL, KEEP_OTHER_SPAN, backend).total_loglik
    cond_head = greedy_span_loglik(roles, TARGET_HEAD, KEEP_NONE, backend).total_loglik
    marg_head = greedy_span_loglik(roles, TARGET_HEAD, KEEP_OTHER_SPAN, backend).total_loglik
    return (cond_tail, marg_tail, cond_head, marg_head)


def score_pmi(roles: SpanRoles, lam: float, backend: MaskedScorer) -> PmiScore:
    """Full weighted PMI for one masked sentence."""
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    cond_tail, marg_tail, cond_head, marg_head = span_components(roles, backend)
    return PmiScore.from_components(cond_tail, marg_tail, cond_head, marg_head, lam)
