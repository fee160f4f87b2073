"""Coherency ranking: pick the candidate sentence a causal LM likes best."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .backends import CausalScorer
from .errors import BackendError
from .sentences import CandidateSentence


@dataclass(frozen=True)
class RankedCandidates:
    """Scored candidates in descending log-likelihood order; best is first."""

    best: CandidateSentence
    ranked: tuple[CandidateSentence, ...]


def _sort_key(candidate: CandidateSentence):
    # ties: earlier template, fewer transforms, then lexicographic text
    ordinal = candidate.template_id[1] if candidate.template_id else -1
    return (-candidate.coherency_loglik, ordinal, candidate.transform_count, candidate.text)


def select_best(
    candidates: Iterable[CandidateSentence],
    backend: CausalScorer,
    length_normalize: bool = False,
) -> RankedCandidates:
    """Score every candidate exactly once and take the argmax.

    Raw sequence log-likelihood by default, which penalizes longer
    variants; ``length_normalize`` divides by token count for
    sensitivity studies.
    """
    pool = list(candidates)
    if not pool:
        raise ValueError("candidate set is empty")
    scored = []
    for candidate in pool:
        try:
            loglik = backend.causal_log_likelihood(candidate.words)
        except BackendError as exc:
            raise type(exc)(f"while scoring candidate {candidate.text!r}: {exc}") from exc
        if length_normalize:
            loglik /= len(candidate.words)
        scored.append(candidate.with_loglik(loglik))
    scored.sort(key=_sort_key)
    return RankedCandidates(best=scored[0], ranked=tuple(scored))
