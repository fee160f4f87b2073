"""Shared test backends and small utilities."""

from __future__ import annotations

import math
import threading

from triplemine.backends import MASK, TokenProbability
from triplemine.core import Triple


def make_triple(head, relation, tail):
    return Triple.from_phrases(head, relation, tail)


class CountingBackend:
    """Delegating wrapper that counts masked/causal calls."""

    def __init__(self, inner):
        self.inner = inner
        self.masked_calls = 0
        self.causal_calls = 0
        self._lock = threading.Lock()

    @property
    def model_tag(self):
        return self.inner.model_tag

    def masked_probabilities(self, query):
        with self._lock:
            self.masked_calls += 1
        return self.inner.masked_probabilities(query)

    def causal_log_likelihood(self, sentence):
        with self._lock:
            self.causal_calls += 1
        return self.inner.causal_log_likelihood(sentence)


class RecordingBackend:
    """Delegating masked scorer that keeps every query it saw."""

    def __init__(self, inner):
        self.inner = inner
        self.queries = []

    @property
    def model_tag(self):
        return self.inner.model_tag

    def masked_probabilities(self, query):
        self.queries.append(query)
        return self.inner.masked_probabilities(query)


class ValidityBoostBackend:
    """Masked scorer that rewards completions of known-valid sentences.

    A target's probability is ``boost`` when substituting every target
    token yields exactly one of the valid sentences with no mask left,
    and ``base`` otherwise. Conditional estimates (other span visible)
    therefore get boosted for valid triples while marginal estimates
    (other span masked throughout) never do, which separates valid from
    corrupted triples by PMI.
    """

    model_tag = "synthetic-boost"

    def __init__(self, valid_texts, base=0.01, boost=0.9):
        self.valid_texts = set(valid_texts)
        self.base = base
        self.boost = boost

    def masked_probabilities(self, query):
        filled = list(query.tokens)
        for position, token in query.targets:
            filled[position] = token
        complete = MASK not in filled and " ".join(filled) in self.valid_texts
        logprob = math.log(self.boost if complete else self.base)
        return [TokenProbability(position, token, logprob) for position, token in query.targets]
