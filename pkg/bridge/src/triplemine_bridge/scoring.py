"""Model wrappers: word-level masked probabilities and causal log-likelihoods.

The wire protocol is word-level; subword expansion happens here. A
masked word whose true token is unknown (a non-target mask) expands to
a single mask piece; a target word expands to as many mask pieces as
its own tokenization, and multi-piece targets are scored greedily
within the word, highest-probability piece first.
"""

from __future__ import annotations

import threading

import torch

MASK = "[MASK]"


class BridgeError(Exception):
    """Maps to HTTP 400: the request cannot be scored."""


class MaskedWordScorer:
    def __init__(self, model, tokenizer, max_tokens: int = 128):
        self.model = model.eval()
        self.tokenizer = tokenizer
        self.max_tokens = max_tokens
        self._lock = threading.Lock()
        self._mask_id = tokenizer.mask_token_id
        if self._mask_id is None:
            raise ValueError("masked model tokenizer must define a mask token")

    @classmethod
    def from_pretrained(cls, name: str, max_tokens: int = 128) -> "MaskedWordScorer":
        from transformers import AutoModelForMaskedLM, AutoTokenizer

        return cls(AutoModelForMaskedLM.from_pretrained(name), AutoTokenizer.from_pretrained(name), max_tokens)

    def word_logprobs(self, words: list[str], targets: list[tuple[int, str]]) -> list[float]:
        """Natural-log probability of each target word at its masked slot."""
        if not words:
            raise BridgeError("tokens must be non-empty")
        if not targets:
            raise BridgeError("targets must be non-empty")
        for position, token in targets:
            if not isinstance(position, int) or not 0 <= position < len(words):
                raise BridgeError(f"target position {position} out of bounds")
            if words[position] != MASK:
                raise BridgeError(f"target position {position} is not masked")
            if not token:
                raise BridgeError("target token must be non-empty")
        return [self._word_logprob(words, position, token) for position, token in targets]

    def _pieces(self, word: str) -> list[str]:
        pieces = self.tokenizer.tokenize(word)
        if not pieces:
            raise BridgeError(f"token {word!r} tokenizes to nothing")
        return pieces

    def _word_logprob(self, words: list[str], position: int, token: str) -> float:
        target_pieces = self._pieces(token)
        unk = self.tokenizer.unk_token
        if unk is not None and unk in target_pieces:
            raise BridgeError(f"target token {token!r} is outside the model vocabulary")

        pieces: list[str] = []
        slots: list[int] = []  # piece indices of the target word's masks
        if self.tokenizer.cls_token:
            pieces.append(self.tokenizer.cls_token)
        for index, word in enumerate(words):
            if index == position:
                slots = list(range(len(pieces), len(pieces) + len(target_pieces)))
                pieces.extend([MASK] * len(target_pieces))
            elif word == MASK:
                pieces.append(MASK)  # unknown true word: one mask piece
            else:
                pieces.extend(self._pieces(word))
        if self.tokenizer.sep_token:
            pieces.append(self.tokenizer.sep_token)
        if len(pieces) > self.max_tokens:
            raise BridgeError(f"expanded length {len(pieces)} exceeds max_tokens {self.max_tokens}")

        ids = self.tokenizer.convert_tokens_to_ids(pieces)
        piece_ids = self.tokenizer.convert_tokens_to_ids(target_pieces)

        # greedy within the word: commit the most probable piece, recompute
        remaining = {slot: piece_ids[k] for k, slot in enumerate(slots)}
        total = 0.0
        with self._lock, torch.no_grad():
            while remaining:
                logits = self.model(input_ids=torch.tensor([ids])).logits[0]
                best_slot, best_logprob = None, None
                for slot, piece_id in remaining.items():
                    logprob = torch.log_softmax(logits[slot], dim=-1)[piece_id].item()
                    if best_logprob is None or logprob > best_logprob:
                        best_slot, best_logprob = slot, logprob
                total += best_logprob
                ids[best_slot] = remaining.pop(best_slot)
        return total


class CausalScorer:
    def __init__(self, model, tokenizer, max_tokens: int = 128):
        self.model = model.eval()
        self.tokenizer = tokenizer
        self.max_tokens = max_tokens
        self._lock = threading.Lock()

    @classmethod
    def from_pretrained(cls, name: str, max_tokens: int = 128) -> "CausalScorer":
        from transformers import AutoModelForCausalLM, AutoTokenizer

        return cls(AutoModelForCausalLM.from_pretrained(name), AutoTokenizer.from_pretrained(name), max_tokens)

    def sentence_loglik(self, words: list[str]) -> float:
        """Total natural-log likelihood under the autoregressive factorization.

        A BOS token is prepended when the tokenizer has one, so the first
        real token is scored too; without BOS the sum starts at the
        second token.
        """
        if not words:
            raise BridgeError("tokens must be non-empty")
        ids = self.tokenizer.encode(" ".join(words), add_special_tokens=False)
        if not ids:
            raise BridgeError("sentence tokenizes to nothing")
        scored_from = 1
        if self.tokenizer.bos_token_id is not None:
            ids = [self.tokenizer.bos_token_id] + ids
        if len(ids) > self.max_tokens:
            raise BridgeError(f"length {len(ids)} exceeds max_tokens {self.max_tokens}")

        with self._lock, torch.no_grad():
            logits = self.model(input_ids=torch.tensor([ids])).logits[0]
            logprobs = torch.log_softmax(logits, dim=-1)
            total = 0.0
            for index in range(scored_from, len(ids)):
                total += logprobs[index - 1, ids[index]].item()
        return total
