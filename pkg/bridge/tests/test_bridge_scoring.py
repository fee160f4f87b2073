import math

import pytest
import torch

from triplemine_bridge.scoring import MASK, BridgeError


def test_masked_single_word_gives_finite_negative_logprob(masked_scorer):
    words = ["you", "are", "likely", "to", "find", "a", MASK, "in", "the", "pet", "store"]
    [logprob] = masked_scorer.word_logprobs(words, [(6, "ferret")])
    assert math.isfinite(logprob)
    assert logprob < 0.0


def test_masked_scoring_is_deterministic(masked_scorer):
    words = ["a", MASK, "can", "play", "a", "musical", "instrument"]
    first = masked_scorer.word_logprobs(words, [(1, "musician")])
    second = masked_scorer.word_logprobs(words, [(1, "musician")])
    assert first == second


def test_masked_multiple_targets_keep_request_order(masked_scorer):
    words = ["a", MASK, "in", "the", MASK, "store"]
    logprobs = masked_scorer.word_logprobs(words, [(4, "pet"), (1, "ferret")])
    again = masked_scorer.word_logprobs(words, [(1, "ferret"), (4, "pet")])
    assert logprobs == [again[1], again[0]]


def test_multi_piece_target_word_scored_greedily(masked_scorer):
    # "petshop" -> ["pet", "##shop"]: two mask pieces, greedy logprob sum
    assert masked_scorer.tokenizer.tokenize("petshop") == ["pet", "##shop"]
    words = ["you", "find", "a", MASK, "in", "the", "store"]
    [logprob] = masked_scorer.word_logprobs(words, [(3, "petshop")])
    assert math.isfinite(logprob) and logprob < 0.0
    [single] = masked_scorer.word_logprobs(words, [(3, "pet")])
    assert logprob != single


def test_other_masked_positions_expand_to_one_mask(masked_scorer):
    # scoring with an unrelated mask present must still work
    words = [MASK, "is", "a", MASK]
    logprobs = masked_scorer.word_logprobs(words, [(0, "dog")])
    assert len(logprobs) == 1 and math.isfinite(logprobs[0])


def test_masked_validation_errors(masked_scorer):
    words = ["a", "dog", "is", "an", MASK]
    with pytest.raises(BridgeError, match="not masked"):
        masked_scorer.word_logprobs(words, [(1, "cat")])
    with pytest.raises(BridgeError, match="out of bounds"):
        masked_scorer.word_logprobs(words, [(9, "cat")])
    with pytest.raises(BridgeError, match="targets"):
        masked_scorer.word_logprobs(words, [])
    with pytest.raises(BridgeError, match="vocabulary"):
        masked_scorer.word_logprobs(words, [(4, "xyzzy")])


def test_masked_length_cap(masked_scorer):
    words = [MASK] + ["dog"] * masked_scorer.max_tokens
    with pytest.raises(BridgeError, match="max_tokens"):
        masked_scorer.word_logprobs(words, [(0, "cat")])


def test_causal_loglik_is_finite_and_negative(causal_scorer):
    loglik = causal_scorer.sentence_loglik(["a", "musician", "can", "play"])
    assert math.isfinite(loglik)
    assert loglik < 0.0


def test_causal_single_token_is_first_token_probability(causal_scorer):
    # independent computation straight from the model
    loglik = causal_scorer.sentence_loglik(["ferret"])
    tokenizer, model = causal_scorer.tokenizer, causal_scorer.model
    ids = [tokenizer.bos_token_id, tokenizer.convert_tokens_to_ids("ferret")]
    with torch.no_grad():
        logits = model(input_ids=torch.tensor([ids])).logits[0]
    expected = torch.log_softmax(logits[0], dim=-1)[ids[1]].item()
    assert loglik == pytest.approx(expected, abs=1e-9)


def test_causal_factorization_sums_stepwise_terms(causal_scorer):
    joint = causal_scorer.sentence_loglik(["pet", "store"])
    tokenizer, model = causal_scorer.tokenizer, causal_scorer.model
    ids = [
        tokenizer.bos_token_id,
        tokenizer.convert_tokens_to_ids("pet"),
        tokenizer.convert_tokens_to_ids("store"),
    ]
    with torch.no_grad():
        logits = model(input_ids=torch.tensor([ids])).logits[0]
    logprobs = torch.log_softmax(logits, dim=-1)
    expected = logprobs[0, ids[1]].item() + logprobs[1, ids[2]].item()
    assert joint == pytest.approx(expected, abs=1e-9)


def test_causal_determinism(causal_scorer):
    words = ["you", "are", "likely", "to", "find", "a", "ferret"]
    assert causal_scorer.sentence_loglik(words) == causal_scorer.sentence_loglik(words)


def test_causal_validation(causal_scorer):
    with pytest.raises(BridgeError):
        causal_scorer.sentence_loglik([])
    with pytest.raises(BridgeError, match="max_tokens"):
        causal_scorer.sentence_loglik(["dog"] * (causal_scorer.max_tokens + 1))
