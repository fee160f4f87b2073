"""Tiny deterministic models so the protocol can be tested without downloads."""

import pytest
import torch
from tokenizers import Tokenizer, models, pre_tokenizers
from transformers import (
    BertConfig,
    BertForMaskedLM,
    GPT2Config,
    GPT2LMHeadModel,
    PreTrainedTokenizerFast,
)

from triplemine_bridge.scoring import CausalScorer, MaskedWordScorer

SPECIALS = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]", "[BOS]"]
WORDS = (
    "you are likely to find a an the in is of type kind can play"
    " ferret pet store shop musician musical instrument algebra star outer space"
    " dog cat animal house"
).split()
PIECES = ["##shop", "##store"]  # exercise multi-piece targets like "petshop"


def vocab():
    return {token: index for index, token in enumerate(SPECIALS + WORDS + PIECES)}


@pytest.fixture(scope="session")
def masked_scorer():
    v = vocab()
    tok = Tokenizer(models.WordPiece(v, unk_token="[UNK]", max_input_chars_per_word=60))
    tok.pre_tokenizer = pre_tokenizers.WhitespaceSplit()
    tokenizer = PreTrainedTokenizerFast(
        tokenizer_object=tok,
        unk_token="[UNK]",
        pad_token="[PAD]",
        cls_token="[CLS]",
        sep_token="[SEP]",
        mask_token="[MASK]",
    )
    torch.manual_seed(0)
    config = BertConfig(
        vocab_size=len(v),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=64,
    )
    return MaskedWordScorer(BertForMaskedLM(config), tokenizer, max_tokens=48)


@pytest.fixture(scope="session")
def causal_scorer():
    v = vocab()
    tok = Tokenizer(models.WordLevel(v, unk_token="[UNK]"))
    tok.pre_tokenizer = pre_tokenizers.WhitespaceSplit()
    tokenizer = PreTrainedTokenizerFast(
        tokenizer_object=tok,
        unk_token="[UNK]",
        pad_token="[PAD]",
        bos_token="[BOS]",
    )
    torch.manual_seed(1)
    config = GPT2Config(
        vocab_size=len(v),
        n_positions=64,
        n_embd=32,
        n_layer=2,
        n_head=2,
        bos_token_id=tokenizer.bos_token_id,
        eos_token_id=tokenizer.bos_token_id,
    )
    return CausalScorer(GPT2LMHeadModel(config), tokenizer, max_tokens=48)
