# -*- coding: utf-8 -*-
import numpy as np
import pytest
import torch

from .config import ModelConfig
from .conftest import SMALL_TRANSITIONS
from .errors import (CapabilityUnsupported, DimensionMismatch, EmptyInput, InvalidArgument,
                     InvalidTemperature, OutOfVocabulary)
from .model_adapter import BackendCapabilities, EmbeddingSequence, build_adapter
from .subject_identification import build_pair
from .toy import ToyAdapter


def test_tokenize_offsets(adapter):
    text = 'where does pika live ?'
    tokens = adapter.tokenize(text)
    assert len(tokens) == 5
    assert [text[s:e] for s, e in tokens.offsets] == text.split()
    assert adapter.detokenize(tokens.ids) == text


def test_tokenize_errors(adapter):
    with pytest.raises(EmptyInput):
        adapter.tokenize('   ')
    with pytest.raises(OutOfVocabulary):
        adapter.tokenize('where does aardvark live ?')


def test_bigram_rows(small_adapter):
    tokens = small_adapter.tokenize('a b c .')
    dist = small_adapter.forward_tokens(tokens)
    assert dist.check()
    expected = SMALL_TRANSITIONS[list(tokens.ids)]
    np.testing.assert_allclose(dist.numpy(), expected, atol=1e-12)


def test_rows_are_distributions(adapter):
    dist = adapter.forward_tokens(adapter.tokenize('where does pika live ? pika lives in'))
    assert dist.check(1e-5)
    assert len(dist) == 8


def test_dimension_checks(small_adapter):
    d = small_adapter.embedding_dim
    with pytest.raises(DimensionMismatch):
        small_adapter.forward_from_embeddings(
            EmbeddingSequence(torch.zeros(3, d + 1, dtype=torch.float64)))
    with pytest.raises(DimensionMismatch):
        EmbeddingSequence(torch.zeros(d, dtype=torch.float64))


@pytest.mark.parametrize('name', ['adapter', 'small_adapter'])
def test_embed_matches_native_forward(name, request):
    adapter = request.getfixturevalue(name)
    text = 'where does pika live ?' if name == 'adapter' else 'a b c .'
    tokens = adapter.tokenize(text)
    emb = adapter.embed(tokens)
    assert emb.length == len(tokens) and emb.dim == adapter.embedding_dim
    with torch.no_grad():
        logits, _ = adapter.model(torch.tensor(tokens.ids, dtype=torch.long))
    native = torch.softmax(logits[0], dim=-1)
    rows = adapter.forward_from_embeddings(emb).rows.to(native.dtype)
    assert rows.shape == native.shape
    total_variation = 0.5 * (rows - native).abs().sum(dim=-1)
    assert total_variation.max().item() < 1e-6


def test_token_logprobs(small_adapter):
    logprobs = small_adapter.token_logprobs(small_adapter.tokenize('a b'))
    np.testing.assert_allclose(logprobs, np.log([0.5, 0.25]), atol=1e-12)
    with pytest.raises(EmptyInput):
        small_adapter.token_logprobs(small_adapter.tokenize('a').window(0, 0))


def test_attention_received_equal_salience(small_adapter):
    # equal salience makes attention the causal mean
    pair = build_pair('a b', 'b .', small_adapter)
    received = small_adapter.attention_received(pair).received
    np.testing.assert_allclose(received, [1. / 3 + 1. / 4] * 2, atol=1e-12)


def test_attention_layer_subset(world):
    full = world.adapter()
    subset = world.adapter(attention_layers=[0])
    pair = build_pair('where does pika live ?', 'pika lives in rocky slopes .', full)
    np.testing.assert_allclose(full.attention_received(pair).received,
                               subset.attention_received(pair).received)


def test_attention_unsupported(small_model):
    class NoAttention(ToyAdapter):
        def capabilities(self):
            return BackendCapabilities(attentions=False)

    adapter = NoAttention(small_model, ['<bos>', 'a', 'b', 'c', '.'])
    with pytest.raises(CapabilityUnsupported):
        adapter.attention_received(build_pair('a', 'b', adapter))


def test_sample_generations(adapter):
    prompt = 'where does pika live ?'
    first = adapter.sample_generations(prompt, 4, 1.0, seed=3)
    second = adapter.sample_generations(prompt, 4, 1.0, seed=3)
    assert first == second
    assert len(first) == 4
    for text in first:
        assert len(text.split()) <= adapter.max_new_tokens
    assert adapter.calls['sample_generations'] == 2


def test_sample_generations_errors(adapter):
    with pytest.raises(InvalidArgument):
        adapter.sample_generations('where does pika live ?', 0, 1.0, 0)
    with pytest.raises(InvalidTemperature):
        adapter.sample_generations('where does pika live ?', 2, 0., 0)
    assert adapter.calls['sample_generations'] == 0


def test_build_adapter():
    adapter = build_adapter(ModelConfig(backend='toy', max_new_tokens=7))
    assert adapter.max_new_tokens == 7
    assert adapter.world is not None
    with pytest.raises(InvalidArgument):
        build_adapter(ModelConfig(backend='nope'))
