# -*- coding: utf-8 -*-
"""Uniform boundary over causal language models.

An adapter exposes tokenization with character offsets, the token embedding
map, forward passes from raw embedding vectors, aggregated attention, token
log-probabilities and seeded sampling. Two backends are registered: the
deterministic toy model (`knowprobe.toy`) and HuggingFace causal LMs
(`knowprobe.hf_backend`).

Adapters are not thread-safe; hold one instance per worker.
"""
import logging
from abc import ABC, abstractmethod
from collections import Counter
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import torch

from .errors import (CapabilityUnsupported, DimensionMismatch, EmptyInput,
                     InvalidArgument, InvalidTemperature)
from .utils import ROW_SUM_TOL

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TokenSequence:
    ids: Tuple[int, ...]
    offsets: Tuple[Tuple[int, int], ...]
    text: str = ''

    def __post_init__(self):
        assert len(self.ids) == len(self.offsets)

    def __len__(self):
        return len(self.ids)

    def window(self, start, end):
        return TokenSequence(self.ids[start:end], self.offsets[start:end],
                             self.text)


class EmbeddingSequence(object):
    def __init__(self, vectors):
        if vectors.dim() != 2:
            raise DimensionMismatch(
                "embeddings must be (length, dim), got {}".format(tuple(vectors.shape)))
        self.vectors = vectors

    def __len__(self):
        return self.vectors.shape[0]

    @property
    def length(self):
        return self.vectors.shape[0]

    @property
    def dim(self):
        return self.vectors.shape[1]

    def clone(self):
        return EmbeddingSequence(self.vectors.clone())


class DistributionMatrix(object):
    """One next-token distribution per input position."""

    def __init__(self, rows):
        self.rows = rows

    def __len__(self):
        return self.rows.shape[0]

    def __getitem__(self, i):
        return self.rows[i]

    def numpy(self):
        return self.rows.detach().cpu().numpy()

    def check(self, tol=ROW_SUM_TOL):
        sums = self.rows.sum(dim=-1)
        return bool((self.rows >= 0).all()) and bool(
            ((sums - 1.).abs() <= tol).all())


@dataclass(frozen=True)
class AttentionSummary:
    received: np.ndarray

    def __len__(self):
        return len(self.received)


@dataclass(frozen=True)
class BackendCapabilities:
    attentions: bool = True
    sampling: bool = True


class LanguageModelAdapter(ABC):
    name = None

    def __init__(self, attention_layers: Optional[Sequence[int]] = None):
        self.attention_layers = None if attention_layers is None else list(attention_layers)
        self.calls = Counter()

    def capabilities(self) -> BackendCapabilities:
        return BackendCapabilities()

    # backend hooks

    @property
    @abstractmethod
    def embedding_dim(self) -> int:
        pass

    @property
    @abstractmethod
    def bos_id(self) -> int:
        pass

    @abstractmethod
    def _tokenize(self, text) -> TokenSequence:
        pass

    @abstractmethod
    def detokenize(self, ids) -> str:
        pass

    @abstractmethod
    def _embed_ids(self, ids) -> torch.Tensor:
        """(L,) long tensor -> (L, d) embeddings."""

    @abstractmethod
    def _probabilities(self, embeddings) -> torch.Tensor:
        """(B, L, d) embeddings -> (B, L, |T|) next-token probabilities."""

    def _attention_maps(self, ids) -> torch.Tensor:
        """(L,) ids -> (layers, heads, L, L) attention weights."""
        raise CapabilityUnsupported(
            "backend '{}' does not expose attention weights".format(self.name))

    @abstractmethod
    def _sample(self, prompt_ids, n, temperature, seed) -> List[List[int]]:
        pass

    # public operations

    def tokenize(self, text) -> TokenSequence:
        if text is None or not text.strip():
            raise EmptyInput("cannot tokenize empty text")
        self.calls['tokenize'] += 1
        return self._tokenize(text)

    def embed(self, tokens: TokenSequence) -> EmbeddingSequence:
        ids = torch.as_tensor(tokens.ids, dtype=torch.long)
        return EmbeddingSequence(self._embed_ids(ids))

    def forward_batch(self, embeddings) -> torch.Tensor:
        if embeddings.shape[-1] != self.embedding_dim:
            raise DimensionMismatch(
                "embedding dimension {} does not match backend dimension {}".format(
                    embeddings.shape[-1], self.embedding_dim))
        self.calls['forward'] += embeddings.shape[0]
        with torch.no_grad():
            return self._probabilities(embeddings)

    def forward_from_embeddings(self, emb: EmbeddingSequence) -> DistributionMatrix:
        return DistributionMatrix(self.forward_batch(emb.vectors.unsqueeze(0))[0])

    def forward_tokens(self, tokens: TokenSequence) -> DistributionMatrix:
        return self.forward_from_embeddings(self.embed(tokens))

    def attention_received(self, pair) -> AttentionSummary:
        if not self.capabilities().attentions:
            raise CapabilityUnsupported(
                "backend '{}' does not expose attention weights".format(self.name))
        m, total = pair.boundary, pair.total
        if total <= m:
            raise InvalidArgument("attention needs at least one generated token")
        self.calls['attention'] += 1
        ids = torch.as_tensor(pair.ids, dtype=torch.long)
        with torch.no_grad():
            attn = self._attention_maps(ids)
        if self.attention_layers is not None:
            attn = attn[self.attention_layers]
        # mean over layers and heads, then sum over generated query rows
        attn = attn.mean(dim=(0, 1))
        received = attn[m:total, :m].sum(dim=0)
        return AttentionSummary(received.double().cpu().numpy())

    def token_logprobs(self, tokens: TokenSequence) -> np.ndarray:
        """Entry i is log Pr(t_i | t_1..t_{i-1}); the first token is conditioned on BOS."""
        if len(tokens) == 0:
            raise EmptyInput("token_logprobs needs at least one token")
        ids = torch.as_tensor((self.bos_id,) + tuple(tokens.ids), dtype=torch.long)
        probs = self.forward_batch(self._embed_ids(ids).unsqueeze(0))[0]
        probs = probs[:-1].gather(1, ids[1:].unsqueeze(1)).squeeze(1)
        return torch.log(probs).double().cpu().numpy()

    def sample_generations(self, prompt, n, temperature, seed) -> List[str]:
        if n is None or int(n) < 1:
            raise InvalidArgument("number of samples must be >= 1, got {}".format(n))
        if temperature is None or not temperature > 0:
            raise InvalidTemperature(
                "temperature must be > 0, got {}".format(temperature))
        if not self.capabilities().sampling:
            raise CapabilityUnsupported(
                "backend '{}' cannot sample".format(self.name))
        self.calls['sample_generations'] += 1
        prompt_ids = self.tokenize(prompt).ids
        generations = self._sample(prompt_ids, int(n), float(temperature), int(seed))
        return [self.detokenize(ids) for ids in generations]


def _toy_backend(config):
    from .toy import ToyWorld
    return ToyWorld(seed=config.world_seed).adapter(
        attention_layers=config.attention_layers,
        max_new_tokens=config.max_new_tokens)


def _hf_backend(config):
    from .hf_backend import HuggingFaceAdapter
    return HuggingFaceAdapter(config.name, device=config.device,
                              attention_layers=config.attention_layers,
                              max_new_tokens=config.max_new_tokens)


BACKENDS = {
    'toy': _toy_backend,
    'hf': _hf_backend,
}


def build_adapter(model_config) -> LanguageModelAdapter:
    try:
        factory = BACKENDS[model_config.backend]
    except KeyError:
        raise InvalidArgument("unknown model backend '{}', expected one of {}".format(
            model_config.backend, sorted(BACKENDS)))
    adapter = factory(model_config)
    logger.info("loaded %s backend (embedding dim %d)", model_config.backend,
                adapter.embedding_dim)
    return adapter
