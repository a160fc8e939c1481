# -*- coding: utf-8 -*-
"""Model Knowledge Score: does perturbing the subject move the model?

For a (prompt, generation) pair and its subject S = [t_1..t_K]:

    fam(S) = -(1/K) * sum_i sqrt(i - 1) * log Pr(t_i | t_<i) + 1
    sigma  = sigma_prime * fam(S)

Per seed, one noise block eps ~ N(0, sigma^2) of shape (K, d) is added to
every occurrence window of S, and the score is the mean KL(P_i || P^_i) over
generated positions whose token has a qualifying POS tag. The reported score
is the mean over seeds.
"""
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
import torch
from scipy.special import rel_entr

from .errors import (DimensionMismatch, InvalidArgument, NoScorableTokens,
                     OverlappingOccurrences)
from .model_adapter import EmbeddingSequence
from .tagging import DEFAULT_POS_SET
from .utils import KL_FLOOR, torch_generator

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ProbeConfig:
    sigma_prime: float = 0.1
    seeds: Tuple[int, ...] = tuple(range(10))
    pos_set: Tuple[str, ...] = DEFAULT_POS_SET
    kl_floor: float = KL_FLOOR
    # None means natural log
    log_base: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, 'seeds', tuple(int(s) for s in self.seeds))
        object.__setattr__(self, 'pos_set', tuple(self.pos_set))
        if not self.sigma_prime > 0:
            raise InvalidArgument("sigma_prime must be > 0, got {}".format(self.sigma_prime))
        if len(self.seeds) < 1:
            raise InvalidArgument("at least one seed is required")
        if len(self.pos_set) < 1:
            raise InvalidArgument("pos_set must not be empty")
        if self.log_base is not None and not self.log_base > 1:
            raise InvalidArgument("log_base must be > 1, got {}".format(self.log_base))

    @property
    def n_seeds(self):
        return len(self.seeds)

    @property
    def log_scale(self):
        return 1. if self.log_base is None else 1. / math.log(self.log_base)


@dataclass(frozen=True)
class MKSResult:
    per_seed: Tuple[float, ...]
    score: float
    familiarity: float
    sigma: float
    n_scored_tokens: int
    seeds: Tuple[int, ...] = ()
    subject: str = ''
    occurrences: Tuple[int, ...] = field(default_factory=tuple)

    def to_dict(self):
        out = asdict(self)
        out['per_seed'] = list(self.per_seed)
        out['seeds'] = list(self.seeds)
        out['occurrences'] = list(self.occurrences)
        return out

    @classmethod
    def from_dict(cls, d):
        return cls(per_seed=tuple(d['per_seed']), score=d['score'],
                   familiarity=d['familiarity'], sigma=d['sigma'],
                   n_scored_tokens=d['n_scored_tokens'],
                   seeds=tuple(d.get('seeds', ())), subject=d.get('subject', ''),
                   occurrences=tuple(d.get('occurrences', ())))


def familiarity(subject_tokens, adapter, log_scale=1.) -> float:
    k = len(subject_tokens)
    if k < 1:
        raise InvalidArgument("familiarity needs a non-empty subject")
    logprobs = adapter.token_logprobs(subject_tokens) * log_scale
    weights = np.sqrt(np.arange(k, dtype=np.float64))
    return float(-(weights * logprobs).sum() / k + 1.)


def _check_windows(occurrences, k, length):
    starts = sorted(occurrences)
    for i in starts:
        if i < 0 or i + k > length:
            raise InvalidArgument(
                "occurrence window [{}, {}) is out of bounds for length {}".format(i, i + k, length))
    for a, b in zip(starts, starts[1:]):
        if b < a + k:
            raise OverlappingOccurrences(
                "occurrence windows starting at {} and {} overlap (K={})".format(a, b, k))
    return starts


def perturb(emb: EmbeddingSequence, occurrences, k, sigma, seed) -> EmbeddingSequence:
    """Add one shared noise block to every occurrence window; other rows are untouched."""
    if sigma < 0:
        raise InvalidArgument("sigma must be >= 0, got {}".format(sigma))
    starts = _check_windows(occurrences, k, emb.length)
    vectors = emb.vectors
    generator = torch_generator(seed)
    noise = torch.randn(k, emb.dim, generator=generator, dtype=torch.float64)
    noise = (noise * sigma).to(dtype=vectors.dtype, device=vectors.device)
    out = vectors.clone()
    for i in starts:
        out[i:i + k] += noise
    return EmbeddingSequence(out)


def pos_mask(pair, tagger, pos_set=DEFAULT_POS_SET) -> np.ndarray:
    """Generated token i is marked iff its span overlaps a word tagged in `pos_set`."""
    gen = pair.gen_tokens
    pos_set = set(pos_set)
    words = [(w.start, w.end) for w in tagger.tag(gen.text) if w.pos in pos_set]
    mask = np.zeros(len(gen), dtype=bool)
    for i, (start, end) in enumerate(gen.offsets):
        mask[i] = any(s < end and e > start for s, e in words)
    return mask


def kl_divergence(p, q, floor=KL_FLOOR) -> float:
    """KL(p || q) in nats, with q floored at `floor` and 0 * log 0 = 0."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise DimensionMismatch("cannot compare distributions of shapes {} and {}".format(
            p.shape, q.shape))
    return max(float(rel_entr(p, np.maximum(q, floor)).sum()), 0.)


def kl_rows(p, q, floor=KL_FLOOR):
    """Row-wise KL(p || q) over the last dimension of two tensors."""
    q = q.clamp(min=floor)
    return (torch.special.xlogy(p, p) - torch.special.xlogy(p, q)).sum(dim=-1).clamp(min=0.)


def model_knowledge_score(pair, subject, adapter, config: ProbeConfig, tagger=None,
                          mask=None, sigma: Optional[float] = None) -> MKSResult:
    """Mean over seeds of the POS-masked mean KL between clean and perturbed runs.

    `sigma` overrides sigma_prime * familiarity when given.
    """
    if mask is None:
        mask = pos_mask(pair, tagger, config.pos_set)
    mask = np.asarray(mask, dtype=bool)
    assert len(mask) == len(pair.gen_tokens)
    n_scored = int(mask.sum())
    if n_scored == 0:
        raise NoScorableTokens("no generated token carries a tag in {}".format(
            sorted(config.pos_set)))

    fam = familiarity(subject.tokens, adapter, config.log_scale)
    if sigma is None:
        sigma = config.sigma_prime * fam
    k = subject.size
    m, total = pair.boundary, pair.total

    emb = adapter.embed(pair)
    # row 0 is the clean run, computed once alongside the perturbed ones
    batch = torch.stack([emb.vectors] + [
        perturb(emb, subject.occurrences, k, sigma, seed).vectors
        for seed in config.seeds])
    probs = adapter.forward_batch(batch)
    clean, perturbed = probs[0], probs[1:]

    weights = torch.as_tensor(mask, dtype=torch.float64)
    kl = kl_rows(clean[m:total].double(), perturbed[:, m:total].double(),
                 config.kl_floor) * config.log_scale
    per_seed = ((kl * weights).sum(dim=-1) / weights.sum()).tolist()
    score = float(np.mean(per_seed))
    logger.debug("MKS %.6f (fam %.4f, sigma %.4f, %d tokens)", score, fam, sigma, n_scored)
    return MKSResult(tuple(per_seed), score, fam, float(sigma), n_scored,
                     seeds=config.seeds, subject=subject.source_chunk.text,
                     occurrences=tuple(subject.occurrences))
