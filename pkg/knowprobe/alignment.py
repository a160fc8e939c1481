# -*- coding: utf-8 -*-
"""Alignment Test: is the text consistent with what the model says on its own?

The prompt is regenerated `n_samples` times; each sentence of the text is
scored by how poorly the regenerations support it (1 = no support).
"""
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from nltk.tokenize import wordpunct_tokenize
from nltk.tokenize.punkt import PunktParameters, PunktSentenceTokenizer
from nltk.util import ngrams

from .errors import EmptyInput, InvalidArgument, InvalidTemperature

logger = logging.getLogger(__name__)

PAD = '<s>'

ABBREVIATIONS = frozenset([
    'mr', 'mrs', 'ms', 'dr', 'prof', 'st', 'jr', 'sr', 'vs', 'etc', 'e.g', 'i.e',
    'no', 'fig', 'approx', 'inc', 'ltd', 'co', 'u.s', 'u.k',
])

# a capitalized one of these after an abbreviation still opens a new sentence
SENTENCE_STARTERS = frozenset([
    'a', 'an', 'and', 'at', 'but', 'he', 'her', 'his', 'however', 'i', 'in', 'it',
    'its', 'on', 'she', 'that', 'the', 'their', 'there', 'these', 'they', 'this',
    'those', 'we', 'yes',
])


def _punkt_tokenizer():
    params = PunktParameters()
    params.abbrev_types = set(ABBREVIATIONS)
    params.sent_starters = set(SENTENCE_STARTERS)
    return PunktSentenceTokenizer(params)


_SPLITTER = _punkt_tokenizer()


@dataclass(frozen=True)
class AlignmentConfig:
    n_samples: int = 10
    temperature: float = 1.0
    scorer: str = 'ngram'
    ngram_order: int = 1
    threshold: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if int(self.n_samples) < 1:
            raise InvalidArgument("n_samples must be >= 1, got {}".format(self.n_samples))
        if int(self.ngram_order) < 1:
            raise InvalidArgument("ngram_order must be >= 1, got {}".format(self.ngram_order))
        if not self.temperature > 0:
            raise InvalidTemperature("temperature must be > 0, got {}".format(self.temperature))
        if self.scorer not in SCORERS:
            raise InvalidArgument("unknown scorer '{}', expected one of {}".format(
                self.scorer, sorted(SCORERS)))


@dataclass(frozen=True)
class AlignmentScore:
    per_sentence: Tuple[float, ...]
    overall: float
    seed: int = 0
    samples: Tuple[str, ...] = field(default_factory=tuple)

    def to_dict(self):
        return {'per_sentence': list(self.per_sentence), 'overall': self.overall,
                'seed': self.seed, 'samples': list(self.samples)}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d['per_sentence']), d['overall'], d.get('seed', 0),
                   tuple(d.get('samples', ())))


def sentence_spans(text):
    """Character spans of the sentences of `text`; only whitespace lies between spans."""
    out = []
    for s, e in _SPLITTER.span_tokenize(text):
        segment = text[s:e]
        if not segment.strip():
            continue
        s += len(segment) - len(segment.lstrip())
        e -= len(segment) - len(segment.rstrip())
        out.append((s, e))
    return out


def split_sentences(text):
    if text is None or not text.strip():
        raise EmptyInput("cannot split empty text into sentences")
    return [text[s:e] for s, e in sentence_spans(text)]


def ngram_tokens(text):
    return [w.lower() for w in wordpunct_tokenize(text)]


class NGramModel(object):
    """Add-one smoothed n-gram counts over a list of texts.

    p(w | h) = (c(h, w) + 1) / (c(h) + V), h being the previous `order - 1`
    tokens (padded at text starts); with order 1, c(h) is the token total.
    """

    def __init__(self, texts, order=1, extra_vocab=()):
        self.order = order
        self.counts = Counter()
        self.context_counts = Counter()
        vocab = set(extra_vocab)
        for text in texts:
            tokens = ngram_tokens(text)
            vocab.update(tokens)
            for gram in self._grams(tokens):
                self.counts[gram] += 1
                self.context_counts[gram[:-1]] += 1
        self.vocab_size = len(vocab)

    def _grams(self, tokens):
        padded = [PAD] * (self.order - 1) + list(tokens)
        return ngrams(padded, self.order)

    def logprob(self, gram):
        return math.log(self.counts[gram] + 1.) - math.log(
            self.context_counts[gram[:-1]] + self.vocab_size)

    def mean_logprob(self, tokens):
        grams = list(self._grams(tokens))
        return sum(self.logprob(g) for g in grams) / len(grams)


def consistency_score(sentence, samples, config: AlignmentConfig) -> float:
    """1 - exp(mean log-probability of the sentence under an n-gram model of the samples)."""
    if not samples:
        raise EmptyInput("consistency scoring needs at least one sample")
    tokens = ngram_tokens(sentence)
    if not tokens:
        raise EmptyInput("sentence {!r} has no tokens".format(sentence))
    model = NGramModel(samples, order=config.ngram_order, extra_vocab=tokens)
    score = 1. - math.exp(model.mean_logprob(tokens))
    return min(max(score, 0.), 1.)


SCORERS = {
    'ngram': consistency_score,
}


def alignment_score(pair, adapter, config: AlignmentConfig) -> AlignmentScore:
    """Sample the prompt `n_samples` times and score each sentence of the generation."""
    prompt = pair.prompt_tokens.text
    text = pair.gen_tokens.text
    samples = adapter.sample_generations(prompt, config.n_samples, config.temperature,
                                         config.seed)
    scorer = SCORERS[config.scorer]
    sentences = [s for s in split_sentences(text) if ngram_tokens(s)]
    if not sentences:
        sentences = [text]
    per_sentence = tuple(scorer(s, samples, config) for s in sentences)
    overall = float(np.mean(per_sentence))
    logger.debug("alignment score %.4f over %d sentences", overall, len(per_sentence))
    return AlignmentScore(per_sentence, overall, config.seed, tuple(samples))


def balanced_accuracy(theta, aligned_scores, misaligned_scores):
    """Mean of the aligned-below-theta and misaligned-at-or-above-theta rates."""
    aligned = np.asarray(aligned_scores, dtype=np.float64)
    misaligned = np.asarray(misaligned_scores, dtype=np.float64)
    return 0.5 * (np.mean(aligned < theta) + np.mean(misaligned >= theta))


def calibrate_alignment_threshold(aligned_scores, misaligned_scores) -> float:
    """Exhaustive scan of the observed scores; ties go to the smallest theta."""
    aligned = np.sort(np.asarray(aligned_scores, dtype=np.float64).ravel())
    misaligned = np.sort(np.asarray(misaligned_scores, dtype=np.float64).ravel())
    if aligned.size == 0 or misaligned.size == 0:
        raise EmptyInput("both aligned and misaligned scores are required")
    candidates = np.unique(np.concatenate([aligned, misaligned]))
    below = np.searchsorted(aligned, candidates, side='left')
    at_or_above = misaligned.size - np.searchsorted(misaligned, candidates, side='left')
    # integer numerators keep ties exact
    gains = below.astype(np.int64) * misaligned.size + at_or_above.astype(np.int64) * aligned.size
    theta = float(candidates[int(np.argmax(gains))])
    logger.info("alignment threshold %.4f (balanced accuracy %.4f)", theta,
                balanced_accuracy(theta, aligned, misaligned))
    return theta
