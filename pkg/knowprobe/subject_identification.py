# -*- coding: utf-8 -*-
"""Pick the subject of a prompt and locate it in (prompt, generation).

The subject is the prompt noun chunk that receives the most attention while
the generation is read; its occurrences are searched over the whole
concatenated token sequence.
"""
import logging
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

import numpy as np

from .errors import EmptyInput, NoSubjectCandidate, SubjectNotLocated
from .model_adapter import AttentionSummary, TokenSequence

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TokenizedPair:
    prompt_tokens: TokenSequence
    gen_tokens: TokenSequence

    def __post_init__(self):
        if len(self.gen_tokens) == 0:
            raise EmptyInput("the generated text has no tokens")

    @property
    def boundary(self):
        return len(self.prompt_tokens)

    @property
    def total(self):
        return len(self.prompt_tokens) + len(self.gen_tokens)

    @property
    def ids(self):
        return self.prompt_tokens.ids + self.gen_tokens.ids


def build_pair(prompt, text, adapter) -> TokenizedPair:
    return TokenizedPair(adapter.tokenize(prompt), adapter.tokenize(text))


@dataclass(frozen=True)
class NounChunk:
    text: str
    char_span: Tuple[int, int]
    token_span: Optional[Tuple[int, int]] = None
    attention_mass: float = 0.


@dataclass(frozen=True)
class Subject:
    tokens: TokenSequence
    occurrences: Tuple[int, ...]
    source_chunk: NounChunk

    @property
    def size(self):
        return len(self.tokens)


def _token_span(offsets, start, end):
    covered = [i for i, (s, e) in enumerate(offsets) if s < end and e > start]
    if not covered:
        return None
    return covered[0], covered[-1] + 1


def extract_noun_chunks(prompt, tagger, tokens=None) -> List[NounChunk]:
    """Noun chunks of the prompt ordered by position, spans non-overlapping.

    When `tokens` (the prompt's TokenSequence) is given, each chunk also gets
    the token span covering its characters.
    """
    if prompt is None or not prompt.strip():
        raise EmptyInput("cannot extract noun chunks from an empty prompt")
    chunks = []
    last_end = -1
    for start, end in sorted(tagger.noun_chunks(prompt)):
        if start < last_end:
            continue
        token_span = None
        if tokens is not None:
            token_span = _token_span(tokens.offsets, start, end)
            if token_span is None:
                continue
        chunks.append(NounChunk(prompt[start:end], (start, end), token_span))
        last_end = end
    if not chunks:
        raise NoSubjectCandidate("no noun chunk found in prompt {!r}".format(prompt))
    return chunks


def select_subject(pair: TokenizedPair, chunks: List[NounChunk],
                   attn: AttentionSummary) -> Subject:
    received = np.asarray(attn.received, dtype=np.float64)
    scored = []
    for chunk in chunks:
        token_span = chunk.token_span
        if token_span is None:
            token_span = _token_span(pair.prompt_tokens.offsets, *chunk.char_span)
            if token_span is None:
                continue
        start, end = token_span
        scored.append(replace(chunk, token_span=token_span,
                              attention_mass=float(received[start:end].sum())))
    if not scored:
        raise NoSubjectCandidate("no candidate chunk to select from")
    # ties go to the chunk starting latest in the prompt
    best = max(scored, key=lambda c: (c.attention_mass, c.char_span[0]))
    start, end = best.token_span
    tokens = pair.prompt_tokens.window(start, end)
    occurrences = find_occurrences(pair, tokens, text=best.text)
    logger.debug("subject %r (attention %.4f) occurs at %s", best.text,
                 best.attention_mass, occurrences)
    return Subject(tokens, occurrences, best)


def _exact_matches(ids, pattern):
    ids = np.asarray(ids)
    pattern = np.asarray(pattern)
    if len(pattern) > len(ids):
        return []
    windows = np.lib.stride_tricks.sliding_window_view(ids, len(pattern))
    return np.flatnonzero((windows == pattern).all(axis=1)).tolist()


def _char_matches(pair, text, size):
    found = []
    for tokens, shift in ((pair.prompt_tokens, 0), (pair.gen_tokens, pair.boundary)):
        source = tokens.text
        start = source.find(text)
        while start >= 0:
            span = _token_span(tokens.offsets, start, start + len(text))
            if span is not None and span[1] - span[0] == size:
                # the window must cover whole tokens, not a piece of a longer word
                first, last = tokens.offsets[span[0]][0], tokens.offsets[span[1] - 1][1]
                if source[first:last].strip() == text:
                    found.append(span[0] + shift)
            start = source.find(text, start + 1)
    return sorted(set(found))


def find_occurrences(pair: TokenizedPair, subject_tokens: TokenSequence,
                     text=None) -> Tuple[int, ...]:
    """Start indices of the subject in (P, G).

    Exact token-subsequence matches first; if there are none and `text` is
    given, character occurrences of `text` are mapped back to token windows of
    the same length.
    """
    if len(subject_tokens) == 0:
        raise EmptyInput("subject has no tokens")
    found = _exact_matches(pair.ids, subject_tokens.ids)
    if not found and text:
        found = _char_matches(pair, text, len(subject_tokens))
    if not found:
        raise SubjectNotLocated("subject {!r} not found in the token sequence".format(
            text if text else subject_tokens.ids))
    return tuple(found)
