# -*- coding: utf-8 -*-
import numpy as np
import pytest
from nltk.tokenize import WordPunctTokenizer

from .errors import EmptyInput, NoSubjectCandidate, SubjectNotLocated
from .model_adapter import AttentionSummary, TokenSequence
from .subject_identification import (TokenizedPair, build_pair, extract_noun_chunks,
                                     find_occurrences, select_subject)
from .tagging import LexiconTagger


def _seq(ids):
    return TokenSequence(tuple(ids), tuple((i, i + 1) for i in range(len(ids))))


def _brute_force(ids, pattern):
    k = len(pattern)
    return tuple(i for i in range(len(ids) - k + 1) if tuple(ids[i:i + k]) == tuple(pattern))


def test_find_occurrences_exact():
    pair = TokenizedPair(_seq([1, 7, 9]), _seq([3, 7, 9]))
    assert find_occurrences(pair, _seq([7, 9])) == (1, 4)
    pair = TokenizedPair(_seq([7]), _seq([7, 7]))
    assert find_occurrences(pair, _seq([7, 7])) == (0, 1)
    with pytest.raises(SubjectNotLocated):
        find_occurrences(pair, _seq([8]))


def test_find_occurrences_matches_sliding_window():
    rng = np.random.default_rng(0)
    for _ in range(200):
        prompt = rng.integers(0, 3, size=rng.integers(1, 6)).tolist()
        gen = rng.integers(0, 3, size=rng.integers(1, 6)).tolist()
        pattern = rng.integers(0, 3, size=rng.integers(1, 3)).tolist()
        expected = _brute_force(prompt + gen, pattern)
        pair = TokenizedPair(_seq(prompt), _seq(gen))
        if expected:
            assert find_occurrences(pair, _seq(pattern)) == expected
        else:
            with pytest.raises(SubjectNotLocated):
                find_occurrences(pair, _seq(pattern))


def test_find_occurrences_char_fallback():
    prompt = TokenSequence((5, 6), ((0, 3), (4, 7)), 'foo bar')
    gen = TokenSequence((8,), ((0, 3),), 'bar')
    pair = TokenizedPair(prompt, gen)
    subject = TokenSequence((99,), ((4, 7),), 'foo bar')
    assert find_occurrences(pair, subject, text='bar') == (1, 2)


def test_empty_generation_is_rejected():
    with pytest.raises(EmptyInput):
        TokenizedPair(_seq([1]), _seq([]))


def test_extract_noun_chunks(adapter, tagger):
    prompt = 'where does pika live ?'
    chunks = extract_noun_chunks(prompt, tagger, adapter.tokenize(prompt))
    assert [c.text for c in chunks] == ['pika']
    assert chunks[0].token_span == (2, 3)
    with pytest.raises(EmptyInput):
        extract_noun_chunks('  ', tagger)
    with pytest.raises(NoSubjectCandidate):
        extract_noun_chunks('where does live ?', tagger)


def _two_chunk_pair(adapter, tagger):
    prompt = 'pika lives in rocky slopes .'
    pair = build_pair(prompt, 'where does pika live ?', adapter)
    chunks = extract_noun_chunks(prompt, tagger, pair.prompt_tokens)
    return pair, chunks


def test_select_subject_by_attention(adapter, tagger):
    pair, chunks = _two_chunk_pair(adapter, tagger)
    received = np.array([0.1, 0., 0., 0.2, 0.3, 0.])
    subject = select_subject(pair, chunks, AttentionSummary(received))
    assert subject.source_chunk.text == 'rocky slopes'
    assert subject.source_chunk.attention_mass == pytest.approx(0.5, abs=1e-9)
    assert subject.occurrences == (3,)
    assert subject.size == 2
    rescaled = select_subject(pair, chunks, AttentionSummary(received * 7.))
    assert rescaled.source_chunk.text == 'rocky slopes'


def test_select_subject_tie_goes_to_latest(adapter, tagger):
    pair, chunks = _two_chunk_pair(adapter, tagger)
    received = np.array([0.5, 0., 0., 0.25, 0.25, 0.])
    subject = select_subject(pair, chunks, AttentionSummary(received))
    assert subject.source_chunk.text == 'rocky slopes'


def test_subject_repeated_in_generation(world, adapter, tagger):
    prompt = world.prompt('pika')
    pair = build_pair(prompt, world.text('pika', 'rocky', 'slopes'), adapter)
    chunks = extract_noun_chunks(prompt, tagger, pair.prompt_tokens)
    subject = select_subject(pair, chunks, adapter.attention_received(pair))
    assert subject.source_chunk.text == 'pika'
    assert subject.occurrences == (2, 5)


def test_char_fallback_respects_word_boundaries():
    prompt = TokenSequence((1,), ((0, 4),), 'pika')
    gen = TokenSequence((9, 3), ((0, 5), (6, 9)), 'pikas eat')
    pair = TokenizedPair(prompt, gen)
    subject = TokenSequence((99,), ((0, 4),), 'pika')
    assert find_occurrences(pair, subject, text='pika') == (0,)
    with pytest.raises(SubjectNotLocated):
        find_occurrences(TokenizedPair(gen, gen), subject, text='pika')


def test_select_subject_without_token_spans(world, adapter, tagger):
    prompt = world.prompt('pika')
    pair = build_pair(prompt, world.text('pika', 'rocky', 'slopes'), adapter)
    chunks = extract_noun_chunks(prompt, tagger)
    assert all(c.token_span is None for c in chunks)
    subject = select_subject(pair, chunks, adapter.attention_received(pair))
    assert subject.source_chunk.text == 'pika'
    assert subject.source_chunk.token_span == (2, 3)
    assert subject.occurrences == (2, 5)
    with pytest.raises(NoSubjectCandidate):
        select_subject(pair, [], adapter.attention_received(pair))


def _wordpunct_sequence(text, vocab):
    spans = list(WordPunctTokenizer().span_tokenize(text))
    ids = tuple(vocab.setdefault(text[s:e], len(vocab)) for s, e in spans)
    return TokenSequence(ids, tuple(spans), text)


def test_habitat_question_picks_most_attended_chunk():
    tagger = LexiconTagger({'What': 'PRON', 'is': 'AUX', 'the': 'DET', 'habitat': 'NOUN',
                            'of': 'ADP', 'Pika': 'PROPN', 'lives': 'VERB', 'in': 'ADP',
                            'rocky': 'ADJ', 'areas': 'NOUN'})
    prompt = 'What is the habitat of Pika?'
    vocab = {}
    pair = TokenizedPair(_wordpunct_sequence(prompt, vocab),
                         _wordpunct_sequence('Pika lives in rocky areas.', vocab))
    chunks = extract_noun_chunks(prompt, tagger)
    assert [c.text for c in chunks] == ['the habitat', 'Pika']
    # What is the habitat of Pika ?
    received = np.array([0., 0., 0.1, 0.3, 0., 1.7, 0.])
    subject = select_subject(pair, chunks, AttentionSummary(received))
    assert subject.source_chunk.text == 'Pika'
    assert subject.source_chunk.attention_mass == pytest.approx(1.7)
    assert subject.occurrences == (5, 7)
    masses = {c.text: float(received[slice(*c.token_span)].sum())
              for c in extract_noun_chunks(prompt, tagger, pair.prompt_tokens)}
    assert masses == pytest.approx({'the habitat': 0.4, 'Pika': 1.7})


def test_noun_chunk_spans_never_overlap():
    lexicon = {'the': 'DET', 'a': 'DET', 'two': 'NUM', 'small': 'ADJ', 'grey': 'ADJ',
               'pika': 'PROPN', 'goats': 'NOUN', 'rocks': 'NOUN', 'eat': 'VERB',
               'of': 'ADP', 'and': 'CCONJ', '.': 'PUNCT'}
    tagger = LexiconTagger(lexicon)
    words = sorted(lexicon)
    rng = np.random.default_rng(3)
    for _ in range(300):
        text = ' '.join(words[i] for i in rng.integers(len(words), size=rng.integers(1, 12)))
        try:
            chunks = extract_noun_chunks(text, tagger)
        except NoSubjectCandidate:
            assert tagger.noun_chunks(text) == []
            continue
        for chunk in chunks:
            assert text[slice(*chunk.char_span)] == chunk.text
        for left, right in zip(chunks, chunks[1:]):
            assert left.char_span[1] <= right.char_span[0]
