# -*- coding: utf-8 -*-
import math

import numpy as np
import pytest

from .alignment import (AlignmentConfig, AlignmentScore, alignment_score, balanced_accuracy,
                        calibrate_alignment_threshold, consistency_score, sentence_spans,
                        split_sentences)
from .errors import EmptyInput, InvalidArgument, InvalidTemperature
from .subject_identification import build_pair

UNIGRAM = AlignmentConfig()


def test_split_sentences():
    assert split_sentences('Pikas eat grass. They store hay.') == [
        'Pikas eat grass.', 'They store hay.']
    assert split_sentences('She said "Go home." Then she left.') == [
        'She said "Go home."', 'Then she left.']
    assert split_sentences('Pikas live in the U.S. They like rocks.') == [
        'Pikas live in the U.S.', 'They like rocks.']
    assert split_sentences('Pikas live in the U.S. Rockies.') == [
        'Pikas live in the U.S. Rockies.']
    assert split_sentences('pika lives in rocky slopes . pika eats grass .') == [
        'pika lives in rocky slopes .', 'pika eats grass .']
    assert split_sentences('no terminator') == ['no terminator']
    assert split_sentences('Dr. Lee studies pikas. They live high up!') == [
        'Dr. Lee studies pikas.', 'They live high up!']
    assert split_sentences('Is it 3.5 m tall? Yes.') == ['Is it 3.5 m tall?', 'Yes.']
    with pytest.raises(EmptyInput):
        split_sentences(' ')


def test_sentence_spans_reconstruct_text():
    rng = np.random.default_rng(0)
    pieces = ['pika', 'lives', 'e.g.', 'rocky', '.', '!', '?', ' ', '  ', '\n', 'Mr.', '3.5']
    for _ in range(200):
        text = ''.join(pieces[i] if pieces[i].isspace() else pieces[i] + ' '
                       for i in rng.integers(len(pieces), size=rng.integers(1, 15)))
        spans = sentence_spans(text)
        rebuilt = list(text)
        for s, e in spans:
            assert text[s:e] == text[s:e].strip() and text[s:e]
            for i in range(s, e):
                rebuilt[i] = ' '
        assert ''.join(rebuilt).strip() == ''
        starts = [s for s, _ in spans]
        assert starts == sorted(starts)


def test_unsupported_tokens():
    samples = ['x y z', 'x y']
    # L = 5 sample tokens, V = 5 distinct tokens
    assert consistency_score('p q', samples, UNIGRAM) == pytest.approx(1. - 1. / 10, abs=1e-12)


def test_supported_sentence_scores_lower():
    samples = ['pika lives in rocky slopes .', 'pika lives in rocky slopes .']
    supported = consistency_score('pika lives in rocky slopes .', samples, UNIGRAM)
    unsupported = consistency_score('ibex lives on sandy dunes !', samples, UNIGRAM)
    assert supported < unsupported


def test_empty_samples():
    with pytest.raises(EmptyInput):
        consistency_score('pika lives', [], UNIGRAM)


def test_permutation_invariance():
    samples = ['a b c .', 'b c d .', 'a a d .']
    forward = consistency_score('a c d', samples, UNIGRAM)
    backward = consistency_score('a c d', samples[::-1], UNIGRAM)
    assert forward == pytest.approx(backward, abs=1e-15)


def test_verbatim_sample_never_hurts():
    sentence = 'pika lives in rocky slopes .'
    cases = [
        ['ibex lives in sandy dunes .'],
        ['pika pika pika .', 'rocky rocky'],
        ['pika lives in rocky slopes .', 'lynx lives in snowy cliffs .'],
        ['slopes'],
    ]
    for samples in cases:
        before = consistency_score(sentence, samples, UNIGRAM)
        after = consistency_score(sentence, samples + [sentence], UNIGRAM)
        assert after <= before


def test_bigram_order():
    config = AlignmentConfig(ngram_order=2)
    samples = ['a b c']
    assert consistency_score('a b c', samples, config) == pytest.approx(0.5, abs=1e-12)
    assert consistency_score('c b a', samples, config) > 0.5


def test_alignment_config_validation():
    with pytest.raises(InvalidArgument):
        AlignmentConfig(n_samples=0)
    with pytest.raises(InvalidArgument):
        AlignmentConfig(ngram_order=0)
    with pytest.raises(InvalidArgument):
        AlignmentConfig(scorer='nli')
    with pytest.raises(InvalidTemperature):
        AlignmentConfig(temperature=0.)


def test_alignment_score_on_toy(world, adapter):
    subject = 'pika'
    prompt = world.prompt(subject)
    first, second = world.facts[subject]
    aligned = alignment_score(build_pair(prompt, world.text(subject, first, second), adapter),
                              adapter, UNIGRAM)
    # 10 samples of 6 tokens, all equal to the text
    assert aligned.overall == pytest.approx(1. - 11. / 66, abs=1e-12)
    other = world.facts['ibex']
    misaligned = alignment_score(build_pair(prompt, world.text(subject, *other), adapter),
                                 adapter, UNIGRAM)
    assert misaligned.overall == pytest.approx(1. - 11. ** (2. / 3) / 68, abs=1e-12)
    assert misaligned.overall > aligned.overall
    assert aligned.overall == pytest.approx(np.mean(aligned.per_sentence), abs=1e-12)
    assert len(aligned.samples) == UNIGRAM.n_samples


def test_alignment_score_is_deterministic(world, adapter):
    pair = build_pair(world.prompt('gecko'), world.text('gecko', 'misty', 'plains'), adapter)
    config = AlignmentConfig(n_samples=4, temperature=2.0, seed=11)
    assert alignment_score(pair, adapter, config) == alignment_score(pair, adapter, config)
    result = alignment_score(pair, adapter, config)
    assert AlignmentScore.from_dict(result.to_dict()) == result


def test_calibrate_threshold_separated():
    assert calibrate_alignment_threshold([0.1, 0.2], [0.8, 0.9]) == 0.8
    assert balanced_accuracy(0.8, [0.1, 0.2], [0.8, 0.9]) == 1.


def test_calibrate_threshold_identical():
    scores = [0.2, 0.4, 0.4, 0.7]
    theta = calibrate_alignment_threshold(scores, scores)
    assert balanced_accuracy(theta, scores, scores) == pytest.approx(0.5)


def test_calibrate_threshold_matches_scan():
    rng = np.random.default_rng(0)
    for _ in range(200):
        aligned = np.round(rng.uniform(0, 1, size=20), 2)
        misaligned = np.round(rng.uniform(0.2, 1, size=20), 2)
        candidates = sorted(set(aligned) | set(misaligned))
        accuracies = [balanced_accuracy(c, aligned, misaligned) for c in candidates]
        best = max(accuracies)
        expected = min(c for c, a in zip(candidates, accuracies) if math.isclose(a, best))
        assert calibrate_alignment_threshold(aligned, misaligned) == expected


def test_calibrate_threshold_empty():
    with pytest.raises(EmptyInput):
        calibrate_alignment_threshold([], [0.5])
