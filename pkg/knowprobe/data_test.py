# -*- coding: utf-8 -*-
import json

import pytest

from .data import (load_dataset, load_outcomes, load_thresholds, save_dataset, save_outcomes,
                   save_thresholds, select_split)
from .errors import DatasetError
from .pipeline import ClassificationOutcome, LabeledExample

HEADER = '{"schema": 1, "kind": "dataset"}\n'
PIKA = {'id': 'nec-1', 'prompt': 'Where does the Pika live?',
        'text': 'Pika is found in rocky areas and lives in mountain regions.',
        'label': 'aligned'}


def _write(tmp_path, lines, header=HEADER):
    path = tmp_path / 'dataset.jsonl'
    path.write_text(header + ''.join(json.dumps(line) + '\n' for line in lines), encoding='utf-8')
    return path


def test_load_dataset(tmp_path):
    path = _write(tmp_path, [PIKA, dict(PIKA, id='nec-2', label='fabricated', split='test')])
    examples = load_dataset(path)
    assert examples[0] == LabeledExample('nec-1', PIKA['prompt'], PIKA['text'], 'aligned')
    assert examples[1].split == 'test'
    assert select_split(examples, 'test') == examples[1:]
    assert select_split(examples, 'all') == examples


def test_bad_label_reports_line(tmp_path):
    path = _write(tmp_path, [PIKA, dict(PIKA, id='nec-2', label='unknown')])
    with pytest.raises(DatasetError) as info:
        load_dataset(path)
    assert info.value.lineno == 3
    assert 'dataset.jsonl:3' in str(info.value)


def test_malformed_and_duplicates(tmp_path):
    path = tmp_path / 'broken.jsonl'
    path.write_text(HEADER + '{"id": "a",\n', encoding='utf-8')
    with pytest.raises(DatasetError) as info:
        load_dataset(path)
    assert info.value.lineno == 2
    path = _write(tmp_path, [PIKA, PIKA])
    with pytest.raises(DatasetError, match='duplicate id'):
        load_dataset(path)
    path = _write(tmp_path, [{'id': 'x', 'prompt': 'p', 'label': 'aligned'}])
    with pytest.raises(DatasetError, match='text'):
        load_dataset(path)


def test_header_is_required(tmp_path):
    path = _write(tmp_path, [PIKA], header='')
    with pytest.raises(DatasetError, match='schema'):
        load_dataset(path)
    path = _write(tmp_path, [], header='{"schema": 2, "kind": "dataset"}\n')
    with pytest.raises(DatasetError, match='schema'):
        load_dataset(path)
    with pytest.raises(FileNotFoundError):
        load_dataset(tmp_path / 'missing.jsonl')


def test_save_then_load(tmp_path):
    examples = [LabeledExample('a', 'where?', 'here, "quoted" é', 'misaligned', 'validation'),
                LabeledExample('b', 'who?', 'line\nbreak', 'fabricated')]
    path = tmp_path / 'out.jsonl'
    save_dataset(path, examples)
    assert load_dataset(path) == examples


def test_thresholds(tmp_path):
    path = tmp_path / 'thresholds.json'
    save_thresholds(path, 0.02, 0.9, 0.85, {'tau': 0.02}, {'probe': {}})
    payload = load_thresholds(path)
    assert (payload['tau'], payload['theta'], payload['theta_standalone']) == (0.02, 0.9, 0.85)
    path.write_text('{"schema": 1, "tau": null, "theta": 0.9}', encoding='utf-8')
    with pytest.raises(DatasetError):
        load_thresholds(path)


def test_outcomes(tmp_path):
    outcomes = [ClassificationOutcome('a', 'fabricated', 'fabricated', tau_used=0.1,
                                      theta_used=0.9),
                ClassificationOutcome('b', 'unclassifiable', 'aligned', reason='no chunk')]
    path = tmp_path / 'outcomes.jsonl'
    save_outcomes(path, outcomes, {'probe': {'seeds': [0, 1]}}, {'tau': 0.1})
    header, loaded = load_outcomes(path)
    assert loaded == outcomes
    assert header['seeds'] == [0, 1]
    assert header['kind'] == 'outcomes'
    with pytest.raises(DatasetError, match='outcomes'):
        load_dataset(path)
