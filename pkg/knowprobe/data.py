# -*- coding: utf-8 -*-
"""JSONL datasets, thresholds files and outcome files.

Every JSONL file starts with a header object carrying `"schema": 1` and a
`"kind"`; data lines follow, one object each.
"""
import json
import logging
from pathlib import Path

from .errors import DatasetError, InvalidArgument
from .pipeline import ClassificationOutcome, LabeledExample

logger = logging.getLogger(__name__)

SCHEMA = 1

DATASET_FIELDS = ('id', 'prompt', 'text', 'label')


def _dumps(obj):
    return json.dumps(obj, ensure_ascii=False, sort_keys=True)


def write_jsonl(path, header, records):
    with open(path, 'w', encoding='utf-8', newline='\n') as handle:
        handle.write(_dumps(header) + '\n')
        for record in records:
            handle.write(_dumps(record) + '\n')


def read_jsonl(path, kind):
    """Yield (lineno, object) for the data lines of a JSONL file of `kind`."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError("no such file: {}".format(path))
    with open(path, encoding='utf-8') as handle:
        header = None
        for lineno, line in enumerate(handle, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise DatasetError("malformed JSON ({})".format(e.msg), path, lineno)
            if not isinstance(obj, dict):
                raise DatasetError("expected a JSON object", path, lineno)
            if header is None:
                if 'schema' not in obj:
                    raise DatasetError("missing schema header line", path, lineno)
                if obj['schema'] != SCHEMA:
                    raise DatasetError("unsupported schema {!r}".format(obj['schema']),
                                       path, lineno)
                if obj.get('kind', kind) != kind:
                    raise DatasetError("expected a '{}' file, found '{}'".format(
                        kind, obj.get('kind')), path, lineno)
                header = obj
                yield lineno, header
                continue
            yield lineno, obj
    if header is None:
        raise DatasetError("empty file", path)


def load_dataset(path):
    """Strictly validated list of LabeledExample; errors carry the line number."""
    examples = []
    seen = set()
    lines = read_jsonl(path, 'dataset')
    next(lines)
    for lineno, obj in lines:
        missing = [k for k in DATASET_FIELDS if k not in obj]
        if missing:
            raise DatasetError("missing field(s) {}".format(', '.join(missing)), path, lineno)
        for key in DATASET_FIELDS:
            if not isinstance(obj[key], str):
                raise DatasetError("field '{}' must be a string".format(key), path, lineno)
        if obj['id'] in seen:
            raise DatasetError("duplicate id '{}'".format(obj['id']), path, lineno)
        try:
            example = LabeledExample(obj['id'], obj['prompt'], obj['text'], obj['label'],
                                     obj.get('split'))
        except InvalidArgument as e:
            raise DatasetError(str(e), path, lineno)
        seen.add(example.id)
        examples.append(example)
    logger.info("loaded %d examples from %s", len(examples), path)
    return examples


def save_dataset(path, examples, **header):
    header = dict(header, schema=SCHEMA, kind='dataset')
    write_jsonl(path, header, (ex.to_dict() for ex in examples))


def select_split(examples, split=None):
    if split is None or split == 'all':
        return list(examples)
    return [ex for ex in examples if ex.split == split]


def save_thresholds(path, tau, theta, theta_standalone=None, calibration=None, config=None,
                    total_time=None):
    payload = {
        'total_time': total_time,
        'schema': SCHEMA,
        'tau': tau,
        'theta': theta,
        'theta_standalone': theta_standalone,
        'calibration': calibration,
        'config': config,
    }
    with open(path, 'w', encoding='utf-8') as handle:
        json.dump(payload, handle, indent=2, sort_keys=True, ensure_ascii=False)
        handle.write('\n')


def load_thresholds(path):
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError("no such thresholds file: {}".format(path))
    try:
        with open(path, encoding='utf-8') as handle:
            payload = json.load(handle)
    except json.JSONDecodeError as e:
        raise DatasetError("malformed JSON ({})".format(e.msg), path, e.lineno)
    if payload.get('schema') != SCHEMA:
        raise DatasetError("unsupported schema {!r}".format(payload.get('schema')), path)
    for key in ('tau', 'theta'):
        if not isinstance(payload.get(key), (int, float)):
            raise DatasetError("thresholds file lacks a numeric '{}'".format(key), path)
    return payload


def save_outcomes(path, outcomes, config=None, thresholds=None):
    header = {
        'schema': SCHEMA,
        'kind': 'outcomes',
        'config': config,
        'seeds': None if config is None else config['probe']['seeds'],
        'thresholds': thresholds,
    }
    write_jsonl(path, header, (o.to_dict() for o in outcomes))


def load_outcomes(path):
    """Returns (header, list of ClassificationOutcome)."""
    lines = read_jsonl(path, 'outcomes')
    _, header = next(lines)
    outcomes = []
    for lineno, obj in lines:
        try:
            outcomes.append(ClassificationOutcome.from_dict(obj))
        except (KeyError, TypeError) as e:
            raise DatasetError("bad outcome record ({})".format(e), path, lineno)
    return header, outcomes
