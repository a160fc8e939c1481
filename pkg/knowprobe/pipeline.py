# -*- coding: utf-8 -*-
"""Two-stage workflow and its evaluation.

Stage 1 (knowledge test): a model knowledge score below tau means the model
does not know the subject, so the text is fabricated. Stage 2 (alignment
test) runs only on texts that pass stage 1 and splits them at theta into
aligned and misaligned.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import pandas as pd
from sklearn.metrics import confusion_matrix
from tqdm import tqdm

from .alignment import (AlignmentConfig, AlignmentScore, alignment_score,
                        calibrate_alignment_threshold)
from .calibration import CalibrationResult, ecdf, ks_threshold
from .errors import (CalibrationError, InvalidArgument, NoScorableTokens,
                     NoSubjectCandidate)
from .knowledge_probe import MKSResult, ProbeConfig, model_knowledge_score
from .subject_identification import build_pair, extract_noun_chunks, select_subject

logger = logging.getLogger(__name__)


class ReasoningLabel(object):
    ALIGNED = 'aligned'
    MISALIGNED = 'misaligned'
    FABRICATED = 'fabricated'
    UNCLASSIFIABLE = 'unclassifiable'

    ALL = (ALIGNED, MISALIGNED, FABRICATED)


FAITHFUL = 'faithful'
HALLUCINATED = 'hallucinated'
BINARY_LABELS = (FAITHFUL, HALLUCINATED)
BINARY = {
    ReasoningLabel.ALIGNED: FAITHFUL,
    ReasoningLabel.MISALIGNED: HALLUCINATED,
    ReasoningLabel.FABRICATED: HALLUCINATED,
}

DETECTORS = ('two-stage', 'alignment-only')

SPLITS = ('validation', 'test')


@dataclass(frozen=True)
class LabeledExample:
    id: str
    prompt: str
    text: str
    label: str
    split: Optional[str] = None

    def __post_init__(self):
        if self.label not in ReasoningLabel.ALL:
            raise InvalidArgument("label must be one of {}, got {!r}".format(
                list(ReasoningLabel.ALL), self.label))
        if self.split is not None and self.split not in SPLITS:
            raise InvalidArgument("split must be one of {}, got {!r}".format(
                list(SPLITS), self.split))

    def to_dict(self):
        out = {'id': self.id, 'prompt': self.prompt, 'text': self.text, 'label': self.label}
        if self.split is not None:
            out['split'] = self.split
        return out


@dataclass(frozen=True)
class ClassificationOutcome:
    id: str
    predicted: str
    actual: Optional[str] = None
    mks: Optional[MKSResult] = None
    alignment: Optional[AlignmentScore] = None
    tau_used: Optional[float] = None
    theta_used: Optional[float] = None
    reason: Optional[str] = None
    detector: str = 'two-stage'

    def to_dict(self):
        return {
            'id': self.id,
            'predicted': self.predicted,
            'actual': self.actual,
            'mks': None if self.mks is None else self.mks.to_dict(),
            'alignment': None if self.alignment is None else self.alignment.to_dict(),
            'tau_used': self.tau_used,
            'theta_used': self.theta_used,
            'reason': self.reason,
            'detector': self.detector,
        }

    @classmethod
    def from_dict(cls, d):
        mks = d.get('mks')
        alignment = d.get('alignment')
        return cls(d['id'], d['predicted'], d.get('actual'),
                   None if mks is None else MKSResult.from_dict(mks),
                   None if alignment is None else AlignmentScore.from_dict(alignment),
                   d.get('tau_used'), d.get('theta_used'), d.get('reason'),
                   d.get('detector', 'two-stage'))


def run_knowledge_test(example, adapter, tagger, probe_config: ProbeConfig):
    """Stage 1 for one example: returns (pair, subject, MKSResult)."""
    pair = build_pair(example.prompt, example.text, adapter)
    chunks = extract_noun_chunks(example.prompt, tagger, pair.prompt_tokens)
    attn = adapter.attention_received(pair)
    subject = select_subject(pair, chunks, attn)
    mks = model_knowledge_score(pair, subject, adapter, probe_config, tagger=tagger)
    return pair, subject, mks


def classify(example, adapter, tau, alignment_config: AlignmentConfig, tagger,
             probe_config: ProbeConfig = ProbeConfig(),
             detector='two-stage') -> ClassificationOutcome:
    theta = alignment_config.threshold
    if theta is None:
        raise CalibrationError("the alignment threshold theta is not calibrated")
    if detector == 'alignment-only':
        pair = build_pair(example.prompt, example.text, adapter)
        alignment = alignment_score(pair, adapter, alignment_config)
        predicted = (ReasoningLabel.MISALIGNED if alignment.overall >= theta
                     else ReasoningLabel.ALIGNED)
        return ClassificationOutcome(example.id, predicted, example.label, None, alignment,
                                     None, theta, detector=detector)
    if detector != 'two-stage':
        raise InvalidArgument("unknown detector '{}', expected one of {}".format(
            detector, list(DETECTORS)))
    if tau is None:
        raise CalibrationError("the knowledge threshold tau is not calibrated")

    try:
        pair, _, mks = run_knowledge_test(example, adapter, tagger, probe_config)
    except (NoSubjectCandidate, NoScorableTokens) as e:
        logger.warning("example %s is unclassifiable: %s", example.id, e)
        return ClassificationOutcome(example.id, ReasoningLabel.UNCLASSIFIABLE, example.label,
                                     tau_used=tau, theta_used=theta,
                                     reason='{}: {}'.format(type(e).__name__, e),
                                     detector=detector)
    if mks.score < tau:
        return ClassificationOutcome(example.id, ReasoningLabel.FABRICATED, example.label,
                                     mks, None, tau, theta, detector=detector)
    alignment = alignment_score(pair, adapter, alignment_config)
    predicted = (ReasoningLabel.MISALIGNED if alignment.overall >= theta
                 else ReasoningLabel.ALIGNED)
    return ClassificationOutcome(example.id, predicted, example.label, mks, alignment,
                                 tau, theta, detector=detector)


def classify_all(examples, adapter, tau, alignment_config, tagger,
                 probe_config=ProbeConfig(), detector='two-stage', progress=True):
    # examples are independent; run them in order on the one adapter
    return [classify(ex, adapter, tau, alignment_config, tagger, probe_config, detector)
            for ex in tqdm(examples, desc='classify', disable=not progress)]


@dataclass
class Calibration:
    result: CalibrationResult
    theta: float
    theta_standalone: float
    records: List[dict] = field(default_factory=list)

    @property
    def tau(self):
        return self.result.tau

    def scores(self, fabricated):
        return [r['mks'] for r in self.records
                if r['mks'] is not None and (r['label'] == ReasoningLabel.FABRICATED) == fabricated]

    def ecdfs(self):
        return ecdf(self.scores(True)), ecdf(self.scores(False))


def calibrate(examples, adapter, tagger, probe_config: ProbeConfig,
              alignment_config: AlignmentConfig, progress=True) -> Calibration:
    """tau from the knowledge scores, then theta on the examples that pass tau.

    theta_standalone is calibrated on every example (aligned against
    misaligned plus fabricated) for the alignment-only detector.
    """
    records = []
    for ex in tqdm(examples, desc='calibrate', disable=not progress):
        record = {'id': ex.id, 'label': ex.label, 'mks': None, 'alignment': None}
        try:
            pair, _, mks = run_knowledge_test(ex, adapter, tagger, probe_config)
            record['mks'] = mks.score
        except (NoSubjectCandidate, NoScorableTokens) as e:
            logger.warning("skipping %s during calibration: %s", ex.id, e)
            pair = build_pair(ex.prompt, ex.text, adapter)
        record['alignment'] = alignment_score(pair, adapter, alignment_config).overall
        records.append(record)

    fabricated = [r['mks'] for r in records
                  if r['mks'] is not None and r['label'] == ReasoningLabel.FABRICATED]
    other = [r['mks'] for r in records
             if r['mks'] is not None and r['label'] != ReasoningLabel.FABRICATED]
    if not fabricated or not other:
        raise CalibrationError(
            "calibration needs fabricated and non-fabricated examples with a knowledge score")
    result = ks_threshold(fabricated, other)

    def alignment_scores(label, passing):
        return [r['alignment'] for r in records if r['label'] == label and (
            not passing or (r['mks'] is not None and r['mks'] >= result.tau))]

    aligned = alignment_scores(ReasoningLabel.ALIGNED, True)
    misaligned = alignment_scores(ReasoningLabel.MISALIGNED, True)
    if not aligned or not misaligned:
        logger.warning("too few examples pass tau=%.4g; calibrating theta on all "
                       "aligned and misaligned examples", result.tau)
        aligned = alignment_scores(ReasoningLabel.ALIGNED, False)
        misaligned = alignment_scores(ReasoningLabel.MISALIGNED, False)
    if not aligned or not misaligned:
        raise CalibrationError("calibration needs aligned and misaligned examples")
    theta = calibrate_alignment_threshold(aligned, misaligned)
    hallucinated = (alignment_scores(ReasoningLabel.MISALIGNED, False)
                    + alignment_scores(ReasoningLabel.FABRICATED, False))
    theta_standalone = calibrate_alignment_threshold(
        alignment_scores(ReasoningLabel.ALIGNED, False), hallucinated)
    return Calibration(result, theta, theta_standalone, records)


def _percent(num, den):
    num = np.asarray(num, dtype=np.float64)
    return np.divide(100. * num, den, out=np.zeros_like(num), where=np.asarray(den) > 0)


class ConfusionMatrix(object):
    """Counts indexed [predicted][actual] over (aligned, misaligned, fabricated).

    Unclassifiable outcomes are kept apart, per actual class, and do not enter
    the percentages.
    """

    def __init__(self, counts, unclassifiable=None):
        self.counts = np.asarray(counts, dtype=np.int64)
        assert self.counts.shape == (3, 3)
        if unclassifiable is None:
            unclassifiable = np.zeros(3, dtype=np.int64)
        self.unclassifiable = np.asarray(unclassifiable, dtype=np.int64)

    @classmethod
    def from_labels(cls, actual, predicted):
        actual = list(actual)
        predicted = list(predicted)
        assert len(actual) == len(predicted)
        kept = [(a, p) for a, p in zip(actual, predicted) if p != ReasoningLabel.UNCLASSIFIABLE]
        unclassifiable = np.array([
            sum(1 for a, p in zip(actual, predicted)
                if p == ReasoningLabel.UNCLASSIFIABLE and a == label)
            for label in ReasoningLabel.ALL])
        if not kept:
            return cls(np.zeros((3, 3), dtype=np.int64), unclassifiable)
        # sklearn indexes [actual][predicted]
        counts = confusion_matrix([a for a, _ in kept], [p for _, p in kept],
                                  labels=list(ReasoningLabel.ALL)).T
        return cls(counts, unclassifiable)

    @property
    def total(self):
        return int(self.counts.sum() + self.unclassifiable.sum())

    @property
    def column_totals(self):
        return self.counts.sum(axis=0)

    @property
    def column_percentages(self):
        return _percent(self.counts, self.column_totals)

    @property
    def binary_counts(self):
        """2x3 counts: predicted (faithful, hallucinated) x actual class."""
        return np.stack([self.counts[0], self.counts[1] + self.counts[2]])

    @property
    def binary_confusion(self):
        """2x2 counts: predicted (faithful, hallucinated) x actual (faithful, hallucinated)."""
        b = self.binary_counts
        return np.stack([b[:, 0], b[:, 1] + b[:, 2]], axis=1)

    @property
    def correct(self):
        """Per actual class, examples whose binary prediction matches."""
        b = self.binary_counts
        return np.array([b[0, 0], b[1, 1], b[1, 2]])

    @property
    def class_accuracy(self):
        return _percent(self.correct, self.column_totals)

    @property
    def overall_accuracy(self):
        n = self.counts.sum()
        return 100. * self.correct.sum() / n if n else 0.

    def gate_summary(self):
        """Share of fabricated texts stopped by stage 1 and of the rest let through."""
        col = self.column_totals
        others = col[0] + col[1]
        passed = self.counts[:2, :2].sum()
        return {
            'fabricated_caught': float(_percent(self.counts[2, 2], col[2])),
            'non_fabricated_passed': float(_percent(passed, others)),
        }

    def percentages_frame(self):
        return pd.DataFrame(self.column_percentages, index=list(ReasoningLabel.ALL),
                            columns=list(ReasoningLabel.ALL))

    def counts_frame(self):
        frame = pd.DataFrame(self.counts, index=list(ReasoningLabel.ALL),
                             columns=list(ReasoningLabel.ALL))
        frame.loc[ReasoningLabel.UNCLASSIFIABLE] = self.unclassifiable
        return frame

    def binary_frame(self):
        return pd.DataFrame(self.binary_counts, index=list(BINARY_LABELS),
                            columns=list(ReasoningLabel.ALL))

    def summary_frame(self):
        row = dict(zip(ReasoningLabel.ALL, self.class_accuracy))
        row['overall'] = self.overall_accuracy
        return pd.DataFrame([row], index=['accuracy'])

    def to_dict(self):
        return {
            'labels': list(ReasoningLabel.ALL),
            'counts': self.counts.tolist(),
            'column_percentages': self.column_percentages.tolist(),
            'unclassifiable': self.unclassifiable.tolist(),
            'binary_counts': self.binary_counts.tolist(),
            'binary_confusion': self.binary_confusion.tolist(),
            'class_accuracy': dict(zip(ReasoningLabel.ALL, self.class_accuracy.tolist())),
            'overall_accuracy': self.overall_accuracy,
            'gate': self.gate_summary(),
            'total': self.total,
        }


def evaluate(dataset, outcomes) -> ConfusionMatrix:
    by_id = {}
    for outcome in outcomes:
        by_id[outcome.id] = outcome
    actual, predicted = [], []
    for ex in dataset:
        if ex.id not in by_id:
            raise InvalidArgument("no outcome for example '{}'".format(ex.id))
        outcome = by_id[ex.id]
        if outcome.actual is not None and outcome.actual != ex.label:
            raise InvalidArgument("label mismatch for '{}': dataset says {}, outcome says {}".format(
                ex.id, ex.label, outcome.actual))
        actual.append(ex.label)
        predicted.append(outcome.predicted)
    return ConfusionMatrix.from_labels(actual, predicted)
