# -*- coding: utf-8 -*-
import logging
from dataclasses import asdict, dataclass

import numpy as np
import pandas as pd
from scipy.stats import ks_2samp

from .errors import CalibrationError

import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt

logger = logging.getLogger(__name__)

# below this sample size the asymptotic p-value is flagged in reports
SMALL_SAMPLE = 10


class Ecdf(object):
    """Right-continuous empirical CDF, F(x) = #{v <= x} / n."""

    def __init__(self, values):
        values = np.asarray(values, dtype=np.float64).ravel()
        if values.size == 0:
            raise CalibrationError("cannot build an ECDF from an empty sample")
        self.sorted_values = np.sort(values)

    def __len__(self):
        return self.sorted_values.size

    def counts(self, x):
        return np.searchsorted(self.sorted_values, x, side='right')

    def __call__(self, x):
        out = self.counts(x) / float(len(self))
        return float(out) if np.ndim(out) == 0 else out

    def to_frame(self):
        xs = np.unique(self.sorted_values)
        return pd.DataFrame({'x': xs, 'F': self(xs)})


def ecdf(values) -> Ecdf:
    return Ecdf(values)


@dataclass(frozen=True)
class CalibrationResult:
    tau: float
    ks_statistic: float
    p_value: float
    n_fabricated: int
    n_other: int

    @property
    def small_sample(self):
        return min(self.n_fabricated, self.n_other) < SMALL_SAMPLE

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(float(d['tau']), float(d['ks_statistic']), float(d['p_value']),
                   int(d['n_fabricated']), int(d['n_other']))


def ks_pvalue(fabricated_scores, other_scores):
    """Asymptotic one-sided p-value against the alternative that F lies above G somewhere."""
    p = float(ks_2samp(fabricated_scores, other_scores, alternative='greater',
                       method='asymp').pvalue)
    return min(max(p, np.finfo(np.float64).tiny), 1.)


def ks_threshold(fabricated_scores, other_scores) -> CalibrationResult:
    """tau = argmax_x F(x) - G(x), F being the ECDF of the fabricated (low) scores.

    Candidates are the observed scores; ties go to the smallest candidate.
    Examples scoring strictly below tau are later called fabricated.
    """
    if len(fabricated_scores) == 0 or len(other_scores) == 0:
        raise CalibrationError("both score lists must be non-empty")
    f, g = ecdf(fabricated_scores), ecdf(other_scores)
    n1, n2 = len(f), len(g)
    candidates = np.unique(np.concatenate([f.sorted_values, g.sorted_values]))
    # integer numerators keep ties exact
    gaps = f.counts(candidates).astype(np.int64) * n2 - g.counts(candidates).astype(np.int64) * n1
    best = int(np.argmax(gaps))
    statistic = gaps[best] / float(n1 * n2)
    result = CalibrationResult(float(candidates[best]), float(statistic),
                               ks_pvalue(f.sorted_values, g.sorted_values), n1, n2)
    logger.info("KS calibration: %s", format_ks(result))
    return result


def format_ks(result: CalibrationResult) -> str:
    text = '{:.2f}% at τ of {:.3f} (p-value {:.2e})'.format(
        100. * result.ks_statistic, result.tau, result.p_value)
    if result.small_sample:
        text += ' [asymptotic p-value, n < {}]'.format(SMALL_SAMPLE)
    return text


def plot_ecdfs(fabricated, other, tau, path):
    fig, ax = plt.subplots(figsize=(5, 4))
    for curve, label in ((fabricated, 'fabricated'), (other, 'aligned + misaligned')):
        frame = curve.to_frame()
        ax.step(frame['x'], frame['F'], where='post', label=label)
    ax.axvline(tau, color='grey', linestyle='--', label='τ = {:.3g}'.format(tau))
    ax.set_xlabel('model knowledge score')
    ax.set_ylabel('cumulative probability')
    ax.legend(loc='lower right')
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
