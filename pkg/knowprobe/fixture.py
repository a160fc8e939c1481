# -*- coding: utf-8 -*-
"""Synthetic three-class dataset for the toy backend.

- aligned: a known subject with its own two attributes;
- misaligned: a known subject with the attributes of another known subject;
- fabricated: a never-seen subject with random attributes.
"""
import logging
import os

import numpy as np

from .data import save_dataset
from .pipeline import LabeledExample, ReasoningLabel
from .toy import FIRST_ATTRIBUTES, PROMPT_TEMPLATES, SECOND_ATTRIBUTES, ToyWorld

logger = logging.getLogger(__name__)


def _example(world, rng, label):
    template = int(rng.integers(len(PROMPT_TEMPLATES)))
    if label == ReasoningLabel.FABRICATED:
        subject = world.unseen[rng.integers(len(world.unseen))]
        first = FIRST_ATTRIBUTES[rng.integers(len(FIRST_ATTRIBUTES))]
        second = SECOND_ATTRIBUTES[rng.integers(len(SECOND_ATTRIBUTES))]
    else:
        j = int(rng.integers(len(world.known)))
        subject = world.known[j]
        if label == ReasoningLabel.MISALIGNED:
            # any other known subject: facts are drawn from permutations, so both differ
            other = (j + 1 + int(rng.integers(len(world.known) - 1))) % len(world.known)
            first, second = world.facts[world.known[other]]
        else:
            first, second = world.facts[subject]
    return world.prompt(subject, template), world.text(subject, first, second)


def generate_synthetic_fixture(seed=0, n_per_class=240, validation_fraction=0.5, world=None):
    """Balanced, shuffled examples; the first share of each class is the validation split."""
    if world is None:
        world = ToyWorld()
    rng = np.random.default_rng(seed)
    n_validation = int(round(n_per_class * validation_fraction))
    examples = []
    for label in ReasoningLabel.ALL:
        for i in range(n_per_class):
            prompt, text = _example(world, rng, label)
            split = 'validation' if i < n_validation else 'test'
            examples.append(LabeledExample('{}-{:04d}'.format(label, i), prompt, text,
                                           label, split))
    order = rng.permutation(len(examples))
    return [examples[i] for i in order]


def write_fixture(outdir, seed=0, n_per_class=240, validation_fraction=0.5, world=None):
    """Write dataset.jsonl and lexicon.tsv under `outdir`; returns both paths."""
    if world is None:
        world = ToyWorld()
    os.makedirs(outdir, exist_ok=True)
    examples = generate_synthetic_fixture(seed, n_per_class, validation_fraction, world)
    dataset_path = os.path.join(outdir, 'dataset.jsonl')
    lexicon_path = os.path.join(outdir, 'lexicon.tsv')
    save_dataset(dataset_path, examples, seed=seed, world_seed=world.seed,
                 n_per_class=n_per_class)
    world.tagger().to_tsv(lexicon_path)
    logger.info("wrote %d examples to %s", len(examples), dataset_path)
    return dataset_path, lexicon_path
