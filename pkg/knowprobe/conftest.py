# -*- coding: utf-8 -*-
import numpy as np
import pytest

from .tagging import LexiconTagger
from .toy import ToyAdapter, ToyLanguageModel, ToyWorld

# <bos>, a, b, c, . with strictly positive rows
SMALL_VOCAB = ['<bos>', 'a', 'b', 'c', '.']
SMALL_TRANSITIONS = np.array([
    [0.05, 0.50, 0.25, 0.15, 0.05],
    [0.10, 0.10, 0.25, 0.45, 0.10],
    [0.05, 0.20, 0.10, 0.10, 0.55],
    [0.20, 0.30, 0.30, 0.10, 0.10],
    [0.40, 0.20, 0.20, 0.10, 0.10],
])


@pytest.fixture(scope='session')
def world():
    return ToyWorld(seed=0)


@pytest.fixture
def adapter(world):
    return world.adapter()


@pytest.fixture(scope='session')
def tagger(world):
    return world.tagger()


@pytest.fixture
def small_model():
    return ToyLanguageModel(SMALL_TRANSITIONS)


@pytest.fixture
def small_adapter(small_model):
    return ToyAdapter(small_model, SMALL_VOCAB)


@pytest.fixture
def small_tagger():
    return LexiconTagger({'a': 'NOUN', 'b': 'VERB', 'c': 'ADP', '.': 'PUNCT'})
