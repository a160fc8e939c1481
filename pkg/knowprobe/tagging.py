# -*- coding: utf-8 -*-
import csv
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import List, Tuple

from nltk import RegexpParser, Tree
from nltk.tokenize import WordPunctTokenizer

from .errors import ConfigError, InvalidArgument

logger = logging.getLogger(__name__)

# universal POS names, as spaCy reports them in `token.pos_`
DEFAULT_POS_SET = ('NOUN', 'PROPN', 'NUM', 'VERB', 'ADJ')

NOUN_CHUNK_GRAMMAR = r"""
    NP: {<DET>?<NUM>*<ADJ>*<NOUN|PROPN>+}
"""


@dataclass(frozen=True)
class TaggedWord:
    text: str
    start: int
    end: int
    pos: str


class PosTagger(ABC):
    """Word-level POS tags and noun chunks with character spans."""

    @abstractmethod
    def tag(self, text) -> List[TaggedWord]:
        pass

    @abstractmethod
    def noun_chunks(self, text) -> List[Tuple[int, int]]:
        pass


class LexiconTagger(PosTagger):
    """Fixed lookup-table tagger; words missing from the lexicon are tagged X."""

    def __init__(self, lexicon, unknown_tag='X'):
        self.lexicon = dict(lexicon)
        self.unknown_tag = unknown_tag
        self.tokenizer = WordPunctTokenizer()
        self.chunker = RegexpParser(NOUN_CHUNK_GRAMMAR)

    @classmethod
    def from_tsv(cls, path):
        lexicon = {}
        with open(path, encoding='utf-8', newline='') as handle:
            for row in csv.reader(handle, delimiter='\t'):
                if not row or row[0].startswith('#'):
                    continue
                if len(row) != 2:
                    raise ConfigError("{}: expected token<TAB>POS, got {!r}".format(path, row))
                lexicon[row[0]] = row[1].strip()
        logger.debug("read %d lexicon entries from %s", len(lexicon), path)
        return cls(lexicon)

    def to_tsv(self, path):
        with open(path, 'w', encoding='utf-8', newline='') as handle:
            writer = csv.writer(handle, delimiter='\t', lineterminator='\n')
            for word in sorted(self.lexicon):
                writer.writerow([word, self.lexicon[word]])

    def tag(self, text):
        words = []
        for start, end in self.tokenizer.span_tokenize(text):
            word = text[start:end]
            pos = self.lexicon.get(word, self.lexicon.get(word.lower(), self.unknown_tag))
            words.append(TaggedWord(word, start, end, pos))
        return words

    def noun_chunks(self, text):
        words = self.tag(text)
        if not words:
            return []
        tree = self.chunker.parse([(w.text, w.pos) for w in words])
        chunks = []
        idx = 0
        for node in tree:
            if isinstance(node, Tree):
                size = len(node.leaves())
                if node.label() == 'NP':
                    chunks.append((words[idx].start, words[idx + size - 1].end))
                idx += size
            else:
                idx += 1
        return chunks


class SpacyTagger(PosTagger):
    def __init__(self, model='en_core_web_sm'):
        import spacy
        self.nlp = spacy.load(model)

    def tag(self, text):
        return [TaggedWord(t.text, t.idx, t.idx + len(t.text), t.pos_)
                for t in self.nlp(text) if not t.is_space]

    def noun_chunks(self, text):
        return [(c.start_char, c.end_char) for c in self.nlp(text).noun_chunks]


def _lexicon_tagger(config, world=None):
    if config.lexicon is not None:
        return LexiconTagger.from_tsv(config.lexicon)
    if world is None:
        raise ConfigError("tagger.lexicon must be set unless the toy backend is used")
    return world.tagger()


def _spacy_tagger(config, world=None):
    return SpacyTagger(config.model)


TAGGERS = {
    'lexicon': _lexicon_tagger,
    'spacy': _spacy_tagger,
}


def build_tagger(tagger_config, world=None) -> PosTagger:
    try:
        factory = TAGGERS[tagger_config.backend]
    except KeyError:
        raise InvalidArgument("unknown tagger backend '{}', expected one of {}".format(
            tagger_config.backend, sorted(TAGGERS)))
    return factory(tagger_config, world)
