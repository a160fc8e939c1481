# -*- coding: utf-8 -*-
"""Deterministic toy causal LM with a published structure.

The model has one layer and one head. Token k is embedded as

    e_k = [alpha * onehot(k) | code_k | salience_k]

(identity block of size V, knowledge block of size C, one salience scalar).
Attention is causal and only looks at key salience,

    a_ik = softmax_{k <= i}(beta * salience_k),

so with equal salience it is the running mean of the context. Logits are

    logits_i = W_tok . e_i[identity] + W_ctx . sum_k a_ik e_k[knowledge]

where W_tok is the log transition table (each source row shifted so its
floor reads zero, divided by alpha) and W_ctx is the readout of the
knowledge codes. Without knowledge codes the model is exactly the bigram
table; without the identity term it is W . mean(e_1..e_i).

`ToyWorld` publishes a concrete vocabulary, lexicon, facts and weights used
by the synthetic fixture.
"""
import logging

import numpy as np
import torch
from nltk.tokenize import WordPunctTokenizer
from torch import nn

from .errors import OutOfVocabulary
from .model_adapter import LanguageModelAdapter, TokenSequence

logger = logging.getLogger(__name__)

TRANSITION_FLOOR = 1e-13

_word_tokenizer = WordPunctTokenizer()


class ToyLanguageModel(nn.Module):
    def __init__(self, transitions, salience=None, codes=None, readout=None,
                 alpha=1., beta=1.):
        super(ToyLanguageModel, self).__init__()
        transitions = torch.as_tensor(transitions, dtype=torch.float64)
        vocab_size = transitions.shape[0]
        assert transitions.shape == (vocab_size, vocab_size)
        if salience is None:
            salience = torch.zeros(vocab_size, dtype=torch.float64)
        salience = torch.as_tensor(salience, dtype=torch.float64)
        if codes is None:
            codes = torch.zeros(vocab_size, 0, dtype=torch.float64)
        codes = torch.as_tensor(codes, dtype=torch.float64)
        if readout is None:
            readout = torch.zeros(vocab_size, codes.shape[1], dtype=torch.float64)
        readout = torch.as_tensor(readout, dtype=torch.float64)
        assert codes.shape[0] == vocab_size and readout.shape == (vocab_size, codes.shape[1])

        self.vocab_size = vocab_size
        self.n_codes = codes.shape[1]
        self.alpha = float(alpha)
        self.beta = float(beta)

        log_t = torch.log(transitions.clamp(min=TRANSITION_FLOOR))
        # shift each source row so that its floor entries read 0
        log_t = log_t - log_t.min(dim=1, keepdim=True)[0]
        self.register_buffer('w_tok', log_t.t() / self.alpha)
        self.register_buffer('readout', readout)
        embedding = torch.cat([
            self.alpha * torch.eye(vocab_size, dtype=torch.float64),
            codes,
            salience.unsqueeze(1)], dim=1)
        self.register_buffer('embedding', embedding)

    @property
    def d_model(self):
        return self.vocab_size + self.n_codes + 1

    def embed(self, ids):
        return self.embedding[ids]

    def attention(self, x):
        bsz, seq_len, _ = x.shape
        scores = self.beta * x[..., -1]
        scores = scores.unsqueeze(1).expand(bsz, seq_len, seq_len)
        causal = torch.ones(seq_len, seq_len, dtype=torch.bool,
                            device=x.device).triu(1)
        scores = scores.masked_fill(causal, float('-inf'))
        # numerical stability
        max_val = scores.max(dim=-1, keepdim=True)[0]
        weights = torch.exp(scores - max_val)
        weights = weights / weights.sum(dim=-1, keepdim=True)
        return weights.view(bsz, 1, seq_len, seq_len)

    def forward_embeddings(self, x):
        """x: (B, L, d) -> logits (B, L, V), attention (B, 1, L, L)."""
        v, c = self.vocab_size, self.n_codes
        weights = self.attention(x)
        context = torch.bmm(weights[:, 0], x[..., v:v + c])
        logits = x[..., :v].matmul(self.w_tok.t()) + context.matmul(self.readout.t())
        return logits, weights

    def forward(self, ids):
        if ids.dim() == 1:
            ids = ids.unsqueeze(0)
        return self.forward_embeddings(self.embed(ids))


def word_spans(text):
    return list(_word_tokenizer.span_tokenize(text))


class ToyAdapter(LanguageModelAdapter):
    name = 'toy'

    def __init__(self, model, vocab, stop_symbols=('.',), max_new_tokens=12,
                 attention_layers=None):
        super(ToyAdapter, self).__init__(attention_layers=attention_layers)
        assert len(vocab) == model.vocab_size
        self.model = model.eval()
        self.vocab = list(vocab)
        self.index = {w: i for i, w in enumerate(self.vocab)}
        self.stop_ids = set(self.index[s] for s in stop_symbols if s in self.index)
        self.max_new_tokens = max_new_tokens
        self.world = None

    @property
    def embedding_dim(self):
        return self.model.d_model

    @property
    def bos_id(self):
        return 0

    def _tokenize(self, text):
        ids, offsets = [], []
        for start, end in word_spans(text):
            word = text[start:end]
            if word not in self.index:
                raise OutOfVocabulary("'{}' is not in the toy vocabulary".format(word))
            ids.append(self.index[word])
            offsets.append((start, end))
        return TokenSequence(tuple(ids), tuple(offsets), text)

    def detokenize(self, ids):
        return ' '.join(self.vocab[i] for i in ids)

    def _embed_ids(self, ids):
        if ids.numel() and (ids.min() < 0 or ids.max() >= self.model.vocab_size):
            raise OutOfVocabulary("token id out of range [0, {})".format(self.model.vocab_size))
        return self.model.embed(ids).clone()

    def _probabilities(self, embeddings):
        logits, _ = self.model.forward_embeddings(embeddings.to(torch.float64))
        return torch.softmax(logits, dim=-1)

    def _attention_maps(self, ids):
        _, weights = self.model(ids)
        # (layers, heads, L, L)
        return weights[0].unsqueeze(0)

    def _sample(self, prompt_ids, n, temperature, seed):
        generator = torch.Generator().manual_seed(seed)
        ids = torch.as_tensor(prompt_ids, dtype=torch.long).unsqueeze(0).repeat(n, 1)
        prompt_len = ids.shape[1]
        done = torch.zeros(n, dtype=torch.bool)
        with torch.no_grad():
            for _ in range(self.max_new_tokens):
                logits, _ = self.model(ids)
                probs = torch.softmax(logits[:, -1] / temperature, dim=-1)
                next_ids = torch.multinomial(probs, 1, generator=generator)
                ids = torch.cat([ids, next_ids], dim=1)
                done |= torch.tensor([t in self.stop_ids for t in next_ids.view(-1).tolist()])
                if done.all():
                    break
        generations = []
        for row in ids[:, prompt_len:].tolist():
            out = []
            for t in row:
                out.append(t)
                if t in self.stop_ids:
                    break
            generations.append(out)
        return generations


KNOWN_SUBJECTS = ('pika', 'ibex', 'lynx', 'marmot', 'gecko', 'heron', 'bison', 'otter')
FIRST_ATTRIBUTES = ('rocky', 'sandy', 'grassy', 'marshy', 'snowy', 'leafy', 'misty', 'arid')
SECOND_ATTRIBUTES = ('slopes', 'plains', 'dunes', 'meadows', 'cliffs', 'forests',
                     'wetlands', 'valleys')
UNSEEN_SUBJECTS = ('hornoda', 'zelvat', 'quorim', 'taspel', 'brinzo', 'mulvek', 'drosk',
                   'fenwal', 'glimra', 'jovet', 'krastel', 'plunor', 'varnix', 'wendol',
                   'yurpa', 'skelvin')
FUNCTION_WORDS = {
    'where': 'ADV', 'does': 'AUX', 'live': 'VERB', 'can': 'AUX', 'be': 'AUX',
    'found': 'VERB', 'is': 'AUX', '?': 'PUNCT', 'lives': 'VERB', 'in': 'ADP',
    '.': 'PUNCT',
}
PROMPT_TEMPLATES = (
    'where does {} live ?',
    'where can {} be found ?',
    'where is {} found ?',
)
TEXT_TEMPLATE = '{} lives in {} {} .'


class ToyWorld(object):
    """Vocabulary, lexicon, facts and weights of the toy backend.

    Known subjects are highly salient and carry a knowledge code whose readout
    boosts the subject and its two attributes; unseen subjects have no code
    and low salience. Everything random is drawn from `seed`.
    """

    def __init__(self, seed=0, boost=14., kappa=0.1, alpha=30., beta=2.5,
                 known_salience=10., unseen_salience=0.3, floor=TRANSITION_FLOOR):
        rng = np.random.default_rng(seed)
        self.seed = seed
        self.vocab = (['<bos>'] + list(FUNCTION_WORDS) + list(KNOWN_SUBJECTS)
                      + list(FIRST_ATTRIBUTES) + list(SECOND_ATTRIBUTES)
                      + list(UNSEEN_SUBJECTS))
        assert len(self.vocab) <= 64
        self.index = {w: i for i, w in enumerate(self.vocab)}
        self.known = list(KNOWN_SUBJECTS)
        self.unseen = list(UNSEEN_SUBJECTS)
        first = rng.permutation(len(FIRST_ATTRIBUTES))
        second = rng.permutation(len(SECOND_ATTRIBUTES))
        self.facts = {
            s: (FIRST_ATTRIBUTES[first[i]], SECOND_ATTRIBUTES[second[i]])
            for i, s in enumerate(KNOWN_SUBJECTS)
        }
        self.boost = boost
        self.kappa = kappa
        self.alpha = alpha
        self.beta = beta

        vocab_size = len(self.vocab)
        weights = np.zeros((vocab_size, vocab_size))
        subjects = self.known + self.unseen
        self._row(weights, '<bos>', {'where': 1.})
        self._row(weights, 'where', {'does': 1., 'can': 1., 'is': 1.})
        for word in ('does', 'can', 'is', '?'):
            self._row(weights, word, dict.fromkeys(subjects, 1.))
        for s in subjects:
            self._row(weights, s, {'lives': 1.})
        self._row(weights, 'live', {'?': 1.})
        self._row(weights, 'be', {'found': 1.})
        self._row(weights, 'found', {'?': 1.})
        self._row(weights, 'lives', {'in': 1.})
        self._row(weights, 'in', dict(zip(FIRST_ATTRIBUTES,
                                          rng.uniform(0.5, 1.5, len(FIRST_ATTRIBUTES)))))
        for a in FIRST_ATTRIBUTES:
            self._row(weights, a, dict(zip(SECOND_ATTRIBUTES,
                                           rng.uniform(0.5, 1.5, len(SECOND_ATTRIBUTES)))))
        for b in SECOND_ATTRIBUTES:
            self._row(weights, b, {'.': 1.})
        self._row(weights, '.', {'where': 1.})
        self.transitions = (1. - vocab_size * floor) * weights + floor

        self.salience = np.ones(vocab_size)
        for s in self.known:
            self.salience[self.index[s]] = known_salience
        for s in self.unseen:
            self.salience[self.index[s]] = rng.uniform(0., unseen_salience)

        n_codes = len(self.known)
        self.codes = np.zeros((vocab_size, n_codes))
        self.readout = np.zeros((vocab_size, n_codes))
        for j, s in enumerate(self.known):
            self.codes[self.index[s], j] = kappa
            for word in (s,) + self.facts[s]:
                self.readout[self.index[word], j] = boost / kappa

    def _row(self, weights, source, targets):
        total = float(sum(targets.values()))
        for word, w in targets.items():
            weights[self.index[source], self.index[word]] = w / total

    def model(self):
        return ToyLanguageModel(self.transitions, salience=self.salience,
                                codes=self.codes, readout=self.readout,
                                alpha=self.alpha, beta=self.beta)

    def adapter(self, attention_layers=None, max_new_tokens=12):
        adapter = ToyAdapter(self.model(), self.vocab, stop_symbols=('.',),
                             max_new_tokens=max_new_tokens,
                             attention_layers=attention_layers)
        adapter.world = self
        return adapter

    def lexicon(self):
        lexicon = {'<bos>': 'X'}
        lexicon.update(FUNCTION_WORDS)
        for s in self.known + self.unseen:
            lexicon[s] = 'PROPN'
        lexicon.update(dict.fromkeys(FIRST_ATTRIBUTES, 'ADJ'))
        lexicon.update(dict.fromkeys(SECOND_ATTRIBUTES, 'NOUN'))
        return lexicon

    def tagger(self):
        from .tagging import LexiconTagger
        return LexiconTagger(self.lexicon())

    def prompt(self, subject, template=0):
        return PROMPT_TEMPLATES[template].format(subject)

    def text(self, subject, first, second):
        return TEXT_TEMPLATE.format(subject, first, second)
