# -*- coding: utf-8 -*-
"""Run configuration.

Precedence, lowest first: dataclass defaults, a YAML file, environment
variables `KNOWPROBE_<SECTION>__<KEY>`, then `section.key=value` overrides.
Override values are parsed as YAML scalars, so `0.2`, `[0, 1]` and `null`
mean what they look like.
"""
import logging
import os
from dataclasses import asdict, dataclass, field, fields
from typing import List, Optional

import yaml

from .alignment import AlignmentConfig
from .errors import ConfigError, InvalidArgument
from .knowledge_probe import ProbeConfig
from .tagging import DEFAULT_POS_SET
from .utils import KL_FLOOR

logger = logging.getLogger(__name__)

ENV_PREFIX = 'KNOWPROBE_'


@dataclass
class ModelConfig:
    backend: str = 'toy'
    name: Optional[str] = None
    device: str = 'cpu'
    attention_layers: Optional[List[int]] = None
    max_new_tokens: int = 12
    world_seed: int = 0


@dataclass
class TaggerConfig:
    backend: str = 'lexicon'
    lexicon: Optional[str] = None
    model: str = 'en_core_web_sm'


@dataclass
class ProbeSettings:
    sigma_prime: float = 0.1
    seeds: List[int] = field(default_factory=lambda: list(range(10)))
    pos_set: List[str] = field(default_factory=lambda: list(DEFAULT_POS_SET))
    kl_floor: float = KL_FLOOR
    log_base: Optional[float] = None

    def to_probe_config(self):
        return ProbeConfig(self.sigma_prime, tuple(self.seeds), tuple(self.pos_set),
                           self.kl_floor, self.log_base)


@dataclass
class AlignmentSettings:
    n_samples: int = 10
    temperature: float = 1.0
    scorer: str = 'ngram'
    ngram_order: int = 1
    seed: int = 0

    def to_alignment_config(self, threshold=None):
        return AlignmentConfig(self.n_samples, self.temperature, self.scorer,
                               self.ngram_order, threshold, self.seed)


@dataclass
class ThresholdConfig:
    tau: Optional[float] = None
    theta: Optional[float] = None


@dataclass
class OutputConfig:
    dir: str = 'results'


SECTIONS = {
    'model': ModelConfig,
    'tagger': TaggerConfig,
    'probe': ProbeSettings,
    'alignment': AlignmentSettings,
    'thresholds': ThresholdConfig,
    'output': OutputConfig,
}


@dataclass
class RunConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    tagger: TaggerConfig = field(default_factory=TaggerConfig)
    probe: ProbeSettings = field(default_factory=ProbeSettings)
    alignment: AlignmentSettings = field(default_factory=AlignmentSettings)
    thresholds: ThresholdConfig = field(default_factory=ThresholdConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - set(SECTIONS)
        if unknown:
            raise ConfigError("unknown config section(s): {}".format(', '.join(sorted(unknown))))
        sections = {}
        for name, section_cls in SECTIONS.items():
            values = d.get(name) or {}
            if not isinstance(values, dict):
                raise ConfigError("config section '{}' must be a mapping".format(name))
            known = set(f.name for f in fields(section_cls))
            bad = set(values) - known
            if bad:
                raise ConfigError("unknown key(s) in '{}': {}".format(
                    name, ', '.join(sorted(bad))))
            sections[name] = section_cls(**values)
        return cls(**sections)

    def validate(self):
        if self.model.backend not in ('toy', 'hf'):
            raise ConfigError("model.backend must be 'toy' or 'hf', got {!r}".format(
                self.model.backend))
        if self.model.backend == 'hf' and not self.model.name:
            raise ConfigError("model.name is required with the hf backend")
        if self.model.max_new_tokens < 1:
            raise ConfigError("model.max_new_tokens must be >= 1")
        if self.tagger.backend not in ('lexicon', 'spacy'):
            raise ConfigError("tagger.backend must be 'lexicon' or 'spacy', got {!r}".format(
                self.tagger.backend))
        try:
            self.probe.to_probe_config()
            self.alignment.to_alignment_config()
        except (InvalidArgument, TypeError) as e:
            raise ConfigError(str(e))
        return self


def _set(tree, dotted, value):
    parts = dotted.split('.')
    if len(parts) != 2 or not all(parts):
        raise ConfigError("override key must look like section.key, got {!r}".format(dotted))
    section, key = parts
    tree.setdefault(section, {})
    if not isinstance(tree[section], dict):
        raise ConfigError("config section '{}' must be a mapping".format(section))
    tree[section][key] = value


def parse_value(text):
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError("cannot parse value {!r}: {}".format(text, e))


def env_overrides(environ=None):
    environ = os.environ if environ is None else environ
    out = {}
    for name, value in environ.items():
        if not name.startswith(ENV_PREFIX) or '__' not in name:
            continue
        section, key = name[len(ENV_PREFIX):].lower().split('__', 1)
        out['{}.{}'.format(section, key)] = value
    return out


def parse_overrides(items):
    out = {}
    for item in items or ():
        if '=' not in item:
            raise ConfigError("override must look like section.key=value, got {!r}".format(item))
        key, value = item.split('=', 1)
        out[key.strip()] = value
    return out


def load_config(path=None, overrides=None, environ=None) -> RunConfig:
    tree = RunConfig().to_dict()
    if path is not None:
        if not os.path.isfile(path):
            raise FileNotFoundError("no such config file: {}".format(path))
        with open(path, encoding='utf-8') as handle:
            try:
                loaded = yaml.safe_load(handle) or {}
            except yaml.YAMLError as e:
                raise ConfigError("{}: {}".format(path, e))
        if not isinstance(loaded, dict):
            raise ConfigError("{}: top level must be a mapping".format(path))
        for section, values in loaded.items():
            if not isinstance(values, dict):
                raise ConfigError("{}: section '{}' must be a mapping".format(path, section))
            for key, value in values.items():
                _set(tree, '{}.{}'.format(section, key), value)
    for key, value in env_overrides(environ).items():
        _set(tree, key, parse_value(value))
    for key, value in (overrides or {}).items():
        _set(tree, key, parse_value(value))
    config = RunConfig.from_dict(tree).validate()
    logger.debug("configuration: %s", config.to_dict())
    return config
