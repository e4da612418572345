# satrag
# See full license in LICENSE.txt.

import copy
import logging
import os

import yaml

from .dataset_gen.generate import GenerationOptions
from .errors import ConfigError
from .evaluate.harness import CUTOFFS_F0, CUTOFFS_F1
from .evaluate.metrics import DEFAULT_CLAIM_THRESHOLD
from .fusion import DEFAULT_PROMPT_BUDGET, PASSAGES_PER_FACT
from .cellgroups import DEFAULT_SNIPPET_BUDGET
from .providers import COMPLETION, EMBEDDING
from .providers import ProviderDescriptor, ProviderSet, make_completer, make_embedder
from .providers import KeywordQueryAnalyzer, LlmQueryAnalyzer
from .providers import DefaultSubjectExtractor, LlmSubjectExtractor
from .retrieval import RetrievalConfig

logger = logging.getLogger(__name__)

SETTINGS_FILE_NAME = 'settings.yaml'

ANALYZERS = ('keyword', 'llm')
SUBJECT_EXTRACTORS = ('default', 'llm')

SECTIONS = ('providers', 'retrieval', 'fusion', 'eval', 'dataset_gen')
TOP_LEVEL = ('corpus_input_dir', 'corpus_store_dir', 'index_path', 'output_dir',
             'snippet_budget', 'max_workers', 'verbose') + SECTIONS


def read_settings(path):
    """settings.yaml as a dict (an empty file gives an empty dict)"""
    if not os.path.isfile(path):
        logger.error("settings file not found: %s" % path)
        raise ConfigError("settings file not found: %s" % path)
    with open(path) as f:
        try:
            settings = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigError("could not parse %s: %s" % (path, e))
    if settings is None:
        return {}
    if not isinstance(settings, dict):
        raise ConfigError("%s must hold a mapping" % path)
    return settings


def find_api_keys(settings, path=''):
    """dotted paths of every api_key field"""
    found = []
    if isinstance(settings, dict):
        for k, v in settings.items():
            here = "%s.%s" % (path, k) if path else str(k)
            if k == 'api_key':
                found.append(here)
            found.extend(find_api_keys(v, here))
    elif isinstance(settings, list):
        for i, v in enumerate(settings):
            found.extend(find_api_keys(v, "%s[%s]" % (path, i)))
    return found


def merge_settings(settings, overrides):
    """overrides win; nested dicts are merged key by key"""
    merged = copy.deepcopy(settings)
    for k, v in (overrides or {}).items():
        if isinstance(v, dict) and isinstance(merged.get(k), dict):
            merged[k] = merge_settings(merged[k], v)
        else:
            merged[k] = v
    return merged


def check_cutoffs(name, cutoffs):
    cutoffs = list(cutoffs)
    if not cutoffs or not all(isinstance(k, int) and k >= 1 for k in cutoffs) or \
            any(a >= b for a, b in zip(cutoffs, cutoffs[1:])):
        raise ConfigError("%s must be strictly increasing positive integers, not %s" %
                          (name, cutoffs))
    return cutoffs


def _section(settings, name):
    section = settings.get(name) or {}
    if not isinstance(section, dict):
        raise ConfigError("settings section '%s' must be a mapping" % name)
    return section


class AppConfig(object):
    """
    Typed view of settings.yaml

    Unknown top level keys and api_key fields anywhere are rejected.
    """

    def __init__(self, settings):
        keys = find_api_keys(settings)
        if keys:
            logger.error("api keys in configuration: %s" % keys)
            raise ConfigError("api keys must not be stored in configuration (found %s), "
                              "name an environment variable with api_key_env" % keys)

        unknown = set(settings) - set(TOP_LEVEL)
        if unknown:
            raise ConfigError("unknown settings %s" % sorted(unknown))

        self.corpus_input_dir = settings.get('corpus_input_dir', 'data')
        self.corpus_store_dir = settings.get('corpus_store_dir', os.path.join('output', 'corpus'))
        self.index_path = settings.get('index_path', os.path.join('output', 'sat_graph.h5'))
        self.output_dir = settings.get('output_dir', 'output')
        self.snippet_budget = int(settings.get('snippet_budget', DEFAULT_SNIPPET_BUDGET))
        self.max_workers = int(settings.get('max_workers', 4))
        self.verbose = bool(settings.get('verbose', False))

        providers = dict(_section(settings, 'providers'))
        self.analyzer = providers.pop('analyzer', 'keyword')
        self.subject_extractor = providers.pop('subject_extractor', 'default')
        if self.analyzer not in ANALYZERS:
            raise ConfigError("analyzer must be one of %s" % (ANALYZERS, ))
        if self.subject_extractor not in SUBJECT_EXTRACTORS:
            raise ConfigError("subject_extractor must be one of %s" % (SUBJECT_EXTRACTORS, ))
        self.embedding = ProviderDescriptor.from_settings(EMBEDDING, providers.pop(EMBEDDING,
                                                                                   None))
        self.completion = ProviderDescriptor.from_settings(COMPLETION, providers.pop(COMPLETION,
                                                                                     None))
        if providers:
            raise ConfigError("unknown provider settings %s" % sorted(providers))

        self.retrieval = RetrievalConfig.from_settings(_section(settings, 'retrieval'))

        fusion = _section(settings, 'fusion')
        self.passages_per_fact = int(fusion.get('passages_per_fact', PASSAGES_PER_FACT))
        self.prompt_budget = int(fusion.get('prompt_budget', DEFAULT_PROMPT_BUDGET))
        if self.passages_per_fact < 0 or self.prompt_budget < 1:
            raise ConfigError("passages_per_fact must be >= 0 and prompt_budget >= 1")

        evaluation = _section(settings, 'eval')
        self.cutoffs_f0 = check_cutoffs('cutoffs_f0', evaluation.get('cutoffs_f0', CUTOFFS_F0))
        self.cutoffs_f1 = check_cutoffs('cutoffs_f1', evaluation.get('cutoffs_f1', CUTOFFS_F1))
        self.claim_threshold = float(evaluation.get('claim_threshold', DEFAULT_CLAIM_THRESHOLD))
        if not 0.0 <= self.claim_threshold <= 1.0:
            raise ConfigError("claim_threshold must lie in [0, 1]")
        forced_k = evaluation.get('forced_k')
        self.forced_k = None if forced_k is None or forced_k is False else forced_k
        if self.forced_k is not None and (isinstance(self.forced_k, bool) or
                                          not isinstance(self.forced_k, int) or
                                          self.forced_k < 1):
            raise ConfigError("forced_k must be false or a positive integer")

        generation = dict(_section(settings, 'dataset_gen'))
        generation.setdefault('max_workers', self.max_workers)
        self.generation = GenerationOptions.from_settings(generation)

    @classmethod
    def from_settings(cls, settings, overrides=None):
        return cls(merge_settings(settings or {}, overrides))

    @classmethod
    def from_file(cls, path, overrides=None):
        return cls.from_settings(read_settings(path), overrides)

    def cutoffs(self, qa_set):
        """contextual cutoffs when every item needs passages"""
        if qa_set and all(item.flag == 1 for item in qa_set):
            return list(self.cutoffs_f1)
        return list(self.cutoffs_f0)

    def make_providers(self, gazetteer=None):
        """
        Returns
        -------
        ProviderSet
        """
        completer = make_completer(self.completion)

        analyzer = KeywordQueryAnalyzer(gazetteer)
        if self.analyzer == 'llm':
            if completer is None:
                raise ConfigError("the llm analyzer needs a completion provider")
            analyzer = LlmQueryAnalyzer(completer, analyzer)

        extractor = DefaultSubjectExtractor()
        if self.subject_extractor == 'llm':
            if completer is None:
                raise ConfigError("the llm subject extractor needs a completion provider")
            extractor = LlmSubjectExtractor(completer, extractor)

        return ProviderSet(make_embedder(self.embedding), completer, analyzer, extractor)

    def to_dict(self):
        embedding = self.embedding.to_dict()
        completion = self.completion.to_dict()
        for d in (embedding, completion):
            d.pop('role', None)
        return {
            'corpus_input_dir': self.corpus_input_dir,
            'corpus_store_dir': self.corpus_store_dir,
            'index_path': self.index_path,
            'output_dir': self.output_dir,
            'snippet_budget': self.snippet_budget,
            'max_workers': self.max_workers,
            'verbose': self.verbose,
            'providers': {
                EMBEDDING: embedding,
                COMPLETION: completion,
                'analyzer': self.analyzer,
                'subject_extractor': self.subject_extractor,
            },
            'retrieval': self.retrieval.to_dict(),
            'fusion': {'passages_per_fact': self.passages_per_fact,
                       'prompt_budget': self.prompt_budget},
            'eval': {'cutoffs_f0': self.cutoffs_f0, 'cutoffs_f1': self.cutoffs_f1,
                     'claim_threshold': self.claim_threshold,
                     'forced_k': self.forced_k or False},
            'dataset_gen': self.generation.to_dict(),
        }

    def dump(self):
        return yaml.safe_dump(self.to_dict(), default_flow_style=False)
