# satrag
# See full license in LICENSE.txt.

import os

import pytest

from .. import config
from ..config import AppConfig
from ..errors import ConfigError
from ..evaluate.harness import QAItem, CUTOFFS_F0, CUTOFFS_F1
from ..providers import LlmQueryAnalyzer, LlmSubjectExtractor, MockEmbedder, EchoCompleter


SETTINGS_FILE = os.path.join(os.path.dirname(__file__), 'configs', 'settings.yaml')


def test_defaults():
    cfg = AppConfig.from_settings({})

    assert cfg.output_dir == 'output'
    assert cfg.retrieval.top_k == 5
    assert (cfg.cutoffs_f0, cfg.cutoffs_f1) == (CUTOFFS_F0, CUTOFFS_F1)
    assert cfg.forced_k is None
    assert cfg.embedding.kind == 'mock'
    assert cfg.completion.kind == 'echo'
    assert cfg.generation.max_workers == 4


def test_from_file():
    cfg = AppConfig.from_file(SETTINGS_FILE, {'retrieval': {'top_k': 8}, 'max_workers': 2})

    assert cfg.index_path == 'output/sat_graph.h5'
    assert cfg.retrieval.top_k == 8
    assert cfg.retrieval.similarity_threshold == 0.35
    assert cfg.generation.associations == ['same-date', 'same-subject', 'same-entity', 'random']
    assert cfg.generation.max_workers == 2
    assert cfg.verbose is False

    # the dump reads back into the same configuration
    again = AppConfig.from_settings(cfg.to_dict())
    assert again.to_dict() == cfg.to_dict()
    assert 'retrieval:' in cfg.dump()


def test_read_settings(tmpdir):
    with pytest.raises(ConfigError):
        config.read_settings(str(tmpdir.join('missing.yaml')))

    empty = tmpdir.join('empty.yaml')
    empty.write('')
    assert config.read_settings(str(empty)) == {}

    listing = tmpdir.join('list.yaml')
    listing.write('- a\n- b\n')
    with pytest.raises(ConfigError):
        config.read_settings(str(listing))

    broken = tmpdir.join('broken.yaml')
    broken.write('retrieval: [top_k\n')
    with pytest.raises(ConfigError):
        config.read_settings(str(broken))


def test_api_keys_are_rejected():
    settings = {'providers': {'completion': {'kind': 'echo', 'api_key': 'secret'}}}

    assert config.find_api_keys(settings) == ['providers.completion.api_key']
    assert config.find_api_keys({'a': [{'api_key': 1}]}) == ['a[0].api_key']

    with pytest.raises(ConfigError) as excinfo:
        AppConfig.from_settings(settings)
    assert 'api_key_env' in str(excinfo.value)


def test_merge_settings():
    settings = {'retrieval': {'top_k': 5, 'mode': 'sat-graph'}, 'verbose': False}

    merged = config.merge_settings(settings, {'retrieval': {'top_k': 9}, 'verbose': True})

    assert merged == {'retrieval': {'top_k': 9, 'mode': 'sat-graph'}, 'verbose': True}
    assert settings['retrieval']['top_k'] == 5


@pytest.mark.parametrize("settings", [
    {'colour': 'blue'},
    {'providers': {'analyzer': 'regex'}},
    {'providers': {'subject_extractor': 'oracle'}},
    {'providers': {'reranker': {}}},
    {'retrieval': ['top_k']},
    {'retrieval': {'top_k': 0}},
    {'fusion': {'prompt_budget': 0}},
    {'eval': {'cutoffs_f0': [3, 1]}},
    {'eval': {'cutoffs_f0': []}},
    {'eval': {'cutoffs_f1': [0, 4]}},
    {'eval': {'claim_threshold': 1.5}},
    {'eval': {'forced_k': 0}},
    {'eval': {'forced_k': -1}},
    {'eval': {'forced_k': 'all'}},
    {'eval': {'forced_k': True}},
    {'dataset_gen': {'associations': ['similar']}},
])
def test_bad_settings(settings):
    with pytest.raises(ConfigError):
        AppConfig.from_settings(settings)


def test_forced_k():
    assert AppConfig.from_settings({'eval': {'forced_k': None}}).forced_k is None
    assert AppConfig.from_settings({'eval': {'forced_k': False}}).forced_k is None
    assert AppConfig.from_settings({'eval': {'forced_k': 3}}).forced_k == 3


def test_cutoffs_follow_the_qa_set():
    cfg = AppConfig.from_settings({'eval': {'cutoffs_f0': [1, 2], 'cutoffs_f1': [5, 10]}})

    assert cfg.cutoffs([QAItem('a', 'q', 1), QAItem('b', 'q', 1)]) == [5, 10]
    assert cfg.cutoffs([QAItem('a', 'q', 1), QAItem('b', 'q', 0)]) == [1, 2]


def test_make_providers():
    providers = AppConfig.from_settings({}).make_providers(gazetteer=['Acme Holdings'])
    assert isinstance(providers.embedder, MockEmbedder)
    assert isinstance(providers.completer, EchoCompleter)

    llm = AppConfig.from_settings({'providers': {'analyzer': 'llm',
                                                 'subject_extractor': 'llm'}})
    providers = llm.make_providers()
    assert isinstance(providers.analyzer, LlmQueryAnalyzer)
    assert isinstance(providers.subject_extractor, LlmSubjectExtractor)

    no_llm = AppConfig.from_settings({'providers': {'completion': {'kind': 'none'},
                                                    'analyzer': 'llm'}})
    with pytest.raises(ConfigError):
        no_llm.make_providers()
    assert AppConfig.from_settings({'providers': {'completion': {'kind': 'none'}}}) \
        .make_providers().completer is None
