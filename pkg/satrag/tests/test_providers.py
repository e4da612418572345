# satrag
# See full license in LICENSE.txt.

import numpy as np
import numpy.testing as npt
import pytest
import requests

from .. import providers
from ..cellgroups import DocumentMetadata
from ..errors import ConfigError, EmptyCompletion, InputTooLong, NoSlots, ProviderFailure
from ..errors import UnparseableSubject
from ..providers import MockEmbedder, ProviderDescriptor, KeywordQueryAnalyzer, Query
from ..providers import EMBEDDING, COMPLETION


class FakeResponse(object):

    def __init__(self, status_code, body=None):
        self.status_code = status_code
        self.body = body
        self.text = str(body)

    def json(self):
        if self.body is None:
            raise ValueError("no json")
        return self.body


class FakeSession(object):
    """replays a list of responses (or exceptions) and records the requests"""

    def __init__(self, responses):
        self.responses = list(responses)
        self.requests = []

    def post(self, url, json=None, headers=None, timeout=None):
        self.requests.append((url, json, headers))
        r = self.responses.pop(0)
        if isinstance(r, Exception):
            raise r
        return r


@pytest.fixture
def no_sleep(monkeypatch):
    monkeypatch.setattr(providers.time, 'sleep', lambda s: None)


def http_descriptor(role=EMBEDDING, **kwargs):
    settings = dict(kind='http', endpoint='http://localhost:8000', model='m')
    if role == EMBEDDING:
        settings['dimension'] = 2
    settings.update(kwargs)
    return ProviderDescriptor.from_settings(role, settings)


def test_mock_embedder():
    e = MockEmbedder()

    v = e.embed(['Net income 2019', 'net INCOME, 2019', ''])
    assert v.shape == (3, 256)
    npt.assert_allclose(v[0], v[1])
    npt.assert_allclose(np.linalg.norm(v[0]), 1.0)
    assert not v[2].any()

    assert e.embed([]).shape == (0, 256)
    assert providers.cosine(v[0], v[2]) == 0.0


def test_mock_embedder_limit():
    with pytest.raises(InputTooLong):
        MockEmbedder(max_chars=5).embed(['too long for it'])


def test_cosine_matrix():
    a = np.array([[1.0, 0.0], [0.0, 0.0]])
    b = np.array([[1.0, 1.0], [0.0, 2.0]])

    sim = providers.cosine_matrix(a, b)
    npt.assert_allclose(sim, [[np.sqrt(0.5), 0.0], [0.0, 0.0]])


def test_counting_embedder():
    e = providers.CountingEmbedder(MockEmbedder())
    e.embed(['a', 'b'])
    e.embed_one('c')
    assert (e.calls, e.texts) == (2, 3)


def test_descriptor_validation():
    with pytest.raises(ConfigError):
        ProviderDescriptor.from_settings(EMBEDDING, {'kind': 'echo'})
    with pytest.raises(ConfigError):
        ProviderDescriptor.from_settings(COMPLETION, {'kind': 'http', 'endpoint': 'localhost',
                                                      'model': 'm'})
    with pytest.raises(ConfigError):
        ProviderDescriptor.from_settings(COMPLETION, {'kind': 'http',
                                                      'endpoint': 'http://localhost'})
    with pytest.raises(ConfigError):
        ProviderDescriptor.from_settings(COMPLETION, {'api_key': 'secret'})
    with pytest.raises(ConfigError):
        ProviderDescriptor.from_settings(COMPLETION, {'kind': 'echo', 'colour': 'blue'})

    d = ProviderDescriptor.from_settings(EMBEDDING, None)
    assert (d.kind, d.dimension) == ('mock', 256)
    assert ProviderDescriptor.from_settings(COMPLETION, {}).kind == 'echo'
    assert providers.make_completer(ProviderDescriptor(COMPLETION, 'none')) is None


def test_http_embedder(monkeypatch):
    monkeypatch.setenv('SATRAG_TEST_KEY', 'token')
    session = FakeSession([
        FakeResponse(200, {'data': [{'index': 1, 'embedding': [0.0, 1.0]},
                                    {'index': 0, 'embedding': [1.0, 0.0]}]}),
        FakeResponse(200, {'data': [{'index': 0, 'embedding': [0.5, 0.5]}]}),
    ])
    e = providers.HttpEmbedder(http_descriptor(batch_size=2, api_key_env='SATRAG_TEST_KEY'),
                               session)

    v = e.embed(['a', 'b', 'c'])

    npt.assert_allclose(v, [[1.0, 0.0], [0.0, 1.0], [0.5, 0.5]])
    url, body, headers = session.requests[0]
    assert url == 'http://localhost:8000/v1/embeddings'
    assert body == {'model': 'm', 'input': ['a', 'b']}
    assert headers['Authorization'] == 'Bearer token'


def test_http_retries_server_errors(no_sleep):
    session = FakeSession([
        FakeResponse(503),
        requests.Timeout(),
        FakeResponse(200, {'choices': [{'message': {'content': 'fine'}}]}),
    ])
    c = providers.HttpCompleter(http_descriptor(COMPLETION), session)

    assert c.complete('hello') == 'fine'
    assert len(session.requests) == 3


def test_http_gives_up(no_sleep):
    session = FakeSession([FakeResponse(500)] * providers.RETRY_ATTEMPTS)
    c = providers.HttpCompleter(http_descriptor(COMPLETION), session)

    with pytest.raises(ProviderFailure) as excinfo:
        c.complete('hello')
    assert 'after 3 attempts' in str(excinfo.value)
    assert excinfo.value.exit_code == 2


def test_http_client_errors_fail_at_once(no_sleep):
    session = FakeSession([FakeResponse(401, {'error': 'denied'})])
    c = providers.HttpCompleter(http_descriptor(COMPLETION), session)

    with pytest.raises(ProviderFailure):
        c.complete('hello')
    assert len(session.requests) == 1


def test_http_malformed_bodies(no_sleep):
    c = providers.HttpCompleter(http_descriptor(COMPLETION),
                                FakeSession([FakeResponse(200, {'choices': []})]))
    with pytest.raises(ProviderFailure):
        c.complete('hello')

    e = providers.HttpEmbedder(http_descriptor(),
                               FakeSession([FakeResponse(200, {'data': [
                                   {'index': 0, 'embedding': [1.0, 0.0, 0.0]}]})]))
    with pytest.raises(ProviderFailure):
        e.embed(['a'])

    with pytest.raises(InputTooLong):
        providers.HttpCompleter(http_descriptor(COMPLETION, max_chars=3),
                                FakeSession([])).complete('hello')


def test_echo_completer():
    prompt = "Answer.\n\nFacts:\n[F1] a\n[F2] b\n\nPassages:\n[P1] c\n"
    assert providers.EchoCompleter().complete(prompt) == 'ECHO:\n[F1] a\n[F2] b'
    assert providers.EchoCompleter().complete('no facts') == 'ECHO:'

    with pytest.raises(EmptyCompletion):
        providers.EchoCompleter().complete('  ')


def test_scripted_completer():
    c = providers.ScriptedCompleter([('Subject:', 'Acme > Europe'), ('Cells:', 'q {digest}')])

    assert c.complete('... Subject:') == 'Acme > Europe'
    assert c.complete('Cells: x') == 'q %s' % providers.digest('Cells: x')
    with pytest.raises(EmptyCompletion):
        c.complete('nothing matches')


def test_parse_subject_path():
    assert providers.parse_subject_path('Acme > Europe > Retail') == ['Acme', 'Europe', 'Retail']
    assert providers.parse_subject_path('Subject: Acme') == ['Acme']

    for bad in ['Acme\nEurope', 'The subject is Acme.', 'Acme > > Europe', '']:
        with pytest.raises(UnparseableSubject):
            providers.parse_subject_path(bad)


def test_llm_subject_extractor():
    meta = DocumentMetadata('acme', 'Acme report', 'Acme Holdings')

    extractor = providers.LlmSubjectExtractor(
        providers.ScriptedCompleter([('Subject:', 'Acme Holdings > Europe')]))
    assert extractor.extract(meta) == ['Acme Holdings', 'Europe']

    fallback = providers.LlmSubjectExtractor(
        providers.ScriptedCompleter([('Subject:', 'I think it is Acme.')]))
    assert fallback.extract(meta) == ['Acme Holdings']

    assert providers.DefaultSubjectExtractor().extract(DocumentMetadata('x')) == []


def test_keyword_analyzer_with_gazetteer():
    analyzer = KeywordQueryAnalyzer(['Acme', 'Acme Holdings'])

    slots = analyzer.analyze(Query("What was the net income of Acme Holdings in 2019?"))

    assert slots.subject_hint == 'Acme Holdings'
    assert slots.temporal_hint == '2019'
    assert slots.temporal_value.key == '2019'
    assert slots.attribute_hint == 'net income'
    assert slots.intent == providers.POINT_LOOKUP


def test_keyword_analyzer_without_gazetteer():
    analyzer = KeywordQueryAnalyzer()

    slots = analyzer.analyze(Query("How did Cobalt Bank's revenue change in Q2 2019?"))
    assert slots.subject_hint == 'Cobalt Bank'
    assert slots.temporal_value.key == '2019-Q2'
    assert slots.attribute_hint == 'revenue'
    assert slots.intent == providers.TEMPORAL_COMPARISON

    slots = analyzer.analyze(Query("breakdown of revenue by region in Q3"))
    assert slots.temporal_hint == 'Q3'
    assert slots.temporal_value is None
    assert slots.intent == providers.SUBJECT_BREAKDOWN


def test_no_slots():
    with pytest.raises(NoSlots):
        Query('   ')
    with pytest.raises(NoSlots):
        Query('revenue', contextual_flag=2)
    with pytest.raises(NoSlots):
        KeywordQueryAnalyzer().analyze(Query('what was it in the?'))


def test_llm_analyzer():
    response = ('{"subject": "Acme", "temporal": "FY 2019", "attribute": "revenue", '
                '"intent": "point-lookup"}')
    completer = providers.ScriptedCompleter([('JSON:', response)])
    slots = providers.LlmQueryAnalyzer(completer).analyze(Query('revenue of acme in fy2019'))
    assert slots.subject_hint == 'Acme'
    assert slots.temporal_value.key == '2019'

    garbled = providers.ScriptedCompleter([('JSON:', 'no idea')])
    slots = providers.LlmQueryAnalyzer(garbled).analyze(Query('What was the revenue in 2019?'))
    assert slots.attribute_hint == 'revenue'
