# satrag
# See full license in LICENSE.txt.

"""
Embedding, completion, subject extraction and query analysis providers.

Every provider has an in-process test double with the same interface so
the whole pipeline runs offline and deterministically.
"""

import hashlib
import json
import logging
import os
import re
import threading
import time

import numpy as np
import requests
from toolz import partition_all
from urllib.parse import urlparse

from .errors import ConfigError, EmptyCompletion, InputTooLong, NoSlots, ProviderFailure
from .errors import UnparseableSubject
from .graph.temporal import find_temporal, is_bare_period, normalize_temporal

logger = logging.getLogger(__name__)

EMBEDDING = 'embedding'
COMPLETION = 'completion'

MOCK_DIMENSION = 256

FNV_OFFSET = 2166136261
FNV_PRIME = 16777619

RETRY_ATTEMPTS = 3
RETRY_BACKOFF = 0.5

# prompt section marker shared with fusion.assemble_prompt
FACTS_HEADER = 'Facts:'
ECHO_PREFIX = 'ECHO:'


def digest(text, n=8):
    return hashlib.sha1(text.encode('utf-8')).hexdigest()[:n]


def tokenize(text):
    """lower-cased alphanumeric tokens"""
    return re.findall(r'[^\W_]+', (text or '').lower())


def fnv1a(token):
    """32 bit FNV-1a hash of the utf-8 bytes of token"""
    h = FNV_OFFSET
    for b in token.encode('utf-8'):
        h ^= b
        h = (h * FNV_PRIME) & 0xffffffff
    return h


def cosine(a, b):
    """cosine similarity; zero vectors have similarity 0 with everything"""
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def cosine_matrix(a, b):
    """
    pairwise cosine similarity between the rows of a (n x d) and b (m x d)

    Returns
    -------
    numpy.ndarray
        n x m
    """
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    na[na == 0] = 1.0
    nb[nb == 0] = 1.0
    return np.dot(a / na[:, None], (b / nb[:, None]).T)


class ProviderDescriptor(object):
    """
    Provider configuration

    Parameters
    ----------
    role : str
        'embedding' or 'completion'
    kind : str
        embedding: 'mock' or 'http'; completion: 'echo', 'scripted', 'http' or 'none'
    endpoint : str
        base url of an OpenAI-compatible server (http only)
    model : str
    timeout : float
        seconds per request
    dimension : int
        embedding dimension (required for embedding providers)
    api_key_env : str
        name of the environment variable holding the bearer token
    max_in_flight : int
        concurrent request limit
    batch_size : int
        texts per embedding request
    max_chars : int
        longest accepted input text
    responses : list of [marker, response]
        scripted completer table
    """

    def __init__(self, role, kind, endpoint=None, model=None, timeout=30.0, dimension=None,
                 api_key_env=None, max_in_flight=4, batch_size=64, max_chars=32000,
                 responses=None, default_response=None):
        self.role = role
        self.kind = kind
        self.endpoint = endpoint
        self.model = model
        self.timeout = float(timeout)
        self.dimension = dimension
        self.api_key_env = api_key_env
        self.max_in_flight = int(max_in_flight)
        self.batch_size = int(batch_size)
        self.max_chars = int(max_chars)
        self.responses = [tuple(r) for r in (responses or [])]
        self.default_response = default_response

        if role == EMBEDDING and kind == 'mock' and self.dimension is None:
            self.dimension = MOCK_DIMENSION

        self.validate()

    def validate(self):
        if self.role not in (EMBEDDING, COMPLETION):
            raise ConfigError("unknown provider role '%s'" % self.role)

        if self.role == EMBEDDING:
            kinds = ('mock', 'http')
        else:
            kinds = ('echo', 'scripted', 'http', 'none')
        if self.kind not in kinds:
            raise ConfigError("%s provider kind must be one of %s, not '%s'" %
                              (self.role, kinds, self.kind))

        if self.kind == 'http':
            url = urlparse(self.endpoint or '')
            if url.scheme not in ('http', 'https') or not url.netloc:
                raise ConfigError("%s provider endpoint is not a valid url: %r" %
                                  (self.role, self.endpoint))
            if not self.model:
                raise ConfigError("%s provider needs a model name" % self.role)

        if self.role == EMBEDDING and (not self.dimension or int(self.dimension) < 1):
            raise ConfigError("embedding provider needs a positive dimension")

        if self.timeout <= 0:
            raise ConfigError("provider timeout must be positive")
        if self.max_in_flight < 1:
            raise ConfigError("provider max_in_flight must be at least 1")

    @classmethod
    def from_settings(cls, role, settings):
        settings = dict(settings or {})
        if 'api_key' in settings:
            raise ConfigError("api_key must not be set in configuration, use api_key_env")
        kind = settings.pop('kind', 'mock' if role == EMBEDDING else 'echo')
        try:
            return cls(role, kind, **settings)
        except TypeError as e:
            raise ConfigError("bad %s provider settings: %s" % (role, e))

    def to_dict(self):
        d = dict(self.__dict__)
        d['responses'] = [list(r) for r in self.responses]
        return d


# embedding

class Embedder(object):

    dimension = None
    max_chars = None

    def embed(self, texts):
        """
        Embed texts

        Parameters
        ----------
        texts : sequence of str

        Returns
        -------
        numpy.ndarray
            len(texts) x dimension, rows in input order
        """
        texts = list(texts)
        if self.max_chars is not None:
            for t in texts:
                if len(t) > self.max_chars:
                    raise InputTooLong("text of %s chars exceeds provider limit of %s" %
                                       (len(t), self.max_chars))
        if not texts:
            return np.zeros((0, self.dimension))
        return self._embed(texts)

    def embed_one(self, text):
        return self.embed([text])[0]

    def _embed(self, texts):
        raise NotImplementedError()


class MockEmbedder(Embedder):
    """
    Hashed bag-of-words embedder

    Each token is hashed with FNV-1a into one of `dimension` buckets;
    bucket counts are L2-normalized. Text without tokens embeds to zeros.
    """

    def __init__(self, dimension=MOCK_DIMENSION, max_chars=None):
        self.dimension = dimension
        self.max_chars = max_chars

    def bucket(self, token):
        return fnv1a(token) % self.dimension

    def _embed(self, texts):
        vectors = np.zeros((len(texts), self.dimension))
        for i, text in enumerate(texts):
            for token in tokenize(text):
                vectors[i, self.bucket(token)] += 1.0
        norms = np.linalg.norm(vectors, axis=1)
        norms[norms == 0] = 1.0
        return vectors / norms[:, None]


class CountingEmbedder(Embedder):
    """wraps an embedder and counts calls and embedded texts"""

    def __init__(self, embedder):
        self.embedder = embedder
        self.dimension = embedder.dimension
        self.max_chars = embedder.max_chars
        self.calls = 0
        self.texts = 0
        self._lock = threading.Lock()

    def embed(self, texts):
        texts = list(texts)
        with self._lock:
            self.calls += 1
            self.texts += len(texts)
        return self.embedder.embed(texts)


class _HttpClient(object):
    """
    POST json to an OpenAI-compatible server

    Timeouts, connection errors and 5xx responses are retried with exponential
    backoff; 4xx responses fail at once.
    """

    def __init__(self, descriptor, session=None):
        self.descriptor = descriptor
        self.session = session or requests.Session()
        self._semaphore = threading.BoundedSemaphore(descriptor.max_in_flight)

    def headers(self):
        headers = {'Content-Type': 'application/json'}
        env = self.descriptor.api_key_env
        if env:
            key = os.environ.get(env)
            if key:
                headers['Authorization'] = 'Bearer %s' % key
            else:
                logger.warning("environment variable %s is not set, sending no token" % env)
        return headers

    def post(self, path, body):
        url = self.descriptor.endpoint.rstrip('/') + path
        error = None

        with self._semaphore:
            for attempt in range(RETRY_ATTEMPTS):
                if attempt:
                    time.sleep(RETRY_BACKOFF * 2 ** (attempt - 1))
                try:
                    response = self.session.post(url, json=body, headers=self.headers(),
                                                 timeout=self.descriptor.timeout)
                except requests.Timeout:
                    error = "timeout after %ss" % self.descriptor.timeout
                except requests.ConnectionError as e:
                    error = "connection error: %s" % e
                else:
                    if response.status_code >= 500:
                        error = "server error %s" % response.status_code
                    elif response.status_code >= 400:
                        logger.error("%s returned %s: %s" %
                                     (url, response.status_code, response.text[:200]))
                        raise ProviderFailure("%s returned status %s" %
                                              (url, response.status_code))
                    else:
                        try:
                            return response.json()
                        except ValueError:
                            raise ProviderFailure("%s returned a non-json body" % url)

                logger.warning("%s attempt %s/%s failed: %s" %
                               (url, attempt + 1, RETRY_ATTEMPTS, error))

        logger.error("%s failed after %s attempts: %s" % (url, RETRY_ATTEMPTS, error))
        raise ProviderFailure("%s failed after %s attempts: %s" % (url, RETRY_ATTEMPTS, error))


class HttpEmbedder(Embedder):
    """embeddings over the /v1/embeddings wire protocol"""

    def __init__(self, descriptor, session=None):
        self.descriptor = descriptor
        self.dimension = int(descriptor.dimension)
        self.max_chars = descriptor.max_chars
        self.client = _HttpClient(descriptor, session)

    def _embed(self, texts):
        rows = []
        for batch in partition_all(self.descriptor.batch_size, texts):
            body = self.client.post('/v1/embeddings',
                                    {'model': self.descriptor.model, 'input': list(batch)})
            try:
                data = sorted(body['data'], key=lambda d: d.get('index', 0))
                vectors = [d['embedding'] for d in data]
            except (KeyError, TypeError) as e:
                raise ProviderFailure("malformed embeddings response: %s" % e)
            if len(vectors) != len(batch):
                raise ProviderFailure("embeddings response has %s vectors for %s inputs" %
                                      (len(vectors), len(batch)))
            rows.extend(vectors)

        vectors = np.asarray(rows, dtype=np.float64)
        if vectors.shape[1] != self.dimension:
            raise ProviderFailure("embedding dimension %s, expected %s" %
                                  (vectors.shape[1], self.dimension))
        return vectors


# completion

class Completer(object):

    def complete(self, prompt):
        """
        Returns
        -------
        str
            full completion text, never empty
        """
        if not prompt or not prompt.strip():
            raise EmptyCompletion("empty prompt")
        text = self._complete(prompt)
        if not text or not text.strip():
            raise EmptyCompletion("provider returned an empty completion")
        return text

    def _complete(self, prompt):
        raise NotImplementedError()


def facts_section(prompt):
    """the lines following the Facts header, up to the next blank line"""
    lines = prompt.split('\n')
    try:
        start = lines.index(FACTS_HEADER) + 1
    except ValueError:
        return ''
    facts = []
    for line in lines[start:]:
        if not line.strip():
            break
        facts.append(line)
    return '\n'.join(facts)


class EchoCompleter(Completer):
    """returns the Facts section of the prompt verbatim, prefixed ECHO:"""

    def _complete(self, prompt):
        facts = facts_section(prompt)
        return ECHO_PREFIX + ('\n' + facts if facts else '')


class ScriptedCompleter(Completer):
    """
    Table driven completer

    The response of the first marker found in the prompt is returned, with
    {digest} replaced by a short hash of the prompt.
    """

    def __init__(self, responses, default=None):
        self.responses = list(responses.items()) if isinstance(responses, dict) \
            else [tuple(r) for r in responses]
        self.default = default

    def _complete(self, prompt):
        for marker, response in self.responses:
            if marker in prompt:
                return response.replace('{digest}', digest(prompt))
        if self.default is not None:
            return self.default.replace('{digest}', digest(prompt))
        raise EmptyCompletion("no scripted response matches the prompt")


class HttpCompleter(Completer):
    """completions over the /v1/chat/completions wire protocol"""

    def __init__(self, descriptor, session=None):
        self.descriptor = descriptor
        self.client = _HttpClient(descriptor, session)

    def _complete(self, prompt):
        if len(prompt) > self.descriptor.max_chars:
            raise InputTooLong("prompt of %s chars exceeds provider limit of %s" %
                               (len(prompt), self.descriptor.max_chars))
        body = self.client.post('/v1/chat/completions', {
            'model': self.descriptor.model,
            'messages': [{'role': 'user', 'content': prompt}],
        })
        try:
            return body['choices'][0]['message']['content']
        except (KeyError, IndexError, TypeError) as e:
            raise ProviderFailure("malformed chat completion response: %s" % e)


def make_embedder(descriptor):
    if descriptor.kind == 'mock':
        return MockEmbedder(int(descriptor.dimension))
    return HttpEmbedder(descriptor)


def make_completer(descriptor):
    """build a completer; kind 'none' means no generation (returns None)"""
    if descriptor.kind == 'none':
        return None
    if descriptor.kind == 'echo':
        return EchoCompleter()
    if descriptor.kind == 'scripted':
        return ScriptedCompleter(descriptor.responses, descriptor.default_response)
    return HttpCompleter(descriptor)


# subject extraction

class DefaultSubjectExtractor(object):
    """subject path is the document entity, or nothing"""

    def extract(self, doc_meta, context=None):
        return [doc_meta.entity] if doc_meta.entity else []


SUBJECT_PROMPT = """Identify the subject the following table cell describes, from the most
general to the most specific, as one line of the form: A > B > C

Document title: {title}
Document entity: {entity}
Context: {snippet}
Table caption: {caption}
Headers: {headers}

Subject:"""

MAX_SUBJECT_WORDS = 6


def parse_subject_path(text):
    """
    parse a one-line 'A > B > C' answer

    Raises UnparseableSubject for anything else (several lines, sentences).
    """
    lines = [l.strip() for l in (text or '').strip().split('\n') if l.strip()]
    if len(lines) != 1:
        raise UnparseableSubject("expected one line, got %s" % len(lines))
    line = re.sub(r'^subject\s*:\s*', '', lines[0], flags=re.IGNORECASE)
    if line.endswith(('.', '!', '?')):
        raise UnparseableSubject("answer looks like prose: %r" % line)
    parts = [p.strip() for p in line.split('>')]
    if not all(parts) or any(len(p.split()) > MAX_SUBJECT_WORDS for p in parts):
        raise UnparseableSubject("answer is not of the form 'A > B > C': %r" % line)
    return parts


class LlmSubjectExtractor(object):
    """
    Subject path from a completion provider, falling back to the default
    extractor when the answer cannot be parsed
    """

    def __init__(self, completer, fallback=None):
        self.completer = completer
        self.fallback = fallback or DefaultSubjectExtractor()
        self._cache = {}

    def extract(self, doc_meta, context=None):
        caption = getattr(context, 'table_caption', '') if context is not None else ''
        headers = ' / '.join(e.label for e in getattr(context, 'header_path', []) or [])
        prompt = SUBJECT_PROMPT.format(title=doc_meta.title, entity=doc_meta.entity,
                                       snippet=doc_meta.context_snippet, caption=caption,
                                       headers=headers)
        if prompt not in self._cache:
            answer = self.completer.complete(prompt)
            try:
                self._cache[prompt] = parse_subject_path(answer)
            except UnparseableSubject as e:
                logger.info("%s: %s, using default subject" % (doc_meta.doc_id, e))
                self._cache[prompt] = self.fallback.extract(doc_meta, context)
        return list(self._cache[prompt])


# query analysis

POINT_LOOKUP = 'point-lookup'
TEMPORAL_COMPARISON = 'temporal-comparison'
SUBJECT_BREAKDOWN = 'subject-breakdown'
INTENTS = (POINT_LOOKUP, TEMPORAL_COMPARISON, SUBJECT_BREAKDOWN)

COMPARISON_WORDS = {'growth', 'change', 'increase', 'decrease', 'compared', 'trend'}
BREAKDOWN_WORDS = {'breakdown', 'total', 'composition'}

STOPWORDS = {
    'a', 'an', 'the', 'of', 'in', 'on', 'at', 'for', 'to', 'by', 'from', 'with', 'and', 'or',
    'as', 'into', 'per', 'is', 'was', 'were', 'are', 'be', 'been', 'being', 'has', 'had',
    'have', 'did', 'does', 'do', 'what', 'when', 'which', 'who', 'whom', 'how', 'why', 'where',
    'much', 'many', 'its', 'their', 'his', 'her', 'this', 'that', 'these', 'those', 'it',
    'during', 'between', 'than', 'over', 'under', 'across', 'there', 'reported', 'report',
    'status', 'value', 'values', 'amount', 'level', 'figure', 'number', 'show', 'give', 'tell',
    'me', 'us', 'please', 'about', 'year', 'years', 'quarter', 'quarters', 'month', 'fiscal',
    'fy', 'since', 'after', 'before', 'rate', 'vs', 'versus',
    # comparisons and magnitudes
    'exceed', 'exceeded', 'exceeds', 'above', 'below', 'more', 'less', 'greater', 'higher',
    'lower', 'first', 'last', 'million', 'millions', 'billion', 'billions', 'thousand',
    'thousands', 'hundred', 'percent', 'mn', 'bn',
}

_WORD = re.compile(r"[^\W_]+(?:[&'.-][^\W_]+)*")


class Query(object):
    """
    Parameters
    ----------
    text : str
    contextual_flag : int
        0 when tables alone suffice, 1 when surrounding text is needed
    query_id : str, optional
    """

    def __init__(self, text, contextual_flag=0, query_id=None):
        if not text or not text.strip():
            raise NoSlots("empty query text")
        if contextual_flag not in (0, 1):
            raise NoSlots("contextual flag must be 0 or 1, not %r" % (contextual_flag, ))
        self.text = text
        self.contextual_flag = contextual_flag
        self.query_id = query_id

    def __repr__(self):
        return "Query(%r, f=%s)" % (self.text, self.contextual_flag)


class QuerySlots(object):

    def __init__(self, subject_hint=None, temporal_hint=None, attribute_hint=None,
                 intent=POINT_LOOKUP, temporal_value=None):
        if not (subject_hint or temporal_hint or attribute_hint):
            raise NoSlots("no subject, temporal or attribute hint")
        if intent not in INTENTS:
            raise NoSlots("unknown intent '%s'" % intent)
        self.subject_hint = subject_hint
        self.temporal_hint = temporal_hint
        self.attribute_hint = attribute_hint
        self.intent = intent
        self.temporal_value = temporal_value

    def to_dict(self):
        return {
            'subject_hint': self.subject_hint,
            'temporal_hint': self.temporal_hint,
            'attribute_hint': self.attribute_hint,
            'intent': self.intent,
        }

    def __repr__(self):
        return "QuerySlots(%s)" % self.to_dict()


def detect_intent(text):
    words = set(tokenize(text))
    if words & COMPARISON_WORDS:
        return TEMPORAL_COMPARISON
    if words & BREAKDOWN_WORDS:
        return SUBJECT_BREAKDOWN
    return POINT_LOOKUP


class KeywordQueryAnalyzer(object):
    """
    Rule based slot filling

    temporal hint: the first temporal mention (a bare "Q2" counts)
    subject hint: the longest gazetteer label found in the text or, without a
        gazetteer, the first run of capitalized words after the first word
    attribute hint: the remaining content words
    """

    def __init__(self, gazetteer=None):
        self.gazetteer = sorted(set(gazetteer or []), key=lambda s: (-len(s), s))

    def _gazetteer_subject(self, text):
        for label in self.gazetteer:
            m = re.search(r'(?<!\w)%s(?!\w)' % re.escape(label), text, re.IGNORECASE)
            if m:
                return m.group(0), m.span()
        return None, None

    def _capitalized_subject(self, text, temporal_span):
        words = [(m.group(0), m.span()) for m in _WORD.finditer(text)]
        run = []
        for word, span in words[1:]:
            if temporal_span and span[0] < temporal_span[1] and temporal_span[0] < span[1]:
                if run:
                    break
                continue
            possessive = word.endswith("'s")
            bare = word[:-2] if possessive else word
            capitalized = bare[:1].isupper() and re.match(r'^[^\W_]+$', bare) and \
                not is_bare_period(bare) and not normalize_temporal(bare)
            if capitalized:
                run.append((bare, (span[0], span[0] + len(bare))))
                if possessive:
                    break
            elif run:
                break
        if not run:
            return None, None
        return ' '.join(w for w, _ in run), (run[0][1][0], run[-1][1][1])

    def analyze(self, query):
        text = query.text

        mention, value = find_temporal(text)
        temporal_span = None
        if mention:
            start = text.find(mention)
            temporal_span = (start, start + len(mention))

        subject, subject_span = self._gazetteer_subject(text) if self.gazetteer else (None, None)
        if subject is None:
            subject, subject_span = self._capitalized_subject(text, temporal_span)

        # attribute: content words outside the subject and temporal mentions
        words = []
        for m in _WORD.finditer(text):
            span = m.span()
            if any(s and span[0] < s[1] and s[0] < span[1] for s in (subject_span, temporal_span)):
                continue
            word = m.group(0)
            if word.endswith("'s"):
                word = word[:-2]
            lower = word.lower()
            if lower in STOPWORDS or lower in COMPARISON_WORDS or lower in ('breakdown',
                                                                            'composition'):
                continue
            if re.match(r'^[\d.,%-]+$', word):
                continue
            words.append(word)
        attribute = ' '.join(words) or None

        return QuerySlots(subject_hint=subject,
                          temporal_hint=mention,
                          attribute_hint=attribute,
                          intent=detect_intent(text),
                          temporal_value=value or None)


ANALYZER_PROMPT = """Split the question into the parts a table lookup needs. Answer with one
JSON object with keys "subject", "temporal", "attribute" (strings or null) and "intent"
(one of "point-lookup", "temporal-comparison", "subject-breakdown").

Question: {question}

JSON:"""


class LlmQueryAnalyzer(object):
    """query slots from a completion provider, falling back to keyword rules"""

    def __init__(self, completer, fallback=None):
        self.completer = completer
        self.fallback = fallback or KeywordQueryAnalyzer()

    def analyze(self, query):
        answer = self.completer.complete(ANALYZER_PROMPT.format(question=query.text))
        try:
            body = json.loads(answer[answer.index('{'):answer.rindex('}') + 1])
            temporal = body.get('temporal') or None
            value = normalize_temporal(temporal) if temporal else None
            return QuerySlots(subject_hint=body.get('subject') or None,
                              temporal_hint=temporal,
                              attribute_hint=body.get('attribute') or None,
                              intent=body.get('intent') or POINT_LOOKUP,
                              temporal_value=value or None)
        except (ValueError, AttributeError, NoSlots) as e:
            logger.info("unusable analyzer answer (%s), using keyword rules" % e)
            return self.fallback.analyze(query)


class ProviderSet(object):
    """
    The providers a pipeline run needs

    completer may be None (no generation); analyzer and subject_extractor
    default to the deterministic rules.
    """

    def __init__(self, embedder, completer=None, analyzer=None, subject_extractor=None):
        self.embedder = embedder
        self.completer = completer
        self.analyzer = analyzer or KeywordQueryAnalyzer()
        self.subject_extractor = subject_extractor or DefaultSubjectExtractor()

    @classmethod
    def mock(cls, completer=None, gazetteer=None):
        return cls(MockEmbedder(), completer, KeywordQueryAnalyzer(gazetteer))
