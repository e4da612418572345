# satrag
# See full license in LICENSE.txt.

"""
Graph navigation retrieval

A query is split into subject, temporal and attribute hints. Subject and temporal
hints drive a top-down traversal to the attributes anchored under them; an
attribute hint drives a bottom-up traversal to the contexts it is anchored at.
The two candidate sets are intersected into composite keys, the leaves under
those keys are scored against the query, and structural neighbors of the
focal facts are added according to the query intent.
"""

import logging

import numpy as np

from . import tracing
from .chunks import ChunkIndex
from .errors import AnchorNotResolved, ConfigError, EmptyIntersection, NoSlots
from .graph.sat import linearize_key
from .providers import Query, QuerySlots, cosine_matrix
from .providers import POINT_LOOKUP, TEMPORAL_COMPARISON, SUBJECT_BREAKDOWN

logger = logging.getLogger(__name__)

SAT_GRAPH = 'sat-graph'
CHUNK_BASELINE = 'chunk-baseline'
MODES = (SAT_GRAPH, CHUNK_BASELINE)

DEFAULT_THRESHOLD = 0.35
HOP_DECAY = 0.9

__all__ = ['Query', 'QuerySlots', 'RetrievalConfig', 'EvidenceTuple', 'RetrievalResult',
           'NodeIndex', 'Retriever', 'analyze_query', 'forward_traverse', 'reverse_traverse',
           'intersect_paths', 'score_candidates', 'expand_neighbors', 'retrieve']


class RetrievalConfig(object):

    FIELDS = ('top_k', 'similarity_threshold', 'expansion_radius', 'enable_sne',
              'enable_fusion', 'mode')

    def __init__(self, top_k=5, similarity_threshold=DEFAULT_THRESHOLD, expansion_radius=1,
                 enable_sne=True, enable_fusion=True, mode=SAT_GRAPH):
        self.top_k = top_k
        self.similarity_threshold = similarity_threshold
        self.expansion_radius = expansion_radius
        self.enable_sne = enable_sne
        self.enable_fusion = enable_fusion
        self.mode = mode
        self.validate()

    def validate(self):
        if not isinstance(self.top_k, int) or self.top_k < 1:
            raise ConfigError("top_k must be a positive integer, not %r" % (self.top_k, ))
        if not 0.0 <= float(self.similarity_threshold) <= 1.0:
            raise ConfigError("similarity_threshold must lie in [0, 1], not %r" %
                              (self.similarity_threshold, ))
        if not isinstance(self.expansion_radius, int) or self.expansion_radius < 0:
            raise ConfigError("expansion_radius must be a non-negative integer, not %r" %
                              (self.expansion_radius, ))
        if self.mode not in MODES:
            raise ConfigError("mode must be one of %s, not %r" % (MODES, self.mode))

    @classmethod
    def from_settings(cls, settings):
        settings = dict(settings or {})
        unknown = set(settings) - set(cls.FIELDS)
        if unknown:
            raise ConfigError("unknown retrieval settings %s" % sorted(unknown))
        return cls(**settings)

    def replace(self, **kwargs):
        d = self.to_dict()
        d.update(kwargs)
        return RetrievalConfig(**d)

    def to_dict(self):
        return {f: getattr(self, f) for f in self.FIELDS}

    def __eq__(self, other):
        return isinstance(other, RetrievalConfig) and self.to_dict() == other.to_dict()

    def __repr__(self):
        return "RetrievalConfig(%s)" % self.to_dict()


class EvidenceTuple(object):
    """
    One retrieved fact (subject, temporal, attribute, value, source table)
    with the labels needed to state it and the cell it came from
    """

    __slots__ = ('subject', 'temporal', 'attribute', 'value', 'source_table', 'cell_id',
                 'score', 'doc_id', 'subject_label', 'temporal_label', 'attribute_label',
                 'undated', 'hop')

    def __init__(self, subject, temporal, attribute, value, source_table, cell_id, score,
                 doc_id=None, subject_label='', temporal_label='', attribute_label='',
                 undated=False, hop=0):
        self.subject = subject
        self.temporal = temporal
        self.attribute = attribute
        self.value = value
        self.source_table = source_table
        self.cell_id = cell_id
        self.score = score
        self.doc_id = doc_id
        self.subject_label = subject_label
        self.temporal_label = temporal_label
        self.attribute_label = attribute_label
        self.undated = undated
        self.hop = hop

    @property
    def key(self):
        return self.subject, self.temporal, self.attribute

    @classmethod
    def from_leaf(cls, g, leaf, score, hop=0):
        s, t, a = leaf.composite_key
        temporal = g.temporals[t]
        return cls(s, t, a, leaf.value, leaf.table_id, leaf.cell_id, score,
                   doc_id=leaf.doc_id,
                   subject_label=g.subjects[s].label,
                   temporal_label=temporal.raw_label,
                   attribute_label=g.attributes[a].label,
                   undated=temporal.undated,
                   hop=hop)

    def __repr__(self):
        return "EvidenceTuple(%s, %r, %.4f)" % (self.cell_id, self.value, self.score)


class RetrievalResult(object):
    """
    tuples (graph mode) or chunks (chunk-baseline mode), plus a diagnostics record
    """

    def __init__(self, tuples=None, chunks=None, diagnostics=None, slots=None,
                 mode=SAT_GRAPH):
        self.tuples = list(tuples or [])
        self.chunks = list(chunks or [])
        self.diagnostics = diagnostics or {}
        self.slots = slots
        self.mode = mode

    def evidence_ids(self):
        """ranked retrieval unit ids: cell ids, or chunk ids in chunk mode"""
        if self.mode == CHUNK_BASELINE:
            return [c.chunk_id for c in self.chunks]
        return [t.cell_id for t in self.tuples]

    def evidence_cells(self):
        """cell ids contributed by each ranked unit"""
        if self.mode == CHUNK_BASELINE:
            return [set(c.chunk.cell_ids) for c in self.chunks]
        return [{t.cell_id} for t in self.tuples]

    def __len__(self):
        return len(self.chunks) if self.mode == CHUNK_BASELINE else len(self.tuples)


class NodeIndex(object):
    """
    Embeddings of every node label of a graph, computed once

    A hint resolves to the single node with the highest cosine to the hint,
    provided it reaches the similarity threshold.
    """

    def __init__(self, g, embedder):
        self.g = g
        self.embedder = embedder
        self.ids = {}
        self.vectors = {}
        for kind, nodes in (('subject', g.subjects), ('temporal', g.temporals),
                            ('attribute', g.attributes)):
            ids = sorted(nodes)
            self.ids[kind] = ids
            self.vectors[kind] = embedder.embed([nodes[i].label for i in ids])
        self.temporal_by_key = {}
        for i in sorted(g.temporals):
            self.temporal_by_key.setdefault(g.temporals[i].normalized.key, i)

    def resolve(self, kind, hint, threshold, temporal_value=None):
        """
        Parameters
        ----------
        kind : str
            'subject', 'temporal' or 'attribute'
        hint : str
        threshold : float
        temporal_value : TemporalValue, optional
            a parsed temporal hint resolves by canonical value before any embedding

        Returns
        -------
        node_id : str
        """
        if kind == 'temporal' and temporal_value is not None:
            node = self.temporal_by_key.get(temporal_value.key)
            if node is not None:
                return node

        ids = self.ids[kind]
        if not ids:
            raise AnchorNotResolved("no %s nodes to resolve %r against" % (kind, hint))

        scores = cosine_matrix(self.embedder.embed([hint]), self.vectors[kind])[0]
        # first maximum, ids are sorted
        best = int(np.argmax(scores))
        if scores[best] < threshold:
            raise AnchorNotResolved("%s hint %r: best match %r scores %.3f < %.3f" %
                                    (kind, hint, self.node_label(kind, ids[best]), scores[best],
                                     threshold))
        return ids[best]

    def node_label(self, kind, node):
        nodes = {'subject': self.g.subjects, 'temporal': self.g.temporals,
                 'attribute': self.g.attributes}[kind]
        return nodes[node].label


class ForwardCandidates(object):
    """
    attributes anchored under the resolved subject / temporal subtrees

    subjects and temporals hold the descendant sets the attributes were
    found under, or None when that dimension is unconstrained.
    """

    def __init__(self, attributes, subjects=None, temporals=None):
        self.attributes = set(attributes)
        self.subjects = subjects
        self.temporals = temporals

    def admits(self, s, t):
        return (self.subjects is None or s in self.subjects) and \
            (self.temporals is None or t in self.temporals)

    def __len__(self):
        return len(self.attributes)


class ReverseCandidates(object):
    """the resolved attribute and the (subject, temporal) anchors it hangs from"""

    def __init__(self, attribute, anchors):
        self.attribute = attribute
        self.anchors = set(anchors)

    def __len__(self):
        return len(self.anchors)


def analyze_query(q, analyzer):
    """fill the query slots; raises NoSlots when no hint can be extracted"""
    return analyzer.analyze(q)


def _node_index(g, embedder, node_index):
    return node_index if node_index is not None else NodeIndex(g, embedder)


def forward_traverse(g, subject_hint, temporal_hint, embedder,
                     threshold=DEFAULT_THRESHOLD, node_index=None, temporal_value=None):
    """
    Top-down traversal from subject and temporal anchors

    Returns the attributes with an anchor in descendants(s) x descendants(t); a
    missing hint leaves that dimension unconstrained. Raises AnchorNotResolved
    when no hint resolves.

    Returns
    -------
    ForwardCandidates
    """
    index = _node_index(g, embedder, node_index)

    subjects = temporals = None
    if subject_hint:
        subjects = g.subject_descendants(index.resolve('subject', subject_hint, threshold))
    if temporal_hint:
        temporals = g.temporal_descendants(
            index.resolve('temporal', temporal_hint, threshold, temporal_value))
    if subjects is None and temporals is None:
        raise AnchorNotResolved("no subject or temporal hint to traverse from")

    candidates = ForwardCandidates([], subjects, temporals)
    for a in g.attributes.values():
        if any(candidates.admits(s, t) for s, t in a.anchors):
            candidates.attributes.add(a.node_id)
    return candidates


def reverse_traverse(g, attribute_hint, embedder, threshold=DEFAULT_THRESHOLD, node_index=None):
    """
    Bottom-up traversal from an attribute to every (subject, temporal) anchor

    Returns
    -------
    ReverseCandidates
    """
    if not attribute_hint:
        raise AnchorNotResolved("no attribute hint")
    index = _node_index(g, embedder, node_index)
    a = index.resolve('attribute', attribute_hint, threshold)
    return ReverseCandidates(a, g.attributes[a].anchors)


def _forward_keys(g, forward):
    return set(k for k in g.index
               if k[2] in forward.attributes and forward.admits(k[0], k[1]))


def _reverse_keys(g, reverse):
    return set((s, t, reverse.attribute) for s, t in reverse.anchors
               if g.index.get((s, t, reverse.attribute)))


def intersect_paths(forward, reverse, g):
    """
    Composite keys consistent with both traversals

    With both sides, keep the keys (s, t, a) of the reverse attribute whose
    context is one of its anchors, whose attribute is a forward candidate and
    whose context lies under the forward anchors. With one side, expand it into
    its keys. Only keys holding leaves are returned.

    Raises EmptyIntersection when nothing survives.
    """
    if forward is None and reverse is None:
        raise EmptyIntersection("no traversal ran")

    if reverse is None:
        keys = _forward_keys(g, forward)
    elif forward is None:
        keys = _reverse_keys(g, reverse)
    else:
        keys = set(k for k in _reverse_keys(g, reverse)
                   if k[2] in forward.attributes and forward.admits(k[0], k[1]))

    keys = set(k for k in keys if g.index.get(k))
    if not keys:
        raise EmptyIntersection("no composite key satisfies both traversals")
    return keys


def _rank(tuples):
    return sorted(tuples, key=lambda t: (-t.score, t.cell_id))


def score_candidates(keys, q, embedder, g, key_vectors=None):
    """
    One EvidenceTuple per leaf under the keys, scored by the cosine between the
    query and 'subject temporal attribute', clipped to [0, 1]

    Parameters
    ----------
    keys : collection of composite keys
    q : Query
    embedder : Embedder
    g : SATGraph
    key_vectors : dict, optional
        cache of key -> embedding, filled in place

    Returns
    -------
    list of EvidenceTuple
        descending score, ties by cell_id
    """
    keys = sorted(keys)
    if not keys:
        return []

    cache = key_vectors if key_vectors is not None else {}
    missing = [k for k in keys if k not in cache]
    if missing:
        for k, v in zip(missing, embedder.embed([linearize_key(g, k) for k in missing])):
            cache[k] = v

    scores = cosine_matrix(embedder.embed([q.text]), np.vstack([cache[k] for k in keys]))[0]
    scores = np.clip(scores, 0.0, 1.0)

    tuples = []
    for k, score in zip(keys, scores):
        tuples.extend(EvidenceTuple.from_leaf(g, leaf, float(score)) for leaf in g.leaves_for(k))
    return _rank(tuples)


def expand_neighbors(g, focal, intent, radius):
    """
    Structural neighbors of a focal tuple

    temporal-comparison: leaves of (s, t', a) for sibling temporal nodes t' within
    +-radius chronological positions of t. subject-breakdown: leaves of (s', t, a)
    for sibling subjects s'. point-lookup: nothing. Each hop decays the score by 0.9.

    Returns
    -------
    list of EvidenceTuple
    """
    if radius < 1 or intent == POINT_LOOKUP:
        return []

    s, t, a = focal.key
    neighbors = []

    if intent == TEMPORAL_COMPARISON:
        siblings = g.temporal_siblings(t)
        pos = siblings.index(t)
        for i in range(max(0, pos - radius), min(len(siblings), pos + radius + 1)):
            if i == pos:
                continue
            hop = abs(i - pos)
            for leaf in g.leaves_for((s, siblings[i], a)):
                neighbors.append(EvidenceTuple.from_leaf(g, leaf, focal.score * HOP_DECAY ** hop,
                                                         hop=hop))

    elif intent == SUBJECT_BREAKDOWN:
        for sibling in g.subject_siblings(s):
            if sibling == s:
                continue
            for leaf in g.leaves_for((sibling, t, a)):
                neighbors.append(EvidenceTuple.from_leaf(g, leaf, focal.score * HOP_DECAY, hop=1))

    return neighbors


class Retriever(object):
    """
    Retrieval over one graph (and optionally its corpus, for the chunk baseline)

    Node label embeddings, key embeddings and the chunk index are computed once
    and reused across queries; the graph is never modified.
    """

    def __init__(self, g, providers, corpus=None, chunk_index=None):
        self.g = g
        self.providers = providers
        self.corpus = corpus
        self._node_index = None
        self._chunk_index = chunk_index
        self.key_vectors = {}

    @property
    def node_index(self):
        if self._node_index is None:
            self._node_index = NodeIndex(self.g, self.providers.embedder)
        return self._node_index

    @property
    def chunk_index(self):
        if self._chunk_index is None:
            if self.corpus is None:
                raise ConfigError("chunk-baseline mode needs a corpus")
            self._chunk_index = ChunkIndex(self.corpus, self.providers.embedder)
        return self._chunk_index

    def retrieve(self, q, cfg, trace_label='retrieval'):
        """
        analyze -> traverse -> intersect -> score -> expand -> truncate

        NoSlots and AnchorNotResolved give an empty result whose diagnostics
        carry the reason.

        Expanded neighbors are appended after every focal tuple, whatever their
        score, so neighbor expansion only fills the slots left once the focal
        tuples run out. With top_k or more focal tuples it changes nothing.

        Returns
        -------
        RetrievalResult
        """
        diagnostics = {'query_id': q.query_id, 'query': q.text, 'mode': cfg.mode}

        if cfg.mode == CHUNK_BASELINE:
            chunks = self.chunk_index.search(q.text, cfg.top_k)
            diagnostics['n_returned'] = len(chunks)
            result = RetrievalResult(chunks=chunks, diagnostics=diagnostics, mode=CHUNK_BASELINE)
            tracing.trace_records([diagnostics], tracing.extend_trace_label(trace_label, 'chunks'))
            return result

        try:
            tuples, slots = self._graph_retrieve(q, cfg, diagnostics)
        except (NoSlots, AnchorNotResolved) as e:
            logger.info("query %r: %s" % (q.text, e))
            diagnostics['error'] = "%s: %s" % (type(e).__name__, e)
            tuples, slots = [], None

        diagnostics['n_returned'] = len(tuples)
        tracing.trace_records([diagnostics], tracing.extend_trace_label(trace_label, 'retrieve'))
        return RetrievalResult(tuples=tuples, diagnostics=diagnostics, slots=slots)

    def _graph_retrieve(self, q, cfg, diagnostics):
        g = self.g
        embedder = self.providers.embedder
        tau = cfg.similarity_threshold

        slots = analyze_query(q, self.providers.analyzer)
        diagnostics.update(slots.to_dict())

        subject_hint, temporal_hint = slots.subject_hint, slots.temporal_hint
        for kind, hint in (('subject', subject_hint), ('temporal', temporal_hint)):
            if not hint:
                continue
            try:
                value = slots.temporal_value if kind == 'temporal' else None
                node = self.node_index.resolve(kind, hint, tau, value)
                diagnostics['resolved_%s' % kind] = self.node_index.node_label(kind, node)
            except AnchorNotResolved as e:
                logger.debug(str(e))
                diagnostics['resolved_%s' % kind] = None
                if kind == 'subject':
                    subject_hint = None
                else:
                    temporal_hint = None

        forward = reverse = None
        if subject_hint or temporal_hint:
            forward = forward_traverse(g, subject_hint, temporal_hint, embedder, tau,
                                       self.node_index, slots.temporal_value)
            diagnostics['n_forward'] = len(forward)

        if slots.attribute_hint:
            try:
                reverse = reverse_traverse(g, slots.attribute_hint, embedder, tau, self.node_index)
                diagnostics['resolved_attribute'] = g.attributes[reverse.attribute].label
                diagnostics['n_reverse'] = len(reverse)
            except AnchorNotResolved as e:
                logger.debug(str(e))
                diagnostics['resolved_attribute'] = None

        if forward is None and reverse is None:
            raise AnchorNotResolved("no query hint resolved to a graph node")

        try:
            keys = intersect_paths(forward, reverse, g)
            diagnostics['fallback'] = False
        except EmptyIntersection:
            # union of the single-path candidates
            keys = set()
            if forward is not None:
                keys |= _forward_keys(g, forward)
            if reverse is not None:
                keys |= _reverse_keys(g, reverse)
            diagnostics['fallback'] = True
        diagnostics['n_keys'] = len(keys)

        focal = score_candidates(keys, q, embedder, g, self.key_vectors)
        diagnostics['n_focal'] = len(focal)

        expanded = []
        if cfg.enable_sne and cfg.expansion_radius >= 1 and slots.intent != POINT_LOOKUP:
            seen = set(t.cell_id for t in focal)
            best = {}
            for t in focal:
                for n in expand_neighbors(g, t, slots.intent, cfg.expansion_radius):
                    if n.cell_id in seen:
                        continue
                    if n.cell_id not in best or n.score > best[n.cell_id].score:
                        best[n.cell_id] = n
            expanded = _rank(best.values())
        diagnostics['n_expanded'] = len(expanded)

        return (focal + expanded)[:cfg.top_k], slots


def retrieve(g, q, cfg, providers, corpus=None):
    """
    Retriever.retrieve on a throwaway Retriever; neighbors rank below every
    focal tuple

    Parameters
    ----------
    g : SATGraph
    q : Query
    cfg : RetrievalConfig
    providers : ProviderSet
    corpus : Corpus, optional
        required for mode=chunk-baseline

    Returns
    -------
    RetrievalResult
    """
    return Retriever(g, providers, corpus).retrieve(q, cfg)
