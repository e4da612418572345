# satrag
# See full license in LICENSE.txt.

"""
Subject / Attribute / Temporal graph

Subjects and temporal values form two forests. Each (subject, temporal) pair a
fact was observed under is recorded as an anchor on the fact's attribute node,
and every fact becomes one value leaf indexed by its composite key
(subject, temporal, attribute). Several leaves may share a key.
"""

import hashlib
import logging
from collections import defaultdict

import networkx as nx
import pandas as pd

from ..errors import GraphValidationError, NoAttribute
from ..providers import DefaultSubjectExtractor
from .temporal import normalize_temporal, is_bare_period, combine_with_year
from .temporal import UNDATED_VALUE, YEAR, UNDATED

logger = logging.getLogger(__name__)

ATTRIBUTE_SEPARATOR = ' / '

SUBJECT = 's'
TEMPORAL = 't'
ATTRIBUTE = 'a'
LEAF = 'l'


def canonicalize(label):
    """case-fold and collapse internal whitespace"""
    return ' '.join((label or '').split()).casefold()


def node_id(kind, canonical, parent_id=None):
    text = "%s|%s|%s" % (kind, canonical, parent_id or '')
    return kind + hashlib.sha1(text.encode('utf-8')).hexdigest()[:15]


class SubjectNode(object):

    __slots__ = ('node_id', 'label', 'parent')

    def __init__(self, node_id, label, parent=None):
        self.node_id = node_id
        self.label = label
        self.parent = parent

    def __repr__(self):
        return "SubjectNode(%s)" % self.label


class TemporalNode(object):

    __slots__ = ('node_id', 'raw_label', 'normalized', 'parent')

    def __init__(self, node_id, raw_label, normalized, parent=None):
        self.node_id = node_id
        self.raw_label = raw_label
        self.normalized = normalized
        self.parent = parent

    @property
    def label(self):
        return self.raw_label

    @property
    def undated(self):
        return self.normalized.kind == UNDATED

    def __repr__(self):
        return "TemporalNode(%s)" % self.normalized.key


class AttributeNode(object):

    __slots__ = ('node_id', 'label', 'anchors')

    def __init__(self, node_id, label, anchors=None):
        self.node_id = node_id
        self.label = label
        self.anchors = set(anchors or [])

    def __repr__(self):
        return "AttributeNode(%s)" % self.label


class ValueLeaf(object):

    __slots__ = ('leaf_id', 'value', 'composite_key', 'cell_id', 'table_id', 'doc_id')

    def __init__(self, leaf_id, value, composite_key, cell_id, table_id, doc_id):
        self.leaf_id = leaf_id
        self.value = value
        self.composite_key = tuple(composite_key)
        self.cell_id = cell_id
        self.table_id = table_id
        self.doc_id = doc_id

    def __repr__(self):
        return "ValueLeaf(%s=%r)" % (self.cell_id, self.value)


class FactTuple(object):

    __slots__ = ('subject_path', 'temporal_raw', 'temporal', 'attribute', 'value',
                 'cell_id', 'table_id', 'doc_id')

    def __init__(self, subject_path, temporal_raw, temporal, attribute, value, cell_id,
                 table_id=None, doc_id=None):
        self.subject_path = list(subject_path)
        self.temporal_raw = temporal_raw
        self.temporal = temporal
        self.attribute = attribute
        self.value = value
        self.cell_id = cell_id
        self.table_id = table_id
        self.doc_id = doc_id

    def __repr__(self):
        return "FactTuple(%s, %s, %s, %r)" % \
            (' > '.join(self.subject_path), self.temporal_raw, self.attribute, self.value)


class SATGraph(object):

    def __init__(self, subjects=None, temporals=None, attributes=None, leaves=None):
        self.subjects = subjects or {}
        self.temporals = temporals or {}
        self.attributes = attributes or {}
        self.leaves = leaves or {}
        self.reindex()

    def reindex(self):
        """rebuild the composite index and the child lists from the leaves"""
        self.index = defaultdict(set)
        for leaf in self.leaves.values():
            self.index[leaf.composite_key].add(leaf.leaf_id)
        self.index = dict(self.index)

        self.leaf_by_cell = {leaf.cell_id: leaf for leaf in self.leaves.values()}

        self.subject_children = defaultdict(list)
        for node in self.subjects.values():
            self.subject_children[node.parent].append(node.node_id)

        self.temporal_children = defaultdict(list)
        for node in self.temporals.values():
            self.temporal_children[node.parent].append(node.node_id)
        for ids in self.temporal_children.values():
            ids.sort(key=lambda i: (self.temporals[i].normalized.sort_key(), i))
        for ids in self.subject_children.values():
            ids.sort(key=lambda i: (self.subjects[i].label, i))

    @property
    def is_empty(self):
        return not self.leaves

    def counts(self):
        return {
            'subjects': len(self.subjects),
            'temporals': len(self.temporals),
            'attributes': len(self.attributes),
            'leaves': len(self.leaves),
            'keys': len(self.index),
        }

    def _descendants(self, children, node):
        result = set()
        stack = [node]
        while stack:
            n = stack.pop()
            if n in result:
                continue
            result.add(n)
            stack.extend(children.get(n, []))
        return result

    def subject_descendants(self, node):
        return self._descendants(self.subject_children, node)

    def temporal_descendants(self, node):
        return self._descendants(self.temporal_children, node)

    def subject_path(self, node):
        """labels from the root down to node"""
        labels = []
        while node is not None:
            labels.append(self.subjects[node].label)
            node = self.subjects[node].parent
        return labels[::-1]

    def temporal_siblings(self, node):
        """
        chronologically ordered nodes of the same kind sharing node's parent
        (roots of the same kind are one sibling group); node included
        """
        t = self.temporals[node]
        return [i for i in self.temporal_children.get(t.parent, [])
                if self.temporals[i].normalized.kind == t.normalized.kind]

    def subject_siblings(self, node):
        """nodes sharing node's parent, node included; roots have no siblings"""
        parent = self.subjects[node].parent
        if parent is None:
            return [node]
        return list(self.subject_children[parent])

    def leaves_for(self, key):
        return sorted((self.leaves[i] for i in self.index.get(tuple(key), ())),
                      key=lambda leaf: leaf.cell_id)

    def key_labels(self, key):
        s, t, a = key
        return self.subjects[s].label, self.temporals[t].raw_label, self.attributes[a].label

    def records(self):
        """
        plain record lists for persistence and comparison

        Returns
        -------
        dict of str -> pandas.DataFrame
        """
        subjects = pd.DataFrame(
            [(n.node_id, n.label, n.parent or '') for n in self.subjects.values()],
            columns=['node_id', 'label', 'parent'])
        temporals = pd.DataFrame(
            [(n.node_id, n.raw_label, n.normalized.key, n.parent or '')
             for n in self.temporals.values()],
            columns=['node_id', 'raw_label', 'normalized', 'parent'])
        attributes = pd.DataFrame(
            [(n.node_id, n.label) for n in self.attributes.values()],
            columns=['node_id', 'label'])
        leaves = pd.DataFrame(
            [(l.leaf_id, l.value, l.composite_key[0], l.composite_key[1], l.composite_key[2],
              l.cell_id, l.table_id or '', l.doc_id or '') for l in self.leaves.values()],
            columns=['leaf_id', 'value', 'subject', 'temporal', 'attribute',
                     'cell_id', 'table_id', 'doc_id'])

        frames = {'subjects': subjects, 'temporals': temporals,
                  'attributes': attributes, 'leaves': leaves}
        for name, df in frames.items():
            frames[name] = df.sort_values(df.columns[0]).reset_index(drop=True).astype(str)
        return frames

    def isomorphic(self, other):
        """same nodes, labels, anchors and leaves (node ids are content derived)"""
        mine, theirs = self.records(), other.records()
        if any(not mine[k].equals(theirs[k]) for k in mine):
            return False
        anchors = {i: a.anchors for i, a in self.attributes.items()}
        return anchors == {i: a.anchors for i, a in other.attributes.items()}

    def __repr__(self):
        return "SATGraph(%s)" % self.counts()


def lift_cell_group(cg, subject_extractor=None):
    """
    Route the header path of a cell group into subject, temporal and attribute slots

    Temporal header labels fill the temporal slot (the finest granularity wins; a
    bare "Q2" under a year header becomes "Q2 <year>"). The subject path comes
    from the extractor, falling back to the document title. Header labels equal
    to a subject label are dropped and the rest, in header path order, are
    joined with ' / ' into the attribute.

    Parameters
    ----------
    cg : CellGroup
    subject_extractor : provider with extract(doc_meta, context)

    Returns
    -------
    FactTuple
    """
    extractor = subject_extractor or DefaultSubjectExtractor()

    elements = list(cg.header_path)
    temporal = []
    for i, e in enumerate(elements):
        value = normalize_temporal(e.label)
        if value:
            temporal.append((value, e.label, i))

    years = [v.year for v, _, _ in temporal if v.kind == YEAR]
    if years:
        for i, e in enumerate(elements):
            if is_bare_period(e.label):
                value = combine_with_year(e.label, years[0])
                if value:
                    temporal.append((value, "%s %s" % (e.label.strip(), years[0]), i))

    consumed = set(i for _, _, i in temporal)
    if temporal:
        value, raw, _ = max(temporal, key=lambda x: (x[0].granularity, x[2]))
    else:
        value, raw = UNDATED_VALUE, UNDATED_VALUE.key

    subject_path = [s for s in extractor.extract(cg.doc_meta, cg) if s and s.strip()]
    if not subject_path:
        subject_path = [cg.doc_meta.title or cg.doc_meta.doc_id]

    subject_labels = set(canonicalize(s) for s in subject_path)
    remaining = [e.label for i, e in enumerate(elements)
                 if i not in consumed and canonicalize(e.label) not in subject_labels]

    if not remaining:
        raise NoAttribute("%s: no header left for the attribute (path %s)" %
                          (cg.cell_id, [e.label for e in elements]))

    return FactTuple(subject_path, raw, value, ATTRIBUTE_SEPARATOR.join(remaining), cg.value,
                     cg.cell_id, cg.table_id, cg.doc_id)


def lift_cell_groups(cell_groups, subject_extractor=None):
    """
    lift every cell group; rejected groups are logged and returned separately

    Returns
    -------
    facts : list of FactTuple
    rejected : list of (cell_id, reason)
    """
    facts = []
    rejected = []
    for cg in cell_groups:
        try:
            facts.append(lift_cell_group(cg, subject_extractor))
        except NoAttribute as e:
            logger.info("rejected fact %s" % e)
            rejected.append((cg.cell_id, str(e)))
    if rejected:
        logger.warning("%s of %s cell groups had no attribute" %
                       (len(rejected), len(rejected) + len(facts)))
    return facts, rejected


def build_graph(facts):
    """
    Fold lifted facts into a SATGraph

    Node ids hash the canonical label and the parent id, and node labels are the
    smallest raw label seen, so the result does not depend on fact order.

    Parameters
    ----------
    facts : sequence of FactTuple

    Returns
    -------
    SATGraph
    """
    subject_labels = defaultdict(set)
    subject_parent = {}
    temporal_labels = defaultdict(set)
    temporal_values = {}
    temporal_parent = {}
    attribute_labels = defaultdict(set)
    anchors = defaultdict(set)
    leaves = {}

    for fact in facts:
        lid = node_id(LEAF, fact.cell_id)
        if lid in leaves:
            logger.warning("duplicate fact for cell %s ignored" % fact.cell_id)
            continue

        parent = None
        for label in fact.subject_path:
            nid = node_id(SUBJECT, canonicalize(label), parent)
            subject_labels[nid].add(' '.join(label.split()))
            subject_parent[nid] = parent
            parent = nid
        s = parent

        value = fact.temporal or normalize_temporal(fact.temporal_raw) or UNDATED_VALUE
        t = None
        for v in reversed(value.chain()):
            tid = node_id(TEMPORAL, v.key)
            temporal_values[tid] = v
            temporal_parent[tid] = t
            t = tid
        temporal_labels[t].add(fact.temporal_raw or value.key)

        canonical = canonicalize(fact.attribute)
        a = node_id(ATTRIBUTE, canonical)
        attribute_labels[a].add(' '.join(fact.attribute.split()))
        anchors[a].add((s, t))

        leaves[lid] = ValueLeaf(lid, fact.value, (s, t, a), fact.cell_id, fact.table_id,
                                fact.doc_id)

    subjects = {nid: SubjectNode(nid, min(labels), subject_parent[nid])
                for nid, labels in subject_labels.items()}
    # implicit chain parents are labelled with their canonical key
    temporals = {tid: TemporalNode(tid, min(temporal_labels[tid] or [v.key]), v,
                                   temporal_parent[tid])
                 for tid, v in temporal_values.items()}
    attributes = {aid: AttributeNode(aid, min(labels), anchors[aid])
                  for aid, labels in attribute_labels.items()}

    g = SATGraph(subjects, temporals, attributes, leaves)
    logger.info("built %s" % g)
    return g


# validation

ACYCLIC = 'acyclic'
BIJECTION = 'leaf-cell-bijection'
INDEX_INVERSE = 'index-inverse'
ORPHAN_ATTRIBUTE = 'orphan-attribute'
DANGLING_PROVENANCE = 'dangling-provenance'
ANCHOR_SOUNDNESS = 'anchor-soundness'
TEMPORAL_CONTAINMENT = 'temporal-containment'

CHECKS = [ACYCLIC, BIJECTION, INDEX_INVERSE, ORPHAN_ATTRIBUTE, DANGLING_PROVENANCE,
          ANCHOR_SOUNDNESS, TEMPORAL_CONTAINMENT]


class ValidationReport(object):

    def __init__(self, findings=None):
        self.findings = list(findings or [])

    def add(self, check, detail):
        self.findings.append((check, detail))

    @property
    def passed(self):
        return not self.findings

    def checks_failed(self):
        return sorted(set(check for check, _ in self.findings))

    def summary(self):
        """finding count per check, every check listed"""
        counts = pd.Series([c for c, _ in self.findings], dtype=object).value_counts()
        return counts.reindex(CHECKS).fillna(0).astype(int)

    def to_frame(self):
        return pd.DataFrame(self.findings, columns=['check', 'detail'])

    def __eq__(self, other):
        return isinstance(other, ValidationReport) and \
            sorted(self.findings) == sorted(other.findings)

    def __repr__(self):
        return "ValidationReport(passed=%s, findings=%s)" % (self.passed, len(self.findings))


def _dag(g):
    dag = nx.DiGraph()
    dag.add_nodes_from(g.subjects)
    dag.add_nodes_from(g.temporals)
    dag.add_nodes_from(g.attributes)
    dag.add_nodes_from(g.leaves)
    for nodes in (g.subjects, g.temporals):
        for n in nodes.values():
            if n.parent is not None:
                dag.add_edge(n.parent, n.node_id)
    for a in g.attributes.values():
        for s, t in a.anchors:
            dag.add_edge(s, a.node_id)
            dag.add_edge(t, a.node_id)
    for leaf in g.leaves.values():
        dag.add_edge(leaf.composite_key[2], leaf.leaf_id)
    return dag


def validate_graph(g, cell_groups=None):
    """
    Check the structural invariants of a graph

    Parameters
    ----------
    g : SATGraph
    cell_groups : collection of cell ids or dict keyed by cell id, optional
        when given, every leaf's provenance must resolve into it

    Returns
    -------
    ValidationReport
    """
    report = ValidationReport()

    if not nx.is_directed_acyclic_graph(_dag(g)):
        report.add(ACYCLIC, "cycle through parent or anchor edges")

    for nodes, name in ((g.subjects, 'subject'), (g.temporals, 'temporal')):
        for n in nodes.values():
            if n.parent is not None and n.parent not in nodes:
                report.add(DANGLING_PROVENANCE, "%s %s has missing parent %s" %
                           (name, n.node_id, n.parent))

    cell_ids = [leaf.cell_id for leaf in g.leaves.values()]
    if len(set(cell_ids)) != len(cell_ids):
        dupes = pd.Series(cell_ids).value_counts()
        report.add(BIJECTION, "cells with several leaves: %s" % sorted(dupes[dupes > 1].index))

    known_cells = set(cell_groups) if cell_groups is not None else None

    for leaf in g.leaves.values():
        s, t, a = leaf.composite_key
        if s not in g.subjects or t not in g.temporals or a not in g.attributes:
            report.add(DANGLING_PROVENANCE, "leaf %s has a key outside the graph" % leaf.leaf_id)
        if known_cells is not None and leaf.cell_id not in known_cells:
            report.add(DANGLING_PROVENANCE, "leaf %s cell %s has no cell group" %
                       (leaf.leaf_id, leaf.cell_id))
        if leaf.leaf_id not in g.index.get(leaf.composite_key, ()):
            report.add(INDEX_INVERSE, "leaf %s missing from index" % leaf.leaf_id)

    for key, leaf_ids in g.index.items():
        if not leaf_ids:
            report.add(INDEX_INVERSE, "empty index entry %s" % (key, ))
        for lid in leaf_ids:
            if lid not in g.leaves or g.leaves[lid].composite_key != key:
                report.add(INDEX_INVERSE, "index entry %s holds foreign leaf %s" % (key, lid))

    for a in g.attributes.values():
        if not a.anchors:
            report.add(ORPHAN_ATTRIBUTE, "attribute '%s' has no anchors" % a.label)
        for s, t in a.anchors:
            if not g.index.get((s, t, a.node_id)):
                report.add(ANCHOR_SOUNDNESS, "anchor (%s, %s) of '%s' has no leaf" %
                           (s, t, a.label))

    for n in g.temporals.values():
        parent = g.temporals.get(n.parent)
        if parent is not None and not parent.normalized.contains(n.normalized):
            report.add(TEMPORAL_CONTAINMENT, "%s is not inside %s" %
                       (n.normalized.key, parent.normalized.key))

    for check, detail in report.findings:
        logger.warning("graph validation %s: %s" % (check, detail))

    return report


def linearize_key(g, key):
    """'subject temporal attribute' text used for scoring a composite key"""
    s, t, a = key
    temporal = g.temporals[t]
    parts = [g.subjects[s].label]
    if not temporal.undated:
        parts.append(temporal.raw_label)
    parts.append(g.attributes[a].label)
    return ' '.join(parts)


def build_sat_graph(cell_groups, subject_extractor=None, validate=True):
    """
    lift, build and (optionally) validate in one go

    Returns
    -------
    g : SATGraph
    rejected : list of (cell_id, reason)

    Raises
    ------
    GraphValidationError
        validate is set and the graph fails a structural check
    """
    facts, rejected = lift_cell_groups(cell_groups, subject_extractor)
    g = build_graph(facts)

    if validate:
        report = validate_graph(g, [cg.cell_id for cg in cell_groups])
        if not report.passed:
            logger.error("graph failed validation: %s" % report.checks_failed())
            raise GraphValidationError("graph failed validation: %s" % report.checks_failed(),
                                       report)
    return g, rejected
