# satrag
# See full license in LICENSE.txt.

import logging
import os

import pandas as pd

from ..errors import IoFailure, VersionMismatch, CorruptIndex
from .sat import SATGraph, SubjectNode, TemporalNode, AttributeNode, ValueLeaf
from .temporal import parse_key

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1

RECORD_KEYS = ['subjects', 'temporals', 'attributes', 'leaves']
HEADER_KEY = 'header'


def save_graph(g, path, corpus_hash=''):
    """
    Write a graph into one HDF5 container

    The container holds a header record (format_version, corpus_hash, counts)
    and one table per node kind. Anchors and the index are not stored, they are
    rebuilt from the leaves on load.

    Parameters
    ----------
    g : SATGraph
    path : str
    corpus_hash : str
    """
    frames = g.records()
    counts = g.counts()
    header = pd.DataFrame([dict(format_version=FORMAT_VERSION, corpus_hash=corpus_hash,
                                **{'n_%s' % k: v for k, v in counts.items()})])

    dirname = os.path.dirname(path)
    if dirname and not os.path.isdir(dirname):
        os.makedirs(dirname)

    try:
        with pd.HDFStore(path, mode='w') as store:
            store[HEADER_KEY] = header
            for key in RECORD_KEYS:
                store[key] = frames[key]
    except (IOError, OSError) as e:
        logger.error("could not write graph to %s: %s" % (path, e))
        raise IoFailure("could not write graph to %s: %s" % (path, e))

    logger.info("saved graph %s to %s" % (counts, path))


def read_header(path):
    """the header record of a saved graph as a dict"""
    with _open(path) as store:
        return _header(store, path)


def _open(path):
    if not os.path.isfile(path):
        logger.error("graph file not found: %s" % path)
        raise IoFailure("graph file not found: %s" % path)
    try:
        return pd.HDFStore(path, mode='r')
    except (IOError, OSError, ValueError, RuntimeError) as e:
        logger.error("could not open graph file %s: %s" % (path, e))
        raise IoFailure("could not open graph file %s: %s" % (path, e))


def _header(store, path):
    if '/' + HEADER_KEY not in store.keys():
        raise CorruptIndex("%s has no header record" % path)
    header = store[HEADER_KEY].iloc[0].to_dict()
    version = int(header.get('format_version', -1))
    if version != FORMAT_VERSION:
        logger.error("%s has format version %s, expected %s" % (path, version, FORMAT_VERSION))
        raise VersionMismatch("%s has format version %s, expected %s" %
                              (path, version, FORMAT_VERSION))
    return header


def load_graph(path):
    """
    Read a graph written by save_graph

    Raises
    ------
    IoFailure
        file missing or unreadable
    VersionMismatch
        format_version differs from FORMAT_VERSION
    CorruptIndex
        records missing, or counts of the rebuilt graph differ from the header
    """
    with _open(path) as store:
        header = _header(store, path)

        missing = [k for k in RECORD_KEYS if '/' + k not in store.keys()]
        if missing:
            raise CorruptIndex("%s is missing records %s" % (path, missing))

        try:
            frames = {k: store[k].fillna('') for k in RECORD_KEYS}
        except (IOError, OSError, ValueError, RuntimeError, KeyError) as e:
            raise CorruptIndex("could not read records of %s: %s" % (path, e))

    subjects = {r.node_id: SubjectNode(r.node_id, r.label, r.parent or None)
                for r in frames['subjects'].itertuples()}
    temporals = {r.node_id: TemporalNode(r.node_id, r.raw_label, parse_key(r.normalized),
                                         r.parent or None)
                 for r in frames['temporals'].itertuples()}
    bad = [k for k, n in temporals.items() if not n.normalized]
    if bad:
        raise CorruptIndex("%s has unreadable temporal values for %s" % (path, bad))

    attributes = {r.node_id: AttributeNode(r.node_id, r.label)
                  for r in frames['attributes'].itertuples()}

    leaves = {}
    for r in frames['leaves'].itertuples():
        leaf = ValueLeaf(r.leaf_id, r.value, (r.subject, r.temporal, r.attribute), r.cell_id,
                         r.table_id or None, r.doc_id or None)
        if r.attribute not in attributes:
            raise CorruptIndex("leaf %s refers to unknown attribute %s" % (r.leaf_id, r.attribute))
        attributes[r.attribute].anchors.add((r.subject, r.temporal))
        leaves[leaf.leaf_id] = leaf

    g = SATGraph(subjects, temporals, attributes, leaves)

    counts = g.counts()
    mismatched = {k: (int(header['n_%s' % k]), v) for k, v in counts.items()
                  if int(header.get('n_%s' % k, -1)) != v}
    if mismatched:
        logger.error("%s counts differ from header: %s" % (path, mismatched))
        raise CorruptIndex("%s counts differ from header (expected, found): %s" %
                           (path, mismatched))

    logger.info("loaded graph %s from %s" % (counts, path))
    return g
