# satrag
# See full license in LICENSE.txt.

"""
Dense chunk retrieval over passages and row-linearized tables

This is the retriever the pipeline falls back to when the graph is switched off.
"""

import logging
from collections import OrderedDict

import numpy as np

from .cellgroups import split_cell_id
from .ingest import COLUMN_HEADER, ROW_HEADER
from .providers import cosine_matrix

logger = logging.getLogger(__name__)

PASSAGE_CHUNK = 'passage'
ROW_CHUNK = 'row'


class Chunk(object):

    __slots__ = ('chunk_id', 'text', 'doc_id', 'kind', 'cell_ids')

    def __init__(self, chunk_id, text, doc_id, kind, cell_ids=()):
        self.chunk_id = chunk_id
        self.text = text
        self.doc_id = doc_id
        self.kind = kind
        self.cell_ids = tuple(cell_ids)

    def __repr__(self):
        return "Chunk(%s)" % self.chunk_id


class ScoredChunk(object):

    __slots__ = ('chunk', 'score')

    def __init__(self, chunk, score):
        self.chunk = chunk
        self.score = score

    @property
    def chunk_id(self):
        return self.chunk.chunk_id

    def __repr__(self):
        return "ScoredChunk(%s, %.4f)" % (self.chunk.chunk_id, self.score)


def row_chunk_id(doc_id, table_id, row):
    return "%s/%s/row/%s" % (doc_id, table_id, row)


def linearize_row(caption, cell_groups):
    """
    'caption | row headers | column headers: value | ...' for the data cells of one row
    """
    parts = [caption] if caption else []

    row_labels = [e.label for e in cell_groups[0].header_path if e.header_type == ROW_HEADER]
    if row_labels:
        parts.append(' / '.join(row_labels))

    for cg in cell_groups:
        column = ' / '.join(e.label for e in cg.header_path if e.header_type == COLUMN_HEADER)
        parts.append("%s: %s" % (column, cg.value) if column else cg.value)

    return ' | '.join(parts)


def make_chunks(corpus):
    """
    Passages as-is, one chunk per table row holding data cells

    Returns
    -------
    list of Chunk
        documents in corpus order; within a document, passages then table rows
    """
    rows = OrderedDict()
    for cg in corpus.cell_groups:
        doc_id, table_id, row, _ = split_cell_id(cg.cell_id)
        rows.setdefault((doc_id, table_id, row), []).append(cg)

    by_doc = OrderedDict((d.doc_id, []) for d in corpus.documents)
    for (doc_id, table_id, row), groups in rows.items():
        groups = sorted(groups, key=lambda cg: cg.coordinate)
        by_doc.setdefault(doc_id, []).append(
            Chunk(row_chunk_id(doc_id, table_id, row),
                  linearize_row(groups[0].table_caption, groups),
                  doc_id, ROW_CHUNK, [cg.cell_id for cg in groups]))

    chunks = []
    for doc in corpus.documents:
        chunks.extend(Chunk(p.uid, p.text, doc.doc_id, PASSAGE_CHUNK) for p in doc.passages)
        chunks.extend(by_doc.get(doc.doc_id, []))
    return chunks


class ChunkIndex(object):
    """chunks of a corpus with their embeddings, computed once"""

    def __init__(self, corpus, embedder):
        self.chunks = make_chunks(corpus)
        self.by_id = {c.chunk_id: c for c in self.chunks}
        self.embeddings = embedder.embed([c.text for c in self.chunks])
        self.embedder = embedder
        logger.info("chunk index: %s chunks" % len(self.chunks))

    def search(self, text, k):
        """
        top-k chunks by cosine to text, ties broken by chunk_id

        Returns
        -------
        list of ScoredChunk
        """
        if k <= 0 or not self.chunks:
            return []
        q = self.embedder.embed([text])
        scores = np.clip(cosine_matrix(q, self.embeddings)[0], 0.0, 1.0)
        order = sorted(range(len(self.chunks)), key=lambda i: (-scores[i],
                                                               self.chunks[i].chunk_id))
        return [ScoredChunk(self.chunks[i], float(scores[i])) for i in order[:k]]


def baseline_chunk_retrieve(corpus, q, embedder, k, index=None):
    """
    Parameters
    ----------
    corpus : Corpus
    q : Query
    embedder : Embedder
    k : int
    index : ChunkIndex, optional
        prebuilt index for corpus

    Returns
    -------
    list of ScoredChunk
    """
    index = index or ChunkIndex(corpus, embedder)
    return index.search(q.text, k)
