# satrag
# See full license in LICENSE.txt.

import hashlib
import json
import logging
import os

import pandas as pd

from .cellgroups import CellGroup, decompose_document, DEFAULT_SNIPPET_BUDGET
from .errors import IoFailure, MalformedInput
from .ingest import document_from_record, document_to_record, annotate_table

logger = logging.getLogger(__name__)

DOCUMENTS_FILE_NAME = 'documents.jsonl'
CELL_GROUPS_FILE_NAME = 'cell_groups.jsonl'


class Corpus(object):
    """
    Ingested documents and their cell groups

    Passages are addressed corpus-wide by uid '<doc_id>/<passage_id>',
    cell groups by cell_id '<doc_id>/<table_id>/<row>/<col>'.
    """

    def __init__(self, documents, cell_groups):
        self.documents = list(documents)
        self.cell_groups = list(cell_groups)

        self.docs_by_id = {}
        for doc in self.documents:
            if doc.doc_id in self.docs_by_id:
                raise MalformedInput("duplicate doc_id '%s' in corpus" % doc.doc_id)
            self.docs_by_id[doc.doc_id] = doc

        self.tables_by_id = {(t.doc_id, t.table_id): t for d in self.documents for t in d.tables}
        self.passages_by_uid = {p.uid: p for d in self.documents for p in d.passages}
        self.cells_by_id = {cg.cell_id: cg for cg in self.cell_groups}

    @classmethod
    def from_documents(cls, documents, snippet_budget=DEFAULT_SNIPPET_BUDGET):
        groups = []
        for doc in documents:
            groups.extend(decompose_document(doc, snippet_budget))
        return cls(documents, groups)

    def document(self, doc_id):
        return self.docs_by_id[doc_id]

    def table(self, doc_id, table_id):
        return self.tables_by_id[(doc_id, table_id)]

    def passage(self, uid):
        return self.passages_by_uid[uid]

    def passages_of(self, doc_id):
        doc = self.docs_by_id.get(doc_id)
        return list(doc.passages) if doc else []

    def cell_group(self, cell_id):
        return self.cells_by_id[cell_id]

    def set_entity(self, doc_id, entity):
        """record an entity annotation on a document and its cell groups"""
        doc = self.docs_by_id[doc_id]
        doc.entity = entity
        for cg in self.cell_groups:
            if cg.doc_id == doc_id:
                cg.doc_meta.entity = entity

    @property
    def n_tables(self):
        return len(self.tables_by_id)

    def corpus_hash(self):
        """sha1 over sorted (cell_id, value) pairs"""
        h = hashlib.sha1()
        for cg in sorted(self.cell_groups, key=lambda cg: cg.cell_id):
            h.update(("%s\t%s\n" % (cg.cell_id, cg.value)).encode('utf-8'))
        return h.hexdigest()

    def summary(self):
        """
        per-document counts

        Returns
        -------
        pandas.DataFrame
            index doc_id, columns passages, tables, cells
        """
        cells = pd.Series([cg.doc_id for cg in self.cell_groups], dtype=object).value_counts()
        df = pd.DataFrame({
            'passages': [len(d.passages) for d in self.documents],
            'tables': [len(d.tables) for d in self.documents],
        }, index=pd.Index([d.doc_id for d in self.documents], name='doc_id'))
        df['cells'] = cells.reindex(df.index).fillna(0).astype(int)
        return df

    def save(self, store_dir):
        """write documents.jsonl and cell_groups.jsonl into store_dir"""
        if not os.path.isdir(store_dir):
            os.makedirs(store_dir)

        try:
            write_jsonl(os.path.join(store_dir, DOCUMENTS_FILE_NAME),
                        [document_to_record(d) for d in self.documents])
            write_jsonl(os.path.join(store_dir, CELL_GROUPS_FILE_NAME),
                        [cg.to_record() for cg in self.cell_groups])
        except (IOError, OSError) as e:
            logger.error("could not write corpus store %s: %s" % (store_dir, e))
            raise IoFailure("could not write corpus store %s: %s" % (store_dir, e))

        logger.info("wrote %s documents and %s cell groups to %s" %
                    (len(self.documents), len(self.cell_groups), store_dir))

    @classmethod
    def load(cls, store_dir):
        """read a corpus store written by save; headers are re-annotated on load"""
        doc_file = os.path.join(store_dir, DOCUMENTS_FILE_NAME)
        cell_file = os.path.join(store_dir, CELL_GROUPS_FILE_NAME)

        for f in (doc_file, cell_file):
            if not os.path.isfile(f):
                logger.error("corpus store file not found: %s" % f)
                raise IoFailure("corpus store file not found: %s" % f)

        documents = [document_from_record(r, source=doc_file) for r in read_jsonl(doc_file)]
        for doc in documents:
            for table in doc.tables:
                annotate_table(table)

        # cell groups of one document share a single metadata object
        groups = [CellGroup.from_record(r) for r in read_jsonl(cell_file)]
        shared = {}
        for cg in groups:
            cg.doc_meta = shared.setdefault(cg.doc_id, cg.doc_meta)

        return cls(documents, groups)


def write_jsonl(path, records):
    with open(path, 'w', encoding='utf-8') as f:
        for r in records:
            f.write(json.dumps(r, ensure_ascii=False, sort_keys=True))
            f.write('\n')


def read_jsonl(path):
    records = []
    with open(path, encoding='utf-8') as f:
        for i, line in enumerate(f):
            if not line.strip():
                continue
            try:
                records.append(json.loads(line))
            except ValueError as e:
                raise MalformedInput("invalid json record: %s" % e, source=path, line=i + 1)
    return records
