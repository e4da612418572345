# satrag
# See full license in LICENSE.txt.

import logging
from collections import namedtuple

from .errors import NotADataCell
from .ingest import annotate_table, COLUMN_HEADER, ROW_HEADER

logger = logging.getLogger(__name__)

DEFAULT_SNIPPET_BUDGET = 512

HeaderPathElement = namedtuple('HeaderPathElement', ['label', 'header_type', 'tier', 'index'])


class DocumentMetadata(object):

    __slots__ = ('doc_id', 'title', 'entity', 'context_snippet')

    def __init__(self, doc_id, title='', entity='', context_snippet=''):
        self.doc_id = doc_id
        self.title = title
        self.entity = entity
        self.context_snippet = context_snippet

    def to_record(self):
        return {k: getattr(self, k) for k in self.__slots__}

    def __eq__(self, other):
        return isinstance(other, DocumentMetadata) and self.to_record() == other.to_record()

    def __repr__(self):
        return "DocumentMetadata(%s, entity=%r)" % (self.doc_id, self.entity)


class CellGroup(object):
    """
    One data cell with the metadata needed to read it out of context:
    the document metadata, the table caption and the complete header path.
    """

    def __init__(self, cell_id, value, doc_meta, table_caption, header_path, coordinate):
        self.cell_id = cell_id
        self.value = value
        self.doc_meta = doc_meta
        self.table_caption = table_caption
        self.header_path = list(header_path)
        self.coordinate = tuple(coordinate)

    @property
    def doc_id(self):
        return self.doc_meta.doc_id

    @property
    def table_id(self):
        return split_cell_id(self.cell_id)[1]

    def to_record(self):
        return {
            'cell_id': self.cell_id,
            'value': self.value,
            'doc_meta': self.doc_meta.to_record(),
            'table_caption': self.table_caption,
            'header_path': [{'label': e.label, 'header_type': e.header_type, 'tier': e.tier,
                             'index': list(e.index)} for e in self.header_path],
            'coordinate': list(self.coordinate),
        }

    @classmethod
    def from_record(cls, record):
        return cls(record['cell_id'],
                   record['value'],
                   DocumentMetadata(**record['doc_meta']),
                   record.get('table_caption', ''),
                   [HeaderPathElement(e['label'], e['header_type'], e['tier'], tuple(e['index']))
                    for e in record['header_path']],
                   record['coordinate'])

    def __eq__(self, other):
        return isinstance(other, CellGroup) and self.to_record() == other.to_record()

    def __repr__(self):
        return "CellGroup(%s, %r)" % (self.cell_id, self.value)


def make_cell_id(doc_id, table_id, row, col):
    return "%s/%s/%s/%s" % (doc_id, table_id, row, col)


def split_cell_id(cell_id):
    """inverse of make_cell_id -> (doc_id, table_id, row, col)"""
    doc_id, table_id, row, col = cell_id.rsplit('/', 3)
    return doc_id, table_id, int(row), int(col)


def extract_global_metadata(doc, snippet_budget=DEFAULT_SNIPPET_BUDGET):
    """
    Document-level metadata shared by every cell group of a document

    Parameters
    ----------
    doc : Document
    snippet_budget : int
        maximum characters of the leading passage kept as context

    Returns
    -------
    DocumentMetadata
    """
    passages = sorted(doc.passages, key=lambda p: p.position)
    snippet = passages[0].text[:snippet_budget] if passages else ''
    return DocumentMetadata(doc.doc_id, doc.title, doc.entity or '', snippet)


def header_path(table, annotations, coordinate):
    """
    Header path of a data cell: column header elements by ascending tier,
    then row header elements by ascending tier.

    Merged header cells contribute their origin label once, at the origin's tier.
    Empty header labels are skipped.

    Parameters
    ----------
    table : Table
    annotations : list of HeaderAnnotation
    coordinate : (int, int)

    Returns
    -------
    list of HeaderPathElement
    """
    row, col = coordinate
    by_coordinate = {a.coordinate: a for a in annotations}

    if not (0 <= row < table.n_rows and 0 <= col < table.n_cols) or coordinate in by_coordinate:
        raise NotADataCell("%s is not a data cell of table %s/%s" %
                           (coordinate, table.doc_id, table.table_id))

    def elements(coordinates, header_type):
        seen = set()
        result = []
        for rc in coordinates:
            a = by_coordinate.get(rc)
            if a is None or a.header_type != header_type or a.origin in seen:
                continue
            seen.add(a.origin)
            label = table.content(*a.origin).strip()
            if label:
                result.append(HeaderPathElement(label, header_type, a.tier, a.origin))
        return sorted(result, key=lambda e: (e.tier, e.index))

    column = elements([(r, col) for r in range(table.n_rows)], COLUMN_HEADER)
    row_ = elements([(row, c) for c in range(table.n_cols)], ROW_HEADER)

    return column + row_


def decompose_table(table, annotations, doc_meta):
    """
    One CellGroup per non-empty data cell

    Header cells, empty cells and cells covered by a merged data cell
    (other than its origin) produce nothing.

    Returns
    -------
    list of CellGroup
        in row-major order
    """
    header = set(a.coordinate for a in annotations)

    groups = []
    for r in range(table.n_rows):
        for c in range(table.n_cols):
            if (r, c) in header or (r, c) in table.covered:
                continue
            value = table.content(r, c).strip()
            if not value:
                continue
            groups.append(CellGroup(make_cell_id(doc_meta.doc_id, table.table_id, r, c),
                                    value,
                                    doc_meta,
                                    table.caption,
                                    header_path(table, annotations, (r, c)),
                                    (r, c)))
    return groups


def decompose_document(doc, snippet_budget=DEFAULT_SNIPPET_BUDGET):
    """annotate every table of a document and decompose it into cell groups"""
    doc_meta = extract_global_metadata(doc, snippet_budget)

    groups = []
    for table in doc.tables:
        annotations = annotate_table(table)
        table_groups = decompose_table(table, annotations, doc_meta)
        logger.debug("%s/%s %s: %s cell groups" %
                     (doc.doc_id, table.table_id, table.category, len(table_groups)))
        groups.extend(table_groups)

    return groups
