# satrag
# See full license in LICENSE.txt.

import json
import os

import pytest

from .. import ingest
from ..errors import MalformedInput, EmptyDocument, MultipleTables, HeaderDetectionAmbiguous
from ..ingest import parse_table, parse_document, serialize_table, classify_headers
from ..ingest import MARKDOWN, HTML_TABLE, STRUCTURED_GRID, COLUMN_HEADER, ROW_HEADER
from ..util.testing import toy_records


MARKDOWN_TABLE = """
|            | 2018  | 2019  |
|------------|-------|-------|
| Revenue    | 1,200 | 1,350 |
| Net income | 80    | (12)  |
"""

HTML_QUARTERS = (
    '<table>'
    '<tr><th></th><th colspan="2">2019</th></tr>'
    '<tr><td></td><td>Q1</td><td>Q2</td></tr>'
    '<tr><td>Sales</td><td>10</td><td>12</td></tr>'
    '</table>'
)

MARKDOWN_DOCUMENT = """# Acme report

Acme had a good year.

## Results

| | 2019 |
|---|---|
| Revenue | 5 |

More text about the year.
"""


def test_is_numeric():
    assert ingest.is_numeric('1,200')
    assert ingest.is_numeric('(12)')
    assert ingest.is_numeric('$5.2')
    assert ingest.is_numeric('12%')
    assert not ingest.is_numeric('2019')
    assert not ingest.is_numeric('Q2 2019')
    assert not ingest.is_numeric('Revenue')
    assert not ingest.is_numeric('')


def test_markdown_table():
    t = parse_table(MARKDOWN_TABLE, MARKDOWN)

    assert t.shape == (3, 3)
    assert t.content(1, 1) == '1,200'
    assert t.content(2, 2) == '(12)'
    assert not t.spans
    assert not t.parse_report

    annotations = classify_headers(t)
    assert t.category == ingest.FLAT_2D
    by_coordinate = {a.coordinate: a for a in annotations}
    assert by_coordinate[(0, 1)].header_type == COLUMN_HEADER
    assert by_coordinate[(1, 0)].header_type == ROW_HEADER
    assert (1, 1) not in by_coordinate


def test_ragged_markdown_rows_are_padded():
    t = parse_table("| a | b |\n|---|---|\n| x |", MARKDOWN)

    assert t.shape == (2, 2)
    assert t.content(1, 1) == ''
    assert t.parse_report.padded_rows == [(1, 1)]


def test_multiple_markdown_tables():
    with pytest.raises(MultipleTables):
        parse_table("| a |\n|---|\n| 1 |\n\n| b |\n|---|\n| 2 |", MARKDOWN)


def test_html_colspan():
    t = parse_table(HTML_QUARTERS, HTML_TABLE)

    assert t.shape == (3, 3)
    assert t.contents()[0] == ['', '2019', '2019']
    assert t.spans == [ingest.Span(0, 1, 1, 2)]
    assert t.origin(0, 2) == (0, 1)

    annotations = classify_headers(t)
    assert t.category == ingest.HIERARCHICAL_2D

    by_coordinate = {a.coordinate: a for a in annotations}
    assert by_coordinate[(0, 2)].origin == (0, 1)
    assert by_coordinate[(0, 2)].tier == 1
    assert by_coordinate[(1, 1)].tier == 2
    assert by_coordinate[(2, 0)].header_type == ROW_HEADER


def test_html_round_trip():
    t = parse_table(HTML_QUARTERS, HTML_TABLE)
    classify_headers(t)

    again = parse_table(serialize_table(t, HTML_TABLE), HTML_TABLE)
    assert again.contents() == t.contents()
    assert again.spans == t.spans


def test_unbalanced_html():
    with pytest.raises(MalformedInput) as excinfo:
        parse_table('<table><tr><td>1</td></table>', HTML_TABLE)
    assert 'unbalanced' in str(excinfo.value)


def test_empty_markup():
    with pytest.raises(MalformedInput):
        parse_table('   ', MARKDOWN)


def test_header_detection_ambiguous():
    t = parse_table("| 1 | 2 |\n|---|---|\n| 3 | 4 |", MARKDOWN)

    with pytest.raises(HeaderDetectionAmbiguous):
        classify_headers(t)

    annotations = ingest.annotate_table(t)
    assert t.category == ingest.FLAT_1D
    assert set(a.coordinate for a in annotations) == {(0, 0), (0, 1)}


def test_markdown_document():
    doc = parse_document(MARKDOWN_DOCUMENT, MARKDOWN)

    assert doc.doc_id == 'acme-report'
    assert doc.title == 'Acme report'
    assert [p.text for p in doc.passages] == ['Acme had a good year.',
                                              'More text about the year.']
    assert len(doc.tables) == 1

    table = doc.tables[0]
    assert table.caption == 'Results'
    assert table.doc_id == 'acme-report'
    assert [p.position for p in doc.passages] == [0, 2]
    assert table.position == 1


def test_empty_documents():
    with pytest.raises(EmptyDocument):
        parse_document('   ', MARKDOWN)
    with pytest.raises(EmptyDocument):
        parse_document(json.dumps({'doc_id': 'x'}), STRUCTURED_GRID)


def test_structured_grid():
    record = toy_records(n_docs=1)[0]
    doc = parse_document(json.dumps(record), STRUCTURED_GRID)

    assert doc.doc_id == 'acme'
    assert doc.entity == 'Acme Holdings'
    assert len(doc.passages) == 4
    assert [t.table_id for t in doc.tables] == ['t0', 't1', 't2']

    regional = doc.tables[2]
    assert regional.content(3, 0) == 'Revenue'
    assert regional.origin(3, 0) == (1, 0)

    record = ingest.document_to_record(doc)
    assert ingest.document_to_record(ingest.document_from_record(record)) == record


def test_structured_grid_errors():
    record = toy_records(n_docs=1)[0]

    ragged = json.loads(json.dumps(record))
    ragged['tables'][0]['grid'][2] = ragged['tables'][0]['grid'][2][:-1]
    with pytest.raises(MalformedInput) as excinfo:
        ingest.document_from_record(ragged, source='acme.json')
    assert 'non-rectangular' in str(excinfo.value)
    assert str(excinfo.value).startswith('acme.json')

    overlap = json.loads(json.dumps(record))
    overlap['tables'][1]['spans'].append({'row': 0, 'col': 2, 'row_span': 2, 'col_span': 1})
    with pytest.raises(MalformedInput):
        ingest.document_from_record(overlap)

    outside = json.loads(json.dumps(record))
    outside['tables'][0]['spans'] = [{'row': 7, 'col': 0, 'row_span': 2, 'col_span': 1}]
    with pytest.raises(MalformedInput):
        ingest.document_from_record(outside)

    with pytest.raises(MalformedInput):
        parse_document('{"doc_id": ', STRUCTURED_GRID)


def test_read_document(tmpdir):
    path = os.path.join(str(tmpdir), 'annual.md')
    with open(path, 'w') as f:
        f.write(MARKDOWN_DOCUMENT)

    doc = ingest.read_document(path)
    assert doc.doc_id == 'annual'
    assert len(doc.tables) == 1

    with pytest.raises(MalformedInput):
        ingest.read_document(os.path.join(str(tmpdir), 'annual.pdf'))
