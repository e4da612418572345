# satrag
# See full license in LICENSE.txt.

import pytest

from .. import cellgroups
from ..cellgroups import CellGroup, make_cell_id, split_cell_id, header_path
from ..errors import NotADataCell
from ..ingest import annotate_table, COLUMN_HEADER, ROW_HEADER
from ..util.testing import make_toy_corpus, toy_records


@pytest.fixture(scope='module')
def corpus():
    return make_toy_corpus()


def labels(cg):
    return [e.label for e in cg.header_path]


def test_cell_counts(corpus):
    assert len(corpus.documents) == 5
    assert corpus.n_tables == 15
    assert len(corpus.cell_groups) == 315


def test_flat_header_path(corpus):
    cg = corpus.cell_group(make_cell_id('acme', 't0', 1, 1))

    assert labels(cg) == ['2017', 'Revenue']
    assert [e.header_type for e in cg.header_path] == [COLUMN_HEADER, ROW_HEADER]
    assert cg.value == toy_records()[0]['tables'][0]['grid'][1][1]
    assert cg.table_caption == 'Consolidated results'


def test_merged_column_header_path(corpus):
    cg = corpus.cell_group(make_cell_id('acme', 't1', 3, 2))

    assert labels(cg) == ['2019', 'Q2', 'Gross margin']
    assert [e.tier for e in cg.header_path] == [1, 2, 1]
    assert cg.value.endswith('%')


def test_merged_row_header_path(corpus):
    cg = corpus.cell_group(make_cell_id('borealis', 't2', 2, 3))

    assert labels(cg) == ['2019', 'Revenue', 'Europe']
    # the merged label comes from the span origin
    assert cg.header_path[1].index == (1, 0)


def test_no_header_cells(corpus):
    ids = set(cg.cell_id for cg in corpus.cell_groups)

    assert make_cell_id('acme', 't0', 0, 1) not in ids
    assert make_cell_id('acme', 't0', 1, 0) not in ids
    assert make_cell_id('acme', 't2', 3, 1) not in ids
    assert make_cell_id('acme', 't1', 1, 4) not in ids


def test_header_coordinate_is_not_a_data_cell(corpus):
    table = corpus.table('acme', 't0')
    annotations = annotate_table(table)

    with pytest.raises(NotADataCell):
        header_path(table, annotations, (0, 1))
    with pytest.raises(NotADataCell):
        header_path(table, annotations, (99, 1))


def test_cell_ids():
    cell_id = make_cell_id('acme', 't1', 3, 2)
    assert cell_id == 'acme/t1/3/2'
    assert split_cell_id(cell_id) == ('acme', 't1', 3, 2)


def test_document_metadata(corpus):
    doc = corpus.document('cobalt')

    meta = cellgroups.extract_global_metadata(doc, snippet_budget=10)
    assert meta.entity == 'Cobalt Bank'
    assert meta.context_snippet == doc.passages[0].text[:10]

    cells = [cg for cg in corpus.cell_groups if cg.doc_id == 'cobalt']
    assert len(cells) == 28 + 20 + 15
    assert all(cg.doc_meta.title == 'Cobalt Bank' for cg in cells)


def test_record_round_trip(corpus):
    cg = corpus.cell_group(make_cell_id('dunmore', 't2', 5, 4))
    assert CellGroup.from_record(cg.to_record()) == cg
