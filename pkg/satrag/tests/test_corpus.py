# satrag
# See full license in LICENSE.txt.

import os

import pytest

from ..corpus import Corpus, DOCUMENTS_FILE_NAME
from ..errors import IoFailure, MalformedInput
from ..ingest import document_from_record
from ..util.testing import make_toy_corpus, toy_records


@pytest.fixture
def corpus():
    return make_toy_corpus()


def test_lookups(corpus):
    assert corpus.document('acme').title == 'Acme Holdings'
    assert corpus.table('acme', 't1').caption == 'Quarterly sales'
    assert corpus.passage('acme/p1').text.startswith('In 2019 Acme Holdings reported revenue')
    assert [p.uid for p in corpus.passages_of('acme')] == \
        ['acme/p0', 'acme/p1', 'acme/p2', 'acme/p3']
    assert corpus.passages_of('nowhere') == []


def test_summary(corpus):
    summary = corpus.summary()

    assert list(summary.index) == ['acme', 'borealis', 'cobalt', 'dunmore', 'everly']
    assert (summary.passages == 4).all()
    assert (summary.tables == 3).all()
    assert (summary.cells == 63).all()


def test_save_load(corpus, tmpdir):
    store_dir = os.path.join(str(tmpdir), 'corpus')
    corpus.save(store_dir)

    assert os.path.isfile(os.path.join(store_dir, DOCUMENTS_FILE_NAME))

    loaded = Corpus.load(store_dir)
    assert loaded.corpus_hash() == corpus.corpus_hash()
    assert loaded.n_tables == 15
    assert loaded.cell_group('acme/t1/3/2') == corpus.cell_group('acme/t1/3/2')
    assert loaded.table('acme', 't2').category == corpus.table('acme', 't2').category

    # metadata objects are shared per document after loading
    cells = [cg for cg in loaded.cell_groups if cg.doc_id == 'acme']
    assert all(cg.doc_meta is cells[0].doc_meta for cg in cells)


def test_load_missing_store(tmpdir):
    with pytest.raises(IoFailure):
        Corpus.load(os.path.join(str(tmpdir), 'missing'))


def test_corrupt_store(corpus, tmpdir):
    store_dir = str(tmpdir)
    corpus.save(store_dir)
    with open(os.path.join(store_dir, DOCUMENTS_FILE_NAME), 'a') as f:
        f.write('{"doc_id": \n')

    with pytest.raises(MalformedInput) as excinfo:
        Corpus.load(store_dir)
    assert excinfo.value.line == 6


def test_set_entity(corpus):
    corpus.set_entity('acme', 'Acme Group')

    assert corpus.document('acme').entity == 'Acme Group'
    assert corpus.cell_group('acme/t0/1/1').doc_meta.entity == 'Acme Group'
    assert corpus.cell_group('borealis/t0/1/1').doc_meta.entity == 'Borealis Energy'


def test_hash_tracks_values(corpus):
    records = toy_records()
    records[0]['tables'][0]['grid'][1][1] = '1'
    changed = Corpus.from_documents([document_from_record(r) for r in records])

    assert changed.corpus_hash() != corpus.corpus_hash()
    assert make_toy_corpus().corpus_hash() == corpus.corpus_hash()


def test_duplicate_doc_ids():
    docs = [document_from_record(r) for r in toy_records(n_docs=1) * 2]
    with pytest.raises(MalformedInput):
        Corpus.from_documents(docs)
