# satrag
# See full license in LICENSE.txt.

import pytest

from ...errors import ConfigError, InsufficientCandidates, UnparseableEntity
from ...errors import UnparseableValidation
from ...graph.sat import lift_cell_group
from ...providers import EchoCompleter, ScriptedCompleter
from ...evaluate.harness import QAItem
from ...util.testing import make_toy_corpus, accepting_validator, rejecting_validator
from .. import generate
from ..generate import GenerationOptions, CandidatePair, QAPairDraft, Rejection
from ..generate import SAME_DATE, SAME_SUBJECT, SAME_ENTITY, RANDOM, ASSOCIATIONS
from ..generate import DATA_MARKER, DOCUMENT_MARKER


@pytest.fixture(scope='module')
def corpus():
    return make_toy_corpus()


def pair_of(corpus, *cell_ids):
    cells = [corpus.cell_group(c) for c in cell_ids]
    return CandidatePair(cells, RANDOM, 0, RANDOM, [lift_cell_group(cg) for cg in cells])


def test_options():
    options = GenerationOptions.from_settings({'seed': 3, 'associations': [SAME_DATE]})
    assert options.to_dict()['seed'] == 3
    assert options.associations == [SAME_DATE]
    assert GenerationOptions().associations == list(ASSOCIATIONS)

    with pytest.raises(ConfigError):
        GenerationOptions(associations=['similar'])
    with pytest.raises(ConfigError):
        GenerationOptions(degree=1)
    with pytest.raises(ConfigError):
        GenerationOptions.from_settings({'n_pair': 3})


def test_pair_fields_share_keys(corpus):
    by_date = generate.pair_fields(corpus, SAME_DATE, 10, seed=0)
    assert len(by_date) == 10
    for pair in by_date:
        assert len(pair.cells) == 2
        assert len(set(f.temporal.key for f in pair.facts)) == 1
        assert pair.key == pair.facts[0].temporal.key
        assert pair.seed == 0

    for pair in generate.pair_fields(corpus, SAME_ENTITY, 10, seed=0):
        assert len(set(cg.doc_id for cg in pair.cells)) == 1

    for pair in generate.pair_fields(corpus, SAME_SUBJECT, 10, seed=0):
        assert len(set(f.subject_path[-1] for f in pair.facts)) == 1

    for pair in generate.pair_fields(corpus, RANDOM, 5, seed=0, degree=3):
        assert len(set(pair.cell_ids)) == 3


def test_pair_fields_are_seeded(corpus):
    first = generate.pair_fields(corpus, RANDOM, 5, seed=7)
    again = generate.pair_fields(corpus, RANDOM, 5, seed=7)
    other = generate.pair_fields(corpus, RANDOM, 5, seed=8)

    assert [p.cell_ids for p in first] == [p.cell_ids for p in again]
    assert [p.cell_ids for p in first] != [p.cell_ids for p in other]


def test_pair_fields_run_out(corpus):
    # five documents of 63 cells give at most 155 same-entity pairs
    with pytest.raises(InsufficientCandidates):
        generate.pair_fields(corpus, SAME_ENTITY, 1000, seed=0)

    pairs = generate.pair_fields(corpus, SAME_ENTITY, 1000, seed=0, strict=False)
    assert len(pairs) == 5 * 31

    with pytest.raises(ConfigError):
        generate.pair_fields(corpus, 'similar', 1, seed=0)


def test_cell_context(corpus):
    pair = pair_of(corpus, 'acme/t1/3/2')
    context = generate.cell_context(pair.cells[0], pair.facts[0])

    assert context.startswith('entity: Acme Holdings; document: Acme Holdings; '
                              'table: Quarterly sales; subject: Acme Holdings; period: Q2 2019')
    assert context.endswith('value: %s' % pair.cells[0].value)


def test_validate_pair(corpus):
    pair = pair_of(corpus, 'acme/t0/1/3', 'acme/t0/1/2')

    draft = generate.validate_pair(pair, accepting_validator())
    assert isinstance(draft, QAPairDraft)
    assert draft.question.startswith('How do these figures relate (')
    assert draft.answer == 'They describe the same period.'
    assert draft.source is pair

    rejection = generate.validate_pair(pair, rejecting_validator('different units'))
    assert isinstance(rejection, Rejection)
    assert rejection.reason == 'different units'

    with pytest.raises(UnparseableValidation):
        generate.validate_pair(pair, ScriptedCompleter([(DATA_MARKER, 'these look fine to me')]))
    with pytest.raises(UnparseableValidation):
        generate.validate_pair(pair, ScriptedCompleter([(DATA_MARKER, '{"question": "why?"}')]))

    bare = generate.validate_pair(
        pair, ScriptedCompleter([(DATA_MARKER, 'REJECT: different periods')]))
    assert isinstance(bare, Rejection)
    assert bare.reason == 'different periods'


def test_incomplete_context_is_rejected_without_asking(corpus):
    pair = CandidatePair([corpus.cell_group('acme/t0/1/3'), corpus.cell_group('acme/t0/1/2')],
                         RANDOM, 0)

    # a completer without responses fails when asked
    outcome = generate.validate_pair(pair, ScriptedCompleter([]))
    assert outcome.reason == generate.INCOMPLETE_CONTEXT


def test_adjacent_passages(corpus):
    assert generate.adjacent_passages(corpus, 'acme', 't0', 2) == ['acme/p0', 'acme/p1']
    assert generate.adjacent_passages(corpus, 'acme', 't1', 2) == ['acme/p1', 'acme/p2']
    assert generate.adjacent_passages(corpus, 'acme', 't2', 1) == ['acme/p2']
    assert generate.adjacent_passages(corpus, 'acme', 't2', 0) == []


def test_emit_qa(corpus):
    pair = pair_of(corpus, 'acme/t1/3/2', 'acme/t0/1/3')
    draft = QAPairDraft('How do these relate?', 'They do.', pair)

    items = generate.emit_qa([draft, QAPairDraft(draft.question, 'Again.', pair)], corpus)

    assert len(items) == 2
    table_only, contextual = items
    assert (table_only.flag, contextual.flag) == (0, 1)
    assert contextual.query_id == table_only.query_id + '-f1'
    assert table_only.query_id == generate.qa_id(['acme/t0/1/3', 'acme/t1/3/2'],
                                                 'How do these relate?')
    assert table_only.gold_passage_ids == set()
    assert contextual.gold_passage_ids == {'acme/p0', 'acme/p1', 'acme/p2'}
    assert draft.passage_ids == ['acme/p1', 'acme/p2', 'acme/p0']

    revenue = corpus.cell_group('acme/t0/1/3').value
    assert table_only.gold_values[1] == revenue.replace(',', '')
    assert not table_only.gold_values[0].endswith('%')


def test_document_text(corpus):
    text = generate.document_text(corpus.document('acme'))

    assert text.startswith('Acme Holdings\n\nAcme Holdings is an industrial company')
    assert text.index('Consolidated results') < text.index('In 2019 Acme Holdings')
    assert len(generate.document_text(corpus.document('acme'), max_chars=50)) == 50


def test_enrich_entity(corpus):
    doc = corpus.document('acme')

    assert generate.enrich_entity(doc, accepting_validator()) == ('Placeholder Corp', 'Company')
    assert generate.enrich_entity(doc, EchoCompleter()) == ('Acme Holdings', 'Company')

    odd_type = ScriptedCompleter([(DOCUMENT_MARKER, '{"entity": " Acme ", "type": "Person"}')])
    assert generate.enrich_entity(doc, odd_type) == ('Acme', '')

    with pytest.raises(UnparseableEntity):
        generate.enrich_entity(doc, ScriptedCompleter([(DOCUMENT_MARKER, 'It is about Acme.')]))


def test_paraphrase_leaks():
    corpus = make_toy_corpus(n_docs=1)
    revenue = corpus.cell_group('acme/t0/1/3').value
    assert revenue in corpus.passage('acme/p1').text

    items = [QAItem('a', 'q', 1, ['acme/t0/1/3'], ['acme/p1', 'acme/p0']),
             QAItem('b', 'q', 0, ['acme/t0/1/3'], ['acme/p1'])]
    llm = ScriptedCompleter([('Rewrite the passage', 'Revenue rose by about a tenth.')])

    assert generate.paraphrase_leaks(corpus, items, llm) == ['acme/p1']
    assert corpus.passage('acme/p1').text == 'Revenue rose by about a tenth.'
    assert corpus.passage('acme/p0').text.startswith('Acme Holdings is an')


def test_generate_qa():
    corpus = make_toy_corpus()
    options = GenerationOptions(n_pairs=3)

    items, report = generate.generate_qa(corpus, accepting_validator(), options)

    assert report.accepted == 4 * 3
    assert report.rejected == 0
    assert report.n_items == len(items)
    assert (report.n_documents, report.n_tables, report.n_cells) == (5, 15, 315)
    assert list(report.per_association['pairs']) == [3, 3, 3, 3]

    # pairs drawn twice are asked once per prompt and emitted once
    assert len(set(item.query_id for item in items)) == len(items)
    assert len(items) % 2 == 0
    assert [item.flag for item in items[:2]] == [0, 1]

    d = report.to_dict()
    assert d['per_association'][SAME_DATE] == {'pairs': 3, 'accepted': 3, 'rejected': 0}


def test_generate_qa_rejections():
    corpus = make_toy_corpus(n_docs=2)
    options = GenerationOptions(n_pairs=2, associations=[SAME_DATE, RANDOM])

    items, report = generate.generate_qa(corpus, rejecting_validator(), options)
    assert items == []
    assert report.rejected == 4
    assert report.to_dict()['reasons'] == {'unrelated cells': 4}

    garbled = ScriptedCompleter([(DATA_MARKER, 'no idea')])
    _, report = generate.generate_qa(corpus, garbled, options)
    assert report.to_dict()['reasons'] == {generate.UNPARSEABLE: 4}


def test_generate_qa_enriches_entities():
    corpus = make_toy_corpus(n_docs=2)
    options = GenerationOptions(n_pairs=1, associations=[RANDOM], enrich=True)

    generate.generate_qa(corpus, accepting_validator(), options)

    assert corpus.document('acme').entity == 'Placeholder Corp'
    assert corpus.cell_group('borealis/t0/1/1').doc_meta.entity == 'Placeholder Corp'


@pytest.mark.parametrize('file_name, headers, slot', [
    (generate.ENTITY_PROMPT_FILE,
     ['Role:', 'Context:', 'Instructions:', 'Output Format:', 'One-Shot Demonstration:'],
     DOCUMENT_MARKER + '\n{document}'),
    (generate.QA_PROMPT_FILE,
     ['Role:', 'Context:', 'Instructions:', 'Output Format:'],
     DATA_MARKER + '\n{context}'),
])
def test_prompt_sections(file_name, headers, slot):
    template = generate.read_prompt(file_name)
    lines = template.splitlines()

    for header in headers:
        assert any(line.startswith(header) for line in lines), header
    assert template.rstrip().endswith(slot)

    # json examples survive formatting with their braces
    text = template.format(document='D', context='C')
    assert '{"' in text and '{{' not in text
