# satrag
# See full license in LICENSE.txt.

import os

import pandas as pd
import pytest
import yaml

from ...errors import MalformedInput
from ...graph.sat import build_sat_graph
from ...providers import ProviderSet
from ...retrieval import RetrievalConfig, CHUNK_BASELINE
from ...util.testing import make_toy_corpus, make_benchmark
from .. import harness
from ..harness import QAItem, Evaluator, METRICS, NATURAL, CUTOFFS_F0, CUTOFFS_F1


@pytest.fixture(scope='module')
def corpus():
    return make_toy_corpus()


@pytest.fixture(scope='module')
def g(corpus):
    return build_sat_graph(corpus.cell_groups)[0]


@pytest.fixture(scope='module')
def providers(g):
    return ProviderSet.mock(gazetteer=[n.label for n in g.subjects.values()])


@pytest.fixture(scope='module')
def evaluator(corpus, providers, g):
    return Evaluator(corpus, providers, g)


@pytest.fixture(scope='module')
def point_set(corpus, g):
    return make_benchmark(corpus, g, n_queries=20, seed=3, comparison_share=0.0)


def test_qa_set_io(tmpdir, point_set):
    path = str(tmpdir.join('qa.jsonl'))

    harness.write_qa_set(path, point_set)
    items = harness.read_qa_set(path)

    assert items == point_set
    assert items[0].query().query_id == 'b000'

    harness.write_qa_set(path, point_set[:2] + point_set[:1])
    with pytest.raises(MalformedInput):
        harness.read_qa_set(path)

    with pytest.raises(MalformedInput):
        QAItem.from_record({'query_id': 'x'})


def test_default_cutoffs():
    f0 = QAItem('a', 'q', 0)
    f1 = QAItem('b', 'q', 1)

    assert harness.default_cutoffs([f1, f1]) == CUTOFFS_F1
    assert harness.default_cutoffs([f0, f1]) == CUTOFFS_F0
    assert harness.default_cutoffs([]) == CUTOFFS_F0


def test_point_lookups(evaluator, point_set):
    report = evaluator.run(point_set, RetrievalConfig())

    assert report.n_queries == 20
    assert report.n_failures == 0
    assert list(report.per_k.index) == METRICS
    assert list(report.per_k.columns) == CUTOFFS_F0 + [NATURAL]

    # every point question resolves to exactly its gold cell
    assert report.per_k.loc['HR', 1] == 1.0
    assert report.per_k.loc['P', NATURAL] == 1.0
    assert report.per_k.loc['P', 10] == pytest.approx(0.1)
    assert report.value_accuracy_recall == 1.0
    assert (report.diagnostics['natural_k'] == 1).all()


def test_ablation_sweep(corpus, providers, g, point_set):
    reports = harness.run_ablation_sweep(corpus, point_set, RetrievalConfig(), providers, g)

    assert list(reports) == ['full', 'no-sat', 'no-sne', 'no-fusion']
    full = reports['full']

    # table-only questions never pull passages
    assert reports['no-fusion'] == full
    assert full.value_accuracy_recall >= reports['no-sne'].value_accuracy_recall
    assert full.per_k.loc['C-HR', 1] >= reports['no-sat'].per_k.loc['C-HR', 1]
    assert reports['no-sat'].config['mode'] == CHUNK_BASELINE
    assert (reports['no-sat'].diagnostics['natural_k'] == 5).all()



def test_ablation_ordering_on_mixed_questions(corpus, providers, g):
    # the same point questions, every other one asking for its surrounding text
    closed = make_benchmark(corpus, g, n_queries=50, seed=17, comparison_share=0.0, flag=0)
    contextual = make_benchmark(corpus, g, n_queries=50, seed=17, comparison_share=0.0, flag=1)
    qa_set = [contextual[i] if i % 2 else closed[i] for i in range(50)]
    assert len(set(item.query_id for item in qa_set)) == 50

    reports = harness.run_ablation_sweep(corpus, qa_set, RetrievalConfig(), providers, g)
    recall = dict((label, r.value_accuracy_recall) for label, r in reports.items())

    assert recall['full'] >= recall['no-sne'] >= recall['no-fusion'] > recall['no-sat']
    assert recall['full'] - recall['no-sat'] >= 0.15
    assert all(r.n_queries == 50 for r in reports.values())


def test_comparisons_need_sibling_expansion(evaluator, corpus, g):
    qa_set = make_benchmark(corpus, g, n_queries=10, seed=5, comparison_share=1.0)
    assert any(len(item.gold_cell_ids) == 2 for item in qa_set)

    full = evaluator.run(qa_set, RetrievalConfig())
    no_sne = evaluator.run(qa_set, RetrievalConfig(enable_sne=False), label='no-sne')

    assert full.per_k.loc['C-R', NATURAL] > no_sne.per_k.loc['C-R', NATURAL]


def test_contextual_questions(evaluator, corpus, g):
    qa_set = make_benchmark(corpus, g, n_queries=10, seed=3, comparison_share=0.0, flag=1)

    full = evaluator.run(qa_set, RetrievalConfig())
    no_fusion = evaluator.run(qa_set, RetrievalConfig(enable_fusion=False), label='no-fusion')

    assert full.config['cutoffs'] == CUTOFFS_F1
    # half of the gold units are passages, and only fusion brings passages in
    assert no_fusion.per_k.loc['R', 40] == pytest.approx(0.5)
    assert full.per_k.loc['R', 40] >= no_fusion.per_k.loc['R', 40]
    assert (full.diagnostics['n_units'] >= no_fusion.diagnostics['n_units']).all()


def test_failures_and_forced_k(evaluator, point_set):
    qa_set = point_set[:3] + [QAItem('blank', '   '), QAItem('vague', 'what was it in the?',
                                                             gold_cell_ids=['acme/t0/1/1'])]

    report = harness.run_eval(None, qa_set, RetrievalConfig(), None, forced_k=3,
                              evaluator=evaluator)

    assert report.n_queries == 5
    assert report.n_failures == 1
    d = report.diagnostics.set_index('query_id')
    assert d.loc['blank', 'error'].startswith('NoSlots')
    assert d.loc['vague', 'error'].startswith('NoSlots')
    assert d.loc['vague', 'HR@1'] == 0
    assert (d['natural_k'].dropna() == 3).all()
    assert report.config['forced_k'] == 3


def test_write_and_format_report(tmpdir, evaluator, point_set):
    report = evaluator.run(point_set[:5], RetrievalConfig(), label='small')
    output_dir = os.path.join(str(tmpdir), 'reports')

    csv_path, yaml_path = harness.write_report(report, output_dir)

    assert os.path.basename(csv_path) == 'small.metrics.csv'
    per_k = pd.read_csv(csv_path, index_col='metric')
    assert list(per_k.index) == METRICS
    assert list(per_k.columns) == [str(c) for c in CUTOFFS_F0] + [NATURAL]

    with open(yaml_path) as f:
        d = yaml.safe_load(f)
    assert d['label'] == 'small'
    assert d['n_queries'] == 5
    assert d['per_k']['natural']['HR'] == 1.0
    assert d['config']['top_k'] == 5

    text = harness.format_report(report)
    assert text.startswith('small (5 queries, 0 failures)')
    assert 'value_accuracy_recall' in text
