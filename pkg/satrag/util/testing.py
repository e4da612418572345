# satrag
# See full license in LICENSE.txt.

"""
Fixtures shared by the test suites: a deterministic toy corpus of company
reports, a synthetic benchmark over it, a brute force retrieval oracle and a
few assertions.
"""

import json
import os

import numpy as np

from ..cellgroups import make_cell_id
from ..corpus import Corpus
from ..dataset_gen.generate import DATA_MARKER
from ..evaluate.harness import QAItem
from ..graph.sat import build_sat_graph, canonicalize, linearize_key
from ..ingest import document_from_record
from ..providers import ScriptedCompleter, cosine_matrix, tokenize

COMPANIES = [
    ('acme', 'Acme Holdings', 'industrial', 'Denver'),
    ('borealis', 'Borealis Energy', 'energy', 'Calgary'),
    ('cobalt', 'Cobalt Bank', 'banking', 'Charlotte'),
    ('dunmore', 'Dunmore Foods', 'food', 'Dublin'),
    ('everly', 'Everly Motors', 'automotive', 'Detroit'),
]

YEARS = ['2017', '2018', '2019', '2020']
ANNUAL_ROWS = ['Revenue', 'Cost of sales', 'Operating income', 'Net income', 'Total assets',
               'Total liabilities', 'Employees']

QUARTER_YEAR = '2019'
QUARTERS = ['Q1', 'Q2', 'Q3', 'Q4']
QUARTERLY_ROWS = ['Sales', 'Gross margin', 'Operating expenses', 'Orders', 'Backlog']

REGION_YEARS = ['2018', '2019', '2020']
REGIONS = ['North America', 'Europe', 'Asia Pacific', 'Latin America', 'Middle East']

ANNUAL_TABLE = 't0'
QUARTERLY_TABLE = 't1'
REGION_TABLE = 't2'


def _amount(rng):
    return "{:,}".format(int(rng.randint(100, 99999)))


def _percent(rng):
    return "%.1f%%" % (rng.randint(100, 700) / 10.0)


def toy_records(seed=0, n_docs=5):
    """
    structured-grid records of the toy corpus

    Each document holds an annual results table (7 x 4 years), a quarterly
    table with a merged year header over Q1-Q4 and a regional breakdown with a
    merged row header, interleaved with four passages.
    """
    rng = np.random.RandomState(seed)
    records = []
    for doc_id, name, industry, city in COMPANIES[:n_docs]:

        annual = [[''] + YEARS]
        for row in ANNUAL_ROWS:
            annual.append([row] + [_amount(rng) for _ in YEARS])

        quarterly = [['', QUARTER_YEAR, QUARTER_YEAR, QUARTER_YEAR, QUARTER_YEAR],
                     [''] + QUARTERS]
        for row in QUARTERLY_ROWS:
            quarterly.append([row] + [_percent(rng) if row == 'Gross margin' else _amount(rng)
                                      for _ in QUARTERS])

        regional = [['', ''] + REGION_YEARS]
        for region in REGIONS:
            regional.append(['Revenue', region] + [_amount(rng) for _ in REGION_YEARS])

        revenue_2019 = annual[1][YEARS.index('2019') + 1]
        passages = [
            "%s is an %s company headquartered in %s." % (name, industry, city)
            if industry[0] in 'aeiou' else
            "%s is a %s company headquartered in %s." % (name, industry, city),
            "In 2019 %s reported revenue of %s, driven by demand in its home market." %
            (name, revenue_2019),
            "Management of %s expects %s to remain its fastest growing region." %
            (name, REGIONS[int(rng.randint(len(REGIONS)))]),
            "The board of %s approved a dividend and a share buyback programme." % name,
        ]

        records.append({
            'doc_id': doc_id,
            'title': name,
            'entity': name,
            'passages': [{'passage_id': 'p%s' % i, 'text': text, 'position': 2 * i}
                         for i, text in enumerate(passages)],
            'tables': [
                {'table_id': ANNUAL_TABLE, 'caption': 'Consolidated results', 'position': 1,
                 'grid': annual, 'spans': []},
                {'table_id': QUARTERLY_TABLE, 'caption': 'Quarterly sales', 'position': 3,
                 'grid': quarterly,
                 'spans': [{'row': 0, 'col': 1, 'row_span': 1, 'col_span': len(QUARTERS)}]},
                {'table_id': REGION_TABLE, 'caption': 'Revenue by region', 'position': 5,
                 'grid': regional,
                 'spans': [{'row': 1, 'col': 0, 'row_span': len(REGIONS), 'col_span': 1}]},
            ],
        })
    return records


def make_toy_corpus(seed=0, n_docs=5):
    """
    Returns
    -------
    Corpus
        5 documents, 15 tables, 315 data cells with the defaults
    """
    return Corpus.from_documents([document_from_record(r) for r in toy_records(seed, n_docs)])


def write_toy_inputs(input_dir, seed=0, n_docs=5):
    """one .json document per company in input_dir"""
    if not os.path.isdir(input_dir):
        os.makedirs(input_dir)
    paths = []
    for record in toy_records(seed, n_docs):
        path = os.path.join(input_dir, '%s.json' % record['doc_id'])
        with open(path, 'w') as f:
            json.dump(record, f, indent=1, sort_keys=True)
        paths.append(path)
    return paths


def toy_cell_id(doc_id, table_id, row, col):
    return make_cell_id(doc_id, table_id, row, col)


def _attribute_phrase(label):
    words = label.replace(' / ', ' in ')
    return words[:1].lower() + words[1:]


def make_benchmark(corpus, g=None, n_queries=50, seed=0, comparison_share=0.3, flag=0):
    """
    Synthetic questions over single graph facts

    Point questions ask for one cell. Comparison questions ask for the growth
    of a yearly figure and need the cell of the year before as well.

    Returns
    -------
    list of QAItem
    """
    if g is None:
        g, _ = build_sat_graph(corpus.cell_groups)

    rng = np.random.RandomState(seed)
    leaves = sorted(g.leaves.values(), key=lambda leaf: leaf.cell_id)
    picks = rng.choice(len(leaves), size=min(n_queries, len(leaves)), replace=False)

    items = []
    for i, pick in enumerate(picks):
        leaf = leaves[pick]
        s, t, a = leaf.composite_key
        subject = g.subjects[s].label
        temporal = g.temporals[t]
        attribute = _attribute_phrase(g.attributes[a].label)

        gold = [leaf]
        siblings = g.temporal_siblings(t)
        pos = siblings.index(t)
        previous = g.leaves_for((s, siblings[pos - 1], a)) if pos > 0 else []

        if previous and rng.rand() < comparison_share:
            question = "what was the growth in %s of %s in %s?" % (attribute, subject,
                                                                   temporal.raw_label)
            gold = gold + previous[:1]
        else:
            question = "what was the %s of %s in %s?" % (attribute, subject, temporal.raw_label)

        answer = ' '.join("%s's %s is %s at %s." % (subject, g.attributes[x.composite_key[2]]
                                                    .label, x.value,
                                                    g.temporals[x.composite_key[1]].raw_label)
                          for x in gold)

        passage_ids = []
        if flag == 1:
            doc = corpus.document(leaf.doc_id)
            table = corpus.table(leaf.doc_id, leaf.table_id)
            nearest = sorted(doc.passages, key=lambda p: (abs(p.position - table.position),
                                                          p.position))
            passage_ids = [p.uid for p in nearest[:1]]

        items.append(QAItem('b%03d' % i, question, flag,
                            [x.cell_id for x in gold], passage_ids, answer,
                            [x.value for x in gold]))
    return items


def accepting_validator():
    """a scripted completer that turns every pair into a question"""
    return ScriptedCompleter(
        [(DATA_MARKER, '{"question": "How do these figures relate ({digest})?", '
                       '"answer": "They describe the same period."}')],
        default='{"entity": "Placeholder Corp", "type": "Company"}')


def rejecting_validator(reason='unrelated cells'):
    return ScriptedCompleter([(DATA_MARKER, '{"reject": true, "reason": "%s"}' % reason)])


def distinct_bucket_words(embedder, candidates, n):
    """n candidate words whose tokens land in pairwise different embedder buckets"""
    chosen, buckets = [], set()
    for word in candidates:
        b = set(embedder.bucket(t) for t in tokenize(word))
        if b & buckets:
            continue
        chosen.append(word)
        buckets |= b
        if len(chosen) == n:
            return chosen
    raise ValueError("only %s of %s collision free words" % (len(chosen), n))


def _is_under(nodes, node, ancestor):
    while node is not None:
        if node == ancestor:
            return True
        node = nodes[node].parent
    return False


def _best(embedder, hint, labels):
    """index of the label with the highest cosine to hint, first on ties"""
    sims = cosine_matrix(embedder.embed([hint]), embedder.embed(labels))[0]
    return int(np.argmax(sims)), float(sims.max())


def oracle_focal(g, slots, q, embedder, threshold):
    """
    Focal (cell_id, score) pairs by a linear scan over every leaf

    Resolves each hint against all node labels, keeps the leaves whose key sits
    under the resolved subject and temporal nodes and carries the resolved
    attribute, and scores them against the query.
    """
    resolved = {}
    for kind, hint, nodes in (('s', slots.subject_hint, g.subjects),
                              ('t', slots.temporal_hint, g.temporals),
                              ('a', slots.attribute_hint, g.attributes)):
        if not hint:
            continue
        ids = sorted(nodes)
        if kind == 't' and slots.temporal_value is not None:
            exact = [i for i in ids if nodes[i].normalized.key == slots.temporal_value.key]
            if exact:
                resolved[kind] = exact[0]
                continue
        best, score = _best(embedder, hint, [nodes[i].label for i in ids])
        if score >= threshold:
            resolved[kind] = ids[best]

    q_vec = embedder.embed([q.text])
    scored = []
    for leaf in g.leaves.values():
        s, t, a = leaf.composite_key
        if 's' in resolved and not _is_under(g.subjects, s, resolved['s']):
            continue
        if 't' in resolved and not _is_under(g.temporals, t, resolved['t']):
            continue
        if 'a' in resolved and a != resolved['a']:
            continue
        if not resolved:
            continue
        key_vec = embedder.embed([linearize_key(g, leaf.composite_key)])
        score = float(np.clip(cosine_matrix(q_vec, key_vec)[0, 0], 0.0, 1.0))
        scored.append((leaf.cell_id, score))
    return sorted(scored, key=lambda x: (-x[1], x[0]))


def assert_ranked(tuples):
    scores = [t.score for t in tuples]
    assert all(a >= b for a, b in zip(scores, scores[1:])), scores


def assert_no_foreign_passages(pkg):
    docs = set(f.doc_id for f in pkg.facts)
    foreign = [p.uid for p, _ in pkg.passages if p.doc_id not in docs]
    assert not foreign, foreign


def labels_of(g, kind):
    nodes = {'subject': g.subjects, 'temporal': g.temporals, 'attribute': g.attributes}[kind]
    return sorted(canonicalize(n.label) for n in nodes.values())
