# satrag
# See full license in LICENSE.txt.

import logging
import os
from collections import OrderedDict

import numpy as np
import pandas as pd
import yaml

from .. import tracing
from ..corpus import read_jsonl, write_jsonl
from ..errors import EmptyGold, MalformedInput, SatragError
from ..fusion import answer_result, fetch_context, linearize
from ..fusion import DEFAULT_PROMPT_BUDGET, PASSAGES_PER_FACT
from ..graph.sat import build_sat_graph
from ..providers import Query
from ..retrieval import CHUNK_BASELINE, RetrievalResult, Retriever
from .metrics import DEFAULT_CLAIM_THRESHOLD
from .metrics import hit_at_k, recall_at_k, precision_at_k, cell_metrics
from .metrics import exact_value_recall, claim_alignment

logger = logging.getLogger(__name__)

CUTOFFS_F0 = [1, 3, 5, 10]
CUTOFFS_F1 = [4, 12, 20, 40]

METRICS = ['HR', 'R', 'P', 'C-HR', 'C-R', 'C-P']
NATURAL = 'natural'


class QAItem(object):
    """
    One benchmark question with its gold evidence

    gold_values are the numbers and names an answer is expected to state verbatim.
    """

    def __init__(self, query_id, question, flag=0, gold_cell_ids=(), gold_passage_ids=(),
                 gold_answer='', gold_values=()):
        self.query_id = query_id
        self.question = question
        self.flag = flag
        self.gold_cell_ids = set(gold_cell_ids)
        self.gold_passage_ids = set(gold_passage_ids)
        self.gold_answer = gold_answer
        self.gold_values = list(gold_values)

    def query(self):
        return Query(self.question, self.flag, self.query_id)

    def to_record(self):
        return OrderedDict([
            ('query_id', self.query_id),
            ('question', self.question),
            ('flag', self.flag),
            ('gold_cell_ids', sorted(self.gold_cell_ids)),
            ('gold_passage_ids', sorted(self.gold_passage_ids)),
            ('gold_answer', self.gold_answer),
            ('gold_values', list(self.gold_values)),
        ])

    @classmethod
    def from_record(cls, record):
        missing = [f for f in ('query_id', 'question') if f not in record]
        if missing:
            raise MalformedInput("qa record is missing %s" % missing)
        return cls(record['query_id'], record['question'], int(record.get('flag', 0)),
                   record.get('gold_cell_ids', []), record.get('gold_passage_ids', []),
                   record.get('gold_answer', ''), record.get('gold_values', []))

    def __eq__(self, other):
        return isinstance(other, QAItem) and self.to_record() == other.to_record()

    def __repr__(self):
        return "QAItem(%s, %r)" % (self.query_id, self.question)


def read_qa_set(path):
    items = [QAItem.from_record(r) for r in read_jsonl(path)]
    ids = [item.query_id for item in items]
    if len(set(ids)) != len(ids):
        raise MalformedInput("duplicate query ids", source=path)
    logger.info("read %s qa items from %s" % (len(items), path))
    return items


def write_qa_set(path, items):
    write_jsonl(path, [item.to_record() for item in items])
    logger.info("wrote %s qa items to %s" % (len(items), path))


def default_cutoffs(qa_set):
    """the contextual cutoffs when every item needs passages, else the table-only cutoffs"""
    if qa_set and all(item.flag == 1 for item in qa_set):
        return list(CUTOFFS_F1)
    return list(CUTOFFS_F0)


class MetricReport(object):
    """
    per_k: DataFrame with rows HR, R, P, C-HR, C-R, C-P and one column per
    cutoff plus 'natural'
    """

    def __init__(self, label, per_k, value_accuracy_recall, claim_precision, claim_recall,
                 n_queries, n_failures=0, diagnostics=None, config=None):
        self.label = label
        self.per_k = per_k
        self.value_accuracy_recall = value_accuracy_recall
        self.claim_precision = claim_precision
        self.claim_recall = claim_recall
        self.n_queries = n_queries
        self.n_failures = n_failures
        self.diagnostics = diagnostics if diagnostics is not None else pd.DataFrame()
        self.config = config or {}

    def scalars(self):
        return OrderedDict([
            ('value_accuracy_recall', self.value_accuracy_recall),
            ('claim_precision', self.claim_precision),
            ('claim_recall', self.claim_recall),
            ('n_queries', self.n_queries),
            ('n_failures', self.n_failures),
        ])

    def to_dict(self):
        per_k = {str(c): {m: float(self.per_k.loc[m, c]) for m in self.per_k.index}
                 for c in self.per_k.columns}
        d = dict(self.scalars())
        d.update(label=self.label, per_k=per_k, config=self.config)
        return d

    def __eq__(self, other):
        return isinstance(other, MetricReport) and \
            self.scalars() == other.scalars() and self.per_k.equals(other.per_k)

    def __repr__(self):
        return "MetricReport(%s, n_queries=%s)" % (self.label, self.n_queries)


def _safe(fn, *args):
    try:
        return fn(*args)
    except EmptyGold:
        return np.nan


def _rank_metrics(ids, cells, gold_units, gold_cells, k):
    row = OrderedDict()
    row['HR'] = _safe(hit_at_k, ids, gold_units, k)
    row['R'] = _safe(recall_at_k, ids, gold_units, k)
    row['P'] = precision_at_k(ids, gold_units, k) if gold_units else np.nan
    if gold_cells:
        row['C-HR'], row['C-R'], row['C-P'] = cell_metrics(cells, gold_cells, k)
    else:
        row['C-HR'] = row['C-R'] = row['C-P'] = np.nan
    return row


class Evaluator(object):
    """
    Runs one retrieval configuration over a QA set

    The retriever is reused across configurations so node and chunk
    embeddings are computed once.
    """

    def __init__(self, corpus, providers, g=None, retriever=None,
                 passages_per_fact=PASSAGES_PER_FACT, budget=DEFAULT_PROMPT_BUDGET,
                 claim_threshold=DEFAULT_CLAIM_THRESHOLD):
        if retriever is None:
            if g is None:
                g, _ = build_sat_graph(corpus.cell_groups, providers.subject_extractor)
            retriever = Retriever(g, providers, corpus)
        self.corpus = corpus
        self.providers = providers
        self.retriever = retriever
        self.passages_per_fact = passages_per_fact
        self.budget = budget
        self.claim_threshold = claim_threshold
        self.passage_cache = {}

    def units(self, result, q, cfg):
        """
        ranked (unit id, cells, rank) triples

        Graph mode ranks each cell followed by the passages its fact pulls in
        (when fusion applies); chunk mode ranks chunks.
        """
        if result.mode == CHUNK_BASELINE:
            return [(c.chunk_id, set(c.chunk.cell_ids), r) for r, c in enumerate(result.chunks)]

        fuse = q.contextual_flag == 1 and cfg.enable_fusion
        units, seen = [], set()
        for r, t in enumerate(result.tuples):
            units.append((t.cell_id, {t.cell_id}, r))
            if not fuse:
                continue
            for p, _ in fetch_context(linearize(t), self.corpus, self.providers.embedder,
                                      self.passages_per_fact, self.passage_cache):
                if p.uid not in seen:
                    seen.add(p.uid)
                    units.append((p.uid, set(), r))
        return units

    def gold_units(self, item, mode):
        if mode == CHUNK_BASELINE:
            return set(c.chunk_id for c in self.retriever.chunk_index.chunks
                       if item.gold_cell_ids & set(c.cell_ids) or
                       c.chunk_id in item.gold_passage_ids)
        return item.gold_cell_ids | item.gold_passage_ids

    def evaluate_item(self, item, cfg, cutoffs, forced_k=None):
        """metrics of one QA item as a flat dict"""
        q = item.query()
        depth = max(max(cutoffs), cfg.top_k, forced_k or 0)
        deep = self.retriever.retrieve(q, cfg.replace(top_k=depth))

        units = self.units(deep, q, cfg)
        ids = [u for u, _, _ in units]
        cells = [c for _, c, _ in units]
        gold = self.gold_units(item, deep.mode)

        row = OrderedDict(query_id=item.query_id, flag=item.flag)
        for k in cutoffs:
            for m, v in _rank_metrics(ids, cells, gold, item.gold_cell_ids, k).items():
                row['%s@%s' % (m, k)] = v

        if forced_k:
            natural_k = forced_k
        elif deep.mode == CHUNK_BASELINE:
            natural_k = cfg.top_k
        else:
            natural_k = max(1, len([u for u in units if u[2] < cfg.top_k]))
        for m, v in _rank_metrics(ids, cells, gold, item.gold_cell_ids, natural_k).items():
            row['%s@%s' % (m, NATURAL)] = v
        row['natural_k'] = natural_k

        natural = RetrievalResult(deep.tuples[:cfg.top_k], deep.chunks[:cfg.top_k],
                                  deep.diagnostics, deep.slots, deep.mode)
        _, answer = answer_result(natural, q, cfg, self.providers, self.corpus,
                                  self.passages_per_fact, self.budget, self.passage_cache)

        row['value_recall'] = _safe(exact_value_recall, answer, item.gold_values)
        if item.gold_answer:
            row['claim_precision'], row['claim_recall'] = claim_alignment(
                answer, item.gold_answer, self.providers.embedder, self.claim_threshold)
        else:
            row['claim_precision'] = row['claim_recall'] = np.nan

        row['n_units'] = len(units)
        row['fallback'] = deep.diagnostics.get('fallback')
        row['error'] = deep.diagnostics.get('error') or answer.diagnostics.get('error')
        return row

    def run(self, qa_set, cfg, cutoffs=None, forced_k=None, label='full'):
        """
        Returns
        -------
        MetricReport
        """
        cutoffs = sorted(cutoffs or default_cutoffs(qa_set))
        t0 = tracing.print_elapsed_time()

        rows, n_failures = [], 0
        for item in qa_set:
            try:
                rows.append(self.evaluate_item(item, cfg, cutoffs, forced_k))
            except SatragError as e:
                logger.warning("query %s failed: %s" % (item.query_id, e))
                n_failures += 1
                rows.append(OrderedDict(query_id=item.query_id, flag=item.flag,
                                        error="%s: %s" % (type(e).__name__, e)))

        diagnostics = pd.DataFrame(rows)
        # failed queries have no metric columns
        ok = diagnostics[diagnostics['natural_k'].notnull()] \
            if 'natural_k' in diagnostics else diagnostics.iloc[0:0]

        def mean(column):
            if column not in ok or ok[column].isnull().all():
                return 0.0
            return float(ok[column].astype(float).mean())

        columns = list(cutoffs) + [NATURAL]
        per_k = pd.DataFrame([[mean('%s@%s' % (m, c)) for c in columns] for m in METRICS],
                             index=METRICS, columns=columns)

        report = MetricReport(label, per_k,
                              value_accuracy_recall=mean('value_recall'),
                              claim_precision=mean('claim_precision'),
                              claim_recall=mean('claim_recall'),
                              n_queries=len(qa_set),
                              n_failures=n_failures,
                              diagnostics=diagnostics,
                              config=dict(cfg.to_dict(), cutoffs=cutoffs, forced_k=forced_k))

        tracing.print_elapsed_time("evaluate %s (%s queries)" % (label, len(qa_set)), t0)
        tracing.trace_records(rows, 'evaluate.%s' % label)
        return report


def run_eval(corpus, qa_set, cfg, providers, g=None, cutoffs=None, forced_k=None,
             label='full', evaluator=None, **kwargs):
    """
    Evaluate one retrieval configuration over a QA set

    Parameters
    ----------
    corpus : Corpus
    qa_set : list of QAItem
    cfg : RetrievalConfig
    providers : ProviderSet
    g : SATGraph, optional
        built from the corpus when not given
    cutoffs : list of int, optional
        defaults to 1, 3, 5, 10 (or 4, 12, 20, 40 when every item needs passages)
    forced_k : int, optional
        evaluate the natural column at this k instead of the natural return size

    Returns
    -------
    MetricReport
    """
    evaluator = evaluator or Evaluator(corpus, providers, g, **kwargs)
    return evaluator.run(qa_set, cfg, cutoffs, forced_k, label)


ABLATIONS = OrderedDict([
    ('full', {}),
    ('no-sat', {'mode': CHUNK_BASELINE}),
    ('no-sne', {'enable_sne': False}),
    ('no-fusion', {'enable_fusion': False}),
])


def run_ablation_sweep(corpus, qa_set, cfg, providers, g=None, cutoffs=None, forced_k=None,
                       **kwargs):
    """
    full pipeline, without the graph (chunk baseline), without neighbor
    expansion and without passage fusion

    Returns
    -------
    OrderedDict of label -> MetricReport
    """
    evaluator = Evaluator(corpus, providers, g, **kwargs)
    reports = OrderedDict()
    for label, change in ABLATIONS.items():
        logger.info("ablation %s" % label)
        reports[label] = evaluator.run(qa_set, cfg.replace(**change), cutoffs, forced_k, label)
    return reports


def write_report(report, output_dir):
    """
    <label>.metrics.csv (per-k table) and <label>.report.yaml (everything else)

    Returns
    -------
    list of str
        the files written
    """
    if not os.path.isdir(output_dir):
        os.makedirs(output_dir)

    csv_path = os.path.join(output_dir, '%s.metrics.csv' % report.label)
    yaml_path = os.path.join(output_dir, '%s.report.yaml' % report.label)

    report.per_k.to_csv(csv_path, index_label='metric')
    with open(yaml_path, 'w') as f:
        yaml.safe_dump(report.to_dict(), f, default_flow_style=False)

    logger.info("wrote report %s to %s" % (report.label, output_dir))
    return [csv_path, yaml_path]


def format_report(report):
    """the per-k table and the answer metrics as text"""
    lines = ["%s (%s queries, %s failures)" % (report.label, report.n_queries, report.n_failures),
             report.per_k.round(4).to_string(), '']
    for name in ('value_accuracy_recall', 'claim_precision', 'claim_recall'):
        lines.append("%-22s %.4f" % (name, getattr(report, name)))
    return '\n'.join(lines)
