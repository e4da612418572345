# satrag
# See full license in LICENSE.txt.

"""
Synthetic QA generation

Cells are paired by shuffling the whole corpus and matching on exact keys
(date, subject, entity), never by embedding similarity, so the questions are
not biased towards what a dense retriever already finds. A completion
provider then writes a question for each pair or rejects it.
"""

import hashlib
import json
import logging
import os
import re
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pandas as pd

from .. import tracing
from ..errors import ConfigError, InsufficientCandidates, NoAttribute
from ..errors import UnparseableEntity, UnparseableValidation
from ..evaluate.harness import QAItem
from ..evaluate.metrics import canonical_value
from ..graph.sat import lift_cell_group
from ..graph.temporal import UNDATED
from ..ingest import serialize_table
from ..providers import ECHO_PREFIX, DefaultSubjectExtractor

logger = logging.getLogger(__name__)

SAME_DATE = 'same-date'
SAME_SUBJECT = 'same-subject'
SAME_ENTITY = 'same-entity'
RANDOM = 'random'
ASSOCIATIONS = (SAME_DATE, SAME_SUBJECT, SAME_ENTITY, RANDOM)

ENTITY_TYPES = ('Company', 'Section', 'Metric', 'Event')

PROMPTS_DIR = os.path.join(os.path.dirname(__file__), 'prompts')
ENTITY_PROMPT_FILE = 'entity_extraction.txt'
QA_PROMPT_FILE = 'qa_generation.txt'
PARAPHRASE_PROMPT_FILE = 'paraphrase.txt'

# the slot lines the templates end with
DOCUMENT_MARKER = 'Document:'
DATA_MARKER = 'Data (Stochastically Paired):'

MAX_DOCUMENT_CHARS = 6000

INCOMPLETE_CONTEXT = 'incomplete context'
UNPARSEABLE = 'unparseable validation'
REJECT = 'REJECT'

JSON_OBJECT = re.compile(r"\{.*\}", re.DOTALL)


def read_prompt(file_name):
    with open(os.path.join(PROMPTS_DIR, file_name)) as f:
        return f.read()


def _json_body(text):
    match = JSON_OBJECT.search(text or '')
    if not match:
        return None
    try:
        body = json.loads(match.group(0))
    except ValueError:
        return None
    return body if isinstance(body, dict) else None


def qa_id(cell_ids, question):
    h = hashlib.sha1(('\n'.join(sorted(cell_ids)) + '\n' + question).encode('utf-8'))
    return 'q' + h.hexdigest()[:12]


class GenerationOptions(object):

    FIELDS = ('seed', 'associations', 'n_pairs', 'degree', 'window', 'paraphrase', 'enrich',
              'max_workers')

    def __init__(self, seed=0, associations=ASSOCIATIONS, n_pairs=10, degree=2, window=2,
                 paraphrase=False, enrich=False, max_workers=4):
        self.seed = int(seed)
        self.associations = list(associations)
        self.n_pairs = n_pairs
        self.degree = degree
        self.window = window
        self.paraphrase = paraphrase
        self.enrich = enrich
        self.max_workers = max_workers

        unknown = [a for a in self.associations if a not in ASSOCIATIONS]
        if unknown:
            raise ConfigError("unknown associations %s" % unknown)
        if n_pairs < 0 or degree < 2 or window < 0 or max_workers < 1:
            raise ConfigError("n_pairs >= 0, degree >= 2, window >= 0 and max_workers >= 1 "
                              "required")

    @classmethod
    def from_settings(cls, settings):
        settings = dict(settings or {})
        unknown = set(settings) - set(cls.FIELDS)
        if unknown:
            raise ConfigError("unknown dataset_gen settings %s" % sorted(unknown))
        return cls(**settings)

    def to_dict(self):
        return {f: getattr(self, f) for f in self.FIELDS}


class CandidatePair(object):
    """
    cells: 2 or more CellGroups sharing the association key
    """

    def __init__(self, cells, association, seed, key=None, facts=None):
        self.cells = list(cells)
        self.association = association
        self.seed = seed
        self.key = key
        self.facts = list(facts) if facts is not None else [None] * len(self.cells)

    @property
    def cell_ids(self):
        return [cg.cell_id for cg in self.cells]

    def __repr__(self):
        return "CandidatePair(%s, %s)" % (self.association, self.cell_ids)


class QAPairDraft(object):

    def __init__(self, question, answer, source, flag=0, passage_ids=()):
        self.question = question
        self.answer = answer
        self.source = source
        self.flag = flag
        self.passage_ids = list(passage_ids)

    def __repr__(self):
        return "QAPairDraft(%r)" % self.question


class Rejection(object):

    def __init__(self, pair, reason):
        self.pair = pair
        self.reason = reason

    def __repr__(self):
        return "Rejection(%s, %r)" % (self.pair.cell_ids, self.reason)


def document_text(doc, max_chars=MAX_DOCUMENT_CHARS):
    """title, passages and tables of a document in reading order"""
    parts = [doc.title] if doc.title else []
    items = sorted([(p.position, p.text) for p in doc.passages] +
                   [(t.position, "%s\n%s" % (t.caption, serialize_table(t)))
                    for t in doc.tables], key=lambda x: x[0])
    parts.extend(text for _, text in items)
    return '\n\n'.join(parts)[:max_chars]


def enrich_entity(doc, llm):
    """
    Ask for the central entity of a document

    Returns
    -------
    entity : str
    entity_type : str

    Raises
    ------
    UnparseableEntity
        the answer is not {"entity": ..., "type": ...}
    """
    if not (doc.title or doc.passages):
        raise UnparseableEntity("document %s has neither title nor passages" % doc.doc_id)

    prompt = read_prompt(ENTITY_PROMPT_FILE).format(document=document_text(doc))
    text = llm.complete(prompt)

    # the echo double has nothing to say about entities
    if text.startswith(ECHO_PREFIX):
        return doc.title or doc.doc_id, 'Company'

    body = _json_body(text)
    if not body or not isinstance(body.get('entity'), str) or not body['entity'].strip():
        raise UnparseableEntity("no entity in answer for %s: %r" % (doc.doc_id, text[:200]))

    entity_type = body.get('type') if body.get('type') in ENTITY_TYPES else ''
    return body['entity'].strip(), entity_type


def _association_key(association, cg, fact):
    if association == RANDOM:
        return RANDOM
    if association == SAME_ENTITY:
        return cg.doc_meta.entity or None
    if fact is None:
        return None
    if association == SAME_DATE:
        return fact.temporal.key if fact.temporal.kind != UNDATED else None
    return fact.subject_path[-1].casefold()


def pair_fields(corpus, association, n_pairs, seed, degree=2, subject_extractor=None,
                strict=True):
    """
    Draw groups of cells that share an exact association key

    All cell groups of the corpus are shuffled with the seeded generator and
    dealt, in shuffled order, into buckets by key; each bucket that fills up to
    degree cells becomes one pair.

    Parameters
    ----------
    corpus : Corpus
    association : str
        same-date, same-subject, same-entity or random
    n_pairs : int
    seed : int
    degree : int
        cells per pair
    subject_extractor : optional
        used to find dates and subjects; defaults to the deterministic rules
    strict : bool
        raise InsufficientCandidates when fewer than n_pairs can be drawn

    Returns
    -------
    list of CandidatePair
    """
    if association not in ASSOCIATIONS:
        raise ConfigError("unknown association '%s'" % association)

    extractor = subject_extractor or DefaultSubjectExtractor()
    cells = list(corpus.cell_groups)
    order = np.random.RandomState(seed).permutation(len(cells))

    buckets = {}
    pairs = []
    for i in order:
        if len(pairs) >= n_pairs:
            break
        cg = cells[i]
        try:
            fact = lift_cell_group(cg, extractor)
        except NoAttribute:
            fact = None
        key = _association_key(association, cg, fact)
        if key is None:
            continue
        bucket = buckets.setdefault(key, [])
        bucket.append((cg, fact))
        if len(bucket) == degree:
            pairs.append(CandidatePair([c for c, _ in bucket], association, seed, key,
                                       [f for _, f in bucket]))
            buckets[key] = []

    if len(pairs) < n_pairs:
        msg = "only %s of %s %s pairs can be drawn" % (len(pairs), n_pairs, association)
        if strict:
            logger.error(msg)
            raise InsufficientCandidates(msg)
        logger.warning(msg)

    return pairs


def cell_context(cg, fact=None):
    """one line stating everything known about a cell"""
    meta = cg.doc_meta
    parts = []
    if meta.entity:
        parts.append("entity: %s" % meta.entity)
    if meta.title:
        parts.append("document: %s" % meta.title)
    if cg.table_caption:
        parts.append("table: %s" % cg.table_caption)
    if fact is not None:
        parts.append("subject: %s" % ' / '.join(fact.subject_path))
        parts.append("period: %s" % fact.temporal_raw)
    parts.append("headers: %s" % ' / '.join(e.label for e in cg.header_path))
    parts.append("value: %s" % cg.value)
    return '; '.join(parts)


def validate_pair(pair, llm):
    """
    Let the completer turn a pair into a question or reject it

    Cells without a subject context are rejected without asking.
    A reply that starts with REJECT instead of a JSON object is a rejection too.

    Returns
    -------
    QAPairDraft or Rejection

    Raises
    ------
    UnparseableValidation
        the answer is neither a question/answer nor a rejection
    """
    for cg, fact in zip(pair.cells, pair.facts):
        if fact is None or not (cg.doc_meta.entity or cg.doc_meta.title):
            return Rejection(pair, INCOMPLETE_CONTEXT)

    context = '\n'.join("%s. %s" % (i + 1, cell_context(cg, fact))
                        for i, (cg, fact) in enumerate(zip(pair.cells, pair.facts)))
    text = llm.complete(read_prompt(QA_PROMPT_FILE).format(context=context))

    if (text or '').strip().upper().startswith(REJECT):
        return Rejection(pair, text.strip()[len(REJECT):].strip(' :-') or 'rejected')

    body = _json_body(text)
    if body is None:
        raise UnparseableValidation("no JSON object in %r" % text[:200])
    if body.get('reject') is True:
        return Rejection(pair, str(body.get('reason') or 'rejected'))

    question, answer = body.get('question'), body.get('answer')
    if not (isinstance(question, str) and question.strip() and
            isinstance(answer, str) and answer.strip()):
        raise UnparseableValidation("answer lacks question/answer: %r" % text[:200])
    return QAPairDraft(question.strip(), answer.strip(), pair)


def adjacent_passages(corpus, doc_id, table_id, window):
    """the window passages nearest the table in reading order"""
    table = corpus.table(doc_id, table_id)
    passages = sorted(corpus.passages_of(doc_id),
                      key=lambda p: (abs(p.position - table.position), p.position))
    return [p.uid for p in passages[:window]]


def emit_qa(drafts, corpus, window=2):
    """
    One table-only (flag 0) and one contextual (flag 1) QA item per draft

    Drafts over the same cells with the same question are emitted once.

    Returns
    -------
    list of QAItem
    """
    items = []
    seen = set()
    for draft in drafts:
        cell_ids = sorted(draft.source.cell_ids)
        question_hash = hashlib.sha1(draft.question.encode('utf-8')).hexdigest()
        if (tuple(cell_ids), question_hash) in seen:
            continue
        seen.add((tuple(cell_ids), question_hash))

        values = [canonical_value(cg.value) for cg in draft.source.cells]
        qid = qa_id(cell_ids, draft.question)
        items.append(QAItem(qid, draft.question, 0, cell_ids, [], draft.answer, values))

        passage_ids = []
        for cg in draft.source.cells:
            for uid in adjacent_passages(corpus, cg.doc_id, cg.table_id, window):
                if uid not in passage_ids:
                    passage_ids.append(uid)
        draft.passage_ids = passage_ids
        items.append(QAItem(qid + '-f1', draft.question, 1, cell_ids, passage_ids,
                            draft.answer, values))
    return items


def paraphrase_leaks(corpus, items, llm):
    """
    Rewrite gold passages of contextual items that quote a gold cell value verbatim

    Passages are changed in place.

    Returns
    -------
    list of str
        uids of the rewritten passages
    """
    template = read_prompt(PARAPHRASE_PROMPT_FILE)
    rewritten = []
    for item in items:
        if item.flag != 1:
            continue
        raw = [corpus.cell_group(c).value for c in sorted(item.gold_cell_ids)]
        for uid in sorted(item.gold_passage_ids):
            if uid in rewritten:
                continue
            passage = corpus.passage(uid)
            leaked = [v for v in raw if v and v in passage.text]
            if not leaked:
                continue
            passage.text = llm.complete(template.format(passage=passage.text,
                                                        values=', '.join(leaked)))
            rewritten.append(uid)
    if rewritten:
        logger.info("paraphrased %s passages quoting table values" % len(rewritten))
    return rewritten


class GenerationReport(object):

    def __init__(self, accepted=0, rejected=0, reasons=None, per_association=None,
                 n_documents=0, n_tables=0, n_cells=0, n_items=0, paraphrased=0):
        self.accepted = accepted
        self.rejected = rejected
        self.reasons = reasons if reasons is not None else pd.Series([], dtype=int)
        self.per_association = per_association if per_association is not None \
            else pd.DataFrame(columns=['pairs', 'accepted', 'rejected'])
        self.n_documents = n_documents
        self.n_tables = n_tables
        self.n_cells = n_cells
        self.n_items = n_items
        self.paraphrased = paraphrased

    def to_dict(self):
        return {
            'accepted': self.accepted,
            'rejected': self.rejected,
            'reasons': {str(k): int(v) for k, v in self.reasons.items()},
            'per_association': {a: {c: int(v) for c, v in row.items()}
                                for a, row in self.per_association.iterrows()},
            'n_documents': self.n_documents,
            'n_tables': self.n_tables,
            'n_cells': self.n_cells,
            'n_items': self.n_items,
            'paraphrased': self.paraphrased,
        }

    def __repr__(self):
        return "GenerationReport(accepted=%s, rejected=%s)" % (self.accepted, self.rejected)


def _validate_or_reject(args):
    pair, llm = args
    try:
        return validate_pair(pair, llm)
    except UnparseableValidation as e:
        logger.info(str(e))
        return Rejection(pair, UNPARSEABLE)


def generate_qa(corpus, llm, options=None, subject_extractor=None):
    """
    enrich -> pair -> validate -> emit (-> paraphrase)

    Parameters
    ----------
    corpus : Corpus
    llm : Completer
    options : GenerationOptions
    subject_extractor : optional

    Returns
    -------
    items : list of QAItem
    report : GenerationReport
    """
    options = options or GenerationOptions()
    t0 = tracing.print_elapsed_time()

    if options.enrich:
        for doc in corpus.documents:
            try:
                entity, entity_type = enrich_entity(doc, llm)
            except UnparseableEntity as e:
                logger.warning("entity left empty: %s" % e)
                continue
            logger.debug("%s entity %r (%s)" % (doc.doc_id, entity, entity_type))
            corpus.set_entity(doc.doc_id, entity)

    pairs = []
    for association in options.associations:
        pairs.extend(pair_fields(corpus, association, options.n_pairs, options.seed,
                                 options.degree, subject_extractor, strict=False))

    # map keeps input order
    with ThreadPoolExecutor(max_workers=options.max_workers) as executor:
        outcomes = list(executor.map(_validate_or_reject, [(p, llm) for p in pairs]))

    drafts = [o for o in outcomes if isinstance(o, QAPairDraft)]
    rejections = [o for o in outcomes if isinstance(o, Rejection)]

    items = emit_qa(drafts, corpus, options.window)
    paraphrased = paraphrase_leaks(corpus, items, llm) if options.paraphrase else []

    per_association = pd.DataFrame(
        [[sum(p.association == a for p in pairs),
          sum(d.source.association == a for d in drafts),
          sum(r.pair.association == a for r in rejections)]
         for a in options.associations],
        index=options.associations, columns=['pairs', 'accepted', 'rejected'])

    reasons = pd.Series([r.reason for r in rejections], dtype=object).value_counts()

    report = GenerationReport(
        accepted=len(drafts),
        rejected=len(rejections),
        reasons=reasons,
        per_association=per_association,
        n_documents=len(corpus.documents),
        n_tables=corpus.n_tables,
        n_cells=len(corpus.cell_groups),
        n_items=len(items),
        paraphrased=len(paraphrased))

    if rejections:
        tracing.print_counts('rejection reasons', [r.reason for r in rejections])
    tracing.print_elapsed_time("generate %s qa items" % len(items), t0)
    return items, report
