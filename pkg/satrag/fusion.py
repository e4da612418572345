# satrag
# See full license in LICENSE.txt.

"""
Text-bridged augmentation

Retrieved facts are stated as sentences, each fact pulls the closest passages
of its own source document, and facts and passages are packed into one
prompt with numbered citation markers.
"""

import logging
import re
from collections import OrderedDict

import numpy as np

from . import tracing
from .chunks import PASSAGE_CHUNK
from .errors import EmptyEvidence
from .providers import EchoCompleter, FACTS_HEADER, cosine_matrix
from .retrieval import CHUNK_BASELINE

logger = logging.getLogger(__name__)

DEFAULT_PROMPT_BUDGET = 8000
PASSAGES_PER_FACT = 2

PASSAGES_HEADER = 'Passages:'
TRUNCATION_MARKER = ' [...]'

INSTRUCTION = "Answer the question using only the facts and passages below."
CITATION_INSTRUCTION = ("Cite every fact or passage the answer relies on with its marker, "
                        "for example [F1] or [P2].")

CITATION = re.compile(r"\[([FP])(\d+)\]")


class LinearizedFact(object):
    """
    statement: the fact as one sentence
    source: the EvidenceTuple (or row Chunk) it states
    """

    __slots__ = ('statement', 'source', 'cell_ids', 'doc_id')

    def __init__(self, statement, source, cell_ids, doc_id):
        self.statement = statement
        self.source = source
        self.cell_ids = tuple(cell_ids)
        self.doc_id = doc_id

    def __repr__(self):
        return "LinearizedFact(%r)" % self.statement


class EvidencePackage(object):
    """
    facts: list of LinearizedFact
    passages: list of (Passage, score)
    query: Query
    """

    def __init__(self, facts, passages, query):
        self.facts = list(facts)
        self.passages = list(passages)
        self.query = query

    def is_empty(self):
        return not self.facts and not self.passages

    def evidence_ids(self):
        """cited-unit ids in prompt order: fact cell ids then passage uids"""
        ids = [c for f in self.facts for c in f.cell_ids]
        return ids + [p.uid for p, _ in self.passages]


class Answer(object):

    def __init__(self, text, cited_cell_ids=None, cited_passage_ids=None, diagnostics=None):
        self.text = text
        self.cited_cell_ids = set(cited_cell_ids or [])
        self.cited_passage_ids = set(cited_passage_ids or [])
        self.diagnostics = diagnostics or {}

    def to_dict(self):
        return {
            'text': self.text,
            'cited_cell_ids': sorted(self.cited_cell_ids),
            'cited_passage_ids': sorted(self.cited_passage_ids),
        }

    def __repr__(self):
        return "Answer(%r)" % self.text


def linearize(t):
    """
    "<subject>'s <attribute> is <value> at <temporal>"

    The subject is the deepest subject label; for undated facts the
    " at <temporal>" clause is left out.
    """
    statement = "%s's %s is %s" % (t.subject_label, t.attribute_label, t.value)
    if not t.undated:
        statement = "%s at %s" % (statement, t.temporal_label)
    return LinearizedFact(statement, t, [t.cell_id], t.doc_id)


def fetch_context(fact, corpus, embedder, k, cache=None):
    """
    Top-k passages of the fact's source document by cosine to the statement

    Parameters
    ----------
    fact : LinearizedFact
    corpus : Corpus
    embedder : Embedder
    k : int
    cache : dict, optional
        passage uid -> embedding, filled in place

    Returns
    -------
    list of (Passage, float)
        descending score, ties by passage position
    """
    pool = corpus.passages_of(fact.doc_id)
    if k <= 0 or not pool:
        return []

    cache = cache if cache is not None else {}
    missing = [p for p in pool if p.uid not in cache]
    if missing:
        for p, v in zip(missing, embedder.embed([p.text for p in missing])):
            cache[p.uid] = v

    scores = cosine_matrix(embedder.embed([fact.statement]),
                           np.vstack([cache[p.uid] for p in pool]))[0]
    order = sorted(range(len(pool)), key=lambda i: (-scores[i], pool[i].position))
    return [(pool[i], float(scores[i])) for i in order[:k]]


def _merge_passages(scored):
    best = OrderedDict()
    for p, score in scored:
        if p.uid not in best or score > best[p.uid][1]:
            best[p.uid] = (p, score)
    return list(best.values())


def _fusion_enabled(query, cfg):
    return query.contextual_flag == 1 and cfg.enable_fusion


def build_package(tuples, query, corpus, embedder, cfg,
                  passages_per_fact=PASSAGES_PER_FACT, cache=None):
    """
    Linearize the tuples and, for contextual queries with fusion enabled,
    attach the passages each fact pulls from its own document

    Returns
    -------
    EvidencePackage
    """
    facts = [linearize(t) for t in tuples]

    passages = []
    if _fusion_enabled(query, cfg) and corpus is not None:
        scored = []
        for fact in facts:
            scored.extend(fetch_context(fact, corpus, embedder, passages_per_fact, cache))
        passages = _merge_passages(scored)

    return EvidencePackage(facts, passages, query)


def build_chunk_package(chunks, query, corpus, cfg):
    """
    Package for the chunk baseline: row chunks become facts (their text),
    passage chunks become passages under the same gate as graph mode
    """
    facts = [LinearizedFact(c.chunk.text, c.chunk, c.chunk.cell_ids, c.chunk.doc_id)
             for c in chunks if c.chunk.kind != PASSAGE_CHUNK]

    passages = []
    if _fusion_enabled(query, cfg):
        passages = [(corpus.passage(c.chunk_id), c.score)
                    for c in chunks if c.chunk.kind == PASSAGE_CHUNK]

    return EvidencePackage(facts, passages, query)


def _render(facts, passage_texts, query):
    lines = [INSTRUCTION, '']
    if facts:
        lines.append(FACTS_HEADER)
        lines.extend("[F%s] %s" % (i + 1, f.statement) for i, f in enumerate(facts))
        lines.append('')
    if passage_texts:
        lines.append(PASSAGES_HEADER)
        lines.extend("[P%s] %s" % (i + 1, text) for i, text in enumerate(passage_texts))
        lines.append('')
    lines.extend(["Question: %s" % query.text, '', CITATION_INSTRUCTION])
    return '\n'.join(lines)


def assemble_prompt(pkg, budget=DEFAULT_PROMPT_BUDGET):
    """
    Instruction, numbered facts, numbered passages, the question and the
    citation instruction, in that order

    Passages are cut from the last one backwards until the prompt fits the
    character budget; facts are never cut.

    Raises
    ------
    EmptyEvidence
        no facts and no passages
    """
    if pkg.is_empty():
        raise EmptyEvidence("nothing to answer from for %r" % pkg.query.text)

    texts = [p.text for p, _ in pkg.passages]
    prompt = _render(pkg.facts, texts, pkg.query)

    while len(prompt) > budget and texts:
        excess = len(prompt) - budget
        keep = len(texts[-1]) - excess - len(TRUNCATION_MARKER)
        if keep > 0:
            texts[-1] = texts[-1][:keep] + TRUNCATION_MARKER
        else:
            texts.pop()
        prompt = _render(pkg.facts, texts, pkg.query)

    if len(prompt) > budget:
        logger.warning("facts alone take %s chars, over the %s char budget" %
                       (len(prompt), budget))
    return prompt


def parse_citations(text, pkg):
    """
    cell ids and passage uids behind the [F#] / [P#] markers of text

    Returns
    -------
    cell_ids : set
    passage_ids : set
    dropped : list of str
        markers pointing past the supplied evidence
    """
    cell_ids, passage_ids, dropped = set(), set(), []
    for kind, n in CITATION.findall(text):
        i = int(n) - 1
        if kind == 'F' and 0 <= i < len(pkg.facts):
            cell_ids.update(pkg.facts[i].cell_ids)
        elif kind == 'P' and 0 <= i < len(pkg.passages):
            passage_ids.add(pkg.passages[i][0].uid)
        else:
            dropped.append("[%s%s]" % (kind, n))
    return cell_ids, passage_ids, dropped


def generate_answer(prompt, llm, pkg):
    """
    Complete the prompt and trace the answer's citation markers back to evidence

    Parameters
    ----------
    prompt : str
    llm : Completer
    pkg : EvidencePackage
        the package the prompt was assembled from

    Returns
    -------
    Answer
    """
    text = llm.complete(prompt)
    cell_ids, passage_ids, dropped = parse_citations(text, pkg)

    diagnostics = {}
    if dropped:
        logger.info("dropped out of range citations %s" % dropped)
        diagnostics['dropped_citations'] = dropped

    return Answer(text, cell_ids, passage_ids, diagnostics)


def answer_result(result, q, cfg, providers, corpus, passages_per_fact=PASSAGES_PER_FACT,
                  budget=DEFAULT_PROMPT_BUDGET, cache=None):
    """
    package -> prompt -> generate for an existing retrieval result

    Without a completion provider the answer is the echo of the evidence.

    Returns
    -------
    pkg : EvidencePackage
    answer : Answer
    """
    if result.mode == CHUNK_BASELINE:
        pkg = build_chunk_package(result.chunks, q, corpus, cfg)
    else:
        pkg = build_package(result.tuples, q, corpus, providers.embedder, cfg,
                            passages_per_fact, cache)

    try:
        prompt = assemble_prompt(pkg, budget)
    except EmptyEvidence as e:
        logger.info(str(e))
        return pkg, Answer('', diagnostics={'error': "EmptyEvidence: %s" % e})

    answer = generate_answer(prompt, providers.completer or EchoCompleter(), pkg)

    tracing.trace_records([dict(query_id=q.query_id, n_facts=len(pkg.facts),
                                n_passages=len(pkg.passages), prompt_chars=len(prompt),
                                n_cited_cells=len(answer.cited_cell_ids),
                                n_cited_passages=len(answer.cited_passage_ids))],
                          'fusion.answer')
    return pkg, answer


def answer_query(retriever, q, cfg, corpus=None, passages_per_fact=PASSAGES_PER_FACT,
                 budget=DEFAULT_PROMPT_BUDGET, cache=None):
    """
    retrieve -> package -> prompt -> generate

    Returns
    -------
    result : RetrievalResult
    pkg : EvidencePackage
    answer : Answer
    """
    corpus = corpus if corpus is not None else retriever.corpus
    result = retriever.retrieve(q, cfg)
    pkg, answer = answer_result(result, q, cfg, retriever.providers, corpus,
                                passages_per_fact, budget, cache)
    return result, pkg, answer
