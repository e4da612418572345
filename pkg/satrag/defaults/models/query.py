# satrag
# See full license in LICENSE.txt.

import logging

import orca

from ... import fusion
from ... import tracing

logger = logging.getLogger(__name__)


@orca.injectable()
def question():
    # a providers.Query, set by the command line
    return None


def format_evidence(result):
    lines = []
    for rank, t in enumerate(result.tuples, start=1):
        temporal = '' if t.undated else t.temporal_label
        lines.append("%2d. %-40s %-16s %s | %s | %s  (%.4f%s)" %
                     (rank, t.cell_id, t.value, t.subject_label, temporal, t.attribute_label,
                      t.score, ', neighbor' if t.hop else ''))
    for rank, c in enumerate(result.chunks, start=1):
        lines.append("%2d. %-40s %s  (%.4f)" % (rank, c.chunk_id, c.chunk.text[:80], c.score))
    return '\n'.join(lines) or '(no evidence)'


@orca.step()
def answer_query(app_config, retriever, corpus, question):
    """
    retrieve, fuse and generate for one question; prints the ranked evidence
    with its provenance, then the answer
    """
    if question is None:
        raise RuntimeError("answer_query: no question injected")

    t0 = tracing.print_elapsed_time()
    cfg = app_config.retrieval

    result, pkg, answer = fusion.answer_query(retriever, question, cfg, corpus,
                                              app_config.passages_per_fact,
                                              app_config.prompt_budget)

    if result.diagnostics.get('error'):
        logger.warning("retrieval: %s" % result.diagnostics['error'])

    print("\nEvidence:\n%s" % format_evidence(result))
    if pkg.passages:
        print("\nPassages:\n%s" % '\n'.join("%2d. %s" % (i, p.uid)
                                              for i, (p, _) in enumerate(pkg.passages, start=1)))
    print("\nAnswer:\n%s\n" % answer.text)

    orca.add_injectable('query_result', result)
    orca.add_injectable('answer', answer)

    tracing.print_elapsed_time("answer_query", t0)
