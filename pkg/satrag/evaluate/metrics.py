# satrag
# See full license in LICENSE.txt.

"""
Retrieval and answer metrics

Ranked-list metrics take the retrieved unit ids in rank order and the gold id
set. Precision always divides by K, so short result lists are penalized.
"""

import logging
import re

import numpy as np

from ..errors import EmptyGold
from ..fusion import CITATION
from ..providers import ECHO_PREFIX, cosine_matrix

logger = logging.getLogger(__name__)

DEFAULT_CLAIM_THRESHOLD = 0.6

CURRENCY_SYMBOLS = u'$\u20ac\u00a3\u00a5'

NUMBER = re.compile(u"\\(?[-+\u2212]?[%s]?\\s?\\d[\\d,]*(?:\\.\\d+)?\\s?%%?\\)?" %
                    CURRENCY_SYMBOLS)
SENTENCE_BREAK = re.compile(r"(?<=[.!?])\s+|\n+")


def _check(gold, k):
    if k < 1:
        raise ValueError("k must be at least 1, not %s" % k)
    if not gold:
        raise EmptyGold("empty gold set")


def hits_at_k(retrieved, gold, k):
    """the gold ids among the first k retrieved"""
    return set(retrieved[:k]) & set(gold)


def hit_at_k(retrieved, gold, k):
    _check(gold, k)
    return 1 if hits_at_k(retrieved, gold, k) else 0


def recall_at_k(retrieved, gold, k):
    _check(gold, k)
    return len(hits_at_k(retrieved, gold, k)) / float(len(set(gold)))


def precision_at_k(retrieved, gold, k):
    if k < 1:
        raise ValueError("k must be at least 1, not %s" % k)
    return len(hits_at_k(retrieved, gold, k)) / float(k)


def unit_cells(unit):
    """
    cell ids a retrieved unit contributes: an EvidenceTuple its own cell, a
    chunk the cells of its row, a passage none; sets pass through
    """
    if hasattr(unit, 'cell_id'):
        return {unit.cell_id}
    if hasattr(unit, 'chunk'):
        return set(unit.chunk.cell_ids)
    if hasattr(unit, 'cell_ids'):
        return set(unit.cell_ids)
    return set(unit)


def cell_metrics(retrieved, gold_cell_ids, k):
    """
    (cell hit rate, cell recall, cell precision) at k

    Each of the k slots counts as many cells as its unit contributes, and at
    least one, in the precision denominator; empty slots count one.

    Parameters
    ----------
    retrieved : sequence of EvidenceTuple, ScoredChunk or set of cell ids
    gold_cell_ids : set
    k : int

    Returns
    -------
    tuple of float
    """
    _check(gold_cell_ids, k)
    gold = set(gold_cell_ids)

    slots = [unit_cells(u) for u in retrieved[:k]]
    found = set().union(*slots) & gold if slots else set()

    denominator = sum(max(1, len(cells)) for cells in slots) + (k - len(slots))
    c_hr = 1.0 if found else 0.0
    c_r = len(found) / float(len(gold))
    c_p = len(found) / float(denominator)
    return c_hr, c_r, c_p


def normalize_value(text):
    """
    Canonical form of a value for matching

    Currency symbols, thousands separators and a trailing % are stripped and a
    parenthesized number is negative. Numbers come back as float, anything
    else as lower-cased text.
    """
    s = text.strip()
    negative = s.startswith('(') and s.endswith(')')
    s = s.strip('()').strip().replace(u'\u2212', '-')
    for symbol in CURRENCY_SYMBOLS:
        s = s.replace(symbol, '')
    s = s.replace(',', '').strip().rstrip('%').strip()
    try:
        v = float(s)
    except ValueError:
        return text.strip().lower()
    return -v if negative else v


def answer_numbers(text):
    """normalized numbers mentioned in a text, citation markers excluded"""
    text = CITATION.sub(' ', text)
    values = set()
    for match in NUMBER.findall(text):
        match = match.strip()
        # a lone bracket belongs to the surrounding prose
        if match.startswith('(') != match.endswith(')'):
            match = match.strip('()')
        v = normalize_value(match)
        if isinstance(v, float):
            values.add(v)
    return values


def exact_value_recall(answer, gold_values):
    """
    share of gold values stated in the answer; numbers match after
    normalization, other values as case-insensitive substrings

    Parameters
    ----------
    answer : Answer or str
    gold_values : collection of str
    """
    if not gold_values:
        raise EmptyGold("no gold values")

    text = getattr(answer, 'text', answer) or ''
    numbers = answer_numbers(text)
    lowered = text.lower()

    matched = 0
    for value in gold_values:
        v = normalize_value(value)
        if isinstance(v, float):
            matched += v in numbers
        else:
            matched += v in lowered
    return matched / float(len(gold_values))


def split_claims(text):
    """sentences of a text as claims, without citation markers or the echo prefix"""
    claims = []
    for part in SENTENCE_BREAK.split(CITATION.sub('', text or '')):
        part = part.strip()
        if part and part != ECHO_PREFIX:
            claims.append(part)
    return claims


def claim_alignment(answer, reference, embedder, threshold=DEFAULT_CLAIM_THRESHOLD):
    """
    (precision, recall) of answer claims against reference claims

    A claim matches when its best cosine against the other side reaches the
    threshold.
    """
    answer_claims = split_claims(getattr(answer, 'text', answer))
    reference_claims = split_claims(reference)
    if not answer_claims or not reference_claims:
        return 0.0, 0.0

    sim = cosine_matrix(embedder.embed(answer_claims), embedder.embed(reference_claims))
    precision = np.mean(sim.max(axis=1) >= threshold)
    recall = np.mean(sim.max(axis=0) >= threshold)
    return float(precision), float(recall)


def canonical_value(text):
    """normalize_value as text: '1,200' -> '1200', '(5.2)' -> '-5.2', 'Acme' -> 'acme'"""
    v = normalize_value(text)
    if not isinstance(v, float):
        return v
    return str(int(v)) if v.is_integer() else repr(v)
