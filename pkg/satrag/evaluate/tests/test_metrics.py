# satrag
# See full license in LICENSE.txt.

import numpy as np
import pytest

from ...chunks import Chunk, ScoredChunk, ROW_CHUNK
from ...errors import EmptyGold
from ...providers import MockEmbedder
from .. import metrics


def test_ranked_metrics():
    retrieved = ['a', 'b', 'c']

    assert metrics.hit_at_k(retrieved, {'c'}, 2) == 0
    assert metrics.hit_at_k(retrieved, {'c'}, 3) == 1
    assert metrics.recall_at_k(retrieved, {'b', 'c', 'd', 'e'}, 3) == 0.5
    # precision divides by k even when fewer units came back
    assert metrics.precision_at_k(['a', 'b'], {'b'}, 5) == 0.2
    assert metrics.precision_at_k([], {'b'}, 1) == 0.0


def test_ranked_metrics_reject_bad_input():
    with pytest.raises(EmptyGold):
        metrics.hit_at_k(['a'], set(), 1)
    with pytest.raises(EmptyGold):
        metrics.recall_at_k(['a'], [], 1)
    with pytest.raises(ValueError):
        metrics.recall_at_k(['a'], {'a'}, 0)
    with pytest.raises(ValueError):
        metrics.precision_at_k(['a'], {'a'}, 0)


def test_cell_metrics():
    retrieved = [{'c1', 'c2'}, set(), {'c3'}]

    c_hr, c_r, c_p = metrics.cell_metrics(retrieved, {'c1', 'c3', 'c9'}, 4)

    assert c_hr == 1.0
    assert c_r == pytest.approx(2 / 3.0)
    # 2 + 1 + 1 cells in the slots and one empty slot
    assert c_p == pytest.approx(2 / 5.0)

    assert metrics.cell_metrics([], {'c1'}, 2) == (0.0, 0.0, 0.0)



def _random_ranking(rng, ids):
    # ids may repeat
    n = rng.randint(0, 12)
    return [ids[i] for i in rng.randint(0, len(ids), size=n)]


def test_ranked_metrics_on_random_rankings():
    rng = np.random.RandomState(42)
    ids = ['u%s' % i for i in range(15)]

    for _ in range(1000):
        retrieved = _random_ranking(rng, ids)
        gold = set(rng.choice(ids, size=rng.randint(1, 6), replace=False))

        previous_hit, previous_recall = 0, 0.0
        for k in range(1, 15):
            hit = metrics.hit_at_k(retrieved, gold, k)
            recall = metrics.recall_at_k(retrieved, gold, k)
            precision = metrics.precision_at_k(retrieved, gold, k)

            head = retrieved[:k]
            n_hits = sum(1 for i, u in enumerate(head) if u in gold and u not in head[:i])

            assert hit >= previous_hit and recall >= previous_recall
            assert hit == (1 if n_hits else 0)
            assert recall == pytest.approx(n_hits / float(len(gold)))
            assert precision * k == pytest.approx(n_hits)
            previous_hit, previous_recall = hit, recall


def test_cell_metrics_on_random_rankings():
    rng = np.random.RandomState(7)
    cells = ['c%s' % i for i in range(20)]

    for _ in range(1000):
        retrieved = [set(rng.choice(cells, size=rng.randint(0, 4), replace=False))
                     for _ in range(rng.randint(0, 10))]
        gold = set(rng.choice(cells, size=rng.randint(1, 6), replace=False))

        previous_hr, previous_r = 0.0, 0.0
        for k in range(1, 12):
            c_hr, c_r, c_p = metrics.cell_metrics(retrieved, gold, k)

            head = retrieved[:k]
            found = set().union(set(), *head) & gold
            denominator = sum(max(1, len(slot)) for slot in head) + k - len(head)

            assert c_hr >= previous_hr and c_r >= previous_r
            assert c_r == pytest.approx(len(found) / float(len(gold)))
            assert c_p * denominator == pytest.approx(len(found))
            assert 0.0 <= c_p <= 1.0
            previous_hr, previous_r = c_hr, c_r


def test_unit_cells():
    chunk = Chunk('acme/t0/row/1', 'Revenue | 2019: 5', 'acme', ROW_CHUNK,
                  ('acme/t0/1/1', 'acme/t0/1/2'))

    assert metrics.unit_cells(ScoredChunk(chunk, 0.4)) == {'acme/t0/1/1', 'acme/t0/1/2'}
    assert metrics.unit_cells(chunk) == {'acme/t0/1/1', 'acme/t0/1/2'}
    assert metrics.unit_cells({'x'}) == {'x'}


@pytest.mark.parametrize("text, value", [
    ('$1,200', 1200.0),
    ('(5.2)', -5.2),
    ('41.5%', 41.5),
    (u'−3', -3.0),
    (u'€ 12', 12.0),
    (' Acme ', 'acme'),
])
def test_normalize_value(text, value):
    assert metrics.normalize_value(text) == value


def test_canonical_value():
    assert metrics.canonical_value('1,200') == '1200'
    assert metrics.canonical_value('(5.2)') == '-5.2'
    assert metrics.canonical_value('41.5%') == '41.5'
    assert metrics.canonical_value('Acme') == 'acme'


def test_answer_numbers():
    text = "Revenue was $1,200 [F1] (up 4.5%) in 2019."
    assert metrics.answer_numbers(text) == {1200.0, 4.5, 2019.0}


def test_exact_value_recall():
    answer = "Revenue was 1,200 and the margin 41.5%."

    assert metrics.exact_value_recall(answer, ['$1,200', '41.5%', 'Acme']) == \
        pytest.approx(2 / 3.0)
    assert metrics.exact_value_recall(answer + ' Acme led.', ['Acme']) == 1.0
    assert metrics.exact_value_recall('', ['1,200']) == 0.0

    with pytest.raises(EmptyGold):
        metrics.exact_value_recall(answer, [])


def test_split_claims():
    text = "ECHO:\n[F1] Acme's revenue is 5 at 2019\n[F2] b.  c!"
    assert metrics.split_claims(text) == ["Acme's revenue is 5 at 2019", 'b.', 'c!']
    assert metrics.split_claims(None) == []


def test_claim_alignment():
    e = MockEmbedder()
    reference = "Acme revenue is 5."

    precision, recall = metrics.claim_alignment(
        "Acme revenue is 5. Totally unrelated words here.", reference, e)
    assert (precision, recall) == (0.5, 1.0)

    assert metrics.claim_alignment('', reference, e) == (0.0, 0.0)
    assert metrics.claim_alignment(reference, reference, e, threshold=1.01) == (0.0, 0.0)
