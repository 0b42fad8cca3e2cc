import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hgrnt.metrics import (
    DEFAULT_GRID,
    decide,
    f_measure,
    format_report,
    rank_metrics,
    sweep_threshold,
    trigger_metrics,
)
from hgrnt.numcore import ContractError, EmptySequenceError

# Rows whose printed F agrees with the harmonic mean of the printed P and R.
PUBLISHED_CONSISTENT = [
    (27.96, 37.86, 32.17),
    (25.94, 42.39, 32.19),
    (36.82, 44.86, 40.45),
    (29.71, 50.62, 37.44),
    (38.03, 25.51, 30.54),
    (39.36, 30.45, 34.34),
    (40.91, 44.44, 42.6),
]


@pytest.mark.parametrize("p,r,f", PUBLISHED_CONSISTENT)
def test_f_measure_matches_published_rows(p, r, f):
    assert abs(f_measure(p, r) - f) <= 0.01


def test_counts_reproduce_full_model_row():
    # 108 correct of 264 returned, 243 answerable
    decisions, gold = [], []
    for i in range(264 + 243 - 108):
        if i < 108:
            decisions.append(0), gold.append([1, 0])
        elif i < 264:
            decisions.append(0), gold.append([0, 0])
        else:
            decisions.append(None), gold.append([0, 1])
    rep = trigger_metrics(decisions, gold)
    assert (rep.num_correct, rep.num_predicted, rep.num_answerable) == (108, 264, 243)
    assert round(rep.precision, 2) == 40.91 and round(rep.recall, 2) == 44.44
    assert rep.f1 == pytest.approx(42.6, abs=0.01)


def test_no_predictions():
    rep = trigger_metrics([None, None], [[1, 0], [0, 0]])
    assert (rep.precision, rep.recall, rep.f1) == (0.0, 0.0, 0.0)
    assert rep.num_answerable == 1


def test_prediction_on_unanswerable_counts_against_precision_only():
    rep = trigger_metrics([0, 1], [[0, 0], [0, 1]])
    assert rep.precision == 50.0 and rep.recall == 100.0


def test_out_of_range_and_misaligned():
    with pytest.raises(ContractError):
        trigger_metrics([2], [[1, 0]])
    with pytest.raises(ContractError):
        trigger_metrics([0], [[1], [0]])


def test_per_question_records():
    rep = trigger_metrics([1, None], [[0, 1], [1]], ["a", "b"])
    assert rep.per_question == [("a", 1, True), ("b", None, False)]


# -- decide ---------------------------------------------------------------

EXAMPLE_1 = [0.4924, 0.1362, 0.0073]
EXAMPLE_2 = [0.0237, 0.0132, 0.0588, 0.0075, 0.0183]


def test_decide_published_examples():
    assert decide(EXAMPLE_1, 0.3) == 0
    assert decide(EXAMPLE_2, 0.3) is None


def test_decide_threshold_zero_and_ties():
    assert decide([0.1, 0.7, 0.7], 0.0) == 1
    assert decide([0.2, 0.2], 0.2) == 0


def test_decide_empty():
    with pytest.raises(EmptySequenceError):
        decide([], 0.5)


@given(
    st.lists(st.floats(0.0, 1.0), min_size=1, max_size=8),
    st.floats(0.0, 1.0),
)
def test_decide_depends_only_on_argmax_and_comparison(scores, t):
    d = decide(scores, t)
    m = int(np.argmax(scores))
    assert d == (m if scores[m] >= t else None)
    # strictly increasing transform of scores and threshold together
    sq = [math.sqrt(s) for s in scores]
    assert decide(sq, math.sqrt(t)) == d


# -- sweep ----------------------------------------------------------------


def test_sweep_single_question_returns_grid_minimum():
    best_t, rep, table = sweep_threshold([[0.6, 0.2]], [[1, 0]])
    assert best_t == 0.0 and rep.f1 == 100.0
    assert len(table) == len(DEFAULT_GRID)
    for t, r in table:
        assert r.f1 == (100.0 if t <= 0.6 else 0.0)


def test_sweep_above_all_maxima_predicts_nothing():
    _, _, table = sweep_threshold([[0.3, 0.1], [0.2]], [[1, 0], [0]])
    rep = dict(table)[0.31]
    assert rep.num_predicted == 0 and rep.f1 == 0.0


def test_sweep_prefers_rejection_when_nothing_is_answerable():
    best_t, rep, _ = sweep_threshold([[0.3, 0.1], [0.25]], [[0, 0], [0]])
    assert best_t == 0.31 and rep.num_predicted == 0


def test_sweep_f_tie_prefers_fewer_wrong_returns():
    # t <= 0.30: 2 of 4 returned correct; t in (0.35, 0.9]: 1 of 1. Both give F = 200/3.
    scores = [[0.9], [0.3], [0.35], [0.32]]
    gold = [[1], [1], [0], [0]]
    best_t, rep, table = sweep_threshold(scores, gold)
    f = dict(table)
    assert f[0.0].f1 == pytest.approx(f[0.36].f1) == pytest.approx(200 / 3)
    assert best_t == 0.36 and rep.num_predicted == 1


def test_sweep_invalid_grid():
    with pytest.raises(ContractError):
        sweep_threshold([[0.5]], [[1]], grid=[])
    with pytest.raises(ContractError):
        sweep_threshold([[0.5]], [[1]], grid=[1.5])


def brute_force_best(scores, gold, grid):
    """Enumerate accept/reject patterns per threshold without using decide or trigger_metrics."""
    best = ((-1.0, 0), None)
    for t in grid:
        predicted = correct = 0
        answerable = sum(1 for g in gold if 1 in g)
        for s, g in zip(scores, gold):
            top = max(range(len(s)), key=lambda i: (s[i], -i))
            if s[top] >= t:
                predicted += 1
                correct += g[top] == 1
        p = 100 * correct / predicted if predicted else 0.0
        r = 100 * correct / answerable if answerable else 0.0
        f = 2 * p * r / (p + r) if p + r else 0.0
        key = (f, -(predicted - correct))
        if key > best[0]:
            best = (key, t)
    return best[0][0], best[1]


def test_sweep_matches_brute_force_fixture():
    scores = [[0.9, 0.1], [0.7, 0.65], [0.4, 0.2, 0.3], [0.55]]
    gold = [[1, 0], [0, 1], [0, 0, 0], [1]]
    best_t, rep, _ = sweep_threshold(scores, gold)
    f, t = brute_force_best(scores, gold, DEFAULT_GRID)
    assert best_t == t and rep.f1 == pytest.approx(f, abs=1e-12)
    # optimum rejects Q3 (max 0.4) but keeps Q4 (0.55)
    assert best_t == 0.41


@settings(max_examples=60)
@given(
    st.lists(
        st.lists(st.tuples(st.floats(0.0, 1.0), st.integers(0, 1)), min_size=1, max_size=4),
        min_size=1,
        max_size=6,
    )
)
def test_sweep_matches_brute_force_random(questions):
    scores = [[s for s, _ in q] for q in questions]
    gold = [[y for _, y in q] for q in questions]
    grid = [round(0.1 * i, 1) for i in range(11)]
    best_t, rep, _ = sweep_threshold(scores, gold, grid)
    f, t = brute_force_best(scores, gold, grid)
    assert best_t == t
    assert rep.f1 == pytest.approx(f, abs=1e-9)


@given(
    st.lists(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=4), min_size=1, max_size=6),
    st.floats(0.0, 1.0),
    st.floats(0.0, 1.0),
)
def test_num_predicted_non_increasing_in_threshold(scores, a, b):
    lo, hi = sorted((a, b))
    gold = [[0] * len(s) for s in scores]
    n_lo = trigger_metrics([decide(s, lo) for s in scores], gold).num_predicted
    n_hi = trigger_metrics([decide(s, hi) for s in scores], gold).num_predicted
    assert n_hi <= n_lo


question_runs = st.lists(
    st.integers(1, 4).flatmap(
        lambda n: st.tuples(
            st.one_of(st.none(), st.integers(0, n - 1)),
            st.lists(st.integers(0, 1), min_size=n, max_size=n),
        )
    ),
    min_size=1,
    max_size=8,
)


@given(question_runs, st.randoms())
def test_trigger_metrics_invariant_under_reordering(rows, rnd):
    shuffled = rows[:]
    rnd.shuffle(shuffled)
    a = trigger_metrics([d for d, _ in rows], [g for _, g in rows])
    b = trigger_metrics([d for d, _ in shuffled], [g for _, g in shuffled])
    assert (a.precision, a.recall, a.f1) == pytest.approx((b.precision, b.recall, b.f1))


@given(question_runs)
def test_report_invariants(rows):
    rep = trigger_metrics([d for d, _ in rows], [g for _, g in rows])
    assert rep.num_correct <= min(rep.num_predicted, rep.num_answerable)
    assert (rep.f1 == 0) == (rep.num_correct == 0)
    if rep.precision > 0 and rep.recall > 0:
        lo, hi = sorted((rep.precision, rep.recall))
        assert lo - 1e-9 <= rep.f1 <= hi + 1e-9


# -- rank metrics ---------------------------------------------------------


def test_rank_trivial():
    assert rank_metrics([[0.9, 0.1]], [[1, 0]]) == (1.0, 1.0)
    assert rank_metrics([[0.9, 0.1]], [[0, 1]])[0] == 0.5


def test_rank_requires_answerable():
    with pytest.raises(ContractError):
        rank_metrics([[0.5]], [[0]])


def exhaustive_rank_oracle(scores, gold):
    """Find the ranking by trying every permutation and keeping the lexicographically sorted one."""
    rrs, aps = [], []
    for s, g in zip(scores, gold):
        if 1 not in g:
            continue
        n = len(s)
        ranking = None
        for perm in itertools.permutations(range(n)):
            ok = all(
                s[perm[i]] > s[perm[i + 1]] or (s[perm[i]] == s[perm[i + 1]] and perm[i] < perm[i + 1])
                for i in range(n - 1)
            )
            if ok:
                ranking = perm
                break
        positions = [k + 1 for k, i in enumerate(ranking) if g[i] == 1]
        rrs.append(1 / positions[0])
        aps.append(sum((j + 1) / pos for j, pos in enumerate(positions)) / len(positions))
    return sum(rrs) / len(rrs), sum(aps) / len(aps)


def test_rank_three_question_fixture_vs_oracle():
    scores = [[0.2, 0.8, 0.5], [0.3, 0.3, 0.9, 0.1], [0.4, 0.6]]
    gold = [[1, 0, 1], [0, 1, 0, 1], [0, 0]]
    mrr, map_ = rank_metrics(scores, gold)
    o_mrr, o_map = exhaustive_rank_oracle(scores, gold)
    assert abs(mrr - o_mrr) < 1e-12 and abs(map_ - o_map) < 1e-12


def test_format_report_columns():
    rep = trigger_metrics([0, None], [[1], [1]])
    assert format_report(rep, "toy") == "Model\tPrec\tRec\tF\ntoy\t100.00\t50.00\t66.67\n"
