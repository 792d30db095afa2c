import math
from fractions import Fraction

import numpy as np
import pytest

from arbrf import RF_DELTA, SYMDIFF, Clade, CostFn, delta, matching_cost, weight
from arbrf.cost import GAP, delta_matrix, empty_cost, weight_matrix
from arbrf.errors import BothGaps, InvalidMatching
from arbrf.oracle import brute_force_best

JACCARD_KS = [1, 2, 3, 5]


def c(*members):
    return Clade(sum(1 << (m - 1) for m in members))


def test_parse_cost_names():
    assert CostFn.parse("rf") == RF_DELTA
    assert CostFn.parse("symdiff") == SYMDIFF
    assert CostFn.parse("jaccard:3") == CostFn.jaccard(3)
    assert str(CostFn.jaccard(7)) == "jaccard:7"
    for bad in ["jaccard:0", "jaccard:x", "jaccard:1.5", "rf:2", "hamming", f"jaccard:{2**20 + 1}"]:
        with pytest.raises(ValueError):
            CostFn.parse(bad)


def test_fixture_pair_and_gap_values():
    # matched cost 2 against 2 + 2 for leaving both unmatched
    assert delta(SYMDIFF, c(1, 2), c(1, 10)) == 2
    assert delta(SYMDIFF, c(1, 2), GAP) + delta(SYMDIFF, GAP, c(1, 10)) == 4
    assert weight(SYMDIFF, c(1, 2), c(1, 10)) == 2


def test_jaccard_values():
    assert delta(CostFn.jaccard(1), c(1, 2), c(2, 3)) == pytest.approx(4 / 3, abs=1e-15)
    for k in [1, 2, 7, 64, 2**20]:
        assert delta(CostFn.jaccard(k), c(1, 2, 5), c(1, 2, 5)) == 0
        assert delta(CostFn.jaccard(k), c(1), GAP) == 1
        assert delta(CostFn.jaccard(k), GAP, c(1, 2, 3)) == 1
    assert delta(CostFn.jaccard(3), 0, 0) == 0
    assert weight(CostFn.jaccard(1), c(1, 2), c(1, 2)) == 2


def test_rf_delta():
    assert delta(RF_DELTA, c(1, 2), c(1, 2)) == 0
    assert math.isinf(delta(RF_DELTA, c(1, 2), c(1, 3)))
    assert delta(RF_DELTA, c(1, 2), GAP) == 1
    assert weight(RF_DELTA, c(1, 2), c(1, 3)) == 0
    assert weight(RF_DELTA, c(1, 2), c(1, 2)) == 2


def test_both_gaps_rejected():
    with pytest.raises(BothGaps):
        delta(SYMDIFF, GAP, GAP)


def all_subsets(n):
    return list(range(1, 2**n))


@pytest.mark.parametrize("f", [SYMDIFF] + [CostFn.jaccard(k) for k in JACCARD_KS], ids=str)
def test_metric_axioms_exhaustive(f):
    subs = all_subsets(6)
    d = np.array([[delta(f, a, b) for b in subs] for a in subs])
    assert (d >= 0).all()
    assert np.allclose(d, d.T, rtol=0, atol=0)
    off = ~np.eye(len(subs), dtype=bool)
    assert (np.diag(d) == 0).all() and (d[off] > 0).all()
    # d[a, c] <= d[a, b] + d[b, c] for every triple
    slack = d[:, None, :] - (d[:, :, None] + d[None, :, :])
    assert slack.max() <= 1e-12


def test_jaccard_nondecreasing_in_k():
    subs = all_subsets(5)
    prev = None
    for k in [1, 2, 3, 4, 8, 16, 64, 1024]:
        d = np.array([[delta(CostFn.jaccard(k), a, b) for b in subs] for a in subs])
        if prev is not None:
            assert (d >= prev - 1e-15).all()
        prev = d


def test_jaccard_matches_exact_rationals():
    subs = all_subsets(5)
    for k in [1, 3]:
        for a in subs:
            for b in subs:
                jac = Fraction((a & b).bit_count(), (a | b).bit_count())
                exact = 2 - 2 * jac**k
                assert delta(CostFn.jaccard(k), a, b) == pytest.approx(float(exact), abs=1e-15)


@pytest.mark.parametrize("f", [RF_DELTA, SYMDIFF, CostFn.jaccard(1), CostFn.jaccard(4)], ids=str)
def test_weight_matrix_matches_scalar(f, fig1_clades):
    c1, c2 = fig1_clades
    w = weight_matrix(f, c1, c2)
    d = delta_matrix(f, c1, c2)
    assert (w >= 0).all()
    for i in range(len(c1)):
        for j in range(len(c2)):
            assert w[i, j] == pytest.approx(weight(f, c1[i], c2[j]), abs=1e-12)
            assert d[i, j] == delta(f, c1[i], c2[j]) or abs(d[i, j] - delta(f, c1[i], c2[j])) < 1e-12


def test_empty_matching_cost(fig1_clades):
    c1, c2 = fig1_clades
    assert matching_cost(RF_DELTA, [], c1, c2) == len(c1) + len(c2) == 16
    assert matching_cost(SYMDIFF, [], c1, c2) == empty_cost(SYMDIFF, c1, c2)
    assert empty_cost(SYMDIFF, c1, c2) == sum(range(2, 10)) + 2 + sum(range(2, 9))


def test_rf_delta_exact_matches_give_classical_rf():
    from arbrf import extract_clades, parse, rf_distance

    doc = parse("(((A,B),C),(D,E)); (((A,B),D),(C,E));")
    c1, c2 = extract_clades(doc[0]), extract_clades(doc[1])
    common = [(i, c2.bits.index(b)) for i, b in enumerate(c1.bits) if b in c2.bits]
    assert matching_cost(RF_DELTA, common, c1, c2) == rf_distance(doc[0], doc[1]) == 4


def test_fixture_chain_matching(fig1_clades):
    c1, c2 = fig1_clades
    # T1 clade {1..j} sits at index j-2, T2 clade {2..j} at index j-2 as well
    chain = [(j - 2, j - 2) for j in range(3, 10)]
    assert all(delta(SYMDIFF, c1[i], c2[j]) == 1 for i, j in chain)
    cost = matching_cost(SYMDIFF, chain, c1, c2)
    assert cost == 7 * 1 + 2 + 2
    w = weight_matrix(SYMDIFF, c1, c2)
    assert cost == empty_cost(SYMDIFF, c1, c2) - sum(w[p] for p in chain)
    assert cost == brute_force_best(c1, c2, SYMDIFF, require_arboreal=True).cost


def test_matching_cost_identity_random(rng):
    from conftest import clade_pair

    for _ in range(50):
        c1, c2 = clade_pair(rng, rng.randint(4, 12))
        for f in [SYMDIFF, CostFn.jaccard(1), CostFn.jaccard(3)]:
            w = weight_matrix(f, c1, c2)
            cols = list(range(len(c2)))
            rng.shuffle(cols)
            pairs = [(i, cols[i]) for i in range(min(len(c1), len(c2))) if rng.random() < 0.6]
            direct = matching_cost(f, pairs, c1, c2)
            via_weights = empty_cost(f, c1, c2) - sum(w[p] for p in pairs)
            assert direct == pytest.approx(via_weights, abs=1e-9)


def test_invalid_matching_rejected(fig1_clades):
    c1, c2 = fig1_clades
    with pytest.raises(InvalidMatching):
        matching_cost(SYMDIFF, [(0, 0), (1, 0)], c1, c2)
    with pytest.raises(InvalidMatching):
        matching_cost(SYMDIFF, [(0, 0), (0, 1)], c1, c2)
    with pytest.raises(InvalidMatching):
        matching_cost(SYMDIFF, [(0, 99)], c1, c2)
