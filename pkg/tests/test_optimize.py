from __future__ import annotations

import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tanslab.core import SymbolDistribution, SymbolSpread, quantize
from tanslab.errors import CapExceeded, SpreadError
from tanslab.markov import ExactSpreadEvaluator, evaluate_spread
from tanslab.optimize import (SearchConfig, candidate_counts, exhaustive_spreads, iter_label_rows,
                              multinomial, quantized_search, random_spread, swap_search, swap_states)
from tanslab.prng import SplitMix64

from conftest import SWAPPED_ROW, TOY_SYMBOLS, row_spread


def test_swap_reproduces_second_table(ex1_spread):
    assert swap_states(ex1_spread, 25, 28) == row_spread(SWAPPED_ROW)


def test_swap_canonical_sets(ex1_spread):
    out = swap_states(ex1_spread, 22, 26)
    assert out.state_sets[0] == (18, 25, 26)
    assert out.state_sets[1] == (19, 20, 22, 23, 28)


def test_swap_involution_and_guard(ex1_spread):
    assert swap_states(swap_states(ex1_spread, 17, 18), 17, 18) == ex1_spread
    with pytest.raises(SpreadError):
        swap_states(ex1_spread, 16, 17)


def test_prng_reference_values():
    g = SplitMix64(0)
    assert g.next_u64() == 0xE220A8397B1DCDAF
    g = SplitMix64(1234567)
    assert [g.next_u64() for _ in range(2)] == [6457827717110365317, 3203168211198807973]
    g = SplitMix64(5)
    assert all(0 <= g.below(n) < n for n in (1, 2, 3, 16, 1000) for _ in range(50))


def test_prng_below_uniform():
    g = SplitMix64(9)
    counts = [0] * 16
    for _ in range(16_000):
        counts[g.below(16)] += 1
    assert min(counts) > 850 and max(counts) < 1150


def test_search_from_worst_reaches_minimum(toy_dist, worst_spread):
    for seed in range(5):
        cfg = SearchConfig(iterations=10_000, seed=seed, initial=worst_spread, arithmetic="exact")
        tr = swap_search(toy_dist, cfg)
        assert tr.report.kappa == F(3619, 2448)
        assert 1 <= tr.good_swaps <= 30


def test_search_deterministic(toy_dist):
    cfg = SearchConfig(iterations=500, seed=42, initial="random")
    a, b = swap_search(toy_dist, cfg), swap_search(toy_dist, cfg)
    assert a.accepted == b.accepted and a.spread == b.spread
    c = swap_search(toy_dist, SearchConfig(iterations=500, seed=43, initial="random"))
    assert c.initial_spread != a.initial_spread


def test_threshold_one_stops_immediately(toy_dist, ex1_spread):
    tr = swap_search(toy_dist, SearchConfig(iterations=1000, threshold=1.0, initial=ex1_spread))
    assert tr.iterations == 0 and tr.good_swaps == 0 and tr.spread == ex1_spread
    # a reachable threshold ends the run right after the accepting swap
    tr = swap_search(toy_dist, SearchConfig(iterations=10_000, threshold=0.0015, initial=ex1_spread))
    assert tr.delta_h < 0.0015
    assert tr.accepted[-1].iteration == tr.iterations


def test_iteration_budget(toy_dist):
    tr = swap_search(toy_dist, SearchConfig(iterations=37, seed=3))
    assert tr.iterations == 37 and tr.evaluations <= 37


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**63), st.sampled_from(["min", "max"]), st.sampled_from(["float", "exact"]))
def test_trace_monotone(seed, objective, arithmetic):
    d = SymbolDistribution(TOY_SYMBOLS, (F(3, 16), F(5, 16), F(1, 2)), 4, (3, 5, 8))
    tr = swap_search(d, SearchConfig(iterations=300, seed=seed, objective=objective,
                                     arithmetic=arithmetic))
    seq = [g.delta_h for g in tr.accepted]
    if objective == "min":
        assert all(b < a for a, b in zip(seq, seq[1:]))
        assert tr.delta_h <= tr.initial_delta_h or tr.initial_delta_h != tr.initial_delta_h
    else:
        assert all(b > a for a, b in zip(seq, seq[1:]))
    tr.spread.check(d)
    assert abs(float(tr.report.delta_h) - tr.delta_h) < 1e-12


def test_tuned_and_rank_initialisation(toy_dist):
    for init in ("tuned", "rank"):
        tr = swap_search(toy_dist, SearchConfig(iterations=2000, initial=init, arithmetic="exact"))
        assert tr.report.kappa <= F(230755, 156048)


def test_random_spread_valid(toy_dist):
    g = SplitMix64(1)
    for _ in range(20):
        random_spread(toy_dist, g).check(toy_dist)


def test_label_rows_enumeration():
    rows = list(iter_label_rows((2, 1, 1)))
    assert len(rows) == multinomial((2, 1, 1)) == 12
    assert rows == sorted(set(rows))
    assert multinomial((3, 5, 8)) == 720720


def test_exhaustive_dyadic():
    d = quantize([F(1, 2), F(1, 2)], 2)
    res = exhaustive_spreads(d)
    assert res.total == 6 and res.failures == 0
    assert res.min_kappa == res.max_kappa == 1 and res.min_count == 6


def test_exhaustive_small_exact_vs_float():
    d = SymbolDistribution((0, 1, 2), (F(3, 8), F(1, 4), F(3, 8)), 3, (3, 2, 3))
    # 1.5714285... = 11/7 is attained exactly, so the edge re-check matters
    edges = (1.57, 11 / 7, 1.6)
    ex = exhaustive_spreads(d, mode="exact", edges=edges)
    fl = exhaustive_spreads(d, mode="float", edges=edges)
    assert ex.total == fl.total == 560
    assert (ex.failures, ex.min_kappa, ex.max_kappa, ex.min_count, ex.max_count) == \
        (fl.failures, fl.min_kappa, fl.max_kappa, fl.min_count, fl.max_count)
    assert [c for *_, c in ex.buckets] == [c for *_, c in fl.buckets]
    assert sum(c for *_, c in ex.buckets) + ex.min_count + ex.max_count + ex.failures == 560
    # brute-force oracle over the same rows
    ev = ExactSpreadEvaluator(d)
    vals = []
    for row in iter_label_rows(d.counts):
        try:
            vals.append(ev.kappa(row))
        except Exception:
            pass
    assert min(vals) == ex.min_kappa and vals.count(min(vals)) == ex.min_count
    assert evaluate_spread(ex.min_spread, d, "exact").kappa == ex.min_kappa


def test_exhaustive_cap(toy_dist):
    with pytest.raises(CapExceeded):
        exhaustive_spreads(toy_dist, cap=1000)


def test_candidate_counts_tail():
    probs = [0.5, 0.3, 0.17, 0.03]
    cands = candidate_counts(probs, 4)
    assert cands and all(c[3] == 1 and sum(c) == 16 for c in cands)


def test_quantized_search_dominance():
    probs = [0.3, 0.3, 0.4]
    cfg = SearchConfig(iterations=3000, seed=0, initial="rank")
    d_fit, t_fit = quantized_search(probs, 4, "best_fit", cfg)
    d_ex, t_ex = quantized_search(probs, 4, "exhaustive", cfg)
    assert d_fit.counts in candidate_counts(probs, 4)
    assert t_ex.delta_h <= t_fit.delta_h


def test_quantized_search_exact_counts():
    probs = [F(3, 16), F(5, 16), F(1, 2)]
    for mode in ("best_fit", "exhaustive"):
        d, _ = quantized_search(probs, 4, mode, SearchConfig(iterations=200))
        assert d.counts == (3, 5, 8)


def test_search_config_validation():
    with pytest.raises(ValueError):
        SearchConfig(iterations=0)
    with pytest.raises(ValueError):
        SearchConfig(threshold=-1.0)
    with pytest.raises(ValueError):
        SearchConfig(objective="median")


def test_search_random_dists_valid():
    rng = random.Random(2)
    for _ in range(10):
        w = [rng.random() + 0.01 for _ in range(rng.randint(2, 6))]
        total = sum(w)
        d = quantize([x / total for x in w], 5)
        tr = swap_search(d, SearchConfig(iterations=200, seed=rng.randrange(1 << 32)))
        tr.spread.check(d)
