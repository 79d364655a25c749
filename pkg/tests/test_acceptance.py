"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run on its own with ``pytest tests/test_acceptance.py -s`` to see only the
verdict lines.  Two sub-checks are known not to hold and are marked as strict
expected failures; README.md explains why.
"""
from __future__ import annotations

import math
import random
import time
from fractions import Fraction as F

import numpy as np
import pytest

from tanslab.core import SymbolDistribution, SymbolSpread, build_tables, decode, encode, quantize
from tanslab.errors import SingularSystem
from tanslab.markov import analyze, evaluate_spread, simulate_empirical
from tanslab.optimize import SearchConfig, exhaustive_spreads, random_spread, swap_search
from tanslab.prng import SplitMix64
from tanslab.tuning import preferred_state, rank_match_spread, tune_spread

from conftest import EX1_ROW, SWAPPED_ROW, TOY_PROBS, TOY_SYMBOLS, WORST_SETS, row_spread
from test_core import GOLDEN
from test_markov import EX1_EQ, SWAP_EQ

OPTIMAL = F(3619, 2448)


@pytest.fixture
def verdict(capsys):
    def emit(label: str, ok: bool, detail: str = "") -> bool:
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {label}" + (f": {detail}" if detail else ""))
        return ok
    return emit


def _toy() -> SymbolDistribution:
    return SymbolDistribution(TOY_SYMBOLS, TOY_PROBS, 4, (3, 5, 8))


def test_1_golden_tables(verdict):
    t0 = time.perf_counter()
    tables = build_tables(_toy(), row_spread(EX1_ROW))
    cells = [(s, x) for s in GOLDEN for x in range(16, 32)]
    bad = [(s, x) for s, x in cells if tables.entry(s, x) != GOLDEN[s][x - 16]]
    dt = time.perf_counter() - t0
    ok = len(cells) == 48 and not bad and dt < 1
    assert verdict("#1 golden coding table", ok, f"{48 - len(bad)}/48 cells, {dt:.3f}s")


def test_2_exact_equilibrium(verdict):
    t0 = time.perf_counter()
    eq1, _ = analyze(build_tables(_toy(), row_spread(EX1_ROW)), "exact")
    eq2, _ = analyze(build_tables(_toy(), row_spread(SWAPPED_ROW)), "exact")
    dt = time.perf_counter() - t0
    ok = list(eq1.probs) == EX1_EQ and list(eq2.probs) == SWAP_EQ and dt < 1
    assert verdict("#2 exact equilibria", ok, f"{dt:.3f}s")


def test_3a_redundancy_example(verdict):
    tables = build_tables(_toy(), row_spread(EX1_ROW))
    _, fl = analyze(tables, "float")
    _, ex = analyze(tables, "exact")
    ok = (abs(fl.kappa - 1.4790168845) <= 1e-9 and abs(fl.entropy - 1.4772170014) <= 1e-9
          and abs(fl.delta_h - 0.0017998831) <= 1e-9 and ex.kappa == F(108619, 73440)
          and abs(float(ex.kappa) - fl.kappa) < 1e-12)
    assert verdict("#3a redundancy of the first spread", ok,
                   f"kappa={fl.kappa:.10f} ({ex.kappa}) H={fl.entropy:.10f} dH={fl.delta_h:.10f}")


@pytest.mark.xfail(strict=True, reason="printed kappa disagrees with the printed equilibrium; see README")
def test_3b_redundancy_swapped(verdict):
    tables = build_tables(_toy(), row_spread(SWAPPED_ROW))
    _, fl = analyze(tables, "float")
    _, ex = analyze(tables, "exact")
    # the exact value is a linear functional of the (verified) equilibrium
    assert ex.kappa == F(454321, 307200)
    ok = abs(fl.kappa - 1.4789314193) <= 1e-9
    assert verdict("#3b redundancy of the swapped spread", ok,
                   f"kappa={fl.kappa:.10f} ({ex.kappa}), target 1.4789314193")


def test_4_tuning(verdict):
    d = _toy()
    _, tuned = analyze(build_tables(d, tune_spread(d)), "exact")
    _, rank = analyze(build_tables(d, rank_match_spread(d)), "exact")
    prefs = [preferred_state(F(3, 16), r, a) for r, a in ((16, 4), (20, 4), (24, 8))]
    ok = (tuned.kappa == OPTIMAL and rank.kappa == F(230755, 156048)
          and all(abs(p - q) <= 0.01 for p, q in zip(prefs, (22.56, 27.91, 17.86))))
    assert verdict("#4 tuning", ok, f"tuned={tuned.kappa} rank={rank.kappa} "
                   f"prefs={', '.join(f'{p:.2f}' for p in prefs)}")


def test_5_exhaustive_case_study(verdict):
    res = exhaustive_spreads(_toy(), mode="float")
    counts = [c for *_, c in res.buckets]
    ok = (res.total == 720720 and res.min_kappa == OPTIMAL and res.min_count == 30240
          and res.max_kappa == F(97, 64) and res.max_count == 56 and res.failures == 5040
          and counts == [86560, 483360, 66896, 48568] and res.seconds < 600)
    assert verdict("#5 exhaustive enumeration", ok,
                   f"min {res.min_kappa} x{res.min_count}, max {res.max_kappa} x{res.max_count}, "
                   f"failures {res.failures}, buckets {counts}, {res.seconds:.0f}s")


def test_6_swap_convergence(verdict):
    d = _toy()
    worst = SymbolSpread.from_sets(TOY_SYMBOLS, WORST_SETS)
    # stop as soon as the optimum is hit; H is irrational so any float just above works
    target = float(OPTIMAL) - 1.4772170014624826 + 1e-12
    reached, swaps = 0, []
    for seed in range(100):
        tr = swap_search(d, SearchConfig(iterations=10_000, seed=seed, initial=worst,
                                         threshold=target, arithmetic="exact"))
        reached += tr.report.kappa == OPTIMAL
        swaps.append(tr.good_swaps)
    ok = reached == 100 and 4 <= min(swaps) and max(swaps) <= 30
    assert verdict("#6 swap search from the worst spread", ok,
                   f"{reached}/100 optimal, good swaps {min(swaps)}..{max(swaps)}")


def _random_dyadic(rng: random.Random) -> list[int]:
    # leaf depths of a random full binary tree
    depths = [1, 1]
    for _ in range(rng.randint(0, 7)):
        i = rng.randrange(len(depths))
        depths[i:i + 1] = [depths[i] + 1] * 2
    return depths


def test_7_dyadic_optimality(verdict):
    rng = random.Random(7)
    spreads = full_solves = 0
    ok = True
    for _ in range(20):
        depths = _random_dyadic(rng)
        R = max(depths) + rng.randint(0, 2)
        d = quantize([F(1, 2 ** i) for i in depths], R)
        g = SplitMix64(rng.randrange(1 << 63))
        for _ in range(5):
            sp = random_spread(d, g)
            tables = build_tables(d, sp)
            ok &= all(len(tables.entry(s, x)[1]) == depths[s]
                      for s in range(d.n) for x in range(d.L, 2 * d.L))
            ok &= evaluate_spread(sp, d, "exact").delta_h == 0
            try:
                _, rep = analyze(tables, "exact")
                ok &= rep.delta_h == 0
                full_solves += 1
            except SingularSystem:
                pass  # reducible chain; the length argument above still applies
            spreads += 1
    assert verdict("#7 dyadic optimality", bool(ok),
                   f"{spreads} spreads over 20 distributions, {full_solves} by full solve")


def test_8_oracle_equivalence(verdict):
    g = SplitMix64(8)
    d = _toy()
    worst = 0.0
    done = 0
    while done < 10:
        tables = build_tables(d, random_spread(d, g))
        try:
            eq, _ = analyze(tables, "exact")
        except SingularSystem:
            continue
        emp = simulate_empirical(tables, steps=10**7, seed=done)
        worst = max(worst, float(np.max(np.abs(emp.as_array() - eq.as_array()))))
        done += 1
    assert verdict("#8 simulation vs exact equilibrium", worst <= 5e-4, f"max abs error {worst:.2e}")


def test_9_search_trend(verdict):
    d = quantize([F(3, 16), F(5, 16), F(1, 2)], 7)
    t0 = time.perf_counter()
    within, monotone, values = 0, True, []
    for seed in range(10):
        tr = swap_search(d, SearchConfig(iterations=10**5, seed=seed), final_report=False)
        seq = [g.delta_h for g in tr.accepted]
        monotone &= all(b < a for a, b in zip(seq, seq[1:]))
        values.append(tr.delta_h)
        within += 0.5 * 1.577e-5 <= tr.delta_h <= 2 * 1.577e-5
    dt = time.perf_counter() - t0
    ok = within >= 8 and monotone and dt <= 900
    assert verdict("#9 search at L=128", ok,
                   f"{within}/10 in range, dH {min(values):.3e}..{max(values):.3e}, {dt:.0f}s")


def _fuzz_cases(count: int = 1000):
    rng = random.Random(10)
    made = 0
    while made < count:
        n = rng.randint(2, 8)
        R = rng.randint(max(3, math.ceil(math.log2(n))), 10)
        w = [rng.random() + 0.02 for _ in range(n)]
        d = quantize([x / sum(w) for x in w], R)
        labels = [s for s, c in enumerate(d.counts) for _ in range(c)]
        rng.shuffle(labels)
        sp = SymbolSpread(d.symbols, labels)
        try:
            rep = evaluate_spread(sp, d, "float")
        except SingularSystem:
            continue
        length = rng.randint(1, 4096)
        frame = rng.choices(range(n), weights=d.float_probs, k=length)
        made += 1
        yield d, build_tables(d, sp), rep, frame


def test_10a_roundtrip_fuzz(verdict):
    bad = 0
    for _, tables, _, frame in _fuzz_cases():
        bad += decode(encode(frame, tables), tables, len(frame)) != frame
    assert verdict("#10a round-trip fuzzing", bad == 0, f"{1000 - bad}/1000 exact")


@pytest.mark.xfail(strict=True, reason="short i.i.d. frames fluctuate outside both bounds; see README")
def test_10b_length_bounds(verdict):
    low = high = 0
    for d, tables, rep, frame in _fuzz_cases():
        bits = encode(frame, tables).bit_length
        n = len(frame)
        low += bits < n * float(d.entropy()) - 64
        high += bits > n * (float(rep.kappa) + 0.01)
    assert verdict("#10b compressed length bounds", low == high == 0,
                   f"{low} below l*H-64, {high} above l*(kappa+0.01) of 1000")
