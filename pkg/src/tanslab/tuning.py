"""Analytic spread construction from the p_x ≈ log2(e)/x state law."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import SymbolDistribution, SymbolSpread, state_bits
from .errors import SpreadError


@dataclass(frozen=True)
class StateIntervalPartition:
    """Runs of states sharing the quotient x >> k_s(x), as (start, length)."""

    symbol: int
    intervals: tuple[tuple[int, int], ...]

    @property
    def quotients(self) -> list[int]:
        return [r >> (a.bit_length() - 1) for r, a in self.intervals]


@dataclass(frozen=True)
class PreferredPositions:
    """Per-symbol preferred states, clamped into I and sorted ascending."""

    L: int
    values: tuple[tuple[float, ...], ...]

    @property
    def rounded(self) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(round_half_up(y) for y in ys) for ys in self.values)


def round_half_up(y: float) -> int:
    return math.floor(y + 0.5)


def partition_intervals(dist: SymbolDistribution, s: int) -> StateIntervalPartition:
    L, count = dist.L, dist.counts[s]
    intervals = []
    x = L
    while x < 2 * L:
        alpha = 1 << state_bits(x, count)
        intervals.append((x, alpha))
        x += alpha
    assert len(intervals) == count
    return StateIntervalPartition(s, tuple(intervals))


def preferred_state(p: float, r: int, alpha: int) -> float:
    """Preferred state for the interval [r, r + alpha - 1] of a symbol with probability p."""
    if r < 2:
        raise ValueError("interval start must be at least 2")
    if alpha < 1:
        raise ValueError("interval length must be positive")
    return 1.0 / (float(p) * math.log((r + alpha - 1) / (r - 1)))


def _raw_preferences(dist: SymbolDistribution) -> list[list[float]]:
    out = []
    for s in range(dist.n):
        part = partition_intervals(dist, s)
        out.append([preferred_state(dist.probs[s], r, a) for r, a in part.intervals])
    return out


def preferred_positions(dist: SymbolDistribution) -> PreferredPositions:
    L = dist.L
    lo, hi = float(L), float(2 * L - 1)
    values = tuple(tuple(sorted(min(max(y, lo), hi) for y in ys)) for ys in _raw_preferences(dist))
    return PreferredPositions(L, values)


def _priority(dist: SymbolDistribution) -> list[int]:
    return sorted(range(dist.n), key=lambda s: (-dist.probs[s], s))


def tune_spread(dist: SymbolDistribution) -> SymbolSpread:
    """Claim each symbol's rounded preferred states; relocate collisions.

    Symbols claim in order of decreasing probability.  A claim on a taken
    state moves to the nearest free state, the higher one on a distance tie.
    """
    L = dist.L
    owner = [-1] * L
    for s in _priority(dist):
        for c in sorted(round_half_up(y) for y in _raw_preferences(dist)[s]):
            c = min(max(c, L), 2 * L - 1) - L
            if owner[c] < 0:
                owner[c] = s
                continue
            for d in range(1, L):
                hit = next((z for z in (c + d, c - d) if 0 <= z < L and owner[z] < 0), None)
                if hit is not None:
                    owner[hit] = s
                    break
    spread = SymbolSpread(dist.symbols, tuple(owner))
    if spread.counts != dist.counts:
        raise SpreadError("tuning produced inconsistent counts")
    return spread


def rank_match_spread(dist: SymbolDistribution, prefs: PreferredPositions | None = None) -> SymbolSpread:
    """Give the i-th state of I to the symbol of the i-th smallest preferred position.

    Ties go to the lower-probability symbol, then to alphabet order.
    """
    prefs = preferred_positions(dist) if prefs is None else prefs
    tagged = [(y, dist.probs[s], s) for s in range(dist.n) for y in prefs.values[s]]
    tagged.sort()
    return SymbolSpread(dist.symbols, tuple(s for _, _, s in tagged))


def spread_distance(spread: SymbolSpread, prefs: PreferredPositions) -> float:
    """Sum of |x - y| pairing each symbol's states and preferences in ascending order."""
    if len(spread.state_sets) != len(prefs.values) or any(
            len(a) != len(b) for a, b in zip(spread.state_sets, prefs.values)):
        raise SpreadError("spread and preferences disagree on per-symbol counts")
    return math.fsum(abs(x - y) for xs, ys in zip(spread.state_sets, prefs.values)
                     for x, y in zip(xs, ys))


def distances_batch(labels: np.ndarray, prefs: PreferredPositions, counts) -> np.ndarray:
    """spread_distance for a stack of label rows (N, L)."""
    L = prefs.L
    order = np.argsort(labels, axis=1, kind="stable") + L
    target = np.concatenate([np.asarray(v) for v in prefs.values])
    return np.abs(order - target[None, :]).sum(axis=1)


def interval_residual(spread: SymbolSpread, eq_probs, dist: SymbolDistribution) -> float:
    """max over (s, interval) of |p_s * P(interval) - P(C(s, y))|, y the interval's quotient.

    Zero for the true equilibrium of that spread; evaluated against an
    approximate law (e.g. log2(e)/x) it measures how well the spread fits it.
    """
    L = dist.L
    p = np.asarray([float(v) for v in eq_probs])
    worst = 0.0
    for s in range(dist.n):
        states = spread.state_sets[s]
        count = dist.counts[s]
        part = partition_intervals(dist, s)
        for (r, a), y in zip(part.intervals, part.quotients):
            lhs = float(dist.probs[s]) * p[r - L:r - L + a].sum()
            worst = max(worst, abs(lhs - p[states[y - count] - L]))
    return worst


def log_law(L: int) -> np.ndarray:
    """The log2(e)/x approximation of p_x over I."""
    return math.log2(math.e) / np.arange(L, 2 * L)
