"""Searching the spread space for small (or large) residual redundancy."""
from __future__ import annotations

import math
import time
from bisect import bisect_right
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np

from .core import SymbolDistribution, SymbolSpread, _as_number, _check_probs, quantize, state_bits
from .errors import CapExceeded, DistributionError, SingularSystem, SpreadError
from .markov import (ExactSpreadEvaluator, RedundancyReport, SpreadEvaluator,
                     evaluate_spread, has_constant_lengths)
from .prng import SplitMix64
from .tuning import rank_match_spread, tune_spread

# float-mode improvements smaller than this are treated as ties
FLOAT_TOL = 1e-14


def swap_states(spread: SymbolSpread, x: int, y: int) -> SymbolSpread:
    """Exchange the symbols owning states x and y.

    State sets are always kept ascending, which performs any repair swaps
    needed to keep the coder valid in the same step.
    """
    L = spread.L
    i, j = x - L, y - L
    if not (0 <= i < L and 0 <= j < L):
        raise SpreadError("state outside I")
    labels = list(spread.labels)
    if labels[i] == labels[j]:
        raise SpreadError(f"states {x} and {y} belong to the same symbol")
    labels[i], labels[j] = labels[j], labels[i]
    return SymbolSpread(spread.symbols, tuple(labels))


def random_spread(dist: SymbolDistribution, rng: SplitMix64) -> SymbolSpread:
    labels = [s for s, c in enumerate(dist.counts) for _ in range(c)]
    rng.shuffle(labels)
    return SymbolSpread(dist.symbols, tuple(labels))


@dataclass
class SearchConfig:
    """Parameters of the swap search.

    ``iterations`` counts single draws of the inner loop (one candidate state
    y per visited x), whether or not the draw yields an evaluated swap.
    ``threshold`` is the target ΔH: minimisation stops once ΔH < threshold,
    maximisation once ΔH > threshold; None disables the early exit.
    """

    iterations: int = 10_000
    threshold: float | None = None
    seed: int = 0
    initial: str | SymbolSpread = "random"
    objective: str = "min"
    arithmetic: str = "float"

    def __post_init__(self) -> None:
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.threshold is not None and self.threshold < 0:
            raise ValueError("threshold must be >= 0")
        if self.objective not in ("min", "max"):
            raise ValueError("objective must be 'min' or 'max'")
        if self.arithmetic not in ("float", "exact"):
            raise ValueError("arithmetic must be 'float' or 'exact'")
        if isinstance(self.initial, str) and self.initial not in ("random", "tuned", "rank"):
            raise ValueError(f"unknown initial spread source {self.initial!r}")


@dataclass
class GoodSwap:
    iteration: int
    x: int
    y: int
    delta_h: float


@dataclass
class SearchTrace:
    initial_spread: SymbolSpread
    initial_delta_h: float
    spread: SymbolSpread
    report: RedundancyReport | None
    accepted: list[GoodSwap] = field(default_factory=list)
    iterations: int = 0
    evaluations: int = 0
    singular: int = 0
    seconds: float = 0.0

    @property
    def good_swaps(self) -> int:
        return len(self.accepted)

    @property
    def delta_h(self) -> float:
        return self.accepted[-1].delta_h if self.accepted else self.initial_delta_h

    @property
    def all_singular(self) -> bool:
        return self.evaluations > 0 and self.singular == self.evaluations


class _Scorer:
    """Objective in the search's arithmetic: exact κ or float ΔH."""

    def __init__(self, dist: SymbolDistribution, arithmetic: str) -> None:
        self.exact = arithmetic == "exact"
        if self.exact:
            self._ev = ExactSpreadEvaluator(dist)
            self._h = float(self._ev.entropy)
        else:
            self._ev = SpreadEvaluator(dist)
        self._constant = None
        if has_constant_lengths(dist):
            probs = dist.probs if self.exact else dist.float_probs
            kappa = sum(p * state_bits(dist.L, c) for p, c in zip(probs, dist.counts))
            self._constant = kappa if self.exact else float(kappa) - self._ev.entropy

    def __call__(self, labels) -> Fraction | float | None:
        if self._constant is not None:
            return self._constant
        try:
            if self.exact:
                return self._ev.kappa(labels)
            return self._ev.delta_h(labels)
        except SingularSystem:
            return None

    def delta_h(self, score) -> float:
        return float(score) - self._h if self.exact else float(score)

    def better(self, cand, cur, maximize: bool) -> bool:
        if cand is None:
            return False
        if cur is None:
            return True
        if self.exact:
            return cand > cur if maximize else cand < cur
        return cand > cur + FLOAT_TOL if maximize else cand < cur - FLOAT_TOL


def initial_spread(dist: SymbolDistribution, source, rng: SplitMix64) -> SymbolSpread:
    if isinstance(source, SymbolSpread):
        source.check(dist)
        return source
    if source == "random":
        return random_spread(dist, rng)
    if source == "tuned":
        return tune_spread(dist)
    if source == "rank":
        return rank_match_spread(dist)
    raise ValueError(f"unknown initial spread source {source!r}")


def swap_search(dist: SymbolDistribution, cfg: SearchConfig, final_report: bool = True) -> SearchTrace:
    """Greedy random-swap search.

    Sweeps x over I; for each x draws y uniformly from I with SplitMix64(seed)
    and, when the owning symbols differ, keeps the swap iff it strictly
    improves the objective.  Singular candidates are rejections.  A random
    initial spread consumes the generator first (one Fisher-Yates shuffle).
    """
    t0 = time.perf_counter()
    rng = SplitMix64(cfg.seed)
    start = initial_spread(dist, cfg.initial, rng)
    maximize = cfg.objective == "max"
    scorer = _Scorer(dist, cfg.arithmetic)
    labels = list(start.labels)
    L = dist.L
    current = scorer(labels)
    init_dh = scorer.delta_h(current) if current is not None else math.nan
    trace = SearchTrace(start, init_dh, start, None)

    def reached() -> bool:
        if cfg.threshold is None or current is None:
            return False
        dh = scorer.delta_h(current)
        return dh > cfg.threshold if maximize else dh < cfg.threshold

    done = reached()
    while not done and trace.iterations < cfg.iterations:
        for i in range(L):
            if trace.iterations >= cfg.iterations:
                break
            trace.iterations += 1
            j = rng.below(L)
            a, b = labels[i], labels[j]
            if a == b:
                continue
            labels[i], labels[j] = b, a
            cand = scorer(labels)
            trace.evaluations += 1
            if cand is None:
                trace.singular += 1
            if scorer.better(cand, current, maximize):
                current = cand
                trace.accepted.append(GoodSwap(trace.iterations, L + i, L + j, scorer.delta_h(cand)))
                if reached():
                    done = True
                    break
            else:
                labels[i], labels[j] = a, b
    trace.spread = SymbolSpread(dist.symbols, tuple(labels))
    if final_report and current is not None:
        mode = "exact" if cfg.arithmetic == "exact" else "float"
        trace.report = evaluate_spread(trace.spread, dist, mode=mode)
    trace.seconds = time.perf_counter() - t0
    return trace


# -- exhaustive enumeration -----------------------------------------------------------

def multinomial(counts: Sequence[int]) -> int:
    total, out = 0, 1
    for c in counts:
        total += c
        out *= math.comb(total, c)
    return out


def iter_label_rows(counts: Sequence[int]) -> Iterator[tuple[int, ...]]:
    """All label rows with the given symbol counts, in lexicographic order."""
    a = [s for s, c in enumerate(counts) for _ in range(c)]
    n = len(a)
    while True:
        yield tuple(a)
        i = n - 2
        while i >= 0 and a[i] >= a[i + 1]:
            i -= 1
        if i < 0:
            return
        j = n - 1
        while a[j] <= a[i]:
            j -= 1
        a[i], a[j] = a[j], a[i]
        a[i + 1:] = reversed(a[i + 1:])


DEFAULT_EDGES = (1.48, 1.49, 1.5)


@dataclass
class EnumerationResult:
    """κ statistics over every spread of a distribution.

    ``buckets`` holds (low, high, count) for the bins [low, high) cut at the
    configured edges between the minimum and maximum κ.  Spreads attaining
    the minimum or maximum are excluded from the bins and reported in
    ``min_count`` / ``max_count``.
    """

    total: int
    failures: int
    min_kappa: Fraction | float
    max_kappa: Fraction | float
    min_count: int
    max_count: int
    min_spread: SymbolSpread
    max_spread: SymbolSpread
    buckets: list[tuple[float, float, int]]
    exact: bool
    kappas: np.ndarray = field(repr=False, default=None)
    seconds: float = 0.0


def _bucketize(kappa_vals, lo, hi, edges, min_count, max_count, classify) -> list[tuple[float, float, int]]:
    bounds = [float(lo)] + [e for e in edges if float(lo) < e < float(hi)] + [float(hi)]
    counts = [0] * (len(bounds) - 1)
    for k in kappa_vals:
        counts[classify(k)] += 1
    counts[0] -= min_count
    counts[-1] -= max_count
    return [(bounds[i], bounds[i + 1], counts[i]) for i in range(len(counts))]


def exhaustive_spreads(dist: SymbolDistribution, cap: int = 10**6, mode: str = "exact",
                       edges: Sequence[float] = DEFAULT_EDGES, chunk: int = 32768,
                       progress=None) -> EnumerationResult:
    """Evaluate κ for every spread of ``dist``.

    ``exact`` solves each chain with rational arithmetic.  ``float`` solves in
    batches with LAPACK, then re-derives exactly every spread whose status
    or bucket could be affected by rounding: near-singular systems, the
    minimum and maximum groups, and values close to a bucket edge.
    """
    total = multinomial(dist.counts)
    if total > cap:
        raise CapExceeded(f"{total} spreads exceed the cap of {cap}")
    t0 = time.perf_counter()
    edges = tuple(sorted(edges))
    if has_constant_lengths(dist):
        res = _enumerate_constant(dist, total, mode)
    elif mode == "exact":
        res = _enumerate_exact(dist, total, edges, progress)
    elif mode == "float":
        res = _enumerate_float(dist, total, edges, chunk, progress)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    res.seconds = time.perf_counter() - t0
    return res


def _enumerate_constant(dist, total, mode) -> EnumerationResult:
    # k_s(x) fixed per symbol: every spread shares κ = Σ p_s k_s, chain or no chain
    exact = mode == "exact" and dist.exact
    probs = dist.probs if exact else dist.float_probs
    kappa = sum(p * state_bits(dist.L, c) for p, c in zip(probs, dist.counts))
    rows = iter_label_rows(dist.counts)
    first = SymbolSpread(dist.symbols, next(rows))
    return EnumerationResult(total, 0, kappa, kappa, total, total, first, first, [], exact,
                             np.full(total, float(kappa)))


def _classifier(edges: Sequence[float], lo, hi):
    inner = [e for e in edges if float(lo) < e < float(hi)]
    exact_edges = [Fraction(e) if not isinstance(lo, float) else e for e in inner]

    def classify(k) -> int:
        return bisect_right(exact_edges, k)

    return classify


def _enumerate_exact(dist, total, edges, progress) -> EnumerationResult:
    ev = ExactSpreadEvaluator(dist)
    kappas: list = []
    failures = 0
    lo = hi = None
    lo_row = hi_row = None
    for n, row in enumerate(iter_label_rows(dist.counts)):
        try:
            k = ev.kappa(row)
        except SingularSystem:
            failures += 1
            kappas.append(None)
            continue
        kappas.append(k)
        if lo is None or k < lo:
            lo, lo_row = k, row
        if hi is None or k > hi:
            hi, hi_row = k, row
        if progress and n % 50000 == 0:
            progress(n, total)
    valid = [k for k in kappas if k is not None]
    min_count = sum(1 for k in valid if k == lo)
    max_count = sum(1 for k in valid if k == hi)
    buckets = _bucketize(valid, lo, hi, edges, min_count, max_count, _classifier(edges, lo, hi))
    arr = np.array([np.nan if k is None else float(k) for k in kappas])
    return EnumerationResult(total, failures, lo, hi, min_count, max_count,
                             SymbolSpread(dist.symbols, lo_row), SymbolSpread(dist.symbols, hi_row),
                             buckets, True, arr)


def _label_chunks(counts, chunk) -> Iterator[np.ndarray]:
    buf = []
    for row in iter_label_rows(counts):
        buf.append(row)
        if len(buf) == chunk:
            yield np.array(buf, dtype=np.int64)
            buf = []
    if buf:
        yield np.array(buf, dtype=np.int64)


def batch_kappa(ev: SpreadEvaluator, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Float κ for a stack of label rows and a conditioning score per row.

    Rows whose score (smallest/largest singular value) is tiny are singular
    or nearly so; their κ is NaN.
    """
    N, L = labels.shape
    n = ev.dist.n
    order = np.argsort(labels, axis=1, kind="stable")
    dest = order[:, ev.gather.ravel()]  # (N, n*L)
    flat = (np.arange(N)[:, None] * (L * L) + dest * L + ev.src[None, :]).ravel()
    T = np.bincount(flat, weights=np.tile(ev.weights, N), minlength=N * L * L).reshape(N, L, L)
    idx = np.arange(L)
    T[:, idx, idx] -= 1.0
    T[:, -1, :] = 1.0
    sv = np.linalg.svd(T, compute_uv=False)
    score = sv[:, -1] / sv[:, 0]
    ok = score > 1e-11
    kappa = np.full(N, np.nan)
    if ok.any():
        B = np.zeros((int(ok.sum()), L, 1))
        B[:, -1, 0] = 1.0
        X = np.linalg.solve(T[ok], B)[:, :, 0]
        w = ev.probs @ ev.nbits  # Σ_s p_s k_s(x)
        kappa[ok] = X @ w
    return kappa, score


def _enumerate_float(dist, total, edges, chunk, progress) -> EnumerationResult:
    ev = SpreadEvaluator(dist)
    blocks, parts, scores = [], [], []
    done = 0
    for block in _label_chunks(dist.counts, chunk):
        k, sc = batch_kappa(ev, block)
        blocks.append(block.astype(np.int16))
        parts.append(k)
        scores.append(sc)
        done += len(block)
        if progress:
            progress(done, total)
    rows = np.concatenate(blocks)
    kappas = np.concatenate(parts)
    score = np.concatenate(scores)

    def row(i) -> tuple:
        return tuple(rows[int(i)].tolist())

    ex = ExactSpreadEvaluator(dist) if dist.exact else None
    if ex is not None:
        # borderline conditioning: settle singular vs regular exactly
        for i in np.nonzero(score <= 1e-6)[0]:
            try:
                kappas[i] = float(ex.kappa(row(i)))
            except SingularSystem:
                kappas[i] = np.nan
    failures = int(np.isnan(kappas).sum())
    valid = ~np.isnan(kappas)
    lo_f, hi_f = np.nanmin(kappas), np.nanmax(kappas)
    tol = 1e-10
    lo_idx = np.nonzero(valid & (kappas <= lo_f + tol))[0]
    hi_idx = np.nonzero(valid & (kappas >= hi_f - tol))[0]
    if ex is None:
        lo, hi = float(lo_f), float(hi_f)
        min_count, max_count = len(lo_idx), len(hi_idx)
        buckets = _bucketize(kappas[valid], lo, hi, edges, min_count, max_count,
                             _classifier(edges, lo, hi))
        return EnumerationResult(total, failures, lo, hi, min_count, max_count,
                                 SymbolSpread(dist.symbols, row(lo_idx[0])),
                                 SymbolSpread(dist.symbols, row(hi_idx[0])),
                                 buckets, False, kappas)

    lo_vals = {int(i): ex.kappa(row(i)) for i in lo_idx}
    hi_vals = {int(i): ex.kappa(row(i)) for i in hi_idx}
    lo, hi = min(lo_vals.values()), max(hi_vals.values())
    min_count = sum(1 for v in lo_vals.values() if v == lo)
    max_count = sum(1 for v in hi_vals.values() if v == hi)
    lo_i = min(i for i, v in lo_vals.items() if v == lo)
    hi_i = min(i for i, v in hi_vals.items() if v == hi)
    inner = [e for e in edges if float(lo) < e < float(hi)]
    classify_exact = _classifier(edges, lo, hi)
    classify_float = _classifier(edges, float(lo), float(hi))
    counts = np.bincount(np.searchsorted(np.array(inner), kappas[valid], side="right"),
                         minlength=len(inner) + 1).tolist()
    near_edge = np.zeros(len(kappas), dtype=bool)
    for e in inner:
        near_edge |= valid & (np.abs(kappas - e) <= tol)
    for i in np.nonzero(near_edge)[0]:
        counts[classify_float(kappas[i])] -= 1
        counts[classify_exact(ex.kappa(row(i)))] += 1
    counts[0] -= min_count
    counts[-1] -= max_count
    bounds = [float(lo)] + inner + [float(hi)]
    buckets = [(bounds[i], bounds[i + 1], counts[i]) for i in range(len(counts))]
    return EnumerationResult(total, failures, lo, hi, min_count, max_count,
                             SymbolSpread(dist.symbols, row(lo_i)), SymbolSpread(dist.symbols, row(hi_i)),
                             buckets, True, kappas)


# -- quantisation-aware search --------------------------------------------------------

def candidate_counts(probs: Sequence, R: int) -> list[tuple[int, ...]]:
    """Count vectors with L_s in {α_s, α_s + 1}, tail symbols pinned to 1, Σ L_s = L."""
    L = 1 << R
    choices = []
    for p in probs:
        v = p * L
        if v < 1:
            choices.append((1,))
        else:
            a = math.floor(v)
            choices.append((a, a + 1))
    return [c for c in product(*choices) if sum(c) == L]


def quantized_search(probs: Sequence, R: int, mode: str = "best_fit",
                     cfg: SearchConfig | None = None,
                     symbols: Sequence | None = None) -> tuple[SymbolDistribution, SearchTrace]:
    """Pick state counts and a spread together, minimising ΔH against the true probs."""
    cfg = SearchConfig() if cfg is None else cfg
    probs = tuple(_as_number(p) for p in probs)
    _check_probs(probs)
    if symbols is None:
        symbols = tuple(range(len(probs)))
    if mode == "best_fit":
        dist = quantize(probs, R, symbols=symbols)
        return dist, swap_search(dist, cfg)
    if mode != "exhaustive":
        raise ValueError(f"unknown quantisation search mode {mode!r}")
    cands = candidate_counts(probs, R)
    if not cands:
        raise DistributionError("no count vector with L_s in {α_s, α_s+1} sums to L")
    best = None
    for counts in cands:
        dist = SymbolDistribution(symbols, probs, R, counts)
        trace = swap_search(dist, cfg)
        if math.isnan(trace.delta_h):
            continue
        if best is None or trace.delta_h < best[1].delta_h:
            best = (dist, trace)
    if best is None:
        raise SingularSystem("every candidate count vector produced only singular coders")
    return best
