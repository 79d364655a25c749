"""Stationary state distribution of a tANS coder and its redundancy.

The coder is a Markov chain on I: from state x, symbol s (probability p_s)
moves it to E(s, x).  Equilibrium probabilities solve M X = B where M is the
transition matrix minus the identity with its last row replaced by ones.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from math import lcm

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from .core import CodingTables, Number, SymbolDistribution, SymbolSpread, entropy, state_bits
from .errors import SingularSystem

PIVOT_EPS = 1e-12
EXACT_MAX_L = 256


@dataclass(frozen=True)
class TransitionSystem:
    """M X = B for the equilibrium.

    ``transition[dest, src]`` is the raw accumulated probability mass (before
    the normalisation row overwrites M's last row).
    """

    L: int
    transition: np.ndarray
    matrix: np.ndarray
    rhs: np.ndarray
    exact: bool


@dataclass(frozen=True)
class EquilibriumDistribution:
    L: int
    probs: tuple
    exact: bool

    def __getitem__(self, x: int) -> Number:
        return self.probs[x - self.L]

    def as_array(self) -> np.ndarray:
        return np.array([float(p) for p in self.probs])


@dataclass(frozen=True)
class RedundancyReport:
    kappa: Number
    kappa_per_symbol: tuple
    entropy: Number
    delta_h: Number
    exact: bool

    def as_dict(self) -> dict:
        return {
            "mode": "exact" if self.exact else "float",
            "kappa": float(self.kappa),
            "kappa_exact": str(self.kappa) if self.exact else None,
            "entropy": float(self.entropy),
            "delta_h": float(self.delta_h),
            "kappa_per_symbol": [float(k) for k in self.kappa_per_symbol],
        }


def _resolve_mode(mode: str, L: int, exact_ok: bool) -> bool:
    if mode == "auto":
        return exact_ok and L <= EXACT_MAX_L
    if mode == "exact":
        if not exact_ok:
            raise ValueError("exact mode needs rational symbol probabilities")
        return True
    if mode == "float":
        return False
    raise ValueError(f"unknown arithmetic mode {mode!r}")


def build_transition_system(tables: CodingTables, dist: SymbolDistribution | None = None,
                            mode: str = "auto") -> TransitionSystem:
    """Assemble M and B from the encoding table.

    Every state of I contributes its outgoing transitions, including 2L-1
    whose column is needed for the chain to be stochastic.
    """
    dist = tables.dist if dist is None else dist
    L = tables.L
    exact = _resolve_mode(mode, L, dist.exact)
    probs = dist.probs if exact else dist.float_probs
    if exact:
        T = np.full((L, L), Fraction(0), dtype=object)
    else:
        T = np.zeros((L, L))
    for s, p in enumerate(probs):
        row = tables.next_state[s]
        for i in range(L):
            T[row[i] - L, i] += p
    M = T.copy()
    for i in range(L):
        M[i, i] -= 1
    M[L - 1, :] = 1
    if exact:
        B = np.array([Fraction(0)] * (L - 1) + [Fraction(1)], dtype=object)
    else:
        B = np.zeros(L)
        B[-1] = 1.0
    return TransitionSystem(L, T, M, B, exact)


def solve_exact(matrix, rhs) -> list[Fraction]:
    """Solve a rational system exactly by fraction-free (Bareiss) elimination.

    Rows are scaled to integers first; pivots are any non-zero entry, chosen
    with the smallest magnitude to keep intermediate integers short.
    """
    n = len(rhs)
    rows = []
    for i in range(n):
        vals = [Fraction(v) for v in matrix[i]] + [Fraction(rhs[i])]
        d = lcm(*(v.denominator for v in vals))
        rows.append([int(v * d) for v in vals])
    prev = 1
    for c in range(n):
        piv, best = -1, 0
        for r in range(c, n):
            v = rows[r][c]
            if v and (piv < 0 or abs(v) < best):
                piv, best = r, abs(v)
        if piv < 0:
            raise SingularSystem(f"no pivot in column {c}")
        rows[c], rows[piv] = rows[piv], rows[c]
        pr = rows[c]
        pc = pr[c]
        for r in range(c + 1, n):
            row = rows[r]
            a = row[c]
            if a == 0:
                if pc != prev:
                    rows[r] = [(pc * v) // prev for v in row]
                continue
            rows[r] = [(pc * row[j] - a * pr[j]) // prev for j in range(n + 1)]
        prev = pc
    x = [Fraction(0)] * n
    for i in range(n - 1, -1, -1):
        row = rows[i]
        acc = Fraction(row[n])
        for j in range(i + 1, n):
            if row[j]:
                acc -= row[j] * x[j]
        x[i] = acc / row[i]
    return x


def solve_float(matrix: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Partial-pivot LU solve; a pivot below PIVOT_EPS means singular."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(np.asarray(matrix, dtype=float), check_finite=False)
    if np.min(np.abs(np.diag(lu))) < PIVOT_EPS:
        raise SingularSystem("pivot below threshold")
    return lu_solve((lu, piv), np.asarray(rhs, dtype=float), check_finite=False)


def solve_equilibrium(system: TransitionSystem, mode: str | None = None) -> EquilibriumDistribution:
    exact = system.exact if mode is None else _resolve_mode(mode, system.L, system.exact)
    if exact:
        if not system.exact:
            raise ValueError("exact solve requested for a floating system")
        X = solve_exact(system.matrix.tolist(), system.rhs.tolist())
        return EquilibriumDistribution(system.L, tuple(X), True)
    X = solve_float(system.matrix, system.rhs)
    return EquilibriumDistribution(system.L, tuple(float(v) for v in X), False)


def redundancy(eq: EquilibriumDistribution, tables: CodingTables,
               dist: SymbolDistribution | None = None) -> RedundancyReport:
    dist = tables.dist if dist is None else dist
    exact = eq.exact
    probs = dist.probs if exact else dist.float_probs
    per_symbol = []
    for s in range(dist.n):
        ks = tables.nbits[s]
        if exact:
            per_symbol.append(sum((k * p for k, p in zip(ks, eq.probs) if k), Fraction(0)))
        else:
            per_symbol.append(math.fsum(k * p for k, p in zip(ks, eq.probs)))
    if exact:
        kappa = sum((p * k for p, k in zip(probs, per_symbol)), Fraction(0))
    else:
        kappa = math.fsum(p * k for p, k in zip(probs, per_symbol))
    H = entropy(dist.probs) if exact else entropy(dist.float_probs)
    if isinstance(kappa, Fraction) and isinstance(H, Fraction):
        delta = kappa - H
    else:
        delta = float(kappa) - float(H)
    return RedundancyReport(kappa, tuple(per_symbol), H, delta, exact)


def analyze(tables: CodingTables, mode: str = "auto") -> tuple[EquilibriumDistribution, RedundancyReport]:
    """Equilibrium and redundancy of a coder in one call."""
    system = build_transition_system(tables, mode=mode)
    eq = solve_equilibrium(system)
    return eq, redundancy(eq, tables)


def simulate_empirical(tables: CodingTables, dist: SymbolDistribution | None = None,
                       steps: int = 10**6, seed: int = 0, burn_in: int = 1000) -> EquilibriumDistribution:
    """State-visit frequencies from encoding an i.i.d. stream from x = L."""
    dist = tables.dist if dist is None else dist
    if steps < 10**4:
        raise ValueError("steps must be at least 10^4")
    L = tables.L
    rng = np.random.default_rng(seed)
    cdf = np.cumsum(dist.float_probs)
    cdf[-1] = 1.0
    nxt = [v - L for v in tables._flat_next]
    x = 0
    visits = np.zeros(L, dtype=np.int64)
    remaining_burn = burn_in
    remaining = steps
    block = 1 << 16
    while remaining > 0:
        draw = np.searchsorted(cdf, rng.random(block), side="right")
        offsets = (draw * L).tolist()
        if remaining_burn:
            used = min(remaining_burn, block)
            for off in offsets[:used]:
                x = nxt[off + x]
            remaining_burn -= used
            offsets = offsets[used:]
        offsets = offsets[:remaining]
        seen = []
        append = seen.append
        for off in offsets:
            x = nxt[off + x]
            append(x)
        visits += np.bincount(seen, minlength=L)
        remaining -= len(offsets)
    return EquilibriumDistribution(L, tuple((visits / steps).tolist()), False)


# -- fast path used by the search and enumeration -------------------------------------

class SpreadEvaluator:
    """Float-mode ΔH of many spreads sharing one distribution.

    Precomputes, for every (symbol, state), the index into the symbol-grouped
    ascending state list, so a spread's transition matrix is a single gather
    and scatter.
    """

    def __init__(self, dist: SymbolDistribution) -> None:
        self.dist = dist
        L = self.L = dist.L
        counts = np.array(dist.counts)
        xs = np.arange(L, 2 * L)
        offsets = np.concatenate(([0], np.cumsum(counts)[:-1]))
        ks = np.array([[((x // c).bit_length() - 1) for x in range(L, 2 * L)] for c in dist.counts])
        self.nbits = ks
        self.gather = offsets[:, None] + (xs[None, :] >> ks) - counts[:, None]
        self.src = np.broadcast_to(np.arange(L), (dist.n, L)).ravel()
        self.weights = np.repeat(np.array(dist.float_probs), L)
        self.probs = np.array(dist.float_probs)
        self.entropy = float(entropy(dist.float_probs))
        self._diag = np.arange(L)

    def matrix(self, labels) -> np.ndarray:
        order = np.argsort(np.asarray(labels), kind="stable")
        dest = order[self.gather].ravel()
        T = np.bincount(dest * self.L + self.src, weights=self.weights,
                        minlength=self.L * self.L).reshape(self.L, self.L)
        T[self._diag, self._diag] -= 1.0
        T[-1, :] = 1.0
        return T

    def equilibrium(self, labels) -> np.ndarray:
        B = np.zeros(self.L)
        B[-1] = 1.0
        return solve_float(self.matrix(labels), B)

    def delta_h(self, labels) -> float:
        X = self.equilibrium(labels)
        kappa = float(self.probs @ (self.nbits @ X))
        return kappa - self.entropy


def has_constant_lengths(dist: SymbolDistribution) -> bool:
    """True when every symbol emits the same number of bits from every state."""
    L = dist.L
    return all(state_bits(L, c) == state_bits(2 * L - 1, c) for c in dist.counts)


def constant_length_report(tables: CodingTables, mode: str = "auto") -> RedundancyReport | None:
    """Report for coders whose k_s(x) does not depend on x, else None.

    Then κ = Σ p_s k_s for every state distribution, so no solve is needed
    and the answer holds even when the chain has several closed classes.
    """
    dist = tables.dist
    if not has_constant_lengths(dist):
        return None
    exact = _resolve_mode(mode, tables.L, dist.exact)
    L = tables.L
    uniform = EquilibriumDistribution(L, tuple([Fraction(1, L)] * L) if exact else (1.0 / L,) * L, exact)
    return redundancy(uniform, tables)


def evaluate_spread(spread: SymbolSpread, dist: SymbolDistribution, mode: str = "auto") -> RedundancyReport:
    from .core import build_tables

    tables = build_tables(dist, spread)
    report = constant_length_report(tables, mode)
    return report if report is not None else analyze(tables, mode=mode)[1]


class ExactSpreadEvaluator:
    """Exact κ of many spreads sharing one rational distribution.

    Works on the integer-scaled system directly: with D the common
    denominator of the p_s, rows 0..L-2 are D*(T - I) and the last row is all
    ones.  Fraction-free elimination gives det * X as integers, so only the
    final κ is a Fraction.
    """

    def __init__(self, dist: SymbolDistribution) -> None:
        if not dist.exact:
            raise ValueError("exact evaluation needs rational probabilities")
        self.dist = dist
        L = self.L = dist.L
        self.D = lcm(*(p.denominator for p in dist.probs))
        self.weights_int = [int(p * self.D) for p in dist.probs]
        counts = dist.counts
        self.nbits = [[state_bits(x, c) for x in range(L, 2 * L)] for c in counts]
        offsets = [sum(counts[:s]) for s in range(dist.n)]
        self.gather = [[offsets[s] + (x >> self.nbits[s][x - L]) - counts[s] for x in range(L, 2 * L)]
                       for s in range(dist.n)]
        # κ = Σ_x w_x X_x with w_x = Σ_s p_s k_s(x) = wnum_x / D
        self.wnum = [sum(self.weights_int[s] * self.nbits[s][i] for s in range(dist.n)) for i in range(L)]
        self.entropy = entropy(dist.probs)

    def scaled_numerators(self, labels) -> tuple[list[int], int]:
        """(det * X, det) for the spread; raises SingularSystem."""
        L, n = self.L, self.dist.n
        order = sorted(range(L), key=labels.__getitem__)
        rows = [[0] * (L + 1) for _ in range(L)]
        for s in range(n):
            w = self.weights_int[s]
            g = self.gather[s]
            for i in range(L):
                rows[order[g[i]]][i] += w
        for i in range(L - 1):
            rows[i][i] -= self.D
        rows[L - 1] = [1] * L + [1]
        prev = 1
        for c in range(L):
            piv, best = -1, 0
            for r in range(c, L):
                v = rows[r][c]
                if v and (piv < 0 or abs(v) < best):
                    piv, best = r, abs(v)
            if piv < 0:
                raise SingularSystem(f"no pivot in column {c}")
            rows[c], rows[piv] = rows[piv], rows[c]
            pr = rows[c]
            pc = pr[c]
            for r in range(c + 1, L):
                row = rows[r]
                a = row[c]
                if a:
                    rows[r] = [(pc * u - a * v) // prev for u, v in zip(row, pr)]
                elif pc != prev:
                    rows[r] = [(pc * u) // prev for u in row]
            prev = pc
        det = prev
        N = [0] * L
        for i in range(L - 1, -1, -1):
            row = rows[i]
            acc = det * row[L]
            for j in range(i + 1, L):
                if row[j]:
                    acc -= row[j] * N[j]
            N[i] = acc // row[i]
        return N, det

    def kappa(self, labels) -> Fraction:
        N, det = self.scaled_numerators(labels)
        return Fraction(sum(w * v for w, v in zip(self.wnum, N)), det * self.D)

    def equilibrium(self, labels) -> tuple[Fraction, ...]:
        N, det = self.scaled_numerators(labels)
        return tuple(Fraction(v, det) for v in N)
