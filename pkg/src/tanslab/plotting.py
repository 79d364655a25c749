"""Report figures, written to files next to the CSV/text output."""
from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "figure.figsize": (6.4, 4.0),
    "savefig.dpi": 120,
}


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_equilibrium(eq_probs, L: int, path, title: str = ""):
    """Stationary p_x against the log2(e)/x law."""
    xs = np.arange(L, 2 * L)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.plot(xs, [float(p) for p in eq_probs], "o-", ms=3, label="equilibrium $p_x$")
        ax.plot(xs, math.log2(math.e) / xs, "--", label=r"$\log_2(e)/x$")
        ax.set_xlabel("state x")
        ax.set_ylabel("probability")
        ax.set_title(title)
        ax.legend()
        return _save(fig, path)


def plot_kappa_histogram(kappas, entropy: float, path, bins: int = 80):
    vals = np.asarray(kappas, dtype=float)
    vals = vals[~np.isnan(vals)]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.hist(vals, bins=bins, color="tab:blue", alpha=0.8)
        ax.axvline(entropy, color="k", ls=":", label=f"H(S) = {entropy:.4f}")
        ax.set_xlabel("average code length κ (bits/symbol)")
        ax.set_ylabel("number of spreads")
        ax.set_yscale("log")
        ax.legend()
        return _save(fig, path)


def plot_trace(traces, path, labels=None):
    """ΔH after each good swap, one line per trace."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for i, tr in enumerate(traces):
            its = [0] + [g.iteration for g in tr.accepted]
            dh = [tr.initial_delta_h] + [g.delta_h for g in tr.accepted]
            ax.step(its, dh, where="post", label=None if labels is None else labels[i])
        ax.set_xlabel("iteration")
        ax.set_ylabel("ΔH (bits/symbol)")
        ax.set_yscale("log")
        if labels is not None:
            ax.legend(fontsize=7)
        return _save(fig, path)


def plot_bench(rows, path):
    """ΔH_min / ΔH_max per seed, grouped by state count."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for key, marker in (("delta_h_min", "v"), ("delta_h_max", "^")):
            pts = [(r["L"], r[key]) for r in rows if r.get(key) not in (None, "")]
            if pts:
                ls, vs = zip(*pts)
                ax.scatter(ls, vs, marker=marker, label=key)
        ax.set_xscale("log", base=2)
        ax.set_yscale("log")
        ax.set_xlabel("number of states L")
        ax.set_ylabel("ΔH (bits/symbol)")
        ax.legend()
        return _save(fig, path)
