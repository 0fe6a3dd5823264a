"""Matplotlib figures written next to the CSV reports."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

# fixed metadata keeps repeated renders comparable
_META = {"Software": None}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_META)
    plt.close(fig)


def baseline_figure(rows, exact: float | None, path) -> None:
    """Objective reached by each annealing seed, with the exact optimum as a line."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    seeds = [r.seed for r in rows]
    ax.plot(seeds, [r.objective for r in rows], "o", color="#2b83ba", label="stochastic search")
    if exact is not None:
        ax.axhline(exact, color="#d7191c", lw=1.5, label="exact optimum")
    ax.set_xlabel("seed")
    ax.set_ylabel("objective")
    ax.legend(frameon=False)
    _save(fig, path)


def levels_figure(rows: list[dict], path) -> None:
    """Weighted length and distance terms per level."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    names = [r["level"] for r in rows]
    x = range(len(rows))
    ax.bar([i - 0.2 for i in x], [r["length"] for r in rows], 0.4, label="length term", color="#4393c3")
    ax.bar([i + 0.2 for i in x], [r["distance"] for r in rows], 0.4, label="distance term", color="#f4a582")
    ax.set_xticks(list(x))
    ax.set_xticklabels(names)
    ax.set_ylabel("objective contribution")
    ax.legend(frameon=False)
    _save(fig, path)


def energy_figure(energies: list[list[float]], path) -> None:
    """Snake energy after every accepted descent step, one curve per smoothing pass."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for k, series in enumerate(energies):
        ax.plot(range(len(series)), series, label=f"pass {k}")
    ax.set_xlabel("iteration")
    ax.set_ylabel("energy")
    if any(len(s) > 1 for s in energies):
        ax.set_xscale("symlog")
    ax.legend(frameon=False)
    _save(fig, path)
