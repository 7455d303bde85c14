"""Matplotlib figures for the CLI report (Agg backend, PNG output)."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

SQRT2 = math.sqrt(2.0)


def _save(fig, path) -> None:
    fig.tight_layout()
    # fixed metadata keeps the PNG bytes reproducible
    fig.savefig(path, dpi=110, metadata={"Software": None})
    plt.close(fig)


def cdf_comparison(path, curves: dict, title: str, xlabel: str = "x") -> None:
    """``curves``: label -> (x, F) step or line data."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, (x, F) in curves.items():
        ax.step(x, F, where="post", label=label) if len(x) > 1 else ax.plot(x, F, "o", label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("CDF")
    ax.set_title(title)
    ax.legend()
    _save(fig, path)


def histogram(path, values, title: str, xlabel: str, bins=50, density_fn=None, log: bool = False) -> None:
    values = np.asarray(values, dtype=float)
    values = values[np.isfinite(values)]
    fig, ax = plt.subplots(figsize=(6, 4))
    if values.size:
        ax.hist(values, bins=bins, density=density_fn is not None, alpha=0.7)
        if density_fn is not None:
            xs = np.linspace(values.min(), values.max(), 400)
            ax.plot(xs, density_fn(xs), "k-", lw=1.5)
    if log:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_title(title)
    _save(fig, path)


def profile(path, x, omega, tail, C: float | None) -> None:
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    axes[0].plot(x, omega)
    axes[0].set_xlabel("x")
    axes[0].set_ylabel("omega(x)")
    axes[0].set_title("centered wave profile")
    sel = (x > 0.5) & (tail > 0)
    axes[1].plot(x[sel], tail[sel] / (x[sel] * np.exp(-SQRT2 * x[sel])))
    if C is not None:
        axes[1].axhline(C, color="k", ls="--", lw=1)
    axes[1].set_xlabel("x")
    axes[1].set_ylabel("(1 - omega) / (x e^{-sqrt2 x})")
    axes[1].set_title("tail ratio")
    _save(fig, path)


def panel_intervals(path, rows: list, title: str) -> None:
    """One pair of confidence intervals per test function."""
    fig, ax = plt.subplots(figsize=(7, 0.6 * len(rows) + 1.5))
    for i, r in enumerate(rows):
        for off, side, color in ((-0.12, "a", "C0"), (0.12, "b", "C1")):
            m, lo, hi = r[f"mean_{side}"], r[f"ci_lo_{side}"], r[f"ci_hi_{side}"]
            ax.errorbar(m, i + off, xerr=[[m - lo], [hi - m]], fmt="o", color=color,
                        label=side if i == 0 else None)
    ax.set_yticks(range(len(rows)))
    ax.set_yticklabels([r["phi"] for r in rows], fontsize=8)
    ax.set_xlabel("Laplace functional")
    ax.set_title(title)
    ax.legend()
    _save(fig, path)


def criteria_summary(path, results: list) -> None:
    fig, ax = plt.subplots(figsize=(7, 0.4 * max(len(results), 1) + 1))
    for i, r in enumerate(results):
        ax.barh(i, 1, color="tab:green" if r["passed"] else "tab:red")
        ax.text(0.02, i, f"#{r['number']} {r['name']}", va="center", color="white", fontsize=9)
    ax.set_yticks([])
    ax.set_xticks([])
    ax.invert_yaxis()
    ax.set_title("acceptance criteria")
    _save(fig, path)


def curve(path, x, ys: dict, title: str, xlabel: str, ylabel: str) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, y in ys.items():
        ax.plot(x, y, "o-", label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend()
    _save(fig, path)
