"""Render experiment tables to matplotlib figures.

One PNG per experiment run, written atomically next to the delimited output.
The figures are working plots for eyeballing a run, not publication art:
success curves for transitions, error-vs-noise scatter for stability,
slack histograms for injectivity, rate curves for certificate sweeps.
"""

from __future__ import annotations

import os
import tempfile

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .experiments import ResultTable

_DPI = 120


def _save(fig, path: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".png")
    os.close(fd)
    try:
        fig.savefig(tmp, dpi=_DPI, bbox_inches="tight")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    finally:
        plt.close(fig)


def _by_n(aggregates: list[dict]) -> dict[int, list[dict]]:
    out: dict[int, list[dict]] = {}
    for agg in aggregates:
        out.setdefault(agg["n"], []).append(agg)
    return out


def _render_transition(table: ResultTable):
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    for n, aggs in sorted(_by_n(table.aggregates).items()):
        ratios = [a["ratio"] for a in aggs]
        ax1.plot(ratios, [a["success_rate"] for a in aggs], "o-", label=f"n={n}")
        ax2.semilogy(ratios, [a["median_rel_frob_error"] for a in aggs], "o-", label=f"n={n}")
    ax1.set_xlabel("m/n")
    ax1.set_ylabel("success rate")
    ax1.set_ylim(-0.02, 1.02)
    ax1.legend()
    ax2.set_xlabel("m/n")
    ax2.set_ylabel("median relative Frobenius error")
    ax2.legend()
    fig.suptitle("Recovery transition")
    return fig


def _render_universality(table: ResultTable):
    fig, ax = plt.subplots(figsize=(7, 4))
    for n, aggs in sorted(_by_n(table.aggregates).items()):
        ratios = [a["ratio"] for a in aggs]
        ax.semilogy(ratios, [a["max_rel_frob_error"] for a in aggs], "o-", label=f"n={n}")
    ax.set_xlabel("m/n")
    ax.set_ylabel("worst signal error per ensemble")
    ax.legend()
    ax.set_title("Universality: worst case over signals on one fixed ensemble")
    return fig


def _render_stability(table: ResultTable):
    fig, ax = plt.subplots(figsize=(7, 4))
    noisy = [r for r in table.rows if r["noise_l1_over_m"] > 0 and r["frob_error"] > 0]
    if noisy:
        x = [r["noise_l1_over_m"] for r in noisy]
        y = [r["frob_error"] for r in noisy]
        ax.loglog(x, y, ".", alpha=0.5, label="trials")
        c0 = max(r["frob_error"] / r["noise_l1_over_m"] for r in noisy)
        lo, hi = min(x), max(x)
        ax.loglog([lo, hi], [c0 * lo, c0 * hi], "--", label=f"fitted C0 = {c0:.3g}")
    ax.set_xlabel("noise magnitude per measurement")
    ax.set_ylabel("Frobenius error of lifted estimate")
    ax.legend()
    ax.set_title("Stability: error vs noise level")
    return fig


def _render_injectivity(table: ResultTable):
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    ax1.hist([r["upper_slack"] for r in table.rows], bins=40)
    ax1.axvline(0.0, color="k", linestyle="--")
    ax1.set_xlabel("upper slack (PSD probes)")
    ax2.hist([r["lower_slack"] for r in table.rows], bins=40)
    ax2.axvline(0.0, color="k", linestyle="--")
    ax2.set_xlabel("lower slack (rank-2 probes)")
    fig.suptitle("Injectivity slack distributions (negative = violation)")
    return fig


def _render_cert_sweep(table: ResultTable):
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    for n, aggs in sorted(_by_n(table.aggregates).items()):
        ratios = [a["ratio"] for a in aggs]
        ax1.plot(ratios, [a["inexact_rate"] for a in aggs], "o-", label=f"n={n} inexact")
        ax1.plot(ratios, [a["core_rate"] for a in aggs], "s--", label=f"n={n} core")
        ax2.plot(ratios, [a["median_tperp_shift_norm"] for a in aggs], "o-", label=f"n={n}")
    ax1.set_xlabel("m/n")
    ax1.set_ylabel("pass rate")
    ax1.set_ylim(-0.02, 1.02)
    ax1.legend()
    ax2.set_xlabel("m/n")
    ax2.set_ylabel("median shift norm")
    ax2.axhline(0.1, color="k", linestyle=":")
    ax2.legend()
    fig.suptitle("Certificate quality sweep")
    return fig


_RENDERERS = {
    "transition": _render_transition,
    "universality": _render_universality,
    "stability": _render_stability,
    "injectivity": _render_injectivity,
    "cert_sweep": _render_cert_sweep,
}


def render_figures(table: ResultTable, out_dir: str) -> list[str]:
    """Write the experiment's figure(s); returns the paths written."""
    fig = _RENDERERS[table.experiment](table)
    path = os.path.join(out_dir, f"{table.experiment}.png")
    _save(fig, path)
    return [path]
