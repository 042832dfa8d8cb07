"""Figure rendering for the command-line reports.

Every function takes prepared plain data (no module objects), renders one
figure with the Agg backend, writes it under the requested directory, and
returns the written path.  The CLI calls these only when a plot directory
is supplied; nothing here feeds back into the numeric results.
"""

from __future__ import annotations

import math
import pathlib
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

__all__ = [
    "region_growth",
    "markov_scatter",
    "wallcross_errors",
    "gw_growth",
    "loop_geometry",
    "period_curves",
    "pf_scaling",
    "p1_distances",
    "probe_values",
]


def _finish(fig, plot_dir: str | pathlib.Path, name: str) -> str:
    out = pathlib.Path(plot_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return str(path)


def region_growth(counts: dict[int, int], plot_dir) -> str:
    """Nodes per word length in the enumerated ball."""
    fig, ax = plt.subplots(figsize=(5, 3.2))
    depths = sorted(counts)
    ax.bar(depths, [counts[d] for d in depths], color="#39648c")
    ax.set_yscale("log")
    ax.set_xlabel("word length")
    ax.set_ylabel("regions")
    ax.set_title("ball growth")
    return _finish(fig, plot_dir, "regions_growth.png")


def markov_scatter(triples: Sequence[Sequence[int]], plot_dir) -> str:
    """Multiplicity triples on log axes; the cubic surface shows as a fan."""
    fig, ax = plt.subplots(figsize=(4.2, 4.2))
    xs = [t[0] for t in triples]
    ys = [t[1] for t in triples]
    ax.scatter(xs, ys, s=8, alpha=0.5, color="#8c3944")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("first multiplicity")
    ax.set_ylabel("second multiplicity")
    ax.set_title("multiplicity triples")
    return _finish(fig, plot_dir, "markov_triples.png")


def wallcross_errors(errors: Sequence[float], plot_dir) -> str:
    """Per-sample roundtrip coordinate error (floored for the log axis)."""
    fig, ax = plt.subplots(figsize=(5, 3.2))
    floored = [max(e, 1e-18) for e in errors]
    ax.semilogy(range(len(floored)), floored, ".", color="#39648c")
    ax.axhline(1e-12, color="#8c3944", lw=1, ls="--", label="tolerance")
    ax.set_xlabel("sample")
    ax.set_ylabel("roundtrip error")
    ax.set_title("wall-crossing roundtrips")
    ax.legend(loc="upper right")
    return _finish(fig, plot_dir, "wallcross_errors.png")


def gw_growth(values: Sequence[int], plot_dir) -> str:
    """log n_k against k; the asymptotic slope is visible by eye."""
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ks = range(1, len(values) + 1)
    ax.plot(list(ks), [math.log10(v) for v in values], "o-", color="#39648c", ms=4)
    ax.set_xlabel("degree k")
    ax.set_ylabel("log10 count")
    ax.set_title("rational curve counts")
    return _finish(fig, plot_dir, "gw_growth.png")


def loop_geometry(loops: Sequence[Sequence[complex]],
                  poles: Sequence[complex], plot_dir) -> str:
    """The standard loops in the punctured plane with the poles marked."""
    fig, ax = plt.subplots(figsize=(4.2, 4.2))
    for i, pts in enumerate(loops):
        ax.plot([p.real for p in pts], [p.imag for p in pts], lw=1,
                label=f"loop {i}")
    ax.plot([p.real for p in poles], [p.imag for p in poles], "k*", ms=10)
    ax.plot([0], [0], "ko", ms=4)
    ax.set_aspect("equal")
    ax.set_title("standard loops")
    ax.legend(loc="upper left", fontsize=8)
    return _finish(fig, plot_dir, "monodromy_loops.png")


def period_curves(zs: Sequence[float], w_rows: Sequence[Sequence[complex]],
                  plot_dir, name: str = "periods.png") -> str:
    """Real and imaginary parts of the three periods along the locus."""
    fig, axes = plt.subplots(1, 2, figsize=(7.5, 3.2), sharex=True)
    for b in range(3):
        ws = [row[b] for row in w_rows]
        axes[0].plot(zs, [w.real for w in ws], "o-", ms=3, label=f"W{b}")
        axes[1].plot(zs, [w.imag for w in ws], "o-", ms=3, label=f"W{b}")
    for ax, part in zip(axes, ("Re", "Im")):
        ax.set_xscale("log")
        ax.set_xlabel("z")
        ax.set_ylabel(f"{part} W")
    axes[0].legend(fontsize=8)
    fig.suptitle("periods on the locus")
    return _finish(fig, plot_dir, name)


def pf_scaling(entries: Sequence[dict], plot_dir) -> str:
    """Operator residual at h and 2h per center, with an h^2 guide."""
    fig, ax = plt.subplots(figsize=(5, 3.4))
    for e in entries:
        hs = [e["h"], 2 * e["h"]]
        rs = [e["residual"], e["coarse_residual"]]
        ax.loglog(hs, rs, "o-", label=f"z = {e['z']}")
        guide = [e["residual"], e["residual"] * 4]
        ax.loglog(hs, guide, "k:", lw=0.8)
    ax.set_xlabel("stencil spacing h")
    ax.set_ylabel("max residual")
    ax.set_title("operator residual vs. spacing (dotted: exact h^2)")
    ax.legend(fontsize=8)
    return _finish(fig, plot_dir, "pf_scaling.png")


def p1_distances(dists: Sequence[float], plot_dir) -> str:
    """Histogram of the continued values' distances from the integers."""
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.hist(dists, bins=20, color="#39648c")
    ax.axvline(1e-3, color="#8c3944", lw=1, ls="--", label="floor")
    ax.set_xlabel("min distance from integers")
    ax.set_ylabel("paths")
    ax.set_title("covering probe")
    ax.legend(loc="upper right")
    return _finish(fig, plot_dir, "p1_covering.png")


def probe_values(zs: Sequence[float], w_rows: Sequence[Sequence[complex]],
                 plot_dir) -> str:
    """Sampled period values in the charge plane (the conjectured image)."""
    fig, ax = plt.subplots(figsize=(4.6, 4.2))
    for b in range(3):
        ws = [row[b] for row in w_rows]
        ax.plot([w.real for w in ws], [w.imag for w in ws], "o-", ms=3,
                label=f"W{b}")
    ax.axhline(0.0, color="k", lw=0.6)
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    ax.set_title("period values along the locus")
    ax.legend(fontsize=8)
    return _finish(fig, plot_dir, "probe_values.png")
