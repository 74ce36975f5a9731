"""Matplotlib renderings saved alongside the delimited report files.

Figures are a convenience view of the same numbers the CSV files carry;
the delimited output remains the authoritative artifact.  The Agg backend
is forced so rendering works headless, and savefig metadata is pinned so
repeated runs produce identical bytes.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

_SAVE_KW = {"dpi": 150, "metadata": {"Software": "dptrans"}}


def render_table1(data: dict, outdir) -> str:
    """Grouped bars: transcoding vs prior-filter estimates."""
    outdir = Path(outdir)
    fig, axes = plt.subplots(1, 3, figsize=(11, 3.2))
    for ax, key, title in zip(axes, ("r1", "r5", "joint"),
                              ("first label", "last label",
                               "joint patterns")):
        rows = data[key]
        labels = [str(lab) if isinstance(lab, int)
                  else "".join(str(v) for v in lab) for lab, _, _ in rows]
        x = range(len(rows))
        ax.bar([i - 0.2 for i in x], [r[1] for r in rows], width=0.4,
               label="transcoding")
        ax.bar([i + 0.2 for i in x], [r[2] for r in rows], width=0.4,
               label="prior filter")
        ax.set_xticks(list(x))
        ax.set_xticklabels(labels, rotation=90 if key == "joint" else 0,
                           fontsize=7)
        ax.set_title(title, fontsize=9)
    axes[0].set_ylabel("probability")
    axes[0].legend(fontsize=7)
    fig.tight_layout()
    path = outdir / "table1.png"
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return str(path)


def render_table2(data: dict, outdir) -> str:
    """Log-scale IAT of the cluster count per sampler."""
    outdir = Path(outdir)
    rows = data["rows"]
    names = [r["algorithm"] for r in rows]
    taus = [r["iat"]["K"] if r["iat"]["K"] is not None else float("nan")
            for r in rows]
    fig, ax = plt.subplots(figsize=(7, 3.2))
    ax.bar(range(len(rows)), taus)
    ax.set_yscale("log")
    ax.set_xticks(range(len(rows)))
    ax.set_xticklabels(names, rotation=20, ha="right", fontsize=8)
    ax.set_ylabel("IAT of cluster count")
    ax.axhline(0.5, color="grey", lw=0.8, ls="--")
    fig.tight_layout()
    path = outdir / "table2.png"
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return str(path)


def render_figure1(data: dict, outdir) -> str:
    """2x2 posterior histograms of the leading weights in both orders."""
    outdir = Path(outdir)
    edges = data["edges"]
    centers = (edges[:-1] + edges[1:]) / 2.0
    width = edges[1] - edges[0]
    fig, axes = plt.subplots(2, 2, figsize=(8, 5.5), sharex=True)
    titles = {"w1": "first stick weight", "wtilde1": "first appearance weight",
              "w2": "second stick weight",
              "wtilde2": "second appearance weight"}
    for ax, name in zip(axes.ravel(), ("w1", "wtilde1", "w2", "wtilde2")):
        ax.bar(centers, data["hists"][name], width=width)
        ax.set_title(titles[name], fontsize=9)
    for ax in axes[1]:
        ax.set_xlabel("weight")
    fig.tight_layout()
    path = outdir / "figure1.png"
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return str(path)
