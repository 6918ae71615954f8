"""Figure builders, one per figure id.

Every builder takes the discovered bundle list, picks the arms it needs
by (kind, scenario, tax), and draws exclusively from CSV columns. The
renderer adds nothing numeric of its own; confidence whiskers are the
lo/hi columns drawn verbatim.

Color conventions are fixed: prudent red, ordinary blue, audacious green
(communities 1, 2, 3 inherit their leaders' class colors), transaction
tax blue versus flat tax red, and reference blue versus focal red.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Callable

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.collections import LineCollection
from matplotlib.figure import Figure
from matplotlib.lines import Line2D
from matplotlib.patches import Patch

from .bundles import (
    Bundle,
    MissingInputError,
    bundle_at,
    has_final_rows,
    read_class_table,
    read_final_table,
    read_graph_snapshot,
    read_sweep,
    read_timeseries_mean,
)

CLASS_ORDER = ("prudent", "ordinary", "audacious")
CLASS_COLORS = {"prudent": "#d62728", "ordinary": "#1f77b4", "audacious": "#2ca02c"}
COMMUNITY_COLORS = {1: "#d62728", 2: "#1f77b4", 3: "#2ca02c"}
TT_COLOR = "#1f77b4"
FT_COLOR = "#d62728"
FIGSIZE = (6.4, 4.4)
DPI = 150


# ---------------------------------------------------------------------------
# bundle selection


def _pick_run(
    bundles: list[Bundle],
    fig_id: str,
    scenario: str,
    tax: str | None,
    *,
    with_communities: bool = False,
    with_graph: bool = False,
) -> Bundle:
    for b in bundles:
        if b.kind != "run" or b.scenario != scenario:
            continue
        if tax is not None and b.tax != tax:
            continue
        if with_communities and not has_final_rows(b, scenario):
            continue
        if with_graph and not os.path.isfile(b.file("graph_snapshot.nodes")):
            continue
        return b
    wants = [f"a {scenario} run bundle"]
    if tax is not None:
        wants.append(f"with tax={tax}")
    if with_communities:
        wants.append("carrying community tables (a twin arm provides them)")
    if with_graph:
        wants.append("carrying a graph snapshot")
    raise MissingInputError(f"{fig_id}: needs {' '.join(wants)}; none was given")


def _pick_kind(bundles: list[Bundle], fig_id: str, kind: str, tax: str) -> Bundle:
    for b in bundles:
        if b.kind == kind and b.tax == tax:
            return b
    raise MissingInputError(
        f"{fig_id}: needs a {kind} bundle with tax={tax}; none was given"
    )


def _twin_arm(twin: Bundle, arm: str) -> Bundle:
    return bundle_at(os.path.join(twin.path, arm))


# ---------------------------------------------------------------------------
# shared panels


def _class_bar_panel(ax, bundle: Bundle, scenario: str, proportional: bool) -> None:
    table = read_class_table(bundle, scenario)
    missing = [c for c in CLASS_ORDER if c not in table]
    if missing:
        raise MissingInputError(
            f"{bundle.file('class_table.csv')}: no row for class {missing[0]}"
        )
    xs = np.arange(len(CLASS_ORDER), dtype=float)
    counts = np.array([table[c]["count"] for c in CLASS_ORDER])
    widths = np.full(len(CLASS_ORDER), 0.8)
    if proportional and counts.max() > 0:
        widths = 0.84 * counts / counts.max()
    for x, cls, width in zip(xs, CLASS_ORDER, widths):
        row = table[cls]
        ax.bar(x, row["wealth_total"], width=width, color=CLASS_COLORS[cls])
        ax.vlines(x, row["wealth_total_lo"], row["wealth_total_hi"],
                  color="black", lw=1.2)
    ax.set_xticks(xs, CLASS_ORDER)
    ax.set_ylabel("total final wealth")


def _community_bar_panel(ax, bundle: Bundle, scenario: str, fig_id: str) -> None:
    rows = read_final_table(bundle, scenario)
    if not rows:
        raise MissingInputError(
            f"{fig_id}: {bundle.file('final_table.csv')} has no rows "
            f"for scenario {scenario}"
        )
    for row in rows:
        c = row["community"]
        ax.bar(c, row["x_ratio"], width=0.7, color=COMMUNITY_COLORS[c])
        ax.vlines(c, row["x_ratio_lo"], row["x_ratio_hi"], color="black", lw=1.2)
    ax.set_xticks([r["community"] for r in rows],
                  [f"community {r['community']}" for r in rows])
    ax.set_ylabel("mean final wealth / initial endowment")
    ax.axhline(1.0, color="0.6", lw=0.8, ls="--")


def _gini_panel(ax, arms: list[tuple[Bundle, str, str]]) -> None:
    for bundle, color, label in arms:
        ts = read_timeseries_mean(bundle, ("k", "gini_mean", "gini_lo", "gini_hi"))
        ax.fill_between(ts["k"], ts["gini_lo"], ts["gini_hi"],
                        color=color, alpha=0.2, lw=0)
        ax.plot(ts["k"], ts["gini_mean"], color=color, lw=1.6, label=label)
    ax.set_xlabel("session k")
    ax.set_ylabel("Gini coefficient")
    ax.set_ylim(0.0, 1.0)
    ax.legend()


def _volume_panel(ax, arms: list[tuple[Bundle, str, str]]) -> None:
    for bundle, color, label in arms:
        ts = read_timeseries_mean(bundle, ("k", "volume_mean", "volume_ma"))
        # raw mean kept faint behind its moving average; the underscore
        # label keeps the raw line out of the legend
        ax.plot(ts["k"], ts["volume_mean"], color=color, alpha=0.3, lw=0.7,
                label=f"_{label} raw")
        mask = ~np.isnan(ts["volume_ma"])
        ax.plot(ts["k"][mask], ts["volume_ma"][mask], color=color, lw=1.6,
                label=label)
    ax.set_xlabel("session k")
    ax.set_ylabel("trading volume")
    ax.legend()


def _sweep_panel(ax, bundle: Bundle) -> None:
    table = read_sweep(bundle)
    for cls in CLASS_ORDER:
        color = CLASS_COLORS[cls]
        ax.fill_between(table["k_t"], table[f"{cls}_lo"], table[f"{cls}_hi"],
                        color=color, alpha=0.2, lw=0)
        ax.plot(table["k_t"], table[f"{cls}_mean"], color=color, lw=1.6,
                marker="o", ms=4, label=cls)
    ax.set_xlabel("trigger step k_t")
    ax.set_ylabel("leaders per community")
    ax.legend()


# ---------------------------------------------------------------------------
# figure builders


def _fig1(bundles: list[Bundle], fig_id: str, tax: str, label: str) -> Figure:
    b = _pick_run(bundles, fig_id, "reference", tax)
    fig, ax = plt.subplots(figsize=FIGSIZE)
    _class_bar_panel(ax, b, "reference", proportional=False)
    ax.set_title(f"Reference scenario, {label}: final wealth by class")
    fig.tight_layout()
    return fig


def _fig2(bundles: list[Bundle], fig_id: str, panel) -> Figure:
    tt = _pick_run(bundles, fig_id, "reference", "tobin")
    ft = _pick_run(bundles, fig_id, "reference", "flat")
    fig, ax = plt.subplots(figsize=FIGSIZE)
    panel(ax, [(tt, TT_COLOR, "TT"), (ft, FT_COLOR, "FT")])
    what = "inequality" if panel is _gini_panel else "trading volume"
    ax.set_title(f"Reference scenario: {what} under the two tax schemes")
    fig.tight_layout()
    return fig


def _fig4(bundles: list[Bundle], fig_id: str, scenario: str) -> Figure:
    b = _pick_run(bundles, fig_id, scenario, "tobin")
    fig, ax = plt.subplots(figsize=FIGSIZE)
    _class_bar_panel(ax, b, scenario, proportional=True)
    ax.set_title(f"TT, {scenario} scenario: final wealth by class\n"
                 "(bar width proportional to class numerosity)")
    fig.tight_layout()
    return fig


def _fig5(bundles: list[Bundle], fig_id: str, scenario: str) -> Figure:
    b = _pick_run(bundles, fig_id, scenario, "tobin", with_communities=True)
    fig, ax = plt.subplots(figsize=FIGSIZE)
    _community_bar_panel(ax, b, scenario, fig_id)
    ax.set_title(f"TT, {scenario} scenario: community mean wealth")
    fig.tight_layout()
    return fig


def _fig8(bundles: list[Bundle]) -> Figure:
    twin = _pick_kind(bundles, "fig8", "twin", "tobin")
    ref = _twin_arm(twin, "reference")
    foc = _twin_arm(twin, "focal")
    fig, ax = plt.subplots(figsize=FIGSIZE)
    _volume_panel(ax, [(ref, TT_COLOR, "reference"), (foc, FT_COLOR, "focal")])
    ax.set_title("TT: trading volume with and without herding")
    fig.tight_layout()
    return fig


def _fig9(bundles: list[Bundle], fig_id: str, tax: str, label: str) -> Figure:
    b = _pick_kind(bundles, fig_id, "sweep", tax)
    fig, ax = plt.subplots(figsize=FIGSIZE)
    _sweep_panel(ax, b)
    ax.set_title(f"{label}: leader class mix against the trigger step")
    fig.tight_layout()
    return fig


GOLDEN_ANGLE = 2.399963229728653
CLUSTER_CENTERS = {1: (0.0, 2.2), 2: (-2.1, -1.4), 3: (2.1, -1.4)}


def _graph_positions(nodes) -> np.ndarray:
    """Deterministic sunflower layout, one disc per community.

    Leaders take the innermost spots; everyone else follows in node-id
    order. No randomness, so re-rendering is byte-stable.
    """
    pos = np.zeros((len(nodes), 2))
    by_id = {n.node_id: i for i, n in enumerate(nodes)}
    for comm, (cx, cy) in CLUSTER_CENTERS.items():
        members = [n for n in nodes if n.community == comm]
        members.sort(key=lambda n: (n.role != "leader", n.node_id))
        for rank, node in enumerate(members):
            radius = 0.17 * math.sqrt(rank)
            theta = rank * GOLDEN_ANGLE
            pos[by_id[node.node_id]] = (
                cx + radius * math.cos(theta), cy + radius * math.sin(theta)
            )
    return pos


def _graph(bundles: list[Bundle]) -> Figure:
    b = _pick_run(bundles, "graph", "focal", None, with_graph=True)
    nodes, edges = read_graph_snapshot(b)
    pos = _graph_positions(nodes)
    by_id = {n.node_id: i for i, n in enumerate(nodes)}

    fig, ax = plt.subplots(figsize=(6.4, 6.4))
    if len(edges):
        segments = [(pos[by_id[s]], pos[by_id[d]]) for s, d in edges]
        ax.add_collection(
            LineCollection(segments, colors="0.78", linewidths=0.4, zorder=1)
        )
    followers = [n for n in nodes if n.role == "follower"]
    leaders = [n for n in nodes if n.role == "leader"]
    for group, size, edge in ((followers, 16, "none"), (leaders, 110, "black")):
        if not group:
            continue
        idx = [by_id[n.node_id] for n in group]
        ax.scatter(
            pos[idx, 0], pos[idx, 1], s=size,
            c=[CLASS_COLORS[n.class_final] for n in group],
            edgecolors=edge, linewidths=0.9, zorder=3,
        )
    handles = [Patch(color=CLASS_COLORS[c], label=c) for c in CLASS_ORDER]
    handles.append(Line2D([], [], marker="o", ls="none", mfc="white",
                          mec="black", ms=9, label="leader"))
    ax.legend(handles=handles, loc="lower center", ncols=4, frameon=False)
    ax.set_title("Communities at the final step (node color = class)")
    ax.set_aspect("equal")
    ax.axis("off")
    fig.tight_layout()
    return fig


@dataclass(frozen=True)
class FigureSpec:
    fig_id: str
    caption: str
    build: Callable[[list[Bundle]], Figure]


FIGURES: dict[str, FigureSpec] = {
    spec.fig_id: spec
    for spec in (
        FigureSpec("fig1a", "reference TT final wealth by class",
                   lambda bs: _fig1(bs, "fig1a", "tobin", "TT")),
        FigureSpec("fig1b", "reference FT final wealth by class",
                   lambda bs: _fig1(bs, "fig1b", "flat", "FT")),
        FigureSpec("fig2a", "reference Gini time series, TT vs FT",
                   lambda bs: _fig2(bs, "fig2a", _gini_panel)),
        FigureSpec("fig2b", "reference trading volume, TT vs FT",
                   lambda bs: _fig2(bs, "fig2b", _volume_panel)),
        FigureSpec("fig4a", "TT reference class wealth, width by numerosity",
                   lambda bs: _fig4(bs, "fig4a", "reference")),
        FigureSpec("fig4b", "TT focal class wealth, width by numerosity",
                   lambda bs: _fig4(bs, "fig4b", "focal")),
        FigureSpec("fig5a", "TT reference community mean wealth",
                   lambda bs: _fig5(bs, "fig5a", "reference")),
        FigureSpec("fig5b", "TT focal community mean wealth",
                   lambda bs: _fig5(bs, "fig5b", "focal")),
        FigureSpec("fig8", "TT volume, reference vs focal twins", _fig8),
        FigureSpec("fig9a", "TT leader mix across trigger steps",
                   lambda bs: _fig9(bs, "fig9a", "tobin", "TT")),
        FigureSpec("fig9b", "FT leader mix across trigger steps",
                   lambda bs: _fig9(bs, "fig9b", "flat", "FT")),
        FigureSpec("graph", "community graph snapshot colored by class", _graph),
    )
}


def build_figure(fig_id: str, bundles: list[Bundle]) -> Figure:
    if fig_id not in FIGURES:
        valid = ", ".join(FIGURES)
        raise MissingInputError(f"unknown figure id {fig_id!r}; choose from {valid}")
    return FIGURES[fig_id].build(bundles)


def render(fig_id: str, bundles: list[Bundle], outdir: str) -> str:
    """Write one figure as a PNG and return its path."""
    fig = build_figure(fig_id, bundles)
    path = os.path.join(outdir, f"{fig_id}.png")
    try:
        fig.savefig(path, dpi=DPI, metadata={"Software": "herdmarket-plots"})
    finally:
        plt.close(fig)
    return path
