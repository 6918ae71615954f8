"""Output bundles: fixed-schema CSV tables, graph snapshots, run summaries.

A bundle directory is the only interface downstream consumers (the
plotting package above all) get, so its files are written to be stable:
floats carry 17 significant digits (lossless for float64), row order is
fixed, there are no timestamps, and rerunning the manifest reproduces
every file byte for byte.

Single-scenario bundle layout:
    manifest.ini            resolved config; re-runnable as a config file
    timeseries.csv          one row per (replicate, step)
    timeseries_mean.csv     cross-replicate per-step means and CIs + volume MA
    final_table.csv         per-community wealth/size/class table with CIs
    final_by_replicate.csv  the rows final_table aggregates
    leaders_table.csv       per-community leader wealth and count with CIs
    leaders_by_replicate.csv
    class_table.csv         per-class final wealth totals and counts with CIs
    class_by_replicate.csv
    graph_snapshot.edges    focal runs: one captured replicate's wiring
    graph_snapshot.nodes    node community/role/class/wealth for the same
    summary.json            headline statistics, sorted keys, round-trippable

Twin bundles nest a reference/ and a focal/ single-scenario bundle plus
combined tables; sweep and robustness bundles carry their own tables.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import __version__
from .config import ScenarioConfig, parse_config, serialize_config
from .core import AgentClass
from .metrics import class_counts, class_wealth_totals, gini, mean_ci, moving_average
from .network import N_COMMUNITIES
from .runner import RobustnessResult, RunAggregate, SweepRow, TwinAggregate

CLASS_NAMES = tuple(c.name.lower() for c in AgentClass)

TIMESERIES_BASE_HEADER = "replicate,k,gini,volume,mean_wealth,f1,f2,f3"
TIMESERIES_COMM_SUFFIX = ",comm1_mean,comm2_mean,comm3_mean"

FINAL_TABLE_HEADER = (
    "scenario,community,x_ratio,x_ratio_lo,x_ratio_hi,nu,nu_lo,nu_hi,"
    "f1,f1_lo,f1_hi,f2,f2_lo,f2_hi,f3,f3_lo,f3_hi"
)
FINAL_BY_REP_HEADER = "scenario,replicate,community,x_ratio,nu,f1,f2,f3"
LEADERS_TABLE_HEADER = (
    "scenario,community,x_l_ratio,x_l_ratio_lo,x_l_ratio_hi,nu_l,nu_l_lo,nu_l_hi"
)
LEADERS_BY_REP_HEADER = "scenario,replicate,community,x_l_ratio,nu_l"
CLASS_TABLE_HEADER = (
    "scenario,agent_class,wealth_total,wealth_total_lo,wealth_total_hi,"
    "count,count_lo,count_hi"
)
CLASS_BY_REP_HEADER = "scenario,replicate,agent_class,wealth_total,count"
SWEEP_HEADER = (
    "k_t,prudent_mean,prudent_lo,prudent_hi,ordinary_mean,ordinary_lo,"
    "ordinary_hi,audacious_mean,audacious_lo,audacious_hi"
)
ROBUSTNESS_HEADER = (
    "community,baseline_x_ratio,baseline_lo,baseline_hi,"
    "rewired_x_ratio,rewired_lo,rewired_hi,ci_overlap"
)


def fmt(value) -> str:
    """Golden-stable cell formatting: 17 significant digits, NaN as empty."""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if math.isnan(v):
        return ""
    return f"{v:.17g}"


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _write_csv(path: str, header: str, rows: list[list]) -> None:
    lines = [header]
    lines += [",".join(fmt(c) if not isinstance(c, str) else c for c in row) for row in rows]
    _write_text(path, "\n".join(lines) + "\n")


def _summary_text(data: dict) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def _cell(samples) -> dict:
    m, lo, hi = mean_ci(samples)
    return {"mean": m, "lo": lo, "hi": hi}


# ---------------------------------------------------------------------------
# per-step aggregation


def _step_mean_ci(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Column-wise mean and t-interval of a (replicates, steps) matrix."""
    r = matrix.shape[0]
    mean = matrix.mean(axis=0)
    if r < 2:
        return mean, mean.copy(), mean.copy()
    tq = float(stats.t.ppf(0.975, r - 1))
    half = tq * matrix.std(axis=0, ddof=1) / math.sqrt(r)
    return mean, mean - half, mean + half


def _has_communities(agg: RunAggregate) -> bool:
    return any(t.community is not None for t in agg.trajectories)


def write_timeseries(agg: RunAggregate, outdir: str) -> None:
    with_comm = _has_communities(agg)
    header = TIMESERIES_BASE_HEADER + (TIMESERIES_COMM_SUFFIX if with_comm else "")
    lines = [header]
    for t in agg.trajectories:
        for i in range(agg.steps):
            cells = [
                str(t.replicate), str(i + 1), fmt(t.gini[i]), fmt(t.volume[i]),
                fmt(t.mean_wealth[i]), fmt(t.fractions[i, 0]),
                fmt(t.fractions[i, 1]), fmt(t.fractions[i, 2]),
            ]
            if with_comm:
                cells += [fmt(t.community_mean[i, c]) for c in range(N_COMMUNITIES)]
            lines.append(",".join(cells))
    _write_text(os.path.join(outdir, "timeseries.csv"), "\n".join(lines) + "\n")


def write_timeseries_mean(agg: RunAggregate, outdir: str) -> None:
    with_comm = _has_communities(agg)
    header = (
        "k,gini_mean,gini_lo,gini_hi,volume_mean,volume_lo,volume_hi,volume_ma,"
        "mean_wealth_mean,f1_mean,f2_mean,f3_mean"
    )
    if with_comm:
        header += ",comm1_mean_mean,comm2_mean_mean,comm3_mean_mean"
    if agg.steps == 0:
        _write_text(os.path.join(outdir, "timeseries_mean.csv"), header + "\n")
        return
    g_mean, g_lo, g_hi = _step_mean_ci(agg.stack("gini"))
    v_mean, v_lo, v_hi = _step_mean_ci(agg.stack("volume"))
    v_ma = moving_average(v_mean, agg.config.volume_ma_window)
    w_mean = agg.stack("mean_wealth").mean(axis=0)
    f_mean = agg.stack("fractions").mean(axis=0)
    rows = []
    comm_mean = None
    if with_comm:
        # every replicate shares the trigger step, so the NaN rows line up
        # and a plain mean keeps them NaN without nanmean's empty-slice noise
        comm_mean = agg.stack("community_mean").mean(axis=0)
    for i in range(agg.steps):
        row = [
            str(i + 1), fmt(g_mean[i]), fmt(g_lo[i]), fmt(g_hi[i]),
            fmt(v_mean[i]), fmt(v_lo[i]), fmt(v_hi[i]), fmt(v_ma[i]),
            fmt(w_mean[i]), fmt(f_mean[i, 0]), fmt(f_mean[i, 1]), fmt(f_mean[i, 2]),
        ]
        if with_comm:
            row += [fmt(comm_mean[i, c]) for c in range(N_COMMUNITIES)]
        rows.append(",".join(row))
    _write_text(
        os.path.join(outdir, "timeseries_mean.csv"),
        header + "\n" + "\n".join(rows) + "\n",
    )


# ---------------------------------------------------------------------------
# final tables


def final_rows_by_replicate(agg: RunAggregate) -> list[list]:
    rows = []
    for t in agg.trajectories:
        if t.community_rows is None:
            continue
        for cr in t.community_rows:
            rows.append([
                agg.config.scenario, t.replicate, cr.community, cr.wealth_ratio,
                cr.member_count, cr.fractions[0], cr.fractions[1], cr.fractions[2],
            ])
    return rows


def leader_rows_by_replicate(agg: RunAggregate) -> list[list]:
    rows = []
    for t in agg.trajectories:
        if t.community_rows is None:
            continue
        for cr in t.community_rows:
            rows.append([
                agg.config.scenario, t.replicate, cr.community,
                cr.leader_wealth_ratio, cr.leader_count,
            ])
    return rows


def class_rows_by_replicate(agg: RunAggregate) -> list[list]:
    bounds = agg.config.market.class_bounds
    rows = []
    for t in agg.trajectories:
        totals = class_wealth_totals(t.final_alpha, t.final_wealth, bounds)
        counts = class_counts(t.final_alpha, bounds)
        for c in range(3):
            rows.append([
                agg.config.scenario, t.replicate, CLASS_NAMES[c],
                float(totals[c]), int(counts[c]),
            ])
    return rows


def _aggregate_final(by_rep: list[list]) -> list[list]:
    """final_by_replicate rows -> final_table rows (scenario, community keyed)."""
    keys = sorted({(r[0], r[2]) for r in by_rep}, key=lambda k: (k[0], k[1]))
    out = []
    for scenario, community in keys:
        sel = [r for r in by_rep if r[0] == scenario and r[2] == community]
        x = _cell([r[3] for r in sel])
        nu = _cell([r[4] for r in sel])
        fs = [_cell([r[5 + i] for r in sel]) for i in range(3)]
        out.append(
            [scenario, community, x["mean"], x["lo"], x["hi"],
             nu["mean"], nu["lo"], nu["hi"]]
            + [v for f in fs for v in (f["mean"], f["lo"], f["hi"])]
        )
    return out


def _aggregate_leaders(by_rep: list[list]) -> list[list]:
    keys = sorted({(r[0], r[2]) for r in by_rep}, key=lambda k: (k[0], k[1]))
    out = []
    for scenario, community in keys:
        sel = [r for r in by_rep if r[0] == scenario and r[2] == community]
        x = _cell([r[3] for r in sel])
        nu = _cell([r[4] for r in sel])
        out.append([scenario, community, x["mean"], x["lo"], x["hi"],
                    nu["mean"], nu["lo"], nu["hi"]])
    return out


def _aggregate_classes(by_rep: list[list]) -> list[list]:
    keys = sorted(
        {(r[0], r[2]) for r in by_rep},
        key=lambda k: (k[0], CLASS_NAMES.index(k[1])),
    )
    out = []
    for scenario, cls in keys:
        sel = [r for r in by_rep if r[0] == scenario and r[2] == cls]
        w = _cell([r[3] for r in sel])
        c = _cell([r[4] for r in sel])
        out.append([scenario, cls, w["mean"], w["lo"], w["hi"],
                    c["mean"], c["lo"], c["hi"]])
    return out


# ---------------------------------------------------------------------------
# graph snapshot


def write_graph_snapshot(agg: RunAggregate, outdir: str) -> bool:
    export = next(
        (t.graph_export for t in agg.trajectories if t.graph_export is not None), None
    )
    if export is None:
        return False
    role = np.where(export.is_leader, "leader", "follower")
    edge_lines = [
        f"{s} {d} {export.community[s]} {export.community[d]} {role[s]}"
        for s, d in export.edges
    ]
    _write_text(
        os.path.join(outdir, "graph_snapshot.edges"), "\n".join(edge_lines) + "\n"
    )
    node_lines = [
        f"{i} {export.community[i]} {role[i]} "
        f"{CLASS_NAMES[export.class_at_trigger[i]]} "
        f"{CLASS_NAMES[export.class_final[i]]} {fmt(export.wealth_final[i])}"
        for i in range(len(export.community))
    ]
    _write_text(
        os.path.join(outdir, "graph_snapshot.nodes"), "\n".join(node_lines) + "\n"
    )
    return True


# ---------------------------------------------------------------------------
# summaries


def _steady_block(agg: RunAggregate, window: int = 100) -> dict | None:
    if agg.steps == 0:
        return None
    g_mean, _, _ = _step_mean_ci(agg.stack("gini"))
    w = min(window, agg.steps)
    tail = g_mean[-w:]
    half = max(len(tail) // 2, 1)
    drift = abs(float(tail[-half:].mean()) - float(tail[:half].mean()))
    scale = max(abs(float(tail.mean())), 1e-12)
    return {
        "window": w,
        "gini": _cell(agg.steady_ginis(w)),
        "volume": _cell(agg.steady_volumes(w)),
        "gini_drift": drift,
        "drift_ok": bool(drift <= 0.005 * scale + 1e-9),
    }


def run_summary(agg: RunAggregate) -> dict:
    cfg = agg.config
    bounds = cfg.market.class_bounds
    final_gini = [gini(t.final_wealth) for t in agg.trajectories]
    data = {
        "kind": "run",
        "version": __version__,
        "scenario": cfg.scenario,
        "tax": cfg.tax.value,
        "seed": cfg.seed,
        "steps": cfg.steps,
        "replicates": len(agg.trajectories),
        "steady_state": _steady_block(agg),
        "final_gini": _cell(final_gini),
        "final_mean_wealth": _cell(
            [float(t.final_wealth.mean()) for t in agg.trajectories]
        ),
        "class_wealth_total": {
            CLASS_NAMES[c]: _cell(
                [
                    float(class_wealth_totals(t.final_alpha, t.final_wealth, bounds)[c])
                    for t in agg.trajectories
                ]
            )
            for c in range(3)
        },
        "alpha_range": [
            min(t.alpha_min for t in agg.trajectories),
            max(t.alpha_max for t in agg.trajectories),
        ],
    }
    diags = [t.graph_diag for t in agg.trajectories if t.graph_diag is not None]
    if diags:
        data["graph"] = {
            "replicates_with_graph": len(diags),
            "edge_count": _cell([d.edge_count for d in diags]),
            "leader_max_in_degree": max(d.leader_max_in_degree for d in diags),
            "follower_links_bidirectional": all(
                d.follower_links_bidirectional for d in diags
            ),
            "cross_edges_before_max": max(d.cross_edges_before for d in diags),
            "cross_edges_after": _cell([d.cross_edges_after for d in diags]),
            "degrees_preserved": all(d.degrees_preserved for d in diags),
        }
    return data


# ---------------------------------------------------------------------------
# bundle writers


def write_run_bundle(agg: RunAggregate, outdir: str) -> None:
    os.makedirs(outdir, exist_ok=True)
    _write_text(
        os.path.join(outdir, "manifest.ini"),
        serialize_config(agg.config, version=__version__),
    )
    write_timeseries(agg, outdir)
    write_timeseries_mean(agg, outdir)

    final_rep = final_rows_by_replicate(agg)
    _write_csv(os.path.join(outdir, "final_by_replicate.csv"), FINAL_BY_REP_HEADER, final_rep)
    _write_csv(os.path.join(outdir, "final_table.csv"), FINAL_TABLE_HEADER,
               _aggregate_final(final_rep))

    lead_rep = leader_rows_by_replicate(agg)
    _write_csv(os.path.join(outdir, "leaders_by_replicate.csv"), LEADERS_BY_REP_HEADER, lead_rep)
    _write_csv(os.path.join(outdir, "leaders_table.csv"), LEADERS_TABLE_HEADER,
               _aggregate_leaders(lead_rep))

    class_rep = class_rows_by_replicate(agg)
    _write_csv(os.path.join(outdir, "class_by_replicate.csv"), CLASS_BY_REP_HEADER, class_rep)
    _write_csv(os.path.join(outdir, "class_table.csv"), CLASS_TABLE_HEADER,
               _aggregate_classes(class_rep))

    write_graph_snapshot(agg, outdir)
    _write_text(os.path.join(outdir, "summary.json"), _summary_text(run_summary(agg)))


def write_twin_bundle(twin: TwinAggregate, outdir: str) -> None:
    os.makedirs(outdir, exist_ok=True)
    _write_text(
        os.path.join(outdir, "manifest.ini"),
        serialize_config(twin.config, version=__version__),
    )
    write_run_bundle(twin.reference, os.path.join(outdir, "reference"))
    write_run_bundle(twin.focal, os.path.join(outdir, "focal"))

    final_rep = final_rows_by_replicate(twin.reference) + final_rows_by_replicate(twin.focal)
    _write_csv(os.path.join(outdir, "final_table.csv"), FINAL_TABLE_HEADER,
               _aggregate_final(final_rep))
    lead_rep = leader_rows_by_replicate(twin.reference) + leader_rows_by_replicate(twin.focal)
    _write_csv(os.path.join(outdir, "leaders_table.csv"), LEADERS_TABLE_HEADER,
               _aggregate_leaders(lead_rep))
    class_rep = class_rows_by_replicate(twin.reference) + class_rows_by_replicate(twin.focal)
    _write_csv(os.path.join(outdir, "class_table.csv"), CLASS_TABLE_HEADER,
               _aggregate_classes(class_rep))

    ref_vol = twin.reference.steady_volumes()
    foc_vol = twin.focal.steady_volumes()
    ref_gini = twin.reference.steady_ginis()
    foc_gini = twin.focal.steady_ginis()
    data = {
        "kind": "twin",
        "version": __version__,
        "tax": twin.config.tax.value,
        "seed": twin.config.seed,
        "steps": twin.config.steps,
        "replicates": len(twin.twins),
        "trigger_step": twin.config.herding.trigger_step,
        "herding_w": twin.config.herding.w,
        "identical_before_trigger": all(
            t.identical_before_trigger for t in twin.twins
        ),
        "steady_volume_reference": _cell(ref_vol),
        "steady_volume_focal": _cell(foc_vol),
        "steady_volume_paired_diff": _cell(foc_vol - ref_vol),
        "steady_gini_reference": _cell(ref_gini),
        "steady_gini_focal": _cell(foc_gini),
        "steady_gini_abs_diff": _cell(np.abs(foc_gini - ref_gini)),
    }
    _write_text(os.path.join(outdir, "summary.json"), _summary_text(data))


def write_sweep_bundle(rows: list[SweepRow], config: ScenarioConfig, outdir: str) -> None:
    os.makedirs(outdir, exist_ok=True)
    _write_text(
        os.path.join(outdir, "manifest.ini"),
        serialize_config(config, version=__version__),
    )
    table = []
    for r in rows:
        cells = []
        for c in range(3):
            cells += [r.leader_count_mean[c], r.leader_count_lo[c], r.leader_count_hi[c]]
        table.append([r.trigger_step] + cells)
    _write_csv(os.path.join(outdir, "sweep.csv"), SWEEP_HEADER, table)
    data = {
        "kind": "sweep",
        "version": __version__,
        "tax": config.tax.value,
        "seed": config.seed,
        "replicates": config.replicates,
        "trigger_steps": [r.trigger_step for r in rows],
    }
    _write_text(os.path.join(outdir, "summary.json"), _summary_text(data))


def write_robustness_bundle(result: RobustnessResult, outdir: str) -> None:
    os.makedirs(outdir, exist_ok=True)
    _write_text(
        os.path.join(outdir, "manifest.ini"),
        serialize_config(result.rewired.config, version=__version__),
    )
    write_run_bundle(result.baseline, os.path.join(outdir, "baseline"))
    write_run_bundle(result.rewired, os.path.join(outdir, "rewired"))

    rows = []
    overlaps = []
    base_rep = final_rows_by_replicate(result.baseline)
    rew_rep = final_rows_by_replicate(result.rewired)
    for community in range(1, N_COMMUNITIES + 1):
        b = _cell([r[3] for r in base_rep if r[2] == community])
        w = _cell([r[3] for r in rew_rep if r[2] == community])
        overlap = (b["lo"] <= w["hi"]) and (w["lo"] <= b["hi"])
        overlaps.append(overlap)
        rows.append([
            community, b["mean"], b["lo"], b["hi"],
            w["mean"], w["lo"], w["hi"], str(overlap).lower(),
        ])
    _write_csv(os.path.join(outdir, "robustness.csv"), ROBUSTNESS_HEADER, rows)
    data = {
        "kind": "robustness",
        "version": __version__,
        "tax": result.rewired.config.tax.value,
        "seed": result.rewired.config.seed,
        "replicates": len(result.rewired.trajectories),
        "rewire_fraction": result.rewired.config.rewire_fraction,
        "all_cis_overlap": all(overlaps),
    }
    _write_text(os.path.join(outdir, "summary.json"), _summary_text(data))


# ---------------------------------------------------------------------------
# report: re-aggregate an existing bundle from its by-replicate files


def _read_csv(path: str) -> tuple[list[str], list[list[str]]]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().split("\n") if ln]
    return lines[0].split(","), [ln.split(",") for ln in lines[1:]]


def _typed_final_rows(path: str) -> list[list]:
    _, raw = _read_csv(path)
    return [
        [r[0], int(r[1]), int(r[2]), float(r[3]), float(r[4]),
         float(r[5]), float(r[6]), float(r[7])]
        for r in raw
    ]


def _typed_leader_rows(path: str) -> list[list]:
    _, raw = _read_csv(path)
    return [[r[0], int(r[1]), int(r[2]), float(r[3]), float(r[4])] for r in raw]


def _typed_class_rows(path: str) -> list[list]:
    _, raw = _read_csv(path)
    return [[r[0], int(r[1]), r[2], float(r[3]), float(r[4])] for r in raw]


def report_bundle(outdir: str) -> list[str]:
    """Rebuild a bundle's aggregate tables from its per-replicate files.

    Returns the rewritten paths. Works on run bundles and recurses into
    twin/robustness sub-bundles, rebuilding the combined tables as well.
    """
    summary_path = os.path.join(outdir, "summary.json")
    with open(summary_path, "r", encoding="utf-8") as fh:
        kind = json.load(fh).get("kind")

    written: list[str] = []
    if kind == "run":
        final_rep = _typed_final_rows(os.path.join(outdir, "final_by_replicate.csv"))
        path = os.path.join(outdir, "final_table.csv")
        _write_csv(path, FINAL_TABLE_HEADER, _aggregate_final(final_rep))
        written.append(path)
        lead_rep = _typed_leader_rows(os.path.join(outdir, "leaders_by_replicate.csv"))
        path = os.path.join(outdir, "leaders_table.csv")
        _write_csv(path, LEADERS_TABLE_HEADER, _aggregate_leaders(lead_rep))
        written.append(path)
        class_rep = _typed_class_rows(os.path.join(outdir, "class_by_replicate.csv"))
        path = os.path.join(outdir, "class_table.csv")
        _write_csv(path, CLASS_TABLE_HEADER, _aggregate_classes(class_rep))
        written.append(path)
    elif kind == "twin":
        written += report_bundle(os.path.join(outdir, "reference"))
        written += report_bundle(os.path.join(outdir, "focal"))
        final_rep = []
        lead_rep = []
        class_rep = []
        for sub in ("reference", "focal"):
            final_rep += _typed_final_rows(
                os.path.join(outdir, sub, "final_by_replicate.csv")
            )
            lead_rep += _typed_leader_rows(
                os.path.join(outdir, sub, "leaders_by_replicate.csv")
            )
            class_rep += _typed_class_rows(
                os.path.join(outdir, sub, "class_by_replicate.csv")
            )
        for name, header, rows in (
            ("final_table.csv", FINAL_TABLE_HEADER, _aggregate_final(final_rep)),
            ("leaders_table.csv", LEADERS_TABLE_HEADER, _aggregate_leaders(lead_rep)),
            ("class_table.csv", CLASS_TABLE_HEADER, _aggregate_classes(class_rep)),
        ):
            path = os.path.join(outdir, name)
            _write_csv(path, header, rows)
            written.append(path)
    elif kind == "robustness":
        written += report_bundle(os.path.join(outdir, "baseline"))
        written += report_bundle(os.path.join(outdir, "rewired"))
    elif kind == "sweep":
        pass  # sweep.csv is already per-aggregate; nothing to rebuild
    else:
        raise ValueError(f"unrecognised bundle kind: {kind!r}")
    return written
