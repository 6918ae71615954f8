import json
import os
from dataclasses import replace

import numpy as np
import pytest
from conftest import make_config

from herdmarket.config import load_config_file
from herdmarket.metrics import moving_average
from herdmarket.output import (
    CLASS_BY_REP_HEADER,
    CLASS_TABLE_HEADER,
    FINAL_BY_REP_HEADER,
    FINAL_TABLE_HEADER,
    LEADERS_BY_REP_HEADER,
    LEADERS_TABLE_HEADER,
    ROBUSTNESS_HEADER,
    SWEEP_HEADER,
    TIMESERIES_BASE_HEADER,
    TIMESERIES_COMM_SUFFIX,
    fmt,
    report_bundle,
    write_robustness_bundle,
    write_run_bundle,
    write_sweep_bundle,
    write_twin_bundle,
)
from herdmarket.runner import (
    monte_carlo,
    robustness_rewire,
    sweep_trigger_step,
    twin_monte_carlo,
)

RUN_FILES = (
    "manifest.ini", "timeseries.csv", "timeseries_mean.csv",
    "final_table.csv", "final_by_replicate.csv",
    "leaders_table.csv", "leaders_by_replicate.csv",
    "class_table.csv", "class_by_replicate.csv", "summary.json",
)


def tiny(**extra):
    base = dict(
        market__n=60, run__steps=12, run__replicates=2, run__seed=11,
        herding__k_t=4, network__leaders=6,
    )
    base.update(extra)
    return make_config(**base)


@pytest.fixture(scope="module")
def ref_agg():
    return monte_carlo(tiny())


@pytest.fixture(scope="module")
def focal_agg():
    return monte_carlo(tiny(run__scenario="focal"), capture_graph_replicate=0)


@pytest.fixture(scope="module")
def twin_agg():
    return twin_monte_carlo(tiny(), capture_graph_replicate=0)


def read(path):
    with open(path, "rb") as fh:
        return fh.read()


def lines_of(path):
    return read(path).decode("utf-8").rstrip("\n").split("\n")


def test_fmt_cells():
    assert fmt(3) == "3"
    assert fmt(np.int64(-4)) == "-4"
    assert fmt(float("nan")) == ""
    assert fmt(0.1) == "0.10000000000000001"
    rng = np.random.default_rng(0)
    for x in rng.uniform(-1e6, 1e6, 50):
        assert float(fmt(x)) == x


def test_run_bundle_layout_and_headers(ref_agg, tmp_path):
    out = str(tmp_path / "ref")
    write_run_bundle(ref_agg, out)
    assert sorted(os.listdir(out)) == sorted(RUN_FILES)

    ts = lines_of(os.path.join(out, "timeseries.csv"))
    assert ts[0] == TIMESERIES_BASE_HEADER  # no community columns pre-graph
    assert len(ts) == 1 + 2 * 12

    assert lines_of(os.path.join(out, "final_table.csv"))[0] == FINAL_TABLE_HEADER
    assert lines_of(os.path.join(out, "final_by_replicate.csv")) == [FINAL_BY_REP_HEADER]
    assert lines_of(os.path.join(out, "leaders_table.csv"))[0] == LEADERS_TABLE_HEADER
    assert lines_of(os.path.join(out, "leaders_by_replicate.csv")) == [LEADERS_BY_REP_HEADER]
    cls = lines_of(os.path.join(out, "class_by_replicate.csv"))
    assert cls[0] == CLASS_BY_REP_HEADER
    assert len(cls) == 1 + 2 * 3
    assert lines_of(os.path.join(out, "class_table.csv"))[0] == CLASS_TABLE_HEADER


def test_timeseries_mean_columns(ref_agg, tmp_path):
    out = str(tmp_path / "ref")
    write_run_bundle(ref_agg, out)
    rows = lines_of(os.path.join(out, "timeseries_mean.csv"))
    header = rows[0].split(",")
    assert header[:8] == [
        "k", "gini_mean", "gini_lo", "gini_hi",
        "volume_mean", "volume_lo", "volume_hi", "volume_ma",
    ]
    data = np.array([r.split(",") for r in rows[1:]], dtype=object)
    assert data.shape[0] == 12
    ks = data[:, 0].astype(int)
    assert (ks == np.arange(1, 13)).all()
    v_mean = data[:, 4].astype(float)
    v_ma = data[:, 7].astype(float)
    np.testing.assert_allclose(
        v_ma, moving_average(v_mean, ref_agg.config.volume_ma_window), rtol=1e-15
    )
    lo, hi = data[:, 2].astype(float), data[:, 3].astype(float)
    g = data[:, 1].astype(float)
    assert (lo <= g).all() and (g <= hi).all()


def test_focal_bundle_graph_and_community_columns(focal_agg, tmp_path):
    out = str(tmp_path / "focal")
    write_run_bundle(focal_agg, out)
    assert os.path.exists(os.path.join(out, "graph_snapshot.edges"))
    assert os.path.exists(os.path.join(out, "graph_snapshot.nodes"))

    ts = lines_of(os.path.join(out, "timeseries.csv"))
    assert ts[0] == TIMESERIES_BASE_HEADER + TIMESERIES_COMM_SUFFIX
    kt = 4
    for row in ts[1:]:
        cells = row.split(",")
        k = int(cells[1])
        comm = cells[8:11]
        if k < kt:
            assert comm == ["", "", ""]
        else:
            assert all(c != "" for c in comm)

    by_rep = lines_of(os.path.join(out, "final_by_replicate.csv"))
    assert len(by_rep) == 1 + 2 * 3  # three community rows per replicate
    assert {r.split(",")[0] for r in by_rep[1:]} == {"focal"}


def test_graph_snapshot_fields(focal_agg, tmp_path):
    out = str(tmp_path / "focal")
    write_run_bundle(focal_agg, out)
    n = focal_agg.config.market.n
    nodes = lines_of(os.path.join(out, "graph_snapshot.nodes"))
    assert len(nodes) == n
    roles = set()
    for i, line in enumerate(nodes):
        ident, comm, role, cls_trig, cls_end, wealth = line.split(" ")
        assert int(ident) == i
        assert int(comm) in (1, 2, 3)
        roles.add(role)
        assert cls_trig in ("prudent", "ordinary", "audacious")
        assert cls_end in ("prudent", "ordinary", "audacious")
        float(wealth)
    assert roles == {"leader", "follower"}

    node_role = [line.split(" ")[2] for line in nodes]
    for line in lines_of(os.path.join(out, "graph_snapshot.edges")):
        src, dst, comm_s, comm_d, role_s = line.split(" ")
        assert 0 <= int(src) < n and 0 <= int(dst) < n
        assert role_s == node_role[int(src)]
        assert node_role[int(dst)] == "follower"  # leaders never listen


def test_summary_json_round_trips(ref_agg, tmp_path):
    out = str(tmp_path / "ref")
    write_run_bundle(ref_agg, out)
    raw = read(os.path.join(out, "summary.json")).decode("utf-8")
    data = json.loads(raw)
    assert json.dumps(data, indent=2, sort_keys=True) + "\n" == raw
    assert data["kind"] == "run"
    assert data["scenario"] == "reference"
    assert data["tax"] == "tobin"
    assert set(data["final_gini"]) == {"mean", "lo", "hi"}
    assert set(data["class_wealth_total"]) == {"prudent", "ordinary", "audacious"}
    assert data["steady_state"]["window"] == 12
    assert len(data["alpha_range"]) == 2
    assert "graph" not in data


def test_focal_summary_reports_graph_diagnostics(focal_agg, tmp_path):
    out = str(tmp_path / "focal")
    write_run_bundle(focal_agg, out)
    data = json.loads(read(os.path.join(out, "summary.json")))
    graph = data["graph"]
    assert graph["replicates_with_graph"] == 2
    assert graph["leader_max_in_degree"] == 0
    assert graph["follower_links_bidirectional"] is True
    assert graph["degrees_preserved"] is True


def test_double_write_is_byte_identical(ref_agg, tmp_path):
    a, b = str(tmp_path / "a"), str(tmp_path / "b")
    write_run_bundle(ref_agg, a)
    write_run_bundle(ref_agg, b)
    for name in RUN_FILES:
        assert read(os.path.join(a, name)) == read(os.path.join(b, name)), name


def test_manifest_rerun_reproduces_bundle(focal_agg, tmp_path):
    first = str(tmp_path / "first")
    write_run_bundle(focal_agg, first)
    cfg = load_config_file(os.path.join(first, "manifest.ini"))
    assert cfg == focal_agg.config
    again = monte_carlo(cfg, capture_graph_replicate=0)
    second = str(tmp_path / "second")
    write_run_bundle(again, second)
    for name in sorted(os.listdir(first)):
        assert read(os.path.join(first, name)) == read(os.path.join(second, name)), name


def test_report_rebuilds_aggregate_tables(focal_agg, tmp_path):
    out = str(tmp_path / "focal")
    write_run_bundle(focal_agg, out)
    tables = ("final_table.csv", "leaders_table.csv", "class_table.csv")
    originals = {t: read(os.path.join(out, t)) for t in tables}
    for t in tables:
        with open(os.path.join(out, t), "w") as fh:
            fh.write("junk\n")
    written = report_bundle(out)
    assert sorted(os.path.basename(p) for p in written) == sorted(tables)
    for t in tables:
        assert read(os.path.join(out, t)) == originals[t], t


def test_twin_bundle_structure(twin_agg, tmp_path):
    out = str(tmp_path / "twin")
    write_twin_bundle(twin_agg, out)
    for sub in ("reference", "focal"):
        for name in RUN_FILES:
            assert os.path.exists(os.path.join(out, sub, name)), (sub, name)
    combined = lines_of(os.path.join(out, "final_table.csv"))
    assert combined[0] == FINAL_TABLE_HEADER
    scenarios = {r.split(",")[0] for r in combined[1:]}
    assert scenarios == {"focal", "reference"}

    data = json.loads(read(os.path.join(out, "summary.json")))
    assert data["kind"] == "twin"
    assert data["identical_before_trigger"] is True
    assert data["trigger_step"] == 4
    assert set(data["steady_volume_paired_diff"]) == {"mean", "lo", "hi"}

    # twin reference tracks the communities its focal twin forms
    ref_ts = lines_of(os.path.join(out, "reference", "timeseries.csv"))
    assert ref_ts[0] == TIMESERIES_BASE_HEADER + TIMESERIES_COMM_SUFFIX


def test_twin_report_recurses(twin_agg, tmp_path):
    out = str(tmp_path / "twin")
    write_twin_bundle(twin_agg, out)
    targets = [
        os.path.join(out, "final_table.csv"),
        os.path.join(out, "reference", "final_table.csv"),
        os.path.join(out, "focal", "class_table.csv"),
    ]
    originals = {p: read(p) for p in targets}
    for p in targets:
        with open(p, "w") as fh:
            fh.write("junk\n")
    written = report_bundle(out)
    assert len(written) == 9  # three tables in each of reference/, focal/, top
    for p in targets:
        assert read(p) == originals[p], p


def test_sweep_bundle(tmp_path):
    cfg = tiny()
    rows = sweep_trigger_step(cfg, [2, 4])
    out = str(tmp_path / "sweep")
    write_sweep_bundle(rows, cfg, out)
    table = lines_of(os.path.join(out, "sweep.csv"))
    assert table[0] == SWEEP_HEADER
    assert [int(r.split(",")[0]) for r in table[1:]] == [2, 4]
    data = json.loads(read(os.path.join(out, "summary.json")))
    assert data["kind"] == "sweep"
    assert data["trigger_steps"] == [2, 4]
    assert report_bundle(out) == []
    assert lines_of(os.path.join(out, "sweep.csv")) == table


def test_robustness_bundle(tmp_path):
    result = robustness_rewire(tiny(), 0.05)
    out = str(tmp_path / "robust")
    write_robustness_bundle(result, out)
    table = lines_of(os.path.join(out, "robustness.csv"))
    assert table[0] == ROBUSTNESS_HEADER
    assert [int(r.split(",")[0]) for r in table[1:]] == [1, 2, 3]
    for r in table[1:]:
        assert r.split(",")[-1] in ("true", "false")
    data = json.loads(read(os.path.join(out, "summary.json")))
    assert data["kind"] == "robustness"
    assert data["rewire_fraction"] == 0.05
    assert isinstance(data["all_cis_overlap"], bool)
    assert os.path.isdir(os.path.join(out, "baseline"))
    assert os.path.isdir(os.path.join(out, "rewired"))
    assert len(report_bundle(out)) == 6


def test_report_rejects_unknown_kind(tmp_path):
    out = str(tmp_path / "odd")
    os.makedirs(out)
    with open(os.path.join(out, "summary.json"), "w") as fh:
        json.dump({"kind": "mystery"}, fh)
    with pytest.raises(ValueError, match="mystery"):
        report_bundle(out)


def test_single_replicate_collapses_intervals(tmp_path):
    agg = monte_carlo(tiny(run__replicates=1))
    out = str(tmp_path / "one")
    write_run_bundle(agg, out)
    rows = lines_of(os.path.join(out, "class_table.csv"))[1:]
    for row in rows:
        cells = row.split(",")
        assert cells[2] == cells[3] == cells[4]  # mean == lo == hi
