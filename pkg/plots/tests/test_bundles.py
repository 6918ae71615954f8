import json
import shutil

import pytest

from herdmarket_plots.bundles import (
    Bundle,
    SchemaError,
    bundle_at,
    discover,
    has_final_rows,
    read_class_table,
    read_final_table,
    read_graph_snapshot,
    read_sweep,
    read_timeseries_mean,
)


def all_dirs(tiny_bundles):
    return [tiny_bundles[k] for k in ("ref-tt", "ref-ft", "twin-tt", "sweep-tt", "sweep-ft")]


def test_discover_finds_nested_arms(tiny_bundles):
    found = discover(all_dirs(tiny_bundles))
    kinds = [b.kind for b in found]
    assert kinds == ["run", "run", "twin", "run", "run", "sweep", "sweep"]
    twin_children = [b for b in found if b.path.startswith(tiny_bundles["twin-tt"])]
    assert [b.kind for b in twin_children] == ["twin", "run", "run"]
    assert [b.scenario for b in twin_children] == [None, "reference", "focal"]


def test_discover_order_and_dedup(tiny_bundles):
    once = discover([tiny_bundles["ref-tt"], tiny_bundles["ref-ft"]])
    twice = discover([tiny_bundles["ref-tt"], tiny_bundles["ref-ft"],
                      tiny_bundles["ref-tt"]])
    assert [b.path for b in once] == [b.path for b in twice]
    assert once[0].tax == "tobin"
    assert once[1].tax == "flat"


def test_bundle_at_reads_summary(tiny_bundles):
    b = bundle_at(tiny_bundles["ref-tt"])
    assert b == Bundle(path=tiny_bundles["ref-tt"], kind="run",
                       scenario="reference", tax="tobin")


def test_not_a_bundle(tmp_path):
    with pytest.raises(SchemaError, match="no summary.json"):
        bundle_at(str(tmp_path))


def test_malformed_summary(tmp_path):
    (tmp_path / "summary.json").write_text("{not json")
    with pytest.raises(SchemaError, match="malformed JSON"):
        bundle_at(str(tmp_path))


def test_unknown_kind(tmp_path):
    (tmp_path / "summary.json").write_text(json.dumps({"kind": "mystery"}))
    with pytest.raises(SchemaError, match="unknown bundle kind 'mystery'"):
        bundle_at(str(tmp_path))


def test_timeseries_mean_columns(tiny_bundles):
    b = bundle_at(tiny_bundles["ref-tt"])
    ts = read_timeseries_mean(b, ("k", "gini_mean", "volume_ma"))
    assert len(ts["k"]) == 12
    assert ts["k"][0] == 1.0
    assert (ts["gini_mean"] >= 0.0).all()


def test_missing_column_names_it(tiny_bundles, tmp_path):
    src = tiny_bundles["ref-tt"]
    dst = tmp_path / "doctored"
    shutil.copytree(src, dst)
    path = dst / "timeseries_mean.csv"
    lines = path.read_text().splitlines()
    lines[0] = lines[0].replace("gini_mean", "gini_avg")
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(SchemaError, match="missing column gini_mean"):
        read_timeseries_mean(bundle_at(str(dst)), ("k", "gini_mean"))


def test_empty_timeseries_is_schema_error(tiny_bundles, tmp_path):
    src = tiny_bundles["ref-tt"]
    dst = tmp_path / "doctored"
    shutil.copytree(src, dst)
    path = dst / "timeseries_mean.csv"
    header = path.read_text().splitlines()[0]
    path.write_text(header + "\n")
    with pytest.raises(SchemaError, match="no data rows"):
        read_timeseries_mean(bundle_at(str(dst)), ("k", "gini_mean"))


def test_missing_file_is_schema_error(tiny_bundles, tmp_path):
    dst = tmp_path / "doctored"
    shutil.copytree(tiny_bundles["ref-tt"], dst)
    (dst / "class_table.csv").unlink()
    with pytest.raises(SchemaError, match="class_table.csv: missing file"):
        read_class_table(bundle_at(str(dst)), "reference")


def test_final_table_rows_only_where_tracked(tiny_bundles):
    plain = bundle_at(tiny_bundles["ref-tt"])
    assert read_final_table(plain, "reference") == []
    assert not has_final_rows(plain, "reference")

    twin_ref = bundle_at(tiny_bundles["twin-tt"] + "/reference")
    rows = read_final_table(twin_ref, "reference")
    assert [r["community"] for r in rows] == sorted(r["community"] for r in rows)
    assert has_final_rows(twin_ref, "reference")
    for r in rows:
        assert r["x_ratio_lo"] <= r["x_ratio"] <= r["x_ratio_hi"]


def test_class_table_rows(tiny_bundles):
    b = bundle_at(tiny_bundles["ref-ft"])
    table = read_class_table(b, "reference")
    assert set(table) == {"prudent", "ordinary", "audacious"}
    counts = sum(row["count"] for row in table.values())
    assert counts == pytest.approx(60.0)


def test_sweep_table(tiny_bundles):
    b = bundle_at(tiny_bundles["sweep-tt"])
    table = read_sweep(b)
    assert list(table["k_t"]) == [2.0, 5.0]
    total = table["prudent_mean"] + table["ordinary_mean"] + table["audacious_mean"]
    assert total == pytest.approx([6.0, 6.0])


def test_graph_snapshot_reader(tiny_bundles):
    focal = bundle_at(tiny_bundles["twin-tt"] + "/focal")
    nodes, edges = read_graph_snapshot(focal)
    assert len(nodes) == 60
    assert sum(n.role == "leader" for n in nodes) == 6
    assert edges.shape[1] == 2
    ids = {n.node_id for n in nodes}
    assert all(int(s) in ids and int(d) in ids for s, d in edges)


def test_graph_snapshot_missing(tiny_bundles):
    plain = bundle_at(tiny_bundles["ref-tt"])
    with pytest.raises(SchemaError, match="graph_snapshot.nodes: missing file"):
        read_graph_snapshot(plain)
