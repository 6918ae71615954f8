"""Bundle discovery and schema-checked access to bundle files.

A bundle is a directory with a summary.json whose "kind" says what it
holds: "run" (one scenario), "twin" (nested reference/ and focal/ run
bundles), "robustness" (nested baseline/ and rewired/), or "sweep".
Discovery walks the nesting so a caller can hand over top-level
directories and let figures pick the arms they need.

All readers validate the columns they are about to use and raise
SchemaError naming the file and the missing column, so a bundle written
by an incompatible tool fails loudly instead of mis-plotting.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np


class PlotsError(Exception):
    """Base class for everything this package raises on bad input."""


class SchemaError(PlotsError):
    """A bundle file is absent, empty, or lacks an expected column."""


class MissingInputError(PlotsError):
    """No discovered bundle provides what a figure needs."""


BUNDLE_KINDS = ("run", "twin", "sweep", "robustness")
SUB_BUNDLES = {"twin": ("reference", "focal"), "robustness": ("baseline", "rewired")}


@dataclass(frozen=True)
class Bundle:
    """One bundle directory plus the summary fields selection runs on."""

    path: str
    kind: str
    scenario: str | None
    tax: str | None

    def file(self, name: str) -> str:
        return os.path.join(self.path, name)


def bundle_at(path: str) -> Bundle:
    summary_path = os.path.join(path, "summary.json")
    if not os.path.isfile(summary_path):
        raise SchemaError(f"{path}: not a bundle (no summary.json)")
    with open(summary_path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{summary_path}: malformed JSON ({exc})") from exc
    kind = data.get("kind")
    if kind not in BUNDLE_KINDS:
        raise SchemaError(f"{summary_path}: unknown bundle kind {kind!r}")
    return Bundle(path=path, kind=kind, scenario=data.get("scenario"), tax=data.get("tax"))


def discover(dirs: list[str]) -> list[Bundle]:
    """All bundles in the given directories, nesting included.

    Order is deterministic: directories as given, each parent before its
    sub-bundles (reference before focal, baseline before rewired), with
    repeated directories collapsed onto their first appearance.
    """
    bundles: list[Bundle] = []
    seen: set[str] = set()

    def walk(path: str) -> None:
        key = os.path.abspath(path)
        if key in seen:
            return
        seen.add(key)
        bundle = bundle_at(path)
        bundles.append(bundle)
        for sub in SUB_BUNDLES.get(bundle.kind, ()):
            child = os.path.join(path, sub)
            if os.path.isdir(child):
                walk(child)

    for d in dirs:
        walk(d)
    return bundles


# ---------------------------------------------------------------------------
# CSV access


def _read_table(path: str) -> tuple[list[str], list[list[str]]]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except FileNotFoundError as exc:
        raise SchemaError(f"{path}: missing file") from exc
    lines = [ln for ln in text.split("\n") if ln != ""]
    if not lines:
        raise SchemaError(f"{path}: empty file")
    header = lines[0].split(",")
    return header, [ln.split(",") for ln in lines[1:]]


def _column_index(path: str, header: list[str], names: tuple[str, ...]) -> dict[str, int]:
    index = {}
    for name in names:
        if name not in header:
            raise SchemaError(f"{path}: missing column {name}")
        index[name] = header.index(name)
    return index


def _float_cell(cell: str) -> float:
    # the writer serializes NaN as an empty cell
    return float(cell) if cell != "" else math.nan


def read_timeseries_mean(bundle: Bundle, names: tuple[str, ...]) -> dict[str, np.ndarray]:
    """The requested columns of timeseries_mean.csv as float arrays."""
    path = bundle.file("timeseries_mean.csv")
    header, rows = _read_table(path)
    index = _column_index(path, header, names)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return {
        name: np.array([_float_cell(r[index[name]]) for r in rows]) for name in names
    }


FINAL_COLUMNS = ("scenario", "community", "x_ratio", "x_ratio_lo", "x_ratio_hi", "nu")


def read_final_table(bundle: Bundle, scenario: str) -> list[dict]:
    """final_table.csv rows for one scenario, sorted by community."""
    path = bundle.file("final_table.csv")
    header, rows = _read_table(path)
    index = _column_index(path, header, FINAL_COLUMNS)
    out = []
    for r in rows:
        if r[index["scenario"]] != scenario:
            continue
        out.append({
            "community": int(r[index["community"]]),
            "x_ratio": _float_cell(r[index["x_ratio"]]),
            "x_ratio_lo": _float_cell(r[index["x_ratio_lo"]]),
            "x_ratio_hi": _float_cell(r[index["x_ratio_hi"]]),
            "nu": _float_cell(r[index["nu"]]),
        })
    return sorted(out, key=lambda row: row["community"])


def has_final_rows(bundle: Bundle, scenario: str) -> bool:
    return bool(read_final_table(bundle, scenario))


CLASS_COLUMNS = (
    "scenario", "agent_class", "wealth_total", "wealth_total_lo",
    "wealth_total_hi", "count",
)


def read_class_table(bundle: Bundle, scenario: str) -> dict[str, dict]:
    """class_table.csv rows for one scenario, keyed by class name."""
    path = bundle.file("class_table.csv")
    header, rows = _read_table(path)
    index = _column_index(path, header, CLASS_COLUMNS)
    out = {}
    for r in rows:
        if r[index["scenario"]] != scenario:
            continue
        out[r[index["agent_class"]]] = {
            "wealth_total": _float_cell(r[index["wealth_total"]]),
            "wealth_total_lo": _float_cell(r[index["wealth_total_lo"]]),
            "wealth_total_hi": _float_cell(r[index["wealth_total_hi"]]),
            "count": _float_cell(r[index["count"]]),
        }
    if not out:
        raise SchemaError(f"{path}: no rows for scenario {scenario}")
    return out


SWEEP_COLUMNS = (
    "k_t",
    "prudent_mean", "prudent_lo", "prudent_hi",
    "ordinary_mean", "ordinary_lo", "ordinary_hi",
    "audacious_mean", "audacious_lo", "audacious_hi",
)


def read_sweep(bundle: Bundle) -> dict[str, np.ndarray]:
    path = bundle.file("sweep.csv")
    header, rows = _read_table(path)
    index = _column_index(path, header, SWEEP_COLUMNS)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return {
        name: np.array([_float_cell(r[index[name]]) for r in rows])
        for name in SWEEP_COLUMNS
    }


@dataclass(frozen=True)
class GraphNode:
    node_id: int
    community: int
    role: str
    class_at_trigger: str
    class_final: str
    wealth: float


def read_graph_snapshot(bundle: Bundle) -> tuple[list[GraphNode], np.ndarray]:
    """Node table and (edges, 2) endpoint array of a focal bundle's graph."""
    nodes_path = bundle.file("graph_snapshot.nodes")
    edges_path = bundle.file("graph_snapshot.edges")
    nodes = []
    for lineno, line in enumerate(_read_lines(nodes_path), start=1):
        parts = line.split()
        if len(parts) != 6:
            raise SchemaError(f"{nodes_path}: malformed line {lineno}")
        nodes.append(GraphNode(
            node_id=int(parts[0]), community=int(parts[1]), role=parts[2],
            class_at_trigger=parts[3], class_final=parts[4], wealth=float(parts[5]),
        ))
    if not nodes:
        raise SchemaError(f"{nodes_path}: no nodes")
    endpoints = []
    for lineno, line in enumerate(_read_lines(edges_path), start=1):
        parts = line.split()
        if len(parts) != 5:
            raise SchemaError(f"{edges_path}: malformed line {lineno}")
        endpoints.append((int(parts[0]), int(parts[1])))
    return nodes, np.array(endpoints, dtype=np.int64).reshape(-1, 2)


def _read_lines(path: str) -> list[str]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return [ln for ln in fh.read().split("\n") if ln != ""]
    except FileNotFoundError as exc:
        raise SchemaError(f"{path}: missing file") from exc
