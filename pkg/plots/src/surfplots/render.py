"""Figure rendering from simulator output files.

Three figure kinds are supported, all strict consumers of the simulator's
file formats (nothing is recomputed here):

* ``v-trace``  -- overlay of single-run value traces, CSV columns (n, V_n)
* ``v-mean``   -- overlay of cross-run means, CSV columns (n, mean_V_n)
* ``subgraph`` -- a reach subgraph from the JSON export: vertices on a rank
  line, delay edges as arcs, internal vertices and leaves in distinct colors

Rendering is pure: a given spec and input files produce identical pixels
(and identical output bytes, since version/date metadata is stripped).
"""

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
from matplotlib.path import Path as MplPath
from matplotlib.patches import PathPatch

FIGURE_KINDS = ("v-trace", "v-mean", "subgraph")
_SERIES_COLUMN = {"v-trace": "V_n", "v-mean": "mean_V_n"}
_INTERNAL_COLOR = "#1f77b4"  # positive-index vertices
_LEAF_COLOR = "#d62728"  # non-positive-index vertices (topics)


class SchemaError(Exception):
    """Input file does not match the expected simulator schema."""


@dataclass(frozen=True)
class PlotSpec:
    """One figure request: input files, kind, labels, output path."""

    kind: str
    inputs: Tuple[str, ...]
    labels: Tuple[str, ...] = ()
    out_path: str = "figure.png"
    image_format: str = ""  # inferred from out_path when empty

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise SchemaError(f"kind: must be one of {FIGURE_KINDS}, got {self.kind!r}")
        if not self.inputs:
            raise SchemaError("inputs: at least one input file is required")
        if self.kind == "subgraph":
            if len(self.inputs) != 1:
                raise SchemaError("inputs: subgraph figures take exactly one JSON file")
        elif self.labels and len(self.labels) != len(self.inputs):
            raise SchemaError(
                f"labels: got {len(self.labels)} labels for {len(self.inputs)} inputs"
            )

    def resolved_format(self) -> str:
        if self.image_format:
            return self.image_format
        suffix = Path(self.out_path).suffix.lstrip(".").lower()
        return suffix or "png"

    def series_labels(self) -> Tuple[str, ...]:
        if self.labels:
            return self.labels
        return tuple(Path(p).stem for p in self.inputs)


def load_series(path: str, column: str) -> Tuple[List[float], List[float]]:
    """(n, value) columns of one series CSV; hard errors name the problem."""
    p = Path(path)
    if not p.is_file():
        raise SchemaError(f"input file not found: {path}")
    with open(p, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        for needed in ("n", column):
            if needed not in fields:
                raise SchemaError(
                    f"column '{needed}' not found in {path} (columns: {fields})"
                )
        xs: List[float] = []
        ys: List[float] = []
        for row in reader:
            try:
                xs.append(float(row["n"]))
                ys.append(float(row[column]))
            except (TypeError, ValueError):
                raise SchemaError(
                    f"column '{column}' in {path} has a non-numeric entry "
                    f"at data row {len(xs) + 1}"
                ) from None
    if not xs:
        raise SchemaError(f"{path} has a header but no data rows")
    return xs, ys


def load_subgraph(path: str) -> Tuple[List[dict], List[dict]]:
    """(vertices, edges) of a reach-subgraph JSON export."""
    p = Path(path)
    if not p.is_file():
        raise SchemaError(f"input file not found: {path}")
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path} is not valid JSON: {e}") from None
    for field in ("vertices", "edges"):
        if field not in doc:
            raise SchemaError(f"field '{field}' not found in {path}")
    vertices = doc["vertices"]
    if not vertices:
        raise SchemaError(f"{path} contains no vertices")
    for v in vertices:
        if "id" not in v or "role" not in v:
            raise SchemaError(f"vertex entries in {path} need 'id' and 'role'")
    for e in doc["edges"]:
        for field in ("source", "target"):
            if field not in e:
                raise SchemaError(f"edge entries in {path} need '{field}'")
    return vertices, doc["edges"]


def render_figure(spec: PlotSpec):
    """Build the matplotlib figure for a spec (no file output)."""
    if spec.kind in _SERIES_COLUMN:
        return _render_overlay(spec, _SERIES_COLUMN[spec.kind])
    return _render_subgraph(spec)


def _render_overlay(spec: PlotSpec, column: str):
    fig, ax = plt.subplots(figsize=(7.0, 4.4))
    for path, label in zip(spec.inputs, spec.series_labels()):
        xs, ys = load_series(path, column)
        ax.plot(xs, ys, lw=1.2, label=label)
    ax.set_xscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel(column.replace("_", " "))
    ax.legend(title="series")
    ax.grid(True, which="both", alpha=0.25)
    fig.tight_layout()
    return fig


def _arc(ax, x0: float, x1: float, color: str) -> None:
    height = 0.28 * abs(x1 - x0) + 0.2
    mid = (x0 + x1) / 2.0
    path = MplPath(
        [(x0, 0.0), (mid, height), (x1, 0.0)],
        [MplPath.MOVETO, MplPath.CURVE3, MplPath.CURVE3],
    )
    ax.add_patch(PathPatch(path, fill=False, lw=0.6, alpha=0.55, color=color))


def _render_subgraph(spec: PlotSpec):
    vertices, edges = load_subgraph(spec.inputs[0])
    # vertices are laid out by rank: reach sets of heavy-tailed runs span
    # astronomically wide index ranges, so raw positions are unreadable
    order = sorted(v["id"] for v in vertices)
    pos = {vid: float(rank) for rank, vid in enumerate(order)}
    role = {v["id"]: v["role"] for v in vertices}

    fig, ax = plt.subplots(figsize=(8.0, 4.0))
    for e in edges:
        _arc(ax, pos[e["source"]], pos[e["target"]], _INTERNAL_COLOR)
    internal = [vid for vid in order if role[vid] == "internal"]
    leaves = [vid for vid in order if role[vid] != "internal"]
    if internal:
        ax.scatter([pos[v] for v in internal], [0.0] * len(internal),
                   s=22, color=_INTERNAL_COLOR, zorder=3, label="internal")
    if leaves:
        ax.scatter([pos[v] for v in leaves], [0.0] * len(leaves),
                   s=26, color=_LEAF_COLOR, zorder=3, label="leaf (topic)")
    ax.set_ylim(-0.6, 0.30 * len(order) * 0.28 + 1.0)
    ax.set_yticks([])
    ax.set_xlabel("vertices by index rank")
    ax.legend(loc="upper left")
    fig.tight_layout()
    return fig


def render(spec: PlotSpec) -> str:
    """Render the figure to spec.out_path; returns the written path."""
    fig = render_figure(spec)
    fmt = spec.resolved_format()
    if fmt not in ("png", "svg"):
        raise SchemaError(f"format: must be png or svg, got {fmt!r}")
    # strip per-build metadata so identical inputs give identical bytes
    metadata = {"Software": None} if fmt == "png" else {"Date": None}
    out = Path(spec.out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, format=fmt, dpi=120, metadata=metadata)
    plt.close(fig)
    return str(out)
