import json

import pytest


@pytest.fixture
def trace_csv(tmp_path):
    def make(name="trace.csv", column="V_n", rows=((1, 0.9), (10, 0.5), (100, 0.2))):
        p = tmp_path / name
        lines = [f"n,{column}"] + [f"{n},{v}" for n, v in rows]
        p.write_text("\n".join(lines) + "\n")
        return p

    return make


@pytest.fixture
def subgraph_json(tmp_path):
    def make(name="graph.json", vertices=None, edges=None):
        doc = {
            "schema_version": 1,
            "root": 4,
            "vertices": vertices
            if vertices is not None
            else [
                {"id": 4, "role": "internal"},
                {"id": 3, "role": "internal"},
                {"id": 1, "role": "internal"},
                {"id": -2, "role": "leaf"},
            ],
            "edges": edges
            if edges is not None
            else [
                {"source": 4, "target": 3, "choice": 0},
                {"source": 4, "target": 1, "choice": 1},
                {"source": 3, "target": 1, "choice": 0},
                {"source": 3, "target": -2, "choice": 1},
                {"source": 1, "target": -2, "choice": 0},
                {"source": 1, "target": -2, "choice": 1},
            ],
        }
        p = tmp_path / name
        p.write_text(json.dumps(doc))
        return p

    return make
