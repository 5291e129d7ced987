import json

import numpy as np
import pytest

from grapde.graph import GraphError, ball_family, bfs_distances, build_graph, generate, make_domain
from grapde.io import InputError, dumps, graph_from_dict, graph_to_dict, parse_edge_text, read_graph


def test_measure_is_weighted_degree():
    g = build_graph([(0, 1, 2.0), (1, 2, 0.5)])
    assert np.array_equal(g.measure, [2.0, 2.5, 0.5])
    assert g.volume == 5.0


@pytest.mark.parametrize("edges, text", [
    ([(0, 0, 1.0)], "self-loop"),
    ([(0, 1, 1.0), (1, 0, 2.0)], "duplicate"),
    ([(0, 1, -1.0)], "non-positive"),
    ([], "empty"),
])
def test_invalid_edge_lists(edges, text):
    with pytest.raises(GraphError, match=text):
        build_graph(edges)


def test_disconnected_graph_is_built_but_rejected():
    g = build_graph([(0, 1), (2, 3)])
    assert not g.connected
    with pytest.raises(GraphError, match="2 components"):
        g.require_connected()


def test_domain_boundary_and_interior():
    g = generate("path", 5)
    d = make_domain(g, [0, 1, 2])
    assert d.boundary == (2,)
    assert d.interior == (0, 1)


def test_grid_balls_sizes():
    g = generate("grid", 9, 9)
    fam = ball_family(g, 40, 4)
    assert [len(b) for b in fam.balls] == [1, 5, 13, 25]
    assert bfs_distances(g, 40).max() == 8


def test_graph_json_round_trip(tmp_path):
    g = generate("random", 9, 0.4, seed=3)
    p = tmp_path / "g.json"
    p.write_text(dumps(graph_to_dict(g)))
    assert read_graph(p) == g


def test_edge_text_format(tmp_path):
    g = parse_edge_text("# comment\n0 1 2.5\n1 2\n")
    assert g.edge_list() == [(0, 1, 2.5), (1, 2, 1.0)]
    p = tmp_path / "g.txt"
    p.write_text("0 1\n1 x\n")
    with pytest.raises(InputError, match="line 2"):
        read_graph(p)


def test_malformed_json_reports_position(tmp_path):
    p = tmp_path / "g.json"
    p.write_text('{"edges": [[0, 1, 1],\n ]}')
    with pytest.raises(InputError, match=r"line 2 column 2"):
        read_graph(p)
    with pytest.raises(InputError):
        graph_from_dict({"edges": [[0]]})


def test_dumps_is_deterministic_and_handles_non_finite():
    text = dumps({"b": np.array([1.0, np.inf]), "a": np.float64(0.1)})
    assert text == dumps({"a": 0.1, "b": [1.0, float("inf")]})
    assert json.loads(text)["b"] == [1.0, "inf"]
