import itertools
import json
from fractions import Fraction

import networkx as nx
import pytest

from coarsekit.errors import GenerationError, MetricViolation
from coarsekit.metric_core import check_metric
from coarsekit.spacegen import GeneratorSpec, generate, load_space, save_space


def sum_ball_a_oracle(r):
    """Independent enumeration: all x with sum i*|x_i| <= r over coordinates 1..r."""
    ranges = [range(-(r // i), r // i + 1) for i in range(1, r + 1)]
    return {
        x for x in itertools.product(*ranges)
        if sum(i * abs(v) for i, v in enumerate(x, start=1)) <= r
    }


def sum_ball_b_oracle(r):
    ranges = [range(-r, r + 1) for _ in range(1, r + 1)]
    return {
        x for x in itertools.product(*ranges)
        if sum(abs(v) + i for i, v in enumerate(x, start=1) if v) <= r
    }


def test_path_matrix(p6):
    for i in range(6):
        for j in range(6):
            assert p6.dist(i, j) == abs(i - j)


def test_sum_ball_a_3_has_15_points():
    space = generate(GeneratorSpec("sum_ball_a", radius=3))
    oracle = sum_ball_a_oracle(3)
    assert len(oracle) == 15
    assert space.size == 15


def test_sum_ball_b_3_has_7_points():
    space = generate(GeneratorSpec("sum_ball_b", radius=3))
    oracle = sum_ball_b_oracle(3)
    assert len(oracle) == 7
    assert space.size == 7


@pytest.mark.parametrize("kind,oracle", [("sum_ball_a", sum_ball_a_oracle), ("sum_ball_b", sum_ball_b_oracle)])
def test_sum_ball_point_sets_match_oracle(kind, oracle):
    for r in range(1, 5):
        space = generate(GeneratorSpec(kind, radius=r))
        assert space.size == len(oracle(r))


@pytest.mark.parametrize("kind", ["sum_ball_a", "sum_ball_b"])
def test_sum_ball_metric_valid_up_to_radius_6(kind):
    for r in range(1, 7):
        space = generate(GeneratorSpec(kind, radius=r))
        assert check_metric(space.rows).ok


@pytest.mark.parametrize("kind", ["sum_ball_a", "sum_ball_b"])
def test_sum_ball_counts_monotone(kind):
    counts = [generate(GeneratorSpec(kind, radius=r)).size for r in range(1, 7)]
    assert counts == sorted(counts)


def test_generate_deterministic():
    a = generate(GeneratorSpec("random_graph", n=10, seed=42))
    b = generate(GeneratorSpec("random_graph", n=10, seed=42))
    assert a.rows == b.rows
    c = generate(GeneratorSpec("random_graph", n=10, seed=43))
    assert a.rows != c.rows


def test_random_graph_needs_seed():
    with pytest.raises(GenerationError):
        GeneratorSpec("random_graph", n=10)


def test_grid_and_tree_pass_check_metric():
    g = generate(GeneratorSpec("grid", side=4))
    assert g.size == 16 and g.diameter == 6
    t = generate(GeneratorSpec("tree", branching=2, depth=3))
    assert t.size == 15 and check_metric(t.rows).ok


def test_round_trip_matrix(tmp_path, p6):
    path = tmp_path / "p6.json"
    save_space(p6, str(path))
    again = load_space(str(path))
    assert again.equals(p6)


def test_file_generator_kind(tmp_path, p6):
    path = tmp_path / "p6.json"
    save_space(p6, str(path))
    assert generate(GeneratorSpec("file", path=str(path))).equals(p6)
    with pytest.raises(GenerationError):
        GeneratorSpec("file")


def test_graph_form_expands_to_path(tmp_path):
    doc = {
        "name": "p6-graph",
        "metric": {"type": "graph", "n": 6, "edges": [[i, i + 1, 1] for i in range(5)]},
    }
    path = tmp_path / "g.json"
    path.write_text(json.dumps(doc))
    space = load_space(str(path))
    # independent shortest-path oracle
    g = nx.Graph()
    g.add_weighted_edges_from((i, i + 1, 1) for i in range(5))
    lengths = dict(nx.all_pairs_dijkstra_path_length(g))
    for i in range(6):
        for j in range(6):
            assert space.dist(i, j) == lengths[i][j]


def test_weighted_graph_rational_edges(tmp_path):
    doc = {
        "name": "w",
        "metric": {"type": "graph", "n": 3, "edges": [[0, 1, "1/2"], [1, 2, "1/3"], [0, 2, "2"]]},
    }
    path = tmp_path / "w.json"
    path.write_text(json.dumps(doc))
    space = load_space(str(path))
    assert space.dist(0, 2) == Fraction(5, 6)  # through the middle vertex


def test_load_triangle_violation_names_triple(tmp_path):
    doc = {"name": "bad", "metric": {"type": "matrix", "d": [["0", "3", "1"], ["3", "0", "1"], ["1", "1", "0"]]}}
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(MetricViolation) as err:
        load_space(str(path))
    assert err.value.kind == "triangle"
    assert err.value.where == (0, 2, 1)
