"""Deterministic generators for test spaces and the weighted-sum ball examples."""

from __future__ import annotations

import heapq
import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import GenerationError
from .metric_core import FiniteMetricSpace, check_metric
from .rational import as_fraction

KINDS = ("path", "grid", "tree", "uniform", "sum_ball_a", "sum_ball_b", "random_graph", "file")


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    n: int | None = None          # path/uniform/random_graph point count
    side: int | None = None       # grid side length
    dim: int = 2                  # grid dimension
    branching: int | None = None  # tree arity
    depth: int | None = None      # tree depth
    radius: int | None = None     # sum-ball radius
    p: Fraction | None = None     # random_graph edge probability
    seed: int | None = None
    path: str | None = None       # file kind
    name: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise GenerationError(f"unknown generator kind {self.kind!r}")
        if self.kind == "random_graph" and self.seed is None:
            raise GenerationError("random_graph requires a seed")
        if self.kind == "file" and not self.path:
            raise GenerationError("file kind requires a path")


def generate(spec: GeneratorSpec) -> FiniteMetricSpace:
    if spec.kind == "file":
        return load_space(spec.path)
    builder = {
        "path": _gen_path,
        "grid": _gen_grid,
        "tree": _gen_tree,
        "uniform": _gen_uniform,
        "sum_ball_a": _gen_sum_ball_a,
        "sum_ball_b": _gen_sum_ball_b,
        "random_graph": _gen_random_graph,
    }[spec.kind]
    name, rows = builder(spec)
    if spec.name:
        name = spec.name
    report = check_metric(rows, name=name)
    if not report.ok:
        raise GenerationError(f"generator produced an invalid metric: {report.describe()}")
    return report.space


def _need(spec: GeneratorSpec, attr: str) -> int:
    v = getattr(spec, attr)
    if v is None or v <= 0:
        raise GenerationError(f"{spec.kind} needs positive {attr}")
    return v


def _gen_path(spec: GeneratorSpec):
    n = _need(spec, "n")
    rows = [[abs(i - j) for j in range(n)] for i in range(n)]
    return f"path-{n}", rows


def _gen_uniform(spec: GeneratorSpec):
    n = _need(spec, "n")
    rows = [[0 if i == j else 1 for j in range(n)] for i in range(n)]
    return f"uniform-{n}", rows


def _gen_grid(spec: GeneratorSpec):
    side = _need(spec, "side")
    dim = spec.dim
    if dim <= 0:
        raise GenerationError("grid needs positive dim")
    coords = list(itertools.product(range(side), repeat=dim))
    rows = [[sum(abs(a - b) for a, b in zip(p, q)) for q in coords] for p in coords]
    return f"grid-{side}^{dim}", rows


def _gen_tree(spec: GeneratorSpec):
    b = _need(spec, "branching")
    h = _need(spec, "depth")
    edges = []
    nodes = [()]
    frontier = [()]
    for _ in range(h):
        nxt = []
        for parent in frontier:
            for c in range(b):
                child = parent + (c,)
                nodes.append(child)
                edges.append((nodes.index(parent), len(nodes) - 1, 1))
                nxt.append(child)
        frontier = nxt
    rows = _shortest_path_matrix(len(nodes), edges)
    return f"tree-{b}x{h}", rows


def _seq_key(x: dict[int, int], top: int) -> tuple[int, ...]:
    return tuple(x.get(i, 0) for i in range(1, top + 1))


def _gen_sum_ball_a(spec: GeneratorSpec):
    """All integer sequences x with sum_i i*|x_i| <= r, d = sum_i i*|x_i - y_i|."""
    r = _need(spec, "radius")
    pts = sorted(_enumerate_weighted(r, lambda v, i: i * abs(v)))
    rows = [
        [sum(i * abs(a - b) for i, (a, b) in enumerate(zip(x, y), start=1)) for y in pts]
        for x in pts
    ]
    return f"sum-ball-a-{r}", rows


def _gen_sum_ball_b(spec: GeneratorSpec):
    """All x with sum over support of (|x_i| + i) <= r, d = sum_{x_i != y_i} (|x_i - y_i| + i)."""
    r = _need(spec, "radius")
    pts = sorted(_enumerate_weighted(r, lambda v, i: (abs(v) + i) if v else 0))
    rows = [
        [
            sum(abs(a - b) + i for i, (a, b) in enumerate(zip(x, y), start=1) if a != b)
            for y in pts
        ]
        for x in pts
    ]
    return f"sum-ball-b-{r}", rows


def _enumerate_weighted(r: int, cost) -> list[tuple[int, ...]]:
    """Sequences over coordinates 1..r with total per-coordinate cost <= r.

    Coordinates beyond r cannot carry a nonzero entry in either metric, so the
    truncation at r loses nothing.
    """
    out: list[tuple[int, ...]] = []

    def rec(i: int, budget: int, prefix: tuple[int, ...]):
        if i > r:
            out.append(prefix)
            return
        for v in range(-budget, budget + 1):
            c = cost(v, i)
            if c <= budget:
                rec(i + 1, budget - c, prefix + (v,))

    rec(1, r, ())
    return out


def _gen_random_graph(spec: GeneratorSpec):
    """Erdos-Renyi with unit edges, resampled until connected."""
    n = _need(spec, "n")
    p = spec.p if spec.p is not None else Fraction(1, 2)
    p = as_fraction(p)
    if not 0 < p <= 1:
        raise GenerationError("edge probability must be in (0, 1]")
    rng = random.Random(spec.seed)
    for _ in range(200):
        edges = [
            (i, j, 1)
            for i in range(n)
            for j in range(i + 1, n)
            if Fraction(rng.randrange(p.denominator), p.denominator) < p
        ]
        rows = _shortest_path_matrix(n, edges, allow_disconnected=True)
        if rows is not None:
            return f"random-graph-{n}-{spec.seed}", rows
    raise GenerationError(f"no connected graph on {n} vertices after 200 tries (p={p})")


def _shortest_path_matrix(n: int, edges, allow_disconnected: bool = False):
    """Exact all-pairs shortest paths (Dijkstra per source, rational weights)."""
    adj: list[list[tuple[int, Fraction]]] = [[] for _ in range(n)]
    for i, j, w in edges:
        w = as_fraction(w)
        if w <= 0:
            raise GenerationError(f"edge weight must be positive: ({i},{j},{w})")
        if not (0 <= i < n and 0 <= j < n) or i == j:
            raise GenerationError(f"bad edge ({i},{j})")
        adj[i].append((j, w))
        adj[j].append((i, w))
    rows = []
    for src in range(n):
        dist: list[Fraction | None] = [None] * n
        dist[src] = Fraction(0)
        heap: list[tuple[Fraction, int]] = [(Fraction(0), src)]
        while heap:
            d, u = heapq.heappop(heap)
            if dist[u] is not None and d > dist[u]:
                continue
            for v, w in adj[u]:
                nd = d + w
                if dist[v] is None or nd < dist[v]:
                    dist[v] = nd
                    heapq.heappush(heap, (nd, v))
        if any(d is None for d in dist):
            if allow_disconnected:
                return None
            raise GenerationError("graph is not connected")
        rows.append(dist)
    return rows


def graph_to_space(name: str, n: int, edges) -> FiniteMetricSpace:
    """Expand a weighted-graph description into its shortest-path space."""
    rows = _shortest_path_matrix(n, edges)
    return FiniteMetricSpace.from_rows(name, rows)


def save_space(space: FiniteMetricSpace, path: str) -> None:
    from .serialize import dump_artifact, space_to_json

    dump_artifact(space_to_json(space), path)


def load_space(path: str) -> FiniteMetricSpace:
    from .serialize import load_artifact, space_from_json

    return space_from_json(load_artifact(path))
