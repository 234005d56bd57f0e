"""Anchored probability measures from nested partitions, and their l1 reports.

A complete partition chain along the geometric schedule 4n, 16n, ... becomes a
tree of tiles with open-neighborhood enlargements intersected down the parent
chain. Each point x gets a sparse probability measure supported on the leaf
anchors, with weight proportional to the product over levels of the distance
from x to the annulus between consecutive parent enlargements. Factors stay
exact rationals until the final normalization to float.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .decomp import DecompositionChain, solve_chain, verify_chain
from .errors import DegenerateTree, ScheduleError
from .metric_core import (
    MetricFamily,
    FiniteMetricSpace,
    Subspace,
    dist_to_set,
    mesh,
    neighborhood,
    sub,
    whole,
)
from .rational import as_fraction

__all__ = [
    "PartitionTree",
    "TreeTile",
    "WitnessMeasure",
    "build_partition_tree",
    "witness_measure",
    "all_measures",
    "variation_report",
    "VariationReport",
    "property_a_check",
    "PropertyAResult",
    "geometric_schedule",
]


def geometric_schedule(n: int, depth: int) -> tuple[Fraction, ...]:
    return tuple(Fraction(4) ** i * n for i in range(1, depth + 1))


@dataclass(frozen=True)
class TreeTile:
    tile: Subspace
    parent: int | None  # index into the previous level
    color: int          # 0 or 1: which of the two piece families it came from
    enlargement: Subspace


@dataclass(frozen=True)
class PartitionTree:
    space: FiniteMetricSpace
    n: int
    schedule: tuple[Fraction, ...]
    levels: tuple[tuple[TreeTile, ...], ...]
    anchors: tuple[int, ...]  # one per leaf tile, pairwise distinct

    @property
    def depth(self) -> int:
        return len(self.levels)

    @property
    def leaves(self) -> tuple[TreeTile, ...]:
        return self.levels[-1]

    def leaf_enlargements(self) -> MetricFamily:
        return MetricFamily(self.space, tuple(t.enlargement for t in self.leaves))

    def ancestor_enlargements(self, leaf_index: int) -> list[Subspace]:
        """Enlargements from the leaf up to level 1 (root X excluded)."""
        out = []
        level = self.depth - 1
        idx: int | None = leaf_index
        while idx is not None and level >= 0:
            node = self.levels[level][idx]
            out.append(node.enlargement)
            idx = node.parent
            level -= 1
        return out


def build_partition_tree(chain: DecompositionChain, n: int) -> PartitionTree:
    """Levels from the chain's steps, enlargements top-down, least-point anchors."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    space = chain.space
    X = whole(space)

    if chain.depth == 0:
        if space.diameter > chain.bound:
            raise ValueError("degenerate tree requires a complete depth-0 chain")
        tile = TreeTile(X, None, 0, X)
        return PartitionTree(space, n, geometric_schedule(n, 1), ((tile,),), (X.points[0],))

    if not chain.complete:
        raise ValueError("partition tree needs a complete chain")
    expected = geometric_schedule(n, chain.depth)
    if chain.schedule != expected:
        raise ScheduleError(
            f"schedule {[str(s) for s in chain.schedule]} != geometric "
            f"{[str(s) for s in expected]} for n={n}"
        )
    for step in chain.steps:
        if not step.partition:
            raise ValueError("partition tree needs partition-mode steps")
    cv = verify_chain(chain)
    if not cv.ok:
        raise ValueError(f"invalid chain: {cv.describe()}")

    levels: list[tuple[TreeTile, ...]] = []
    for li, (R, step) in enumerate(zip(chain.schedule, chain.steps)):
        tiles: list[TreeTile] = []
        # parent lookup by exact point set of the previous level
        if li == 0:
            parent_of = {X.points: None}
        else:
            parent_of = {t.tile.points: pi for pi, t in enumerate(levels[-1])}
        seen: set[int] = set()
        for member, (v1, v2) in zip(step.parent.members, step.splits):
            pi = parent_of[member.points]
            for color, pieces in ((0, v1), (1, v2)):
                for piece in pieces:
                    if piece.as_set & seen:
                        raise ValueError(f"level {li + 1} is not a partition")
                    seen.update(piece.points)
                    enl = neighborhood(piece, R, "open")
                    if li > 0:
                        parent_enl = levels[-1][pi].enlargement
                        enl = sub(space, sorted(enl.as_set & parent_enl.as_set))
                    tiles.append(TreeTile(piece, pi, color, enl))
        if seen != X.as_set:
            raise ValueError(f"level {li + 1} does not partition the space")
        levels.append(tuple(tiles))

    anchors = tuple(t.tile.points[0] for t in levels[-1])
    if len(set(anchors)) != len(anchors):
        raise ValueError("anchors are not pairwise distinct")
    return PartitionTree(space, n, chain.schedule, tuple(levels), anchors)


@dataclass(frozen=True)
class WitnessMeasure:
    """Sparse probability measure: anchor point -> weight."""

    x: int
    n: int
    weights: dict[int, float]
    normalizer: Fraction

    def support(self) -> tuple[int, ...]:
        return tuple(sorted(self.weights))

    def total(self) -> float:
        return sum(self.weights.values())

    def l1(self, other: "WitnessMeasure") -> float:
        keys = set(self.weights) | set(other.weights)
        return sum(abs(self.weights.get(k, 0.0) - other.weights.get(k, 0.0)) for k in keys)


def _leaf_factor_tables(t: PartitionTree) -> list[list[np.ndarray | None]]:
    """Per leaf, per level: scaled d(., annulus) for every point (None = empty annulus)."""
    space = t.space
    X_set = whole(space).as_set
    tables: list[list[np.ndarray | None]] = []
    for li in range(len(t.leaves)):
        below = [e.as_set for e in t.ancestor_enlargements(li)]  # leaf .. level 1
        rows: list[np.ndarray | None] = []
        for i in range(len(below)):
            outer = below[i + 1] if i + 1 < len(below) else X_set
            annulus = outer - below[i]
            if annulus:
                rows.append(dist_to_set(space, sub(space, sorted(annulus))))
            else:
                rows.append(None)
        tables.append(rows)
    return tables


def _measure_at(t: PartitionTree, tables, x: int) -> WitnessMeasure:
    space = t.space
    cap = t.schedule[-1]  # distance to an empty annulus
    total = Fraction(0)
    alphas: list[Fraction] = []
    for rows in tables:
        a = Fraction(1)
        for row in rows:
            f = cap if row is None else Fraction(int(row[x]), space.den)
            if f == 0:
                a = Fraction(0)
                break
            a *= f
        alphas.append(a)
        total += a
    if total == 0:
        raise DegenerateTree(f"normalizer is zero at point {x}")
    weights = {anchor: float(a / total) for anchor, a in zip(t.anchors, alphas) if a}
    return WitnessMeasure(x, t.n, weights, total)


def all_measures(t: PartitionTree) -> list[WitnessMeasure]:
    """Witness measures for every point, sharing the annulus distance tables."""
    tables = _leaf_factor_tables(t)
    return [_measure_at(t, tables, x) for x in range(t.space.size)]


def witness_measure(t: PartitionTree, x: int) -> WitnessMeasure:
    return _measure_at(t, _leaf_factor_tables(t), x)


@dataclass(frozen=True)
class VariationReport:
    n: int
    depth: int
    schedule: tuple[Fraction, ...]
    cutoff: Fraction
    classes: tuple[tuple[Fraction, float], ...]  # (distance, max l1) ascending
    support_radius: Fraction
    leaf_mesh: Fraction
    paper_bound: float

    def max_variation(self, below=None) -> float:
        """Max l1 over distance classes, optionally restricted to d < below."""
        vals = [v for d, v in self.classes if below is None or d < below]
        return max(vals, default=0.0)


def variation_report(t: PartitionTree, K) -> VariationReport:
    """l1 variation per distance class over all pairs with d(x,y) <= K, plus
    the support radius checked against the leaf-enlargement mesh."""
    K = as_fraction(K)
    space = t.space
    measures = all_measures(t)

    classes: dict[Fraction, float] = {}
    thr = space.thr_le(K)
    n = space.size
    for x in range(n):
        row = space.D[x]
        for y in range(x + 1, n):
            if row[y] <= thr:
                d = space.frac(int(row[y]))
                v = measures[x].l1(measures[y])
                if v > classes.get(d, -1.0):
                    classes[d] = v

    support_radius = Fraction(0)
    for x in range(n):
        for anchor in measures[x].weights:
            d = space.dist(x, anchor)
            if d > support_radius:
                support_radius = d
    leaf_mesh = mesh(t.leaf_enlargements())
    if support_radius > leaf_mesh:
        raise AssertionError(
            f"support radius {support_radius} exceeds leaf enlargement mesh {leaf_mesh}"
        )

    m = t.depth
    paper_bound = float(2 ** (m + 2) / t.schedule[-1])
    return VariationReport(
        n=t.n,
        depth=m,
        schedule=t.schedule,
        cutoff=K,
        classes=tuple(sorted(classes.items())),
        support_radius=support_radius,
        leaf_mesh=leaf_mesh,
        paper_bound=paper_bound,
    )


@dataclass(frozen=True)
class PropertyAResult:
    ok: bool
    n: int
    support_radius: Fraction
    max_variation: float
    report: VariationReport | None
    attempts: tuple[tuple[int, float], ...]  # (n, max variation) per tried n


def property_a_check(
    space: FiniteMetricSpace,
    eps,
    R,
    strategy: str = "radial",
    n_max: int = 8,
    max_steps: int = 12,
    bound_factor: int = 4,
) -> PropertyAResult:
    """Search n = 1.. for measures with l1 variation < eps on pairs at d < R.

    Builds a chain along 4n, 16n, ... with bound 4n (by default) and the given
    strategy, then evaluates the variation report at cutoff R.
    """
    eps = as_fraction(eps)
    R = as_fraction(R)
    if eps <= 0 or R <= 0:
        raise ValueError("eps and R must be positive")
    attempts: list[tuple[int, float]] = []
    best: tuple[float, int, VariationReport] | None = None
    for n in range(1, n_max + 1):
        schedule = geometric_schedule(n, max_steps)
        chain = solve_chain(space, schedule, bound_factor * n, strategy, max_steps=max_steps)
        if not chain.complete:
            continue
        tree = build_partition_tree(chain, n)
        report = variation_report(tree, K=R)
        v = report.max_variation(below=R)
        attempts.append((n, v))
        if best is None or v < best[0]:
            best = (v, n, report)
        if v < eps:
            return PropertyAResult(True, n, report.support_radius, v, report, tuple(attempts))
    if best is None:
        return PropertyAResult(False, 0, Fraction(0), math.inf, None, tuple(attempts))
    v, n, report = best
    return PropertyAResult(False, n, report.support_radius, v, report, tuple(attempts))
