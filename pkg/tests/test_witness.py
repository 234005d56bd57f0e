import math
from fractions import Fraction

import pytest

from coarsekit.decomp import DecompositionChain, RDecomposition, solve_chain
from coarsekit.errors import ScheduleError
from coarsekit.metric_core import MetricFamily, mesh, sub, whole
from coarsekit.spacegen import GeneratorSpec, generate
from coarsekit.witness import (
    all_measures,
    build_partition_tree,
    geometric_schedule,
    property_a_check,
    variation_report,
    witness_measure,
)


@pytest.fixture(scope="module")
def p12_tree(p12):
    chain = solve_chain(p12, geometric_schedule(1, 4), 4, "radial")
    return build_partition_tree(chain, 1)


class TestBuildTree:
    def test_p12_enlargements_and_anchors(self, p12_tree):
        by_tile = {t.tile.points: t.enlargement.points for t in p12_tree.leaves}
        assert by_tile[tuple(range(5))] == tuple(range(8))
        assert by_tile[tuple(range(5, 10))] == tuple(range(2, 12))
        assert by_tile[(10, 11)] == tuple(range(7, 12))
        assert sorted(p12_tree.anchors) == [0, 5, 10]

    def test_wrong_schedule_rejected(self, p12):
        chain = solve_chain(p12, [3], 3, "radial")
        assert chain.complete
        with pytest.raises(ScheduleError):
            build_partition_tree(chain, 1)

    def test_depth_zero_degenerate_tree(self, p6):
        chain = solve_chain(p6, [4], 10, "radial")
        assert chain.depth == 0
        tree = build_partition_tree(chain, 1)
        assert tree.depth == 1
        assert tree.leaves[0].enlargement.points == tuple(range(6))
        m = witness_measure(tree, 3)
        assert m.weights == {0: 1.0}

    def test_incomplete_chain_rejected(self, p200):
        chain = solve_chain(p200, geometric_schedule(1, 2), 1, "radial", max_steps=2)
        assert not chain.complete
        with pytest.raises(ValueError):
            build_partition_tree(chain, 1)


class TestWitnessMeasure:
    def test_point_mass_at_band_core(self, p12_tree):
        m = witness_measure(p12_tree, 0)
        assert m.weights == {0: 1.0}
        assert m.normalizer == 8

    def test_worked_values_at_4_and_5(self, p12_tree):
        a4 = witness_measure(p12_tree, 4)
        assert abs(a4.weights[0] - 4 / 7) < 1e-12
        assert abs(a4.weights[5] - 3 / 7) < 1e-12
        a5 = witness_measure(p12_tree, 5)
        assert abs(a4.l1(a5) - 2 / 7) < 1e-12

    def test_all_measures_normalized_and_local(self, p12_tree):
        tiles = {t.tile.points: t for t in p12_tree.leaves}
        measures = all_measures(p12_tree)
        enl_of_anchor = {t.tile.points[0]: t.enlargement.as_set for t in p12_tree.leaves}
        for m in measures:
            assert abs(m.total() - 1.0) <= 1e-9
            assert all(w >= 0 for w in m.weights.values())
            for anchor in m.weights:
                assert m.x in enl_of_anchor[anchor]  # support only where x is enlarged


class TestVariationReport:
    def test_adjacent_class_value(self, p12_tree):
        rep = variation_report(p12_tree, 1)
        assert len(rep.classes) == 1
        d, v = rep.classes[0]
        assert d == 1
        assert abs(v - 9 / 28) < 1e-12  # attained at the in-band pairs (1,2) and (2,3)

    def test_zero_distance_means_zero_variation(self, p12_tree):
        measures = all_measures(p12_tree)
        assert measures[7].l1(measures[7]) == 0.0

    def test_support_radius_below_leaf_mesh(self, p12_tree):
        rep = variation_report(p12_tree, 1)
        assert rep.support_radius == 7
        assert rep.leaf_mesh == 9
        assert rep.support_radius <= rep.leaf_mesh


@pytest.fixture(scope="module")
def two_level_tree():
    space = generate(GeneratorSpec("path", n=40))
    X = whole(space)
    halves = (sub(space, range(20)), sub(space, range(20, 40)))
    step1 = RDecomposition(
        MetricFamily(space, (X,)), Fraction(4), (((halves[0],), (halves[1],)),), partition=True
    )
    fam1 = step1.pieces()
    splits = []
    for member in fam1.members:
        base = member.points[0]
        bands = {}
        for p in member.points:
            bands.setdefault((p - base) // 17, []).append(p)
        v1 = tuple(sub(space, bands[k]) for k in sorted(bands) if k % 2 == 0)
        v2 = tuple(sub(space, bands[k]) for k in sorted(bands) if k % 2 == 1)
        splits.append((v1, v2))
    step2 = RDecomposition(fam1, Fraction(16), tuple(splits), partition=True)
    chain = DecompositionChain(
        space, (Fraction(4), Fraction(16)), (step1, step2), Fraction(16), True
    )
    return build_partition_tree(chain, 1)


class TestMultiLevelTree:
    def test_depth_two(self, two_level_tree):
        assert two_level_tree.depth == 2

    def test_measures_well_formed(self, two_level_tree):
        for m in all_measures(two_level_tree):
            assert abs(m.total() - 1.0) <= 1e-9
            assert all(w > 0 for w in m.weights.values())

    def test_factors_multiply_down_the_parent_chain(self, two_level_tree):
        # hand-compute alpha for x=0 against its own leaf:
        # factor_1 = d(0, p(V)\V) with the R_m cap when the annulus is empty,
        # factor_2 = d(0, X\p(V))
        m = witness_measure(two_level_tree, 0)
        leaf = next(t for t in two_level_tree.leaves if t.tile.points[0] == 0)
        parent = two_level_tree.levels[0][leaf.parent]
        assert parent.enlargement.points == tuple(range(23))
        inner = set(parent.enlargement.points) - set(leaf.enlargement.points)
        assert inner == set()  # N_16 of the leaf swallows the parent enlargement
        f1 = 16  # empty annulus falls back to the cap R_m
        outer = set(range(40)) - set(parent.enlargement.points)
        f2 = min(abs(0 - q) for q in outer)
        assert f2 == 23
        got = m.weights[leaf.tile.points[0]]
        assert abs(got - (f1 * f2) / float(m.normalizer)) < 1e-12

    def test_variation_report_multi_level(self, two_level_tree):
        rep = variation_report(two_level_tree, 2)
        assert rep.depth == 2
        assert rep.paper_bound == float(2 ** 4) / 16
        assert rep.support_radius <= rep.leaf_mesh


class TestPropertyACheck:
    def test_generous_eps_needs_n1(self, p200):
        res = property_a_check(p200, 2, 1)
        assert res.ok and res.n == 1

    def test_no_pairs_below_tiny_r(self, p200):
        res = property_a_check(p200, "1/10", "1/2")
        assert res.ok and res.n == 1 and res.max_variation == 0.0

    def test_search_finds_modest_eps(self, p200):
        res = property_a_check(p200, "1/4", 2, n_max=8)
        assert res.ok
        assert res.max_variation < 0.25
        assert res.report is not None
        # certificate re-check: recompute the report at the returned n
        chain = solve_chain(p200, geometric_schedule(res.n, 12), 4 * res.n, "radial")
        rep = variation_report(build_partition_tree(chain, res.n), 2)
        assert rep.max_variation(below=Fraction(2)) == res.max_variation

    def test_exhausted_reports_best(self, p200):
        res = property_a_check(p200, "1/1000000", 2, n_max=2)
        assert not res.ok
        assert res.attempts and res.max_variation > 0
