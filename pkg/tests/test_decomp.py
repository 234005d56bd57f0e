import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from coarsekit.decomp import (
    CoverFailure,
    CoverSequence,
    DecompositionChain,
    RDecomposition,
    amalgamate,
    amalgamate_play,
    annulus_split,
    asc_cover,
    asc_to_chain,
    decompose_member,
    pullback_chain,
    pullback_decomposition,
    solve_chain,
    split_exhaustive,
    sum_theorem_step,
    verify_chain,
    verify_cover,
    verify_decomposition,
)
from coarsekit.errors import (
    ControlError,
    ScheduleError,
    SizeLimitExceeded,
    StageAssertionFailure,
)
from coarsekit.metric_core import (
    CoarseMap,
    ControlFunction,
    MetricFamily,
    family,
    is_cover,
    is_r_disjoint,
    mesh,
    set_distance,
    sub,
    whole,
)
from coarsekit.spacegen import GeneratorSpec, generate
from conftest import random_space


def single_split_decomposition(space, v1, v2, R, partition=False):
    return RDecomposition(
        MetricFamily(space, (whole(space),)),
        Fraction(R),
        ((tuple(sub(space, p) for p in v1), tuple(sub(space, p) for p in v2)),),
        partition,
    )


class TestVerifyDecomposition:
    def test_valid_radial_style_split(self, p6):
        d = single_split_decomposition(p6, [[0, 1], [4, 5]], [[2, 3]], 1)
        assert verify_decomposition(d).ok

    def test_disjointness_fails_at_higher_scale(self, p6):
        d = single_split_decomposition(p6, [[0, 1], [4, 5]], [[2, 3]], 3)
        v = verify_decomposition(d)
        assert not v.ok
        assert any(x.kind == "v1_disjointness" for x in v.violations)

    def test_coverage_gap(self, p6):
        d = single_split_decomposition(p6, [[0, 1]], [[3, 4, 5]], 1)
        v = verify_decomposition(d)
        assert any(x.kind == "coverage_gap" and "2" in x.detail for x in v.violations)

    def test_piece_outside_member(self, p6):
        d = RDecomposition(
            MetricFamily(p6, (sub(p6, [0, 1, 2]),)),
            Fraction(1),
            (((sub(p6, [0, 1, 2]), sub(p6, [5])), ()),),
        )
        v = verify_decomposition(d)
        assert any(x.kind == "piece_outside" for x in v.violations)

    def test_partition_flag_catches_overlap(self, p6):
        d = single_split_decomposition(p6, [[0, 1, 2]], [[2, 3, 4, 5]], 1, partition=True)
        v = verify_decomposition(d)
        assert any(x.kind == "overlap" for x in v.violations)
        # same split is fine without the flag
        d2 = single_split_decomposition(p6, [[0, 1, 2]], [[2, 3, 4, 5]], 1, partition=False)
        assert verify_decomposition(d2).ok


class TestDecomposeMember:
    def test_radial_bands(self, p6):
        v1, v2 = decompose_member(whole(p6), 1, "radial", base=0)
        assert [list(p.points) for p in v1] == [[0, 1], [4, 5]]
        assert [list(p.points) for p in v2] == [[2, 3]]

    def test_exhaustive_uniform_triple(self, triple_uniform):
        v1, v2 = split_exhaustive(whole(triple_uniform), 1)
        sizes = sorted([len(p) for p in v1] + [len(p) for p in v2])
        assert sizes == [1, 2]  # no all-singleton split exists

    def test_peel(self, p6):
        v1, v2 = decompose_member(whole(p6), 1, "peel")
        assert [list(p.points) for p in v1] == [[0]]
        assert [list(p.points) for p in v2] == [[1, 2, 3, 4, 5]]

    def test_components(self, p6):
        v1, v2 = decompose_member(sub(p6, [0, 1, 3, 4]), 1, "components")
        assert [list(p.points) for p in v1] == [[0, 1], [3, 4]]
        assert v2 == ()

    def test_exhaustive_size_limit(self):
        space = generate(GeneratorSpec("path", n=14))
        with pytest.raises(SizeLimitExceeded):
            split_exhaustive(whole(space), 1)

    def test_size_limit_env_override(self, monkeypatch):
        space = generate(GeneratorSpec("path", n=14))
        monkeypatch.setenv("COARSEKIT_SIZE_LIMIT", "14")
        v1, v2 = split_exhaustive(whole(space), 1)
        assert verify_decomposition(
            RDecomposition(MetricFamily(space, (whole(space),)), Fraction(1), ((v1, v2),))
        ).ok

    def test_radial_base_must_be_inside(self, p6):
        with pytest.raises(ValueError):
            decompose_member(sub(p6, [0, 1]), 1, "radial", base=5)


class TestSolveChain:
    def test_p12_depth_one(self, p12):
        c = solve_chain(p12, [4], 4, "radial")
        assert c.complete and c.depth == 1
        pieces = sorted(tuple(m.points) for m in c.final_family().members)
        assert pieces == [tuple(range(5)), (5, 6, 7, 8, 9), (10, 11)]
        assert verify_chain(c).ok

    def test_peel_completes_with_short_schedule(self, p6):
        c = solve_chain(p6, [1], 0, "peel", max_steps=10)
        assert c.complete and c.depth <= 5
        assert verify_chain(c).ok

    def test_depth_zero_when_bounded(self, p6):
        c = solve_chain(p6, [1], 10, "radial")
        assert c.complete and c.depth == 0
        assert verify_chain(c).ok

    def test_decreasing_schedule_rejected(self, p6):
        with pytest.raises(ScheduleError):
            solve_chain(p6, [4, 2], 1, "radial")


class TestVerifyChain:
    def test_decreasing_schedule_flagged(self, p6):
        c = solve_chain(p6, [1], 0, "peel", max_steps=10)
        bad = DecompositionChain(p6, tuple(reversed(c.schedule)), c.steps, c.bound, c.complete)
        v = verify_chain(bad)
        assert any(x.kind == "schedule" for x in v.violations)

    def test_broken_linkage_flagged(self, p12):
        c1 = solve_chain(p12, [2], 2, "radial")
        # steps from a different chain do not link to this schedule's parents
        c2 = solve_chain(p12, [4], 4, "radial")
        frankenstein = DecompositionChain(
            p12, (Fraction(2), Fraction(4)), (c1.steps[0], c2.steps[0]), Fraction(4), True
        )
        v = verify_chain(frankenstein)
        assert any(x.kind == "linkage" for x in v.violations)

    def test_completeness_claim_checked(self, p12):
        c = solve_chain(p12, [4], 4, "radial")
        lying = DecompositionChain(c.space, c.schedule, c.steps, Fraction(1), True)
        v = verify_chain(lying)
        assert any(x.kind == "completeness" for x in v.violations)


class TestAscCover:
    def test_greedy_fails_on_p6_tight_bound(self, p6):
        out = asc_cover(p6, [1, 2], 1, "greedy_components")
        assert isinstance(out, CoverFailure)
        assert out.uncovered == tuple(range(6))

    def test_exhaustive_finds_cover(self, p6):
        out = asc_cover(p6, [1, 2], 1, "exhaustive")
        assert isinstance(out, CoverSequence)
        assert verify_cover(out).ok

    def test_spec_instance_is_valid(self, p6):
        cov = CoverSequence(
            p6, (Fraction(1), Fraction(2)),
            (family(p6, [[0, 1], [3, 4]]), family(p6, [[2], [5]])), Fraction(1),
        )
        assert verify_cover(cov).ok

    def test_two_far_points(self):
        space = generate(GeneratorSpec("path", n=11))
        X = sub(space, [0, 10])
        out = asc_cover(space, [1], 11, "greedy_components")
        assert isinstance(out, CoverSequence)

    def test_single_family_when_bound_huge(self, p6):
        out = asc_cover(p6, [1], 10, "greedy_components")
        assert isinstance(out, CoverSequence)
        assert [list(m.points) for m in out.covers[0].members] == [[0, 1, 2, 3, 4, 5]]

    def test_greedy_singleton_cover(self):
        space = generate(GeneratorSpec("uniform", n=2))
        # two points at distance 1; R=1 merges them, diam 1 > 0 fails; R scale below 1 works
        out = asc_cover(space, ["1/2"], 0, "greedy_components")
        assert isinstance(out, CoverSequence)
        assert len(out.covers[0]) == 2


class TestAscToChain:
    def test_p6_cover_to_chain(self, p6):
        cov = CoverSequence(
            p6, (Fraction(1), Fraction(2)),
            (family(p6, [[0, 1], [3, 4]]), family(p6, [[2], [5]])), Fraction(1),
        )
        c = asc_to_chain(cov)
        assert c.depth == 2 and c.complete
        final = sorted(tuple(m.points) for m in c.final_family().members)
        assert final == [(0, 1), (2,), (3, 4), (5,)]
        assert verify_chain(c).ok

    def test_single_step_cover(self, p6):
        cov = CoverSequence(p6, (Fraction(1),), (family(p6, [[0, 1, 2, 3, 4, 5]]),), Fraction(5))
        c = asc_to_chain(cov)
        assert c.depth == 1
        assert c.steps[0].splits[0][1] == ()  # v2 empty
        assert verify_chain(c).ok

    def test_empty_first_family_passes_through(self, p6):
        cov = CoverSequence(
            p6, (Fraction(1), Fraction(2)),
            (MetricFamily(p6, ()), family(p6, [[0, 1, 2, 3, 4, 5]])), Fraction(5),
        )
        c = asc_to_chain(cov)
        assert c.depth == 2
        v1, v2 = c.steps[0].splits[0]
        assert v1 == () and [list(p.points) for p in v2] == [[0, 1, 2, 3, 4, 5]]
        assert verify_chain(c).ok


class TestAmalgamate:
    def test_absorbs_within_quarter(self, p6):
        out = amalgamate(family(p6, [[0]]), family(p6, [[1], [4]]), 8)
        assert sorted(tuple(m.points) for m in out.members) == [(0, 1), (4,)]

    def test_empty_earlier_family(self, p6):
        U = family(p6, [[0]])
        assert amalgamate(U, MetricFamily(p6, ()), 8) is U

    def test_strict_boundary(self, p6):
        out = amalgamate(family(p6, [[0]]), family(p6, [[2]]), 8)
        assert sorted(tuple(m.points) for m in out.members) == [(0,), (2,)]

    def test_union_preserved_random(self):
        rng = random.Random(7)
        for _ in range(30):
            space = random_space(rng.randrange(1000), rng.randint(4, 12))
            fam_a = family(space, [sorted(rng.sample(range(space.size), rng.randint(1, 3)))
                                   for _ in range(rng.randint(1, 3))])
            fam_b = family(space, [sorted(rng.sample(range(space.size), rng.randint(1, 3)))
                                   for _ in range(rng.randint(1, 3))])
            out = amalgamate(fam_a, fam_b, rng.randint(1, 12))
            assert out.union_points() == fam_a.union_points() | fam_b.union_points()


class TestAmalgamatePlay:
    def test_single_cover_play(self, p6):
        cov = CoverSequence(p6, (Fraction(1),), (family(p6, [[0, 1], [3, 4]]),), Fraction(1))
        res = amalgamate_play(cov)
        assert [list(m.points) for m in res.final.members] == [[0, 1], [3, 4]]
        assert res.stages == ()

    def test_p6_play_stages_verified(self, p6):
        cov = CoverSequence(
            p6, (Fraction(1), Fraction(2)),
            (family(p6, [[0, 1], [3, 4]]), family(p6, [[2], [5]])), Fraction(1),
        )
        res = amalgamate_play(cov)
        assert len(res.stages) == 1
        assert is_cover([res.final], whole(p6)).ok
        assert len(res.final) == 1 or is_r_disjoint(res.final, 1).ok

    def test_small_second_scale_fails_with_witness(self, p6):
        bad = CoverSequence(
            p6, (Fraction(1), Fraction(1, 2)),
            (family(p6, [[0, 1], [3, 4]]), family(p6, [[2], [5]])), Fraction(1),
        )
        with pytest.raises(StageAssertionFailure) as err:
            amalgamate_play(bad)
        assert err.value.prop == "r_disjoint"
        assert err.value.witness is not None


class TestAnnulusSplit:
    def test_p10_bands(self, p10):
        f1, f2 = annulus_split(whole(p10), sub(p10, [0]), 1)
        assert [list(m.points) for m in f1.members] == [[0], [3, 4], [7, 8]]
        assert [list(m.points) for m in f2.members] == [[1, 2], [5, 6], [9]]

    def test_x_equals_z(self, p6):
        f1, f2 = annulus_split(whole(p6), whole(p6), 1)
        assert [list(m.points) for m in f1.members] == [[0, 1, 2, 3, 4, 5]]
        assert len(f2) == 0

    def test_large_r_single_band(self, p6):
        f1, f2 = annulus_split(whole(p6), sub(p6, [0]), 10)
        assert [list(m.points) for m in f1.members] == [[0]]
        assert [list(m.points) for m in f2.members] == [[1, 2, 3, 4, 5]]

    def test_x_not_subset_of_z(self, p6):
        with pytest.raises(ValueError):
            annulus_split(sub(p6, [0, 1]), sub(p6, [3]), 1)

    def test_exhaustive_properties_small(self):
        for n in range(2, 12):
            space = generate(GeneratorSpec("path", n=n))
            Z = whole(space)
            for px in range(n):
                X = sub(space, range(px + 1))
                for R in range(1, 6):
                    f1, f2 = annulus_split(Z, X, R)
                    assert is_cover([f1, f2], Z).ok
                    assert is_r_disjoint(f1, R).ok if len(f1) > 1 else True
                    assert is_r_disjoint(f2, R).ok if len(f2) > 1 else True
                    for band in list(f1.members)[1:] + list(f2.members):
                        assert not (band.as_set & X.as_set)


class TestSumTheoremStep:
    def test_p6_example(self, p6):
        X = sub(p6, [0, 1, 2, 4, 5])
        d, verdict = sum_theorem_step(X, family(p6, [[0, 1, 2], [4, 5]]), sub(p6, [2, 4]), 1)
        v1, v2 = d.splits[0]
        assert [list(p.points) for p in v2] == [[0, 1], [5]]
        assert verdict.ok

    def test_y_equals_x(self, p6):
        X = sub(p6, [0, 1, 2])
        d, verdict = sum_theorem_step(X, family(p6, [[0, 1, 2]]), X, 1)
        assert d.splits[0][1] == ()
        assert verdict.ok

    def test_empty_y_disallowed(self, p6):
        X = sub(p6, [0, 1, 2])
        with pytest.raises(ValueError):
            sub(p6, [])

    def test_inconsistent_cover_family(self, p6):
        X = sub(p6, [0, 1, 2])
        with pytest.raises(ValueError):
            sum_theorem_step(X, family(p6, [[0, 1]]), sub(p6, [0]), 1)


def halving_map(p10, p5):
    return CoarseMap(
        p10, p5, tuple(i // 2 for i in range(10)),
        ControlFunction.linear(Fraction(1, 2), Fraction(1, 2)),
        ControlFunction.linear(Fraction(1, 2), Fraction(-1, 2)),
    )


class TestPullback:
    def test_halving_example(self, p10):
        p5 = generate(GeneratorSpec("path", n=5))
        f = halving_map(p10, p5)
        target = RDecomposition(
            MetricFamily(p5, (whole(p5),)), Fraction(2),
            (((sub(p5, [0]), sub(p5, [3, 4])), (sub(p5, [1, 2]),)),),
        )
        assert verify_decomposition(target).ok
        pulled = pullback_decomposition(f, target, 2)
        v1 = pulled.splits[0][0]
        assert [list(p.points) for p in v1] == [[0, 1], [6, 7, 8, 9]]
        assert set_distance(v1[0], v1[1]) == 5 > 2
        assert verify_decomposition(pulled).ok

    def test_identity_map_unchanged(self, p6):
        ident = CoarseMap(
            p6, p6, tuple(range(6)),
            ControlFunction.linear(1), ControlFunction.linear(1),
        )
        d = single_split_decomposition(p6, [[0, 1], [4, 5]], [[2, 3]], 1)
        pulled = pullback_decomposition(ident, d, 1)
        assert [
            [list(p.points) for p in fam] for fam in pulled.splits[0]
        ] == [[[0, 1], [4, 5]], [[2, 3]]]

    def test_upper_too_small_rejected(self, p10):
        p5 = generate(GeneratorSpec("path", n=5))
        f = halving_map(p10, p5)
        target = RDecomposition(
            MetricFamily(p5, (whole(p5),)), Fraction(1),
            (((sub(p5, [0]), sub(p5, [3, 4])), (sub(p5, [1, 2]),)),),
        )
        with pytest.raises(ControlError):
            pullback_decomposition(f, target, 4)  # upper(4) = 2.5 > target scale 1

    def test_pullback_chain_mesh_bound(self, p10):
        p5 = generate(GeneratorSpec("path", n=5))
        f = halving_map(p10, p5)
        step = RDecomposition(
            MetricFamily(p5, (whole(p5),)), Fraction(2),
            (((sub(p5, [0, 1]), sub(p5, [4])), (sub(p5, [2, 3]),)),), partition=True,
        )
        target = DecompositionChain(p5, (Fraction(2),), (step,), Fraction(1), True)
        assert verify_chain(target).ok and mesh(target.final_family()) == 1
        pulled = pullback_chain(f, target, [2])
        assert pulled.bound == 3  # sup{t : (t-1)/2 <= 1}
        assert pulled.complete
        assert verify_chain(pulled).ok

    def test_pullback_chain_scale_error_names_step(self, p10):
        p5 = generate(GeneratorSpec("path", n=5))
        f = halving_map(p10, p5)
        target = solve_chain(p5, [1, 2, 4, 8], 0, "peel", max_steps=4)
        assert target.depth == 4
        with pytest.raises(ControlError) as err:
            pullback_chain(f, target, [1, 100, 200, 400])
        assert "step 2" in str(err.value)


@settings(max_examples=40, deadline=None)
@given(
    seed=st.integers(0, 5000),
    n=st.integers(4, 24),
    strategy=st.sampled_from(["components", "radial", "peel"]),
)
def test_solver_outputs_always_verify(seed, n, strategy):
    space = random_space(seed, n)
    chain = solve_chain(space, [1, 2, 4, 8], 1, strategy, max_steps=6)
    assert verify_chain(chain).ok
