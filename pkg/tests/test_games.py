import random
from dataclasses import replace
from fractions import Fraction

import pytest

from coarsekit.decomp import RDecomposition, amalgamate_play, verify_chain
from coarsekit.errors import MoveRejected
from coarsekit.games import (
    ASC,
    FDC,
    Move,
    apply_move,
    asc_cover_sequence,
    auto_move,
    doubling_challenger,
    fdc_chain,
    fixed_challenger,
    geometric_challenger,
    greedy_components_responder,
    greedy_packing_responder,
    mesh_adversary_challenger,
    new_session,
    parse_challenger,
    parse_responder,
    replay,
    run_game,
    submit_challenge,
    submit_response,
    transcript,
)
from coarsekit.metric_core import MetricFamily, family, is_cover, mesh, sub, whole
from coarsekit.spacegen import GeneratorSpec, generate
from conftest import random_space


class TestNewSession:
    def test_immediate_win_when_bounded(self, p6):
        assert new_session(p6, FDC, 10, 5).status == "defender_won"

    def test_ongoing_with_tight_bound(self, p6):
        s = new_session(p6, FDC, 1, 5)
        assert s.status == "ongoing" and s.turn == "challenger"

    def test_asc_starts_with_player_ii(self, p6):
        s = new_session(p6, ASC, 1, 5)
        assert s.status == "ongoing" and s.turn == "player_ii"

    def test_invalid_params(self, p6):
        with pytest.raises(ValueError):
            new_session(p6, FDC, -1, 5)
        with pytest.raises(ValueError):
            new_session(p6, FDC, 1, 0)
        with pytest.raises(ValueError):
            new_session(p6, "chess", 1, 5)


class TestMoves:
    def test_fdc_scripted_win(self, p12):
        s = new_session(p12, FDC, 4, 5)
        s = submit_challenge(s, 4)
        d = RDecomposition(
            s.family, Fraction(4),
            (((sub(p12, range(5)), sub(p12, [10, 11])), (sub(p12, range(5, 10)),)),),
            partition=True,
        )
        s = submit_response(s, d)
        assert s.status == "defender_won"
        assert verify_chain(fdc_chain(s)).ok

    def test_asc_scripted_win(self, p6):
        s = new_session(p6, ASC, 1, 5)
        s = submit_challenge(s, 1)
        s = submit_response(s, family(p6, [[0, 1], [3, 4]]))
        s = submit_challenge(s, 2)
        s = submit_response(s, family(p6, [[2], [5]]))
        assert s.status == "player_i_won"

    def test_disjointness_rejected_with_witness(self, p6):
        s = submit_challenge(new_session(p6, ASC, 1, 5), 1)
        with pytest.raises(MoveRejected) as err:
            submit_response(s, family(p6, [[0], [1]]))
        assert "[0]" in str(err.value) and "[1]" in str(err.value)

    def test_mesh_over_bound_rejected(self, p6):
        s = submit_challenge(new_session(p6, ASC, 1, 5), 1)
        with pytest.raises(MoveRejected):
            submit_response(s, family(p6, [[0, 1, 2]]))

    def test_out_of_turn_rejected(self, p6):
        s = new_session(p6, ASC, 1, 5)
        with pytest.raises(MoveRejected):
            submit_response(s, family(p6, [[0]]))
        s = submit_challenge(s, 1)
        with pytest.raises(MoveRejected):
            submit_challenge(s, 2)

    def test_asc_challenges_strictly_increase(self, p6):
        s = submit_challenge(new_session(p6, ASC, 1, 5), 2)
        s = submit_response(s, MetricFamily(p6, ()))
        with pytest.raises(MoveRejected):
            submit_challenge(s, 2)

    def test_fdc_non_monotone_allowed_without_flag(self, p6):
        s = submit_challenge(new_session(p6, FDC, 0, 5), 4)
        s = submit_response(s, auto_move(s, parse_responder("peel", FDC)).response)
        s = submit_challenge(s, 2)  # smaller is fine by default
        assert s.pending == 2

    def test_fdc_monotone_flag_enforced(self, p6):
        s = new_session(p6, FDC, 0, 5, force_monotone=True)
        s = submit_challenge(s, 4)
        s = submit_response(s, auto_move(s, parse_responder("peel", FDC)).response)
        with pytest.raises(MoveRejected):
            submit_challenge(s, 2)

    def test_wrong_scale_response_rejected(self, p12):
        s = submit_challenge(new_session(p12, FDC, 4, 5), 4)
        d = RDecomposition(
            s.family, Fraction(2),
            (((sub(p12, range(5)), sub(p12, [10, 11])), (sub(p12, range(5, 10)),)),),
        )
        with pytest.raises(MoveRejected):
            submit_response(s, d)

    def test_move_limit(self, p6):
        s = new_session(p6, FDC, 0, 1)
        s = submit_challenge(s, 1)
        s = submit_response(s, auto_move(s, parse_responder("stall", FDC)).response)
        assert s.status == "move_limit_reached"


class TestStrategies:
    def test_mesh_adversary_spec_example(self, p6):
        # after a family of mesh 3 with previous challenge 2, the next is 5
        s = new_session(p6, ASC, 3, 8)
        s = submit_challenge(s, 2)
        s = submit_response(s, family(p6, [[0, 1, 2, 3]]))  # mesh 3
        assert mesh_adversary_challenger().propose(s) == 5

    def test_mesh_adversary_zero_mesh_fallback(self, p6):
        s = new_session(p6, ASC, 3, 8)
        s = submit_challenge(s, 2)
        s = submit_response(s, MetricFamily(p6, ()))
        assert mesh_adversary_challenger().propose(s) == 3

    def test_geometric_spec_example(self, p6):
        ch = geometric_challenger(2)
        s = new_session(p6, ASC, 3, 8)
        for expected in (8, 32):
            assert ch.propose(s) == expected
            s = submit_challenge(s, ch.propose(s))
            s = submit_response(s, MetricFamily(p6, ()))
        assert ch.propose(s) == 128

    def test_doubling(self, p6):
        ch = doubling_challenger(4)
        s = new_session(p6, FDC, 0, 8)
        assert ch.propose(s) == 4

    def test_stall_never_changes_mesh(self, p6):
        s = new_session(p6, FDC, 1, 3)
        stall = parse_responder("stall", FDC)
        before = mesh(s.family)
        s = submit_challenge(s, 1)
        s = submit_response(s, auto_move(s, stall).response)
        assert mesh(s.family) == before

    def test_determinism(self, grid8):
        a = run_game(grid8, ASC, 4, mesh_adversary_challenger(2), greedy_packing_responder(11), 200)
        b = run_game(grid8, ASC, 4, mesh_adversary_challenger(2), greedy_packing_responder(11), 200)
        assert a == b

    def test_parse_strategies(self):
        assert parse_challenger("fixed:4,16").name == "fixed:4,16"
        assert parse_challenger("mesh-adversary:3").name == "mesh_adversary:3"
        with pytest.raises(ValueError):
            parse_challenger("nope")
        with pytest.raises(ValueError):
            parse_responder("greedy", FDC)

    def test_greedy_components_wins_with_big_bound(self, p6):
        s = run_game(p6, ASC, 5, doubling_challenger(1), greedy_components_responder(), 10)
        assert s.status == "player_i_won"


class TestGamesEndToEnd:
    def test_peel_beats_every_challenger(self):
        space = random_space(5, 20)
        peel = parse_responder("peel", FDC)
        for chal in (
            fixed_challenger([1, 2, 3]),
            doubling_challenger(),
            mesh_adversary_challenger(),
            geometric_challenger(1),
        ):
            s = run_game(space, FDC, 0, chal, peel, max_rounds=space.size + 1)
            assert s.status == "defender_won"
            assert len(s.schedule) <= space.size

    def test_accepted_fdc_responses_keep_chain_valid(self):
        space = random_space(9, 15)
        s = new_session(space, FDC, 1, 20)
        chal = doubling_challenger()
        resp = parse_responder("radial", FDC)
        while s.status == "ongoing":
            actor = chal if s.pending is None else resp
            s = apply_move(s, auto_move(s, actor))
            if s.pending is None and s.chain_steps:
                assert verify_chain(fdc_chain(s)).ok

    def test_asc_win_then_amalgamation(self, grid8):
        s = run_game(grid8, ASC, 4, mesh_adversary_challenger(2), greedy_packing_responder(3), 200)
        assert s.status == "player_i_won"
        res = amalgamate_play(asc_cover_sequence(s))
        assert is_cover([res.final], whole(grid8)).ok


class TestTranscripts:
    def test_round_trip(self, p12):
        s = run_game(p12, FDC, 4, doubling_challenger(4), parse_responder("radial", FDC))
        assert replay(transcript(s)) == s

    def test_tampered_scale_ordering_rejected(self, p6):
        s = new_session(p6, ASC, 1, 5)
        s = submit_challenge(s, 1)
        s = submit_response(s, family(p6, [[0, 1], [3, 4]]))
        s = submit_challenge(s, 2)
        s = submit_response(s, family(p6, [[2], [5]]))
        t = transcript(s)
        bad_moves = list(t.moves)
        assert bad_moves[2].challenge == 2
        bad_moves[2] = replace(bad_moves[2], challenge=Fraction(1, 100))
        bad = replace(t, moves=tuple(bad_moves))
        with pytest.raises(MoveRejected) as err:
            replay(bad)
        assert "move 3" in str(err.value)

    def test_empty_transcript_is_fresh_session(self, p6):
        s = new_session(p6, ASC, 1, 5)
        assert replay(transcript(s)) == s
