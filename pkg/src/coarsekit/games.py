"""The two metric games: decomposition defense (fdc) and scale-cover play (asc).

Sessions are immutable values; submit_challenge / submit_response return new
sessions and raise MoveRejected (state untouched) on illegal moves. Machine
strategies, the CLI REPL, and the HTTP service all go through the same two
transition functions, so legality lives in exactly one place.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable

from .decomp import (
    CoverSequence,
    DecompositionChain,
    RDecomposition,
    Split,
    decompose_member,
    verify_decomposition,
)
from .errors import MoveRejected, ScheduleError
from .metric_core import (
    MetricFamily,
    FiniteMetricSpace,
    Subspace,
    is_r_disjoint,
    mesh,
    neighborhood,
    r_components,
    set_distance,
    singletons,
    sub,
    whole,
)
from .rational import as_fraction, as_scale

FDC = "fdc"
ASC = "asc"

ONGOING = "ongoing"
DEFENDER_WON = "defender_won"
PLAYER_I_WON = "player_i_won"
MOVE_LIMIT = "move_limit_reached"


@dataclass(frozen=True)
class Move:
    round: int
    actor: str
    challenge: Fraction | None = None
    response: RDecomposition | MetricFamily | None = None


@dataclass(frozen=True)
class GameSession:
    kind: str
    space: FiniteMetricSpace
    bound: Fraction
    max_rounds: int
    force_monotone: bool = False
    moves: tuple[Move, ...] = ()
    status: str = ONGOING
    pending: Fraction | None = None
    family: MetricFamily | None = None          # fdc: current family
    chain_steps: tuple[RDecomposition, ...] = ()  # fdc: accepted decompositions
    covers: tuple[MetricFamily, ...] = ()        # asc: accepted families
    schedule: tuple[Fraction, ...] = ()          # accepted challenges
    uncovered: tuple[int, ...] = ()              # asc

    @property
    def rounds_played(self) -> int:
        return len(self.schedule) if self.pending is None else len(self.schedule) - 1

    @property
    def challenger_name(self) -> str:
        return "challenger" if self.kind == FDC else "player_ii"

    @property
    def responder_name(self) -> str:
        return "defender" if self.kind == FDC else "player_i"

    @property
    def turn(self) -> str | None:
        if self.status != ONGOING:
            return None
        return self.challenger_name if self.pending is None else self.responder_name


def new_session(
    space: FiniteMetricSpace,
    kind: str,
    bound,
    max_rounds: int,
    force_monotone: bool = False,
) -> GameSession:
    if kind not in (FDC, ASC):
        raise ValueError(f"kind must be {FDC!r} or {ASC!r}")
    bound = as_fraction(bound)
    if bound < 0:
        raise ValueError("bound must be >= 0")
    if max_rounds < 1:
        raise ValueError("max_rounds must be >= 1")
    s = GameSession(
        kind=kind,
        space=space,
        bound=bound,
        max_rounds=max_rounds,
        force_monotone=force_monotone,
        family=MetricFamily(space, (whole(space),)) if kind == FDC else None,
        uncovered=tuple(range(space.size)) if kind == ASC else (),
    )
    if kind == FDC and space.diameter <= bound:
        s = replace(s, status=DEFENDER_WON)
    return s


def submit_challenge(s: GameSession, R) -> GameSession:
    if s.status != ONGOING:
        raise MoveRejected(f"game is over ({s.status})")
    if s.pending is not None:
        raise MoveRejected(f"not the {s.challenger_name}'s turn")
    try:
        R = as_scale(R)
    except Exception as e:
        raise MoveRejected(str(e))
    if s.schedule and (s.kind == ASC or s.force_monotone) and R <= s.schedule[-1]:
        raise MoveRejected(f"challenge {R} must exceed previous {s.schedule[-1]}")
    move = Move(round=len(s.schedule) + 1, actor=s.challenger_name, challenge=R)
    return replace(s, pending=R, schedule=s.schedule + (R,), moves=s.moves + (move,))


def submit_response(s: GameSession, payload) -> GameSession:
    if s.status != ONGOING:
        raise MoveRejected(f"game is over ({s.status})")
    if s.pending is None:
        raise MoveRejected(f"not the {s.responder_name}'s turn")
    if s.kind == FDC:
        s = _apply_fdc_response(s, payload)
    else:
        s = _apply_asc_response(s, payload)
    if s.status == ONGOING and len(s.schedule) >= s.max_rounds:
        s = replace(s, status=MOVE_LIMIT)
    return s


def _apply_fdc_response(s: GameSession, d: RDecomposition) -> GameSession:
    if not isinstance(d, RDecomposition):
        raise MoveRejected("fdc response must be a decomposition")
    if d.R != s.pending:
        raise MoveRejected(f"response scale {d.R} differs from challenge {s.pending}")
    if _members_key(d.parent) != _members_key(s.family):
        raise MoveRejected("response parent differs from the current family")
    verdict = verify_decomposition(d)
    if not verdict.ok:
        err = MoveRejected(f"invalid decomposition: {verdict.describe()}", verdict)
        err.witness_pair = next(
            ([list(p) for p in v.pieces] for v in verdict.violations if v.pieces), None
        )
        raise err
    fam = d.pieces()
    move = Move(round=len(s.schedule), actor=s.responder_name, response=d)
    s = replace(
        s,
        pending=None,
        family=fam,
        chain_steps=s.chain_steps + (d,),
        moves=s.moves + (move,),
    )
    if mesh(fam) <= s.bound:
        s = replace(s, status=DEFENDER_WON)
    return s


def _apply_asc_response(s: GameSession, U: MetricFamily) -> GameSession:
    if not isinstance(U, MetricFamily):
        raise MoveRejected("asc response must be a metric family")
    if U.space is not s.space:
        raise MoveRejected("response family lives in a different space")
    if len(U):
        dv = is_r_disjoint(U, s.pending)
        if not dv.ok:
            i, j = dv.witness
            err = MoveRejected(
                f"family not {s.pending}-disjoint: members {sorted(U.members[i].points)} and "
                f"{sorted(U.members[j].points)} at distance {dv.distance}",
                dv,
            )
            err.witness_pair = [list(U.members[i].points), list(U.members[j].points)]
            raise err
    m = mesh(U)
    if m > s.bound:
        raise MoveRejected(f"family mesh {m} exceeds bound {s.bound}")
    covered = U.union_points()
    uncovered = tuple(p for p in s.uncovered if p not in covered)
    move = Move(round=len(s.schedule), actor=s.responder_name, response=U)
    s = replace(
        s,
        pending=None,
        covers=s.covers + (U,),
        uncovered=uncovered,
        moves=s.moves + (move,),
    )
    if not uncovered:
        s = replace(s, status=PLAYER_I_WON)
    return s


def _members_key(F: MetricFamily):
    return tuple(sorted(m.points for m in F.members))


def fdc_chain(s: GameSession) -> DecompositionChain:
    """The accepted fdc steps as a chain (requires a monotone schedule)."""
    if s.kind != FDC:
        raise ValueError("not an fdc session")
    schedule = s.schedule[: len(s.chain_steps)]
    if any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise ScheduleError("session schedule is not strictly increasing")
    final = s.chain_steps[-1].pieces() if s.chain_steps else MetricFamily(s.space, (whole(s.space),))
    return DecompositionChain(
        s.space, schedule, s.chain_steps, s.bound, mesh(final) <= s.bound
    )


def asc_cover_sequence(s: GameSession) -> CoverSequence:
    if s.kind != ASC:
        raise ValueError("not an asc session")
    return CoverSequence(s.space, s.schedule[: len(s.covers)], s.covers, s.bound)


# ---------------------------------------------------------------------------
# machine strategies
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Challenger:
    name: str
    fn: Callable[[GameSession], Fraction]

    def propose(self, s: GameSession) -> Fraction:
        return as_scale(self.fn(s))


@dataclass(frozen=True)
class Responder:
    name: str
    fn: Callable[[GameSession], RDecomposition | MetricFamily]

    def respond(self, s: GameSession):
        return self.fn(s)


def fixed_challenger(scales) -> Challenger:
    fixed = [as_scale(x) for x in scales]

    def fn(s: GameSession) -> Fraction:
        i = len(s.schedule)
        if i < len(fixed):
            return fixed[i]
        return (s.schedule[-1] if s.schedule else fixed[-1]) * 2

    return Challenger(f"fixed:{','.join(str(x) for x in fixed)}", fn)


def doubling_challenger(start=1) -> Challenger:
    start = as_scale(start)

    def fn(s: GameSession) -> Fraction:
        return start if not s.schedule else s.schedule[-1] * 2

    return Challenger(f"doubling:{start}", fn)


def mesh_adversary_challenger(start=1) -> Challenger:
    """Raise the scale by the mesh of the opponent's last family (+1 if zero)."""
    start = as_scale(start)

    def fn(s: GameSession) -> Fraction:
        if not s.schedule:
            return start
        last = s.covers[-1] if s.kind == ASC else s.family
        m = mesh(last) if last is not None else Fraction(0)
        return s.schedule[-1] + (m if m > 0 else 1)

    return Challenger(f"mesh_adversary:{start}", fn)


def geometric_challenger(n=1) -> Challenger:
    n = as_scale(n)

    def fn(s: GameSession) -> Fraction:
        return Fraction(4) ** (len(s.schedule) + 1) * n

    return Challenger(f"geometric:{n}", fn)


def _fdc_responder(name: str, strategy: str) -> Responder:
    def fn(s: GameSession) -> RDecomposition:
        splits: list[Split] = []
        for member in s.family.members:
            if member.diam() <= s.bound:
                splits.append(((member,), ()))
            elif strategy == "stall":
                splits.append(((member,), ()))
            else:
                splits.append(decompose_member(member, s.pending, strategy))
        return RDecomposition(s.family, s.pending, tuple(splits), partition=True)

    return Responder(name, fn)


def greedy_packing_responder(seed: int = 0) -> Responder:
    """Cover uncovered points with balls of radius B/2, kept > R apart.

    Always covers at least one point, so player I wins every finite asc game
    against any challenger given enough rounds.
    """

    def fn(s: GameSession) -> MetricFamily:
        space = s.space
        W = list(s.uncovered)
        if not W:
            return MetricFamily(space, ())
        rng = random.Random(f"{seed}:{len(s.schedule)}")
        order = rng.sample(W, len(W))
        radius = s.bound / 2
        wset = set(W)
        R = s.pending
        tiles: list[Subspace] = []
        taken: set[int] = set()
        for c in order:
            if c in taken:
                continue
            ball = (
                set(neighborhood(sub(space, [c]), radius, "closed").points) & wset
                if radius > 0
                else {c}
            )
            tile = sub(space, sorted(ball))
            if all(set_distance(tile, t) > R for t in tiles):
                tiles.append(tile)
                taken.update(ball)
        return MetricFamily(space, tuple(tiles))

    return Responder(f"greedy:{seed}", fn)


def greedy_components_responder() -> Responder:
    """Admit the R-components of the uncovered set that fit under the bound."""

    def fn(s: GameSession) -> MetricFamily:
        space = s.space
        if not s.uncovered:
            return MetricFamily(space, ())
        comps = r_components(singletons(sub(space, s.uncovered)), s.pending)
        return MetricFamily(space, tuple(c for c in comps.members if c.diam() <= s.bound))

    return Responder("greedy_components", fn)


def parse_challenger(spec: str) -> Challenger:
    name, _, arg = spec.replace("-", "_").partition(":")
    if name == "fixed":
        if not arg:
            raise ValueError("fixed challenger needs scales, e.g. fixed:4,16")
        return fixed_challenger(arg.split(","))
    if name == "doubling":
        return doubling_challenger(arg or 1)
    if name == "mesh_adversary":
        return mesh_adversary_challenger(arg or 1)
    if name == "geometric":
        return geometric_challenger(arg or 1)
    raise ValueError(f"unknown challenger {spec!r}")


def parse_responder(spec: str, kind: str, seed: int = 0) -> Responder:
    name = spec.replace("-", "_")
    if kind == FDC:
        if name in ("components", "radial", "peel", "exhaustive", "stall"):
            return _fdc_responder(name, name)
        raise ValueError(f"unknown fdc responder {spec!r}")
    if name == "greedy":
        return greedy_packing_responder(seed)
    if name == "greedy_components":
        return greedy_components_responder()
    raise ValueError(f"unknown asc responder {spec!r}")


def auto_move(s: GameSession, strategy: Challenger | Responder) -> Move:
    """Compute (without applying) the strategy's move for the current turn."""
    if s.turn == s.challenger_name and isinstance(strategy, Challenger):
        return Move(round=len(s.schedule) + 1, actor=s.challenger_name, challenge=strategy.propose(s))
    if s.turn == s.responder_name and isinstance(strategy, Responder):
        return Move(round=len(s.schedule), actor=s.responder_name, response=strategy.respond(s))
    raise MoveRejected(f"strategy {strategy.name} cannot move now (turn: {s.turn})")


def apply_move(s: GameSession, move: Move) -> GameSession:
    if move.challenge is not None:
        return submit_challenge(s, move.challenge)
    return submit_response(s, move.response)


def run_game(
    space: FiniteMetricSpace,
    kind: str,
    bound,
    challenger: Challenger,
    responder: Responder,
    max_rounds: int = 64,
    force_monotone: bool = False,
) -> GameSession:
    """Machine vs machine until the game ends or the move limit hits."""
    s = new_session(space, kind, bound, max_rounds, force_monotone)
    while s.status == ONGOING:
        actor = challenger if s.pending is None else responder
        s = apply_move(s, auto_move(s, actor))
    return s


# ---------------------------------------------------------------------------
# transcripts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Transcript:
    kind: str
    space: FiniteMetricSpace
    bound: Fraction
    max_rounds: int
    force_monotone: bool
    moves: tuple[Move, ...]
    status: str


def transcript(s: GameSession) -> Transcript:
    return Transcript(
        kind=s.kind,
        space=s.space,
        bound=s.bound,
        max_rounds=s.max_rounds,
        force_monotone=s.force_monotone,
        moves=s.moves,
        status=s.status,
    )


def replay(t: Transcript) -> GameSession:
    """Re-run every move through the legality kernel; rejects at the first bad one."""
    s = new_session(t.space, t.kind, t.bound, t.max_rounds, t.force_monotone)
    for i, move in enumerate(t.moves):
        try:
            s = apply_move(s, move)
        except MoveRejected as e:
            raise MoveRejected(f"transcript invalid at move {i + 1} (round {move.round}): {e}")
    if s.status != t.status:
        raise MoveRejected(f"replay ended {s.status}, transcript recorded {t.status}")
    return s
