"""Command-line entry point.

Exit codes: 0 ok, 2 usage, 3 generation failure, 4 solver failure,
5 validation failure.
"""

from __future__ import annotations

import json
import sys
from fractions import Fraction

import click

from .decomp import (
    CoverFailure,
    amalgamate_play,
    asc_cover,
    decompose_member,
    RDecomposition,
    solve_chain,
    verify_chain,
    verify_cover,
    verify_decomposition,
)
from .errors import CoarseKitError, MoveRejected, StageAssertionFailure
from .games import (
    ASC,
    FDC,
    GameSession,
    ONGOING,
    apply_move,
    asc_cover_sequence,
    auto_move,
    new_session,
    parse_challenger,
    parse_responder,
    replay,
    submit_challenge,
    submit_response,
    transcript,
)
from .metric_core import MetricFamily, FiniteMetricSpace, mesh, sub, whole
from .rational import as_fraction, as_scale, format_rational
from .serialize import (
    check_artifact,
    chain_to_json,
    cover_to_json,
    decomposition_to_json,
    dump_artifact,
    family_from_json,
    load_artifact,
    space_from_json,
    space_to_json,
    transcript_to_json,
    witness_report_to_json,
)
from .spacegen import GeneratorSpec, generate
from .witness import property_a_check

EXIT_GENERATION = 3
EXIT_SOLVER = 4
EXIT_VALIDATION = 5


def _load_space(path: str) -> FiniteMetricSpace:
    try:
        return space_from_json(load_artifact(path))
    except (OSError, json.JSONDecodeError, CoarseKitError) as e:
        click.echo(f"error: cannot load space {path}: {e}", err=True)
        sys.exit(EXIT_VALIDATION)


def _scale(value: str, flag: str) -> Fraction:
    try:
        return as_scale(value)
    except CoarseKitError:
        raise click.UsageError(f"{flag} must be a positive rational, got {value!r}")


def _schedule(text: str) -> list[Fraction]:
    try:
        out = [as_scale(t) for t in text.split(",") if t.strip()]
    except CoarseKitError as e:
        raise click.UsageError(f"--schedule: {e}")
    if not out:
        raise click.UsageError("--schedule must name at least one scale")
    return out


@click.group()
def main():
    """Coarse-geometry toolkit: generators, decompositions, games, witnesses."""


@main.command()
@click.option("--kind", required=True,
              type=click.Choice(["path", "grid", "tree", "uniform", "sum-ball-a", "sum-ball-b", "random-graph"]))
@click.option("--n", type=int, default=None, help="points (path/uniform/random-graph)")
@click.option("--side", type=int, default=None, help="grid side length")
@click.option("--dim", type=int, default=2, help="grid dimension")
@click.option("--branching", type=int, default=None)
@click.option("--depth", type=int, default=None)
@click.option("--radius", type=int, default=None, help="sum-ball radius")
@click.option("--p", "prob", default=None, help="edge probability p/q (random-graph)")
@click.option("--seed", type=int, default=None)
@click.option("--name", default=None)
@click.option("-o", "--output", required=True, type=click.Path())
def gen(kind, n, side, dim, branching, depth, radius, prob, seed, name, output):
    """Generate a space and write its JSON file."""
    kind = kind.replace("-", "_")
    if kind == "random_graph" and seed is None:
        raise click.UsageError("--seed is required for random-graph")
    try:
        spec = GeneratorSpec(
            kind=kind, n=n, side=side, dim=dim, branching=branching, depth=depth,
            radius=radius, p=as_fraction(prob) if prob is not None else None,
            seed=seed, name=name,
        )
        space = generate(spec)
    except (CoarseKitError, TypeError, ValueError) as e:
        click.echo(f"generation failed: {e}", err=True)
        sys.exit(EXIT_GENERATION)
    dump_artifact(space_to_json(space), output)
    click.echo(f"wrote {space.name} ({space.size} points) to {output}")


@main.command()
@click.option("--space", "space_path", required=True, type=click.Path(exists=True))
@click.option("--r", "scale", required=True)
@click.option("--strategy", default="radial",
              type=click.Choice(["components", "radial", "peel", "exhaustive"]))
@click.option("--base", type=int, default=None, help="radial base point")
@click.option("-o", "--output", required=True, type=click.Path())
def decompose(space_path, scale, strategy, base, output):
    """Split the whole space once at scale R and verify the result."""
    R = _scale(scale, "--r")
    space = _load_space(space_path)
    kwargs = {"base": base} if strategy == "radial" and base is not None else {}
    try:
        split = decompose_member(whole(space), R, strategy, **kwargs)
    except CoarseKitError as e:
        click.echo(f"solver failed: {e}", err=True)
        sys.exit(EXIT_SOLVER)
    d = RDecomposition(MetricFamily(space, (whole(space),)), R, (split,), partition=True)
    verdict = verify_decomposition(d)
    dump_artifact(decomposition_to_json(d), output)
    click.echo(f"decomposition: {verdict.describe()}")
    if not verdict.ok:
        sys.exit(EXIT_SOLVER)


@main.command()
@click.option("--space", "space_path", required=True, type=click.Path(exists=True))
@click.option("--schedule", required=True, help="comma-separated scales, e.g. 4,16")
@click.option("--bound", required=True)
@click.option("--strategy", default="radial",
              type=click.Choice(["components", "radial", "peel", "exhaustive"]))
@click.option("--max-steps", type=int, default=32)
@click.option("--allow-partial", is_flag=True)
@click.option("-o", "--output", required=True, type=click.Path())
def chain(space_path, schedule, bound, strategy, max_steps, allow_partial, output):
    """Solve a decomposition chain down to mesh <= bound."""
    scales = _schedule(schedule)
    B = as_fraction(bound)
    space = _load_space(space_path)
    try:
        c = solve_chain(space, scales, B, strategy, max_steps=max_steps)
    except CoarseKitError as e:
        click.echo(f"solver failed: {e}", err=True)
        sys.exit(EXIT_SOLVER)
    verdict = verify_chain(c)
    dump_artifact(chain_to_json(c), output)
    click.echo(
        f"chain: depth {c.depth}, {'complete' if c.complete else 'partial'}, "
        f"verifier {verdict.describe()}"
    )
    if not verdict.ok or (not c.complete and not allow_partial):
        sys.exit(EXIT_SOLVER)


@main.command()
@click.option("--space", "space_path", required=True, type=click.Path(exists=True))
@click.option("--schedule", required=True)
@click.option("--bound", required=True)
@click.option("--strategy", default="greedy-components",
              type=click.Choice(["greedy-components", "exhaustive"]))
@click.option("--allow-partial", is_flag=True)
@click.option("-o", "--output", required=True, type=click.Path())
def cover(space_path, schedule, bound, strategy, allow_partial, output):
    """Build R_i-disjoint families of mesh <= bound covering the space."""
    scales = _schedule(schedule)
    B = as_fraction(bound)
    space = _load_space(space_path)
    try:
        result = asc_cover(space, scales, B, strategy.replace("-", "_"))
    except CoarseKitError as e:
        click.echo(f"solver failed: {e}", err=True)
        sys.exit(EXIT_SOLVER)
    if isinstance(result, CoverFailure):
        click.echo(f"cover failed; uncovered points: {list(result.uncovered)}", err=True)
        if allow_partial:
            dump_artifact(
                cover_to_json_partial(result), output
            )
        sys.exit(EXIT_SOLVER)
    verdict = verify_cover(result)
    dump_artifact(cover_to_json(result), output)
    click.echo(f"cover: {len(result.covers)} families, verifier {verdict.describe()}")
    if not verdict.ok:
        sys.exit(EXIT_SOLVER)


def cover_to_json_partial(f: CoverFailure) -> dict:
    return {
        "space": space_to_json(f.space),
        "schedule": [format_rational(r) for r in f.schedule],
        "bound": format_rational(f.bound),
        "covers": [[list(m.points) for m in U.members] for U in f.covers],
        "uncovered": list(f.uncovered),
    }


@main.command()
@click.option("--space", "space_path", required=True, type=click.Path(exists=True))
@click.option("--kind", required=True, type=click.Choice([FDC, ASC]))
@click.option("--bound", required=True)
@click.option("--challenger", default="doubling")
@click.option("--defender", default=None, help="fdc default: radial; asc default: greedy")
@click.option("--max-rounds", type=int, default=64)
@click.option("--seed", type=int, default=0)
@click.option("--interactive", "interactive_role", default=None,
              type=click.Choice(["challenger", "defender"]))
@click.option("--verify-amalgam", is_flag=True, help="run the amalgamation stage checks after an asc win")
@click.option("--transcript", "transcript_out", required=False, type=click.Path())
def game(space_path, kind, bound, challenger, defender, max_rounds, seed,
         interactive_role, verify_amalgam, transcript_out):
    """Play a decomposition game, machine vs machine or interactively."""
    B = as_fraction(bound)
    space = _load_space(space_path)
    if defender is None:
        defender = "radial" if kind == FDC else "greedy"
    try:
        chal = parse_challenger(challenger)
        resp = parse_responder(defender, kind, seed)
    except ValueError as e:
        raise click.UsageError(str(e))
    try:
        s = new_session(space, kind, B, max_rounds)
    except (ValueError, CoarseKitError) as e:
        raise click.UsageError(str(e))

    if interactive_role is None:
        while s.status == ONGOING:
            actor = chal if s.pending is None else resp
            move = auto_move(s, actor)
            s = apply_move(s, move)
    else:
        s = _repl(s, interactive_role, chal, resp)

    click.echo(f"status: {s.status} after {len(s.schedule)} challenge(s)")
    if transcript_out:
        dump_artifact(transcript_to_json(transcript(s)), transcript_out)
        click.echo(f"transcript written to {transcript_out}")
    if verify_amalgam and kind == ASC:
        if s.status != "player_i_won":
            click.echo("amalgamation check skipped: player I did not win", err=True)
            sys.exit(EXIT_SOLVER)
        try:
            result = amalgamate_play(asc_cover_sequence(s))
        except StageAssertionFailure as e:
            click.echo(f"amalgamation stage failure: {e}", err=True)
            sys.exit(EXIT_SOLVER)
        click.echo(
            f"amalgamation: {len(result.stages)} stage(s) verified, "
            f"final cover has {len(result.final)} member(s)"
        )


def _parse_pieces(text: str, space: FiniteMetricSpace) -> tuple:
    """Piece list syntax: [0-4|10-11] or 0-4|10-11 ; empty -> ()."""
    text = text.strip().strip("[]").strip()
    if not text:
        return ()
    pieces = []
    for chunk in text.split("|"):
        pts: list[int] = []
        for token in chunk.split(","):
            token = token.strip()
            if not token:
                continue
            if "-" in token:
                a, b = token.split("-")
                pts.extend(range(int(a), int(b) + 1))
            else:
                pts.append(int(token))
        pieces.append(sub(space, pts))
    return tuple(pieces)


def _repl(s: GameSession, role: str, chal, resp) -> GameSession:
    """Line-oriented interactive play; illegal moves re-prompt, never corrupt state."""
    human_is_challenger = role == "challenger"
    click.echo(f"interactive {s.kind} game on {s.space.name}; bound {format_rational(s.bound)}")
    click.echo("commands: challenge <R> | respond [pieces] / [pieces] | split <i>: ... | show | auto | quit")
    pending_splits: dict[int, tuple] = {}
    while s.status == ONGOING:
        human_turn = (s.pending is None) == human_is_challenger
        if not human_turn:
            move = auto_move(s, resp if s.pending is not None else chal)
            s = apply_move(s, move)
            if move.challenge is not None:
                click.echo(f"machine challenges {format_rational(move.challenge)}")
            else:
                click.echo("machine responds")
            continue
        try:
            line = click.prompt(f"[round {len(s.schedule) + (0 if s.pending else 1)}] {s.turn}", type=str)
        except (EOFError, click.Abort):
            break
        line = line.strip()
        if not line:
            continue
        try:
            if line == "quit":
                break
            elif line == "show":
                click.echo(_render_state(s))
            elif line == "auto":
                actor = chal if s.pending is None else resp
                s = apply_move(s, auto_move(s, actor))
            elif line.startswith("challenge"):
                s = submit_challenge(s, line.split(None, 1)[1])
                pending_splits = {}
            elif line.startswith("respond") and s.kind == ASC:
                fam_text = line[len("respond"):].strip()
                members = _parse_pieces(fam_text.replace("/", "|"), s.space)
                s = submit_response(s, MetricFamily(s.space, members))
            elif line.startswith("split") and s.kind == FDC:
                head, _, body = line.partition(":")
                idx = int(head.split()[1])
                left, _, right = body.partition("/")
                pending_splits[idx] = (_parse_pieces(left, s.space), _parse_pieces(right, s.space))
                fam = s.family
                splits = []
                ready = True
                for i, member in enumerate(fam.members):
                    if member.diam() <= s.bound:
                        splits.append(((member,), ()))
                    elif i in pending_splits:
                        splits.append(pending_splits[i])
                    else:
                        ready = False
                        break
                if ready:
                    s = submit_response(s, RDecomposition(fam, s.pending, tuple(splits), partition=True))
                    pending_splits = {}
                else:
                    click.echo("split recorded; waiting for the remaining members")
            else:
                click.echo("unrecognized command")
        except (MoveRejected, CoarseKitError, ValueError, IndexError) as e:
            click.echo(f"rejected: {e}")
    return s


def _render_state(s: GameSession) -> str:
    lines = [f"status: {s.status}; challenges: {[format_rational(r) for r in s.schedule]}"]
    if s.kind == FDC and s.family is not None:
        lines.append(f"family mesh {format_rational(mesh(s.family))}:")
        for i, m in enumerate(s.family.members):
            lines.append(f"  member {i}: {list(m.points)}")
    if s.kind == ASC:
        lines.append(f"uncovered: {list(s.uncovered)}")
    return "\n".join(lines)


@main.command()
@click.option("--space", "space_path", required=True, type=click.Path(exists=True))
@click.option("--eps", required=True)
@click.option("--r", "scale", required=True)
@click.option("--n", "n_fixed", type=int, default=None, help="evaluate a single n")
@click.option("--n-max", type=int, default=8)
@click.option("--strategy", default="radial")
@click.option("-o", "--output", type=click.Path(), default=None)
def witness(space_path, eps, scale, n_fixed, n_max, strategy, output):
    """Find n whose witness measures vary less than eps below distance R."""
    eps_q = _scale(eps, "--eps")
    R = _scale(scale, "--r")
    space = _load_space(space_path)
    try:
        if n_fixed is not None:
            result = property_a_check(space, eps_q, R, strategy, n_max=n_fixed)
            ok = result.ok and result.n == n_fixed
        else:
            result = property_a_check(space, eps_q, R, strategy, n_max=n_max)
            ok = result.ok
    except CoarseKitError as e:
        click.echo(f"witness pipeline failed: {e}", err=True)
        sys.exit(EXIT_SOLVER)
    if result.report is not None and output:
        dump_artifact(witness_report_to_json(result.report), output)
    if not ok:
        click.echo(
            f"no n <= {n_fixed or n_max} achieves variation < {format_rational(eps_q)}; "
            f"best {result.max_variation:.6g} at n={result.n}",
            err=True,
        )
        sys.exit(EXIT_SOLVER)
    click.echo(
        f"n={result.n}, support radius S={format_rational(result.support_radius)}, "
        f"max variation {result.max_variation:.6g} < {format_rational(eps_q)}"
    )


@main.command()
@click.option("--file", "path", required=True, type=click.Path(exists=True))
@click.option("--space", "space_path", type=click.Path(exists=True), default=None,
              help="ambient space for artifacts that reference one by name")
def check(path, space_path):
    """Validate any artifact file; exit 0 iff valid."""
    try:
        doc = load_artifact(path)
    except (OSError, json.JSONDecodeError) as e:
        click.echo(f"invalid: cannot parse {path}: {e}", err=True)
        sys.exit(EXIT_VALIDATION)
    space = _load_space(space_path) if space_path else None
    result = check_artifact(doc, space)
    click.echo(result.describe())
    if not result.ok:
        sys.exit(EXIT_VALIDATION)


@main.command()
@click.option("--addr", default="127.0.0.1")
@click.option("--port", type=int, default=8008)
@click.option("--state-dir", type=click.Path(), default=None)
def serve(addr, port, state_dir):
    """Run the HTTP game service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(state_dir=state_dir), host=addr, port=port)


if __name__ == "__main__":
    main()
