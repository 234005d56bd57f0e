"""JSON schemas for every artifact, with byte-stable canonical output.

Exact fields serialize as rational strings ("p" or "p/q"); witness floats as
numbers rounded to 12 significant digits. Artifacts written by the CLI embed
the full space object so `check` can re-verify them self-contained; a bare
space name is accepted on input when the space is supplied separately.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

from .decomp import (
    CoverSequence,
    DecompositionChain,
    RDecomposition,
    Split,
    Verdict,
    verify_chain,
    verify_cover,
    verify_decomposition,
)
from .errors import CoarseKitError, MetricViolation, MoveRejected
from .games import GameSession, Move, Transcript, replay, transcript
from .metric_core import MetricFamily, FiniteMetricSpace, Subspace, check_metric, family_lint, sub
from .rational import as_fraction, format_rational
from .spacegen import graph_to_space
from .witness import VariationReport


def canonical_dumps(doc: Any) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _round_float(x: float) -> float:
    return float(f"{x:.12g}")


# ---------------------------------------------------------------------------
# spaces
# ---------------------------------------------------------------------------

def space_to_json(s: FiniteMetricSpace) -> dict:
    return {
        "name": s.name,
        "metric": {
            "type": "matrix",
            "d": [[format_rational(v) for v in row] for row in s.rows],
        },
    }


def space_from_json(doc: dict) -> FiniteMetricSpace:
    if not isinstance(doc, dict) or "metric" not in doc:
        raise MetricViolation("shape", (), "space JSON needs a 'metric' object")
    name = doc.get("name", "space")
    metric = doc["metric"]
    kind = metric.get("type")
    if kind == "matrix":
        report = check_metric(metric["d"], name=name)
        if not report.ok:
            raise MetricViolation(report.kind, report.where)
        return report.space
    if kind == "graph":
        return graph_to_space(name, int(metric["n"]), [tuple(e) for e in metric["edges"]])
    raise MetricViolation("shape", (), f"unknown metric type {kind!r}")


def _space_ref(doc: dict, fallback: FiniteMetricSpace | None) -> FiniteMetricSpace:
    ref = doc.get("space")
    if isinstance(ref, dict):
        return space_from_json(ref)
    if fallback is None:
        raise CoarseKitError(
            f"artifact references space {ref!r} by name only; supply the space file"
        )
    return fallback


# ---------------------------------------------------------------------------
# families, decompositions, chains, covers
# ---------------------------------------------------------------------------

def family_to_json(F: MetricFamily) -> dict:
    return {"space": F.space.name, "members": [list(m.points) for m in F.members]}


def family_from_json(doc: dict, space: FiniteMetricSpace) -> MetricFamily:
    return MetricFamily(space, tuple(sub(space, pts) for pts in doc["members"]))


def _split_to_json(member: Subspace, split: Split) -> dict:
    v1, v2 = split
    return {
        "member": list(member.points),
        "v1": [list(p.points) for p in v1],
        "v2": [list(p.points) for p in v2],
    }


def _split_from_json(doc: dict, space: FiniteMetricSpace) -> tuple[Subspace, Split]:
    member = sub(space, doc["member"])
    v1 = tuple(sub(space, pts) for pts in doc["v1"])
    v2 = tuple(sub(space, pts) for pts in doc["v2"])
    return member, (v1, v2)


def decomposition_to_json(d: RDecomposition, embed_space: bool = True) -> dict:
    return {
        "space": space_to_json(d.parent.space) if embed_space else d.parent.space.name,
        "R": format_rational(d.R),
        "partition": d.partition,
        "splits": [_split_to_json(m, s) for m, s in zip(d.parent.members, d.splits)],
    }


def decomposition_from_json(doc: dict, space: FiniteMetricSpace | None = None) -> RDecomposition:
    sp = _space_ref(doc, space)
    members, splits = [], []
    for entry in doc["splits"]:
        member, split = _split_from_json(entry, sp)
        members.append(member)
        splits.append(split)
    return RDecomposition(
        MetricFamily(sp, tuple(members)),
        as_fraction(doc["R"]),
        tuple(splits),
        bool(doc.get("partition", False)),
    )


def chain_to_json(c: DecompositionChain) -> dict:
    return {
        "space": space_to_json(c.space),
        "schedule": [format_rational(r) for r in c.schedule],
        "bound": format_rational(c.bound),
        "complete": c.complete,
        "steps": [decomposition_to_json(step, embed_space=False) for step in c.steps],
    }


def chain_from_json(doc: dict, space: FiniteMetricSpace | None = None) -> DecompositionChain:
    sp = _space_ref(doc, space)
    steps = tuple(decomposition_from_json(step, sp) for step in doc["steps"])
    return DecompositionChain(
        sp,
        tuple(as_fraction(r) for r in doc["schedule"]),
        steps,
        as_fraction(doc["bound"]),
        bool(doc["complete"]),
    )


def cover_to_json(c: CoverSequence) -> dict:
    return {
        "space": space_to_json(c.space),
        "schedule": [format_rational(r) for r in c.schedule],
        "bound": format_rational(c.bound),
        "covers": [[list(m.points) for m in U.members] for U in c.covers],
    }


def cover_from_json(doc: dict, space: FiniteMetricSpace | None = None) -> CoverSequence:
    sp = _space_ref(doc, space)
    covers = tuple(
        MetricFamily(sp, tuple(sub(sp, pts) for pts in U)) for U in doc["covers"]
    )
    return CoverSequence(
        sp, tuple(as_fraction(r) for r in doc["schedule"]), covers, as_fraction(doc["bound"])
    )


# ---------------------------------------------------------------------------
# transcripts
# ---------------------------------------------------------------------------

def _move_to_json(m: Move) -> dict:
    if m.challenge is not None:
        return {"round": m.round, "actor": m.actor, "challenge": format_rational(m.challenge)}
    if isinstance(m.response, RDecomposition):
        return {
            "round": m.round,
            "actor": m.actor,
            "response": decomposition_to_json(m.response, embed_space=False),
        }
    return {
        "round": m.round,
        "actor": m.actor,
        "response": {"members": [list(s.points) for s in m.response.members]},
    }


def _move_from_json(doc: dict, kind: str, space: FiniteMetricSpace) -> Move:
    if "challenge" in doc:
        return Move(round=int(doc["round"]), actor=doc["actor"], challenge=as_fraction(doc["challenge"]))
    payload = doc["response"]
    if kind == "fdc":
        response = decomposition_from_json(payload, space)
    else:
        response = family_from_json(payload, space)
    return Move(round=int(doc["round"]), actor=doc["actor"], response=response)


def transcript_to_json(t: Transcript) -> dict:
    return {
        "kind": t.kind,
        "space": space_to_json(t.space),
        "bound": format_rational(t.bound),
        "max_rounds": t.max_rounds,
        "force_monotone": t.force_monotone,
        "moves": [_move_to_json(m) for m in t.moves],
        "status": t.status,
    }


def transcript_from_json(doc: dict, space: FiniteMetricSpace | None = None) -> Transcript:
    sp = _space_ref(doc, space)
    kind = doc["kind"]
    return Transcript(
        kind=kind,
        space=sp,
        bound=as_fraction(doc["bound"]),
        max_rounds=int(doc["max_rounds"]),
        force_monotone=bool(doc.get("force_monotone", False)),
        moves=tuple(_move_from_json(m, kind, sp) for m in doc["moves"]),
        status=doc["status"],
    )


def session_transcript_json(s: GameSession) -> dict:
    return transcript_to_json(transcript(s))


# ---------------------------------------------------------------------------
# witness reports
# ---------------------------------------------------------------------------

def witness_report_to_json(r: VariationReport) -> dict:
    return {
        "n": r.n,
        "m": r.depth,
        "schedule": [format_rational(s) for s in r.schedule],
        "cutoff": format_rational(r.cutoff),
        "support_radius": format_rational(r.support_radius),
        "leaf_mesh": format_rational(r.leaf_mesh),
        "variation": [
            {"distance": format_rational(d), "max_l1": _round_float(v)} for d, v in r.classes
        ],
        "paper_bound": _round_float(r.paper_bound),
    }


# ---------------------------------------------------------------------------
# artifact checker
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CheckResult:
    kind: str
    ok: bool
    problems: tuple[str, ...] = ()
    warnings: tuple[str, ...] = ()  # non-fatal (e.g. duplicate family members)

    def describe(self) -> str:
        suffix = f" (warnings: {'; '.join(self.warnings)})" if self.warnings else ""
        if self.ok:
            return f"{self.kind}: valid{suffix}"
        return f"{self.kind}: " + "; ".join(self.problems) + suffix


def detect_kind(doc: dict) -> str:
    if "metric" in doc:
        return "space"
    if "splits" in doc:
        return "decomposition"
    if "steps" in doc:
        return "chain"
    if "covers" in doc:
        return "cover"
    if "moves" in doc:
        return "transcript"
    if "variation" in doc:
        return "witness"
    raise CoarseKitError("unrecognized artifact shape")


def check_artifact(doc: dict, space: FiniteMetricSpace | None = None) -> CheckResult:
    """Validate any artifact JSON; exit contract for the `check` CLI command."""
    try:
        kind = detect_kind(doc)
    except CoarseKitError as e:
        return CheckResult("unknown", False, (str(e),))
    try:
        if kind == "space":
            space_from_json(doc)
            return CheckResult(kind, True)
        if kind == "decomposition":
            d = decomposition_from_json(doc, space)
            warnings = tuple(family_lint(d.pieces()))
            return _from_verdict(kind, verify_decomposition(d), warnings)
        if kind == "chain":
            c = chain_from_json(doc, space)
            return _from_verdict(kind, verify_chain(c))
        if kind == "cover":
            c = cover_from_json(doc, space)
            warnings = tuple(
                f"cover {i}: {w}" for i, U in enumerate(c.covers) for w in family_lint(U)
            )
            return _from_verdict(kind, verify_cover(c), warnings)
        if kind == "transcript":
            t = transcript_from_json(doc, space)
            replay(t)
            return CheckResult(kind, True)
        if kind == "witness":
            return _check_witness(doc)
    except (CoarseKitError, MoveRejected, KeyError, ValueError, TypeError) as e:
        return CheckResult(kind, False, (f"{type(e).__name__}: {e}",))
    raise AssertionError("unreachable")


def _from_verdict(kind: str, verdict: Verdict, warnings: tuple[str, ...] = ()) -> CheckResult:
    if verdict.ok:
        return CheckResult(kind, True, warnings=warnings)
    return CheckResult(kind, False, tuple(str(v) for v in verdict.violations), warnings)


def _check_witness(doc: dict) -> CheckResult:
    problems = []
    schedule = [as_fraction(s) for s in doc["schedule"]]
    if len(schedule) != int(doc["m"]):
        problems.append("schedule length differs from m")
    if any(b <= a for a, b in zip(schedule, schedule[1:])):
        problems.append("schedule not strictly increasing")
    n = int(doc["n"])
    if schedule and schedule[0] != 4 * n:
        problems.append(f"schedule does not start at 4n = {4 * n}")
    if as_fraction(doc["support_radius"]) > as_fraction(doc["leaf_mesh"]):
        problems.append("support radius exceeds leaf mesh")
    for row in doc["variation"]:
        v = float(row["max_l1"])
        if not (0.0 <= v <= 2.0 + 1e-9):
            problems.append(f"l1 variation {v} outside [0, 2]")
    return CheckResult("witness", not problems, tuple(problems))


def load_artifact(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def dump_artifact(doc: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_dumps(doc))
