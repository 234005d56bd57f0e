"""HTTP/JSON session service over the games engine.

Sessions are mutated only through their per-session lock with optimistic
versioning (version = number of accepted moves); reads return immutable
snapshots. With a state directory configured, every accepted move persists
the transcript and the service replays them on startup.
"""

from __future__ import annotations

import os
import threading
import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .errors import CoarseKitError, MetricViolation, MoveRejected
from .games import (
    ASC,
    FDC,
    Challenger,
    GameSession,
    ONGOING,
    Responder,
    apply_move,
    auto_move,
    new_session,
    parse_challenger,
    parse_responder,
    transcript,
)
from .metric_core import MetricFamily, FiniteMetricSpace, mesh
from .rational import as_fraction, format_rational
from .serialize import (
    canonical_dumps,
    decomposition_from_json,
    family_from_json,
    load_artifact,
    space_from_json,
    space_to_json,
    transcript_from_json,
    transcript_to_json,
)
from .spacegen import KINDS, GeneratorSpec, generate


@dataclass
class SessionResource:
    id: str
    session: GameSession
    machine_role: str | None  # "challenger" | "responder" | None
    challenger: Challenger | None
    responder: Responder | None
    strategy_spec: dict = field(default_factory=dict)
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def version(self) -> int:
        return len(self.session.moves)


def _session_view(res: SessionResource) -> dict:
    s = res.session
    view = {
        "id": res.id,
        "version": res.version,
        "kind": s.kind,
        "space": s.space.name,
        "bound": format_rational(s.bound),
        "max_rounds": s.max_rounds,
        "status": s.status,
        "turn": s.turn,
        "pending": format_rational(s.pending) if s.pending is not None else None,
        "schedule": [format_rational(r) for r in s.schedule],
    }
    if s.kind == FDC:
        view["family"] = [list(m.points) for m in s.family.members]
        view["mesh"] = format_rational(mesh(s.family))
    else:
        view["covers"] = [[list(m.points) for m in U.members] for U in s.covers]
        view["uncovered"] = list(s.uncovered)
    return view


def create_app(state_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="coarsekit game service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    spaces: dict[str, FiniteMetricSpace] = {}
    sessions: dict[str, SessionResource] = {}
    catalog_lock = threading.Lock()

    def persist(res: SessionResource) -> None:
        if not state_dir:
            return
        os.makedirs(state_dir, exist_ok=True)
        doc = {
            "transcript": transcript_to_json(transcript(res.session)),
            "id": res.id,
            "machine_role": res.machine_role,
            "strategy": res.strategy_spec,
        }
        path = os.path.join(state_dir, f"session-{res.id}.json")
        tmp = path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(canonical_dumps(doc))
        os.replace(tmp, path)

    def persist_space(space: FiniteMetricSpace) -> None:
        if not state_dir:
            return
        os.makedirs(state_dir, exist_ok=True)
        with open(os.path.join(state_dir, f"space-{space.name}.json"), "w", encoding="utf-8") as fh:
            fh.write(canonical_dumps(space_to_json(space)))

    def restore() -> None:
        if not state_dir or not os.path.isdir(state_dir):
            return
        names = sorted(os.listdir(state_dir))
        for fn in names:
            if fn.startswith("space-") and fn.endswith(".json"):
                space = space_from_json(load_artifact(os.path.join(state_dir, fn)))
                spaces[space.name] = space
        for fn in names:
            if fn.startswith("session-") and fn.endswith(".json"):
                doc = load_artifact(os.path.join(state_dir, fn))
                t = transcript_from_json(doc["transcript"])
                spaces.setdefault(t.space.name, t.space)
                s = new_session(t.space, t.kind, t.bound, t.max_rounds, t.force_monotone)
                for move in t.moves:
                    s = apply_move(s, move)
                res = SessionResource(
                    id=doc["id"],
                    session=s,
                    machine_role=doc.get("machine_role"),
                    challenger=None,
                    responder=None,
                    strategy_spec=doc.get("strategy", {}),
                )
                _rebuild_strategies(res)
                sessions[res.id] = res

    def _rebuild_strategies(res: SessionResource) -> None:
        spec = res.strategy_spec or {}
        if res.machine_role == "challenger":
            res.challenger = parse_challenger(spec.get("challenger", "doubling"))
        elif res.machine_role == "responder":
            res.responder = parse_responder(
                spec.get("responder", "radial" if res.session.kind == FDC else "greedy"),
                res.session.kind,
                int(spec.get("seed", 0)),
            )

    def machine_turn(res: SessionResource) -> bool:
        s = res.session
        if s.status != ONGOING or res.machine_role is None:
            return False
        if s.pending is None:
            return res.machine_role == "challenger" and res.challenger is not None
        return res.machine_role == "responder" and res.responder is not None

    def play_machine(res: SessionResource) -> None:
        while machine_turn(res):
            actor = res.challenger if res.session.pending is None else res.responder
            res.session = apply_move(res.session, auto_move(res.session, actor))

    restore()

    @app.post("/spaces", status_code=201)
    def post_space(body: dict):
        try:
            if "metric" in body:
                space = space_from_json(body)
            else:
                kind = str(body.get("kind", "")).replace("-", "_")
                if kind not in KINDS:
                    raise HTTPException(400, f"unknown generator kind {body.get('kind')!r}")
                spec = GeneratorSpec(
                    kind=kind,
                    n=body.get("n"),
                    side=body.get("side"),
                    dim=body.get("dim", 2),
                    branching=body.get("branching"),
                    depth=body.get("depth"),
                    radius=body.get("radius"),
                    p=as_fraction(body["p"]) if "p" in body else None,
                    seed=body.get("seed"),
                    name=body.get("name"),
                )
                space = generate(spec)
        except MetricViolation as e:
            raise HTTPException(400, detail={"kind": e.kind, "where": list(e.where)})
        except (CoarseKitError, TypeError, ValueError, KeyError) as e:
            raise HTTPException(400, detail=str(e))
        with catalog_lock:
            spaces[space.name] = space
        persist_space(space)
        return {"name": space.name, "size": space.size}

    @app.get("/spaces")
    def list_spaces():
        return {"spaces": [{"name": s.name, "size": s.size} for s in spaces.values()]}

    @app.get("/spaces/{name}")
    def get_space(name: str):
        if name not in spaces:
            raise HTTPException(404, f"unknown space {name!r}")
        return space_to_json(spaces[name])

    @app.post("/sessions", status_code=201)
    def post_session(body: dict):
        name = body.get("space")
        if name not in spaces:
            raise HTTPException(404, f"unknown space {name!r}")
        kind = body.get("kind")
        if kind not in (FDC, ASC):
            raise HTTPException(400, f"kind must be '{FDC}' or '{ASC}'")
        try:
            bound = as_fraction(body.get("bound", 0))
            if bound < 0:
                raise ValueError("bound must be >= 0")
            s = new_session(
                spaces[name],
                kind,
                bound,
                int(body.get("max_rounds", 64)),
                bool(body.get("force_monotone", False)),
            )
        except (CoarseKitError, ValueError, TypeError) as e:
            raise HTTPException(400, str(e))
        machine_role = body.get("machine_role")
        if machine_role not in (None, "challenger", "responder"):
            raise HTTPException(400, "machine_role must be 'challenger' or 'responder'")
        res = SessionResource(
            id=uuid.uuid4().hex,
            session=s,
            machine_role=machine_role,
            challenger=None,
            responder=None,
            strategy_spec={
                k: body[k] for k in ("challenger", "responder", "seed") if k in body
            },
        )
        try:
            _rebuild_strategies(res)
        except ValueError as e:
            raise HTTPException(400, str(e))
        play_machine(res)
        sessions[res.id] = res
        persist(res)
        return _session_view(res)

    def _get(session_id: str) -> SessionResource:
        res = sessions.get(session_id)
        if res is None:
            raise HTTPException(404, f"unknown session {session_id!r}")
        return res

    @app.post("/sessions/{session_id}/moves")
    def post_move(session_id: str, body: dict):
        res = _get(session_id)
        if "expect_version" not in body or "move" not in body:
            raise HTTPException(400, "body needs expect_version and move")
        with res.lock:
            if int(body["expect_version"]) != res.version:
                return JSONResponse(
                    status_code=409,
                    content={"error": "version mismatch", "version": res.version},
                )
            move = body["move"]
            try:
                if "challenge" in move:
                    from .games import submit_challenge

                    res.session = submit_challenge(res.session, move["challenge"])
                elif "response" in move:
                    from .games import submit_response

                    payload = move["response"]
                    if res.session.kind == FDC:
                        parsed = decomposition_from_json(payload, res.session.space)
                    else:
                        parsed = family_from_json(payload, res.session.space)
                    res.session = submit_response(res.session, parsed)
                else:
                    raise HTTPException(400, "move needs 'challenge' or 'response'")
            except MoveRejected as e:
                return JSONResponse(
                    status_code=422,
                    content={"error": str(e), "witness": e.witness_pair},
                )
            except (CoarseKitError, ValueError, TypeError, KeyError) as e:
                return JSONResponse(status_code=422, content={"error": f"malformed move: {e}"})
            play_machine(res)
            persist(res)
            return _session_view(res)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return _session_view(_get(session_id))

    @app.get("/sessions/{session_id}/transcript")
    def get_transcript(session_id: str):
        return transcript_to_json(transcript(_get(session_id).session))

    return app
