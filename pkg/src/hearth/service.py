"""HTTP facade over the chain, simulator, and reports.

Sessions are in-memory: each one owns a simulator and a reasoning chain over
a shared backend. Commands run asynchronously and their progress is pushed
on a per-session event log consumed over server-sent events; every event
carries a monotonically increasing cursor so a reconnecting client can
replay with no gaps or duplicates.

State only changes through an accepted plan or a firing routine. Posting a
message never touches a device.
"""

from __future__ import annotations

import json
import logging
import re
import secrets
import threading
import time
from pathlib import Path

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles

from hearth.chain import ChainConfig, ChainMode, ChainOutcome, ReasoningChain
from hearth.gateway import Backend, GenerationParams
from hearth.home import HomeTemplate, TemplateError, load_home, template_from_docs
from hearth.plans import GoalType, RoutinePlan, freeform_trigger_paths, plan_to_doc
from hearth.simulator import HomeSimulator, SimulatorError, TypeMismatch

logger = logging.getLogger(__name__)

_RUN_ID = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_.-]*$")


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


class EventLog:
    """Ordered per-session event history with blocking reads."""

    def __init__(self):
        self._events: list[dict] = []
        self._cond = threading.Condition()

    def append(self, kind: str, payload: dict) -> int:
        with self._cond:
            cursor = len(self._events) + 1
            self._events.append({"cursor": cursor, "kind": kind, "payload": payload})
            self._cond.notify_all()
            return cursor

    def after(self, cursor: int) -> list[dict]:
        with self._cond:
            return self._events[cursor:]

    def wait(self, cursor: int, timeout: float) -> list[dict]:
        deadline = time.monotonic() + timeout
        with self._cond:
            while len(self._events) <= cursor:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    return []
                self._cond.wait(remaining)
            return self._events[cursor:]

    @property
    def cursor(self) -> int:
        with self._cond:
            return len(self._events)


class _EmittingBackend:
    """Backend wrapper that reports per-step progress onto the event log."""

    def __init__(self, inner: Backend, log: EventLog):
        self._inner = inner
        self._log = log

    def complete(self, prompt, params, cancel=None):
        step = prompt.kind.value
        self._log.append("ChainStep", {"step": step, "status": "running"})
        try:
            completion = self._inner.complete(prompt, params, cancel)
        except Exception:
            self._log.append("ChainStep", {"step": step, "status": "error"})
            raise
        self._log.append("ChainStep", {"step": step, "status": "done"})
        return completion


class Session:
    def __init__(self, session_id, home_id, template, chain, simulator, auto_accept):
        self.session_id = session_id
        self.home_id = home_id
        self.template: HomeTemplate = template
        self.chain: ReasoningChain = chain
        self.simulator: HomeSimulator = simulator
        self.auto_accept = auto_accept
        self.created_at = time.time()
        self.last_seen = time.time()
        self.log = EventLog()
        self.lock = threading.Lock()
        self.busy = False
        self.pending: dict | None = None
        self._plan_seq = 0

    def next_plan_id(self) -> str:
        self._plan_seq += 1
        return f"p{self._plan_seq}"


def _error_response(exc: ApiError) -> JSONResponse:
    return JSONResponse(
        status_code=exc.status, content={"code": exc.code, "message": exc.message}
    )


def create_app(
    backend: Backend,
    *,
    params: GenerationParams | None = None,
    mode: ChainMode = ChainMode.FULL_SPLIT,
    default_home: str = "h3",
    idle_timeout: float = 3600.0,
    reports_root: str | Path | None = None,
    static_root: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="hearth", docs_url=None, redoc_url=None)
    params = params or GenerationParams()
    sessions: dict[str, Session] = {}
    registry_lock = threading.Lock()

    @app.exception_handler(ApiError)
    async def _on_api_error(request: Request, exc: ApiError):
        return _error_response(exc)

    def _sweep() -> None:
        now = time.time()
        with registry_lock:
            dead = [
                sid for sid, s in sessions.items() if now - s.last_seen > idle_timeout
            ]
            for sid in dead:
                del sessions[sid]

    def _session(session_id: str) -> Session:
        with registry_lock:
            session = sessions.get(session_id)
        if session is None or time.time() - session.last_seen > idle_timeout:
            if session is not None:
                with registry_lock:
                    sessions.pop(session_id, None)
            raise ApiError(404, "SessionExpired", "unknown or expired session")
        session.last_seen = time.time()
        return session

    def _freeform(session: Session, plan: RoutinePlan) -> list[list[str]]:
        return [list(p) for p in freeform_trigger_paths(session.template, plan)]

    def _emit_simulator_events(session: Session, events, freeform=None) -> None:
        changes = []
        routine_id = None
        source = "plan"
        for event in events:
            if event.kind == "RoutineFired":
                session.log.append("RoutineFired", dict(event.payload))
            elif event.kind == "RoutineInstalled":
                payload = dict(event.payload)
                if freeform is not None:
                    payload["freeform_trigger"] = freeform
                session.log.append("RoutineInstalled", payload)
            elif event.kind == "SettingChanged":
                changes.append(dict(event.payload))
            elif event.kind == "PlanApplied":
                # source/routine_id ride on the summary event, not the diffs
                if event.payload.get("source") == "routine":
                    source = "routine"
                    routine_id = event.payload.get("routine_id")
        if changes:
            payload = {"changes": changes, "source": source}
            if routine_id is not None:
                payload["routine_id"] = routine_id
            session.log.append("StateChanged", payload)

    def _execute(session: Session, command: str, goal: GoalType, plan) -> None:
        """Accepted-plan path: mutate the home, remember the plan."""
        if isinstance(plan, RoutinePlan):
            before = len(session.simulator.events)
            session.simulator.install_routine(plan)
            _emit_simulator_events(
                session, session.simulator.events[before:], freeform=_freeform(session, plan)
            )
        else:
            events = session.simulator.apply_plan(plan)
            _emit_simulator_events(session, events)
        session.chain.accept(command, plan, goal)

    def _propose(session: Session, command: str, goal: GoalType, trace) -> None:
        plan_id = session.next_plan_id()
        payload = {
            "plan_id": plan_id,
            "command": command,
            "goal": goal.value,
            "plan": plan_to_doc(session.template, trace.plan),
            "explanation": trace.plan.explanation,
            "validity": trace.validity.value if trace.validity else None,
            "cache_hit": trace.cache_hit,
        }
        if isinstance(trace.plan, RoutinePlan):
            payload["freeform_trigger"] = _freeform(session, trace.plan)
        session.log.append("PlanProposed", payload)
        if session.auto_accept:
            session.log.append(
                "PlanResolved", {"plan_id": plan_id, "resolution": "accepted"}
            )
            _execute(session, command, goal, trace.plan)
            session.pending = None
        else:
            session.pending = {
                "plan_id": plan_id,
                "plan": trace.plan,
                "goal": goal,
                "command": command,
            }

    def _run_command(session: Session, text: str) -> None:
        try:
            emitting = _EmittingBackend(backend, session.log)
            chain = session.chain
            original = chain.backend
            chain.backend = emitting
            try:
                # Cached goals skip classification so an approved command
                # replays without a single backend call.
                cached = chain.cache.lookup(text, chain.template)
                if cached is not None:
                    goal = cached[0]
                else:
                    goal, _step = chain.classify_goal(text)
                trace = chain.run_chain(text, goal)
            finally:
                chain.backend = original
            if trace.outcome is ChainOutcome.PLAN_PROPOSED and trace.plan is not None:
                _propose(session, text, goal, trace)
            else:
                session.log.append(
                    "NeedsClarification",
                    {"utterance": trace.utterance, "outcome": trace.outcome.value},
                )
        except Exception as exc:
            logger.exception("chain run failed")
            session.log.append(
                "NeedsClarification",
                {"utterance": f"Something went wrong: {exc}", "outcome": "error"},
            )
        finally:
            with session.lock:
                session.busy = False

    @app.post("/sessions", status_code=201)
    async def create_session(body: dict):
        _sweep()
        auto_accept = bool(body.get("auto_accept", False))
        if "template" in body:
            doc = body["template"]
            try:
                template = template_from_docs(doc.get("devices"), doc.get("sensors"))
            except (TemplateError, AttributeError, TypeError) as exc:
                raise ApiError(400, "TemplateInvalid", str(exc))
            home_id = body.get("home", "custom")
        else:
            home_id = body.get("home", default_home)
            try:
                template = load_home(home_id)
            except (TemplateError, FileNotFoundError, KeyError, ValueError) as exc:
                raise ApiError(400, "TemplateInvalid", f"cannot load home {home_id!r}: {exc}")
        session_id = secrets.token_urlsafe(16)
        session_mode = ChainMode(body["mode"]) if "mode" in body else mode
        chain = ReasoningChain(
            backend,
            template,
            home_id=home_id,
            config=ChainConfig(mode=session_mode, params=params),
        )
        session = Session(
            session_id, home_id, template, chain, HomeSimulator(template), auto_accept
        )
        with registry_lock:
            sessions[session_id] = session
        return {"session_id": session_id, "home_id": home_id, "created_at": session.created_at}

    @app.get("/sessions/{session_id}/state")
    async def get_state(session_id: str):
        session = _session(session_id)
        return {"home_id": session.home_id, "state": session.simulator.state.to_doc()}

    @app.post("/sessions/{session_id}/message", status_code=202)
    async def post_message(session_id: str, body: dict):
        session = _session(session_id)
        text = body.get("text", "")
        if not isinstance(text, str) or not text.strip():
            raise ApiError(400, "BadRequest", "body must carry non-empty text")
        with session.lock:
            if session.busy:
                raise ApiError(409, "Busy", "a command is already being processed")
            session.busy = True
        cursor = session.log.append("UserMessage", {"text": text})
        thread = threading.Thread(
            target=_run_command, args=(session, text), daemon=True
        )
        thread.start()
        return {"accepted": True, "cursor": cursor}

    @app.post("/sessions/{session_id}/plans/{plan_id}/resolve")
    async def resolve_plan(session_id: str, plan_id: str, body: dict):
        session = _session(session_id)
        with session.lock:
            if session.busy:
                raise ApiError(409, "Busy", "a command is already being processed")
            pending = session.pending
            if pending is None or pending["plan_id"] != plan_id:
                raise ApiError(409, "NoPendingPlan", f"no pending plan {plan_id!r}")
            session.busy = True
        try:
            verdict = body.get("verdict")
            if verdict == "accept":
                session.pending = None
                session.log.append(
                    "PlanResolved", {"plan_id": plan_id, "resolution": "accepted"}
                )
                _execute(session, pending["command"], pending["goal"], pending["plan"])
                result = {
                    "resolved": "accepted",
                    "installed": isinstance(pending["plan"], RoutinePlan),
                }
            elif verdict == "reject":
                critique = body.get("critique", "")
                session.pending = None
                session.log.append(
                    "PlanResolved", {"plan_id": plan_id, "resolution": "rejected"}
                )
                if not isinstance(critique, str) or not critique.strip():
                    result = {"resolved": "rejected"}
                else:
                    emitting = _EmittingBackend(backend, session.log)
                    original = session.chain.backend
                    session.chain.backend = emitting
                    try:
                        revised, utterance, _steps = session.chain.revise(
                            pending["command"], pending["plan"], pending["goal"], critique
                        )
                    finally:
                        session.chain.backend = original
                    if revised is None:
                        session.log.append(
                            "NeedsClarification", {"utterance": utterance, "outcome": "abandoned"}
                        )
                        result = {"resolved": "abandoned"}
                    else:
                        new_id = session.next_plan_id()
                        session.pending = {
                            "plan_id": new_id,
                            "plan": revised,
                            "goal": pending["goal"],
                            "command": pending["command"],
                        }
                        revised_payload = {
                            "plan_id": new_id,
                            "command": pending["command"],
                            "goal": pending["goal"].value,
                            "plan": plan_to_doc(session.template, revised),
                            "explanation": revised.explanation,
                            "validity": "valid",
                            "revised_from": plan_id,
                        }
                        if isinstance(revised, RoutinePlan):
                            revised_payload["freeform_trigger"] = _freeform(session, revised)
                        session.log.append("PlanProposed", revised_payload)
                        result = {"resolved": "revised", "plan_id": new_id}
            else:
                raise ApiError(400, "BadRequest", "verdict must be accept or reject")
        finally:
            with session.lock:
                session.busy = False
        return result

    @app.post("/sessions/{session_id}/sensors")
    async def post_sensors(session_id: str, body: dict):
        session = _session(session_id)
        try:
            result = session.simulator.tick(body)
        except (TypeMismatch, SimulatorError, TypeError, ValueError) as exc:
            raise ApiError(400, "BadSnapshot", str(exc))
        _emit_simulator_events(session, result.events)
        return {"fired": list(result.fired), "cursor": session.log.cursor}

    def _routine_rows(session: Session) -> list[dict]:
        return session.simulator.routines()

    @app.get("/sessions/{session_id}/routines")
    async def session_routines(session_id: str):
        return {"routines": _routine_rows(_session(session_id))}

    @app.get("/routines")
    async def list_routines(session: str = Query(...)):
        return {"routines": _routine_rows(_session(session))}

    @app.delete("/routines/{routine_id}")
    async def delete_routine(routine_id: str, session: str = Query(...)):
        live = _session(session)
        if not live.simulator.remove_routine(routine_id):
            raise ApiError(404, "NotFound", f"no routine {routine_id!r}")
        return {"removed": routine_id}

    @app.delete("/sessions/{session_id}/routines/{routine_id}")
    async def delete_session_routine(session_id: str, routine_id: str):
        session = _session(session_id)
        if not session.simulator.remove_routine(routine_id):
            raise ApiError(404, "NotFound", f"no routine {routine_id!r}")
        return {"removed": routine_id}

    @app.get("/sessions/{session_id}/events.json")
    async def poll_events(session_id: str, cursor: int = 0, wait: float = 0.0):
        session = _session(session_id)
        events = session.log.wait(cursor, wait) if wait > 0 else session.log.after(cursor)
        return {"events": events, "cursor": session.log.cursor}

    @app.get("/sessions/{session_id}/events")
    async def sse_events(
        session_id: str,
        request: Request,
        cursor: int | None = None,
        once: bool = False,
    ):
        """Server-sent events. Replays from `cursor` (or Last-Event-ID) with
        no gaps or duplicates; `once=true` closes after the current backlog,
        which buffering clients use to snapshot the log."""
        session = _session(session_id)
        start = cursor
        if start is None:
            header = request.headers.get("last-event-id")
            start = int(header) if header and header.isdigit() else 0

        def frame(event) -> str:
            data = json.dumps(event["payload"], sort_keys=True)
            return f"id: {event['cursor']}\nevent: {event['kind']}\ndata: {data}\n\n"

        def stream():
            position = start
            for event in session.log.after(position):
                position = event["cursor"]
                yield frame(event)
            if once:
                return
            while True:
                batch = session.log.wait(position, timeout=15.0)
                if not batch:
                    yield ": keep-alive\n\n"
                    continue
                for event in batch:
                    position = event["cursor"]
                    yield frame(event)

        return StreamingResponse(stream(), media_type="text/event-stream")

    if reports_root is not None:
        root = Path(reports_root)

        @app.get("/reports")
        async def list_reports():
            runs = sorted(p.name for p in root.iterdir() if p.is_dir()) if root.exists() else []
            return {"runs": runs}

        @app.get("/reports/{run_id}")
        async def get_report(run_id: str):
            if not _RUN_ID.match(run_id):
                raise ApiError(400, "BadRequest", "malformed run id")
            run_dir = root / run_id
            if not run_dir.is_dir():
                raise ApiError(404, "NotFound", f"no report run {run_id!r}")
            files = sorted(p.name for p in run_dir.iterdir() if p.is_file())
            results_path = run_dir / "results.json"
            results = json.loads(results_path.read_text()) if results_path.exists() else None
            return {"run_id": run_id, "files": files, "results": results}

    static_dir = Path(static_root) if static_root is not None else None
    if static_dir is None:
        bundled = Path(__file__).parent / "static"
        if bundled.is_dir():
            static_dir = bundled
    if static_dir is not None and static_dir.is_dir():
        app.mount("/ui", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
