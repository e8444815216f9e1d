"""HTTP debug service: one live debug session over a JSON API.

The service owns a single session (program, current combined state,
move history).  All mutations are serialized through a lock; rejected
requests never change the session.  Illegal steps answer 400 with a
reason that distinguishes the program semantics refusing the move
(`not-enabled-prog`) from the annotation DAG refusing it
(`not-enabled-dag`), and name the nodes that must be reversed first.

A static directory (the web UI bundle) can be served alongside the API.
"""

from __future__ import annotations

import hashlib
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import List, Optional, Tuple
from urllib.parse import parse_qs, urlparse

from . import syntax
from .adag import node_json, node_str
from .analysis import read_set, write_set
from .errors import CrilError, format_pid, parse_pid
from .ltsi import (
    BACKWARD,
    FORWARD,
    CombinedState,
    Ltsi,
    ProgTransition,
    random_scheduler,
    run,
    trace_to_json,
    transition_to_json,
)
from .syntax import CallStatement, Program


def state_snapshot(state: CombinedState) -> dict:
    """The canonical wire form of a combined state (hash input)."""
    snap = state.config.to_json()
    snap["dag"] = state.dag.to_json()
    return snap


def state_hash(state: CombinedState) -> str:
    canonical = json.dumps(state_snapshot(state), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _transition_json(t: ProgTransition, index: int, program: Program) -> dict:
    data = transition_to_json(t)
    data["index"] = index
    data["kind"] = t.kind
    data["description"] = t.describe(program)
    return data


class DebugSession:
    """A steerable execution: current state plus the move list."""

    def __init__(self, program: Program, seed: int = 0):
        self.program = program
        self.ltsi = Ltsi(program)
        self.state = self.ltsi.initial_state()
        self.history: List[ProgTransition] = []
        self.seed = seed
        self.version = 0
        self.lock = threading.RLock()

    # -- queries ------------------------------------------------------------

    def program_json(self) -> dict:
        part = self.ltsi.machine.info.partition
        blocks = []
        for b in self.program.blocks:
            entry = {
                "id": b.id,
                "kind": "call" if isinstance(b, CallStatement) else "inst",
                "lines": syntax.render_block(b).splitlines(),
                "read": sorted(read_set(b)),
                "write": sorted(write_set(b)),
                "process_block": part.class_of[b.id],
            }
            blocks.append(entry)
        return {
            "blocks": blocks,
            "process_blocks": [
                {"id": i, "label": part.label_of_class(i), "blocks": part.classes[i]}
                for i in range(len(part.classes))
            ],
            "vars": sorted(self.program.vars),
            "source": syntax.render_program(self.program),
        }

    def state_json(self) -> dict:
        with self.lock:
            snap = state_snapshot(self.state)
            snap["hash"] = state_hash(self.state)
            snap["final"] = self.ltsi.is_final(self.state)
            snap["history_length"] = len(self.history)
            snap["version"] = self.version
            return snap

    def dag_json(self) -> dict:
        with self.lock:
            data = self.state.dag.to_json()
            data["dot"] = self.state.dag.to_dot()
            data["hash"] = state_hash(self.state)
            return data

    def _dag_block_reason(self, t: ProgTransition) -> dict:
        """Why the DAG refuses to reverse t: the nodes to reverse first."""
        dag = self.state.dag
        v = dag.top_node(t.pid)
        blockers = set()
        if v is not None:
            for src, r, dst in list(dag.write_edges) + list(dag.read_edges):
                if src == v:
                    blockers.add(dst)
            for src, r, dst in dag.read_edges:
                if dst == v and dag.last(r) != src:
                    blockers.add(dag.last(r))
        return {
            "node": node_json(v),
            "blockers": [node_json(b) for b in sorted(blockers, key=lambda n: node_str(n))],
            "message": (
                f"causality: {', '.join(node_str(b) for b in sorted(blockers, key=node_str)) or 'newer steps'}"
                " must be reversed first"
            ),
        }

    def transitions_json(self, directions: Tuple[str, ...] = (FORWARD, BACKWARD)) -> dict:
        with self.lock:
            out: dict = {"version": self.version, "hash": state_hash(self.state)}
            machine = self.ltsi.machine
            for direction in directions:
                enabled = self.ltsi.enabled(self.state, direction)
                out[direction] = [
                    _transition_json(t, i, self.program) for i, t in enumerate(enabled)
                ]
                blocked = []
                enabled_pids = {t.pid for t in enabled}
                for reason in machine.blocked_reasons(self.state.config, direction):
                    blocked.append(
                        {
                            "pid": format_pid(reason.pid),
                            "dir": direction,
                            "error": "not-enabled-prog",
                            "kind": reason.kind,
                            "block": reason.block_id,
                            "reason": reason.message,
                        }
                    )
                if direction == BACKWARD:
                    for t in machine.enabled(self.state.config, BACKWARD):
                        if t.pid in enabled_pids:
                            continue
                        info = self._dag_block_reason(t)
                        blocked.append(
                            {
                                "pid": format_pid(t.pid),
                                "dir": BACKWARD,
                                "error": "not-enabled-dag",
                                "kind": "dag",
                                "block": t.block_id,
                                "reason": info["message"],
                                "dag": info,
                            }
                        )
                out[f"{direction}_blocked"] = blocked
            return out

    def history_json(self) -> dict:
        with self.lock:
            return {
                "moves": trace_to_json(self.history),
                "length": len(self.history),
                "version": self.version,
            }

    # -- mutations ------------------------------------------------------------

    def _bump(self) -> None:
        self.version += 1
        assert self._replay_invariant_holds()

    def _replay_invariant_holds(self) -> bool:
        state = self.ltsi.initial_state()
        for t in self.history:
            state = self.ltsi.step(state, t)
        return state == self.state

    def resolve_step(self, payload: dict) -> ProgTransition:
        """Find the requested transition or raise StepRejected."""
        direction = payload.get("dir", FORWARD)
        if direction not in (FORWARD, BACKWARD):
            raise StepRejected(400, "bad-request", f"unknown dir {direction!r}")
        enabled = self.ltsi.enabled(self.state, direction)
        if "index" in payload:
            index = payload["index"]
            if not isinstance(index, int) or not 0 <= index < len(enabled):
                raise StepRejected(
                    400, "bad-request", f"index {index!r} out of range (0..{len(enabled) - 1})"
                )
            return enabled[index]
        if "pid" not in payload:
            raise StepRejected(400, "bad-request", "need 'index' or 'pid'")
        pid = parse_pid(str(payload["pid"]))
        for t in enabled:
            if t.pid == pid:
                return t
        # Not enabled: distinguish the program half from the DAG half.
        prog_t = self.ltsi.machine.enabled_for(self.state.config, pid, direction)
        if prog_t is not None and direction == BACKWARD:
            info = self._dag_block_reason(prog_t)
            raise StepRejected(400, "not-enabled-dag", info["message"], {"dag": info})
        for reason in self.ltsi.machine.blocked_reasons(self.state.config, direction):
            if reason.pid == pid:
                raise StepRejected(400, "not-enabled-prog", reason.message)
        raise StepRejected(400, "not-enabled-prog", f"process {format_pid(pid) or 'e'} is not active")

    def step(self, payload: dict) -> dict:
        with self.lock:
            self._check_version(payload)
            t = self.resolve_step(payload)
            before = self.state
            self.state = self.ltsi.step(before, t)
            self.history.append(t)
            self._bump()
            delta = self._dag_delta(before, self.state)
            response = {
                "applied": transition_to_json(t),
                "state": self.state_json(),
                "dag_delta": delta,
                "transitions": self.transitions_json(),
            }
            return response

    def run(self, payload: dict) -> dict:
        with self.lock:
            self._check_version(payload)
            direction = payload.get("dir", FORWARD)
            if direction not in (FORWARD, BACKWARD):
                raise StepRejected(400, "bad-request", f"unknown dir {direction!r}")
            steps = payload.get("steps", 1_000)
            seed = payload.get("seed", self.seed)
            if not isinstance(steps, int) or steps < 0:
                raise StepRejected(400, "bad-request", "steps must be a non-negative integer")
            before = self.state
            result = run(
                self.ltsi, before, random_scheduler(seed), direction, max_steps=steps
            )
            self.state = result.final
            self.history.extend(result.trace)
            self._bump()
            return {
                "outcome": result.outcome,
                "steps": len(result.trace),
                "trace": trace_to_json(result.trace),
                "state": self.state_json(),
                "dag_delta": self._dag_delta(before, self.state),
                "transitions": self.transitions_json(),
            }

    def reset(self, payload: Optional[dict] = None) -> dict:
        with self.lock:
            if payload:
                self._check_version(payload)
            before = self.state
            self.state = self.ltsi.initial_state()
            self.history = []
            self._bump()
            return {
                "state": self.state_json(),
                "dag_delta": self._dag_delta(before, self.state),
                "transitions": self.transitions_json(),
            }

    def _check_version(self, payload: dict) -> None:
        expected = payload.get("expected_version")
        if expected is not None and expected != self.version:
            raise StepRejected(
                409,
                "version-conflict",
                f"session is at version {self.version}, request expected {expected}",
            )

    @staticmethod
    def _dag_delta(before: CombinedState, after: CombinedState) -> dict:
        def edges(e):
            return {("w",) + edge for edge in e.dag.write_edges} | {
                ("r",) + edge for edge in e.dag.read_edges
            }

        def edge_json(tagged):
            kind, src, label, dst = tagged
            return {
                "kind": "write" if kind == "w" else "read",
                "src": node_json(src),
                "label": label,
                "dst": node_json(dst),
            }

        added_nodes = after.dag.nodes - before.dag.nodes
        removed_nodes = before.dag.nodes - after.dag.nodes
        added_edges = edges(after) - edges(before)
        removed_edges = edges(before) - edges(after)
        return {
            "added_nodes": [node_json(v) for v in sorted(added_nodes, key=node_str)],
            "removed_nodes": [node_json(v) for v in sorted(removed_nodes, key=node_str)],
            "added_edges": [edge_json(e) for e in sorted(added_edges, key=str)],
            "removed_edges": [edge_json(e) for e in sorted(removed_edges, key=str)],
        }


class StepRejected(CrilError):
    def __init__(self, status: int, error: str, reason: str, extra: Optional[dict] = None):
        super().__init__(f"{error}: {reason}")
        self.status = status
        self.error = error
        self.reason = reason
        self.extra = extra or {}

    def to_json(self) -> dict:
        data = {"error": self.error, "reason": self.reason}
        data.update(self.extra)
        return data


_MIME = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".mjs": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".svg": "image/svg+xml",
    ".map": "application/json",
}


def make_handler(session: DebugSession, static_dir: Optional[Path]):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):  # quiet by default
            pass

        def _send_json(self, data, status: int = 200) -> None:
            body = json.dumps(data).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.send_header("Cache-Control", "no-store")
            self.end_headers()
            self.wfile.write(body)

        def _read_payload(self) -> dict:
            length = int(self.headers.get("Content-Length") or 0)
            if length == 0:
                return {}
            raw = self.rfile.read(length)
            try:
                data = json.loads(raw.decode("utf-8"))
            except (ValueError, UnicodeDecodeError) as exc:
                raise StepRejected(400, "bad-request", f"invalid JSON body: {exc}")
            if not isinstance(data, dict):
                raise StepRejected(400, "bad-request", "JSON body must be an object")
            return data

        def do_GET(self) -> None:
            url = urlparse(self.path)
            try:
                if url.path == "/api/program":
                    self._send_json(session.program_json())
                elif url.path == "/api/state":
                    self._send_json(session.state_json())
                elif url.path == "/api/dag":
                    self._send_json(session.dag_json())
                elif url.path == "/api/transitions":
                    params = parse_qs(url.query)
                    want = params.get("dir", ["both"])[0]
                    dirs = {
                        "forward": (FORWARD,),
                        "backward": (BACKWARD,),
                        "both": (FORWARD, BACKWARD),
                    }.get(want)
                    if dirs is None:
                        raise StepRejected(400, "bad-request", f"unknown dir {want!r}")
                    self._send_json(session.transitions_json(dirs))
                elif url.path == "/api/history":
                    self._send_json(session.history_json())
                elif url.path.startswith("/api/"):
                    self._send_json({"error": "not-found", "reason": url.path}, 404)
                else:
                    self._serve_static(url.path)
            except StepRejected as exc:
                self._send_json(exc.to_json(), exc.status)

        def do_POST(self) -> None:
            url = urlparse(self.path)
            try:
                payload = self._read_payload()
                if url.path == "/api/step":
                    self._send_json(session.step(payload))
                elif url.path == "/api/run":
                    self._send_json(session.run(payload))
                elif url.path == "/api/reset":
                    self._send_json(session.reset(payload))
                else:
                    self._send_json({"error": "not-found", "reason": url.path}, 404)
            except StepRejected as exc:
                self._send_json(exc.to_json(), exc.status)

        def _serve_static(self, path: str) -> None:
            if static_dir is None:
                self._send_json(
                    {"error": "no-ui", "reason": "no static bundle configured; use /api/*"},
                    404,
                )
                return
            name = path.lstrip("/") or "index.html"
            target = (static_dir / name).resolve()
            if not str(target).startswith(str(static_dir.resolve())) or not target.is_file():
                self._send_json({"error": "not-found", "reason": path}, 404)
                return
            body = target.read_bytes()
            self.send_response(200)
            self.send_header(
                "Content-Type", _MIME.get(target.suffix, "application/octet-stream")
            )
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

    return Handler


def make_server(
    program: Program,
    host: str = "127.0.0.1",
    port: int = 8765,
    seed: int = 0,
    static_dir: Optional[Path] = None,
) -> Tuple[ThreadingHTTPServer, DebugSession]:
    """Build (but do not start) the debug server; port 0 picks a free one."""
    session = DebugSession(program, seed)
    handler = make_handler(session, static_dir)
    server = ThreadingHTTPServer((host, port), handler)
    return server, session


def serve(
    program: Program,
    host: str = "127.0.0.1",
    port: int = 8765,
    seed: int = 0,
    static_dir: Optional[Path] = None,
) -> None:
    server, _ = make_server(program, host, port, seed, static_dir)
    actual = server.server_address[1]
    print(f"cril debug service on http://{host}:{actual}/ (Ctrl-C to stop)")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
