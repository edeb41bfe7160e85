"""TCP serving of the server roles and a spec-driven client.

Each connection carries any number of sessions; every HELLO opens a fresh
server session keyed by its session id.  Malformed frames, wrong protocol
kinds and out-of-order phases are answered with an error frame.
"""

from __future__ import annotations

import json
import logging
import socketserver
import threading
from pathlib import Path

from . import wire
from .errors import GenoprivError, ProtocolError
from .transport import SocketTransport
from .wire import ErrorCode, Phase

log = logging.getLogger(__name__)


def parse_addr(addr: str, default_host: str = "127.0.0.1") -> tuple[str, int]:
    host, _, port = addr.rpartition(":")
    return host or default_host, int(port)


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        role = self.server.role
        sessions: dict[bytes, object] = {}
        while True:
            try:
                frame = wire.read_frame(self.rfile)
            except EOFError:
                return
            except (ProtocolError, OSError) as exc:
                log.info("dropping connection: %s", exc)
                return
            try:
                msg = wire.decode(frame, role.layout)
            except GenoprivError as exc:
                kind, phase, sid = _header_or_blank(frame)
                self._send(wire.error_message(sid, ErrorCode.PROTOCOL, str(exc)))
                continue
            session = sessions.get(msg.session_id)
            if session is None or msg.phase == Phase.HELLO and session.last >= Phase.HELLO:
                session = role.open_session()
                if msg.phase == Phase.HELLO:
                    sessions[msg.session_id] = session
            reply = session.handle(msg)
            if reply.kind == wire.Kind.ERROR or reply.phase == Phase.RESPONSE:
                sessions.pop(msg.session_id, None)
            if not self._send(reply):
                return

    def _send(self, msg) -> bool:
        try:
            wire.write_frame(self.wfile, msg)
            return True
        except OSError:
            return False


def _header_or_blank(frame: bytes):
    try:
        return wire.peek_header(frame)
    except ProtocolError:
        return wire.Kind.ERROR, 0, bytes(wire.SESSION_ID_SIZE)


class RoleServer(socketserver.ThreadingTCPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, role, addr: tuple[str, int]):
        self.role = role
        super().__init__(addr, _Handler)

    @property
    def port(self) -> int:
        return self.server_address[1]


def serve(role, addr: str | tuple[str, int] = ("127.0.0.1", 0), background: bool = False) -> RoleServer:
    """Serve ``role`` on ``addr``; with ``background`` the loop runs in a thread."""
    if isinstance(addr, str):
        addr = parse_addr(addr)
    server = RoleServer(role, addr)
    if background:
        threading.Thread(target=server.serve_forever, daemon=True).start()
    else:
        try:
            server.serve_forever()
        finally:
            server.server_close()
    return server


def connect(addr: str | tuple[str, int], layout, timeout: float | None = 60.0) -> SocketTransport:
    host, port = parse_addr(addr) if isinstance(addr, str) else addr
    return SocketTransport(host, port, layout, timeout)


def run_client(spec_file, addr: str):
    """Run the test described by a JSON spec file against a remote server.

    The spec names the ``test`` (paternity, pm or compat) and the files
    holding the client's input; see the README for the fields.
    """
    from . import apps, genome, groups
    from .psi import make_layout

    spec = json.loads(Path(spec_file).read_text())
    base = Path(spec_file).parent
    path = lambda key: base / spec[key]  # noqa: E731
    test = spec["test"]
    if test == "paternity":
        group = groups.read_params(path("group")) if "group" in spec else groups.default_schnorr()
        config = apps.PaternityConfig.from_dict(json.loads(path("config").read_text()))
        mine = genome.read_genome(path("genome"))
        with connect(addr, make_layout(group)) as t:
            return apps.paternity_test(config, mine, t, group)
    fp = apps.parse_fingerprint(path("fingerprint").read_text(), spec.get("kind", "disease"),
                                spec.get("name", ""))
    rule = dict(rule=spec.get("rule", "full"), required=spec.get("required"),
                min_matches=spec.get("min_matches", 1))
    if rule["required"]:
        rule["required"] = [tuple(x) for x in rule["required"]]
    if test == "pm":
        ca = groups.read_params(path("ca"))
        sigmas = (apps.loads_authorizations(path("authorizations").read_bytes())
                  if "authorizations" in spec else None)
        rsa = ca.rsa if isinstance(ca, groups.CaKey) else ca
        with connect(addr, make_layout(rsa=rsa)) as t:
            return apps.pm_test(ca, fp, t, sigmas, strict=spec.get("strict", False), **rule)
    if test == "compat":
        group = groups.read_params(path("group")) if "group" in spec else groups.default_schnorr()
        with connect(addr, make_layout(group)) as t:
            return apps.compat_test(fp, t, group=group, **rule)
    raise ValueError(f"unknown test {test!r}")
