"""Client-side transports that move framed messages and keep a transcript.

:class:`LocalTransport` runs a server session in-process but still pushes
every message through the binary framing, so byte counts are identical to
a socket run.  :class:`SocketTransport` talks to a remote ``serve`` process.
"""

from __future__ import annotations

import socket
import time
from dataclasses import asdict, dataclass

from . import wire
from .errors import ProtocolError, ValidationError
from .wire import ErrorCode, Kind, ProtocolMessage


@dataclass(frozen=True)
class TranscriptEntry:
    direction: str  # "c2s" or "s2c"
    kind: int
    phase: int
    frame_bytes: int
    payload_bytes: int
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def raise_for_error(msg: ProtocolMessage) -> ProtocolMessage:
    if msg.kind == Kind.ERROR:
        text = wire.error_text(msg)
        if msg.phase == ErrorCode.VALIDATION:
            raise ValidationError(f"server rejected the message: {text}")
        raise ProtocolError(f"server reported an error: {text}")
    return msg


class Transport:
    def __init__(self, layout):
        self.layout = layout
        self.transcript: list[TranscriptEntry] = []

    def _record(self, direction, msg: ProtocolMessage, nbytes: int, seconds: float = 0.0):
        self.transcript.append(TranscriptEntry(direction, msg.kind, msg.phase, nbytes,
                                               msg.payload_size, seconds))

    def exchange(self, msg: ProtocolMessage) -> ProtocolMessage:
        raise NotImplementedError

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def bytes_sent(self, phase: int | None = None) -> int:
        return sum(e.frame_bytes for e in self.transcript
                   if e.direction == "c2s" and (phase is None or e.phase == phase))

    def bytes_received(self, phase: int | None = None) -> int:
        return sum(e.frame_bytes for e in self.transcript
                   if e.direction == "s2c" and (phase is None or e.phase == phase))


class LocalTransport(Transport):
    """In-process transport around a server session object with ``handle``."""

    def __init__(self, session, layout):
        super().__init__(layout)
        self.session = session

    def exchange(self, msg: ProtocolMessage) -> ProtocolMessage:
        frame = msg.encode()
        self._record("c2s", msg, len(frame))
        received = wire.decode(frame, self.layout)
        t0 = time.perf_counter()
        reply = self.session.handle(received)
        elapsed = time.perf_counter() - t0
        out = reply.encode()
        self._record("s2c", reply, len(out), elapsed)
        return raise_for_error(wire.decode(out, self.layout))


class SocketTransport(Transport):
    def __init__(self, host: str, port: int, layout, timeout: float | None = 60.0):
        super().__init__(layout)
        self.sock = socket.create_connection((host, port), timeout=timeout)
        self.stream = self.sock.makefile("rwb")

    def exchange(self, msg: ProtocolMessage) -> ProtocolMessage:
        n = wire.write_frame(self.stream, msg)
        self._record("c2s", msg, n)
        t0 = time.perf_counter()
        frame = wire.read_frame(self.stream)
        elapsed = time.perf_counter() - t0
        reply = wire.decode(frame, self.layout)
        self._record("s2c", reply, len(frame), elapsed)
        return raise_for_error(reply)

    def close(self) -> None:
        try:
            self.stream.close()
        finally:
            self.sock.close()
