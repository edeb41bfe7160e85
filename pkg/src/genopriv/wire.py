"""Binary framing shared by every protocol.

Frame layout (all integers big-endian)::

    u32 length of everything that follows
    u8  protocol kind   (0x01 PSI-CA, 0x02 PSI, 0x03 APSI, 0x04 PET, 0xFF error)
    u8  phase
    16  session id
    repeated: u32 element count, then count fixed-width elements

Element widths are not on the wire; the receiver knows them from the
protocol kind, the phase and the common group parameters.
"""

from __future__ import annotations

import struct
import threading
from dataclasses import dataclass
from enum import IntEnum
from typing import Callable, Sequence

from .errors import ProtocolError, ProtocolStateError

SESSION_ID_SIZE = 16
MAX_FRAME = 1 << 31
_HEAD = struct.Struct(">IBB16s")
_COUNT = struct.Struct(">I")
HEADER_SIZE = _HEAD.size


class Kind(IntEnum):
    PSICA = 0x01
    PSI = 0x02
    APSI = 0x03
    PET = 0x04
    ERROR = 0xFF


class Phase(IntEnum):
    HELLO = 0
    OFFER = 1
    REQUEST = 2
    RESPONSE = 3


class ErrorCode(IntEnum):
    PROTOCOL = 2
    VALIDATION = 3
    IO = 4


@dataclass(frozen=True)
class ProtocolMessage:
    session_id: bytes
    kind: int
    phase: int
    lists: tuple[tuple[bytes, ...], ...] = ()

    def __post_init__(self):
        if len(self.session_id) != SESSION_ID_SIZE:
            raise ProtocolError("session id must be 16 bytes")
        object.__setattr__(self, "lists", tuple(tuple(x) for x in self.lists))

    @property
    def payload_size(self) -> int:
        """Bytes of element data, excluding all framing."""
        return sum(len(item) for items in self.lists for item in items)

    @property
    def frame_size(self) -> int:
        return HEADER_SIZE + sum(_COUNT.size + sum(map(len, items)) for items in self.lists)

    def encode(self) -> bytes:
        parts = [b""]
        for items in self.lists:
            parts.append(_COUNT.pack(len(items)))
            parts.extend(items)
        body = b"".join(parts)
        head = _HEAD.pack(_HEAD.size - 4 + len(body), self.kind, self.phase, self.session_id)
        return head + body

    def expect(self, kind: int, phase: int, session_id: bytes | None = None) -> "ProtocolMessage":
        if self.kind != kind:
            raise ProtocolError(f"expected protocol kind {kind:#04x}, got {self.kind:#04x}")
        if self.phase != phase:
            raise ProtocolStateError(f"expected phase {phase}, got {self.phase}")
        if session_id is not None and self.session_id != session_id:
            raise ProtocolError("session id mismatch")
        return self


Layout = Callable[[int, int], Sequence[int]]


def peek_header(frame: bytes) -> tuple[int, int, bytes]:
    if len(frame) < _HEAD.size:
        raise ProtocolError("truncated frame header")
    length, kind, phase, sid = _HEAD.unpack_from(frame)
    if length != len(frame) - 4:
        raise ProtocolError("frame length prefix does not match frame size")
    return kind, phase, sid


def decode(frame: bytes, layout: Layout | Sequence[int]) -> ProtocolMessage:
    """Parse a complete frame.  ``layout`` gives element widths per list."""
    kind, phase, sid = peek_header(frame)
    widths = layout(kind, phase) if callable(layout) else layout
    off = _HEAD.size
    lists = []
    for w in widths:
        if off + _COUNT.size > len(frame):
            raise ProtocolError("missing element list")
        (count,) = _COUNT.unpack_from(frame, off)
        off += _COUNT.size
        end = off + count * w
        if end > len(frame):
            raise ProtocolError("element list overruns the frame")
        lists.append(tuple(frame[i:i + w] for i in range(off, end, w)))
        off = end
    if off != len(frame):
        raise ProtocolError("trailing bytes after the last element list")
    return ProtocolMessage(sid, kind, phase, tuple(lists))


def error_message(session_id: bytes, code: int, text: str) -> ProtocolMessage:
    data = text.encode("utf-8")[:4096]
    return ProtocolMessage(session_id, Kind.ERROR, int(code), (tuple(data[i:i + 1] for i in range(len(data))),))


def error_text(msg: ProtocolMessage) -> str:
    return b"".join(msg.lists[0]).decode("utf-8", "replace") if msg.lists else ""


# -- stream helpers ---------------------------------------------------------

def _read_exact(stream, n: int) -> bytes:
    buf = bytearray()
    while len(buf) < n:
        chunk = stream.read(n - len(buf))
        if not chunk:
            raise EOFError("connection closed mid-frame")
        buf += chunk
    return bytes(buf)


def read_frame(stream) -> bytes:
    """Read one frame from a binary file-like object; raises EOFError at end."""
    prefix = stream.read(4)
    if not prefix:
        raise EOFError("connection closed")
    if len(prefix) < 4:
        prefix += _read_exact(stream, 4 - len(prefix))
    (length,) = struct.unpack(">I", prefix)
    if length < _HEAD.size - 4 or length > MAX_FRAME:
        raise ProtocolError(f"implausible frame length {length}")
    return prefix + _read_exact(stream, length)


def write_frame(stream, msg: ProtocolMessage) -> int:
    data = msg.encode()
    stream.write(data)
    stream.flush()
    return len(data)


class SessionGuard:
    """Rejects replayed or out-of-order phases per session id."""

    def __init__(self):
        self._last: dict[bytes, int] = {}
        self._lock = threading.Lock()

    def advance(self, session_id: bytes, phase: int) -> None:
        with self._lock:
            last = self._last.get(session_id, -1)
            if phase <= last:
                raise ProtocolStateError(f"phase {phase} replayed or out of order in session")
            self._last[session_id] = phase

    def forget(self, session_id: bytes) -> None:
        with self._lock:
            self._last.pop(session_id, None)
