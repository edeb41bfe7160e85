import io

import pytest
from hypothesis import given, strategies as st

from genopriv import wire
from genopriv.errors import ProtocolError, ProtocolStateError
from genopriv.wire import HEADER_SIZE, Kind, Phase, ProtocolMessage, SessionGuard

SID = bytes(range(16))


def test_header_is_22_bytes():
    assert HEADER_SIZE == 22


def test_frame_size_matches_encoding():
    msg = ProtocolMessage(SID, Kind.PSI, Phase.REQUEST, ([b"a" * 128] * 3,))
    assert msg.payload_size == 384
    assert len(msg.encode()) == msg.frame_size == 22 + 4 + 384


@given(st.lists(st.integers(0, 5), max_size=4), st.integers(1, 9), st.binary(min_size=16, max_size=16))
def test_roundtrip(counts, width, sid):
    lists = tuple(tuple(bytes([i % 256]) * width for i in range(c)) for c in counts)
    msg = ProtocolMessage(sid, Kind.PSICA, Phase.RESPONSE, lists)
    back = wire.decode(msg.encode(), [width] * len(counts))
    assert back == msg


def test_decode_rejects_truncation_and_trailing_bytes():
    frame = ProtocolMessage(SID, Kind.PSI, Phase.REQUEST, ([b"xy"],)).encode()
    with pytest.raises(ProtocolError):
        wire.decode(frame[:-1], [2])
    with pytest.raises(ProtocolError):
        wire.decode(frame, [1])
    with pytest.raises(ProtocolError):
        wire.decode(frame[:10], [2])


def test_expect_distinguishes_kind_and_phase():
    msg = ProtocolMessage(SID, Kind.PSI, Phase.REQUEST)
    msg.expect(Kind.PSI, Phase.REQUEST, SID)
    with pytest.raises(ProtocolError):
        msg.expect(Kind.APSI, Phase.REQUEST)
    with pytest.raises(ProtocolStateError):
        msg.expect(Kind.PSI, Phase.RESPONSE)
    with pytest.raises(ProtocolError):
        msg.expect(Kind.PSI, Phase.REQUEST, bytes(16))


def test_bad_session_id_length():
    with pytest.raises(ProtocolError):
        ProtocolMessage(b"short", Kind.PSI, Phase.HELLO)


def test_error_message_roundtrip():
    err = wire.error_message(SID, wire.ErrorCode.VALIDATION, "bad element")
    back = wire.decode(err.encode(), lambda k, p: (1,))
    assert back.kind == Kind.ERROR and back.phase == 3
    assert wire.error_text(back) == "bad element"


def test_stream_io():
    buf = io.BytesIO()
    msgs = [ProtocolMessage(SID, Kind.PET, Phase.RESPONSE, ([b"q" * 4] * i,)) for i in range(3)]
    for m in msgs:
        wire.write_frame(buf, m)
    buf.seek(0)
    assert [wire.decode(wire.read_frame(buf), [4]) for _ in msgs] == msgs
    with pytest.raises(EOFError):
        wire.read_frame(buf)


def test_stream_rejects_implausible_length():
    with pytest.raises(ProtocolError):
        wire.read_frame(io.BytesIO(b"\x00\x00\x00\x01" + b"x"))


def test_session_guard():
    g = SessionGuard()
    g.advance(SID, Phase.REQUEST)
    with pytest.raises(ProtocolStateError):
        g.advance(SID, Phase.REQUEST)
    g.advance(bytes(16), Phase.REQUEST)
    g.forget(SID)
    g.advance(SID, Phase.REQUEST)
