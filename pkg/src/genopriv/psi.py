"""Message-level state machines for PSI-CA, PSI and APSI.

Every protocol is split into the offline and online steps a party performs,
one function per step.  Client states are single-use and advance strictly
forward; a PSI-CA server state is consumed by one online exchange, while
PSI/APSI server states hold reusable precomputed tags and only remember
which sessions they already answered.

Set elements are byte strings (canonical encodings); duplicates are dropped
before use.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .errors import ProtocolError, ProtocolStateError
from .groups import (RsaGroup, SchnorrGroup, default_rng, hash_to_rsa,
                     hash_to_schnorr, invert, powmod)
from .wire import SESSION_ID_SIZE, Kind, Phase, ProtocolMessage, SessionGuard

BROADCAST = bytes(SESSION_ID_SIZE)
CONFIG_DIGEST_SIZE = 32

_DONE = -1


def make_layout(group: SchnorrGroup | None = None, rsa: RsaGroup | None = None):
    """Return ``layout(kind, phase) -> element widths`` for frame decoding."""
    E = group.element_size if group else 0
    T = group.tag_size if group else 0
    RE = rsa.element_size if rsa else 0
    RT = rsa.tag_size if rsa else 0
    table = {
        (Kind.PSICA, Phase.REQUEST): (E, E),
        (Kind.PSICA, Phase.RESPONSE): (T, E, E),
        (Kind.PSI, Phase.OFFER): (T, 1),
        (Kind.PSI, Phase.REQUEST): (E,),
        (Kind.PSI, Phase.RESPONSE): (E,),
        (Kind.APSI, Phase.OFFER): (RT, 1),
        (Kind.APSI, Phase.REQUEST): (RE,),
        (Kind.APSI, Phase.RESPONSE): (RE, RE),
        (Kind.PET, Phase.REQUEST): (E, E),
        (Kind.PET, Phase.RESPONSE): (E,),
    }

    def layout(kind, phase):
        if kind == Kind.ERROR:
            return (1,)
        if phase == Phase.HELLO:
            return (CONFIG_DIGEST_SIZE,)
        if phase == Phase.OFFER and kind in (Kind.PSICA, Kind.PET):
            return ()
        try:
            widths = table[(kind, phase)]
        except KeyError:
            raise ProtocolError(f"unknown message kind/phase {kind}/{phase}") from None
        if 0 in widths:
            raise ProtocolError(f"no parameters configured for protocol kind {kind}")
        return widths

    return layout


def unique(items: Iterable[bytes]) -> list[bytes]:
    return list(dict.fromkeys(bytes(x) for x in items))


def new_session_id(rng=None) -> bytes:
    if rng is None:
        return os.urandom(SESSION_ID_SIZE)
    return rng.getrandbits(8 * SESSION_ID_SIZE).to_bytes(SESSION_ID_SIZE, "big")


def hash_elements(group: SchnorrGroup, items: Iterable[bytes]) -> list[int]:
    return [hash_to_schnorr(group, x) for x in items]


def _nonempty(items: list, who: str) -> list:
    if not items:
        raise ValueError(f"{who} set must not be empty")
    return items


def _decode_all(group, items) -> list[int]:
    return [group.decode(x) for x in items]


def _advance(state, expected: int, msg: ProtocolMessage, kind: int) -> None:
    if state.phase == _DONE:
        raise ProtocolStateError("session already finished")
    msg.expect(kind, expected, state.session_id)
    if state.phase != expected:
        raise ProtocolStateError(f"state expects phase {state.phase}, got {expected}")


def _tag_set(ts) -> set[bytes]:
    if isinstance(ts, ProtocolMessage):
        return set(ts.lists[0])
    return set(ts)


# -- PSI-CA -----------------------------------------------------------------

@dataclass
class PsicaServerState:
    group: SchnorrGroup
    r_s: int = field(repr=False)
    r_s2: int = field(repr=False)
    Y: int
    ks: list[int] = field(repr=False)
    permutation: list[int] = field(repr=False)
    session_id: bytes | None = None
    phase: int = Phase.REQUEST


@dataclass
class PsicaClientState:
    group: SchnorrGroup
    r_c: int = field(repr=False)
    r_c2: int = field(repr=False)
    X: int
    a: list[int] = field(repr=False)
    session_id: bytes
    phase: int = Phase.RESPONSE


def psica_server_offline(group: SchnorrGroup, S: Iterable[bytes], rng=None,
                         hashed: dict[bytes, int] | None = None) -> PsicaServerState:
    """Permute the server set and precompute ``ks_j = H(s_j)^{R_s'}``."""
    rng = rng or default_rng()
    items = _nonempty(unique(S), "server")
    perm = list(range(len(items)))
    rng.shuffle(perm)
    r_s, r_s2 = group.random_scalar(rng), group.random_scalar(rng)
    p = group.p
    ks = []
    for j in perm:
        h = hashed[items[j]] if hashed is not None else hash_to_schnorr(group, items[j])
        ks.append(powmod(h, r_s2, p))
    return PsicaServerState(group, r_s, r_s2, powmod(group.g, r_s, p), ks, perm)


def psica_client_offline(group: SchnorrGroup, C: Iterable[bytes], rng=None,
                         session_id: bytes | None = None,
                         hashed: list[int] | None = None) -> tuple[PsicaClientState, ProtocolMessage]:
    """Blind every client element with one shared exponent ``R_c'``.

    Returns the state and the first message ``X, {a_i}`` (client order).
    """
    rng = rng or default_rng()
    items = _nonempty(unique(C), "client")
    sid = session_id or new_session_id(rng)
    p = group.p
    r_c, r_c2 = group.random_scalar(rng), group.random_scalar(rng)
    X = powmod(group.g, r_c, p)
    hs = hashed if hashed is not None else hash_elements(group, items)
    if len(hs) != len(items):
        raise ValueError("precomputed hashes do not match the client set")
    a = [powmod(h, r_c2, p) for h in hs]
    state = PsicaClientState(group, r_c, r_c2, X, a, sid)
    msg = ProtocolMessage(sid, Kind.PSICA, Phase.REQUEST,
                          ([group.encode(X)], [group.encode(x) for x in a]))
    return state, msg


def psica_server_online(state: PsicaServerState, msg: ProtocolMessage, rng=None) -> ProtocolMessage:
    """Answer with ``{ts_j}, Y`` and the shuffled ``a_i^{R_s'}``."""
    if state.phase == _DONE:
        raise ProtocolStateError("PSI-CA server state already consumed")
    msg.expect(Kind.PSICA, Phase.REQUEST)
    rng = rng or default_rng()
    G = state.group
    if len(msg.lists) != 2 or len(msg.lists[0]) != 1:
        raise ProtocolError("malformed PSI-CA request")
    state.phase = _DONE
    state.session_id = msg.session_id
    X = G.decode(msg.lists[0][0])
    a = _decode_all(G, msg.lists[1])
    p = G.p
    a2 = [powmod(x, state.r_s2, p) for x in a]
    rng.shuffle(a2)
    xr = powmod(X, state.r_s, p)
    ts = [G.tag(xr * k % p) for k in state.ks]
    return ProtocolMessage(msg.session_id, Kind.PSICA, Phase.RESPONSE,
                           (ts, [G.encode(state.Y)], [G.encode(x) for x in a2]))


def psica_client_finalize(state: PsicaClientState, msg: ProtocolMessage) -> int:
    """Return ``|{ts} & {tc}|``.  Only the count is ever exposed."""
    _advance(state, Phase.RESPONSE, msg, Kind.PSICA)
    G = state.group
    if len(msg.lists) != 3 or len(msg.lists[1]) != 1:
        raise ProtocolError("malformed PSI-CA response")
    if len(msg.lists[2]) != len(state.a):
        raise ProtocolError("response carries the wrong number of elements")
    if any(len(t) != G.tag_size for t in msg.lists[0]):
        raise ProtocolError("tag of the wrong width")
    state.phase = _DONE
    p = G.p
    Y = G.decode(msg.lists[1][0])
    yr = powmod(Y, state.r_c, p)
    inv = invert(state.r_c2, G.q)
    tc = {G.tag(yr * powmod(G.decode(x), inv, p) % p) for x in msg.lists[2]}
    return len(tc & set(msg.lists[0]))


# -- PSI --------------------------------------------------------------------

@dataclass
class PsiServerState:
    group: SchnorrGroup
    r_s: int = field(repr=False)
    tags: list[bytes] = field(repr=False)
    guard: SessionGuard = field(default_factory=SessionGuard, repr=False)


@dataclass
class PsiClientState:
    group: SchnorrGroup
    items: list[bytes] = field(repr=False)
    r: list[int] = field(repr=False)
    session_id: bytes
    phase: int = Phase.RESPONSE


def iter_psi_tags(group: SchnorrGroup, items: Iterable[bytes], r_s: int) -> Iterator[bytes]:
    """Lazily yield ``H'(H(s)^{R_s})``; holds one hash at a time."""
    p = group.p
    for s in items:
        yield group.tag(powmod(hash_to_schnorr(group, s), r_s, p))


def offer_message(tags: list[bytes], kind: int = Kind.PSI, path: str | None = None) -> ProtocolMessage:
    """Tag publication: inline tags, or a reference to a tag file."""
    ref = [] if path is None else [bytes([c]) for c in os.fsencode(path)]
    return ProtocolMessage(BROADCAST, kind, Phase.OFFER, ([] if path else tags, ref))


def psi_server_offline(group: SchnorrGroup, S: Iterable[bytes], rng=None,
                       r_s: int | None = None) -> tuple[PsiServerState, ProtocolMessage]:
    """Precompute and publish ``ts_j = H'(H(s_j)^{R_s})`` over the permuted set.

    Passing a fixed ``r_s`` republishes identical tags; calling again
    without one re-randomizes (fresh-session mode).
    """
    rng = rng or default_rng()
    items = _nonempty(unique(S), "server")
    rng.shuffle(items)
    r_s = r_s or group.random_scalar(rng)
    tags = list(iter_psi_tags(group, items, r_s))
    return PsiServerState(group, r_s, tags), offer_message(tags)


def psi_client_request(group: SchnorrGroup, C: Iterable[bytes], rng=None,
                       session_id: bytes | None = None,
                       hashed: list[int] | None = None) -> tuple[PsiClientState, ProtocolMessage]:
    """Blind each element with its own exponent ``R_{c:i}``."""
    rng = rng or default_rng()
    items = _nonempty(unique(C), "client")
    sid = session_id or new_session_id(rng)
    hs = hashed if hashed is not None else hash_elements(group, items)
    if len(hs) != len(items):
        raise ValueError("precomputed hashes do not match the client set")
    r = [group.random_scalar(rng) for _ in items]
    p = group.p
    a = [group.encode(powmod(h, ri, p)) for h, ri in zip(hs, r)]
    return PsiClientState(group, items, r, sid), ProtocolMessage(sid, Kind.PSI, Phase.REQUEST, (a,))


def psi_server_respond(state: PsiServerState, msg: ProtocolMessage) -> ProtocolMessage:
    """``a'_i = a_i^{R_s}`` in request order (no shuffle)."""
    msg.expect(Kind.PSI, Phase.REQUEST)
    if len(msg.lists) != 1:
        raise ProtocolError("malformed PSI request")
    G = state.group
    a = _decode_all(G, msg.lists[0])
    state.guard.advance(msg.session_id, Phase.REQUEST)
    p = G.p
    out = [G.encode(powmod(x, state.r_s, p)) for x in a]
    return ProtocolMessage(msg.session_id, Kind.PSI, Phase.RESPONSE, (out,))


def psi_client_finalize(state: PsiClientState, msg: ProtocolMessage, ts) -> list[bytes]:
    """Return the client elements whose unblinded tag is among the server tags."""
    _advance(state, Phase.RESPONSE, msg, Kind.PSI)
    G = state.group
    if len(msg.lists) != 1 or len(msg.lists[0]) != len(state.items):
        raise ProtocolError("response length does not match the request")
    state.phase = _DONE
    tags = _tag_set(ts)
    p, q = G.p, G.q
    out = []
    for item, ri, raw in zip(state.items, state.r, msg.lists[0]):
        if G.tag(powmod(G.decode(raw), invert(ri, q), p)) in tags:
            out.append(item)
    return out


# -- APSI -------------------------------------------------------------------

@dataclass
class ApsiServerState:
    rsa: RsaGroup
    r_s: int = field(repr=False)
    Y: int
    tags: list[bytes] = field(repr=False)
    guard: SessionGuard = field(default_factory=SessionGuard, repr=False)


@dataclass
class ApsiClientState:
    rsa: RsaGroup
    items: list[bytes] = field(repr=False)
    sigmas: list[int] = field(repr=False)
    r: list[int] = field(repr=False)
    session_id: bytes
    phase: int = Phase.RESPONSE


def apsi_server_offline(rsa: RsaGroup, S: Iterable[bytes], rng=None) -> tuple[ApsiServerState, ProtocolMessage]:
    """Publish ``ts_j = H'(H(s_j)^{2 R_s})`` with ``R_s`` from the short range."""
    rng = rng or default_rng()
    items = _nonempty(unique(S), "server")
    rng.shuffle(items)
    r_s = rsa.random_scalar(rng)
    N = rsa.N
    tags = [rsa.tag(powmod(hash_to_rsa(rsa, s), 2 * r_s, N)) for s in items]
    # Y only depends on R_s, so it is computed here rather than per session.
    Y = powmod(rsa.g, 2 * rsa.e * r_s, N)
    return ApsiServerState(rsa, r_s, Y, tags), offer_message(tags, Kind.APSI)


def apsi_client_request(rsa: RsaGroup, C: Iterable[bytes], sigmas: Iterable[int], rng=None,
                        session_id: bytes | None = None) -> tuple[ApsiClientState, ProtocolMessage]:
    """``a_i = sigma_i * g^{R_{c:i}}``; each element must carry one authorization."""
    rng = rng or default_rng()
    items = [bytes(x) for x in C]
    sigmas = list(sigmas)
    if len(items) != len(sigmas):
        raise ValueError("every client element needs exactly one authorization")
    pairs = list(dict(zip(items, sigmas)).items())
    items, sigmas = [x for x, _ in pairs], [s for _, s in pairs]
    _nonempty(items, "client")
    sid = session_id or new_session_id(rng)
    N = rsa.N
    r = [rsa.random_scalar(rng) for _ in items]
    a = [rsa.encode(s % N * powmod(rsa.g, ri, N) % N) for s, ri in zip(sigmas, r)]
    state = ApsiClientState(rsa, items, sigmas, r, sid)
    return state, ProtocolMessage(sid, Kind.APSI, Phase.REQUEST, (a,))


def apsi_server_respond(state: ApsiServerState, msg: ProtocolMessage) -> ProtocolMessage:
    msg.expect(Kind.APSI, Phase.REQUEST)
    if len(msg.lists) != 1:
        raise ProtocolError("malformed APSI request")
    rsa = state.rsa
    a = [rsa.decode(x) for x in msg.lists[0]]
    state.guard.advance(msg.session_id, Phase.REQUEST)
    N = rsa.N
    exp = 2 * rsa.e * state.r_s
    out = [rsa.encode(powmod(x, exp, N)) for x in a]
    return ProtocolMessage(msg.session_id, Kind.APSI, Phase.RESPONSE, ([rsa.encode(state.Y)], out))


def apsi_client_finalize(state: ApsiClientState, msg: ProtocolMessage, ts) -> list[bytes]:
    """``tc_i = H'(a'_i * Y^{-R_{c:i}})``; returns the matched client elements."""
    _advance(state, Phase.RESPONSE, msg, Kind.APSI)
    rsa = state.rsa
    if len(msg.lists) != 2 or len(msg.lists[0]) != 1 or len(msg.lists[1]) != len(state.items):
        raise ProtocolError("response length does not match the request")
    state.phase = _DONE
    N = rsa.N
    y_inv = invert(rsa.decode(msg.lists[0][0]), N)
    tags = _tag_set(ts)
    out = []
    for item, ri, raw in zip(state.items, state.r, msg.lists[1]):
        if rsa.tag(rsa.decode(raw) * powmod(y_inv, ri, N) % N) in tags:
            out.append(item)
    return out


# -- tag files --------------------------------------------------------------

_TAG_MAGIC = b"GPTS"


def write_tag_file(path, tags: Iterable[bytes], tag_size: int) -> int:
    """Stream tags to disk; returns the count written."""
    n = 0
    with open(path, "wb") as fh:
        fh.write(_TAG_MAGIC + bytes([1, tag_size]))
        for t in tags:
            if len(t) != tag_size:
                raise ValueError("tag of the wrong width")
            fh.write(t)
            n += 1
    return n


def read_tag_file(path) -> list[bytes]:
    with open(path, "rb") as fh:
        head = fh.read(6)
        if head[:4] != _TAG_MAGIC or len(head) != 6:
            raise ProtocolError("not a tag file")
        size = head[5]
        data = fh.read()
    if len(data) % size:
        raise ProtocolError("truncated tag file")
    return [data[i:i + size] for i in range(0, len(data), size)]
