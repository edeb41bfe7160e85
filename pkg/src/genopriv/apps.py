"""The three end-to-end genetic tests.

* paternity: PSI-CA (or PET) over RFLP/SNP fragment records, plus the
  strawman and nucleotide-wise variants over sampled genome positions;
* personalized medicine: APSI between a pharmaceutical holding an
  authority-signed fingerprint and a patient;
* genetic compatibility: PSI between a disease fingerprint and a genome.

Each server side is a *role* object: it holds the party's precomputed input
and hands out single-use sessions that speak the framed wire protocol.  The
client drivers below talk to a role through a transport, either in-process
or over a socket, and return a :class:`TestReport`.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from . import elgamal
from .errors import (ConfigMismatchError, GenoprivError, ProtocolError,
                     ProtocolStateError, ValidationError)
from .genome import Genome, decode_element, diff_against_reference, encode_element
from .groups import (CaKey, RsaGroup, SchnorrGroup, ca_authorize, default_rng,
                     default_schnorr, dumps_params, verify_authorization)
from .pet import PetQuery, PetResponse, pet_count_matches, pet_query, pet_respond, encode_nucleotides
from .psi import (CONFIG_DIGEST_SIZE, apsi_client_finalize, apsi_client_request,
                  apsi_server_offline, apsi_server_respond, hash_elements, make_layout,
                  new_session_id, psi_client_finalize, psi_client_request, psi_server_offline,
                  psi_server_respond, psica_client_finalize, psica_client_offline,
                  psica_server_offline, psica_server_online, read_tag_file, write_tag_file)
from .rflp import PSTI, Enzyme, Marker, fragment_set, snp_fragment_select
from .transport import LocalTransport, Transport
from .wire import ErrorCode, Kind, Phase, ProtocolMessage, error_message

MODES = ("rflp-psica", "rflp-pet", "nucleotide-pet", "strawman-psica")
RULES = ("full", "subset")
DEFAULT_MAX_INPUT = 1000


# -- paternity configuration ------------------------------------------------------

@dataclass(frozen=True)
class PaternityConfig:
    """Common input of a paternity test; both parties must hold the same one."""

    mode: str = "rflp-psica"
    enzymes: tuple[Enzyme, ...] = (PSTI,)
    markers: tuple[Marker, ...] = ()
    snp_panel: tuple[tuple[int, int], ...] = ()
    tau: int | None = None
    sampling_fraction: float = 0.01
    sampling_seed: int = 0
    match_threshold: float = 0.998

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        object.__setattr__(self, "enzymes", tuple(self.enzymes))
        object.__setattr__(self, "markers", tuple(self.markers))
        object.__setattr__(self, "snp_panel", tuple(tuple(x) for x in self.snp_panel))
        if not 0 < self.sampling_fraction <= 1:
            raise ValueError("sampling fraction must lie in (0, 1]")
        if self.uses_records:
            if self.l == 0:
                raise ValueError("record-based modes need markers or an SNP panel")
            if self.tau is None:
                object.__setattr__(self, "tau", max(self.l - 1, 1))
            if not 1 <= self.tau <= self.l:
                raise ValueError("threshold must satisfy 1 <= tau <= l")

    @property
    def uses_records(self) -> bool:
        return self.mode.startswith("rflp")

    @property
    def uses_pet(self) -> bool:
        return self.mode.endswith("pet")

    @property
    def l(self) -> int:
        return len(self.snp_panel) or len(self.markers)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "enzymes": [[e.name, e.pattern, e.offset] for e in self.enzymes],
            "markers": [[m.id, m.probe] for m in self.markers],
            "snp_panel": [list(x) for x in self.snp_panel],
            "tau": self.tau,
            "sampling_fraction": self.sampling_fraction,
            "sampling_seed": self.sampling_seed,
            "match_threshold": self.match_threshold,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PaternityConfig":
        d = dict(d)
        if "enzymes" in d:
            d["enzymes"] = tuple(Enzyme(*e) for e in d["enzymes"])
        if "markers" in d:
            d["markers"] = tuple(Marker(*m) for m in d["markers"])
        return cls(**d)

    def digest(self, group: SchnorrGroup, genome_length: int | None = None) -> bytes:
        """Hash of the common input exchanged in the HELLO handshake."""
        body = self.to_dict()
        if not self.uses_records:
            body["genome_length"] = genome_length
        h = hashlib.sha256(json.dumps(body, sort_keys=True).encode())
        h.update(dumps_params(group))
        return h.digest()


def sample_positions(n: int, fraction: float, seed: int) -> np.ndarray:
    """Common sorted 1-based positions for the sampled (strawman) modes."""
    k = max(1, round(n * fraction))
    return np.sort(np.random.default_rng(seed).choice(n, size=k, replace=False)) + 1


def paternity_input(config: PaternityConfig, genome: Genome):
    """A party's local preparation: fragment records or sampled positions."""
    if config.uses_records:
        fs = (snp_fragment_select(genome, config.snp_panel) if config.snp_panel
              else fragment_set(genome, config.enzymes, config.markers))
        return fs.lengths() if config.uses_pet else fs.elements()
    pos = sample_positions(len(genome), config.sampling_fraction, config.sampling_seed).tolist()
    if config.uses_pet:
        return encode_nucleotides(genome.seq[i - 1] for i in pos)
    return list(genome.elements(pos))


def classify_paternity(pt: int, l: int, tau: int) -> bool:
    """Positive iff at least ``tau`` of the ``l`` records matched."""
    if pt < 0 or pt > l:
        raise ValueError(f"match count {pt} outside [0, {l}]")
    return pt >= tau


# -- fingerprints -------------------------------------------------------------------

@dataclass(frozen=True)
class Fingerprint:
    pairs: tuple[tuple[str, int], ...]
    kind: str = "disease"
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple((str(s), int(p)) for s, p in self.pairs))
        positions = [p for _, p in self.pairs]
        if len(set(positions)) != len(positions):
            raise ValueError("fingerprint positions must be distinct")
        if self.kind not in ("drug", "disease"):
            raise ValueError("fingerprint kind is 'drug' or 'disease'")
        for s, p in self.pairs:
            encode_element(s, p)

    def __len__(self) -> int:
        return len(self.pairs)

    def elements(self) -> list[bytes]:
        return [encode_element(s, p) for s, p in self.pairs]

    @classmethod
    def diploid(cls, pairs: Iterable[tuple[str, int]], genome_length: int, **kw) -> "Fingerprint":
        """Both allele copies; copy two lives at ``position + genome_length``."""
        pairs = list(pairs)
        return cls(tuple(pairs) + tuple((s, p + genome_length) for s, p in pairs), **kw)


def format_fingerprint(fp: Fingerprint) -> str:
    return "".join(f"{s}\t{p}\n" for s, p in fp.pairs)


def parse_fingerprint(text: str, kind: str = "disease", name: str = "") -> Fingerprint:
    pairs = []
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            s, p = line.split("\t")
            pairs.append((s, int(p)))
    return Fingerprint(tuple(pairs), kind, name)


def dumps_authorizations(rsa: RsaGroup, sigmas: Sequence[int]) -> bytes:
    return len(sigmas).to_bytes(4, "big") + b"".join(rsa.encode(s) for s in sigmas)


def loads_authorizations(data: bytes) -> list[int]:
    count = int.from_bytes(data[:4], "big")
    body = data[4:]
    if count == 0:
        return []
    if len(body) % count:
        raise ValueError("authorization bundle is not a whole number of values")
    w = len(body) // count
    return [int.from_bytes(body[i:i + w], "big") for i in range(0, len(body), w)]


def authorize_fingerprint(ca: CaKey, fp: Fingerprint) -> list[int]:
    return [ca_authorize(ca, e) for e in fp.elements()]


def plant_variants(genome: Genome, pairs: Iterable[tuple[str, int]]) -> Genome:
    """Set the given 1-based positions (those inside this genome) to the given symbols."""
    seq = bytearray(genome.seq.encode("ascii"))
    for s, p in pairs:
        if 1 <= p <= len(seq):
            seq[p - 1] = ord(s)
    return Genome(seq.decode("ascii"), genome.scale)


def diploid_elements(haplotypes: Sequence[Genome], reference: Genome, strict: bool = False) -> list[bytes]:
    """Server set for the fingerprint tests.

    By default each copy contributes only its differences from the
    reference; ``strict`` uses every position.  Copy ``k`` is shifted by
    ``k * n`` so alleles on different copies stay distinct elements.
    """
    n = len(reference)
    out: list[bytes] = []
    for k, hap in enumerate(haplotypes):
        if strict:
            out.extend(encode_element(s, i + 1 + k * n) for i, s in enumerate(hap.seq))
        else:
            out.extend(diff_against_reference(hap, reference).elements(offset=k * n))
    return out


def synthetic_panel(reference: Genome, mutations: int, rng=None, kind: str = "disease",
                    name: str = "") -> Fingerprint:
    """Diploid fingerprint of ``mutations`` non-reference alleles at random positions."""
    rng = np.random.default_rng(rng)
    pos = np.sort(rng.choice(len(reference), size=mutations, replace=False)) + 1
    pairs = []
    for p in pos.tolist():
        ref = reference.seq[p - 1]
        alts = [b for b in "ACGT" if b != ref]
        pairs.append((alts[int(rng.integers(0, 3))], p))
    return Fingerprint.diploid(pairs, len(reference), kind=kind, name=name)


# -- reports ------------------------------------------------------------------------

@dataclass
class TestReport:
    kind: str
    outcome: bool
    value: int | list
    params: dict = field(default_factory=dict)
    transcript: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    def payload(self, direction: str, phase: int | None = None) -> int:
        return sum(e.payload_bytes for e in self.transcript
                   if e.direction == direction and (phase is None or e.phase == phase))

    def frames(self, direction: str, phase: int | None = None) -> int:
        return sum(e.frame_bytes for e in self.transcript
                   if e.direction == direction and (phase is None or e.phase == phase))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["transcript"] = [e.to_dict() for e in self.transcript]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, default=str)


# -- server roles -------------------------------------------------------------------

class ServerSession:
    """One client conversation; errors become error frames, never exceptions."""

    def __init__(self, role: "ServerRole"):
        self.role = role
        self.last = -1
        self.session_id: bytes | None = None
        self.failed = False
        self.state = None
        self.timings: dict[str, float] = {}

    def handle(self, msg: ProtocolMessage) -> ProtocolMessage:
        try:
            return self._dispatch(msg)
        except ValidationError as exc:
            self.failed = True
            return error_message(msg.session_id, ErrorCode.VALIDATION, str(exc))
        except (GenoprivError, ValueError) as exc:
            self.failed = True
            return error_message(msg.session_id, ErrorCode.PROTOCOL, str(exc))

    def _dispatch(self, msg: ProtocolMessage) -> ProtocolMessage:
        if self.failed:
            raise ProtocolStateError("session was aborted")
        if msg.kind != self.role.kind:
            raise ProtocolError(f"this server speaks protocol kind {self.role.kind:#04x}")
        if msg.phase <= self.last:
            raise ProtocolStateError(f"phase {msg.phase} replayed or out of order")
        if msg.phase == Phase.HELLO:
            if not msg.lists or len(msg.lists[0]) != 1 or msg.lists[0][0] != self.role.config_digest:
                raise ConfigMismatchError("common input differs between client and server")
            self.last, self.session_id = Phase.HELLO, msg.session_id
            t0 = time.perf_counter()
            reply = self.role.offer(self)
            self.timings["offline"] = self.timings.get("offline", 0.0) + time.perf_counter() - t0
            return reply
        if msg.phase == Phase.REQUEST:
            if self.last != Phase.HELLO:
                raise ProtocolStateError("request before handshake")
            if msg.session_id != self.session_id:
                raise ProtocolError("session id changed mid-session")
            self.last = Phase.REQUEST
            t0 = time.perf_counter()
            reply = self.role.respond(self, msg)
            self.timings["online"] = time.perf_counter() - t0
            return reply
        raise ProtocolStateError(f"server does not accept phase {msg.phase}")


class ServerRole:
    kind: int
    config_digest: bytes
    layout = None
    offline_seconds = 0.0

    def open_session(self) -> ServerSession:
        return ServerSession(self)

    def offer(self, session: ServerSession) -> ProtocolMessage:
        return ProtocolMessage(session.session_id, self.kind, Phase.OFFER, ())

    def respond(self, session: ServerSession, msg: ProtocolMessage) -> ProtocolMessage:
        raise NotImplementedError


class PaternityServer(ServerRole):
    """Alleged-parent side.  PSI-CA state is rebuilt for every session."""

    def __init__(self, config: PaternityConfig, genome: Genome, group: SchnorrGroup | None = None, rng=None):
        self.config = config
        self.group = group or default_schnorr()
        self.rng = rng or default_rng()
        self.kind = Kind.PET if config.uses_pet else Kind.PSICA
        self.layout = make_layout(self.group)
        self.genome_length = len(genome)
        t0 = time.perf_counter()
        self.input = paternity_input(config, genome)
        self.prepare_seconds = time.perf_counter() - t0
        self.config_digest = config.digest(self.group, len(genome))

    def offer(self, session):
        if self.kind == Kind.PSICA:
            session.state = psica_server_offline(self.group, self.input, self.rng)
        return super().offer(session)

    def respond(self, session, msg):
        if self.kind == Kind.PSICA:
            return psica_server_online(session.state, msg, self.rng)
        query = PetQuery.from_message(self.group, msg)
        return pet_respond(query.pk, query, self.input, self.rng).to_message(self.group)


class _TagServer(ServerRole):
    tag_path: str | None = None

    def _publish(self, tags: list[bytes], tag_size: int, tag_file) -> None:
        self.tags = tags
        if tag_file is not None:
            write_tag_file(tag_file, tags, tag_size)
            self.tag_path = str(tag_file)

    def offer(self, session):
        if self.tag_path is not None:
            ref = [bytes([c]) for c in self.tag_path.encode()]
            return ProtocolMessage(session.session_id, self.kind, Phase.OFFER, ([], ref))
        return ProtocolMessage(session.session_id, self.kind, Phase.OFFER, (self.tags, []))


class PatientServer(_TagServer):
    """Patient side of the personalized-medicine test (APSI server)."""

    kind = Kind.APSI

    def __init__(self, rsa: RsaGroup, elements: Iterable[bytes], rng=None, tag_file=None):
        self.rsa = rsa
        self.layout = make_layout(rsa=rsa)
        t0 = time.perf_counter()
        self.state, _ = apsi_server_offline(rsa, elements, rng)
        self.offline_seconds = time.perf_counter() - t0
        self._publish(self.state.tags, rsa.tag_size, tag_file)
        self.config_digest = pm_digest(rsa)

    def respond(self, session, msg):
        return apsi_server_respond(self.state, msg)


class CompatServer(_TagServer):
    """Genome holder in the compatibility test (PSI server)."""

    kind = Kind.PSI

    def __init__(self, group: SchnorrGroup, elements: Iterable[bytes], rng=None, tag_file=None):
        self.group = group
        self.layout = make_layout(group)
        t0 = time.perf_counter()
        self.state, _ = psi_server_offline(group, elements, rng)
        self.offline_seconds = time.perf_counter() - t0
        self._publish(self.state.tags, group.tag_size, tag_file)
        self.config_digest = compat_digest(group)

    def respond(self, session, msg):
        return psi_server_respond(self.state, msg)


def pm_digest(rsa: RsaGroup) -> bytes:
    return hashlib.sha256(b"pm\0" + dumps_params(rsa)).digest()


def compat_digest(group: SchnorrGroup) -> bytes:
    return hashlib.sha256(b"compat\0" + dumps_params(group)).digest()


# -- client drivers ----------------------------------------------------------------

def _connect(server, layout) -> tuple[Transport, ServerSession | None]:
    if isinstance(server, Transport):
        return server, getattr(server, "session", None)
    if isinstance(server, ServerRole):
        session = server.open_session()
        return LocalTransport(session, layout), session
    raise TypeError(f"cannot reach a server through {type(server).__name__}")


def _hello(sid: bytes, kind: int, digest: bytes) -> ProtocolMessage:
    assert len(digest) == CONFIG_DIGEST_SIZE
    return ProtocolMessage(sid, kind, Phase.HELLO, ([digest],))


def _offer_tags(offer: ProtocolMessage) -> list[bytes]:
    tags, ref = offer.lists
    if ref:
        return read_tag_file(b"".join(ref).decode())
    return list(tags)


def _server_timings(session: ServerSession | None, role, timings: dict) -> None:
    if session is not None:
        for key, value in session.timings.items():
            timings[f"server_{key}"] = value
    if role is not None and getattr(role, "offline_seconds", 0.0):
        timings["server_offline"] = role.offline_seconds


def paternity_test(config: PaternityConfig, client_genome: Genome, server,
                   group: SchnorrGroup | None = None, rng=None) -> TestReport:
    """Run one paternity test; ``server`` is a Genome, a role or a transport.

    The report exposes the match count and the verdict only.
    """
    group = group or default_schnorr()
    rng = rng or default_rng()
    role = None
    if isinstance(server, Genome):
        if not config.uses_records and len(server) != len(client_genome):
            raise ValueError("genome lengths differ")
        server = PaternityServer(config, server, group, rng)
    if isinstance(server, ServerRole):
        role = server
    transport, session = _connect(server, make_layout(group))
    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    mine = paternity_input(config, client_genome)
    timings["client_prepare"] = time.perf_counter() - t0
    kind = Kind.PET if config.uses_pet else Kind.PSICA
    sid = new_session_id(rng)
    transport.exchange(_hello(sid, kind, config.digest(group, len(client_genome))))
    t0 = time.perf_counter()
    if kind == Kind.PSICA:
        state, request = psica_client_offline(group, mine, rng, sid)
    else:
        pk, sk = elgamal.keygen(group, rng)
        request = pet_query(pk, mine, rng, sid).to_message()
    timings["client_offline"] = time.perf_counter() - t0
    response = transport.exchange(request)
    t0 = time.perf_counter()
    if kind == Kind.PSICA:
        pt = psica_client_finalize(state, response)
    else:
        pt = pet_count_matches(sk, PetResponse.from_message(group, response))
    timings["client_online"] = time.perf_counter() - t0
    _server_timings(session, None, timings)
    if config.uses_records:
        total = config.l
        verdict = classify_paternity(pt, total, config.tau)
    else:
        total = len(set(mine)) if kind == Kind.PSICA else len(mine)
        verdict = pt / total > config.match_threshold
    params = {"mode": config.mode, "l": config.l, "tau": config.tau, "compared": total,
              "match_threshold": config.match_threshold if not config.uses_records else None}
    if role is not None:
        timings["server_prepare"] = role.prepare_seconds
    return TestReport("paternity", verdict, pt, params, list(transport.transcript), timings)


def paternity_strawman(config: PaternityConfig, client_genome: Genome, server_genome: Genome,
                       group: SchnorrGroup | None = None, rng=None) -> TestReport:
    """PSI-CA over ``(symbol, position)`` elements at commonly sampled positions."""
    if len(client_genome) != len(server_genome):
        raise ValueError("genome lengths differ")
    return paternity_test(replace(config, mode="strawman-psica"), client_genome, server_genome, group, rng)


def apply_rule(fp: Fingerprint, matched: Sequence[tuple[str, int]], rule: str = "full",
               required: Iterable[tuple[str, int]] | None = None, min_matches: int = 1) -> bool:
    if rule not in RULES:
        raise ValueError(f"rule must be one of {RULES}")
    got = set(matched)
    if rule == "full":
        return got == set(fp.pairs)
    return set(required or ()) <= got and len(got) >= max(min_matches, 1)


def pm_test(ca: CaKey | RsaGroup, fingerprint: Fingerprint, patient, authorizations=None,
            rng=None, rule: str = "full", required=None, min_matches: int = 1,
            strict: bool = False) -> TestReport:
    """Pharmaceutical side of the personalized-medicine test.

    Without explicit ``authorizations`` the authority key signs the
    fingerprint first.  Elements with an invalid authorization simply never
    match; ``strict`` additionally reports the authorization coverage.
    """
    rsa = ca.rsa if isinstance(ca, CaKey) else ca
    rng = rng or default_rng()
    elements = fingerprint.elements()
    timings: dict[str, float] = {}
    if authorizations is None:
        if not isinstance(ca, CaKey):
            raise ValueError("authorizations are required when no authority key is given")
        t0 = time.perf_counter()
        authorizations = authorize_fingerprint(ca, fingerprint)
        timings["authorize"] = time.perf_counter() - t0
    authorizations = list(authorizations)
    role = patient if isinstance(patient, ServerRole) else None
    transport, session = _connect(patient, make_layout(rsa=rsa))
    sid = new_session_id(rng)
    offer = transport.exchange(_hello(sid, Kind.APSI, pm_digest(rsa)))
    tags = _offer_tags(offer)
    t0 = time.perf_counter()
    state, request = apsi_client_request(rsa, elements, authorizations, rng, sid)
    timings["client_request"] = time.perf_counter() - t0
    response = transport.exchange(request)
    t0 = time.perf_counter()
    matched_raw = apsi_client_finalize(state, response, tags)
    timings["client_finalize"] = time.perf_counter() - t0
    timings["client_online"] = timings["client_request"] + timings["client_finalize"]
    _server_timings(session, role, timings)
    matched = [decode_element(x) for x in matched_raw]
    params = {"fingerprint": fingerprint.name, "size": len(fingerprint), "rule": rule}
    if strict:
        valid = sum(verify_authorization(rsa, s, e) for s, e in zip(authorizations, elements))
        params["authorization_coverage"] = valid / len(elements)
        params["incomplete_authorization"] = valid < len(elements)
    outcome = apply_rule(fingerprint, matched, rule, required, min_matches)
    return TestReport("pm", outcome, matched, params, list(transport.transcript), timings)


def compat_test(fingerprint: Fingerprint, server, rule: str = "full", required=None,
                min_matches: int = 1, group: SchnorrGroup | None = None, rng=None,
                max_input: int = DEFAULT_MAX_INPUT) -> TestReport:
    """Client side of the compatibility test: learns ``fp & G`` and applies the rule."""
    if len(fingerprint) > max_input:
        raise ValueError(f"fingerprint of {len(fingerprint)} pairs exceeds the input cap {max_input}")
    group = group or default_schnorr()
    rng = rng or default_rng()
    role = server if isinstance(server, ServerRole) else None
    transport, session = _connect(server, make_layout(group))
    timings: dict[str, float] = {}
    elements = fingerprint.elements()
    t0 = time.perf_counter()
    hashed = hash_elements(group, elements)
    timings["client_offline"] = time.perf_counter() - t0
    sid = new_session_id(rng)
    offer = transport.exchange(_hello(sid, Kind.PSI, compat_digest(group)))
    tags = _offer_tags(offer)
    t0 = time.perf_counter()
    state, request = psi_client_request(group, elements, rng, sid, hashed=hashed)
    timings["client_request"] = time.perf_counter() - t0
    response = transport.exchange(request)
    t0 = time.perf_counter()
    matched_raw = psi_client_finalize(state, response, tags)
    timings["client_finalize"] = time.perf_counter() - t0
    timings["client_online"] = timings["client_request"] + timings["client_finalize"]
    _server_timings(session, role, timings)
    matched = [decode_element(x) for x in matched_raw]
    params = {"fingerprint": fingerprint.name, "size": len(fingerprint), "rule": rule}
    outcome = apply_rule(fingerprint, matched, rule, required, min_matches)
    return TestReport("compat", outcome, matched, params, list(transport.transcript), timings)


def strict_elements(haplotypes: Sequence[Genome]) -> list[bytes]:
    """Every position of every copy (the benchmark-gated full-genome input)."""
    n = len(haplotypes[0])
    return [encode_element(s, i + 1 + k * n) for k, h in enumerate(haplotypes) for i, s in enumerate(h.seq)]
