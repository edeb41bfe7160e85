import random

import pytest

from genopriv import psi
from genopriv.errors import ProtocolError, ProtocolStateError, ValidationError
from genopriv.groups import ca_authorize
from genopriv.wire import Kind, Phase, ProtocolMessage


def _sets(r, universe=40, size=12):
    pool = [f"e{i}".encode() for i in range(universe)]
    return r.sample(pool, r.randint(1, size)), r.sample(pool, r.randint(1, size))


def run_psica(G, C, S, r):
    st = psi.psica_server_offline(G, S, r)
    cs, req = psi.psica_client_offline(G, C, r)
    return psi.psica_client_finalize(cs, psi.psica_server_online(st, req, r))


def run_psi(G, C, S, r):
    st, offer = psi.psi_server_offline(G, S, r)
    cs, req = psi.psi_client_request(G, C, r)
    return psi.psi_client_finalize(cs, psi.psi_server_respond(st, req), offer)


def run_apsi(ca, C, S, r, corrupt=()):
    st, offer = psi.apsi_server_offline(ca.rsa, S, r)
    sig = [ca_authorize(ca, c) + (1 if c in corrupt else 0) for c in C]
    cs, req = psi.apsi_client_request(ca.rsa, C, sig, r)
    return psi.apsi_client_finalize(cs, psi.apsi_server_respond(st, req), offer)


def test_psica_matches_plaintext(group512):
    r = random.Random(1)
    for _ in range(25):
        C, S = _sets(r)
        assert run_psica(group512, C, S, r) == len(set(C) & set(S))


def test_psi_matches_plaintext(group512):
    r = random.Random(2)
    for _ in range(25):
        C, S = _sets(r)
        assert set(run_psi(group512, C, S, r)) == set(C) & set(S)


def test_apsi_matches_authorized_intersection(ca512):
    r = random.Random(3)
    for _ in range(15):
        C, S = _sets(r)
        bad = set(r.sample(C, len(C) // 3))
        assert set(run_apsi(ca512, C, S, r, bad)) == (set(C) & set(S)) - bad


def test_duplicates_are_collapsed(group512):
    r = random.Random(4)
    assert run_psica(group512, [b"a", b"a", b"b"], [b"a", b"b", b"b"], r) == 2


def test_empty_sets_rejected(group512):
    with pytest.raises(ValueError):
        psi.psica_server_offline(group512, [])
    with pytest.raises(ValueError):
        psi.psi_client_request(group512, [])


def test_psica_server_state_is_single_use(group512):
    r = random.Random(5)
    st = psi.psica_server_offline(group512, [b"x"], r)
    _, req = psi.psica_client_offline(group512, [b"x"], r)
    psi.psica_server_online(st, req, r)
    with pytest.raises(ProtocolStateError):
        psi.psica_server_online(st, req, r)


def test_psica_response_is_shuffled_and_sized(group512):
    r = random.Random(6)
    C = [bytes([i]) for i in range(25)]
    st = psi.psica_server_offline(group512, C, r)
    cs, req = psi.psica_client_offline(group512, C, r)
    assert req.payload_size == 26 * 64
    resp = psi.psica_server_online(st, req, r)
    assert resp.payload_size == 25 * 20 + 26 * 64
    assert list(resp.lists[2]) != [group512.encode(pow(x, st.r_s2, group512.p)) for x in cs.a]


def test_client_rejects_wrong_phase_and_session(group512):
    r = random.Random(7)
    st = psi.psica_server_offline(group512, [b"x"], r)
    cs, req = psi.psica_client_offline(group512, [b"x"], r)
    resp = psi.psica_server_online(st, req, r)
    with pytest.raises(ProtocolStateError):
        psi.psica_client_finalize(cs, ProtocolMessage(resp.session_id, Kind.PSICA, Phase.OFFER, resp.lists))
    with pytest.raises(ProtocolError):
        psi.psica_client_finalize(cs, ProtocolMessage(bytes(16), Kind.PSICA, Phase.RESPONSE, resp.lists))
    assert psi.psica_client_finalize(cs, resp) == 1
    with pytest.raises(ProtocolStateError):
        psi.psica_client_finalize(cs, resp)


def test_psi_server_rejects_replay(group512):
    r = random.Random(8)
    st, _ = psi.psi_server_offline(group512, [b"x"], r)
    _, req = psi.psi_client_request(group512, [b"x"], r)
    psi.psi_server_respond(st, req)
    with pytest.raises(ProtocolStateError):
        psi.psi_server_respond(st, req)


def test_server_validates_group_membership(group512):
    r = random.Random(9)
    st, _ = psi.psi_server_offline(group512, [b"x"], r)
    bad = ProtocolMessage(bytes(16), Kind.PSI, Phase.REQUEST, ([group512.encode(group512.p - 1)],))
    with pytest.raises(ValidationError):
        psi.psi_server_respond(st, bad)


def test_fixed_server_exponent_republishes_same_tags(group512):
    r = random.Random(10)
    S = [b"a", b"b", b"c"]
    a, _ = psi.psi_server_offline(group512, S, r, r_s=12345)
    b, _ = psi.psi_server_offline(group512, S, r, r_s=12345)
    c, _ = psi.psi_server_offline(group512, S, r)
    assert set(a.tags) == set(b.tags) != set(c.tags)


def test_tag_file_roundtrip_and_file_reference_offer(tmp_path, group512):
    r = random.Random(11)
    st, _ = psi.psi_server_offline(group512, [b"a", b"b"], r)
    path = tmp_path / "t.tags"
    assert psi.write_tag_file(path, iter(st.tags), group512.tag_size) == 2
    assert psi.read_tag_file(path) == st.tags
    offer = psi.offer_message(st.tags, path=str(path))
    assert offer.lists[0] == () and b"".join(offer.lists[1]).decode() == str(path)
    (tmp_path / "bad").write_bytes(b"xx")
    with pytest.raises(ProtocolError):
        psi.read_tag_file(tmp_path / "bad")


def test_streamed_tags_equal_collected(group512):
    items = [bytes([i]) for i in range(20)]
    gen = psi.iter_psi_tags(group512, iter(items), 99)
    assert next(gen) == group512.tag(pow(psi.hash_to_schnorr(group512, items[0]), 99, group512.p))
    assert len(list(gen)) == 19


def test_apsi_requires_one_authorization_per_element(ca512):
    with pytest.raises(ValueError):
        psi.apsi_client_request(ca512.rsa, [b"a", b"b"], [1])


def test_layout_rejects_unknown_messages(group512):
    layout = psi.make_layout(group512)
    with pytest.raises(ProtocolError):
        layout(Kind.APSI, Phase.REQUEST)
    with pytest.raises(ProtocolError):
        layout(9, Phase.REQUEST)
    assert layout(Kind.PSICA, Phase.OFFER) == ()
