import math
import random

import pytest

from genopriv.errors import ParameterError, ValidationError
from genopriv.groups import (CaKey, RsaGroup, SchnorrGroup, ca_authorize, dumps_params, gen_rsa,
                             gen_schnorr, hash_to_rsa, hash_to_schnorr, invert, loads_params,
                             powmod, read_params, verify_authorization, write_params)


def test_toy_group_validates():
    G = SchnorrGroup(23, 11, 4)
    assert G.cofactor == 2
    assert G.is_element(4) and not G.is_element(5)


@pytest.mark.parametrize("p,q,g", [(23, 11, 1), (23, 11, 5), (23, 7, 4), (21, 11, 4)])
def test_bad_groups_rejected(p, q, g):
    with pytest.raises(ParameterError):
        SchnorrGroup(p, q, g)


def test_generation_is_deterministic():
    assert gen_schnorr(256, 64, seed=9) == gen_schnorr(256, 64, seed=9)
    assert gen_schnorr(256, 64, seed=9) != gen_schnorr(256, 64, seed=10)
    assert gen_rsa(128, seed=2) == gen_rsa(128, seed=2)


def test_generation_rejects_bad_sizes():
    with pytest.raises(ParameterError):
        gen_schnorr(256, 16)
    with pytest.raises(ParameterError):
        gen_schnorr(128, 128)
    with pytest.raises(ParameterError):
        gen_rsa(63)


def test_generated_group_shape(group512):
    G = group512
    assert G.p.bit_length() == 512 and G.q.bit_length() == 160
    assert G.element_size == 64 and G.tag_size == 20


def test_rsa_short_exponent_range(toy_ca):
    N = toy_ca.rsa.N
    assert N.bit_length() == 128
    assert toy_ca.rsa.half_range == math.isqrt(N) // 2
    r = random.Random(1)
    assert all(1 <= toy_ca.rsa.random_scalar(r) <= toy_ca.rsa.half_range for _ in range(200))


def test_rsa_safe_prime_generation():
    from genopriv.groups import _safe_prime, is_prime
    p = _safe_prime(64, random.Random(4), 100_000)
    assert is_prime(p) and is_prime((p - 1) // 2)


def test_hash_to_group_lands_in_subgroup(group512):
    for i in range(200):
        h = hash_to_schnorr(group512, i.to_bytes(4, "big"))
        assert group512.is_element(h) and h != 1


def test_hash_to_group_has_no_collisions_on_genome_elements(group512):
    from genopriv.genome import encode_element
    seen = {hash_to_schnorr(group512, encode_element("ACGT"[i % 4], i + 1)) for i in range(10_000)}
    assert len(seen) == 10_000


def test_hash_into_toy_group_terminates():
    G = SchnorrGroup(23, 11, 4)
    for i in range(100):
        assert G.is_element(hash_to_schnorr(G, bytes([i])))


def test_authorization_identity(toy_ca):
    rsa = toy_ca.rsa
    for i in range(300):
        m = i.to_bytes(2, "big")
        s = ca_authorize(toy_ca, m)
        assert powmod(s, rsa.e, rsa.N) == hash_to_rsa(rsa, m)
        assert verify_authorization(rsa, s, m)
        assert not verify_authorization(rsa, s + 1, m)


def test_decode_rejects_non_members(group512):
    G = group512
    with pytest.raises(ValidationError):
        G.decode(G.encode(G.p - 1))
    with pytest.raises(ValidationError):
        G.decode(b"\x01")
    with pytest.raises(ValidationError):
        invert(G.q, G.q)


def test_random_scalars_in_range():
    G = SchnorrGroup(23, 11, 4)
    r = random.Random(0)
    vals = {G.random_scalar(r) for _ in range(500)}
    assert vals == set(range(1, 11))


@pytest.mark.parametrize("which", ["schnorr", "rsa", "ca"])
def test_params_roundtrip(tmp_path, which, group512, ca512):
    obj = {"schnorr": group512, "rsa": ca512.rsa, "ca": ca512}[which]
    assert loads_params(dumps_params(obj)) == obj
    write_params(tmp_path / "k", obj)
    assert read_params(tmp_path / "k") == obj


def test_params_reject_garbage(group512):
    with pytest.raises(ParameterError):
        loads_params(b"nope")
    with pytest.raises(ParameterError):
        loads_params(dumps_params(group512)[:-3])


def test_ca_key_hides_private_exponent(toy_ca):
    assert str(toy_ca.d) not in repr(toy_ca)
    assert isinstance(toy_ca, CaKey) and isinstance(toy_ca.rsa, RsaGroup)
