import random

import pytest

from genopriv import elgamal
from genopriv.errors import ValidationError


def test_zero_test_is_exact(toy_group):
    r = random.Random(0)
    pk, sk = elgamal.keygen(toy_group, r)
    for _ in range(1000):
        m = r.randrange(-50, 50)
        assert elgamal.is_zero(sk, elgamal.encrypt(pk, m, r)) == (m % toy_group.q == 0)


def test_homomorphism(toy_group):
    r = random.Random(1)
    pk, sk = elgamal.keygen(toy_group, r)
    for _ in range(300):
        a, b, k = r.randrange(100), r.randrange(100), r.randrange(1, toy_group.q)
        c = elgamal.scale(pk, elgamal.product(pk, elgamal.encrypt(pk, a, r), elgamal.encrypt(pk, -b, r)), k)
        assert elgamal.is_zero(sk, c) == (a == b)


def test_ciphertexts_are_randomized(toy_group):
    r = random.Random(2)
    pk, _ = elgamal.keygen(toy_group, r)
    assert elgamal.encrypt(pk, 7, r) != elgamal.encrypt(pk, 7, r)


def test_check_rejects_non_members(group512):
    pk, sk = elgamal.keygen(group512)
    with pytest.raises(ValidationError):
        elgamal.is_zero(sk, (group512.p - 1, 1))
    assert len(b"".join(elgamal.encode_ciphertext(pk, elgamal.encrypt(pk, 1)))) == 128
