import random

import pytest
from scipy.stats import chisquare

from genopriv import elgamal
from genopriv.errors import ProtocolError, ValidationError
from genopriv.pet import (PetQuery, PetResponse, encode_nucleotides, pet_count_matches, pet_query,
                          pet_respond)


def run(G, c, s, r):
    pk, sk = elgamal.keygen(G, r)
    q = PetQuery.from_message(G, pet_query(pk, c, r).to_message())
    resp = pet_respond(q.pk, q, s, r)
    return pet_count_matches(sk, PetResponse.from_message(G, resp.to_message(G))), resp, sk


def test_counts_equal_positions(group512):
    r = random.Random(0)
    for _ in range(20):
        n = r.randint(1, 20)
        c = [r.randint(0, 5) for _ in range(n)]
        s = [r.randint(0, 5) for _ in range(n)]
        assert run(group512, c, s, r)[0] == sum(a == b for a, b in zip(c, s))


def test_match_position_is_uniform(toy_group):
    """Where the single zero lands in the shuffled response is uniform."""
    r = random.Random(1)
    n = 5
    counts = [0] * n
    for _ in range(500):
        _, resp, sk = run(toy_group, [1, 2, 3, 4, 5], [1, 0, 0, 0, 0], r)
        counts[[elgamal.is_zero(sk, c) for c in resp.ciphertexts].index(True)] += 1
    assert chisquare(counts).pvalue > 0.01


def test_validation(group512):
    pk, _ = elgamal.keygen(group512)
    with pytest.raises(ValidationError):
        pet_query(pk, [group512.q])
    with pytest.raises(ValueError):
        pet_query(pk, [])
    q = pet_query(pk, [1, 2])
    with pytest.raises(ProtocolError):
        pet_respond(pk, q, [1])


def test_nucleotide_codes():
    assert encode_nucleotides("ACGT-") == [1, 2, 3, 4, 5]
