import random
from math import gcd

import pytest

from hope import numtheory as nt
from hope.errors import (
    BadRandomnessError,
    ConfigError,
    KeyMismatchError,
    MalformedCiphertextError,
    PlaintextRangeError,
)
from hope.paillier import (
    Ciphertext,
    PublicKey,
    dec_raw,
    enc_raw,
    eval_add,
    fingerprint,
    keygen,
    keypair_from_primes,
)

UNITS_15 = [r for r in range(1, 15) if gcd(r, 15) == 1]


def oracle_enc(n, m, r):
    # literal (n+1)^m * r^n mod n^2 with builtin arithmetic
    n2 = n * n
    return pow(n + 1, m, n2) * pow(r, n, n2) % n2


def test_fixed_primes_5_7(keys35):
    pk, sk = keys35
    assert (pk.n, sk.phi, sk.mu) == (35, 24, 19)
    assert 24 * 19 % 35 == 1


def test_fixed_primes_3_5(keys15):
    pk, sk = keys15
    assert (pk.n, pk.n_squared, sk.phi, sk.mu) == (15, 225, 8, 2)


@pytest.mark.parametrize("p, q", [(3, 7), (7, 3), (5, 11), (5, 5), (4, 7), (3, 2)])
def test_keypair_constraints_reject(p, q):
    with pytest.raises(ConfigError):
        keypair_from_primes(p, q)


def test_keygen_invariants(rng):
    for bits in (8, 16, 64, 256):
        pk, sk = keygen(bits, rng)
        assert pk.bits == bits and pk.n == sk.p * sk.q
        assert sk.p != sk.q
        assert (sk.q - 1) % sk.p and (sk.p - 1) % sk.q
        assert gcd(sk.phi, pk.n) == 1 and sk.mu * sk.phi % pk.n == 1
        assert pk.n_squared == pk.n ** 2


def test_keygen_8_bit_is_143(rng):
    # only 4-bit primes are 11 and 13
    pk, _ = keygen(8, rng)
    assert pk.n == 143


def test_keygen_rejects_odd_or_tiny():
    with pytest.raises(ConfigError):
        keygen(9)
    with pytest.raises(ConfigError):
        keygen(6)


def test_keygen_fresh_randomness():
    assert keygen(64)[0].n != keygen(64)[0].n


def test_public_key_validation():
    with pytest.raises(ConfigError):
        PublicKey(14)
    with pytest.raises(ConfigError):
        PublicKey(9)


@pytest.mark.parametrize("m, r, expected", [(2, 2, 158), (0, 1, 1), (1, 1, 16)])
def test_enc_raw_vectors(keys15, m, r, expected):
    pk, _ = keys15
    assert oracle_enc(15, m, r) == expected
    assert enc_raw(pk, m, r=r).value == expected


@pytest.mark.parametrize("c, expected", [(158, 2), (1, 0), (16, 1)])
def test_dec_raw_vectors(keys15, c, expected):
    pk, sk = keys15
    assert dec_raw(sk, pk.ciphertext(c)) == expected


def test_enc_raw_errors(keys15):
    pk, _ = keys15
    with pytest.raises(PlaintextRangeError):
        enc_raw(pk, 15, r=1)
    with pytest.raises(PlaintextRangeError):
        enc_raw(pk, -1, r=1)
    with pytest.raises(BadRandomnessError):
        enc_raw(pk, 1, r=3)
    with pytest.raises(BadRandomnessError):
        enc_raw(pk, 1, r=0)


def test_dec_raw_detects_wrong_key(keys15, keys35):
    pk15, _ = keys15
    _, sk35 = keys35
    with pytest.raises(KeyMismatchError):
        dec_raw(sk35, enc_raw(pk15, 1, r=1))


def test_dec_raw_detects_malformed(keys15):
    pk, sk = keys15
    # every unit of Z*_{n^2} decrypts; non-units smuggled past the wrapper do not
    for value in (3, 5, 30):
        with pytest.raises(MalformedCiphertextError):
            dec_raw(sk, Ciphertext(value, pk.fingerprint))


def test_ciphertext_wrapper_validates(keys15):
    pk, _ = keys15
    for bad in (0, 225, 226, 3, 5, 15):
        with pytest.raises(MalformedCiphertextError):
            pk.ciphertext(bad)


def test_roundtrip_exhaustive_n15(keys15):
    pk, sk = keys15
    for m in range(15):
        for r in UNITS_15:
            c = enc_raw(pk, m, r=r)
            assert c.value == oracle_enc(15, m, r)
            assert dec_raw(sk, c) == m


@pytest.mark.slow
def test_roundtrip_random_1024(keys1024):
    pk, sk = keys1024
    rng = random.Random(7)
    for _ in range(10_000):
        m = rng.randrange(pk.n)
        assert dec_raw(sk, enc_raw(pk, m, rng=rng)) == m


def test_eval_add_vectors(keys15):
    pk, sk = keys15
    c = eval_add(pk, pk.ciphertext(158), pk.ciphertext(16))
    assert c.value == 158 * 16 % 225 == 53
    assert dec_raw(sk, c) == 3
    assert eval_add(pk, pk.ciphertext(158), pk.ciphertext(1)).value == 158
    assert dec_raw(sk, eval_add(pk, enc_raw(pk, 7, r=2), enc_raw(pk, 9, r=4))) == 1


def test_eval_add_exhaustive_n15(keys15):
    pk, sk = keys15
    for a in range(15):
        for b in range(15):
            for ra, rb in [(1, 2), (4, 7), (14, 13)]:
                c = eval_add(pk, enc_raw(pk, a, r=ra), enc_raw(pk, b, r=rb))
                assert dec_raw(sk, c) == (a + b) % 15


def test_eval_add_random_large(keys256):
    pk, sk = keys256
    rng = random.Random(3)
    for _ in range(200):
        a, b = rng.randrange(pk.n), rng.randrange(pk.n)
        assert dec_raw(sk, eval_add(pk, enc_raw(pk, a, rng=rng), enc_raw(pk, b, rng=rng))) == (a + b) % pk.n


def test_eval_add_key_mismatch(keys15, keys35):
    with pytest.raises(KeyMismatchError):
        eval_add(keys15[0], enc_raw(keys15[0], 1, r=1), enc_raw(keys35[0], 1, r=1))


def test_probabilistic_encryption(keys1024):
    pk, _ = keys1024
    rng = random.Random(11)
    values = [enc_raw(pk, 42, rng=rng).value for _ in range(2000)]
    pairs = list(zip(values[::2], values[1::2]))
    assert all(a != b for a, b in pairs)


@pytest.mark.parametrize("n", [15, 35, 77])
def test_binomial_power_identity(n):
    n2 = n * n
    for x in range(1, 51):
        assert nt.mod_pow(1 + n, x, n2) == (1 + n * x) % n2


@pytest.mark.parametrize("p, q", [(3, 5), (5, 7)])
def test_group_order_identity_small(p, q):
    n = p * q
    n2, phi = n * n, (p - 1) * (q - 1)
    rng = random.Random(p * q)
    for _ in range(100):
        r = nt.sample_unit(n2, n2, rng)
        assert pow(r, n * phi, n2) == 1


def test_group_order_identity_1024(keys1024):
    pk, sk = keys1024
    rng = random.Random(5)
    for _ in range(100):
        r = nt.sample_unit(pk.n_squared, pk.n_squared, rng)
        assert nt.mod_pow(r, pk.n * sk.phi, pk.n_squared) == 1


def test_fingerprint_is_stable_and_distinct(keys15, keys35):
    assert keys15[0].fingerprint == fingerprint(15)
    assert len(keys15[0].fingerprint) == 8
    assert keys15[0].fingerprint != keys35[0].fingerprint
