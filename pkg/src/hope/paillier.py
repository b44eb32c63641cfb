"""Unsigned Paillier with generator ``g = n + 1``.

Keys and ciphertexts are immutable. Every ciphertext records the
fingerprint of the public key it was made under so that mixing keys
raises :class:`~hope.errors.KeyMismatchError` instead of producing
garbage.
"""
import hashlib
from dataclasses import dataclass, field

from . import numtheory as nt
from .errors import (
    BadRandomnessError,
    ConfigError,
    KeyMismatchError,
    MalformedCiphertextError,
    PlaintextRangeError,
)

DEFAULT_KEY_BITS = 1024


def int_to_bytes(x):
    """Minimal big-endian encoding; zero encodes as a single zero byte."""
    return x.to_bytes(max(1, (x.bit_length() + 7) // 8), "big")


def fingerprint(n):
    return hashlib.sha256(int_to_bytes(n)).digest()[:8]


@dataclass(frozen=True)
class PublicKey:
    n: int
    n_squared: int = field(init=False, repr=False)
    bits: int = field(init=False)
    fingerprint: bytes = field(init=False, repr=False)

    def __post_init__(self):
        if self.n < 15 or self.n % 2 == 0:
            raise ConfigError(f"public modulus must be odd and >= 15, got {self.n}")
        object.__setattr__(self, "n_squared", self.n * self.n)
        object.__setattr__(self, "bits", self.n.bit_length())
        object.__setattr__(self, "fingerprint", fingerprint(self.n))

    def ciphertext(self, value):
        """Wrap a raw residue, checking it lies in Z*_{n^2}."""
        if not 0 < value < self.n_squared:
            raise MalformedCiphertextError("ciphertext value outside (0, n^2)")
        if nt.gcd(value, self.n) != 1:
            raise MalformedCiphertextError("ciphertext value is not a unit modulo n")
        return Ciphertext(value, self.fingerprint)

    def check(self, *ciphertexts):
        for c in ciphertexts:
            if c.key_fingerprint != self.fingerprint:
                raise KeyMismatchError("ciphertext was produced under a different public key")


@dataclass(frozen=True)
class SecretKey:
    p: int
    q: int
    public: PublicKey = field(repr=False)
    phi: int = field(init=False, repr=False)
    mu: int = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "phi", (self.p - 1) * (self.q - 1))
        object.__setattr__(self, "mu", nt.mod_inv(self.phi, self.public.n))


@dataclass(frozen=True)
class Ciphertext:
    value: int
    key_fingerprint: bytes = field(repr=False)


def keypair_from_primes(p, q):
    """Build a key pair from explicit primes, enforcing the divisibility rules.

    Raises ConfigError when ``p == q``, either factor is not an odd prime,
    or ``p | q - 1`` / ``q | p - 1``.
    """
    if p == q:
        raise ConfigError("p and q must be distinct")
    for f in (p, q):
        if f < 3 or not nt.is_probable_prime(f):
            raise ConfigError(f"{f} is not an odd prime")
    if (q - 1) % p == 0 or (p - 1) % q == 0:
        raise ConfigError(f"primes {p}, {q} violate p ∤ q-1, q ∤ p-1")
    pk = PublicKey(p * q)
    sk = SecretKey(p, q, pk)
    return pk, sk


def keygen(bits=DEFAULT_KEY_BITS, rng=None):
    """Generate a key pair whose modulus has exactly ``bits`` bits."""
    if bits < 8 or bits % 2:
        raise ConfigError(f"key size must be even and >= 8, got {bits}")
    rng = rng or nt.default_rng()
    half = bits // 2
    while True:
        p = nt.gen_prime(half, rng)
        q = nt.gen_prime(half, rng)
        if p == q or (p * q).bit_length() != bits:
            continue
        if (q - 1) % p == 0 or (p - 1) % q == 0:
            continue
        return keypair_from_primes(p, q)


def sample_r(pk, rng=None):
    return nt.sample_unit(pk.n, pk.n, rng)


def enc_raw(pk, m, r=None, rng=None):
    """Encrypt ``m`` in ``[0, n)`` as ``(n+1)^m * r^n mod n^2``.

    ``r`` is sampled from Z*_n when omitted.
    """
    if not 0 <= m < pk.n:
        raise PlaintextRangeError(f"plaintext must lie in [0, n), got {m}")
    if r is None:
        r = sample_r(pk, rng)
    elif not 0 < r < pk.n or nt.gcd(r, pk.n) != 1:
        raise BadRandomnessError("r must be a unit of Z*_n")
    # (1 + n)^m == 1 + m*n (mod n^2)
    g_m = (1 + m * pk.n) % pk.n_squared
    value = g_m * nt.mod_pow(r, pk.n, pk.n_squared) % pk.n_squared
    return Ciphertext(value, pk.fingerprint)


def l_function(x, n):
    """``(x - 1) / n``, requiring exact divisibility."""
    if (x - 1) % n:
        raise MalformedCiphertextError("intermediate value is not 1 mod n (wrong key or corrupted ciphertext)")
    return (x - 1) // n


def dec_raw(sk, c):
    pk = sk.public
    pk.check(c)
    if nt.gcd(c.value, pk.n) != 1:
        raise MalformedCiphertextError("ciphertext value is not a unit modulo n")
    u = nt.mod_pow(c.value, sk.phi, pk.n_squared)
    return l_function(u, pk.n) * sk.mu % pk.n


def eval_add(pk, c0, c1):
    pk.check(c0, c1)
    return Ciphertext(c0.value * c1.value % pk.n_squared, pk.fingerprint)
