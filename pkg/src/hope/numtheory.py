"""Modular arithmetic and probabilistic prime generation.

Every function takes plain Python ints. Randomness comes from an injected
source with the :class:`random.Random` interface (``getrandbits`` and
``randrange``); pass ``random.Random(seed)`` for reproducible tests and
:class:`random.SystemRandom` (the default) for real keys.
"""
import random

import gmpy2

from .errors import (
    EntropyError,
    ExhaustedError,
    InvalidModulusError,
    NotInvertibleError,
    OutOfRangeError,
    UndefinedGcdError,
)

MILLER_RABIN_ROUNDS = 40
SAMPLE_RETRY_BUDGET = 1000

_SMALL_PRIMES = [
    3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71,
    73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151,
    157, 163, 167, 173, 179, 181, 191, 193, 197, 199, 211, 223, 227, 229, 233,
]

_system_rng = random.SystemRandom()


def default_rng():
    return _system_rng


def _check_modulus(modulus):
    if modulus < 2:
        raise InvalidModulusError(f"modulus must be >= 2, got {modulus}")


def mod_pow(base, exp, modulus):
    """Return ``base ** exp % modulus`` for a non-negative exponent."""
    _check_modulus(modulus)
    if exp < 0:
        raise OutOfRangeError("exponent must be non-negative; use mod_inv first")
    return int(gmpy2.powmod(base, exp, modulus))


def gcd(a, b):
    if a == 0 and b == 0:
        raise UndefinedGcdError("gcd(0, 0) is undefined")
    a, b = abs(a), abs(b)
    while b:
        a, b = b, a % b
    return a


def mod_inv(a, modulus):
    """Inverse of ``a`` modulo ``modulus`` by the extended Euclidean algorithm."""
    _check_modulus(modulus)
    old_r, r = a % modulus, modulus
    old_s, s = 1, 0
    while r:
        quot = old_r // r
        old_r, r = r, old_r - quot * r
        old_s, s = s, old_s - quot * s
    if old_r != 1:
        raise NotInvertibleError(f"{a} has no inverse modulo {modulus} (gcd={old_r})")
    return old_s % modulus


def _getrandbits(rng, k):
    try:
        return rng.getrandbits(k)
    except (OSError, NotImplementedError) as exc:
        raise EntropyError(str(exc)) from exc


def _randrange(rng, start, stop):
    try:
        return rng.randrange(start, stop)
    except (OSError, NotImplementedError) as exc:
        raise EntropyError(str(exc)) from exc


def is_probable_prime(n, rng=None, rounds=MILLER_RABIN_ROUNDS):
    """Miller-Rabin test with ``rounds`` random bases (error <= 4**-rounds)."""
    if n < 2:
        return False
    if n in (2, 3):
        return True
    if n % 2 == 0:
        return False
    for sp in _SMALL_PRIMES:
        if n == sp:
            return True
        if n % sp == 0:
            return False
    rng = rng or default_rng()
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for _ in range(rounds):
        a = _randrange(rng, 2, n - 1)
        x = int(gmpy2.powmod(a, d, n))
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def gen_prime(bits, rng=None):
    """Random odd probable prime with exactly ``bits`` bits (top bit set)."""
    if bits < 3:
        raise OutOfRangeError(f"bits must be >= 3, got {bits}")
    rng = rng or default_rng()
    top = 1 << (bits - 1)
    while True:
        candidate = _getrandbits(rng, bits) | top | 1
        if is_probable_prime(candidate, rng):
            return candidate


def sample_unit(modulus, bound, rng=None):
    """Uniform ``u`` in ``[1, bound)`` coprime to ``modulus``, by rejection."""
    if not 2 <= bound <= modulus:
        raise OutOfRangeError(f"need 2 <= bound <= modulus, got bound={bound}, modulus={modulus}")
    rng = rng or default_rng()
    for _ in range(SAMPLE_RETRY_BUDGET):
        u = _randrange(rng, 1, bound)
        if gcd(u, modulus) == 1:
            return u
    raise ExhaustedError(
        f"no unit of Z*_{modulus} below {bound} found in {SAMPLE_RETRY_BUDGET} attempts"
    )


def smod(x, n):
    """Symmetric residue: maps ``[0, n)`` onto ``[-(n // 2), n - 1 - n // 2]``."""
    if n < 2:
        raise InvalidModulusError(f"modulus must be >= 2, got {n}")
    if not 0 <= x < n:
        raise OutOfRangeError(f"smod expects 0 <= x < n, got x={x}, n={n}")
    half = n // 2
    return (x + half) % n - half


def sgn(x):
    return (x > 0) - (x < 0)
