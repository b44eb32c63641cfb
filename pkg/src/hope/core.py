"""Signed plaintexts, homomorphic negation/subtraction and comparison keys.

A comparison key ``ck0 = eta0 * phi^zeta mod n*phi``,
``ck1 = eta1 * phi^-zeta mod n`` lets an untrusted party compute, from two
ciphertexts alone,

    delta = L((c0 / c1)^ck0 mod n^2) * ck1 mod n, read symmetrically,

which equals ``eta0 * eta1 * (m0 - m1)``. Its sign is the plaintext order;
its magnitude is masked by the random eta product. Correctness needs the
masked difference to stay below n/2, which is what :class:`HopeParams`
guarantees.

Security caveat: because ``ck0`` must be a multiple of phi(n) for the
randomness to cancel, whoever holds the comparison key can factor ``n``.
Treat the comparison key as secret-key-equivalent material.
"""
from dataclasses import dataclass, field

from . import numtheory as nt
from .errors import BadRandomnessError, ConfigError, KeyMismatchError, PlaintextBoundError
from .paillier import Ciphertext, dec_raw, enc_raw, eval_add, l_function

DEFAULT_PLAINTEXT_BOUND = 2**32
DEFAULT_ETA_BOUND = 2**64


@dataclass(frozen=True)
class HopeParams:
    """Plaintexts live in ``[-plaintext_bound, plaintext_bound]``; the
    comparison-key multipliers eta0, eta1 are drawn from ``[1, eta_bound)``.
    """

    plaintext_bound: int = DEFAULT_PLAINTEXT_BOUND
    eta_bound: int = DEFAULT_ETA_BOUND

    def __post_init__(self):
        if self.plaintext_bound < 1:
            raise ConfigError("plaintext_bound must be >= 1")
        if self.eta_bound < 2:
            raise ConfigError("eta_bound must be >= 2")

    @property
    def max_masked_diff(self):
        """Largest possible ``|eta0 * eta1 * (m0 - m1)|``."""
        return 2 * self.plaintext_bound * (self.eta_bound - 1) ** 2

    def fits(self, n):
        # the masked difference must land in the positive half of smod's range
        return self.max_masked_diff <= n // 2 and self.eta_bound <= n

    def validate(self, n):
        if not self.fits(n):
            raise ConfigError(
                f"parameters need a modulus of at least {self.min_key_bits()} bits "
                f"(4*M*(B-1)^2 must be < n)"
            )

    def min_key_bits(self):
        """Smallest even key size whose every modulus satisfies :meth:`fits`."""
        bits = (2 * self.max_masked_diff + 1).bit_length() + 1
        return max(8, bits + bits % 2)


@dataclass(frozen=True)
class CkRandomness:
    zeta: int
    eta0: int
    eta1: int

    def validate(self, n, params):
        for name in ("zeta", "eta0", "eta1"):
            v = getattr(self, name)
            if not 0 < v < n or nt.gcd(v, n) != 1:
                raise BadRandomnessError(f"{name} must be a unit of Z*_n")
        for name in ("eta0", "eta1"):
            if not 1 <= getattr(self, name) < params.eta_bound:
                raise BadRandomnessError(f"{name} must lie in [1, {params.eta_bound})")


@dataclass(frozen=True)
class ComparisonKey:
    """``ck0`` lies in ``(0, n*phi(n))`` and is a multiple of phi(n);
    ``ck1`` lies in ``(0, n)``. ``ck0 * ck1 == eta0 * eta1 (mod n)``.
    """

    ck0: int
    ck1: int
    epoch: int
    key_fingerprint: bytes = field(repr=False)


def encrypt(pk, params, m, rng=None, r=None):
    """Encrypt a signed plaintext ``|m| <= params.plaintext_bound``."""
    if abs(m) > params.plaintext_bound:
        raise PlaintextBoundError(
            f"plaintext {m} outside [-{params.plaintext_bound}, {params.plaintext_bound}]"
        )
    return enc_raw(pk, m % pk.n, r=r, rng=rng)


def decrypt(sk, c):
    return nt.smod(dec_raw(sk, c), sk.public.n)


def eval_neg(pk, c):
    pk.check(c)
    return Ciphertext(nt.mod_inv(c.value, pk.n_squared), pk.fingerprint)


def eval_sub(pk, c0, c1):
    return eval_add(pk, c0, eval_neg(pk, c1))


def sample_ck_randomness(pk, params, rng=None):
    rng = rng or nt.default_rng()
    return CkRandomness(
        zeta=nt.sample_unit(pk.n, pk.n, rng),
        eta0=nt.sample_unit(pk.n, params.eta_bound, rng),
        eta1=nt.sample_unit(pk.n, params.eta_bound, rng),
    )


def gen_comparison_key(sk, params, rand=None, epoch=0, rng=None):
    """Derive a comparison key from the secret totient.

    ``rand`` fixes (zeta, eta0, eta1) for reproducible tests; otherwise
    they are sampled fresh.
    """
    pk = sk.public
    params.validate(pk.n)
    if rand is None:
        rand = sample_ck_randomness(pk, params, rng)
    rand.validate(pk.n, params)
    # ck0 is an exponent in Z*_{n^2}, so it is reduced modulo the group
    # order n*phi(n), not modulo n: (c0/c1)^ck0 only loses its r-terms when
    # ck0 stays a multiple of phi(n).
    group_order = pk.n * sk.phi
    ck0 = rand.eta0 * nt.mod_pow(sk.phi, rand.zeta, group_order) % group_order
    ck1 = rand.eta1 * nt.mod_inv(nt.mod_pow(sk.phi, rand.zeta, pk.n), pk.n) % pk.n
    return ComparisonKey(ck0, ck1, epoch, pk.fingerprint)


def rotate_comparison_key(sk, params, rng=None, prev_epoch=0):
    return gen_comparison_key(sk, params, epoch=prev_epoch + 1, rng=rng)


def eval_cmp(pk, ck, c0, c1):
    """Randomised signed difference of the two plaintexts (see module doc)."""
    if ck.key_fingerprint != pk.fingerprint:
        raise KeyMismatchError("comparison key belongs to a different public key")
    pk.check(c0, c1)
    ratio = c0.value * nt.mod_inv(c1.value, pk.n_squared) % pk.n_squared
    u = nt.mod_pow(ratio, ck.ck0, pk.n_squared)
    return nt.smod(l_function(u, pk.n) * ck.ck1 % pk.n, pk.n)


def eval_cmp_sign(pk, ck, c0, c1):
    return nt.sgn(eval_cmp(pk, ck, c0, c1))


sgn = nt.sgn
