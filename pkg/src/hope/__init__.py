"""Stateless homomorphic order-preserving encryption.

Signed Paillier encryption plus a comparison key that lets an untrusted
server learn the order of two ciphertexts (and nothing else), an encrypted
B+ tree index built on that comparison, and a single-round-trip
client/server protocol for inserts and range queries.
"""
from .core import (
    CkRandomness,
    ComparisonKey,
    HopeParams,
    decrypt,
    encrypt,
    eval_cmp,
    eval_cmp_sign,
    eval_neg,
    eval_sub,
    gen_comparison_key,
    rotate_comparison_key,
)
from .index import IndexEntry, OrderedIndex
from .paillier import Ciphertext, PublicKey, SecretKey, dec_raw, enc_raw, eval_add, keygen, keypair_from_primes

__all__ = [
    "Ciphertext", "CkRandomness", "ComparisonKey", "HopeParams", "IndexEntry", "OrderedIndex",
    "PublicKey", "SecretKey", "dec_raw", "decrypt", "enc_raw", "encrypt", "eval_add", "eval_cmp",
    "eval_cmp_sign", "eval_neg", "eval_sub", "gen_comparison_key", "keygen", "keypair_from_primes",
    "rotate_comparison_key",
]
