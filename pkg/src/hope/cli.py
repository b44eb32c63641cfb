"""``hope`` command line client.

Exit codes: 0 success, 2 usage/configuration, 3 crypto error,
4 network error, 5 server error.
"""
import argparse
import random
import sys
from pathlib import Path

from . import formats
from .bench import CK_FILE, PUBLIC_FILE, SECRET_FILE, run_bench, write_key_files
from .client import Client, NetworkError, ServerError, TcpTransport
from .core import HopeParams, decrypt, encrypt, gen_comparison_key
from .errors import ConfigError, EmptyRangeError, HopeError, MalformedCiphertextError
from .paillier import keygen

EXIT_OK, EXIT_USAGE, EXIT_CRYPTO, EXIT_NETWORK, EXIT_SERVER = 0, 2, 3, 4, 5
KEYGEN_ATTEMPTS = 64


class UsageError(Exception):
    pass


def _rng(args):
    return random.Random(args.seed) if args.seed is not None else None


def _need(args, name):
    value = getattr(args, name)
    if value is None:
        raise UsageError(f"--{name} is required for '{args.command}'")
    return value


def _public(args):
    path = _need(args, "pubkey")
    return formats.load_public_key(formats.read_text(path), path)


def _secret(args):
    path = _need(args, "secret")
    return formats.load_secret_key(formats.read_text(path), path)


def _client(args, with_secret=False):
    if with_secret or (args.command == "range" and args.secret):
        sk, params = _secret(args)
        pk = sk.public
    else:
        pk, params = _public(args)
        sk = None
    transport = TcpTransport(_need(args, "server"))
    return Client(transport, pk, params, sk=sk, rng=_rng(args))


def cmd_keygen(args):
    params = HopeParams(args.plaintext_bound, args.eta_bound)
    if (2**args.bits - 1) // 2 < params.max_masked_diff:
        raise ConfigError(
            f"plaintext/eta bounds need keys of at least {params.min_key_bits()} bits, got {args.bits}"
        )
    rng = _rng(args)
    for _ in range(KEYGEN_ATTEMPTS):
        pk, sk = keygen(args.bits, rng)
        if params.fits(pk.n):
            break
    else:
        raise ConfigError(f"no {args.bits}-bit modulus satisfied the bounds; use at least {params.min_key_bits()} bits")
    ck = gen_comparison_key(sk, params, epoch=0, rng=rng)
    out = Path(args.out_dir)
    size = write_key_files(out, pk, sk, params, ck)
    for name in (PUBLIC_FILE, SECRET_FILE, CK_FILE):
        print(out / name)
    print(f"client_storage_bytes={size}")


def cmd_encrypt(args):
    pk, params = _public(args)
    if args.test_r is not None and not args.insecure_test_mode:
        raise UsageError("--test-r is only allowed together with --insecure-test-mode")
    c = encrypt(pk, params, args.m, rng=_rng(args), r=args.test_r)
    print(formats.to_hex(c.value))


def cmd_decrypt(args):
    sk, _ = _secret(args)
    try:
        c = sk.public.ciphertext(formats.from_hex(args.hex))
    except ValueError as exc:
        raise MalformedCiphertextError(str(exc)) from None
    print(decrypt(sk, c))


def cmd_insert(args):
    client = _client(args)
    with client.transport:
        print(f"OK {client.insert(args.id, args.m)}")
        if args.count_rounds:
            print(f"rounds={client.transport.rounds}")


def cmd_range(args):
    if args.lo > args.hi:
        raise EmptyRangeError(f"lower bound {args.lo} exceeds upper bound {args.hi}")
    client = _client(args)
    with client.transport:
        hits = client.range(args.lo, args.hi)
        print(f"RESULT {len(hits)}")
        for h in hits:
            print(h.id, h.value if h.value is not None else h.cipher_hex)
        if args.count_rounds:
            print(f"rounds={client.transport.rounds}")


def cmd_counteq(args):
    client = _client(args)
    with client.transport:
        print(client.count_eq(args.m))


def cmd_rotate(args):
    client = _client(args, with_secret=True)
    with client.transport:
        print(f"OK {client.rotate(args.epoch)}")


def cmd_bench(args):
    report = run_bench(
        bits=args.bits, trials=args.trials, dataset_size=args.dataset_size,
        distribution=args.distribution, queries=args.queries, rng=_rng(args),
    )
    text = report.render()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    sys.stdout.write(text)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--pubkey", default=argparse.SUPPRESS, help="public key file")
    common.add_argument("--secret", default=argparse.SUPPRESS, help="secret key file")
    common.add_argument("--server", default=argparse.SUPPRESS, help="server host:port")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="seed all randomness (testing only, not secure)")

    parser = argparse.ArgumentParser(prog="hope", description="Stateless order-preserving encryption client")
    parser.add_argument("--pubkey")
    parser.add_argument("--secret")
    parser.add_argument("--server")
    parser.add_argument("--seed", type=int)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keygen", parents=[common], help="generate key files")
    p.add_argument("--bits", type=int, default=1024)
    p.add_argument("--out-dir", default=".")
    p.add_argument("--plaintext-bound", type=int, default=HopeParams().plaintext_bound)
    p.add_argument("--eta-bound", type=int, default=HopeParams().eta_bound)
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("encrypt", parents=[common], help="encrypt a signed integer")
    p.add_argument("m", type=int)
    p.add_argument("--test-r", type=int, help="fixed randomness (needs --insecure-test-mode)")
    p.add_argument("--insecure-test-mode", action="store_true")
    p.set_defaults(func=cmd_encrypt)

    p = sub.add_parser("decrypt", parents=[common], help="decrypt a hex ciphertext")
    p.add_argument("hex")
    p.set_defaults(func=cmd_decrypt)

    p = sub.add_parser("insert", parents=[common], help="encrypt and insert one record")
    p.add_argument("id")
    p.add_argument("m", type=int)
    p.add_argument("--count-rounds", action="store_true")
    p.set_defaults(func=cmd_insert)

    p = sub.add_parser("range", parents=[common], help="inclusive range query")
    p.add_argument("lo", type=int)
    p.add_argument("hi", type=int)
    p.add_argument("--count-rounds", action="store_true")
    p.set_defaults(func=cmd_range)

    p = sub.add_parser("counteq", parents=[common], help="count records equal to a value")
    p.add_argument("m", type=int)
    p.set_defaults(func=cmd_counteq)

    p = sub.add_parser("rotate", parents=[common], help="send a fresh comparison key")
    p.add_argument("--epoch", type=int, help="new epoch (default: server's current + 1)")
    p.set_defaults(func=cmd_rotate)

    p = sub.add_parser("bench", parents=[common], help="timing and cost report")
    p.add_argument("--bits", type=int, default=1024)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--dataset-size", type=int, default=1000)
    p.add_argument("--distribution", choices=("uniform", "normal"), default="uniform")
    p.add_argument("--queries", type=int, default=100)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (UsageError, ConfigError, EmptyRangeError, OSError) as exc:
        print(f"hope: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NetworkError as exc:
        print(f"hope: network error: {exc}", file=sys.stderr)
        return EXIT_NETWORK
    except ServerError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_SERVER
    except MalformedCiphertextError as exc:
        print(f"ERR malformed ciphertext: {exc}", file=sys.stderr)
        return EXIT_CRYPTO
    except HopeError as exc:
        print(f"hope: {exc}", file=sys.stderr)
        return EXIT_CRYPTO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
