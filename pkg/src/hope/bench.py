"""Desk-scale timing and cost report.

Times encryption, decryption and comparison at a given key size, then
loads a synthetic dataset into an in-process server through the normal
client path and runs range queries against it, counting interaction
rounds and the bytes the client keeps on disk.
"""
import random
import statistics
import tempfile
import time
from dataclasses import asdict, dataclass
from pathlib import Path

from . import formats
from .client import Client, LocalTransport
from .core import HopeParams, decrypt, encrypt, eval_cmp, gen_comparison_key
from .paillier import keygen
from .server import ServerState

# synthetic salary-like workloads; values are integers
UNIFORM_RANGE = (0, 500_000)
NORMAL_MEAN, NORMAL_SD = 90_000, 45_000
# range queries cover at most 1% of the value span
QUERY_WIDTH_DIVISOR = 100

PUBLIC_FILE = "public.key"
SECRET_FILE = "secret.key"
CK_FILE = "comparison.key"


@dataclass
class BenchReport:
    key_bits: int
    trials: int
    encrypt_ms: float
    decrypt_ms: float
    compare_ms: float
    encrypt_cv: float
    decrypt_cv: float
    compare_cv: float
    dataset_size: int
    distribution: str
    build_s: float
    query_s: float
    range_queries: int
    client_storage_bytes: int
    rounds_per_insert: float
    rounds_per_range: float
    server_cmp_calls: int
    reencode_events: int

    def table(self):
        head = f"{'Encryption':>12}  {'Decryption':>12}  {'Comparison':>12}"
        row = f"{self.encrypt_ms:>9.3f} ms  {self.decrypt_ms:>9.3f} ms  {self.compare_ms:>9.3f} ms"
        return f"{head}\n{row}"

    def key_values(self):
        out = []
        for k, v in asdict(self).items():
            out.append(f"{k}={v:.6f}" if isinstance(v, float) else f"{k}={v}")
        return "\n".join(out)

    def render(self):
        return f"{self.table()}\n\n{self.key_values()}\n"


def params_for_bits(bits):
    """Default bounds when they fit the key size, otherwise smaller ones."""
    default = HopeParams()
    if default.min_key_bits() <= bits:
        return default
    for m_bits, b_bits in ((20, 16), (16, 8), (8, 4), (2, 2)):
        params = HopeParams(2**m_bits, 2**b_bits)
        if params.min_key_bits() <= bits:
            return params
    return HopeParams(1, 2)


def synthetic_dataset(size, distribution, params, rng):
    bound = params.plaintext_bound
    if distribution == "uniform":
        lo, hi = UNIFORM_RANGE
        values = [rng.randint(lo, hi) for _ in range(size)]
    elif distribution == "normal":
        values = [round(rng.gauss(NORMAL_MEAN, NORMAL_SD)) for _ in range(size)]
    else:
        raise ValueError(f"unknown distribution {distribution!r}")
    return [max(-bound, min(bound, v)) for v in values]


def write_key_files(out_dir, pk, sk, params, ck):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    formats.write_atomic(out_dir / PUBLIC_FILE, formats.dump_public_key(pk, params))
    formats.write_atomic(out_dir / SECRET_FILE, formats.dump_secret_key(sk, params))
    formats.write_atomic(out_dir / CK_FILE, formats.dump_comparison_key(ck))
    return client_storage_bytes(out_dir)


def client_storage_bytes(key_dir):
    """Bytes the client keeps: its public and secret key files."""
    key_dir = Path(key_dir)
    return sum((key_dir / name).stat().st_size for name in (PUBLIC_FILE, SECRET_FILE))


def _mean_cv(samples):
    mean = statistics.fmean(samples)
    return mean * 1e3, (statistics.pstdev(samples) / mean if mean else 0.0)


def run_bench(bits=1024, trials=100, dataset_size=1000, distribution="uniform",
              queries=100, rng=None, keys=None, fanout=32):
    if trials < 10:
        raise ValueError("trials must be >= 10")
    rng = rng or random.SystemRandom()
    if keys is None:
        pk, sk = keygen(bits, rng)
    else:
        pk, sk = keys
    params = params_for_bits(pk.bits)
    ck = gen_comparison_key(sk, params, rng=rng)
    bound = params.plaintext_bound

    enc_t, dec_t, cmp_t = [], [], []
    for _ in range(trials):
        m0, m1 = rng.randint(-bound, bound), rng.randint(-bound, bound)
        t = time.perf_counter()
        c0 = encrypt(pk, params, m0, rng=rng)
        enc_t.append(time.perf_counter() - t)
        c1 = encrypt(pk, params, m1, rng=rng)
        t = time.perf_counter()
        decrypt(sk, c0)
        dec_t.append(time.perf_counter() - t)
        t = time.perf_counter()
        eval_cmp(pk, ck, c0, c1)
        cmp_t.append(time.perf_counter() - t)

    with tempfile.TemporaryDirectory() as tmp:
        key_dir, data_dir = Path(tmp, "client"), Path(tmp, "server")
        write_key_files(key_dir, pk, sk, params, ck)
        state = ServerState(pk, ck, data_dir, fanout=fanout, fsync=False)
        client = Client(LocalTransport(state), pk, params, sk=sk, rng=rng)

        values = synthetic_dataset(dataset_size, distribution, params, rng)
        t = time.perf_counter()
        for i, v in enumerate(values):
            client.insert(f"r{i}", v)
        build_s = time.perf_counter() - t
        insert_rounds = client.transport.rounds

        lo_v, hi_v = (min(values), max(values)) if values else (0, 0)
        t = time.perf_counter()
        for _ in range(queries):
            a = rng.randint(lo_v, hi_v)
            client.range(a, a + rng.randint(0, (hi_v - lo_v) // QUERY_WIDTH_DIVISOR))
        query_s = time.perf_counter() - t
        range_rounds = client.transport.rounds - insert_rounds
        storage = client_storage_bytes(key_dir)
        state.close(snapshot=False)

    enc_ms, enc_cv = _mean_cv(enc_t)
    dec_ms, dec_cv = _mean_cv(dec_t)
    cmp_ms, cmp_cv = _mean_cv(cmp_t)
    return BenchReport(
        key_bits=pk.bits, trials=trials,
        encrypt_ms=enc_ms, decrypt_ms=dec_ms, compare_ms=cmp_ms,
        encrypt_cv=enc_cv, decrypt_cv=dec_cv, compare_cv=cmp_cv,
        dataset_size=dataset_size, distribution=distribution,
        build_s=build_s, query_s=query_s, range_queries=queries,
        client_storage_bytes=storage,
        rounds_per_insert=insert_rounds / dataset_size if dataset_size else 0.0,
        rounds_per_range=range_rounds / queries if queries else 0.0,
        server_cmp_calls=state.index.cmp_calls,
        reencode_events=state.index.reencode_events,
    )
