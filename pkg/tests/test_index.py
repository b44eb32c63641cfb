import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from hope.core import decrypt, encrypt, gen_comparison_key, rotate_comparison_key
from hope.errors import ConfigError, DuplicateIdError, EmptyRangeError, EpochError, KeyMismatchError
from hope.index import IndexEntry, OrderedIndex
from hope.paillier import enc_raw


@pytest.fixture(scope="module")
def env(keys128, params128):
    pk, sk = keys128
    ck = gen_comparison_key(sk, params128, rng=random.Random(9))
    return pk, sk, params128, ck


def enc(env, m, rng=None):
    pk, _, params, _ = env
    return encrypt(pk, params, m, rng=rng or random.Random(m))


def build(env, values, fanout=32, rng=None):
    pk, _, _, ck = env
    rng = rng or random.Random(0)
    ix = OrderedIndex(pk, ck, fanout)
    for i, v in enumerate(values):
        ix.insert(IndexEntry(f"r{i}", encrypt(pk, env[2], v, rng=rng)))
    return ix


def plain(env, entries):
    return [decrypt(env[1], e.cipher) for e in entries]


def test_empty_index(env):
    pk, _, _, ck = env
    ix = OrderedIndex(pk, ck, 32)
    assert ix.size == 0 and len(ix) == 0
    assert ix.range(enc(env, 0), enc(env, 10)) == []
    assert ix.count_eq(enc(env, 4)) == 0
    assert list(ix.entries()) == []


def test_fanout_floor(env):
    pk, _, _, ck = env
    with pytest.raises(ConfigError):
        OrderedIndex(pk, ck, 3)


def test_insert_orders_by_plaintext(env):
    ix = build(env, [5, 3, 9])
    assert plain(env, ix.entries()) == [3, 5, 9]


def test_descending_insertion_no_reencoding(env):
    values = list(range(100, 0, -1))
    ix = build(env, values, fanout=4)
    assert ix.reencode_events == 0
    assert plain(env, ix.entries()) == sorted(values)
    ix.check_structure()


def test_duplicates_form_bucket_in_insertion_order(env):
    ix = build(env, [4, 7, 4, 1, 4])
    assert ix.count_eq(enc(env, 4)) == 3
    ids = [e.id for e in ix.entries()]
    assert ids == ["r3", "r0", "r2", "r4", "r1"]


def test_duplicate_id_rejected(env):
    ix = build(env, [1])
    with pytest.raises(DuplicateIdError):
        ix.insert(IndexEntry("r0", enc(env, 2)))
    assert ix.size == 1


def test_key_mismatch(env, keys15):
    ix = build(env, [1])
    with pytest.raises(KeyMismatchError):
        ix.insert(IndexEntry("x", enc_raw(keys15[0], 1, r=1)))


def test_range_examples(env):
    ix = build(env, [1, 5, 9])
    assert plain(env, ix.range(enc(env, 2), enc(env, 7))) == [5]
    assert plain(env, ix.range(enc(env, -100), enc(env, 100))) == [1, 5, 9]
    assert plain(env, ix.range(enc(env, 5), enc(env, 5))) == [5]
    assert ix.range(enc(env, 6), enc(env, 8)) == []
    with pytest.raises(EmptyRangeError):
        ix.range(enc(env, 7), enc(env, 2))


def test_range_point_query_returns_all_duplicates(env):
    ix = build(env, [3, 8, 3, 3, 1, 8], fanout=4)
    assert len(ix.range(enc(env, 3), enc(env, 3))) == 3
    assert len(ix.range(enc(env, 8), enc(env, 8))) == 2


def test_count_eq_examples(env):
    ix = build(env, [4, 4, 7])
    assert ix.count_eq(enc(env, 4)) == 2
    assert ix.count_eq(enc(env, 5)) == 0
    assert ix.count_eq(enc(env, 7)) == 1


def test_set_ck_rotation_preserves_results(env):
    pk, sk, params, _ = env
    rng = random.Random(4)
    values = [rng.randint(-1000, 1000) for _ in range(300)]
    ix = build(env, values, fanout=5)
    lo, hi = enc(env, -200), enc(env, 350)
    before = [e.id for e in ix.range(lo, hi)]
    ix.set_ck(rotate_comparison_key(sk, params, rng, ix.ck.epoch))
    assert ix.ck.epoch == 1
    assert [e.id for e in ix.range(lo, hi)] == before
    for i in range(50):
        ix.insert(IndexEntry(f"n{i}", enc(env, rng.randint(-1000, 1000), rng)))
    got = plain(env, ix.entries())
    assert got == sorted(got)
    ix.check_structure()


def test_set_ck_rejects_stale_epoch(env):
    pk, sk, params, ck = env
    ix = OrderedIndex(pk, ck)
    with pytest.raises(EpochError):
        ix.set_ck(gen_comparison_key(sk, params, epoch=ck.epoch))


@pytest.mark.parametrize("fanout", [4, 5, 32])
def test_oracle_equivalence(env, fanout):
    rng = random.Random(fanout)
    bound = 500
    values = [rng.randint(-bound, bound) for _ in range(1000)]
    ix = build(env, values, fanout=fanout, rng=rng)
    ix.check_structure()
    decoded = plain(env, ix.entries())
    assert decoded == sorted(values)
    for _ in range(100):
        lo, hi = sorted((rng.randint(-bound - 20, bound + 20), rng.randint(-bound - 20, bound + 20)))
        got = plain(env, ix.range(enc(env, lo, rng), enc(env, hi, rng)))
        assert got == sorted(v for v in values if lo <= v <= hi)


@settings(max_examples=25, deadline=None)
@given(
    values=st.lists(st.integers(-30, 30), max_size=120),
    queries=st.lists(st.tuples(st.integers(-35, 35), st.integers(-35, 35)), max_size=10),
    fanout=st.integers(4, 7),
)
def test_oracle_equivalence_property(env, values, queries, fanout):
    ix = build(env, values, fanout=fanout)
    ix.check_structure()
    assert plain(env, ix.entries()) == sorted(values)
    for a, b in queries:
        lo, hi = min(a, b), max(a, b)
        got = plain(env, ix.range(enc(env, lo), enc(env, hi)))
        assert got == sorted(v for v in values if lo <= v <= hi)
        assert ix.count_eq(enc(env, a)) == values.count(a)


@pytest.mark.parametrize("order", ["ascending", "descending", "shuffled"])
def test_insertion_order_never_reencodes(env, order):
    values = list(range(2000))
    if order == "descending":
        values.reverse()
    elif order == "shuffled":
        random.Random(1).shuffle(values)
    ix = build(env, values, fanout=8)
    assert ix.reencode_events == 0
    ix.check_structure()


def test_bulk_load_matches_incremental(env):
    pk, _, _, ck = env
    rng = random.Random(12)
    values = [rng.randint(-50, 50) for _ in range(400)]
    ix = build(env, values, fanout=6)
    bulk = OrderedIndex.from_sorted(pk, ck, list(ix.entries()), fanout=6)
    bulk.check_structure()
    assert [e.id for e in bulk.entries()] == [e.id for e in ix.entries()]
    assert bulk.count_eq(enc(env, values[0])) == values.count(values[0])


def test_bulk_load_rejects_unsorted(env):
    pk, _, _, ck = env
    entries = [IndexEntry("a", enc(env, 5)), IndexEntry("b", enc(env, 1))]
    with pytest.raises(ValueError):
        OrderedIndex.from_sorted(pk, ck, entries)


def test_comparisons_per_insert_grow_logarithmically(env):
    pk, _, params, ck = env
    rng = random.Random(77)
    ix = OrderedIndex(pk, ck, 32)
    ratios = []
    window = 256
    i = 0
    for exp in range(10, 15):
        target = 2**exp
        while ix.size < target - window:
            ix.insert(IndexEntry(f"r{i}", encrypt(pk, params, rng.randint(-(2**20), 2**20), rng=rng)))
            i += 1
        before = ix.cmp_calls
        for _ in range(window):
            ix.insert(IndexEntry(f"r{i}", encrypt(pk, params, rng.randint(-(2**20), 2**20), rng=rng)))
            i += 1
        per_insert = (ix.cmp_calls - before) / window
        ratios.append(per_insert / math.log2(target))
        assert per_insert <= 32 * math.log(target, 32) + 1
    assert max(ratios) / min(ratios) <= 2.0
