"""B+ tree over ciphertexts ordered by the homomorphic comparison.

The tree never sees a plaintext: every ordering decision is the sign of
``eval_cmp`` under the current comparison key. Entries whose plaintexts
compare equal share one bucket (insertion order kept), so a leaf holds a
sorted list of buckets and internal nodes hold copies of the first
ciphertext of the bucket that starts each right subtree.

Not internally synchronised beyond the comparison counter: callers must
give inserts and key changes exclusive access.
"""
import threading
from dataclasses import dataclass

from .core import eval_cmp
from .errors import ConfigError, DuplicateIdError, EmptyRangeError, EpochError, KeyMismatchError

DEFAULT_FANOUT = 32
MIN_FANOUT = 4


@dataclass(frozen=True)
class IndexEntry:
    id: str
    cipher: object


class _Leaf:
    __slots__ = ("buckets", "next")

    def __init__(self, buckets=None):
        self.buckets = buckets if buckets is not None else []
        self.next = None


class _Internal:
    __slots__ = ("keys", "children")

    def __init__(self, keys, children):
        self.keys = keys
        self.children = children


def _chunk(items, fanout):
    """Split into ceil(len/fanout) nearly equal groups of at most ``fanout``."""
    groups = max(1, -(-len(items) // fanout))
    size, extra = divmod(len(items), groups)
    out, start = [], 0
    for g in range(groups):
        stop = start + size + (g < extra)
        out.append(items[start:stop])
        start = stop
    return out


class OrderedIndex:
    def __init__(self, pk, ck, fanout=DEFAULT_FANOUT):
        if fanout < MIN_FANOUT:
            raise ConfigError(f"fanout must be >= {MIN_FANOUT}, got {fanout}")
        if ck.key_fingerprint != pk.fingerprint:
            raise KeyMismatchError("comparison key does not match the public key")
        self.pk = pk
        self.ck = ck
        self.fanout = fanout
        self.size = 0
        # Ciphertexts stored in the tree are never rewritten; this stays 0.
        self.reencode_events = 0
        self._root = _Leaf()
        self._ids = set()
        self._cmp_calls = 0
        self._counter_lock = threading.Lock()

    @property
    def cmp_calls(self):
        return self._cmp_calls

    def __len__(self):
        return self.size

    def __contains__(self, entry_id):
        return entry_id in self._ids

    def _cmp(self, a, b):
        with self._counter_lock:
            self._cmp_calls += 1
        d = eval_cmp(self.pk, self.ck, a, b)
        return (d > 0) - (d < 0)

    # search helpers

    def _child_slot(self, node, probe):
        # number of separators <= probe
        lo, hi = 0, len(node.keys)
        while lo < hi:
            mid = (lo + hi) // 2
            if self._cmp(probe, node.keys[mid]) < 0:
                hi = mid
            else:
                lo = mid + 1
        return lo

    def _bucket_slot(self, leaf, probe):
        """Return (position, found) of ``probe`` among the leaf's buckets."""
        lo, hi = 0, len(leaf.buckets)
        while lo < hi:
            mid = (lo + hi) // 2
            s = self._cmp(probe, leaf.buckets[mid][0].cipher)
            if s == 0:
                return mid, True
            if s < 0:
                hi = mid
            else:
                lo = mid + 1
        return lo, False

    def _find_leaf(self, probe):
        node = self._root
        while isinstance(node, _Internal):
            node = node.children[self._child_slot(node, probe)]
        return node

    # mutation

    def insert(self, entry):
        self.pk.check(entry.cipher)
        if entry.id in self._ids:
            raise DuplicateIdError(entry.id)
        split = self._insert(self._root, entry)
        if split is not None:
            sep, right = split
            self._root = _Internal([sep], [self._root, right])
        self._ids.add(entry.id)
        self.size += 1

    def _insert(self, node, entry):
        if isinstance(node, _Leaf):
            pos, found = self._bucket_slot(node, entry.cipher)
            if found:
                node.buckets[pos].append(entry)
                return None
            node.buckets.insert(pos, [entry])
            if len(node.buckets) <= self.fanout:
                return None
            mid = (len(node.buckets) + 1) // 2
            right = _Leaf(node.buckets[mid:])
            del node.buckets[mid:]
            right.next, node.next = node.next, right
            return right.buckets[0][0].cipher, right

        slot = self._child_slot(node, entry.cipher)
        split = self._insert(node.children[slot], entry)
        if split is None:
            return None
        sep, child = split
        node.keys.insert(slot, sep)
        node.children.insert(slot + 1, child)
        if len(node.children) <= self.fanout:
            return None
        mid = (len(node.children) + 1) // 2
        promoted = node.keys[mid - 1]
        right = _Internal(node.keys[mid:], node.children[mid:])
        del node.keys[mid - 1:]
        del node.children[mid:]
        return promoted, right

    def set_ck(self, ck_new):
        """Swap in a rotated comparison key; the tree layout stays valid."""
        if ck_new.key_fingerprint != self.pk.fingerprint:
            raise KeyMismatchError("comparison key belongs to a different public key")
        if ck_new.epoch <= self.ck.epoch:
            raise EpochError(f"epoch {ck_new.epoch} is not newer than {self.ck.epoch}")
        self.ck = ck_new

    # queries

    def range(self, lo, hi):
        """Entries with lo <= plaintext <= hi, in order (bounds inclusive)."""
        self.pk.check(lo, hi)
        if self._cmp(lo, hi) > 0:
            raise EmptyRangeError("lower bound exceeds upper bound")
        leaf = self._find_leaf(lo)
        pos, _ = self._bucket_slot(leaf, lo)
        out = []
        while leaf is not None:
            for bucket in leaf.buckets[pos:]:
                if self._cmp(bucket[0].cipher, hi) > 0:
                    return out
                out.extend(bucket)
            leaf, pos = leaf.next, 0
        return out

    def count_eq(self, probe):
        self.pk.check(probe)
        if self.size == 0:
            return 0
        leaf = self._find_leaf(probe)
        pos, found = self._bucket_slot(leaf, probe)
        return len(leaf.buckets[pos]) if found else 0

    def entries(self):
        """Leaf-chain traversal in nondecreasing plaintext order."""
        node = self._root
        while isinstance(node, _Internal):
            node = node.children[0]
        while node is not None:
            for bucket in node.buckets:
                yield from bucket
            node = node.next

    def buckets(self):
        node = self._root
        while isinstance(node, _Internal):
            node = node.children[0]
        while node is not None:
            yield from node.buckets
            node = node.next

    def depth(self):
        d, node = 1, self._root
        while isinstance(node, _Internal):
            node = node.children[0]
            d += 1
        return d

    @classmethod
    def from_sorted(cls, pk, ck, entries, fanout=DEFAULT_FANOUT):
        """Bulk-load entries already in nondecreasing plaintext order.

        Costs one comparison per adjacent pair (to form duplicate buckets);
        raises ValueError if the input turns out to be unsorted.
        """
        ix = cls(pk, ck, fanout)
        buckets = []
        for e in entries:
            pk.check(e.cipher)
            if e.id in ix._ids:
                raise DuplicateIdError(e.id)
            ix._ids.add(e.id)
            if buckets:
                s = ix._cmp(e.cipher, buckets[-1][0].cipher)
                if s < 0:
                    raise ValueError(f"entry {e.id!r} is out of order")
                if s == 0:
                    buckets[-1].append(e)
                    continue
            buckets.append([e])
        ix.size = len(ix._ids)
        if not buckets:
            return ix

        leaves = [_Leaf(group) for group in _chunk(buckets, fanout)]
        for a, b in zip(leaves, leaves[1:]):
            a.next = b
        level = [(leaf, leaf.buckets[0][0].cipher) for leaf in leaves]
        while len(level) > 1:
            parents = []
            for group in _chunk(level, fanout):
                node = _Internal([low for _, low in group[1:]], [child for child, _ in group])
                parents.append((node, group[0][1]))
            level = parents
        ix._root = level[0][0]
        return ix

    def check_structure(self):
        """Assert the B+ tree shape invariants (occupancy, uniform depth,
        separator placement). Test helper; costs comparisons.
        """
        min_fill = -(-self.fanout // 2)
        leaf_depths = set()

        def walk(node, depth, is_root, low, high):
            if isinstance(node, _Leaf):
                leaf_depths.add(depth)
                n = len(node.buckets)
                assert n <= self.fanout
                assert is_root or n >= min_fill, f"leaf underfull: {n}"
                for b in node.buckets:
                    head = b[0].cipher
                    assert low is None or self._cmp(head, low) >= 0
                    assert high is None or self._cmp(head, high) < 0
                    for e in b[1:]:
                        assert self._cmp(e.cipher, head) == 0
                return
            n = len(node.children)
            assert len(node.keys) == n - 1
            assert n <= self.fanout
            assert n >= (2 if is_root else min_fill), f"internal underfull: {n}"
            bounds = [low] + node.keys + [high]
            for i, child in enumerate(node.children):
                walk(child, depth + 1, False, bounds[i], bounds[i + 1])

        walk(self._root, 1, True, None, None)
        assert len(leaf_depths) <= 1
        assert sum(len(b) for b in self.buckets()) == self.size
