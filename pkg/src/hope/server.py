"""Encrypted-index server.

Holds only the public key, the current comparison key and ciphertexts.
Speaks a newline-delimited text protocol in which every request gets
exactly one response group:

    INSERT <id> <hex>                     -> OK <id>
    RANGE <hex-lo> <hex-hi>               -> RESULT <k>, k x ITEM <id> <hex>, END
    COUNTEQ <hex>                         -> COUNT <k>
    ROTATE <epoch> <ck0> <ck1> [<fp>]     -> OK <epoch>
    STATS                                 -> STATS key=value ...
    any failure                           -> ERR <code> <message>

Inserts are appended (and fsynced) to ``entries.log`` before they are
indexed and acknowledged; on restart the index is rebuilt from an
optional ``snapshot.v1`` plus the log.
"""
import argparse
import logging
import os
import re
import signal
import socketserver
import sys
import threading
from dataclasses import dataclass
from pathlib import Path

from . import formats
from .core import ComparisonKey
from .errors import (
    ConfigError,
    DuplicateIdError,
    EmptyRangeError,
    HopeError,
    KeyMismatchError,
    LoadError,
    MalformedCiphertextError,
)
from .index import DEFAULT_FANOUT, MIN_FANOUT, IndexEntry, OrderedIndex

log = logging.getLogger(__name__)

LOG_NAME = "entries.log"
SNAPSHOT_NAME = "snapshot.v1"
CK_NAME = "comparison.key"
SNAPSHOT_MAGIC = "HOPE-SNAPSHOT v1"
MAX_LINE = 1 << 16

_ID = re.compile(r"[A-Za-z0-9_-]{1,64}\Z")


class ProtocolError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code
        self.message = message


@dataclass
class ServerConfig:
    listen_address: str = "127.0.0.1:7878"
    data_dir: str = "hope-data"
    fanout: int = DEFAULT_FANOUT
    pubkey_path: str = "public.key"
    ck_path: str = "comparison.key"
    fsync: bool = True

    def __post_init__(self):
        if self.fanout < MIN_FANOUT:
            raise ConfigError(f"fanout must be >= {MIN_FANOUT}")

    @property
    def host_port(self):
        host, _, port = self.listen_address.rpartition(":")
        if not host or not port.isdigit():
            raise ConfigError(f"listen address must be host:port, got {self.listen_address!r}")
        return host, int(port)


@dataclass
class RoundStats:
    inserts: int = 0
    range_queries: int = 0
    count_queries: int = 0
    insert_responses: int = 0
    range_responses: int = 0
    count_responses: int = 0

    @staticmethod
    def _ratio(groups, requests):
        return groups / requests if requests else 0.0

    @property
    def rounds_per_insert(self):
        return self._ratio(self.insert_responses, self.inserts)

    @property
    def rounds_per_range(self):
        return self._ratio(self.range_responses, self.range_queries)


class RWLock:
    """Many readers or one writer."""

    def __init__(self):
        self._cond = threading.Condition()
        self._readers = 0
        self._writer = False

    def acquire_read(self):
        with self._cond:
            while self._writer:
                self._cond.wait()
            self._readers += 1

    def release_read(self):
        with self._cond:
            self._readers -= 1
            if not self._readers:
                self._cond.notify_all()

    def acquire_write(self):
        with self._cond:
            while self._writer or self._readers:
                self._cond.wait()
            self._writer = True

    def release_write(self):
        with self._cond:
            self._writer = False
            self._cond.notify_all()


class _Guard:
    def __init__(self, acquire, release):
        self._acquire, self._release = acquire, release

    def __enter__(self):
        self._acquire()

    def __exit__(self, *exc):
        self._release()


# persistence

def _parse_entry(line, pk, path, line_no):
    parts = line.split(" ")
    if len(parts) != 2 or not _ID.match(parts[0]):
        raise LoadError(path, line_no, "expected '<id> <hex>'")
    try:
        cipher = pk.ciphertext(formats.from_hex(parts[1]))
    except (ValueError, MalformedCiphertextError) as exc:
        raise LoadError(path, line_no, str(exc)) from None
    return IndexEntry(parts[0], cipher)


def _read_lines(path):
    """Complete lines of a file; a final line without newline is corrupt."""
    text = path.read_text(encoding="utf-8")
    if text and not text.endswith("\n"):
        raise LoadError(path, text.count("\n") + 1, "truncated final line")
    return text.splitlines()


def persist_append(fd, entry, fsync=True):
    """Append one ``<id> <hex>`` record; returns once it is on disk."""
    data = f"{entry.id} {formats.to_hex(entry.cipher.value)}\n".encode()
    written = os.write(fd, data)
    if written != len(data):
        raise OSError(f"short write to entry log ({written}/{len(data)} bytes)")
    if fsync:
        os.fsync(fd)


def load_log(data_dir, pk):
    path = Path(data_dir) / LOG_NAME
    if not path.exists():
        return []
    return [_parse_entry(line, pk, path, no) for no, line in enumerate(_read_lines(path), start=1)]


def load_snapshot(data_dir, pk):
    """Return the snapshot's entries in leaf order, or None if absent."""
    path = Path(data_dir) / SNAPSHOT_NAME
    if not path.exists():
        return None
    lines = _read_lines(path)
    if not lines or lines[0] != SNAPSHOT_MAGIC:
        raise LoadError(path, 1, f"expected header {SNAPSHOT_MAGIC!r}")
    header = {}
    for no in (2, 3, 4):
        key, sep, value = (lines[no - 1] if len(lines) >= no else "").partition("=")
        if not sep or not value.isdigit():
            raise LoadError(path, no, "expected name=<decimal>")
        header[key] = int(value)
    if set(header) != {"fanout", "epoch", "entries"}:
        raise LoadError(path, 2, "snapshot header needs fanout, epoch and entries")
    body = lines[4:]
    if len(body) != header["entries"]:
        raise LoadError(path, len(lines), f"snapshot declares {header['entries']} entries, has {len(body)}")
    return [_parse_entry(line, pk, path, no) for no, line in enumerate(body, start=5)]


def write_snapshot(data_dir, index):
    entries = list(index.entries())
    lines = [SNAPSHOT_MAGIC, f"fanout={index.fanout}", f"epoch={index.ck.epoch}", f"entries={len(entries)}"]
    lines += [f"{e.id} {formats.to_hex(e.cipher.value)}" for e in entries]
    formats.write_atomic(Path(data_dir) / SNAPSHOT_NAME, "\n".join(lines) + "\n")


def load_snapshot_and_log(data_dir, pk, ck, fanout=DEFAULT_FANOUT):
    """Rebuild the index. The log is authoritative; a snapshot is used only
    when it covers exactly a prefix of the log (by id set), and the rest of
    the log is replayed on top of it.
    """
    data_dir = Path(data_dir)
    logged = load_log(data_dir, pk)
    snap = load_snapshot(data_dir, pk)
    if snap is not None and len(snap) <= len(logged):
        if {e.id for e in snap} == {e.id for e in logged[: len(snap)]}:
            try:
                index = OrderedIndex.from_sorted(pk, ck, snap, fanout)
            except (ValueError, KeyError):
                log.warning("snapshot rejected; replaying full log")
            else:
                for e in logged[len(snap):]:
                    index.insert(e)
                return index
    index = OrderedIndex(pk, ck, fanout)
    for no, e in enumerate(logged, start=1):
        try:
            index.insert(e)
        except DuplicateIdError:
            raise LoadError(data_dir / LOG_NAME, no, f"duplicate id {e.id!r}") from None
    return index


# request handling

class ServerState:
    def __init__(self, pk, ck, data_dir, fanout=DEFAULT_FANOUT, fsync=True):
        self.pk = pk
        self.data_dir = Path(data_dir)
        self.fsync = fsync
        self.data_dir.mkdir(parents=True, exist_ok=True)
        stored_ck = self.data_dir / CK_NAME
        if stored_ck.exists():
            rotated = formats.load_comparison_key(formats.read_text(stored_ck), pk, stored_ck)
            if rotated.epoch >= ck.epoch:
                ck = rotated
        self.index = load_snapshot_and_log(self.data_dir, pk, ck, fanout)
        self.stats = RoundStats()
        self._lock = RWLock()
        self._stats_lock = threading.Lock()
        self._log_fd = os.open(self.data_dir / LOG_NAME, os.O_WRONLY | os.O_APPEND | os.O_CREAT, 0o644)

    @classmethod
    def from_config(cls, config):
        pk, _ = formats.load_public_key(formats.read_text(config.pubkey_path), config.pubkey_path)
        ck = formats.load_comparison_key(formats.read_text(config.ck_path), pk, config.ck_path)
        return cls(pk, ck, config.data_dir, config.fanout, config.fsync)

    def reading(self):
        return _Guard(self._lock.acquire_read, self._lock.release_read)

    def writing(self):
        return _Guard(self._lock.acquire_write, self._lock.release_write)

    def close(self, snapshot=True):
        with self.writing():
            if self._log_fd is None:
                return
            if snapshot:
                write_snapshot(self.data_dir, self.index)
            os.close(self._log_fd)
            self._log_fd = None

    def _cipher(self, token):
        try:
            return self.pk.ciphertext(formats.from_hex(token))
        except (ValueError, MalformedCiphertextError) as exc:
            raise ProtocolError(400, f"bad ciphertext: {exc}") from None

    def _count(self, request_field, response_field):
        with self._stats_lock:
            setattr(self.stats, request_field, getattr(self.stats, request_field) + 1)
            setattr(self.stats, response_field, getattr(self.stats, response_field) + 1)

    def handle_request(self, line):
        """Process one request line; return the response group as lines."""
        parts = line.rstrip("\r\n").split(" ")
        verb, args = parts[0], parts[1:]
        handler = {
            "INSERT": self._insert,
            "RANGE": self._range,
            "COUNTEQ": self._counteq,
            "ROTATE": self._rotate,
            "STATS": self._stats,
        }.get(verb)
        try:
            if handler is None:
                raise ProtocolError(400, f"unknown command {verb[:32]!r}")
            response = handler(args)
        except ProtocolError as exc:
            response = [f"ERR {exc.code} {exc.message}"]
        except (KeyMismatchError, MalformedCiphertextError) as exc:
            response = [f"ERR 409 {exc}"]
        except Exception as exc:  # noqa: BLE001 - every request must get a response
            log.exception("internal error handling %s", verb)
            response = [f"ERR 500 {type(exc).__name__}: {exc}"]
        counters = {
            "INSERT": ("inserts", "insert_responses"),
            "RANGE": ("range_queries", "range_responses"),
            "COUNTEQ": ("count_queries", "count_responses"),
        }
        if verb in counters:
            self._count(*counters[verb])
        return response

    @staticmethod
    def _arity(args, *counts):
        if len(args) not in counts or any(not a for a in args):
            raise ProtocolError(400, "wrong number of fields")

    def _insert(self, args):
        self._arity(args, 2)
        entry_id, token = args
        if not _ID.match(entry_id):
            raise ProtocolError(400, "id must be 1-64 chars of [A-Za-z0-9_-]")
        entry = IndexEntry(entry_id, self._cipher(token))
        with self.writing():
            if entry_id in self.index:
                raise ProtocolError(409, f"duplicate id {entry_id}")
            try:
                persist_append(self._log_fd, entry, self.fsync)
            except OSError as exc:
                raise ProtocolError(500, f"persistence failed: {exc}") from None
            self.index.insert(entry)
        return [f"OK {entry_id}"]

    def _range(self, args):
        self._arity(args, 2)
        lo, hi = self._cipher(args[0]), self._cipher(args[1])
        with self.reading():
            try:
                found = self.index.range(lo, hi)
            except EmptyRangeError:
                raise ProtocolError(400, "empty range: lower bound exceeds upper bound") from None
        return [f"RESULT {len(found)}"] + [f"ITEM {e.id} {formats.to_hex(e.cipher.value)}" for e in found] + ["END"]

    def _counteq(self, args):
        self._arity(args, 1)
        probe = self._cipher(args[0])
        with self.reading():
            return [f"COUNT {self.index.count_eq(probe)}"]

    def _rotate(self, args):
        self._arity(args, 3, 4)
        if not args[0].isdigit():
            raise ProtocolError(400, "epoch must be a decimal integer")
        epoch = int(args[0])
        try:
            ck0, ck1 = formats.from_hex(args[1]), formats.from_hex(args[2])
            fp = bytes.fromhex(args[3]) if len(args) == 4 else self.pk.fingerprint
        except ValueError as exc:
            raise ProtocolError(400, str(exc)) from None
        if fp != self.pk.fingerprint:
            raise ProtocolError(409, "comparison key is for a different public key")
        if not (0 < ck0 < self.pk.n_squared and 0 < ck1 < self.pk.n):
            raise ProtocolError(409, "comparison key out of range for this public key")
        ck = ComparisonKey(ck0, ck1, epoch, self.pk.fingerprint)
        with self.writing():
            if epoch <= self.index.ck.epoch:
                raise ProtocolError(409, f"stale epoch {epoch}, current is {self.index.ck.epoch}")
            formats.write_atomic(self.data_dir / CK_NAME, formats.dump_comparison_key(ck))
            self.index.set_ck(ck)
        return [f"OK {epoch}"]

    def _stats(self, args):
        self._arity(args, 0)
        s = self.stats
        return [
            f"STATS inserts={s.inserts} ranges={s.range_queries} "
            f"rounds_per_range={s.rounds_per_range:.3f} cmp_calls={self.index.cmp_calls} "
            f"counts={s.count_queries} rounds_per_insert={s.rounds_per_insert:.3f} "
            f"size={self.index.size} epoch={self.index.ck.epoch}"
        ]


# network front end

class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        state = self.server.state
        while True:
            raw = self.rfile.readline(MAX_LINE)
            if not raw:
                return
            if not raw.endswith(b"\n"):
                response = ["ERR 400 request line too long or unterminated"]
            else:
                try:
                    line = raw.decode("utf-8")
                except UnicodeDecodeError:
                    response = ["ERR 400 request is not UTF-8"]
                else:
                    response = state.handle_request(line)
            self.wfile.write(("\n".join(response) + "\n").encode())
            self.wfile.flush()


class HopeTCPServer(socketserver.ThreadingTCPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, address, state):
        super().__init__(address, _Handler)
        self.state = state


def serve(config, ready=None):
    """Run until SIGINT/SIGTERM; then write a snapshot and exit."""
    state = ServerState.from_config(config)
    server = HopeTCPServer(config.host_port, state)
    host, port = server.server_address[:2]
    print(f"listening on {host}:{port}", flush=True)
    if ready is not None:
        ready(server)

    def stop(signum, frame):
        threading.Thread(target=server.shutdown, daemon=True).start()

    if threading.current_thread() is threading.main_thread():
        signal.signal(signal.SIGTERM, stop)
        signal.signal(signal.SIGINT, stop)
    try:
        server.serve_forever()
    finally:
        server.server_close()
        state.close()


def main(argv=None):
    parser = argparse.ArgumentParser(prog="hope-server", description="Encrypted range-query index server")
    parser.add_argument("--listen", default="127.0.0.1:7878", help="host:port (port 0 picks a free port)")
    parser.add_argument("--data-dir", default="hope-data")
    parser.add_argument("--fanout", type=int, default=DEFAULT_FANOUT)
    parser.add_argument("--pubkey", required=True)
    parser.add_argument("--ck", required=True)
    parser.add_argument("--no-fsync", action="store_true", help="skip fsync before acknowledging inserts")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(levelname)s %(message)s")
    try:
        config = ServerConfig(args.listen, args.data_dir, args.fanout, args.pubkey, args.ck, not args.no_fsync)
        serve(config)
    except (HopeError, OSError) as exc:
        print(f"hope-server: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
