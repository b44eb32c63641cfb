"""Stateless client: encrypts locally, talks to the server in single round trips.

A round is one request line answered by one response group. Both the TCP
transport and the in-process transport count rounds the same way so the
benchmark and the tests can check the one-round-per-operation property.
"""
import socket
from dataclasses import dataclass

from . import formats
from .core import decrypt, encrypt, gen_comparison_key
from .errors import EmptyRangeError, HopeError


class ServerError(HopeError):
    def __init__(self, code, message):
        super().__init__(f"ERR {code} {message}")
        self.code = code
        self.message = message


class NetworkError(HopeError):
    pass


def _read_group(readline):
    first = readline()
    if first.startswith("RESULT "):
        k = int(first.split(" ")[1])
        lines = [first] + [readline() for _ in range(k + 1)]
        if lines[-1] != "END":
            raise NetworkError(f"malformed RESULT group, expected END, got {lines[-1]!r}")
        return lines
    return [first]


class TcpTransport:
    def __init__(self, address, timeout=60.0):
        host, _, port = address.rpartition(":")
        try:
            self._sock = socket.create_connection((host, int(port)), timeout=timeout)
        except (OSError, ValueError) as exc:
            raise NetworkError(f"cannot connect to {address}: {exc}") from None
        self._rfile = self._sock.makefile("r", encoding="utf-8", newline="\n")
        self._wfile = self._sock.makefile("w", encoding="utf-8", newline="\n")
        self.rounds = 0

    def _readline(self):
        line = self._rfile.readline()
        if not line.endswith("\n"):
            raise NetworkError("connection closed mid-response")
        return line[:-1]

    def exchange(self, line):
        try:
            self._wfile.write(line + "\n")
            self._wfile.flush()
            group = _read_group(self._readline)
        except OSError as exc:
            raise NetworkError(str(exc)) from None
        self.rounds += 1
        return group

    def close(self):
        for f in (self._wfile, self._rfile, self._sock):
            try:
                f.close()
            except OSError:
                pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class LocalTransport:
    """Feeds request lines straight into a :class:`~hope.server.ServerState`."""

    def __init__(self, state):
        self.state = state
        self.rounds = 0

    def exchange(self, line):
        group = self.state.handle_request(line)
        self.rounds += 1
        return group

    def close(self):
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        pass


def _check(group):
    if group[0].startswith("ERR "):
        _, code, *msg = group[0].split(" ", 2)
        raise ServerError(int(code), msg[0] if msg else "")
    return group


@dataclass
class RangeHit:
    id: str
    cipher_hex: str
    value: int = None


class Client:
    """Client operations over a transport. Holds keys only, never data."""

    def __init__(self, transport, pk, params, sk=None, rng=None):
        self.transport = transport
        self.pk = pk
        self.params = params
        self.sk = sk
        self.rng = rng

    def _enc_hex(self, m, r=None):
        return formats.to_hex(encrypt(self.pk, self.params, m, rng=self.rng, r=r).value)

    def insert(self, entry_id, m, r=None):
        group = _check(self.transport.exchange(f"INSERT {entry_id} {self._enc_hex(m, r)}"))
        return group[0].split(" ", 1)[1]

    def range(self, lo, hi):
        if lo > hi:
            raise EmptyRangeError(f"lower bound {lo} exceeds upper bound {hi}")
        group = _check(self.transport.exchange(f"RANGE {self._enc_hex(lo)} {self._enc_hex(hi)}"))
        hits = []
        for line in group[1:-1]:
            _, entry_id, hx = line.split(" ")
            hit = RangeHit(entry_id, hx)
            if self.sk is not None:
                hit.value = decrypt(self.sk, self.pk.ciphertext(formats.from_hex(hx)))
            hits.append(hit)
        return hits

    def count_eq(self, m):
        group = _check(self.transport.exchange(f"COUNTEQ {self._enc_hex(m)}"))
        return int(group[0].split(" ")[1])

    def stats(self):
        group = _check(self.transport.exchange("STATS"))
        fields = dict(kv.split("=", 1) for kv in group[0].split(" ")[1:])
        return fields

    def rotate(self, epoch=None):
        """Send a freshly generated comparison key; returns its epoch.

        Without an explicit ``epoch`` the current one is read via STATS first.
        """
        if self.sk is None:
            raise HopeError("rotation needs the secret key")
        if epoch is None:
            epoch = int(self.stats()["epoch"]) + 1
        ck = gen_comparison_key(self.sk, self.params, epoch=epoch, rng=self.rng)
        line = f"ROTATE {ck.epoch} {formats.to_hex(ck.ck0)} {formats.to_hex(ck.ck1)} {self.pk.fingerprint.hex()}"
        group = _check(self.transport.exchange(line))
        return int(group[0].split(" ")[1])
