"""Helpers for tests that need key files or a running server."""
import os
import random
import subprocess
import sys
import threading
from pathlib import Path

from hope import formats
from hope.bench import CK_FILE, PUBLIC_FILE, SECRET_FILE, write_key_files
from hope.core import gen_comparison_key
from hope.server import HopeTCPServer, ServerState


def write_keys(key_dir, keys, params, seed=0):
    pk, sk = keys
    ck = gen_comparison_key(sk, params, rng=random.Random(seed))
    write_key_files(key_dir, pk, sk, params, ck)
    key_dir = Path(key_dir)
    return key_dir / PUBLIC_FILE, key_dir / SECRET_FILE, key_dir / CK_FILE


class ThreadedServer:
    """In-process TCP server on an ephemeral port."""

    def __init__(self, pubkey, ck_path, data_dir, fanout=32, fsync=False):
        pk, _ = formats.load_public_key(formats.read_text(pubkey))
        ck = formats.load_comparison_key(formats.read_text(ck_path), pk)
        self.state = ServerState(pk, ck, data_dir, fanout=fanout, fsync=fsync)
        self.server = HopeTCPServer(("127.0.0.1", 0), self.state)
        host, port = self.server.server_address[:2]
        self.address = f"{host}:{port}"
        self._thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        self._thread.start()

    def stop(self, snapshot=True):
        self.server.shutdown()
        self.server.server_close()
        self.state.close(snapshot=snapshot)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.stop()


def spawn_server(pubkey, ck_path, data_dir, extra=()):
    """Start ``hope-server`` as a subprocess; returns (process, address)."""
    env = dict(os.environ, PYTHONUNBUFFERED="1")
    proc = subprocess.Popen(
        [sys.executable, "-m", "hope.server", "--listen", "127.0.0.1:0", "--data-dir", str(data_dir),
         "--pubkey", str(pubkey), "--ck", str(ck_path), *extra],
        stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True, env=env,
    )
    line = proc.stdout.readline()
    if not line.startswith("listening on "):
        proc.kill()
        raise RuntimeError(f"server failed to start: {line!r} {proc.stderr.read()}")
    return proc, line.split()[-1]


def run_cli(*args, cwd=None):
    return subprocess.run(
        [sys.executable, "-m", "hope.cli", *map(str, args)],
        capture_output=True, text=True, cwd=cwd,
    )
