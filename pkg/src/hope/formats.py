"""Text serialisation for integers and key files.

Integers travel as lowercase minimal hex without a ``0x`` prefix. Key
files are UTF-8: a magic first line followed by ``name=value`` lines.
"""
import os
import re
from pathlib import Path

from .core import ComparisonKey, HopeParams
from .errors import ConfigError
from .paillier import PublicKey, keypair_from_primes

PUBLIC_MAGIC = "HOPE-PUBLIC-KEY v1"
SECRET_MAGIC = "HOPE-SECRET-KEY v1"
CK_MAGIC = "HOPE-COMPARISON-KEY v1"

_HEX = re.compile(r"(?:0|[1-9a-f][0-9a-f]*)\Z")
_SECRET_FIELDS = ("p", "q")


def to_hex(x):
    if x < 0:
        raise ValueError("cannot hex-encode a negative integer")
    return format(x, "x")


def from_hex(s):
    """Parse canonical hex; rejects uppercase, prefixes and leading zeros."""
    if not _HEX.match(s):
        raise ValueError(f"not canonical lowercase hex: {s[:40]!r}")
    return int(s, 16)


def _render(magic, fields):
    lines = [magic] + [f"{k}={v}" for k, v in fields]
    return "\n".join(lines) + "\n"


def _parse(text, magic, path="<string>"):
    lines = text.splitlines()
    if not lines or lines[0].strip() != magic:
        raise ConfigError(f"{path}: expected header {magic!r}")
    fields = {}
    for no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{no}: expected name=value")
        fields[key.strip()] = value.strip()
    return fields


def _need_hex(fields, name, path):
    try:
        return from_hex(fields[name])
    except KeyError:
        raise ConfigError(f"{path}: missing field {name!r}") from None
    except ValueError as exc:
        raise ConfigError(f"{path}: field {name!r}: {exc}") from None


def _params_fields(params):
    return [("plaintext_bound", to_hex(params.plaintext_bound)), ("eta_bound", to_hex(params.eta_bound))]


def _read_params(fields, path):
    if "plaintext_bound" not in fields and "eta_bound" not in fields:
        return HopeParams()
    return HopeParams(_need_hex(fields, "plaintext_bound", path), _need_hex(fields, "eta_bound", path))


def dump_public_key(pk, params=None):
    fields = [("n", to_hex(pk.n))]
    if params is not None:
        fields += _params_fields(params)
    return _render(PUBLIC_MAGIC, fields)


def load_public_key(text, path="<string>"):
    """Return ``(PublicKey, HopeParams)``."""
    fields = _parse(text, PUBLIC_MAGIC, path)
    if any(k in fields for k in _SECRET_FIELDS):
        raise ConfigError(f"{path}: public key file contains secret fields")
    return PublicKey(_need_hex(fields, "n", path)), _read_params(fields, path)


def dump_secret_key(sk, params):
    return _render(SECRET_MAGIC, [("p", to_hex(sk.p)), ("q", to_hex(sk.q))] + _params_fields(params))


def load_secret_key(text, path="<string>"):
    """Return ``(SecretKey, HopeParams)``."""
    fields = _parse(text, SECRET_MAGIC, path)
    _, sk = keypair_from_primes(_need_hex(fields, "p", path), _need_hex(fields, "q", path))
    return sk, _read_params(fields, path)


def dump_comparison_key(ck):
    return _render(CK_MAGIC, [("epoch", str(ck.epoch)), ("ck0", to_hex(ck.ck0)), ("ck1", to_hex(ck.ck1))])


def load_comparison_key(text, pk, path="<string>"):
    fields = _parse(text, CK_MAGIC, path)
    if any(k in fields for k in _SECRET_FIELDS):
        raise ConfigError(f"{path}: comparison key file contains secret key material")
    try:
        epoch = int(fields["epoch"])
    except (KeyError, ValueError):
        raise ConfigError(f"{path}: missing or invalid epoch") from None
    ck0, ck1 = _need_hex(fields, "ck0", path), _need_hex(fields, "ck1", path)
    if not (0 < ck0 < pk.n_squared and 0 < ck1 < pk.n) or epoch < 0:
        raise ConfigError(f"{path}: comparison key out of range for this public key")
    return ComparisonKey(ck0, ck1, epoch, pk.fingerprint)


def write_atomic(path, text):
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def read_text(path):
    return Path(path).read_text(encoding="utf-8")
