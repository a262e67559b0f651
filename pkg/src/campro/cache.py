"""NPY v1.0 array files and the content-addressed precompute cache.

Layout on disk::

    <root>/<dataset>/<stage>/<stem>.<fingerprint>.npy

The fingerprint hashes a canonical JSON rendering of every parameter that
influenced the stored value, so a parameter change is always a cache miss.
Writers go through a temp file and ``os.replace``; readers never see a
partially written entry.
"""
from __future__ import annotations

import ast
import hashlib
import json
import logging
import os
import struct
import tempfile
import zipfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, TruncatedDataError

log = logging.getLogger(__name__)

MAGIC = b"\x93NUMPY"
VERSION = b"\x01\x00"
# numpy pads the header so the data section starts on a 64-byte boundary
HEADER_ALIGN = 64
SUPPORTED = {"|u1": np.dtype("u1"), "<f4": np.dtype("<f4"), "<f8": np.dtype("<f8")}
_KIND_TO_DESCR = {("u", 1): "|u1", ("f", 4): "<f4", ("f", 8): "<f8"}


def _descr_for(dtype: np.dtype) -> str:
    try:
        return _KIND_TO_DESCR[(dtype.kind, dtype.itemsize)]
    except KeyError:
        raise FormatError(f"unsupported dtype {dtype}; expected one of u8, f32, f64") from None


def _shape_repr(shape) -> str:
    if len(shape) == 1:
        return f"({shape[0]},)"
    return "(" + ", ".join(str(int(d)) for d in shape) + ")"


def encode_header(descr: str, shape) -> bytes:
    text = f"{{'descr': '{descr}', 'fortran_order': False, 'shape': {_shape_repr(shape)}, }}"
    prefix = len(MAGIC) + len(VERSION) + 2
    total = prefix + len(text) + 1
    pad = (-total) % HEADER_ALIGN
    text = text + " " * pad + "\n"
    if len(text) > 0xFFFF:
        raise FormatError("header too long for NPY v1.0")
    return MAGIC + VERSION + struct.pack("<H", len(text)) + text.encode("latin1")


def to_bytes(arr) -> bytes:
    arr = np.asarray(arr)
    descr = _descr_for(arr.dtype)
    data = np.asarray(arr, dtype=SUPPORTED[descr], order="C")
    return encode_header(descr, data.shape) + data.tobytes(order="C")


def write_array(arr, path) -> Path:
    """Write ``arr`` as an NPY v1.0 file (u8/f32/f64, C order, little endian).

    The write is atomic: data goes to a sibling temp file that is renamed
    over ``path``.
    """
    path = Path(path)
    payload = to_bytes(arr)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise
    return path


def from_bytes(raw: bytes, source="<bytes>") -> np.ndarray:
    if raw[: len(MAGIC)] != MAGIC:
        raise FormatError(f"{source}: bad magic, not an NPY file")
    if len(raw) < 10:
        raise FormatError(f"{source}: header truncated")
    major, minor = raw[6], raw[7]
    if (major, minor) != (1, 0):
        raise FormatError(f"{source}: NPY version {major}.{minor} not supported (only 1.0)")
    (hlen,) = struct.unpack("<H", raw[8:10])
    start = 10 + hlen
    if len(raw) < start:
        raise FormatError(f"{source}: header truncated")
    try:
        header = ast.literal_eval(raw[10:start].decode("latin1"))
    except (ValueError, SyntaxError) as exc:
        raise FormatError(f"{source}: unparsable header: {exc}") from None
    if not isinstance(header, dict) or set(header) != {"descr", "fortran_order", "shape"}:
        raise FormatError(f"{source}: header must hold exactly descr/fortran_order/shape")
    descr, fortran, shape = header["descr"], header["fortran_order"], header["shape"]
    if fortran:
        raise FormatError(f"{source}: fortran_order=True is not supported")
    if descr not in SUPPORTED:
        raise FormatError(f"{source}: unsupported dtype descr {descr!r}")
    if not isinstance(shape, tuple) or any(not isinstance(d, int) or d < 0 for d in shape):
        raise FormatError(f"{source}: invalid shape {shape!r}")
    dtype = SUPPORTED[descr]
    expected = dtype.itemsize * int(np.prod(shape, dtype=np.int64))
    actual = len(raw) - start
    if actual < expected:
        raise TruncatedDataError(source, expected, actual)
    if actual > expected:
        raise FormatError(f"{source}: {actual - expected} trailing bytes after data section")
    return np.frombuffer(raw, dtype=dtype, count=expected // dtype.itemsize, offset=start).reshape(shape).copy()


def read_array(path) -> np.ndarray:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror}") from exc
    return from_bytes(raw, source=str(path))


def write_npz(arrays: dict, path) -> Path:
    """Bundle named arrays into an uncompressed ``.npz`` zip for interchange."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as zf:
        for name in sorted(arrays):
            zf.writestr(f"{name}.npy", to_bytes(arrays[name]))
    return path


def read_npz(path) -> dict:
    out = {}
    with zipfile.ZipFile(path) as zf:
        for info in zf.infolist():
            if not info.filename.endswith(".npy"):
                continue
            out[info.filename[:-4]] = from_bytes(zf.read(info), source=f"{path}:{info.filename}")
    return out


# --------------------------------------------------------------------------
# content-addressed cache
# --------------------------------------------------------------------------

def canonical_json(params) -> str:
    def default(obj):
        if isinstance(obj, (np.integer,)):
            return int(obj)
        if isinstance(obj, (np.floating,)):
            return float(obj)
        if isinstance(obj, (tuple, set)):
            return list(obj)
        if hasattr(obj, "to_dict"):
            return obj.to_dict()
        raise TypeError(f"cannot serialise {type(obj).__name__} into a fingerprint")

    return json.dumps(params, sort_keys=True, separators=(",", ":"), default=default)


def fingerprint(params) -> str:
    return hashlib.sha256(canonical_json(params).encode("utf-8")).hexdigest()[:32]


@dataclass(frozen=True)
class CacheKey:
    dataset: str
    stem: str
    stage: str
    params: dict = field(default_factory=dict, hash=False, compare=False)

    @property
    def fingerprint(self) -> str:
        return fingerprint({"stage": self.stage, "params": self.params})

    def path(self, root) -> Path:
        return Path(root) / self.dataset / self.stage / f"{self.stem}.{self.fingerprint}.npy"


def store(key: CacheKey, arr, root) -> Path:
    return write_array(arr, key.path(root))


def lookup(key: CacheKey, root) -> np.ndarray | None:
    """Stored array for ``key`` or ``None``; unreadable entries count as absent."""
    path = key.path(root)
    if not path.is_file():
        return None
    try:
        return read_array(path)
    except (FormatError, OSError) as exc:
        log.warning("ignoring corrupt cache entry %s: %s", path, exc)
        return None


def default_root(cli_value=None) -> Path:
    """Cache root: ``$CAMPRO_CACHE`` wins over the command-line value."""
    env = os.environ.get("CAMPRO_CACHE")
    if env:
        return Path(env)
    return Path(cli_value) if cli_value else Path(".campro-cache")
