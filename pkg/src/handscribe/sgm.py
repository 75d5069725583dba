"""Named-tensor archive: the binary container used for detector maps and
recognizer weights.

Layout: magic bytes ``SGM1``, then for each tensor: name length, name
(UTF-8), rank, dims — all unsigned 32-bit little-endian — followed by the
row-major float32 little-endian payload. Tensors are read until EOF.
"""

from __future__ import annotations

import struct
from collections import OrderedDict

import numpy as np

from .errors import IoFailure, ParseError

MAGIC = b"SGM1"
_U32 = struct.Struct("<I")


def write_tensors(path, tensors: dict[str, np.ndarray]) -> None:
    """Write tensors to `path` in the order given (float32, little-endian)."""
    try:
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            for name, arr in tensors.items():
                data = np.ascontiguousarray(arr, dtype="<f4")
                encoded = name.encode("utf-8")
                fh.write(_U32.pack(len(encoded)))
                fh.write(encoded)
                fh.write(_U32.pack(data.ndim))
                for dim in data.shape:
                    fh.write(_U32.pack(dim))
                fh.write(data.tobytes())
    except OSError as exc:
        raise IoFailure(f"cannot write tensor archive {path}: {exc}") from exc


def _read_exact(fh, n: int, what: str) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise ParseError(f"truncated tensor archive while reading {what}")
    return data


def read_tensors(path) -> "OrderedDict[str, np.ndarray]":
    """Read every named tensor; preserves on-disk order."""
    try:
        fh = open(path, "rb")
    except OSError as exc:
        raise IoFailure(f"cannot read tensor archive {path}: {exc}") from exc
    with fh:
        if fh.read(len(MAGIC)) != MAGIC:
            raise ParseError(f"{path} is not a tensor archive (bad magic)")
        out: OrderedDict[str, np.ndarray] = OrderedDict()
        while True:
            head = fh.read(_U32.size)
            if not head:
                return out
            if len(head) != _U32.size:
                raise ParseError("truncated tensor archive while reading name length")
            (name_len,) = _U32.unpack(head)
            name = _read_exact(fh, name_len, "name").decode("utf-8")
            (rank,) = _U32.unpack(_read_exact(fh, _U32.size, "rank"))
            dims = [
                _U32.unpack(_read_exact(fh, _U32.size, "dims"))[0] for _ in range(rank)
            ]
            count = int(np.prod(dims, dtype=np.int64)) if dims else 1
            payload = _read_exact(fh, 4 * count, f"data of {name!r}")
            arr = np.frombuffer(payload, dtype="<f4").reshape(dims)
            out[name] = arr.astype(np.float32)
