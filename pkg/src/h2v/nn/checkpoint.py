"""Binary checkpoint format for named weight tensors.

Layout (little endian):
  magic   4 bytes  b"H2VW"
  version u32      currently 1
  count   u32      number of tensors
  per tensor:
    name_len u16, name utf-8 bytes
    ndim     u8,  dims ndim x u32
    data     float32 values, C order
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import DataError

MAGIC = b"H2VW"
VERSION = 1


def save_weights(state: dict[str, np.ndarray], path: str | Path) -> None:
    parts = [MAGIC, struct.pack("<II", VERSION, len(state))]
    for name, arr in state.items():
        a = np.ascontiguousarray(arr, dtype=np.float32)
        nb = name.encode("utf-8")
        parts.append(struct.pack("<H", len(nb)))
        parts.append(nb)
        parts.append(struct.pack("<B", a.ndim))
        parts.append(struct.pack(f"<{a.ndim}I", *a.shape))
        parts.append(a.tobytes())
    Path(path).write_bytes(b"".join(parts))


def load_weights(path: str | Path) -> dict[str, np.ndarray]:
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as e:
        raise DataError(f"cannot read checkpoint {path}: {e}") from e

    def take(n: int, what: str) -> bytes:
        nonlocal off
        if off + n > len(blob):
            raise DataError(f"{path}: truncated checkpoint while reading {what}")
        chunk = blob[off:off + n]
        off += n
        return chunk

    off = 0
    if take(4, "magic") != MAGIC:
        raise DataError(f"{path}: not a weight checkpoint (bad magic)")
    version, count = struct.unpack("<II", take(8, "header"))
    if version != VERSION:
        raise DataError(f"{path}: unsupported checkpoint version {version}")
    state: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack("<H", take(2, "name length"))
        name = take(name_len, "name").decode("utf-8")
        (ndim,) = struct.unpack("<B", take(1, "ndim"))
        dims = struct.unpack(f"<{ndim}I", take(4 * ndim, "dims")) if ndim else ()
        n_vals = int(np.prod(dims)) if ndim else 1
        raw = take(4 * n_vals, f"tensor {name!r}")
        arr = np.frombuffer(raw, dtype="<f4").reshape(dims).astype(np.float64)
        if name in state:
            raise DataError(f"{path}: duplicate tensor name {name!r}")
        state[name] = arr
    if off != len(blob):
        raise DataError(f"{path}: {len(blob) - off} trailing bytes after tensors")
    return state
