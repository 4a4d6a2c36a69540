"""Binary array artifacts referenced from the manifest.

Flat little-endian arrays behind a 16-byte header: 4-byte magic "DKAR",
uint32 dtype code, uint32 T (rows), uint32 D (columns, 0 for 1-D).
Layout documented in docs/artifacts.md.
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"DKAR"
_HEADER = struct.Struct("<4sIII")

_CODE_TO_DTYPE = {1: "<f4", 2: "<f8", 3: "<i4", 4: "<u4"}
_KIND_TO_CODE = {("f", 4): 1, ("f", 8): 2, ("i", 4): 3, ("u", 4): 4}


class ArtifactError(ValueError):
    pass


def write_array(path, array) -> None:
    arr = np.asarray(array)
    if arr.ndim not in (1, 2):
        raise ArtifactError(f"only 1-D and 2-D arrays are supported, got ndim={arr.ndim}")
    code = _KIND_TO_CODE.get((arr.dtype.kind, arr.dtype.itemsize))
    if code is None:
        raise ArtifactError(f"unsupported dtype {arr.dtype}")
    rows = arr.shape[0]
    cols = arr.shape[1] if arr.ndim == 2 else 0
    data = np.ascontiguousarray(arr, dtype=_CODE_TO_DTYPE[code])
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, code, rows, cols))
        fh.write(data.tobytes())


def read_array(path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise ArtifactError(f"{path}: truncated header")
        magic, code, rows, cols = _HEADER.unpack(header)
        if magic != MAGIC:
            raise ArtifactError(f"{path}: bad magic {magic!r}")
        if code not in _CODE_TO_DTYPE:
            raise ArtifactError(f"{path}: unknown dtype code {code}")
        dtype = np.dtype(_CODE_TO_DTYPE[code])
        count = rows * (cols if cols else 1)
        data = fh.read()
    if len(data) != count * dtype.itemsize:
        raise ArtifactError(
            f"{path}: payload holds {len(data)} bytes, expected {count * dtype.itemsize}"
        )
    arr = np.frombuffer(data, dtype=dtype).copy()
    return arr.reshape(rows, cols) if cols else arr
