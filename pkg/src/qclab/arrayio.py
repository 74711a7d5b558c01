"""On-disk formats: QCLABARR binary arrays, JSON sidecars, CSV tables.

QCLABARR layout (little-endian)::

    8 bytes   magic  b"QCLABARR"
    u32       rank
    u64*rank  dims
    f64*prod  values, row-major

All writers go through a temp file + ``os.replace`` so readers never see a
partial file.
"""

from __future__ import annotations

import csv
import io
import json
import os
import struct
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError

MAGIC = b"QCLABARR"


def _atomic_write_bytes(path: Path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def encode_array(arr) -> bytes:
    a = np.ascontiguousarray(arr, dtype="<f8")
    head = MAGIC + struct.pack("<I", a.ndim) + struct.pack(f"<{a.ndim}Q", *a.shape)
    return head + a.tobytes(order="C")


def decode_array(data: bytes) -> np.ndarray:
    if data[:8] != MAGIC:
        raise ValidationError("not a QCLABARR file (bad magic)")
    (rank,) = struct.unpack_from("<I", data, 8)
    dims = struct.unpack_from(f"<{rank}Q", data, 12)
    off = 12 + 8 * rank
    count = int(np.prod(dims)) if rank else 1
    if len(data) - off != 8 * count:
        raise ValidationError(f"QCLABARR payload size mismatch: dims {dims}")
    return np.frombuffer(data, dtype="<f8", count=count, offset=off).reshape(dims).astype(np.float64)


def write_array(path, arr) -> None:
    _atomic_write_bytes(Path(path), encode_array(arr))


def read_array(path) -> np.ndarray:
    return decode_array(Path(path).read_bytes())


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return [_jsonable(x) for x in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(x) for x in obj]
    return obj


def write_json(path, obj) -> None:
    text = json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"
    _atomic_write_bytes(Path(path), text.encode())


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def fmt_float(x) -> str:
    """17 significant digits: parses back to the identical double."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt_float(v) for v in row])
    _atomic_write_bytes(Path(path), buf.getvalue().encode())


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_text(path, text: str) -> None:
    _atomic_write_bytes(Path(path), text.encode())
