"""Versioned binary checkpoints.

Byte layout (little-endian), documented for cross-implementation reads:

    offset  size  field
    0       4     magic b"PLCK"
    4       4     u32 format version (currently 1)
    8       32    sha256 over every byte from offset 40 to end of file
    40      8     u64 length of the header JSON
    48      -     header JSON (utf-8): {"schema_version": int,
                  "meta": {...}, "arrays": [{"name", "dtype", "shape",
                  "offset", "nbytes"}, ...]}; array offsets are relative
                  to the end of the header JSON
    then          raw array payload, concatenated C-order bytes

Loading verifies magic, checksum, and schema_version, in that order, and
reproduces arrays bit-exactly.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from ..errors import IntegrityError, SchemaError

MAGIC = b"PLCK"
FORMAT_VERSION = 1


def save_checkpoint(path, schema_version: int, meta: dict, arrays: dict[str, np.ndarray]) -> None:
    index = []
    payload = bytearray()
    for name, arr in arrays.items():
        raw = np.ascontiguousarray(arr).tobytes()
        index.append({
            "name": name,
            "dtype": str(arr.dtype),
            "shape": list(arr.shape),
            "offset": len(payload),
            "nbytes": len(raw),
        })
        payload.extend(raw)
    header = json.dumps(
        {"schema_version": schema_version, "meta": meta, "arrays": index},
        sort_keys=True,
    ).encode()

    body = len(header).to_bytes(8, "little") + header + bytes(payload)
    digest = hashlib.sha256(body).digest()
    Path(path).write_bytes(MAGIC + FORMAT_VERSION.to_bytes(4, "little") + digest + body)


def load_checkpoint(path, expected_schema: int) -> tuple[dict, dict[str, np.ndarray]]:
    blob = Path(path).read_bytes()
    if len(blob) < 48 or blob[:4] != MAGIC:
        raise SchemaError(f"{path}: not a checkpoint file")
    version = int.from_bytes(blob[4:8], "little")
    if version != FORMAT_VERSION:
        raise SchemaError(f"{path}: format version {version}, expected {FORMAT_VERSION}")
    digest = blob[8:40]
    body = blob[40:]
    if hashlib.sha256(body).digest() != digest:
        raise IntegrityError(f"{path}: checksum mismatch")

    header_len = int.from_bytes(body[:8], "little")
    header = json.loads(body[8:8 + header_len].decode())
    if header["schema_version"] != expected_schema:
        raise SchemaError(
            f"{path}: schema_version {header['schema_version']}, expected {expected_schema}"
        )

    payload = body[8 + header_len:]
    arrays = {}
    for entry in header["arrays"]:
        raw = payload[entry["offset"]:entry["offset"] + entry["nbytes"]]
        if len(raw) != entry["nbytes"]:
            raise IntegrityError(f"{path}: truncated payload for {entry['name']!r}")
        arrays[entry["name"]] = np.frombuffer(raw, dtype=np.dtype(entry["dtype"])).reshape(
            entry["shape"]
        ).copy()
    return header["meta"], arrays
