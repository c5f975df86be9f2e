"""Serialization helpers: PNG bytes, checksums, and deterministic JSON.

Images travel as exact byte strings so checksums computed in memory match
the files on disk.  Manifest JSON is emitted by a small recursive writer
that prints every float with 17 significant digits, enough for bit-exact
round-trips through standard parsers.
"""

from __future__ import annotations

import hashlib
import json
import math
from io import BytesIO

import numpy as np
from PIL import Image

CHECKSUM_PREFIX = "sha256:"


def encode_png(image: np.ndarray) -> bytes:
    """Encode an 8-bit grayscale image to PNG bytes."""
    if image.dtype != np.uint8 or image.ndim != 2:
        raise ValueError("expected a 2D uint8 image")
    buf = BytesIO()
    Image.fromarray(image, mode="L").save(buf, format="PNG")
    return buf.getvalue()


def decode_png(data: bytes) -> np.ndarray:
    with Image.open(BytesIO(data)) as img:
        return np.asarray(img.convert("L"), dtype=np.uint8)


def write_png(path, image: np.ndarray) -> bytes:
    """Write the PNG and return the exact bytes written (for checksumming)."""
    data = encode_png(image)
    with open(path, "wb") as fh:
        fh.write(data)
    return data


def read_png(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return decode_png(fh.read())


def checksum_bytes(data: bytes) -> str:
    return CHECKSUM_PREFIX + hashlib.sha256(data).hexdigest()


def checksum_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return CHECKSUM_PREFIX + digest.hexdigest()


def _emit(value, parts: list[str]) -> None:
    if value is None:
        parts.append("null")
    elif value is True:
        parts.append("true")
    elif value is False:
        parts.append("false")
    elif isinstance(value, int):
        parts.append(str(value))
    elif isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError("non-finite floats are not representable in JSON")
        parts.append(format(value, ".17g"))
    elif isinstance(value, str):
        parts.append(json.dumps(value, ensure_ascii=False))
    elif isinstance(value, (list, tuple)):
        parts.append("[")
        for i, item in enumerate(value):
            if i:
                parts.append(",")
            _emit(item, parts)
        parts.append("]")
    elif isinstance(value, dict):
        parts.append("{")
        for i, (key, item) in enumerate(value.items()):
            if not isinstance(key, str):
                raise TypeError("JSON object keys must be strings")
            if i:
                parts.append(",")
            parts.append(json.dumps(key, ensure_ascii=False))
            parts.append(":")
            _emit(item, parts)
        parts.append("}")
    else:
        raise TypeError(f"cannot serialize {type(value).__name__} to JSON")


def dumps_json17(value) -> str:
    """Deterministic JSON text with 17-significant-digit floats.

    Key order follows dict insertion order, which callers keep deterministic;
    no whitespace is inserted so equal values give byte-equal documents.
    """
    parts: list[str] = []
    _emit(value, parts)
    return "".join(parts)


def write_json17(path, value) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_json17(value))
        fh.write("\n")


def read_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
