"""Shared binary container used by the graph/model/embedding/fusion files.

Layout: 7-byte magic + '\\n', u32 header length, UTF-8 JSON header,
raw payload, u32 CRC32 of the payload. All integers little-endian.
"""

import json
import struct
import zlib


class FormatError(ValueError):
    """Raised when a binary artifact file is malformed or corrupted."""


GRAPH_MAGIC = b"VICTRG1"
MODEL_MAGIC = b"VICTRM1"
EMBED_MAGIC = b"VICTRE1"
FUSED_MAGIC = b"VICTRF1"

VERSION = 1


def write_container(path, magic: bytes, header: dict, payload: bytes) -> None:
    header = dict(header)
    header["version"] = VERSION
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as f:
        f.write(magic + b"\n")
        f.write(struct.pack("<I", len(head)))
        f.write(head)
        f.write(payload)
        f.write(struct.pack("<I", zlib.crc32(payload) & 0xFFFFFFFF))


def read_container(path, magic: bytes) -> tuple[dict, bytes]:
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < len(magic) + 1 + 8:
        raise FormatError(f"{path}: truncated file")
    if blob[: len(magic)] != magic:
        raise FormatError(
            f"{path}: wrong magic {blob[:len(magic)]!r}, expected {magic!r}"
        )
    off = len(magic) + 1
    (hlen,) = struct.unpack_from("<I", blob, off)
    off += 4
    if off + hlen + 4 > len(blob):
        raise FormatError(f"{path}: truncated header")
    try:
        header = json.loads(blob[off : off + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FormatError(f"{path}: bad header ({e})") from e
    if header.get("version") != VERSION:
        raise FormatError(
            f"{path}: unsupported version {header.get('version')}, expected {VERSION}"
        )
    off += hlen
    payload = blob[off:-4]
    (crc,) = struct.unpack_from("<I", blob, len(blob) - 4)
    if zlib.crc32(payload) & 0xFFFFFFFF != crc:
        raise FormatError(f"{path}: checksum failure")
    return header, payload
