"""Binary checkpoint format shared by the embedder and the reranker.

Layout: magic b"CWMS", one version byte, a u32 little-endian length prefix,
a canonical JSON header (dim, buckets, stage, seed, component kind,
trained_examples, and for rerankers the embedder reference), then the weight
matrix as row-major little-endian float32.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .corpus import StageTag

MAGIC = b"CWMS"
VERSION = 1


class CheckpointFormatError(ValueError):
    """Unreadable or corrupt checkpoint file."""


def _header_dict(ckpt) -> dict:
    h = {
        "component": ckpt.component,
        "dim": int(ckpt.dim),
        "buckets": int(ckpt.buckets),
        "stage": int(ckpt.stage),
        "seed": int(ckpt.seed),
        "trained_examples": int(ckpt.trained_examples),
    }
    if ckpt.component == "reranker":
        h["embedder_ref"] = ckpt.embedder_ref
    return h


def _encode(ckpt) -> bytes:
    header = json.dumps(_header_dict(ckpt), sort_keys=True, separators=(",", ":"))
    payload = np.ascontiguousarray(ckpt.weights, dtype="<f4").tobytes()
    return b"".join(
        [MAGIC, bytes([VERSION]), struct.pack("<I", len(header)), header.encode(), payload]
    )


def checkpoint_id(ckpt) -> str:
    """Content hash of the serialized checkpoint (16 hex chars)."""
    h = hashlib.blake2b(digest_size=8)
    h.update(json.dumps(_header_dict(ckpt), sort_keys=True, separators=(",", ":")).encode())
    h.update(np.ascontiguousarray(ckpt.weights, dtype="<f4").tobytes())
    return h.hexdigest()


def save_checkpoint(ckpt, path: str | Path) -> None:
    Path(path).write_bytes(_encode(ckpt))


def load_checkpoint(path: str | Path):
    data = Path(path).read_bytes()
    if len(data) < 9:
        raise CheckpointFormatError(f"{path}: truncated file ({len(data)} bytes)")
    if data[:4] != MAGIC:
        raise CheckpointFormatError(
            f"{path}: bad magic: expected {MAGIC!r}, found {data[:4]!r}"
        )
    if data[4] != VERSION:
        raise CheckpointFormatError(
            f"{path}: bad version: expected {VERSION}, found {data[4]}"
        )
    (header_len,) = struct.unpack_from("<I", data, 5)
    header_end = 9 + header_len
    if len(data) < header_end:
        raise CheckpointFormatError(f"{path}: truncated header")
    try:
        header = json.loads(data[9:header_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointFormatError(f"{path}: unreadable header: {exc}") from exc
    dim, buckets = int(header["dim"]), int(header["buckets"])
    expected = dim * buckets * 4
    payload = data[header_end:]
    if len(payload) != expected:
        raise CheckpointFormatError(
            f"{path}: payload size mismatch: expected {expected} bytes, "
            f"found {len(payload)}"
        )
    weights = np.frombuffer(payload, dtype="<f4").astype(np.float32)
    component = header.get("component")
    if component == "embedder":
        from .encoder import EmbedderCheckpoint

        return EmbedderCheckpoint(
            dim=dim,
            buckets=buckets,
            weights=weights.reshape(dim, buckets),
            stage=StageTag(int(header["stage"])),
            seed=int(header["seed"]),
            trained_examples=int(header["trained_examples"]),
        )
    if component == "reranker":
        from .reranker import RerankerCheckpoint

        return RerankerCheckpoint(
            weights=weights.reshape(-1),
            stage=StageTag(int(header["stage"])),
            seed=int(header["seed"]),
            trained_examples=int(header["trained_examples"]),
            embedder_ref=str(header.get("embedder_ref", "")),
        )
    raise CheckpointFormatError(f"{path}: unknown component kind {component!r}")
