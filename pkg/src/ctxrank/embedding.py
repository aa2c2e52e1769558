"""Dense vector store, EMB1 file format, hash-embedding fallback and cosine.

EMB1 layout (little-endian throughout): magic ``EMB1``, u32 dim, u32 record
count, then per record a u16 id byte length, the UTF-8 id bytes, and dim
float32 components.

The hash fallback stands in for a pre-trained sentence encoder: every token
maps to a fixed pseudo-random vector with components in {-1, +1} scaled by
1/sqrt(dim), token vectors are average pooled and the result L2-normalized.
It is fully deterministic in (text, dim, seed).
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .lexical import tokenize

MAGIC = b"EMB1"

DEFAULT_DIM = 64
DEFAULT_SEED = 13


@dataclass
class EmbeddingStore:
    dim: int
    entries: dict[str, np.ndarray] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)

    def get(self, key: str) -> np.ndarray | None:
        return self.entries.get(key)


def save_embeddings(store: EmbeddingStore, path) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", store.dim, len(store.entries)))
        for key, vec in store.entries.items():
            raw = key.encode("utf-8")
            if len(raw) > 0xFFFF:
                raise DataError(f"id too long for EMB1 record: {key[:40]!r}...")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(np.asarray(vec, dtype="<f4").tobytes())


def load_embeddings(path) -> EmbeddingStore:
    """Load an EMB1 file, validating magic, counts and finiteness."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MAGIC:
        raise DataError(f"unrecognized format: bad magic in {path}")
    if len(data) < 12:
        raise DataError(f"truncated file: {path}")
    dim, count = struct.unpack_from("<II", data, 4)
    if dim == 0:
        raise DataError(f"embedding dim 0 in header of {path}")
    entries: dict[str, np.ndarray] = {}
    offset = 12
    vec_bytes = 4 * dim
    for _ in range(count):
        if offset + 2 > len(data):
            raise DataError(f"truncated file: {count} records declared, {len(entries)} present")
        (id_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        if offset + id_len + vec_bytes > len(data):
            raise DataError(f"truncated file: {count} records declared, {len(entries)} present")
        key = data[offset : offset + id_len].decode("utf-8")
        offset += id_len
        vec = np.frombuffer(data, dtype="<f4", count=dim, offset=offset).copy()
        offset += vec_bytes
        if key in entries:
            raise DataError(f"duplicate id in embedding file: {key!r}")
        if not np.all(np.isfinite(vec)):
            raise DataError(f"non-finite components in vector for id {key!r}")
        entries[key] = vec
    if offset != len(data):
        raise DataError(f"{len(data) - offset} trailing bytes after {count} records")
    return EmbeddingStore(dim=dim, entries=entries)


def _token_vector(token: str, dim: int, seed: int) -> np.ndarray:
    """Deterministic unit vector for one token, components +-1/sqrt(dim)."""
    key = int(seed).to_bytes(8, "little", signed=True)
    bits = bytearray()
    block = 0
    while len(bits) * 8 < dim:
        h = hashlib.blake2b(token.encode("utf-8"), digest_size=64, key=key, salt=block.to_bytes(8, "little"))
        bits.extend(h.digest())
        block += 1
    unpacked = np.unpackbits(np.frombuffer(bytes(bits), dtype=np.uint8))[:dim]
    return (unpacked.astype(np.float64) * 2.0 - 1.0) / np.sqrt(dim)


_TOKEN_CACHE: dict[tuple[str, int, int], np.ndarray] = {}


def hash_embed(text: str, dim: int = DEFAULT_DIM, seed: int = DEFAULT_SEED) -> np.ndarray:
    """Deterministic stand-in for a sentence encoder.

    Empty or token-free text yields the zero vector; anything else is
    average-pooled token vectors, L2-normalized.
    """
    if dim < 2:
        raise ValueError(f"dim must be >= 2, got {dim}")
    tokens = tokenize(text)
    if not tokens:
        return np.zeros(dim)
    acc = np.zeros(dim)
    for token in tokens:
        cache_key = (token, dim, seed)
        vec = _TOKEN_CACHE.get(cache_key)
        if vec is None:
            vec = _token_vector(token, dim, seed)
            vec.setflags(write=False)
            _TOKEN_CACHE[cache_key] = vec
        acc += vec
    acc /= len(tokens)
    norm = np.linalg.norm(acc)
    if norm == 0.0:
        return acc
    return acc / norm


def avg_pool(vectors) -> np.ndarray:
    """Component-wise arithmetic mean of equally sized vectors."""
    vecs = [np.asarray(v, dtype=np.float64) for v in vectors]
    if not vecs:
        raise ValueError("avg_pool of an empty list")
    dim = vecs[0].shape
    for v in vecs[1:]:
        if v.shape != dim:
            raise ValueError(f"ragged dims in avg_pool: {dim} vs {v.shape}")
    return np.mean(vecs, axis=0)


def cosine(v1, v2) -> float:
    """Cosine similarity in [-1, 1]; zero-norm inputs score 0."""
    a = np.asarray(v1, dtype=np.float64)
    b = np.asarray(v2, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dim mismatch in cosine: {a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    value = float(np.dot(a, b) / (na * nb))
    # guard against rounding just past the bounds
    return max(-1.0, min(1.0, value))
