"""Document embedding vectors and cosine distances.

Vectors are ingested, not trained. :func:`embed_fallback` is a seeded
bag-of-words signed random projection used so the test suite and the demo
pipeline need no language model.
"""
from __future__ import annotations

import hashlib
import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

_TOKEN = re.compile(r"[^0-9a-z]+")


class EmbeddingError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DocVector:
    doc_id: str
    values: np.ndarray

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    @classmethod
    def normalized(cls, doc_id: str, values) -> "DocVector":
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise EmbeddingError(f"{doc_id}: vector must be 1-d and nonempty")
        if not np.all(np.isfinite(arr)):
            raise EmbeddingError(f"{doc_id}: non-finite vector entry")
        norm = math.sqrt(math.fsum(arr * arr))
        if norm == 0.0:
            raise EmbeddingError(f"{doc_id}: zero vector cannot be normalized")
        if abs(norm - 1.0) > 4 * np.finfo(np.float64).eps:
            # already-unit input is kept bit-for-bit so save/load round trips exactly
            arr = arr / norm
        else:
            arr = arr.copy()
        arr.setflags(write=False)
        return cls(doc_id, arr)


def cosine_distance(u: DocVector, v: DocVector) -> float:
    """``1 - <u, v>`` for unit vectors.

    The inner product is an exactly rounded sum of elementwise products, so
    the result does not depend on argument order or BLAS blocking.
    """
    if u.dim != v.dim:
        raise EmbeddingError(f"dimension mismatch: {u.dim} vs {v.dim}")
    if u.values is v.values or np.array_equal(u.values, v.values):
        return 0.0
    d = 1.0 - math.fsum(u.values * v.values)
    return min(2.0, max(0.0, d))


@dataclass
class VectorStore:
    dim: int
    vectors: dict[str, DocVector] = field(default_factory=dict)

    def add(self, vec: DocVector) -> None:
        if vec.dim != self.dim:
            raise EmbeddingError(f"{vec.doc_id}: dim {vec.dim} != store dim {self.dim}")
        if vec.doc_id in self.vectors:
            raise EmbeddingError(f"duplicate vector for {vec.doc_id}")
        self.vectors[vec.doc_id] = vec

    def get(self, doc_id: str) -> DocVector | None:
        return self.vectors.get(doc_id)

    def __contains__(self, doc_id: object) -> bool:
        return doc_id in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)

    def __iter__(self) -> Iterator[DocVector]:
        return iter(self.vectors.values())

    def coverage(self, doc_ids: Iterable[str]) -> tuple[int, int]:
        """(with vector, without vector) over ``doc_ids``."""
        ids = list(doc_ids)
        have = sum(1 for d in ids if d in self.vectors)
        return have, len(ids) - have


def load_vectors(path: str | Path) -> VectorStore:
    """Read ``{"doc_id": ..., "values": [...]}`` lines, normalizing each vector."""
    store: VectorStore | None = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                doc_id, values = obj["doc_id"], obj["values"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise EmbeddingError(f"{path}:{lineno}: bad vector record ({exc})") from None
            try:
                vec = DocVector.normalized(doc_id, values)
                if store is None:
                    store = VectorStore(vec.dim)
                store.add(vec)
            except EmbeddingError as exc:
                raise EmbeddingError(f"{path}:{lineno}: {exc}") from None
    return store if store is not None else VectorStore(0)


def save_vectors(store: VectorStore, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc_id in sorted(store.vectors):
            vals = store.vectors[doc_id].values.tolist()
            fh.write(json.dumps({"doc_id": doc_id, "values": vals}) + "\n")


def tokenize(text: str) -> list[str]:
    return [t for t in _TOKEN.split(text.lower()) if t]


def _sign_pattern(token: str, dim: int, seed: int) -> np.ndarray:
    nbytes = -(-dim // 8)
    chunks = []
    block = 0
    while sum(len(c) for c in chunks) < nbytes:
        h = hashlib.blake2b(f"{seed}\x1f{block}\x1f{token}".encode(), digest_size=64)
        chunks.append(h.digest())
        block += 1
    bits = np.unpackbits(np.frombuffer(b"".join(chunks)[:nbytes], dtype=np.uint8))[:dim]
    return bits.astype(np.float64) * 2.0 - 1.0


def embed_fallback(text: str, dim: int = 256, seed: int = 0, doc_id: str = "") -> DocVector:
    """Deterministic signed random projection of the token counts of ``text``."""
    if dim < 8:
        raise EmbeddingError(f"dim must be >= 8, got {dim}")
    counts = Counter(tokenize(text))
    if not counts:
        raise EmbeddingError(f"{doc_id or 'text'}: no tokens to embed")
    acc = np.zeros(dim, dtype=np.float64)
    for tok in sorted(counts):
        acc += counts[tok] * _sign_pattern(tok, dim, seed)
    if not acc.any():
        # opposing patterns cancelled exactly; fall back to the first token's pattern
        acc = _sign_pattern(min(counts), dim, seed)
    return DocVector.normalized(doc_id, acc)


def embed_texts(texts: Iterable[tuple[str, str]], dim: int = 256, seed: int = 0) -> VectorStore:
    """Fallback-embed ``(doc_id, text)`` pairs; docs with no tokens are skipped."""
    store = VectorStore(dim)
    for doc_id, text in texts:
        try:
            store.add(embed_fallback(text, dim, seed, doc_id))
        except EmbeddingError:
            continue
    return store
