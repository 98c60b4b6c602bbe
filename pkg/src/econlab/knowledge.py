"""Literature knowledge base.

Documents are chunked (abstract, then introduction), embedded through a
pluggable provider, and searched by exact full-scan cosine similarity with
optional year/venue filters. Every search writes an append-only manifest so
later stages can cite exactly what was retrieved. No approximate index: the
corpus is desk-scale and exactness is part of the contract.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Optional

import numpy as np

DEFAULT_DIMENSION = 768
DEFAULT_WINDOW = 1000
DEFAULT_OVERLAP = 200


class KnowledgeError(ValueError):
    pass


@dataclass(frozen=True)
class Document:
    doc_id: str
    title: str
    venue: str
    year: int
    abstract: str
    introduction: str = ""

    def __post_init__(self):
        if not (1000 <= int(self.year) <= 9999):
            raise KnowledgeError(f"doc {self.doc_id}: year {self.year!r} is not a 4-digit year")

    @classmethod
    def from_dict(cls, raw: dict) -> "Document":
        return cls(
            doc_id=str(raw["doc_id"]),
            title=raw.get("title", ""),
            venue=raw.get("venue", ""),
            year=int(raw["year"]),
            abstract=raw.get("abstract", ""),
            introduction=raw.get("introduction", ""),
        )


@dataclass
class Chunk:
    doc_id: str
    seq: int
    text: str


@dataclass
class RetrievalManifest:
    manifest_id: str
    session_id: str
    query: str
    filters: dict[str, Any]
    timestamp: float
    hits: list[tuple[str, int, float]]  # (doc_id, seq, cosine score)
    short: bool = False  # fewer eligible chunks than requested k

    def to_dict(self) -> dict[str, Any]:
        return {
            "manifest_id": self.manifest_id,
            "session_id": self.session_id,
            "query": self.query,
            "filters": self.filters,
            "timestamp": self.timestamp,
            "hits": [[d, s, sc] for d, s, sc in self.hits],
            "short": self.short,
        }


@dataclass
class IngestReport:
    documents: int
    chunks: int
    embedding_calls: int


def chunk_text(text: str, window: int = DEFAULT_WINDOW, overlap: int = DEFAULT_OVERLAP) -> list[str]:
    """Slice text into windows overlapping by exactly `overlap` chars."""
    if overlap < 0 or window <= overlap:
        raise KnowledgeError(f"window ({window}) must exceed overlap ({overlap})")
    if not text:
        return []
    chunks = []
    start = 0
    while True:
        chunks.append(text[start : start + window])
        if start + window >= len(text):
            break
        start += window - overlap
    return chunks


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise KnowledgeError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise KnowledgeError("cosine undefined for zero-norm vector")
    return float(np.dot(u, v) / (nu * nv))


class HashEmbedder:
    """Deterministic pseudo-embedder: sha256(text) seeds a unit-norm draw.

    Stands in for a real citation-informed model so the pipeline runs
    offline; anything with an `embed(text) -> vector` method and a
    `dimension` attribute plugs in behind the same interface.
    """

    def __init__(self, dimension: int = DEFAULT_DIMENSION):
        self.dimension = dimension

    def embed(self, text: str) -> np.ndarray:
        seed = int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big")
        vec = np.random.default_rng(seed).standard_normal(self.dimension)
        return (vec / np.linalg.norm(vec)).astype(np.float32)


class KnowledgeIndex:
    """Exact-retrieval chunk index with per-session manifest logs."""

    def __init__(
        self,
        embedder=None,
        manifest_dir: Optional[str] = None,
        window: int = DEFAULT_WINDOW,
        overlap: int = DEFAULT_OVERLAP,
        clock: Callable[[], float] = time.time,
    ):
        self.embedder = embedder if embedder is not None else HashEmbedder()
        self.dimension = self.embedder.dimension
        self.manifest_dir = manifest_dir
        self.window = window
        self.overlap = overlap
        self.clock = clock
        self.documents: dict[str, dict[str, Any]] = {}
        self.chunks: list[Chunk] = []
        self.matrix: Optional[np.ndarray] = None  # (n_chunks, dimension) float32
        self.manifests: dict[str, RetrievalManifest] = {}
        self._manifest_seq = 0
        self._lock = threading.Lock()

    # -- ingestion ---------------------------------------------------------

    def ingest(self, documents: Iterable[Document]) -> IngestReport:
        docs = list(documents)
        seen: set[str] = set()
        for doc in docs:
            if doc.doc_id in self.documents or doc.doc_id in seen:
                raise KnowledgeError(f"duplicate doc_id {doc.doc_id!r}")
            if not doc.abstract.strip():
                raise KnowledgeError(f"doc {doc.doc_id!r}: empty abstract")
            seen.add(doc.doc_id)

        with self._lock:
            new_chunks: list[Chunk] = []
            vectors: list[np.ndarray] = []
            calls = 0
            for doc in docs:
                seq = 0
                parts = chunk_text(doc.abstract, self.window, self.overlap)
                if doc.introduction:
                    parts += chunk_text(doc.introduction, self.window, self.overlap)
                for text in parts:
                    vec = np.asarray(self.embedder.embed(text), dtype=np.float32)
                    calls += 1
                    if vec.shape != (self.dimension,):
                        raise KnowledgeError(
                            f"embedding dimension {vec.shape} != ({self.dimension},) "
                            f"for doc {doc.doc_id!r}"
                        )
                    new_chunks.append(Chunk(doc.doc_id, seq, text))
                    vectors.append(vec)
                    seq += 1
                self.documents[doc.doc_id] = {
                    "doc_id": doc.doc_id,
                    "title": doc.title,
                    "venue": doc.venue,
                    "year": int(doc.year),
                }
            self.chunks.extend(new_chunks)
            if vectors:
                block = np.stack(vectors)
                self.matrix = (
                    block if self.matrix is None else np.concatenate([self.matrix, block])
                )
            return IngestReport(documents=len(docs), chunks=len(new_chunks), embedding_calls=calls)

    # -- retrieval ---------------------------------------------------------

    def _eligible(self, filters: dict[str, Any]) -> list[int]:
        year_range = filters.get("year_range")
        venues = filters.get("venues")
        if venues is not None:
            venues = set(venues)
        rows = []
        for i, chunk in enumerate(self.chunks):
            meta = self.documents[chunk.doc_id]
            if year_range is not None and not (year_range[0] <= meta["year"] <= year_range[1]):
                continue
            if venues is not None and meta["venue"] not in venues:
                continue
            rows.append(i)
        return rows

    def search(
        self,
        query: str,
        k: int,
        filters: Optional[dict[str, Any]] = None,
        session_id: str = "adhoc",
    ) -> RetrievalManifest:
        if k < 1:
            raise KnowledgeError("k must be >= 1")
        if not self.chunks:
            raise KnowledgeError("search on empty index")
        filters = dict(filters or {})
        qvec = np.asarray(self.embedder.embed(query), dtype=np.float64)
        rows = self._eligible(filters)
        scored = []
        for i in rows:
            score = cosine(np.asarray(self.matrix[i], dtype=np.float64), qvec)
            chunk = self.chunks[i]
            scored.append((chunk.doc_id, chunk.seq, score))
        scored.sort(key=lambda h: (-h[2], h[0], h[1]))
        hits = scored[:k]

        with self._lock:
            self._manifest_seq += 1
            manifest = RetrievalManifest(
                manifest_id=f"m-{self._manifest_seq}",
                session_id=session_id,
                query=query,
                filters=filters,
                timestamp=self.clock(),
                hits=hits,
                short=len(hits) < k,
            )
            self.manifests[manifest.manifest_id] = manifest
            self._persist_manifest(manifest)
        return manifest

    def get_chunk(self, doc_id: str, seq: int) -> Chunk:
        for chunk in self.chunks:
            if chunk.doc_id == doc_id and chunk.seq == seq:
                return chunk
        raise KnowledgeError(f"no chunk {doc_id!r}#{seq}")

    def has_manifest(self, manifest_id: str) -> bool:
        return manifest_id in self.manifests

    def _persist_manifest(self, manifest: RetrievalManifest) -> None:
        if self.manifest_dir is None:
            return
        os.makedirs(self.manifest_dir, exist_ok=True)
        path = os.path.join(self.manifest_dir, f"{manifest.session_id}.jsonl")
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(manifest.to_dict(), sort_keys=True) + "\n")

    # -- persistence -------------------------------------------------------

    def save(self, directory: str) -> None:
        os.makedirs(directory, exist_ok=True)
        meta = {
            "dimension": self.dimension,
            "rows": len(self.chunks),
            "window": self.window,
            "overlap": self.overlap,
            "documents": [self.documents[d] for d in sorted(self.documents)],
            "chunks": [
                {"doc_id": c.doc_id, "seq": c.seq, "text": c.text} for c in self.chunks
            ],
        }
        with open(os.path.join(directory, "metadata.json"), "w", encoding="utf-8") as fh:
            json.dump(meta, fh, sort_keys=True)
        matrix = self.matrix if self.matrix is not None else np.zeros((0, self.dimension), np.float32)
        with open(os.path.join(directory, "embeddings.f32"), "wb") as fh:
            fh.write(np.ascontiguousarray(matrix, dtype="<f4").tobytes())

    @classmethod
    def load(cls, directory: str, embedder=None, **kwargs) -> "KnowledgeIndex":
        with open(os.path.join(directory, "metadata.json"), encoding="utf-8") as fh:
            meta = json.load(fh)
        index = cls(
            embedder=embedder if embedder is not None else HashEmbedder(meta["dimension"]),
            window=meta.get("window", DEFAULT_WINDOW),
            overlap=meta.get("overlap", DEFAULT_OVERLAP),
            **kwargs,
        )
        if index.dimension != meta["dimension"]:
            raise KnowledgeError(
                f"embedder dimension {index.dimension} != stored {meta['dimension']}"
            )
        index.documents = {d["doc_id"]: d for d in meta["documents"]}
        index.chunks = [Chunk(c["doc_id"], c["seq"], c["text"]) for c in meta["chunks"]]
        raw = open(os.path.join(directory, "embeddings.f32"), "rb").read()
        matrix = np.frombuffer(raw, dtype="<f4").reshape(meta["rows"], meta["dimension"])
        index.matrix = matrix.copy()
        return index


def load_corpus(path: str) -> list[Document]:
    """Read a JSON-lines corpus file, one document object per line."""
    docs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise KnowledgeError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
            try:
                docs.append(Document.from_dict(raw))
            except (KeyError, TypeError, ValueError) as exc:
                raise KnowledgeError(f"{path}:{lineno}: bad document ({exc})") from exc
    return docs
