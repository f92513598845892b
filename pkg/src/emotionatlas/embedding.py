"""Embedding providers: a batched remote API client and an offline hasher.

The offline embedder is a seeded bag-of-words feature hasher. It exists so
the whole pipeline runs deterministically without network access or keys;
it carries no semantic similarity structure beyond shared vocabulary, and
word order never affects the vector. Use it for tests, demos, and
reproducibility checks, not for analyses whose conclusions depend on
embedding quality.
"""

from __future__ import annotations

import hashlib
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import httpx
import numpy as np

from .cache import VECTOR_DIM, EmbeddingCache
from .corpus import TextChunk
from .lexicon import tokenize

log = logging.getLogger(__name__)

EMBEDDING_DIM = VECTOR_DIM  # 1536
DEFAULT_BATCH_SIZE = 2000
POSITIONS_PER_WORD = 8

PROVIDERS = ("remote", "offline")


class EmbeddingError(RuntimeError):
    """Raised for provider failures after retries are exhausted."""


class ConfigError(ValueError):
    """Raised for invalid embedding configuration, e.g. a missing API key."""


@dataclass(frozen=True)
class EmbeddingVector:
    values: np.ndarray
    chunk_ref: tuple[str, int]

    def __post_init__(self) -> None:
        if self.values.shape != (EMBEDDING_DIM,):
            raise EmbeddingError(
                f"expected {EMBEDDING_DIM}-dimensional vector, got shape {self.values.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise EmbeddingError(f"non-finite embedding for chunk {self.chunk_ref}")


@dataclass(frozen=True)
class RemoteConfig:
    endpoint: str = "https://api.openai.com/v1/embeddings"
    model: str = "text-embedding-ada-002"
    api_key_env: str = "OPENAI_API_KEY"
    batch_size: int = DEFAULT_BATCH_SIZE
    timeout: float = 60.0
    max_retries: int = 5
    backoff_base: float = 1.0
    backoff_cap: float = 30.0
    retry_budget_seconds: float = 300.0
    parallel_requests: int = 4


@dataclass(frozen=True)
class EmbeddingConfig:
    seed: int = 42
    cache_path: str | Path | None = None
    remote: RemoteConfig = field(default_factory=RemoteConfig)


@lru_cache(maxsize=131072)
def word_feature_positions(word: str, seed: int) -> tuple[tuple[int, int], ...]:
    """The 8 (position, sign) pairs a word contributes to the feature map.

    Positions come from a keyed BLAKE2b digest, so they are stable across
    processes and platforms for a given seed.
    """
    key = seed.to_bytes(8, "little", signed=True)
    digest = hashlib.blake2b(
        word.encode("utf-8"), digest_size=5 * POSITIONS_PER_WORD, key=key
    ).digest()
    pairs = []
    for j in range(POSITIONS_PER_WORD):
        chunk = digest[5 * j : 5 * j + 5]
        pos = int.from_bytes(chunk[:4], "little") % EMBEDDING_DIM
        sign = 1 if chunk[4] & 1 else -1
        pairs.append((pos, sign))
    return tuple(pairs)


def offline_embed(text: str, seed: int = 42, normalize: bool = True) -> np.ndarray:
    """Deterministic bag-of-words vector; empty text maps to the zero vector."""
    vec = np.zeros(EMBEDDING_DIM, dtype=float)
    for tok in tokenize(text):
        for pos, sign in word_feature_positions(tok, seed):
            vec[pos] += sign
    if normalize:
        norm = float(np.linalg.norm(vec))
        if norm > 0.0:
            vec /= norm
    return vec


class RemoteEmbeddingClient:
    """Batched client for an OpenAI-style JSON embeddings endpoint.

    Retries transport errors, 429 and 5xx responses with exponential
    backoff, bounded both by attempt count and a wall-clock budget. Counts
    every request it issues in ``request_count``.
    """

    def __init__(self, cfg: RemoteConfig, http_client: httpx.Client | None = None):
        api_key = os.environ.get(cfg.api_key_env)
        if not api_key:
            raise ConfigError(
                f"remote provider needs an API key in environment variable {cfg.api_key_env!r}"
            )
        self.cfg = cfg
        self.request_count = 0
        self._client = http_client or httpx.Client(timeout=cfg.timeout)
        self._headers = {"Authorization": f"Bearer {api_key}"}

    def embed_batch(self, texts: list[str]) -> list[np.ndarray]:
        if not texts:
            return []
        if len(texts) > self.cfg.batch_size:
            raise EmbeddingError(
                f"batch of {len(texts)} exceeds batch_size {self.cfg.batch_size}"
            )
        if any(not t for t in texts):
            raise EmbeddingError("batch contains an empty string")
        payload = {"model": self.cfg.model, "input": texts}
        deadline = time.monotonic() + self.cfg.retry_budget_seconds
        attempt = 0
        backoffs = 0
        while True:
            self.request_count += 1
            rate_limited = False
            try:
                resp = self._client.post(self.cfg.endpoint, json=payload, headers=self._headers)
                if resp.status_code == 200:
                    return self._parse(resp.json(), len(texts))
                rate_limited = resp.status_code == 429
                retryable = rate_limited or resp.status_code >= 500
                reason = f"HTTP {resp.status_code}"
            except httpx.HTTPError as exc:
                retryable = True
                reason = f"transport error: {exc}"
            # Rate limiting only burns wall clock; failures also burn attempts.
            if not rate_limited:
                attempt += 1
            backoffs += 1
            if not retryable or attempt > self.cfg.max_retries:
                raise EmbeddingError(f"embeddings request failed: {reason}")
            delay = min(self.cfg.backoff_base * 2 ** (backoffs - 1), self.cfg.backoff_cap)
            if time.monotonic() + delay > deadline:
                raise EmbeddingError(
                    f"embeddings request failed: {reason} (retry budget exhausted)"
                )
            log.warning("retrying embeddings request in %.1fs (%s)", delay, reason)
            time.sleep(delay)

    def _parse(self, body: dict, expected: int) -> list[np.ndarray]:
        try:
            rows = sorted(body["data"], key=lambda item: item["index"])
            vectors = [np.asarray(item["embedding"], dtype=np.float32) for item in rows]
        except (KeyError, TypeError) as exc:
            raise EmbeddingError(f"malformed embeddings response: {exc}") from exc
        if len(vectors) != expected:
            raise EmbeddingError(f"expected {expected} embeddings, got {len(vectors)}")
        for vec in vectors:
            if vec.shape != (EMBEDDING_DIM,):
                raise EmbeddingError(
                    f"provider returned dimension {vec.shape}, expected exactly {EMBEDDING_DIM}"
                )
        return vectors


def embed_chunks(
    chunks: list[TextChunk],
    provider: str,
    cfg: EmbeddingConfig | None = None,
    http_client: httpx.Client | None = None,
) -> list[EmbeddingVector]:
    """Embed chunks in input order with the chosen provider.

    Remote vectors are float32 (the cache's storage precision) whether they
    come from the API or the cache, so warm and cold runs agree bit for
    bit. The cache is flushed after every completed batch; a failure mid
    run keeps everything already fetched. The offline provider recomputes
    vectors directly and never touches the cache.
    """
    if not chunks:
        raise ValueError("no chunks to embed")
    cfg = cfg or EmbeddingConfig()
    if provider == "offline":
        return [
            EmbeddingVector(values=offline_embed(c.text, cfg.seed), chunk_ref=c.ref)
            for c in chunks
        ]
    if provider != "remote":
        raise ConfigError(f"unknown provider {provider!r}; choose from {PROVIDERS}")

    client = RemoteEmbeddingClient(cfg.remote, http_client=http_client)
    cache = EmbeddingCache(cfg.cache_path) if cfg.cache_path else None
    model = cfg.remote.model

    by_text: dict[str, np.ndarray] = {}
    missing: list[str] = []  # unique texts, first-occurrence order
    seen: set[str] = set()
    for chunk in chunks:
        if chunk.text in seen:
            continue
        seen.add(chunk.text)
        hit = cache.get(model, chunk.text) if cache is not None else None
        if hit is None:
            missing.append(chunk.text)
        else:
            by_text[chunk.text] = hit

    batches = [
        missing[start : start + cfg.remote.batch_size]
        for start in range(0, len(missing), cfg.remote.batch_size)
    ]

    def fetch(batch: list[str]) -> tuple[list[str], list[np.ndarray]]:
        got = client.embed_batch(batch)
        if cache is not None:
            for text, vec in zip(batch, got):
                cache.put(model, text, vec)
            cache.flush()
        return batch, got

    try:
        if batches:
            workers = max(1, min(cfg.remote.parallel_requests, len(batches)))
            with ThreadPoolExecutor(max_workers=workers) as pool:
                for batch, got in pool.map(fetch, batches):
                    for text, vec in zip(batch, got):
                        by_text[text] = vec
    finally:
        if cache is not None:
            cache.close()

    return [
        EmbeddingVector(values=by_text[c.text], chunk_ref=c.ref) for c in chunks
    ]


def as_matrix(vectors: list[EmbeddingVector]) -> np.ndarray:
    """Stack embedding vectors into an (n, 1536) float64 matrix."""
    return np.stack([v.values for v in vectors]).astype(float)
