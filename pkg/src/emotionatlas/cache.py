"""Persistent embedding cache with a crash-tolerant binary layout.

File layout (all integers little-endian):

    header   8 bytes   magic ``EMBCACH1``
    records  repeated  u16 model-name length M
                       M bytes model name, UTF-8
                       32 bytes SHA-256 of the text
                       6144 bytes vector, 1536 x float32 LE
    footer   N x u64 record start offsets (from file start)
             u64 record count N
             8 bytes magic ``EMBINDEX``

Records are append-only. The footer is rewritten on every flush; a file
whose footer is missing or torn (crash mid-append) is recovered by
scanning records from the header and truncating any partial tail.
"""

from __future__ import annotations

import hashlib
import struct
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np

VECTOR_DIM = 1536

_HEADER_MAGIC = b"EMBCACH1"
_FOOTER_MAGIC = b"EMBINDEX"
_VECTOR_BYTES = VECTOR_DIM * 4
_HASH_BYTES = 32


class CacheError(RuntimeError):
    """Raised when a cache file cannot be parsed."""


@dataclass(frozen=True)
class CacheStats:
    entries: int
    models: dict[str, int]
    file_size: int


def text_key(text: str) -> bytes:
    return hashlib.sha256(text.encode("utf-8")).digest()


class EmbeddingCache:
    """Lookup table (model name, text hash) -> float32 vector, file-backed.

    Lookups return bit-identical copies of what was stored. Writes are
    serialized internally, so one cache instance may be shared by several
    worker threads.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._entries: dict[tuple[str, bytes], np.ndarray] = {}
        self._offsets: list[int] = []
        self._footer_on_disk = False
        self.path.parent.mkdir(parents=True, exist_ok=True)
        if self.path.exists() and self.path.stat().st_size > 0:
            self._load()
        else:
            with self.path.open("wb") as fh:
                fh.write(_HEADER_MAGIC)
            self._data_end = len(_HEADER_MAGIC)
        self._fh = self.path.open("r+b")

    def _load(self) -> None:
        data = self.path.read_bytes()
        if data[: len(_HEADER_MAGIC)] != _HEADER_MAGIC:
            raise CacheError(f"{self.path}: not an embedding cache file")
        pos = len(_HEADER_MAGIC)
        end = len(data)
        # Trust the footer when intact; otherwise scan and drop a torn tail.
        if end >= pos + 16 and data[-8:] == _FOOTER_MAGIC:
            (count,) = struct.unpack("<Q", data[-16:-8])
            footer_start = end - 16 - 8 * count
            if footer_start >= pos:
                offsets = list(struct.unpack(f"<{count}Q", data[footer_start : footer_start + 8 * count]))
                self._scan(data, pos, footer_start)
                if self._offsets != offsets:
                    raise CacheError(f"{self.path}: index footer disagrees with records")
                self._data_end = footer_start
                self._footer_on_disk = True
                return
        self._scan(data, pos, end)
        self._data_end = self._offsets[-1] + self._record_size(data, self._offsets[-1]) if self._offsets else pos
        with self.path.open("r+b") as fh:
            fh.truncate(self._data_end)

    @staticmethod
    def _record_size(data: bytes, offset: int) -> int:
        (mlen,) = struct.unpack_from("<H", data, offset)
        return 2 + mlen + _HASH_BYTES + _VECTOR_BYTES

    def _scan(self, data: bytes, start: int, end: int) -> None:
        pos = start
        while pos + 2 <= end:
            (mlen,) = struct.unpack_from("<H", data, pos)
            rec_end = pos + 2 + mlen + _HASH_BYTES + _VECTOR_BYTES
            if rec_end > end:
                break
            model = data[pos + 2 : pos + 2 + mlen].decode("utf-8")
            key = data[pos + 2 + mlen : pos + 2 + mlen + _HASH_BYTES]
            vec = np.frombuffer(
                data[rec_end - _VECTOR_BYTES : rec_end], dtype="<f4"
            ).copy()
            self._entries[(model, key)] = vec
            self._offsets.append(pos)
            pos = rec_end

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, model: str, text: str) -> np.ndarray | None:
        vec = self._entries.get((model, text_key(text)))
        return None if vec is None else vec.copy()

    def put(self, model: str, text: str, vector: np.ndarray) -> None:
        vec = np.ascontiguousarray(vector, dtype="<f4")
        if vec.shape != (VECTOR_DIM,):
            raise CacheError(f"expected a {VECTOR_DIM}-dim vector, got shape {vector.shape}")
        key = text_key(text)
        with self._lock:
            if (model, key) in self._entries:
                return
            if self._footer_on_disk:
                self._fh.seek(self._data_end)
                self._fh.truncate(self._data_end)
                self._footer_on_disk = False
            mbytes = model.encode("utf-8")
            self._fh.seek(self._data_end)
            self._fh.write(struct.pack("<H", len(mbytes)) + mbytes + key + vec.tobytes())
            self._offsets.append(self._data_end)
            self._data_end = self._fh.tell()
            self._entries[(model, key)] = vec

    def flush(self) -> None:
        """Persist records and rewrite the index footer."""
        with self._lock:
            if not self._footer_on_disk:
                self._fh.seek(self._data_end)
                self._fh.truncate(self._data_end)
                self._fh.write(struct.pack(f"<{len(self._offsets)}Q", *self._offsets))
                self._fh.write(struct.pack("<Q", len(self._offsets)))
                self._fh.write(_FOOTER_MAGIC)
                self._footer_on_disk = True
            self._fh.flush()

    def close(self) -> None:
        self.flush()
        self._fh.close()

    def __enter__(self) -> "EmbeddingCache":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def stats(self) -> CacheStats:
        models: dict[str, int] = {}
        for model, _ in self._entries:
            models[model] = models.get(model, 0) + 1
        return CacheStats(
            entries=len(self._entries),
            models=dict(sorted(models.items())),
            file_size=self.path.stat().st_size,
        )
