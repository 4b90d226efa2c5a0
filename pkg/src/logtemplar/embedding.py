"""Word and log embeddings plus the word-similarity predicate.

The default provider hashes character trigrams into a fixed number of signed
buckets, so embeddings are deterministic across runs and platforms and tests
never need a network. An OpenAI-compatible embeddings endpoint can be plugged
in for real deployments.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatchError,
    EmptyWordError,
    ProviderUnavailableError,
    ZeroVectorError,
)
from .model import LogRecord

DEFAULT_DIM = 64
DEFAULT_SIM_THRESHOLD = 0.0


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity of two vectors; symmetric, in [-1, 1]."""
    if a.shape != b.shape:
        raise DimensionMismatchError(f"{a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ZeroVectorError("cosine of zero vector")
    return float(np.dot(a, b) / (na * nb))


def _trigrams(word: str) -> list[str]:
    padded = f"^{word}$"
    if len(padded) < 3:
        return [padded]
    return [padded[i : i + 3] for i in range(len(padded) - 2)]


class HashEmbedder:
    """Deterministic signed trigram-hash embeddings.

    Same (word, seed, dim) always yields the same L2-normalized vector;
    hashing uses blake2b so results do not depend on interpreter hash
    randomization.
    """

    def __init__(self, dim: int = DEFAULT_DIM, seed: int = 0):
        self.dim = dim
        self.seed = seed
        self._word_cache: dict[str, np.ndarray] = {}

    def embed_word(self, word: str) -> np.ndarray:
        if not word:
            raise EmptyWordError("cannot embed empty word")
        cached = self._word_cache.get(word)
        if cached is not None:
            return cached
        vec = np.zeros(self.dim, dtype=np.float64)
        for gram in _trigrams(word):
            digest = hashlib.blake2b(
                f"{self.seed}:{gram}".encode("utf-8"), digest_size=8
            ).digest()
            h = int.from_bytes(digest, "big")
            bucket = h % self.dim
            sign = 1.0 if (h >> 32) & 1 else -1.0
            vec[bucket] += sign
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            # All trigram signs cancelled; make the vector recoverable.
            vec[int.from_bytes(hashlib.blake2b(word.encode(), digest_size=4).digest(), "big") % self.dim] = 1.0
            norm = 1.0
        vec /= norm
        vec.setflags(write=False)
        self._word_cache[word] = vec
        return vec

    def embed_log(self, log: LogRecord) -> np.ndarray:
        vecs = [self.embed_word(w) for w in log.words]
        mean = np.mean(vecs, axis=0)
        norm = float(np.linalg.norm(mean))
        if norm == 0.0:
            mean = vecs[0].copy()
            norm = float(np.linalg.norm(mean))
        return mean / norm


class RemoteEmbedder:
    """Client for an OpenAI-compatible /embeddings endpoint.

    Vectors are L2-normalized on receipt. The API key is read from the
    environment variable named by ``api_key_env``.
    """

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key_env: str = "EMBEDDINGS_API_KEY",
        timeout: float = 30.0,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.model = model
        self.api_key_env = api_key_env
        self.timeout = timeout
        self._word_cache: dict[str, np.ndarray] = {}

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def embed_batch(self, words: list[str]) -> list[np.ndarray]:
        import requests

        missing = [w for w in words if w not in self._word_cache]
        if missing:
            try:
                resp = requests.post(
                    f"{self.endpoint}/embeddings",
                    json={"input": missing, "model": self.model},
                    headers=self._headers(),
                    timeout=self.timeout,
                )
                resp.raise_for_status()
                payload = resp.json()
            except Exception as exc:  # noqa: BLE001 - network failures collapse here
                raise ProviderUnavailableError(str(exc)) from exc
            for word, item in zip(missing, payload["data"]):
                vec = np.asarray(item["embedding"], dtype=np.float64)
                norm = float(np.linalg.norm(vec))
                if norm == 0.0:
                    raise ProviderUnavailableError(f"zero vector for {word!r}")
                self._word_cache[word] = vec / norm
        return [self._word_cache[w] for w in words]

    def embed_word(self, word: str) -> np.ndarray:
        if not word:
            raise EmptyWordError("cannot embed empty word")
        return self.embed_batch([word])[0]

    def embed_log(self, log: LogRecord) -> np.ndarray:
        vecs = self.embed_batch(list(log.words))
        mean = np.mean(vecs, axis=0)
        norm = float(np.linalg.norm(mean))
        if norm == 0.0:
            raise ZeroVectorError("log embedding collapsed to zero")
        return mean / norm


@dataclass
class SimilarityContext:
    """An embedder plus threshold, with a symmetric pair cache.

    ``similar(a, b)`` is the single word-similarity predicate used by the
    edit-distance cost and by demonstration coverage: identical strings are
    always similar regardless of the threshold.
    """

    embedder: HashEmbedder | RemoteEmbedder
    threshold: float = DEFAULT_SIM_THRESHOLD
    _cache: dict[tuple[str, str], bool] = field(default_factory=dict, repr=False)

    def similar(self, w1: str, w2: str) -> bool:
        if w1 == w2:
            return True
        key = (w1, w2) if w1 < w2 else (w2, w1)
        hit = self._cache.get(key)
        if hit is None:
            hit = cosine(self.embedder.embed_word(w1), self.embedder.embed_word(w2)) >= self.threshold
            self._cache[key] = hit
        return hit


def words_similar(
    w1: str,
    w2: str,
    embedder: HashEmbedder | RemoteEmbedder,
    threshold: float = DEFAULT_SIM_THRESHOLD,
) -> bool:
    """True iff the words are identical or their embedding cosine >= threshold."""
    if not w1 or not w2:
        raise EmptyWordError("similarity of empty word")
    if w1 == w2:
        return True
    return cosine(embedder.embed_word(w1), embedder.embed_word(w2)) >= threshold
