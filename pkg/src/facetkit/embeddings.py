"""Token embedding providers for the semantic matching metric and features.

The default provider hashes character trigrams into a fixed-width signed
vector, so the whole toolkit runs offline with bit-reproducible results.
An HTTP client provider with the same capability lets contextual models be
plugged in without touching any metric code.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Sequence

import httpx
import numpy as np

from .errors import EmptyTokenError, ProviderFailureError

# FNV-1a 64-bit parameters: the fixed hash seed shared by every run/platform.
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1

HASHED_DIMENSION = 256
_BOUNDARY_START = "^"
_BOUNDARY_END = "$"


def _fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


class EmbeddingProvider(ABC):
    """Deterministic token -> unit-norm vector mapping."""

    @property
    @abstractmethod
    def dimension(self) -> int:
        ...

    @abstractmethod
    def embed(self, token: str) -> np.ndarray:
        ...

    def embed_batch(self, tokens: Sequence[str]) -> np.ndarray:
        """Rows are embeddings in token order; default loops over embed()."""
        if not tokens:
            return np.zeros((0, self.dimension))
        return np.stack([self.embed(t) for t in tokens])


class HashedTrigramProvider(EmbeddingProvider):
    """Character-trigram signed hashing into 256 buckets, L2-normalized.

    The token is padded with boundary markers; each trigram is FNV-1a hashed,
    the low bit selects the sign and the remaining bits the bucket. Identical
    tokens map to identical vectors on every platform.
    """

    def __init__(self, dimension: int = HASHED_DIMENSION):
        self._dimension = dimension
        self._cache: dict[str, np.ndarray] = {}

    @property
    def dimension(self) -> int:
        return self._dimension

    def embed(self, token: str) -> np.ndarray:
        if not token:
            raise EmptyTokenError("cannot embed an empty token")
        cached = self._cache.get(token)
        if cached is not None:
            return cached
        padded = _BOUNDARY_START + token + _BOUNDARY_END
        vec = np.zeros(self._dimension)
        for i in range(len(padded) - 2):
            h = _fnv1a64(padded[i : i + 3].encode("utf-8"))
            sign = 1.0 if h & 1 else -1.0
            vec[(h >> 1) % self._dimension] += sign
        norm = np.linalg.norm(vec)
        if norm > 0:
            vec /= norm
        vec.setflags(write=False)
        self._cache[token] = vec
        return vec


class HttpEmbeddingProvider(EmbeddingProvider):
    """Client for the external embedding protocol.

    ``POST {base_url}/embed`` with ``{"tokens": [...]}`` must answer
    ``{"vectors": [[...], ...]}``; vectors are re-normalized client-side so
    the unit-norm contract holds regardless of the server.
    """

    def __init__(
        self,
        base_url: str,
        dimension: int | None = None,
        client: httpx.Client | None = None,
    ):
        self._base_url = base_url.rstrip("/")
        self._dimension = dimension
        self._client = client or httpx.Client(timeout=30.0)

    @property
    def dimension(self) -> int:
        if self._dimension is None:
            self._dimension = self.embed("a").shape[0]
        return self._dimension

    def embed(self, token: str) -> np.ndarray:
        return self.embed_batch([token])[0]

    def embed_batch(self, tokens: Sequence[str]) -> np.ndarray:
        if any(not t for t in tokens):
            raise EmptyTokenError("cannot embed an empty token")
        if not tokens:
            return np.zeros((0, self.dimension))
        try:
            response = self._client.post(
                self._base_url + "/embed", json={"tokens": list(tokens)}
            )
            response.raise_for_status()
            vectors = response.json()["vectors"]
        except (httpx.HTTPError, KeyError, ValueError) as exc:
            raise ProviderFailureError(f"embedding provider failed: {exc}") from exc
        matrix = np.asarray(vectors, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != len(tokens):
            raise ProviderFailureError(
                f"provider returned {matrix.shape} for {len(tokens)} tokens"
            )
        norms = np.linalg.norm(matrix, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        matrix = matrix / norms
        if self._dimension is None:
            self._dimension = matrix.shape[1]
        return matrix


def resolve_provider(spec: str) -> EmbeddingProvider:
    """Build a provider from a CLI spec: ``hashed`` or ``http:<url>``."""
    if spec == "hashed":
        return HashedTrigramProvider()
    if spec.startswith("http:"):
        url = spec[len("http:") :]
        if not url.startswith(("http://", "https://")):
            url = "http://" + url.lstrip("/")
        return HttpEmbeddingProvider(url)
    raise ValueError(f"unknown provider spec {spec!r}; use 'hashed' or 'http:<url>'")
