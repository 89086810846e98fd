"""Text-embedding backends behind a single call shape.

Two backends: a remote HTTP encoder (endpoint set to a URL) and a built-in
deterministic fallback (endpoint tag "fallback"). The fallback is an
L2-normalized hashed bag-of-words over the shared tokenizer; it is pure,
offline, and cheap, which is what the retrieval and context tests need.
"""

from __future__ import annotations

import hashlib
import math
import os
from dataclasses import dataclass

import numpy as np
import requests

from .errors import (
    DimensionMismatch,
    EmbeddingUnavailable,
    EmptyInput,
    MalformedInput,
    ZeroVector,
)
from .text import tokenize

FALLBACK_TAG = "fallback"
FALLBACK_DIM = 256
# Versioned hash key: bump when the bucketing scheme changes, since stored
# dense scores are only comparable within one version.
FALLBACK_SEED = b"ccsum-bow-v1"

DEFAULT_API_KEY_ENV = "CCSUM_EMBED_API_KEY"


@dataclass(frozen=True)
class EmbeddingVector:
    """Fixed-length real vector; all components finite."""

    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.values:
            raise MalformedInput("embedding vector must be non-empty")
        if not all(math.isfinite(v) for v in self.values):
            raise MalformedInput("embedding vector contains non-finite values")

    @property
    def dim(self) -> int:
        return len(self.values)

    def is_zero(self) -> bool:
        return all(v == 0.0 for v in self.values)


@dataclass(frozen=True)
class ProviderConfig:
    endpoint: str = FALLBACK_TAG
    model_name: str = "hashed-bow-256"
    batch_size: int = 32
    timeout: float = 30.0
    api_key_env: str = DEFAULT_API_KEY_ENV

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise MalformedInput("batch_size must be >= 1")
        if self.timeout <= 0:
            raise MalformedInput("timeout must be positive")


def token_bucket(token: str) -> int:
    """Hash bucket of a token under the fallback scheme (stable across runs)."""
    digest = hashlib.blake2b(token.encode("utf-8"), key=FALLBACK_SEED, digest_size=8)
    return int.from_bytes(digest.digest(), "big") % FALLBACK_DIM


def fallback_embed(texts: list[str]) -> list[EmbeddingVector]:
    """Hashed bag-of-words vectors; texts with no tokens map to the zero vector."""
    out: list[EmbeddingVector] = []
    for text in texts:
        counts = np.zeros(FALLBACK_DIM, dtype=np.float64)
        for tok in tokenize(text):
            counts[token_bucket(tok)] += 1.0
        norm = float(np.linalg.norm(counts))
        if norm > 0.0:
            counts /= norm
        out.append(EmbeddingVector(tuple(float(v) for v in counts)))
    return out


def _remote_embed(texts: list[str], cfg: ProviderConfig) -> list[EmbeddingVector]:
    headers = {}
    key = os.environ.get(cfg.api_key_env, "")
    if key:
        headers["Authorization"] = f"Bearer {key}"
    try:
        resp = requests.post(
            cfg.endpoint,
            json={"model": cfg.model_name, "texts": texts},
            headers=headers,
            timeout=cfg.timeout,
        )
    except requests.RequestException as exc:
        raise EmbeddingUnavailable(f"embedding request failed: {exc}") from exc
    if resp.status_code != 200:
        raise EmbeddingUnavailable(f"embedding provider returned HTTP {resp.status_code}")
    try:
        vectors = resp.json()["vectors"]
    except (ValueError, KeyError, TypeError) as exc:
        raise EmbeddingUnavailable(f"embedding response malformed: {exc}") from exc
    if not isinstance(vectors, list) or len(vectors) != len(texts):
        raise EmbeddingUnavailable(
            f"embedding provider returned {len(vectors) if isinstance(vectors, list) else '?'} "
            f"vectors for {len(texts)} texts"
        )
    try:
        return [EmbeddingVector(tuple(float(x) for x in vec)) for vec in vectors]
    except (TypeError, ValueError, MalformedInput) as exc:
        raise EmbeddingUnavailable(f"embedding response malformed: {exc}") from exc


def embed_texts(texts: list[str], cfg: ProviderConfig | None = None) -> list[EmbeddingVector]:
    """One vector per input text, same order, uniform dimension."""
    cfg = cfg or ProviderConfig()
    if not texts:
        return []
    for t in texts:
        if not isinstance(t, str) or not t:
            raise EmptyInput("embedding inputs must be non-empty strings")
    out: list[EmbeddingVector] = []
    for lo in range(0, len(texts), cfg.batch_size):
        batch = texts[lo : lo + cfg.batch_size]
        if cfg.endpoint == FALLBACK_TAG:
            out.extend(fallback_embed(batch))
        else:
            out.extend(_remote_embed(batch, cfg))
    dims = {v.dim for v in out}
    if len(dims) > 1:
        raise DimensionMismatch(f"provider returned mixed dimensions: {sorted(dims)}")
    return out


def embedding_fn(cfg: ProviderConfig | None = None):
    """Bind a config into the one-argument embedding callable the ops expect."""
    bound = cfg or ProviderConfig()

    def embed(texts: list[str]) -> list[EmbeddingVector]:
        return embed_texts(texts, bound)

    return embed


def cosine(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Cosine similarity in [-1, 1]; rejects zero vectors and mixed dims."""
    if a.dim != b.dim:
        raise DimensionMismatch(f"cosine over dims {a.dim} and {b.dim}")
    va = np.asarray(a.values)
    vb = np.asarray(b.values)
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("cosine undefined for the zero vector")
    return float(np.clip(float(np.dot(va, vb)) / (na * nb), -1.0, 1.0))
