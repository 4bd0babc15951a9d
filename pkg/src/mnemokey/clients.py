"""Pluggable text-generation, embedding and perplexity providers.

The stub implementations are deterministic functions of (seed, input) so
that the full cue path can run offline and reproduce byte-for-byte.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import random
import re
import time
from collections import Counter
from functools import lru_cache
from typing import Optional, Protocol, Sequence

import httpx

from . import assets
from .errors import ClientError, EmbedderError

MASK_TOKEN = "[빈칸]"

STUB_FILLERS = (
    "오늘", "갑자기", "조용히", "친구와", "시장에서", "아침에", "몰래", "결국", "천천히",
    "다시", "모두", "함께", "어제", "길에서", "집에서", "정말", "그때", "늘",
)
STUB_FILL_POOL = (
    "사다", "버리다", "쓰다", "모으다", "잃다", "찾다", "남기다", "아끼다", "팔다", "먹다",
)


class GeneratorClient(Protocol):
    def complete(self, prompt: str, n: int, temperature: float) -> list[str]:
        """Return exactly ``n`` completions of ``prompt``."""


class EmbeddingProvider(Protocol):
    dim: int

    def vec(self, token: str) -> Sequence[float]:
        ...


class PerplexityScorer(Protocol):
    def ppl(self, text: str) -> float:
        ...


def _rng(seed: int, *parts) -> random.Random:
    h = hashlib.sha256(repr((seed,) + parts).encode("utf-8")).digest()
    return random.Random(int.from_bytes(h[:8], "big"))


_GLOSS_RE = re.compile(r"목표 단어 후보:\s*<([^>]*)>")
_KEYWORD_RE = re.compile(r"키워드 세트:\s*(.*)")


class StubGenerator:
    """Offline generator: template cues for story prompts, pool words for fill-in prompts."""

    def __init__(self, seed: int = 0):
        self.seed = seed

    def complete(self, prompt: str, n: int, temperature: float = 0.7) -> list[str]:
        if MASK_TOKEN in prompt:
            return [_rng(self.seed, prompt, i).choice(STUB_FILL_POOL) for i in range(n)]
        glosses = _GLOSS_RE.findall(prompt)
        keywords = _KEYWORD_RE.findall(prompt)
        if not glosses or not keywords:
            raise ClientError("stub generator cannot read the prompt")
        candidates = [g.strip() for g in glosses[-1].split(",") if g.strip()]
        kws = [k.strip() for k in keywords[-1].split(",") if k.strip()]
        out = []
        for i in range(n):
            rng = _rng(self.seed, prompt, i)
            target = rng.choice(candidates)
            words = []
            for kw in kws:
                words += [rng.choice(STUB_FILLERS), kw]
            words.append(rng.choice(STUB_FILLERS))
            story = f"<{target}> " + " ".join(words) + "."
            out.append(json.dumps({"목표 단어": target, "이야기": story}, ensure_ascii=False))
        return out


class HttpGenerator:
    """JSON-over-HTTP generator: POST {prompt, n, temperature} -> {candidates: [...]}."""

    def __init__(self, endpoint: str, model: Optional[str] = None, api_key: Optional[str] = None,
                 timeout: float = 60.0, retries: int = 2, backoff: float = 0.5,
                 transport: Optional[httpx.BaseTransport] = None, sleep=time.sleep):
        self.endpoint = endpoint
        self.model = model
        self.api_key = api_key
        self.retries = retries
        self.backoff = backoff
        self._sleep = sleep
        self._client = httpx.Client(timeout=timeout, transport=transport)

    @classmethod
    def from_env(cls, endpoint, model=None, key_env="MNEMOKEY_API_KEY", **kwargs):
        return cls(endpoint, model, os.environ.get(key_env), **kwargs)

    def _payload(self, prompt, n, temperature):
        body = {"prompt": prompt, "n": n, "temperature": temperature}
        if self.model:
            body["model"] = self.model
        return body

    def complete(self, prompt: str, n: int, temperature: float = 0.7) -> list[str]:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last = None
        for attempt in range(self.retries + 1):
            if attempt:
                self._sleep(self.backoff * 2 ** (attempt - 1))
            try:
                resp = self._client.post(self.endpoint, json=self._payload(prompt, n, temperature),
                                         headers=headers)
            except httpx.TransportError as exc:
                last = exc
                continue
            if resp.status_code == 429 or resp.status_code >= 500:
                last = ClientError(f"HTTP {resp.status_code}")
                continue
            if resp.status_code != 200:
                raise ClientError(f"HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                candidates = resp.json()["candidates"]
            except (ValueError, KeyError, TypeError):
                raise ClientError("response is not {candidates: [...]}") from None
            if not isinstance(candidates, list) or len(candidates) != n \
                    or not all(isinstance(c, str) for c in candidates):
                raise ClientError(f"expected {n} text candidates, got {candidates!r:.200}")
            return candidates
        raise ClientError(f"giving up after {self.retries + 1} attempts: {last}")

    def close(self):
        self._client.close()


class HashingEmbedder:
    """Signed character n-gram hashing into a fixed number of dimensions."""

    def __init__(self, dim: int = 64, ngram_range=(1, 3)):
        self.dim = dim
        self.ngram_range = ngram_range

    def vec(self, token: str) -> tuple[float, ...]:
        token = token.strip()
        if not token:
            raise EmbedderError("cannot embed an empty token")
        return self._vec(token)

    @lru_cache(maxsize=4096)
    def _vec(self, token):
        padded = f"<{token}>"
        out = [0.0] * self.dim
        lo, hi = self.ngram_range
        for n in range(lo, hi + 1):
            for i in range(len(padded) - n + 1):
                h = hashlib.blake2b(padded[i:i + n].encode("utf-8"), digest_size=8).digest()
                v = int.from_bytes(h, "big")
                out[v % self.dim] += 1.0 if (v >> 32) & 1 else -1.0
        return tuple(out)


class BigramPerplexity:
    """Add-one smoothed character-bigram perplexity over a bundled count table."""

    def __init__(self, counts: dict[tuple[str, str], int]):
        self.counts = Counter(counts)
        self.context = Counter()
        vocab = set()
        for (a, b), n in self.counts.items():
            self.context[a] += n
            vocab.update((a, b))
        self.vocab_size = len(vocab) + 1

    @classmethod
    def from_file(cls, path=None):
        path = path or assets.asset_path(assets.BIGRAMS)
        assets.verify(path)
        counts = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip() or line.startswith("#"):
                    continue
                a, b, n = line.rstrip("\n").split("\t")
                counts[(a.replace("␣", " "), b.replace("␣", " "))] = int(n)
        return cls(counts)

    def ppl(self, text: str) -> float:
        chars = ["^"] + list(text.strip()) + ["$"]
        logp = 0.0
        for a, b in zip(chars, chars[1:]):
            logp += math.log((self.counts[(a, b)] + 1) / (self.context[a] + self.vocab_size))
        return math.exp(-logp / (len(chars) - 1))
