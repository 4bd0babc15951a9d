"""Verbal cue generation: prompt assembly, over-generation, scoring and ranking."""

from __future__ import annotations

import json
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from string import Template
from typing import Optional, Sequence

from . import assets
from .clients import MASK_TOKEN, EmbeddingProvider, GeneratorClient, PerplexityScorer
from .errors import AllCandidatesInvalid, ClientError, EmbedderError, LengthMismatch

GLOSS_FIELD = "목표 단어"
STORY_FIELD = "이야기"
DEFAULT_N = 5
DEFAULT_TEMPERATURE = 0.7
CC_CANDIDATES = 5

_TARGET_RE = re.compile(r"<([^<>]+)>")
_JSON_RE = re.compile(r"\{.*\}", re.S)

MASK_PROMPT = (
    "다음 문장의 {mask} 자리에 들어갈 가장 알맞은 단어를 하나만 답하세요.\n"
    "문장: {sentence}\n"
    "단어:"
)


@dataclass(frozen=True)
class VocabEntry:
    l2_word: str
    glosses: tuple[str, ...]

    def __post_init__(self):
        if not self.l2_word:
            raise ValueError("l2_word must be non-empty")
        if not self.glosses:
            raise ValueError(f"{self.l2_word}: at least one gloss is required")


@dataclass(frozen=True)
class VerbalCue:
    text: str
    chosen_gloss: str
    target_span: tuple[int, int]
    keyword_spans: tuple[tuple[str, Optional[tuple[int, int]]], ...] = ()
    order_violation: bool = False

    @property
    def target(self) -> str:
        return self.text[self.target_span[0]:self.target_span[1]]

    def to_dict(self):
        return {
            "text": self.text,
            "chosen_gloss": self.chosen_gloss,
            "target_span": list(self.target_span),
            "keyword_spans": [[k, list(s) if s else None] for k, s in self.keyword_spans],
            "order_violation": self.order_violation,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["text"], d["chosen_gloss"], tuple(d["target_span"]),
                   tuple((k, tuple(s) if s else None) for k, s in d.get("keyword_spans", ())),
                   bool(d.get("order_violation", False)))


@dataclass(frozen=True)
class DroppedCompletion:
    index: int
    reason: str
    text: str


class CueRejected(ValueError):
    def __init__(self, reason):
        self.reason = reason
        super().__init__(reason)


def _surfaces(keywords) -> list[str]:
    if hasattr(keywords, "surfaces"):
        return list(keywords.surfaces)
    return [k if isinstance(k, str) else k.surface for k in keywords]


@lru_cache(maxsize=None)
def _template_text(path: str) -> str:
    assets.verify(path)
    return Path(path).read_text(encoding="utf-8")


def build_prompt(entry: VocabEntry, keywords, template_path=None) -> str:
    """Fill the few-shot cue prompt with the gloss candidates and keywords in order."""
    kws = _surfaces(keywords)
    if not 1 <= len(kws) <= 2:
        raise ValueError(f"expected 1 or 2 keywords, got {len(kws)}")
    text = _template_text(str(template_path or assets.asset_path(assets.PROMPT)))
    return Template(text).substitute(glosses=", ".join(entry.glosses), keywords=", ".join(kws))


def locate_keywords(text: str, keywords: Sequence[str]):
    spans = []
    for kw in keywords:
        pos = text.find(kw)
        spans.append((kw, (pos, pos + len(kw)) if pos >= 0 else None))
    found = [s[0] for _, s in spans if s is not None]
    violation = any(b <= a for a, b in zip(found, found[1:]))
    return tuple(spans), violation


def parse_completion(text: str, entry: VocabEntry, keywords) -> VerbalCue:
    """Read one model completion into a cue, or raise CueRejected with a reason code."""
    m = _JSON_RE.search(text or "")
    if not m:
        raise CueRejected("not_json")
    try:
        obj = json.loads(m.group(0))
    except json.JSONDecodeError:
        raise CueRejected("not_json") from None
    if not isinstance(obj, dict):
        raise CueRejected("not_json")
    gloss, story = obj.get(GLOSS_FIELD), obj.get(STORY_FIELD)
    if not isinstance(gloss, str) or not isinstance(story, str):
        raise CueRejected("missing_field")
    gloss, story = gloss.strip(), story.strip()
    if not story:
        raise CueRejected("empty_story")
    if gloss not in entry.glosses:
        raise CueRejected("unknown_gloss")
    targets = list(_TARGET_RE.finditer(story))
    if not targets or story.count("<") != story.count(">"):
        raise CueRejected("no_bracketed_target" if not targets else "unbalanced_brackets")
    if len(targets) > 1:
        raise CueRejected("multiple_targets")
    spans, violation = locate_keywords(story, _surfaces(keywords))
    t = targets[0]
    return VerbalCue(story, gloss, (t.start(1), t.end(1)), spans, violation)


def generate_cues(entry: VocabEntry, keywords, client: GeneratorClient, n: int = DEFAULT_N,
                  temperature: float = DEFAULT_TEMPERATURE, dropped: Optional[list] = None,
                  template_path=None) -> list[VerbalCue]:
    """Over-generate ``n`` completions and keep the well-formed ones.

    Rejected completions are appended to ``dropped`` as DroppedCompletion
    records when a list is supplied.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    prompt = build_prompt(entry, keywords, template_path)
    texts = client.complete(prompt, n, temperature)
    if len(texts) != n:
        raise ClientError(f"client returned {len(texts)} completions, expected {n}")
    cues, reasons = [], []
    for i, text in enumerate(texts):
        try:
            cues.append(parse_completion(text, entry, keywords))
        except CueRejected as exc:
            reasons.append(exc.reason)
            if dropped is not None:
                dropped.append(DroppedCompletion(i, exc.reason, text))
    if not cues:
        raise AllCandidatesInvalid(reasons)
    return cues


def mask_prompt(cue: VerbalCue) -> str:
    start, end = cue.target_span
    masked = cue.text[:start - 1] + MASK_TOKEN + cue.text[end + 1:]
    return MASK_PROMPT.format(mask=MASK_TOKEN, sentence=masked)


def _cos(a, b):
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(x * x for x in b))
    if na == 0 or nb == 0:
        raise EmbedderError("zero embedding vector")
    return max(-1.0, min(1.0, sum(x * y for x, y in zip(a, b)) / (na * nb)))


def context_completeness(cue: VerbalCue, client: GeneratorClient, embedder: EmbeddingProvider,
                         temperature: float = DEFAULT_TEMPERATURE) -> float:
    """Mean similarity between the gloss and five fill-ins predicted for the masked target."""
    candidates = client.complete(mask_prompt(cue), CC_CANDIDATES, temperature)
    if len(candidates) != CC_CANDIDATES:
        raise ClientError(f"expected {CC_CANDIDATES} fill-in candidates, got {len(candidates)}")
    gloss_vec = embedder.vec(cue.chosen_gloss)
    sims = [_cos(embedder.vec(c), gloss_vec) for c in candidates]
    return sum(sims) / len(sims)


def rank_order(cc_scores: Sequence[float], ppl_scores: Sequence[Optional[float]]) -> list[int]:
    """Indices sorted by context completeness (desc), then perplexity (asc), then input order."""
    if len(cc_scores) != len(ppl_scores):
        raise LengthMismatch(f"{len(cc_scores)} completeness scores vs {len(ppl_scores)} perplexities")
    inf = float("inf")
    return sorted(range(len(cc_scores)),
                  key=lambda i: (-cc_scores[i], inf if ppl_scores[i] is None else ppl_scores[i], i))


def rank_cues(cues, cc_scores, ppl_scores) -> list:
    if len(cues) != len(cc_scores):
        raise LengthMismatch(f"{len(cues)} cues vs {len(cc_scores)} completeness scores")
    return [cues[i] for i in rank_order(cc_scores, ppl_scores)]


@dataclass(frozen=True)
class ScoredCue:
    cue: VerbalCue
    cc: float
    ppl: Optional[float]


@dataclass
class CueRun:
    ranked: list[ScoredCue] = field(default_factory=list)
    dropped: list[DroppedCompletion] = field(default_factory=list)

    @property
    def chosen(self) -> Optional[ScoredCue]:
        return self.ranked[0] if self.ranked else None


def run_cue_stage(entry: VocabEntry, keywords, client: GeneratorClient, embedder: EmbeddingProvider,
                  scorer: Optional[PerplexityScorer] = None, n: int = DEFAULT_N,
                  temperature: float = DEFAULT_TEMPERATURE, concurrency: int = 1,
                  template_path=None) -> CueRun:
    """Generate, score and rank cues for one word."""
    run = CueRun()
    cues = generate_cues(entry, keywords, client, n, temperature, run.dropped, template_path)

    def cc(cue):
        return context_completeness(cue, client, embedder, temperature)

    if concurrency > 1:
        with ThreadPoolExecutor(max_workers=concurrency) as pool:
            cc_scores = list(pool.map(cc, cues))
    else:
        cc_scores = [cc(c) for c in cues]
    ppl_scores = [scorer.ppl(c.text) if scorer else None for c in cues]
    for i in rank_order(cc_scores, ppl_scores):
        run.ranked.append(ScoredCue(cues[i], cc_scores[i], ppl_scores[i]))
    return run
