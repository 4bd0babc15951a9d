"""Automated evaluation of keyword sequences and verbal cues."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .cue import VerbalCue, VocabEntry
from .errors import EmptyList
from .phon import PhonemeSequence, cosine, embed
from .retrieve import LexiconEntry

# Case markers, postpositions and copula endings that may follow a keyword
# without counting as a change to it.
PARTICLES = frozenset("""
은 는 이 가 을 를 에 에서 에게 께 께서 한테 의 로 으로 와 과 도 만 까지 부터 처럼 보다
랑 이랑 하고 나 이나 든지 라도 이라도 조차 마저 밖에 야 아 요 이요 며 이며 고 이고 다 이다
였다 이었다 인 이던 였던 에는 에도 에서는 에서도 으로는 로는 와는 과는 에게는 한테는
""".split())
_STRIP = "<>.,!?\"'“”‘’()[]{}:;…·~-"
MODIFIED_PREFIX_SHARE = 0.5


class KeywordStatus(str, enum.Enum):
    PRESENT = "present"
    MODIFIED = "modified"
    OMITTED = "omitted"


def _is_particle_tail(rest: str) -> bool:
    if not rest:
        return True
    # up to two stacked particles, e.g. 에서 + 는
    for i in range(1, len(rest) + 1):
        head, tail = rest[:i], rest[i:]
        if head in PARTICLES and (not tail or tail in PARTICLES):
            return True
    return False


def cue_tokens(text: str) -> list[str]:
    return [t for t in (w.strip(_STRIP) for w in text.split()) if t]


def _common_prefix(a: str, b: str) -> int:
    n = 0
    for x, y in zip(a, b):
        if x != y:
            break
        n += 1
    return n


def classify_keyword(keyword: str, text: str) -> KeywordStatus:
    """PRESENT if used verbatim (a trailing particle is allowed), MODIFIED if a
    token keeps the first syllable block and at least half of the keyword as
    a prefix, otherwise OMITTED."""
    keyword = keyword.strip()
    if " " in keyword:
        if keyword in text:
            return KeywordStatus.PRESENT
        keyword_first = keyword.split()[0]
    else:
        keyword_first = keyword
    tokens = cue_tokens(text)
    for tok in tokens:
        if tok.startswith(keyword) and _is_particle_tail(tok[len(keyword):]):
            return KeywordStatus.PRESENT
    for tok in tokens:
        shared = _common_prefix(tok, keyword_first)
        if shared >= 1 and shared / len(keyword) >= MODIFIED_PREFIX_SHARE:
            return KeywordStatus.MODIFIED
    return KeywordStatus.OMITTED


def keyword_statuses(proposed: Sequence[str], cue) -> list[KeywordStatus]:
    text = cue.text if isinstance(cue, VerbalCue) else cue
    return [classify_keyword(k, text) for k in proposed]


def _surfaces(proposed):
    return [p if isinstance(p, str) else p.surface for p in proposed]


def omission_rate(proposed, cue) -> float:
    proposed = _surfaces(proposed)
    if not proposed:
        raise EmptyList("no proposed keywords")
    st = keyword_statuses(proposed, cue)
    return st.count(KeywordStatus.OMITTED) / len(st)


def modification_rate(proposed, cue) -> float:
    proposed = _surfaces(proposed)
    if not proposed:
        raise EmptyList("no proposed keywords")
    st = keyword_statuses(proposed, cue)
    return st.count(KeywordStatus.MODIFIED) / len(st)


def phonetic_similarity(keywords: Sequence[LexiconEntry], adapted_ipa: PhonemeSequence) -> float:
    """Cosine between the pooled features of the concatenated keywords and the adapted word."""
    if not keywords:
        raise EmptyList("no keywords")
    joined = PhonemeSequence.concat([k.ipa for k in keywords])
    return cosine(embed(joined), embed(adapted_ipa))


@dataclass(frozen=True)
class EvalItem:
    target: VocabEntry
    adapted_ipa: PhonemeSequence
    proposed_keywords: tuple[LexiconEntry, ...]
    cue: VerbalCue
    ppl: Optional[float] = None
    cc: Optional[float] = None

    def __post_init__(self):
        if not self.proposed_keywords:
            raise ValueError("an evaluation item needs at least one proposed keyword")


@dataclass(frozen=True)
class ItemScores:
    l2_word: str
    phonetic: float
    statuses: tuple[KeywordStatus, ...]
    context: Optional[float]
    perplexity: Optional[float]

    @property
    def n_keywords(self):
        return len(self.statuses)

    @property
    def omission_rate(self):
        return self.statuses.count(KeywordStatus.OMITTED) / self.n_keywords

    @property
    def modification_rate(self):
        return self.statuses.count(KeywordStatus.MODIFIED) / self.n_keywords

    @property
    def present_rate(self):
        return self.statuses.count(KeywordStatus.PRESENT) / self.n_keywords


def score_item(item: EvalItem) -> ItemScores:
    surfaces = [k.surface for k in item.proposed_keywords]
    return ItemScores(
        item.target.l2_word,
        phonetic_similarity(item.proposed_keywords, item.adapted_ipa),
        tuple(keyword_statuses(surfaces, item.cue)),
        item.cc,
        item.ppl,
    )


@dataclass
class EvalReport:
    phonetic: float
    omission_rate: float
    modification_rate: float
    context: Optional[float]
    perplexity: Optional[float]
    n_items: int
    n_keywords: int
    n_context: int
    n_perplexity: int
    pooling: str = "global-count"
    items: list = field(default_factory=list)
    stages: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "phonetic": self.phonetic,
            "omission_rate": self.omission_rate,
            "modification_rate": self.modification_rate,
            "context": self.context,
            "perplexity": self.perplexity,
            "n_items": self.n_items,
            "n_keywords": self.n_keywords,
            "n_context": self.n_context,
            "n_perplexity": self.n_perplexity,
            "pooling": self.pooling,
            "items": self.items,
            "stages": self.stages,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False)

    @classmethod
    def from_dict(cls, d):
        return cls(**{k: d[k] for k in (
            "phonetic", "omission_rate", "modification_rate", "context", "perplexity",
            "n_items", "n_keywords", "n_context", "n_perplexity", "pooling", "items", "stages")})

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _mean(values):
    values = [v for v in values if v is not None]
    return (math.fsum(values) / len(values)) if values else None


def build_report(items: Sequence[EvalItem]) -> EvalReport:
    """Aggregate item metrics.  Keyword rates pool counts over all proposed keywords."""
    items = list(items)
    if not items:
        raise EmptyList("cannot build a report from zero items")
    scored = [score_item(it) for it in items]
    statuses = [s for sc in scored for s in sc.statuses]
    n_kw = len(statuses)
    rows = [{
        "l2_word": sc.l2_word,
        "phonetic": sc.phonetic,
        "omission_rate": sc.omission_rate,
        "modification_rate": sc.modification_rate,
        "context": sc.context,
        "perplexity": sc.perplexity,
        "statuses": [s.value for s in sc.statuses],
    } for sc in scored]
    return EvalReport(
        phonetic=_mean(sc.phonetic for sc in scored),
        omission_rate=statuses.count(KeywordStatus.OMITTED) / n_kw,
        modification_rate=statuses.count(KeywordStatus.MODIFIED) / n_kw,
        context=_mean(sc.context for sc in scored),
        perplexity=_mean(sc.perplexity for sc in scored),
        n_items=len(scored),
        n_keywords=n_kw,
        n_context=sum(sc.context is not None for sc in scored),
        n_perplexity=sum(sc.perplexity is not None for sc in scored),
        items=rows,
    )


def _fmt(v, pct=False):
    if v is None:
        return "-"
    if isinstance(v, int):
        return str(v)
    return f"{100 * v:.1f}%" if pct else f"{v:.4f}"


def format_report_table(report: EvalReport) -> str:
    """Aligned plain-text rendering: one summary row, then one row per item."""
    header = ["item", "phonetic", "omission", "modification", "context", "perplexity"]
    rows = [["ALL", _fmt(report.phonetic), _fmt(report.omission_rate, True),
             _fmt(report.modification_rate, True), _fmt(report.context), _fmt(report.perplexity)]]
    for it in report.items:
        rows.append([it["l2_word"], _fmt(it["phonetic"]), _fmt(it["omission_rate"], True),
                     _fmt(it["modification_rate"], True), _fmt(it["context"]), _fmt(it["perplexity"])])
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths)))
             for r in [header] + rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    if report.stages:
        lines.append("")
        for name, value in report.stages.items():
            lines.append(f"{name}: {_fmt(value) if isinstance(value, float) else value}")
    return "\n".join(lines)


def stage_metrics(pairs, rules=None) -> dict:
    """CER / EMR of the transducer and boundary F1 of the syllabifier on gold pairs.

    Boundary F1 pools boundary counts over every pair that carries gold
    syllables, syllabifying the gold Korean IPA.
    """
    from .syllabify import SyllableSequence, boundary_prf, f1_from_counts, syllabify
    from .translit import adapt, cer, emr

    pairs = list(pairs)
    if not pairs:
        raise EmptyList("no gold pairs")
    hyps, failures = [], 0
    for p in pairs:
        try:
            hyps.append(adapt(p.l2_ipa, rules))
        except Exception:
            hyps.append(None)
            failures += 1
    scored = [(h.symbols if h is not None else (), p.gold_l1_ipa.symbols) for h, p in zip(hyps, pairs)]
    out = {
        "n_pairs": len(pairs),
        "cer": math.fsum(cer(h, r) for h, r in scored) / len(scored),
        "emr": emr(scored),
        "adapt_failures": failures,
    }
    hits = n_pred = n_gold = 0
    n_f1 = 0
    for p in pairs:
        if p.gold_syllables is None:
            continue
        pred = syllabify(p.gold_l1_ipa)
        h, a, b = boundary_prf(pred, SyllableSequence(p.gold_syllables))
        hits, n_pred, n_gold = hits + h, n_pred + a, n_gold + b
        n_f1 += 1
    if n_f1:
        precision, recall, f1 = f1_from_counts(hits, n_pred, n_gold)
        out.update(boundary_precision=precision, boundary_recall=recall, boundary_f1=f1,
                   n_syllabified=n_f1)
    return out
