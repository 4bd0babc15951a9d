"""Keyword matching: lexicon ingestion, structural scoring and sequence retrieval."""

from __future__ import annotations

import csv
import enum
from collections import defaultdict
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

from . import assets
from .errors import DuplicateEntry, EmptyLexicon, InventoryError, ParseError, UnknownSymbol
from .phon import (
    Language, PhonemeSequence, cosine, default_inventory, embed, normalize_ipa, parse_ipa,
)
from .syllabify import Segmentation, SyllableSequence, enumerate_partitions, syllabify
from .translit import RuleSet, adapt

LEXICON_COLUMNS = ("surface", "ipa", "syllables", "pos", "gloss", "frequency")
DEFAULT_SCORE_FLOOR = 0.3


class POS(str, enum.Enum):
    NOUN = "NOUN"
    VERB = "VERB"
    ADJ = "ADJ"
    ADV = "ADV"
    OTHER = "OTHER"


@dataclass(frozen=True)
class LexiconEntry:
    surface: str
    ipa: PhonemeSequence
    syllables: tuple[PhonemeSequence, ...]
    pos: POS = POS.OTHER
    gloss: Optional[str] = None
    frequency: Optional[int] = None

    def __post_init__(self):
        if not self.surface:
            raise ValueError("lexicon entry surface must be non-empty")
        flat = tuple(s for syl in self.syllables for s in syl.symbols)
        if flat != self.ipa.symbols:
            raise ValueError(f"{self.surface}: syllables do not flatten to {self.ipa!s}")

    @property
    def key(self):
        return self.surface, str(self.ipa)

    @property
    def syllable_string(self) -> str:
        return ".".join(str(s) for s in self.syllables)


class Lexicon:
    """Immutable list of entries with a first-syllable index."""

    def __init__(self, entries: Sequence[LexiconEntry]):
        self.entries = tuple(entries)
        seen = set()
        index = defaultdict(list)
        for i, entry in enumerate(self.entries):
            if entry.key in seen:
                raise DuplicateEntry(i + 1, entry.key)
            seen.add(entry.key)
            index[str(entry.syllables[0]) if entry.syllables else ""].append(i)
        self.index = {k: tuple(v) for k, v in index.items()}

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def by_first_syllable(self, syllable) -> list[LexiconEntry]:
        return [self.entries[i] for i in self.index.get(str(syllable), ())]


@dataclass(frozen=True)
class StructuralWeights:
    lambda_syll: float = 0.9
    lambda_first: float = 2.0
    lambda_substr: float = 0.3
    lambda_early: float = 0.2
    early_phones: int = 2

    def __post_init__(self):
        for name in ("lambda_syll", "lambda_first", "lambda_substr", "lambda_early"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.early_phones < 1:
            raise ValueError("early_phones must be at least 1")

    def legal_adjustments(self):
        return {self.lambda_syll * self.lambda_first, self.lambda_syll,
                self.lambda_substr, self.lambda_early, 0.0}


@dataclass(frozen=True)
class MatchScore:
    base_cos: float
    adjustment: float
    total: float
    syllable_overlap: bool = False
    initial_match: bool = False
    substring: bool = False
    early_phone: bool = False

    @property
    def flags(self) -> dict:
        return {"syllable_overlap": self.syllable_overlap, "initial_match": self.initial_match,
                "substring": self.substring, "early_phone": self.early_phone}


@dataclass(frozen=True)
class KeywordSequence:
    keywords: tuple[tuple[LexiconEntry, MatchScore], ...]
    segmentation: Segmentation
    seq_score: float
    score_floor: float = field(default=DEFAULT_SCORE_FLOOR, compare=False)

    @property
    def entries(self) -> tuple[LexiconEntry, ...]:
        return tuple(e for e, _ in self.keywords)

    @property
    def surfaces(self) -> tuple[str, ...]:
        return tuple(e.surface for e, _ in self.keywords)

    def low_confidence(self) -> tuple[bool, ...]:
        return tuple(s.total < self.score_floor for _, s in self.keywords)


# -- predicates ---------------------------------------------------------------

def _syllable_strings(sylls):
    return [str(s) for s in sylls]


def syllable_overlap(seg_sylls, entry_sylls) -> bool:
    return bool(set(_syllable_strings(seg_sylls)) & set(_syllable_strings(entry_sylls)))


def initial_syllable_match(seg_sylls, entry_sylls) -> bool:
    return bool(seg_sylls) and bool(entry_sylls) and str(seg_sylls[0]) == str(entry_sylls[0])


def _contains(hay: tuple, needle: tuple) -> bool:
    n = len(needle)
    return any(hay[i:i + n] == needle for i in range(len(hay) - n + 1))


def substring_inclusion(seg_ipa: PhonemeSequence, entry_ipa: PhonemeSequence) -> bool:
    """One phoneme string occurs contiguously inside the other (symbol-aligned)."""
    a, b = seg_ipa.symbols, entry_ipa.symbols
    if not a or not b:
        return False
    return _contains(a, b) if len(a) >= len(b) else _contains(b, a)


def early_phone_match(seg_ipa: PhonemeSequence, entry_ipa: PhonemeSequence, n: int = 2) -> bool:
    return seg_ipa.symbols[:n] == entry_ipa.symbols[:n]


def _as_segment(segment):
    """Accept a tuple of syllables, a SyllableSequence or a LexiconEntry."""
    if isinstance(segment, LexiconEntry):
        return tuple(segment.syllables), segment.ipa
    sylls = tuple(segment)
    return sylls, PhonemeSequence.concat(list(sylls))


def score_keyword(segment, entry: LexiconEntry,
                  weights: StructuralWeights = StructuralWeights()) -> MatchScore:
    """Cosine of pooled feature embeddings plus one structural bonus.

    Exactly one branch contributes: shared syllable (doubled by the first
    multiplier if the initial syllables match), else substring inclusion,
    else early-phone match, else nothing.
    """
    sylls, seg_ipa = _as_segment(segment)
    base = cosine(embed(seg_ipa), embed(entry.ipa))
    overlap = syllable_overlap(sylls, entry.syllables)
    initial = overlap and initial_syllable_match(sylls, entry.syllables)
    substr = early = False
    if overlap:
        adjustment = weights.lambda_syll * weights.lambda_first if initial else weights.lambda_syll
    else:
        substr = substring_inclusion(seg_ipa, entry.ipa)
        if substr:
            adjustment = weights.lambda_substr
        else:
            early = early_phone_match(seg_ipa, entry.ipa, weights.early_phones)
            adjustment = weights.lambda_early if early else 0.0
    return MatchScore(base, adjustment, base + adjustment, overlap, initial, substr, early)


def _tie_key(entry: LexiconEntry, score: MatchScore):
    # max() over this key: higher total, higher frequency, then smaller surface/ipa
    return (score.total, entry.frequency or 0,
            tuple(-ord(c) for c in entry.surface), tuple(-ord(c) for c in str(entry.ipa)))


def best_keyword(segment, lexicon: Lexicon,
                 weights: StructuralWeights = StructuralWeights()) -> tuple[LexiconEntry, MatchScore]:
    """Highest-scoring lexicon entry for a segment, with deterministic tie-breaks."""
    if not len(lexicon):
        raise EmptyLexicon("cannot match against an empty lexicon")
    best = None
    for entry in lexicon:
        score = score_keyword(segment, entry, weights)
        key = _tie_key(entry, score)
        if best is None or key > best[0]:
            best = (key, entry, score)
    return best[1], best[2]


def rank_keywords(segment, lexicon: Lexicon, weights: StructuralWeights = StructuralWeights(),
                  use_structure: bool = True) -> list[tuple[LexiconEntry, MatchScore]]:
    """Every entry ranked best-first.  ``use_structure=False`` ranks by cosine only."""
    scored = [(e, score_keyword(segment, e, weights)) for e in lexicon]
    if use_structure:
        return sorted(scored, key=lambda es: _tie_key(*es), reverse=True)
    return sorted(scored, key=lambda es: (es[1].base_cos,) + _tie_key(*es)[1:], reverse=True)


def score_segmentation(seg: Segmentation, lexicon: Lexicon,
                       weights: StructuralWeights = StructuralWeights()) -> float:
    """Mean over segments of each segment's best keyword score."""
    if not len(lexicon):
        raise EmptyLexicon("cannot score against an empty lexicon")
    totals = [best_keyword(s, lexicon, weights)[1].total for s in seg.segments]
    return sum(totals) / len(totals)


def retrieve_syllables(sylls, lexicon: Lexicon, weights: StructuralWeights = StructuralWeights(),
                       max_k: int = 2, score_floor: float = DEFAULT_SCORE_FLOOR) -> KeywordSequence:
    """Pick the segmentation whose keywords score best on average.

    Partitions are visited in enumeration order (fewer segments first, then
    earlier boundaries), and only a strictly better score replaces the
    incumbent, which implements the tie-break.
    """
    if not len(lexicon):
        raise EmptyLexicon("cannot retrieve from an empty lexicon")
    cache: dict[tuple, tuple[LexiconEntry, MatchScore]] = {}
    best = None
    for seg in enumerate_partitions(sylls, max_k):
        picks = []
        for segment in seg.segments:
            key = tuple(str(s) for s in segment)
            if key not in cache:
                cache[key] = best_keyword(segment, lexicon, weights)
            picks.append(cache[key])
        score = sum(s.total for _, s in picks) / len(picks)
        if best is None or score > best[0]:
            best = (score, seg, picks)
    score, seg, picks = best
    return KeywordSequence(tuple(picks), seg, score, score_floor)


@dataclass(frozen=True)
class Retrieval:
    """Intermediate products of one retrieval run."""

    l2_ipa: PhonemeSequence
    adapted: PhonemeSequence
    syllables: SyllableSequence
    keywords: KeywordSequence


def retrieve(l2_ipa: PhonemeSequence, lexicon: Lexicon, rules: Optional[RuleSet] = None,
             weights: StructuralWeights = StructuralWeights(), max_k: int = 2,
             score_floor: float = DEFAULT_SCORE_FLOOR) -> Retrieval:
    adapted = adapt(l2_ipa, rules)
    sylls = syllabify(adapted)
    kws = retrieve_syllables(sylls, lexicon, weights, max_k, score_floor)
    return Retrieval(l2_ipa, adapted, sylls, kws)


def retrieve_sequence(l2_ipa: PhonemeSequence, lexicon: Lexicon, rules: Optional[RuleSet] = None,
                      weights: StructuralWeights = StructuralWeights(), max_k: int = 2) -> KeywordSequence:
    """Adapt, syllabify, segment and match an English phoneme sequence."""
    return retrieve(l2_ipa, lexicon, rules, weights, max_k).keywords


# -- lexicon files ------------------------------------------------------------

def make_entry(surface, ipa, syllables=None, pos=POS.NOUN, gloss=None, frequency=None) -> LexiconEntry:
    """Build an entry from IPA text; ``syllables`` is '.'-separated (defaults to syllabify)."""
    inv = default_inventory(Language.L1_KO)
    seq = parse_ipa(normalize_ipa(ipa), inv)
    if syllables is None:
        sylls = syllabify(seq).syllables
    else:
        sylls = tuple(parse_ipa(normalize_ipa(s), inv) for s in syllables.split("."))
    return LexiconEntry(surface, seq, sylls, POS(pos), gloss, frequency)


def load_lexicon(path, inventory=None) -> Lexicon:
    """Read a tab-separated lexicon with a required header row."""
    inventory = inventory or default_inventory(Language.L1_KO)
    assets.verify(path)
    entries = []
    seen = set()
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter="\t", quoting=csv.QUOTE_NONE)
        header = next(reader, None)
        if header is None or tuple(c.strip() for c in header) != LEXICON_COLUMNS:
            raise ParseError(1, f"header must be {' '.join(LEXICON_COLUMNS)}")
        for lineno, row in enumerate(reader, 2):
            if not row or not "".join(row).strip():
                continue
            if len(row) != len(LEXICON_COLUMNS):
                raise ParseError(lineno, f"expected {len(LEXICON_COLUMNS)} columns, got {len(row)}")
            surface, ipa_text, syll_text, pos, gloss, freq = (c.strip() for c in row)
            if not surface:
                raise ParseError(lineno, "empty surface form")
            try:
                ipa = parse_ipa(normalize_ipa(ipa_text), inventory)
                sylls = tuple(parse_ipa(normalize_ipa(s), inventory) for s in syll_text.split("."))
            except UnknownSymbol as exc:
                raise InventoryError(lineno, exc.fragment) from None
            if not ipa.phonemes:
                raise ParseError(lineno, "empty IPA")
            if tuple(s for syl in sylls for s in syl.symbols) != ipa.symbols:
                raise ParseError(lineno, "syllable column does not concatenate to the IPA column")
            try:
                pos_value = POS(pos.upper() or "OTHER")
            except ValueError:
                raise ParseError(lineno, f"unknown part of speech {pos!r}") from None
            frequency = None
            if freq:
                if not freq.isdigit():
                    raise ParseError(lineno, f"frequency must be a non-negative integer, got {freq!r}")
                frequency = int(freq)
            entry = LexiconEntry(surface, ipa, sylls, pos_value, gloss or None, frequency)
            if entry.key in seen:
                raise DuplicateEntry(lineno, entry.key)
            seen.add(entry.key)
            entries.append(entry)
    return Lexicon(entries)


@lru_cache(maxsize=None)
def default_lexicon() -> Lexicon:
    return load_lexicon(assets.asset_path(assets.LEXICON))
