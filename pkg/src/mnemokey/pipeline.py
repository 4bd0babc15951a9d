"""End-to-end wiring: configuration -> resources -> per-word result records."""

from __future__ import annotations

import json
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

from . import assets
from .clients import BigramPerplexity, HashingEmbedder, HttpGenerator, StubGenerator
from .config import PipelineConfig
from .cue import VerbalCue, VocabEntry, run_cue_stage
from .errors import ConfigError, MnemoError, ParseError, UnknownSymbol
from .metrics import EvalItem
from .phon import (
    Language, PhonemeSequence, default_inventory, load_feature_table, load_inventory,
    load_symbol_set, normalize_ipa, parse_ipa,
)
from .retrieve import LexiconEntry, load_lexicon, retrieve_syllables
from .syllabify import syllabify
from .translit import adapt, load_rules


class InputError(MnemoError, ValueError):
    """A line of word input that cannot be ingested."""

    def __init__(self, line, message, symbol=None):
        self.line = line
        self.symbol = symbol
        super().__init__(f"line {line}: {message}")


@dataclass(frozen=True)
class WordInput:
    line: int
    word: str
    ipa_text: str
    ipa: PhonemeSequence
    glosses: tuple[str, ...] = ()


@dataclass(frozen=True)
class KeywordRecord:
    surface: str
    ipa: str
    syllables: tuple[str, ...]
    base_cos: float
    adjustment: float
    total: float
    flags: dict = field(default_factory=dict, compare=False, hash=False)
    low_confidence: bool = False

    def to_dict(self):
        return {"surface": self.surface, "ipa": self.ipa, "syllables": list(self.syllables),
                "base_cos": self.base_cos, "adjustment": self.adjustment, "total": self.total,
                "flags": dict(self.flags), "low_confidence": self.low_confidence}

    @classmethod
    def from_dict(cls, d):
        return cls(d["surface"], d["ipa"], tuple(d.get("syllables") or (d["ipa"],)),
                   d.get("base_cos"), d.get("adjustment"), d.get("total"),
                   dict(d.get("flags", {})), bool(d.get("low_confidence", False)))


@dataclass(frozen=True)
class CueRecord:
    cue: VerbalCue
    cc: Optional[float] = None
    ppl: Optional[float] = None

    def to_dict(self):
        d = self.cue.to_dict()
        d.update(cc=self.cc, ppl=self.ppl)
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(VerbalCue.from_dict(d), d.get("cc"), d.get("ppl"))


@dataclass(frozen=True)
class MnemonicResult:
    """One word's keywords and ranked cues.  ``cues[0]`` is the chosen cue."""

    l2_word: str
    glosses: tuple[str, ...] = ()
    l2_ipa: str = ""
    adapted_ipa: Optional[str] = None
    syllables: tuple[str, ...] = ()
    segments: tuple[str, ...] = ()
    keywords: tuple[KeywordRecord, ...] = ()
    seq_score: Optional[float] = None
    cues: tuple[CueRecord, ...] = ()
    dropped: tuple[dict, ...] = ()
    error: Optional[dict] = None

    @property
    def chosen(self) -> Optional[CueRecord]:
        return self.cues[0] if self.cues else None

    @property
    def ok(self) -> bool:
        return self.error is None

    def to_dict(self):
        chosen = self.chosen
        return {
            "l2_word": self.l2_word,
            "glosses": list(self.glosses),
            "l2_ipa": self.l2_ipa,
            "adapted_ipa": self.adapted_ipa,
            "syllables": list(self.syllables),
            "segments": list(self.segments),
            "keywords": [k.to_dict() for k in self.keywords],
            "seq_score": self.seq_score,
            "cues": [c.to_dict() for c in self.cues],
            "chosen_cue": chosen.cue.text if chosen else None,
            "dropped": [dict(d) for d in self.dropped],
            "error": self.error,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False)

    @classmethod
    def from_dict(cls, d):
        return cls(
            d["l2_word"], tuple(d.get("glosses", ())), d.get("l2_ipa", ""), d.get("adapted_ipa"),
            tuple(d.get("syllables", ())), tuple(d.get("segments", ())),
            tuple(KeywordRecord.from_dict(k) for k in d.get("keywords", ())), d.get("seq_score"),
            tuple(CueRecord.from_dict(c) for c in d.get("cues", ())),
            tuple(dict(x) for x in d.get("dropped", ())), d.get("error"),
        )

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def error_record(exc: Exception, stage: str) -> dict:
    return {"stage": stage, "type": type(exc).__name__, "message": str(exc)}


class _BoundedClient:
    """Caps the number of in-flight calls to the wrapped client."""

    def __init__(self, client, limit):
        self.client = client
        self._sem = threading.BoundedSemaphore(limit)

    def complete(self, prompt, n, temperature=0.7):
        with self._sem:
            return self.client.complete(prompt, n, temperature)


class Pipeline:
    """Loaded resources for one configuration.  All ingestion errors surface here."""

    def __init__(self, config: PipelineConfig, client=None, embedder=None, scorer=None, live=False):
        self.config = config
        p = config.paths
        if p.features == assets.asset_path(assets.FEATURES) and \
                p.inventory_en == assets.asset_path(assets.INVENTORY_EN) and \
                p.inventory_ko == assets.asset_path(assets.INVENTORY_KO):
            self.en_inventory = default_inventory(Language.L2_EN)
            self.ko_inventory = default_inventory(Language.L1_KO)
        else:
            for path in (p.features, p.inventory_en, p.inventory_ko):
                assets.verify(path)
            features = load_feature_table(p.features)
            self.en_inventory = load_inventory(p.inventory_en, features, Language.L2_EN)
            self.ko_inventory = load_inventory(p.inventory_ko, features, Language.L1_KO)
        assets.verify(p.codas)
        self.codas = load_symbol_set(p.codas)
        self.rules = load_rules(p.rules, self.ko_inventory)
        self.lexicon = load_lexicon(p.lexicon, self.ko_inventory)
        self._client = client
        self._embedder = embedder
        self._scorer = scorer
        self.live = live

    # -- cue-stage providers, built on first use ------------------------------

    @property
    def client(self):
        if self._client is None:
            if self.live:
                s = self.config.client
                if not s.endpoint:
                    raise ConfigError("live mode needs client.endpoint in the config file")
                base = HttpGenerator.from_env(s.endpoint, s.model, s.api_key_env, timeout=s.timeout,
                                              retries=s.retries, backoff=s.backoff)
            else:
                base = StubGenerator(self.config.seed)
            self._client = _BoundedClient(base, self.config.concurrency)
        return self._client

    @property
    def embedder(self):
        if self._embedder is None:
            self._embedder = HashingEmbedder(self.config.embed_dim)
        return self._embedder

    @property
    def scorer(self):
        if self._scorer is None:
            self._scorer = BigramPerplexity.from_file(self.config.paths.bigrams)
        return self._scorer

    # -- ingestion -------------------------------------------------------------

    def parse_l2(self, text: str) -> PhonemeSequence:
        return parse_ipa(normalize_ipa(text, strip_prosody=True), self.en_inventory)

    def parse_l1(self, text: str) -> PhonemeSequence:
        return parse_ipa(normalize_ipa(text), self.ko_inventory)

    def read_words(self, lines: Iterable[str], l1: bool = False) -> list[WordInput]:
        """Parse ``word<TAB>ipa[<TAB>gloss,gloss]`` lines; blank and '#' lines are skipped."""
        out = []
        for lineno, raw in enumerate(lines, 1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) < 2 or len(cols) > 3 or not cols[0].strip() or not cols[1].strip():
                raise InputError(lineno, "expected word<TAB>ipa[<TAB>glosses]")
            word, ipa_text = cols[0].strip(), cols[1].strip()
            glosses = tuple(g.strip() for g in cols[2].split(",") if g.strip()) if len(cols) == 3 else ()
            try:
                seq = self.parse_l1(ipa_text) if l1 else self.parse_l2(ipa_text)
            except UnknownSymbol as exc:
                raise InputError(lineno, f"unknown symbol {exc.fragment!r} in {ipa_text!r}",
                                 exc.fragment) from None
            if not seq.phonemes:
                raise InputError(lineno, "empty IPA")
            out.append(WordInput(lineno, word, ipa_text, seq, glosses))
        return out

    def read_records(self, lines: Iterable[str]) -> list[MnemonicResult]:
        out = []
        for lineno, raw in enumerate(lines, 1):
            if not raw.strip():
                continue
            try:
                out.append(MnemonicResult.from_json(raw))
            except (ValueError, KeyError, TypeError) as exc:
                raise ParseError(lineno, f"not a result record ({exc})") from None
        return out

    # -- stages ----------------------------------------------------------------

    def adapt(self, seq: PhonemeSequence) -> PhonemeSequence:
        return adapt(seq, self.rules, self.ko_inventory)

    def syllabify(self, seq: PhonemeSequence):
        return syllabify(seq, self.codas)

    def retrieve_word(self, w: WordInput) -> MnemonicResult:
        base = MnemonicResult(w.word, w.glosses, str(w.ipa))
        try:
            adapted = self.adapt(w.ipa)
        except MnemoError as exc:
            return replace(base, error=error_record(exc, "transliterate"))
        base = replace(base, adapted_ipa=str(adapted))
        try:
            sylls = self.syllabify(adapted)
        except MnemoError as exc:
            return replace(base, error=error_record(exc, "syllabify"))
        base = replace(base, syllables=sylls.strings())
        try:
            ks = retrieve_syllables(sylls, self.lexicon, self.config.weights, self.config.max_k,
                                    self.config.score_floor)
        except MnemoError as exc:
            return replace(base, error=error_record(exc, "retrieve"))
        low = ks.low_confidence()
        keywords = tuple(
            KeywordRecord(e.surface, str(e.ipa), tuple(str(s) for s in e.syllables), s.base_cos,
                          s.adjustment, s.total, s.flags, low[i])
            for i, (e, s) in enumerate(ks.keywords))
        return replace(base, segments=ks.segmentation.strings(), keywords=keywords,
                       seq_score=ks.seq_score)

    def generate_for(self, result: MnemonicResult) -> MnemonicResult:
        if not result.ok:
            return result
        if not result.glosses:
            return replace(result, error={"stage": "generate", "type": "MissingGloss",
                                          "message": "no target glosses supplied for this word"})
        if not result.keywords:
            return replace(result, error={"stage": "generate", "type": "MissingKeywords",
                                          "message": "record has no keywords"})
        entry = VocabEntry(result.l2_word, result.glosses)
        try:
            run = run_cue_stage(entry, [k.surface for k in result.keywords], self.client, self.embedder,
                                self.scorer, self.config.overgenerate_n, self.config.temperature,
                                concurrency=1, template_path=self.config.paths.prompt)
        except (MnemoError, ValueError) as exc:
            return replace(result, error=error_record(exc, "generate"))
        cues = tuple(CueRecord(s.cue, s.cc, s.ppl) for s in run.ranked)
        dropped = tuple({"index": d.index, "reason": d.reason, "text": d.text} for d in run.dropped)
        return replace(result, cues=cues, dropped=dropped)

    def _map(self, fn, items):
        items = list(items)
        if self.config.concurrency <= 1 or len(items) <= 1:
            return [fn(x) for x in items]
        with ThreadPoolExecutor(max_workers=self.config.concurrency) as pool:
            return list(pool.map(fn, items))

    def retrieve_all(self, words) -> list[MnemonicResult]:
        return self._map(self.retrieve_word, words)

    def generate_all(self, results) -> list[MnemonicResult]:
        return self._map(self.generate_for, results)

    def run(self, words) -> list[MnemonicResult]:
        return self._map(lambda w: self.generate_for(self.retrieve_word(w)), words)

    # -- evaluation ------------------------------------------------------------

    def eval_item(self, result: MnemonicResult) -> EvalItem:
        """Turn a finished record into a metrics item (needs keywords, adapted IPA and a cue)."""
        if not result.ok or result.chosen is None or not result.keywords or not result.adapted_ipa:
            raise ValueError(f"{result.l2_word}: record is incomplete")
        entries = []
        for k in result.keywords:
            ipa = self.parse_l1(k.ipa)
            sylls = tuple(self.parse_l1(s) for s in k.syllables)
            entries.append(LexiconEntry(k.surface, ipa, sylls))
        c = result.chosen
        glosses = result.glosses or (c.cue.chosen_gloss,)
        return EvalItem(VocabEntry(result.l2_word, glosses), self.parse_l1(result.adapted_ipa),
                        tuple(entries), c.cue, c.ppl, c.cc)
