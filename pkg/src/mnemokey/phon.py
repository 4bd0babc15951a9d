"""Typed IPA model: phonemes, inventories, tokenization and feature embeddings."""

from __future__ import annotations

import enum
import math
import unicodedata
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

from . import assets
from .errors import EmptySequence, InventoryError, ParseError, UnknownSymbol, ZeroNorm

FEATURE_NAMES = (
    "syl", "son", "cons", "cont", "delrel", "lat", "nas", "strid", "voi", "sg", "cg",
    "ant", "cor", "distr", "lab", "hi", "lo", "back", "round", "velaric", "tense", "long",
)
N_FEATURES = len(FEATURE_NAMES)
_SYL = FEATURE_NAMES.index("syl")
_SON = FEATURE_NAMES.index("son")
_CONS = FEATURE_NAMES.index("cons")

_TERNARY = {"+": 1, "-": -1, "0": 0}
_TIES = ("͡", "͜")

# Applied in order, after NFC.
CANONICAL = (
    ("t͜ʃ", "t͡ʃ"), ("d͜ʒ", "d͡ʒ"),
    ("ʧ", "t͡ʃ"), ("ʤ", "d͡ʒ"),
    ("t͡ɕ", "ʨ"), ("d͡ʑ", "ʥ"), ("tɕ", "ʨ"), ("dʑ", "ʥ"),
    ("tʃ", "t͡ʃ"), ("dʒ", "d͡ʒ"),
    ("ɕ", "ʃ"),
    ("g", "ɡ"),
    ("*", "͈"),
)
PROSODY = ("ˈ", "ˌ", "ː", "ˑ", "'", ".")


class Language(str, enum.Enum):
    L1_KO = "L1_KO"
    L2_EN = "L2_EN"


def base_segment_count(symbol: str) -> int:
    bases = [ch for ch in symbol
             if not unicodedata.combining(ch) and unicodedata.category(ch) != "Lm"]
    ties = sum(symbol.count(t) for t in _TIES)
    return len(bases) - ties


@dataclass(frozen=True)
class Phoneme:
    symbol: str
    features: tuple[int, ...]

    def __post_init__(self):
        if not self.symbol or base_segment_count(self.symbol) != 1:
            raise ValueError(f"phoneme symbol must hold exactly one base segment: {self.symbol!r}")
        if len(self.features) != N_FEATURES or any(v not in (-1, 0, 1) for v in self.features):
            raise ValueError(f"{self.symbol!r}: features must be {N_FEATURES} values in {{-1, 0, 1}}")

    @property
    def is_vowel(self) -> bool:
        return self.features[_SYL] == 1

    @property
    def is_glide(self) -> bool:
        return (not self.is_vowel and self.features[_CONS] == -1
                and self.features[_SON] == 1)

    @property
    def is_consonant(self) -> bool:
        return not self.is_vowel and not self.is_glide

    def __repr__(self):
        return f"Phoneme({self.symbol!r})"


class PhonemeInventory:
    """A language's phoneme set, keyed by symbol."""

    def __init__(self, language_tag: Language, phonemes: Iterable[Phoneme]):
        self.language_tag = Language(language_tag)
        self._by_symbol: dict[str, Phoneme] = {}
        for ph in phonemes:
            if ph.symbol in self._by_symbol:
                raise ValueError(f"duplicate symbol {ph.symbol!r} in inventory")
            self._by_symbol[ph.symbol] = ph
        if not self._by_symbol:
            raise ValueError("inventory is empty")
        self.max_symbol_length = max(len(s) for s in self._by_symbol)

    def __contains__(self, symbol):
        return symbol in self._by_symbol

    def __getitem__(self, symbol) -> Phoneme:
        return self._by_symbol[symbol]

    def __iter__(self):
        return iter(self._by_symbol.values())

    def __len__(self):
        return len(self._by_symbol)

    @property
    def symbols(self) -> tuple[str, ...]:
        return tuple(self._by_symbol)

    def get(self, symbol):
        return self._by_symbol.get(symbol)

    def __repr__(self):
        return f"PhonemeInventory({self.language_tag.value}, {len(self)} symbols)"


@dataclass(frozen=True)
class PhonemeSequence:
    phonemes: tuple[Phoneme, ...]
    language_tag: Language

    def __len__(self):
        return len(self.phonemes)

    def __iter__(self):
        return iter(self.phonemes)

    def __getitem__(self, index):
        if isinstance(index, slice):
            return PhonemeSequence(self.phonemes[index], self.language_tag)
        return self.phonemes[index]

    def __add__(self, other):
        if not isinstance(other, PhonemeSequence):
            return NotImplemented
        if other.language_tag != self.language_tag:
            raise ValueError("cannot concatenate sequences from different inventories")
        return PhonemeSequence(self.phonemes + other.phonemes, self.language_tag)

    @property
    def symbols(self) -> tuple[str, ...]:
        return tuple(p.symbol for p in self.phonemes)

    def __str__(self):
        return render_ipa(self)

    @classmethod
    def concat(cls, parts: Sequence[PhonemeSequence], language_tag=None):
        if not parts:
            return cls((), Language(language_tag) if language_tag else Language.L1_KO)
        out = parts[0]
        for part in parts[1:]:
            out = out + part
        return out


@dataclass(frozen=True)
class FeatureEmbedding:
    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.values) != N_FEATURES:
            raise ValueError(f"embedding must have {N_FEATURES} entries")
        if any(not -1.0 <= v <= 1.0 for v in self.values):
            raise ValueError("embedding entries must lie in [-1, 1]")


def normalize_ipa(text: str, strip_prosody: bool = False) -> str:
    """NFC-normalize and canonicalize common IPA spelling variants.

    With ``strip_prosody`` stress, length and syllable-break marks and
    whitespace are removed as well.
    """
    text = unicodedata.normalize("NFC", text)
    for src, dst in CANONICAL:
        text = text.replace(src, dst)
    if strip_prosody:
        for mark in PROSODY:
            text = text.replace(mark, "")
        text = "".join(text.split())
    return text


def parse_ipa(text: str, inventory: PhonemeInventory) -> PhonemeSequence:
    """Tokenize IPA text by greedy longest match against ``inventory``."""
    out = []
    i, n = 0, len(text)
    while i < n:
        for size in range(min(inventory.max_symbol_length, n - i), 0, -1):
            ph = inventory.get(text[i:i + size])
            if ph is not None:
                out.append(ph)
                i += size
                break
        else:
            raise UnknownSymbol(i, text[i:i + 1])
    return PhonemeSequence(tuple(out), inventory.language_tag)


def render_ipa(seq: PhonemeSequence) -> str:
    return "".join(p.symbol for p in seq.phonemes)


@lru_cache(maxsize=65536)
def embed(seq: PhonemeSequence) -> FeatureEmbedding:
    """Mean-pool the per-phoneme feature vectors."""
    if not seq.phonemes:
        raise EmptySequence("cannot embed an empty phoneme sequence")
    n = len(seq.phonemes)
    cols = zip(*(p.features for p in seq.phonemes))
    return FeatureEmbedding(tuple(math.fsum(col) / n for col in cols))


def cosine(a: FeatureEmbedding, b: FeatureEmbedding) -> float:
    va = a.values if isinstance(a, FeatureEmbedding) else tuple(a)
    vb = b.values if isinstance(b, FeatureEmbedding) else tuple(b)
    na = math.sqrt(math.fsum(x * x for x in va))
    nb = math.sqrt(math.fsum(x * x for x in vb))
    if na == 0.0 or nb == 0.0:
        raise ZeroNorm("cosine is undefined for a zero vector")
    value = math.fsum(x * y for x, y in zip(va, vb)) / (na * nb)
    return max(-1.0, min(1.0, value))


def load_feature_table(path) -> dict[str, tuple[int, ...]]:
    table = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != N_FEATURES + 1:
                raise ParseError(lineno, f"expected {N_FEATURES + 1} columns, got {len(cols)}")
            symbol = unicodedata.normalize("NFC", cols[0].strip())
            try:
                values = tuple(_TERNARY[c.strip()] for c in cols[1:])
            except KeyError as exc:
                raise ParseError(lineno, f"feature value {exc.args[0]!r} is not one of +, -, 0")
            if symbol in table:
                raise ParseError(lineno, f"duplicate symbol {symbol!r}")
            table[symbol] = values
    return table


def load_inventory(path, features: dict[str, tuple[int, ...]], language_tag) -> PhonemeInventory:
    phonemes = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 2 or cols[1] not in ("0", "1"):
                raise ParseError(lineno, "expected '<symbol>\\t<0|1>'")
            symbol = unicodedata.normalize("NFC", cols[0])
            if symbol not in features:
                raise InventoryError(lineno, symbol)
            ph = Phoneme(symbol, features[symbol])
            if ph.is_vowel != (cols[1] == "1"):
                raise ParseError(lineno, f"vowel flag of {symbol!r} disagrees with its syllabic feature")
            phonemes.append(ph)
    return PhonemeInventory(language_tag, phonemes)


@lru_cache(maxsize=None)
def _default_features():
    path = assets.asset_path(assets.FEATURES)
    assets.verify(path)
    return load_feature_table(path)


@lru_cache(maxsize=None)
def default_inventory(language_tag) -> PhonemeInventory:
    """The bundled inventory for ``language_tag``."""
    tag = Language(language_tag)
    name = assets.INVENTORY_KO if tag is Language.L1_KO else assets.INVENTORY_EN
    path = assets.asset_path(name)
    assets.verify(path)
    return load_inventory(path, _default_features(), tag)


def load_symbol_set(path) -> frozenset[str]:
    symbols = set()
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if line and not line.startswith("#"):
            symbols.add(unicodedata.normalize("NFC", line))
    return frozenset(symbols)


def ko(text: str) -> PhonemeSequence:
    """Parse Korean IPA with the bundled inventory (convenience for callers and tests)."""
    return parse_ipa(normalize_ipa(text), default_inventory(Language.L1_KO))


def en(text: str) -> PhonemeSequence:
    """Parse English IPA with the bundled inventory, dropping stress and length marks."""
    return parse_ipa(normalize_ipa(text, strip_prosody=True), default_inventory(Language.L2_EN))
