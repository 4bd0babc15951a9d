"""Korean syllabification, segment grouping and boundary scoring."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

from . import assets
from .errors import IllegalCluster, NoNucleus, StreamMismatch
from .phon import PhonemeSequence, load_symbol_set


@lru_cache(maxsize=None)
def default_codas() -> frozenset[str]:
    path = assets.asset_path(assets.CODAS_KO)
    assets.verify(path)
    return load_symbol_set(path)


@dataclass(frozen=True)
class SyllableSequence:
    syllables: tuple[PhonemeSequence, ...]

    def __len__(self):
        return len(self.syllables)

    def __iter__(self):
        return iter(self.syllables)

    def __getitem__(self, index):
        return self.syllables[index]

    @property
    def boundary_indices(self) -> tuple[int, ...]:
        """Offsets into the flat phoneme stream where each non-initial syllable starts."""
        out, pos = [], 0
        for syl in self.syllables[:-1]:
            pos += len(syl)
            out.append(pos)
        return tuple(out)

    def flatten(self) -> PhonemeSequence:
        return PhonemeSequence.concat(list(self.syllables))

    def strings(self) -> tuple[str, ...]:
        return tuple(str(s) for s in self.syllables)

    def __str__(self):
        return ".".join(self.strings())


@dataclass(frozen=True)
class Segmentation:
    """Syllables grouped into k contiguous segments; boundaries are syllable indices."""

    boundaries: tuple[int, ...]
    segments: tuple[tuple[PhonemeSequence, ...], ...]

    @property
    def k(self) -> int:
        return len(self.segments)

    def segment_ipa(self, i) -> PhonemeSequence:
        return PhonemeSequence.concat(list(self.segments[i]))

    def strings(self) -> tuple[str, ...]:
        return tuple("".join(str(s) for s in seg) for seg in self.segments)


def _nucleus_starts(symbols, phonemes):
    """Start index of every nucleus (optional glide + vowel), left to right."""
    starts = []
    used_glides = set()
    for i, ph in enumerate(phonemes):
        if ph.is_vowel:
            if i > 0 and phonemes[i - 1].is_glide:
                starts.append(i - 1)
                used_glides.add(i - 1)
            else:
                starts.append(i)
    for i, ph in enumerate(phonemes):
        if ph.is_glide and i not in used_glides:
            raise IllegalCluster(i, f"glide {ph.symbol!r} not followed by a vowel")
    return starts


def syllabify(seq: PhonemeSequence, codas: Optional[frozenset] = None) -> SyllableSequence:
    """Split a Korean-legal phoneme sequence into CV(C) syllables.

    A glide belongs to the nucleus of the following vowel.  Between two
    nuclei a single consonant is the onset of the second; of two consonants
    the first is a coda and the second an onset.  Codas must come from
    ``codas`` (the seven Korean surface codas by default).
    """
    codas = default_codas() if codas is None else codas
    phonemes = seq.phonemes
    if not any(p.is_vowel for p in phonemes):
        raise NoNucleus(f"no vowel in {seq!s}")
    starts = _nucleus_starts(seq.symbols, phonemes)

    def check_coda(i):
        if phonemes[i].symbol not in codas:
            raise IllegalCluster(i, f"{phonemes[i].symbol!r} cannot close a syllable")

    # cut points in the flat stream
    cuts = []
    lead = starts[0]
    if lead > 1:
        raise IllegalCluster(1, "more than one onset consonant")
    for a, b in zip(starts, starts[1:]):
        end_a = a + 1 if not phonemes[a].is_glide else a + 2  # index after vowel
        gap = b - end_a
        if gap == 0:
            cuts.append(b)
        elif gap == 1:
            cuts.append(end_a)
        elif gap == 2:
            check_coda(end_a)
            cuts.append(end_a + 1)
        else:
            raise IllegalCluster(end_a + 2)
    last = starts[-1]
    end_last = last + 1 if not phonemes[last].is_glide else last + 2
    tail = len(phonemes) - end_last
    if tail > 1:
        raise IllegalCluster(end_last + 1)
    if tail == 1:
        check_coda(end_last)
    bounds = [0] + cuts + [len(phonemes)]
    return SyllableSequence(tuple(seq[i:j] for i, j in zip(bounds, bounds[1:])))


def is_legal_syllable(syl: PhonemeSequence, codas: Optional[frozenset] = None) -> bool:
    """Check one syllable against the (C)(G)V(C) template."""
    codas = default_codas() if codas is None else codas
    ph = list(syl.phonemes)
    i = 0
    if i < len(ph) and ph[i].is_consonant:
        i += 1
    if i < len(ph) and ph[i].is_glide:
        i += 1
    if i >= len(ph) or not ph[i].is_vowel:
        return False
    i += 1
    if i < len(ph):
        if not ph[i].is_consonant or ph[i].symbol not in codas:
            return False
        i += 1
    return i == len(ph)


def enumerate_partitions(sylls, max_k: int = 2) -> list[Segmentation]:
    """All groupings of the syllables into 1..max_k contiguous non-empty segments.

    Ordered by number of segments, then by boundary positions ascending.
    """
    syllables = tuple(sylls)
    n = len(syllables)
    out = []
    for k in range(1, min(max_k, n) + 1):
        for inner in itertools.combinations(range(1, n), k - 1):
            bounds = (0,) + inner + (n,)
            segments = tuple(syllables[i:j] for i, j in zip(bounds, bounds[1:]))
            out.append(Segmentation(bounds, segments))
    return out


def _boundary_set(s):
    if isinstance(s, SyllableSequence):
        return set(s.boundary_indices)
    return set(s)


def boundary_prf(pred: SyllableSequence, gold: SyllableSequence) -> tuple[int, int, int]:
    """(hits, predicted, gold) counts of internal boundaries."""
    if pred.flatten().symbols != gold.flatten().symbols:
        raise StreamMismatch(f"{pred!s} and {gold!s} cover different phonemes")
    p, g = _boundary_set(pred), _boundary_set(gold)
    return len(p & g), len(p), len(g)


def f1_from_counts(hits, n_pred, n_gold) -> tuple[float, float, float]:
    if n_pred == 0 and n_gold == 0:
        return 1.0, 1.0, 1.0
    precision = hits / n_pred if n_pred else 0.0
    recall = hits / n_gold if n_gold else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def boundary_f1(pred: SyllableSequence, gold: SyllableSequence) -> tuple[float, float, float]:
    """Precision, recall and F1 of predicted syllable boundaries."""
    return f1_from_counts(*boundary_prf(pred, gold))
