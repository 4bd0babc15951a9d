"""English-to-Korean keyword mnemonics.

The pipeline adapts an English IPA transcription to Korean phonotactics,
splits it into syllables, picks one or two Korean keywords that sound alike,
and over-generates verbal cues that tie the keywords to the word's meaning.
"""

from .phon import Language, PhonemeSequence, cosine, embed, en, ko, parse_ipa
from .retrieve import StructuralWeights, default_lexicon, retrieve_sequence, score_keyword
from .translit import adapt, transliterate

__version__ = "0.1.0"

__all__ = [
    "Language", "PhonemeSequence", "StructuralWeights", "adapt", "cosine", "default_lexicon", "embed",
    "en", "ko", "parse_ipa", "retrieve_sequence", "score_keyword", "transliterate",
]
