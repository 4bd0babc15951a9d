
import pytest
from hypothesis import given, strategies as st

from mnemokey.errors import EmptySequence, InventoryError, ParseError, UnknownSymbol, ZeroNorm
from mnemokey.phon import (
    FEATURE_NAMES, N_FEATURES, FeatureEmbedding, Language, Phoneme, PhonemeInventory, PhonemeSequence,
    cosine, default_inventory, embed, en, ko, load_feature_table, load_inventory, normalize_ipa,
    parse_ipa, render_ipa,
)

import oracle

KO = default_inventory(Language.L1_KO)
EN = default_inventory(Language.L2_EN)


def test_feature_order_and_count():
    assert N_FEATURES == 22
    assert FEATURE_NAMES[:3] == ("syl", "son", "cons")
    assert FEATURE_NAMES[-1] == "long"


def test_every_inventory_symbol_has_22_ternary_features():
    for inv in (KO, EN):
        for ph in inv:
            assert len(ph.features) == 22
            assert set(ph.features) <= {-1, 0, 1}
            assert ph.is_vowel == (ph.features[0] == 1)


def test_phoneme_rejects_two_base_segments():
    with pytest.raises(ValueError):
        Phoneme("ta", (0,) * 22)


def test_phoneme_rejects_bad_feature_vector():
    with pytest.raises(ValueError):
        Phoneme("a", (0,) * 21)
    with pytest.raises(ValueError):
        Phoneme("a", (2,) + (0,) * 21)


def test_modified_symbols_are_single_segments():
    for sym in ("tʰ", "t͡ʃ", "k͈", "ʨʰ"):
        assert sym in KO or sym in EN


def test_parse_mixed_sequence():
    seq = parse_ipa("otʰapsi", KO)
    assert seq.symbols == ("o", "tʰ", "a", "p", "s", "i")
    assert render_ipa(seq) == "otʰapsi"


def test_parse_empty():
    seq = parse_ipa("", KO)
    assert seq.symbols == ()
    assert render_ipa(seq) == ""


def test_longest_match_prefers_aspirated():
    assert parse_ipa("tʰa", KO).symbols == ("tʰ", "a")
    assert parse_ipa("ta", KO).symbols == ("t", "a")


def test_unknown_symbol_reports_position():
    with pytest.raises(UnknownSymbol) as exc:
        parse_ipa("taθ", KO)
    assert exc.value.position == 2
    assert exc.value.fragment == "θ"


def test_normalization_map():
    assert normalize_ipa("gʌ") == "ɡʌ"
    assert normalize_ipa("tʃ") == "t͡ʃ"
    assert normalize_ipa("ʤ") == "d͡ʒ"
    assert normalize_ipa("ˈskwɑn.dər", strip_prosody=True) == "skwɑndər"
    assert normalize_ipa("ka:", strip_prosody=False) == "ka:"
    assert normalize_ipa("kɑː", strip_prosody=True) == "kɑ"


def test_english_helper_strips_stress():
    assert en("ˈskwɑndər").symbols == ("s", "k", "w", "ɑ", "n", "d", "ə", "r")


def test_embed_singleton_is_identity():
    a = ko("a")
    assert embed(a).values == tuple(float(v) for v in a[0].features)


def test_embed_repeated_phoneme():
    assert embed(ko("aa")).values == embed(ko("a")).values


def test_embed_ta_against_hand_means():
    table = oracle.FEATURES
    e = embed(ko("ta")).values
    for idx in (0, 2, 8):  # syl, cons, voi
        assert e[idx] == pytest.approx((table["t"][idx] + table["a"][idx]) / 2, abs=1e-15)
    # the two segments disagree on all three of these
    assert e[0] == 0.0 and e[2] == 0.0 and e[8] == 0.0


def test_embed_empty():
    with pytest.raises(EmptySequence):
        embed(PhonemeSequence((), Language.L1_KO))


def test_cosine_examples():
    v = embed(ko("sa")).values
    assert cosine(v, v) == pytest.approx(1.0, abs=1e-12)
    assert cosine(v, tuple(-x for x in v)) == pytest.approx(-1.0, abs=1e-12)
    a = (1.0,) + (0.0,) * 21
    b = (1.0, 1.0) + (0.0,) * 20
    assert cosine(a, b) == pytest.approx(0.7071067811865475, abs=1e-12)


def test_cosine_zero_norm():
    with pytest.raises(ZeroNorm):
        cosine((0.0,) * 22, (1.0,) * 22)


def test_feature_embedding_bounds():
    with pytest.raises(ValueError):
        FeatureEmbedding((0.0,) * 21)
    with pytest.raises(ValueError):
        FeatureEmbedding((1.5,) + (0.0,) * 21)


def test_concat_and_add():
    a, b = ko("sɛ"), ko("ɡwan")
    assert (a + b).symbols == ko("sɛɡwan").symbols
    assert PhonemeSequence.concat([a, b]) == ko("sɛɡwan")
    with pytest.raises(ValueError):
        a + en("s")


def test_inventory_rejects_duplicates():
    ph = KO["a"]
    with pytest.raises(ValueError):
        PhonemeInventory(Language.L1_KO, [ph, ph])


def test_feature_table_parse_errors(tmp_path):
    bad = tmp_path / "f.tsv"
    bad.write_text("a\t+\t-\n", encoding="utf-8")
    with pytest.raises(ParseError):
        load_feature_table(bad)
    bad.write_text("a\t" + "\t".join(["x"] * 22) + "\n", encoding="utf-8")
    with pytest.raises(ParseError):
        load_feature_table(bad)


def test_inventory_unknown_symbol(tmp_path):
    feats = {"a": (1,) + (0,) * 21}
    inv = tmp_path / "inv.tsv"
    inv.write_text("a\t1\nq\t0\n", encoding="utf-8")
    with pytest.raises(InventoryError) as exc:
        load_inventory(inv, feats, Language.L1_KO)
    assert exc.value.line == 2 and exc.value.symbol == "q"


def test_inventory_vowel_flag_must_match(tmp_path):
    feats = {"a": (1,) + (0,) * 21}
    inv = tmp_path / "inv.tsv"
    inv.write_text("a\t0\n", encoding="utf-8")
    with pytest.raises(ParseError):
        load_inventory(inv, feats, Language.L1_KO)


# -- properties ----------------------------------------------------------------

def seqs(inv, min_size=0, max_size=12):
    return st.lists(st.sampled_from(sorted(inv.symbols)), min_size=min_size, max_size=max_size).map(
        lambda syms: PhonemeSequence(tuple(inv[s] for s in syms), inv.language_tag))


@given(st.sampled_from([KO, EN]).flatmap(seqs))
def test_render_parse_round_trip(seq):
    inv = KO if seq.language_tag is Language.L1_KO else EN
    assert parse_ipa(render_ipa(seq), inv) == seq


@given(seqs(KO, min_size=1))
def test_embedding_within_coordinate_range(seq):
    e = embed(seq).values
    for i, v in enumerate(e):
        col = [p.features[i] for p in seq]
        assert min(col) - 1e-12 <= v <= max(col) + 1e-12


@given(seqs(KO, min_size=1), seqs(KO, min_size=1), st.floats(0.01, 100))
def test_cosine_symmetric_scale_invariant_bounded(a, b, c):
    ea, eb = embed(a).values, embed(b).values
    if not any(ea) or not any(eb):
        return
    x = cosine(ea, eb)
    assert -1.0 <= x <= 1.0
    assert x == pytest.approx(cosine(eb, ea), abs=1e-12)
    assert x == pytest.approx(cosine(tuple(c * v for v in ea), eb), abs=1e-12)


@given(seqs(KO, min_size=1), seqs(KO, min_size=1))
def test_cosine_matches_oracle(a, b):
    ea, eb = embed(a).values, embed(b).values
    if not any(ea) or not any(eb):
        return
    want = oracle.cos(oracle.pooled(list(a.symbols)), oracle.pooled(list(b.symbols)))
    assert cosine(ea, eb) == pytest.approx(want, abs=1e-12)
