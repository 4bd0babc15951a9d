import pytest
from hypothesis import given, strategies as st

from mnemokey.errors import EmptyList, EmptyReference, InventoryError, NoRuleApplicable, ParseError
from mnemokey.phon import Language, PhonemeSequence, default_inventory, en, ko
from mnemokey.syllabify import syllabify
from mnemokey.translit import (
    adapt, adapt_symbols, cer, default_rules, emr, levenshtein, load_parallel_corpus, mean_cer,
    parse_rules, transliterate,
)

import oracle

KO = default_inventory(Language.L1_KO)
EN = default_inventory(Language.L2_EN)


@pytest.mark.parametrize("l2, l1", [
    ("skwandər", "sɯkʰwantʌ"),
    ("ˈskwɑndər", "sɯkʰwantʌ"),
    ("mi", "mi"),
    ("θiŋk", "siŋkʰɯ"),
    ("kæt", "kʰɛt"),
    ("bɛd", "pɛtɯ"),
    ("tri", "tʰɯli"),
    ("dʒʌdʒ", "ʨʌʨi"),
    ("straɪk", "sɯtʰɯlaikʰɯ"),
    ("rɛtɪsənt", "lɛtʰisʌntʰɯ"),
])
def test_adaptation_examples(l2, l1):
    assert str(transliterate(l2)) == l1


def test_pass_order_of_bundled_rules():
    assert default_rules().pass_names() == [
        "coda-repair", "substitution", "cluster-epenthesis", "diphthong-expansion"]


def test_squander_trace():
    trace = []
    adapt_symbols(en("skwandər").symbols, default_rules(), trace)
    assert [name for name, _ in trace] == default_rules().pass_names()
    assert "".join(trace[-1][1]) == "sɯkʰwantʌ"


def test_no_rule_applicable():
    rules = parse_rules("[pass only]\nθ / _ -> s\n")
    with pytest.raises(NoRuleApplicable) as exc:
        adapt(en("ðə"), rules)
    assert exc.value.symbol == "ð"


def test_priority_then_file_order():
    text = "[pass p]\na / _ -> o\na / _ -> u ; 5\na / _ -> i ; 5\n"
    rules = parse_rules(text)
    assert [r.replacement for r in rules.passes[0].rules] == [("u",), ("i",), ("o",)]
    assert str(adapt(ko("a"), rules)) == "u"


def test_contexts_and_edges():
    text = "[classes]\nV = a i\n[pass p]\nt / # _ -> tʰ\nt / @V _ # -> t ɯ\nt / !@V _ -> s\n"
    rules = parse_rules(text)
    assert adapt_symbols(list("tat"), rules) == ["tʰ", "a", "t", "ɯ"]
    assert adapt_symbols(["n", "t", "a"], rules) == ["n", "s", "a"]


def test_copy_and_deletion():
    rules = parse_rules("[classes]\nC = p t\n[pass p]\n@C / _ # -> & ɯ\nh / _ ->\n")
    assert adapt_symbols(["a", "h", "p"], rules) == ["a", "p", "ɯ"]


def test_contexts_read_pass_input():
    # the inserted ɯ must not feed the second rule in the same pass
    rules = parse_rules("[pass p]\nk / _ # -> k ɯ\nɯ / _ # -> a\n")
    assert adapt_symbols(["k"], rules) == ["k", "ɯ"]


@pytest.mark.parametrize("text", [
    "k / _ -> k",                      # rule outside a pass
    "[pass p]\nk / _ -> θ\n",           # non-Korean replacement
    "[pass p]\nk / a -> k\n",           # no underscore
    "[pass p]\nk / _ # a -> k\n",       # edge not outermost
    "[pass p]\nk / @NOPE _ -> k\n",     # unknown class
    "[bogus]\n",
    "",
])
def test_rule_parse_errors(text):
    with pytest.raises(ParseError):
        parse_rules(text)


def test_cer_examples():
    assert cer(ko("sa"), ko("sa")) == 0.0
    assert cer(["a", "b", "d"], ["a", "b", "c"]) == pytest.approx(1 / 3)
    assert cer(["a", "b"], ["a", "b", "c"]) == pytest.approx(1 / 3)
    assert cer([], []) == 0.0
    with pytest.raises(EmptyReference):
        cer(["a"], [])


def test_emr_examples():
    assert emr([(["a"], ["a"]), (["b"], ["b"])]) == 1.0
    assert emr([(["a"], ["a"]), (["b"], ["c"])]) == 0.5
    assert emr([(["a"], ["a"])] * 3 + [(["b"], ["c"])]) == 0.75
    with pytest.raises(EmptyList):
        emr([])


def test_five_pair_fixture(data_dir):
    pairs = load_parallel_corpus(data_dir / "parallel_5.tsv")
    assert len(pairs) == 5
    assert all(p.gold_syllables is not None for p in pairs)
    scored = [(adapt(p.l2_ipa).symbols, p.gold_l1_ipa.symbols) for p in pairs]
    # hand edit distances: cake kʰɛikʰɯ vs kʰeikʰɯ = 1 of 5, film pʰilmɯ vs pʰillɯm = 2 of 6
    per_pair = [cer(h, r) for h, r in scored]
    assert per_pair == pytest.approx([0, 0, 1 / 5, 0, 2 / 6], abs=1e-12)
    for (h, r), value in zip(scored, per_pair):
        assert value == pytest.approx(oracle.edit_distance(h, r) / len(r), abs=1e-12)
    assert mean_cer(scored) == pytest.approx(8 / 75, abs=1e-9)
    assert emr(scored) == pytest.approx(3 / 5, abs=1e-9)


def test_corpus_one_row(tmp_path):
    f = tmp_path / "c.tsv"
    f.write_text("l2_word\tl2_ipa\tl1_gold_ipa\nmi\tmi\tmi\n", encoding="utf-8")
    pairs = load_parallel_corpus(f)
    assert len(pairs) == 1 and pairs[0].gold_syllables is None and pairs[0].line == 2


def test_corpus_unknown_symbol(tmp_path):
    f = tmp_path / "c.tsv"
    f.write_text("l2_word\tl2_ipa\tl1_gold_ipa\nmi\tmi\tmi\nx\tmi\tmθ\n", encoding="utf-8")
    with pytest.raises(InventoryError) as exc:
        load_parallel_corpus(f)
    assert exc.value.line == 3 and exc.value.symbol == "θ"


def test_corpus_bad_header_and_syllables(tmp_path):
    f = tmp_path / "c.tsv"
    f.write_text("word\tipa\n", encoding="utf-8")
    with pytest.raises(ParseError):
        load_parallel_corpus(f)
    f.write_text("l2_word\tl2_ipa\tl1_gold_ipa\tl1_syllables\nmi\tmi\tmi\tmu\n", encoding="utf-8")
    with pytest.raises(ParseError):
        load_parallel_corpus(f)


# -- properties ----------------------------------------------------------------

en_seqs = st.lists(st.sampled_from(sorted(EN.symbols)), min_size=1, max_size=10).map(
    lambda syms: PhonemeSequence(tuple(EN[s] for s in syms), Language.L2_EN))


@given(en_seqs)
def test_adapt_is_total_korean_and_syllabifiable(seq):
    out = adapt(seq)
    assert all(s in KO for s in out.symbols)
    assert adapt(seq) == out
    syllabify(out)


tokens = st.lists(st.sampled_from("abcd"), max_size=8)


@given(tokens, st.lists(st.sampled_from("abcd"), min_size=1, max_size=8))
def test_cer_axioms(h, r):
    value = cer(h, r)
    assert value == levenshtein(h, r) / len(r) == oracle.edit_distance(h, r) / len(r)
    assert 0 <= value <= max(len(h), len(r)) / len(r)
    assert cer(r, r) == 0
    relabel = {"a": "x", "b": "y", "c": "z", "d": "w"}
    assert cer([relabel[c] for c in h], [relabel[c] for c in r]) == value
    assert (value == 0) == (h == r)


@given(st.lists(st.tuples(tokens, st.lists(st.sampled_from("abcd"), min_size=1, max_size=8)),
                min_size=1, max_size=6))
def test_emr_one_implies_zero_cer(pairs):
    same = [(r, r) for _, r in pairs]
    assert emr(same) == 1.0 and mean_cer(same) == 0.0
    assert 0.0 <= emr(pairs) <= 1.0
