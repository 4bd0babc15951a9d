"""Rule-based English -> Korean phoneme adaptation and its evaluation metrics.

Adaptation runs an ordered list of rewrite passes over the phoneme stream.
Each pass scans once from left to right; at every position the first rule
(by priority, then file order) whose target and contexts match replaces the
symbol, and scanning resumes after it, so replacements are never re-matched
within a pass.  Contexts are always read from the input of the pass.
"""

from __future__ import annotations

import csv
import re
import unicodedata
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Optional, Sequence

from . import assets
from .errors import (
    EmptyList, EmptyReference, InventoryError, NoRuleApplicable, ParseError, UnknownSymbol,
)
from .phon import (
    Language, PhonemeInventory, PhonemeSequence, default_inventory, normalize_ipa, parse_ipa,
)

EDGE = "#"
COPY = "&"
_RULE_RE = re.compile(
    r"^(?P<target>\S+)\s*(?:/(?P<ctx>[^>]*?))?\s*->(?P<repl>[^;]*)(?:;\s*(?P<prio>-?\d+))?\s*$"
)


@dataclass(frozen=True)
class Pattern:
    kind: str  # "sym", "class", "notclass" or "edge"
    value: str = ""

    def matches(self, symbol: Optional[str], classes) -> bool:
        if self.kind == "edge":
            return symbol is None
        if symbol is None:
            return False
        if self.kind == "sym":
            return symbol == self.value
        if self.kind == "class":
            return symbol in classes[self.value]
        return symbol not in classes[self.value]

    def __str__(self):
        return {"sym": self.value, "class": "@" + self.value,
                "notclass": "!@" + self.value, "edge": EDGE}[self.kind]


@dataclass(frozen=True)
class RewriteRule:
    id: str
    target: Pattern
    left_ctx: tuple[Pattern, ...]
    right_ctx: tuple[Pattern, ...]
    replacement: tuple[str, ...]
    priority: int = 0

    def __str__(self):
        left = " ".join(map(str, self.left_ctx))
        right = " ".join(map(str, self.right_ctx))
        return f"{self.target} / {left} _ {right} -> {' '.join(self.replacement)} ; {self.priority}"


@dataclass(frozen=True)
class RulePass:
    name: str
    rules: tuple[RewriteRule, ...]


@dataclass(frozen=True)
class RuleSet:
    passes: tuple[RulePass, ...]
    classes: dict = field(default_factory=dict, hash=False, compare=False)

    def pass_names(self):
        return [p.name for p in self.passes]


def _parse_pattern(token: str, classes, lineno) -> Pattern:
    if token == EDGE:
        return Pattern("edge")
    if token.startswith("!@"):
        kind, name = "notclass", token[2:]
    elif token.startswith("@"):
        kind, name = "class", token[1:]
    else:
        return Pattern("sym", token)
    if name not in classes:
        raise ParseError(lineno, f"unknown class @{name}")
    return Pattern(kind, name)


def parse_rules(text: str, l1_inventory: Optional[PhonemeInventory] = None) -> RuleSet:
    """Parse rule-file text.  Replacement symbols are checked against ``l1_inventory``."""
    if l1_inventory is None:
        l1_inventory = default_inventory(Language.L1_KO)
    text = unicodedata.normalize("NFC", text)
    classes: dict[str, frozenset] = {}
    passes: list[tuple[str, list]] = []
    section = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0] if raw.lstrip().startswith("#") else raw
        line = line.strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            header = line[1:-1].strip()
            if header == "classes":
                section = "classes"
            elif header.startswith("pass "):
                name = header[5:].strip()
                if not name or name in (p[0] for p in passes):
                    raise ParseError(lineno, f"bad or duplicate pass name {name!r}")
                passes.append((name, []))
                section = "pass"
            else:
                raise ParseError(lineno, f"unknown section [{header}]")
            continue
        if section == "classes":
            name, sep, members = line.partition("=")
            name = name.strip()
            if not sep or not name.isidentifier():
                raise ParseError(lineno, "class lines look like 'NAME = sym sym @OTHER'")
            symbols = set()
            for tok in members.split():
                if tok.startswith("@"):
                    if tok[1:] not in classes:
                        raise ParseError(lineno, f"unknown class {tok}")
                    symbols |= classes[tok[1:]]
                else:
                    symbols.add(tok)
            classes[name] = frozenset(symbols)
        elif section == "pass":
            passes[-1][1].append(_parse_rule(line, lineno, passes[-1][0], classes, l1_inventory))
        else:
            raise ParseError(lineno, "rule outside of a [pass ...] section")
    if not passes:
        raise ParseError(0, "rule file defines no passes")
    built = []
    for name, rules in passes:
        # stable sort keeps file order among equal priorities
        ordered = sorted(rules, key=lambda r: -r.priority)
        built.append(RulePass(name, tuple(ordered)))
    return RuleSet(tuple(built), classes)


def _parse_rule(line, lineno, pass_name, classes, l1_inventory) -> RewriteRule:
    m = _RULE_RE.match(line)
    if not m:
        raise ParseError(lineno, "expected 'target / left _ right -> replacement ; priority'")
    target = _parse_pattern(m.group("target"), classes, lineno)
    if target.kind not in ("sym", "class"):
        raise ParseError(lineno, "rule target must be a symbol or a class")
    left, right = (), ()
    ctx = m.group("ctx")
    if ctx is not None and ctx.strip():
        tokens = ctx.split()
        if tokens.count("_") != 1:
            raise ParseError(lineno, "context must contain exactly one '_'")
        cut = tokens.index("_")
        left = tuple(_parse_pattern(t, classes, lineno) for t in tokens[:cut])
        right = tuple(_parse_pattern(t, classes, lineno) for t in tokens[cut + 1:])
        if any(p.kind == "edge" for p in left[1:]) or any(p.kind == "edge" for p in right[:-1]):
            raise ParseError(lineno, "word edge '#' must be the outermost context item")
    replacement = tuple(t for t in m.group("repl").split() if t != "∅")
    targets = classes[target.value] if target.kind == "class" else {target.value}
    for sym in replacement:
        produced = targets if sym == COPY else {sym}
        for s in produced:
            if s not in l1_inventory:
                raise ParseError(lineno, f"replacement symbol {s!r} is not a Korean phoneme")
    prio = int(m.group("prio")) if m.group("prio") else 0
    return RewriteRule(f"{pass_name}:{lineno}", target, left, right, replacement, prio)


def load_rules(path, l1_inventory: Optional[PhonemeInventory] = None) -> RuleSet:
    assets.verify(path)
    return parse_rules(Path(path).read_text(encoding="utf-8"), l1_inventory)


@lru_cache(maxsize=None)
def default_rules() -> RuleSet:
    return load_rules(assets.asset_path(assets.RULES))


def _context_ok(symbols, i, rule, classes) -> bool:
    j = i - 1
    for pat in reversed(rule.left_ctx):
        sym = symbols[j] if j >= 0 else None
        if not pat.matches(sym, classes):
            return False
        j -= 1
    j = i + 1
    for pat in rule.right_ctx:
        sym = symbols[j] if j < len(symbols) else None
        if not pat.matches(sym, classes):
            return False
        j += 1
    return True


def apply_pass(symbols: Sequence[str], rule_pass: RulePass, classes) -> list[str]:
    out = []
    for i, sym in enumerate(symbols):
        for rule in rule_pass.rules:
            if rule.target.matches(sym, classes) and _context_ok(symbols, i, rule, classes):
                out.extend(sym if r == COPY else r for r in rule.replacement)
                break
        else:
            out.append(sym)
    return out


def adapt_symbols(symbols: Sequence[str], rules: RuleSet, trace=None) -> list[str]:
    """Run every pass over a list of symbol strings.

    If ``trace`` is a list, ``(pass_name, output)`` pairs are appended to it.
    """
    current = list(symbols)
    for rule_pass in rules.passes:
        current = apply_pass(current, rule_pass, rules.classes)
        if trace is not None:
            trace.append((rule_pass.name, list(current)))
    return current


def adapt(p_l2: PhonemeSequence, rules: Optional[RuleSet] = None,
          l1_inventory: Optional[PhonemeInventory] = None) -> PhonemeSequence:
    """Map an English phoneme sequence onto a Korean-legal one."""
    rules = rules or default_rules()
    l1_inventory = l1_inventory or default_inventory(Language.L1_KO)
    out = adapt_symbols(p_l2.symbols, rules)
    missing = [s for s in out if s not in l1_inventory]
    if missing:
        raise NoRuleApplicable(missing[0])
    return PhonemeSequence(tuple(l1_inventory[s] for s in out), l1_inventory.language_tag)


def transliterate(l2_ipa: str, rules: Optional[RuleSet] = None) -> PhonemeSequence:
    """Normalize, tokenize and adapt a raw English IPA string."""
    seq = parse_ipa(normalize_ipa(l2_ipa, strip_prosody=True), default_inventory(Language.L2_EN))
    return adapt(seq, rules)


# -- evaluation ---------------------------------------------------------------

def levenshtein(a: Sequence, b: Sequence) -> int:
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, 1):
        cur = [i] + [0] * len(b)
        for j, y in enumerate(b, 1):
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y))
        prev = cur
    return prev[-1]


def _symbols(seq):
    return seq.symbols if isinstance(seq, PhonemeSequence) else tuple(seq)


def cer(hyp, ref) -> float:
    """Token-level edit distance divided by the reference length."""
    h, r = _symbols(hyp), _symbols(ref)
    if not r:
        if h:
            raise EmptyReference("reference is empty but hypothesis is not")
        return 0.0
    return levenshtein(h, r) / len(r)


def emr(pairs) -> float:
    """Fraction of (hyp, ref) pairs that match exactly."""
    pairs = list(pairs)
    if not pairs:
        raise EmptyList("exact match rate needs at least one pair")
    return sum(_symbols(h) == _symbols(r) for h, r in pairs) / len(pairs)


def mean_cer(pairs) -> float:
    pairs = list(pairs)
    if not pairs:
        raise EmptyList("CER needs at least one pair")
    return sum(cer(h, r) for h, r in pairs) / len(pairs)


# -- parallel corpus ----------------------------------------------------------

CORPUS_COLUMNS = ("l2_word", "l2_ipa", "l1_gold_ipa", "l1_syllables")


@dataclass(frozen=True)
class ParallelPair:
    l2_word: str
    l2_ipa: PhonemeSequence
    gold_l1_ipa: PhonemeSequence
    gold_syllables: Optional[tuple[PhonemeSequence, ...]] = None
    line: int = 0


def _parse_at(text, inventory, lineno, strip_prosody):
    try:
        return parse_ipa(normalize_ipa(text, strip_prosody=strip_prosody), inventory)
    except UnknownSymbol as exc:
        raise InventoryError(lineno, exc.fragment) from None


def load_parallel_corpus(path, l2_inventory=None, l1_inventory=None) -> list[ParallelPair]:
    """Read a tab-separated corpus with a required header row."""
    l2_inventory = l2_inventory or default_inventory(Language.L2_EN)
    l1_inventory = l1_inventory or default_inventory(Language.L1_KO)
    pairs = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter="\t", quoting=csv.QUOTE_NONE)
        header = next(reader, None)
        if header is None or tuple(c.strip() for c in header[:3]) != CORPUS_COLUMNS[:3]:
            raise ParseError(1, f"header must be {' '.join(CORPUS_COLUMNS)}")
        for lineno, row in enumerate(reader, 2):
            if not row or not "".join(row).strip():
                continue
            if len(row) not in (3, 4):
                raise ParseError(lineno, f"expected 3 or 4 columns, got {len(row)}")
            word = row[0].strip()
            if not word:
                raise ParseError(lineno, "empty l2_word")
            l2 = _parse_at(row[1].strip(), l2_inventory, lineno, True)
            gold = _parse_at(row[2].strip(), l1_inventory, lineno, False)
            sylls = None
            if len(row) == 4 and row[3].strip():
                sylls = tuple(_parse_at(s, l1_inventory, lineno, False)
                              for s in row[3].strip().split("."))
                flat = tuple(sym for s in sylls for sym in s.symbols)
                if flat != gold.symbols:
                    raise ParseError(lineno, "syllables do not concatenate to the gold IPA")
            pairs.append(ParallelPair(word, l2, gold, sylls, lineno))
    return pairs
