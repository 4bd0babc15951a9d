"""Command-line entry point.

Word input is tab-separated ``word<TAB>ipa[<TAB>gloss,gloss]``, one word per
line.  Machine output is one record per line; ``--format table`` renders an
aligned human-readable view instead.  Exit status is 0 on success, 1 when
some records failed (each failure is recorded on its record) and 2 on
configuration or ingestion errors.
"""

from __future__ import annotations

import argparse
import sys
from contextlib import contextmanager

from .config import load_config
from .errors import (
    ChecksumError, ConfigError, DuplicateEntry, EmptyLexicon, InventoryError, MnemoError, ParseError,
)
from .metrics import build_report, format_report_table, stage_metrics
from .pipeline import InputError, Pipeline
from .translit import load_parallel_corpus

EXIT_OK, EXIT_PARTIAL, EXIT_CONFIG = 0, 1, 2
INGESTION_ERRORS = (ConfigError, ParseError, InventoryError, DuplicateEntry, ChecksumError,
                    EmptyLexicon, InputError, OSError)


def _common(parser):
    parser.add_argument("input", nargs="?", default="-", help="input file (default: stdin)")
    parser.add_argument("-o", "--output", default="-", help="output file (default: stdout)")
    parser.add_argument("--config", help="JSON configuration file")
    parser.add_argument("--lexicon", help="keyword lexicon TSV (overrides the config)")
    parser.add_argument("--rules", help="adaptation rule file (overrides the config)")
    parser.add_argument("--seed", type=int, help="seed for the offline generator")
    parser.add_argument("--n", type=int, help="number of cues to over-generate per word")
    parser.add_argument("--max-k", type=int, dest="max_k", help="maximum number of keywords per word")
    parser.add_argument("--concurrency", type=int, help="maximum words / client calls in flight")
    mode = parser.add_mutually_exclusive_group()
    mode.add_argument("--stub", dest="live", action="store_false",
                      help="use the deterministic offline generator (default)")
    mode.add_argument("--live", dest="live", action="store_true",
                      help="call the HTTP generator named in the config; key read from the environment")
    parser.set_defaults(live=False)
    parser.add_argument("--format", choices=("records", "table"), default="records")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mnemokey", description="Keyword mnemonics for English words.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("transliterate", help="adapt English IPA to Korean IPA")
    _common(p)
    p = sub.add_parser("syllabify", help="adapt and split into Korean syllables")
    _common(p)
    p.add_argument("--l1", action="store_true", help="input IPA is already Korean; skip adaptation")
    p = sub.add_parser("retrieve", help="keyword sequences without cues")
    _common(p)
    p = sub.add_parser("generate", help="add ranked verbal cues to retrieve output")
    _common(p)
    p = sub.add_parser("pipeline", help="retrieve and generate in one pass")
    _common(p)
    p = sub.add_parser("evaluate", help="score finished records and, optionally, the early stages")
    _common(p)
    p.add_argument("--gold", help="parallel TSV (l2_word l2_ipa l1_gold_ipa [l1_syllables]) for CER/EMR/F1")
    p.add_argument("--figures", metavar="DIR", help="also write PNG figures into DIR")
    return parser


@contextmanager
def _open_in(name, stdin):
    if name == "-":
        yield stdin
    else:
        with open(name, encoding="utf-8") as fh:
            yield fh


def _table(rows, header):
    rows = [[str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in [header] + rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def _result_table(results):
    rows = []
    for r in results:
        cue = r.chosen.cue.text if r.chosen else ""
        rows.append([r.l2_word, r.adapted_ipa or "", ".".join(r.syllables),
                     " | ".join(r.segments), " ".join(k.surface for k in r.keywords),
                     f"{r.seq_score:.4f}" if r.seq_score is not None else "",
                     cue if r.ok else f"ERROR {r.error['type']}: {r.error['message']}"])
    return _table(rows, ["word", "adapted", "syllables", "segments", "keywords", "score", "cue"])


def _cmd_transliterate(pipe, args, fin):
    words = pipe.read_words(fin)
    rows, failed = [], 0
    for w in words:
        try:
            adapted = pipe.adapt(w.ipa)
            sylls = pipe.syllabify(adapted) if args.command == "syllabify" else None
        except MnemoError as exc:
            failed += 1
            rows.append([w.word, "", f"ERROR {type(exc).__name__}: {exc}"] if args.command == "syllabify"
                        else [w.word, f"ERROR {type(exc).__name__}: {exc}"])
            continue
        rows.append([w.word, str(adapted), str(sylls)] if sylls is not None else [w.word, str(adapted)])
    return rows, failed


def _cmd_syllabify_l1(pipe, fin):
    rows, failed = [], 0
    for w in pipe.read_words(fin, l1=True):
        try:
            rows.append([w.word, str(w.ipa), str(pipe.syllabify(w.ipa))])
        except MnemoError as exc:
            failed += 1
            rows.append([w.word, str(w.ipa), f"ERROR {type(exc).__name__}: {exc}"])
    return rows, failed


def _evaluate(pipe, args, fin, out, err):
    results = pipe.read_records(fin)
    items, skipped = [], []
    for r in results:
        try:
            items.append(pipe.eval_item(r))
        except (ValueError, MnemoError):
            skipped.append(r.l2_word)
    if not items:
        err.write("error: no complete records to evaluate\n")
        return EXIT_PARTIAL
    report = build_report(items)
    if skipped:
        report.stages["skipped_records"] = len(skipped)
    if args.gold:
        pairs = load_parallel_corpus(args.gold, pipe.en_inventory, pipe.ko_inventory)
        report.stages.update(stage_metrics(pairs, pipe.rules))
    if args.format == "table":
        out.write(format_report_table(report) + "\n")
    else:
        out.write(report.to_json() + "\n")
    if args.figures:
        from .plotting import render_report
        for path in render_report(report, args.figures):
            err.write(f"wrote {path}\n")
    return EXIT_PARTIAL if skipped else EXIT_OK


def run(args, stdin, stdout, stderr) -> int:
    cfg = load_config(args.config).with_overrides(
        lexicon=args.lexicon, rules=args.rules, seed=args.seed, overgenerate_n=args.n,
        max_k=args.max_k, concurrency=args.concurrency)
    pipe = Pipeline(cfg, live=args.live)
    if args.live and args.command in ("generate", "pipeline"):
        pipe.client  # fail early on a missing endpoint
    with _open_in(args.input, stdin) as fin:
        lines = list(fin)
    buf = []
    if args.command == "evaluate":
        out = _Writer(args.output, stdout)
        try:
            return _evaluate(pipe, args, lines, out, stderr)
        finally:
            out.close()
    if args.command in ("transliterate", "syllabify"):
        if args.command == "syllabify" and args.l1:
            rows, failed = _cmd_syllabify_l1(pipe, lines)
        else:
            rows, failed = _cmd_transliterate(pipe, args, lines)
        if args.format == "table":
            header = ["word", "adapted", "syllables"][:len(rows[0])] if rows else []
            if rows:
                buf.append(_table(rows, header))
        else:
            buf.extend("\t".join(r) for r in rows)
    else:
        if args.command == "generate":
            results = pipe.generate_all(pipe.read_records(lines))
        else:
            words = pipe.read_words(lines)
            results = pipe.retrieve_all(words) if args.command == "retrieve" else pipe.run(words)
        failed = sum(not r.ok for r in results)
        if args.format == "table":
            if results:
                buf.append(_result_table(results))
        else:
            buf.extend(r.to_json() for r in results)
    out = _Writer(args.output, stdout)
    for line in buf:
        out.write(line + "\n")
    out.close()
    return EXIT_PARTIAL if failed else EXIT_OK


class _Writer:
    def __init__(self, name, stdout):
        self._fh = stdout if name == "-" else open(name, "w", encoding="utf-8")
        self._own = name != "-"

    def write(self, text):
        self._fh.write(text)

    def close(self):
        if self._own:
            self._fh.close()
        else:
            self._fh.flush()


def main(argv=None, stdin=None, stdout=None, stderr=None) -> int:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    for stream in (stdin, stdout, stderr):
        if hasattr(stream, "reconfigure"):
            stream.reconfigure(encoding="utf-8")
    args = build_parser().parse_args(argv)
    try:
        return run(args, stdin, stdout, stderr)
    except INGESTION_ERRORS as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
