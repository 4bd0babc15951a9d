import io
import json
import subprocess
import sys

import pytest

from mnemokey.cli import main

SQUANDER = "squander\tskwɑndər\t낭비하다,허비하다\n"


def run(argv, stdin=""):
    out, err = io.StringIO(), io.StringIO()
    code = main(argv, io.StringIO(stdin), out, err)
    return code, out.getvalue(), err.getvalue()


def test_transliterate():
    assert run(["transliterate"], SQUANDER) == (0, "squander\tsɯkʰwantʌ\n", "")


def test_syllabify():
    code, out, _ = run(["syllabify"], SQUANDER)
    assert code == 0 and out == "squander\tsɯkʰwantʌ\tsɯ.kʰwan.tʌ\n"


def test_syllabify_l1():
    code, out, _ = run(["syllabify", "--l1"], "오답시\totʰapsi\n")
    assert code == 0 and out.split("\t")[2].strip() == "o.tʰap.si"


def test_syllabify_l1_failure_is_partial():
    code, out, _ = run(["syllabify", "--l1"], "x\tkkkk\n")
    assert code == 1 and "ERROR" in out


def test_retrieve():
    code, out, _ = run(["retrieve"], SQUANDER)
    rec = json.loads(out)
    assert code == 0
    assert [k["surface"] for k in rec["keywords"]] == ["세관", "더"]
    assert rec["segments"] == ["sɯkʰwan", "tʌ"] and rec["cues"] == []


def test_empty_input():
    assert run(["pipeline"], "") == (0, "", "")
    assert run(["transliterate"], "# only a comment\n\n") == (0, "", "")


def test_unknown_symbol_is_ingestion_error():
    code, out, err = run(["pipeline"], "x\tskwɑ%ndər\tg\n")
    assert code == 2 and out == ""
    assert err == "error: line 1: unknown symbol '%' in 'skwɑ%ndər'\n"


def test_missing_input_file(tmp_path):
    code, _, err = run(["transliterate", str(tmp_path / "none.tsv")])
    assert code == 2 and err.startswith("error:")


def test_bad_config(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text('{"client": {"api_key": "x"}}', encoding="utf-8")
    code, _, err = run(["transliterate", "--config", str(cfg)], SQUANDER)
    assert code == 2 and "environment" in err


def test_bad_records():
    code, _, err = run(["generate"], "not json\n")
    assert code == 2 and "line 1" in err


def test_live_without_endpoint():
    code, out, err = run(["pipeline", "--live"], SQUANDER)
    assert code == 2 and out == "" and "endpoint" in err


def test_partial_failure():
    code, out, _ = run(["pipeline"], SQUANDER + "desk\tdɛsk\n")
    recs = [json.loads(l) for l in out.splitlines()]
    assert code == 1
    assert recs[0]["error"] is None and recs[1]["error"]["type"] == "MissingGloss"


def test_pipeline_reproducible_and_bounded(data_dir):
    text = (data_dir / "words.tsv").read_text(encoding="utf-8")
    first = run(["pipeline", "--n", "4"], text)
    assert first == run(["pipeline", "--n", "4"], text)
    for line in first[1].splitlines():
        rec = json.loads(line)
        ccs = [c["cc"] for c in rec["cues"]]
        assert 1 <= len(ccs) <= 4 and ccs == sorted(ccs, reverse=True)
        assert rec["chosen_cue"] == rec["cues"][0]["text"]


def test_seed_changes_cues():
    a = run(["pipeline", "--seed", "1"], SQUANDER)[1]
    b = run(["pipeline", "--seed", "2"], SQUANDER)[1]
    assert a != b


def test_retrieve_then_generate_equals_pipeline(data_dir):
    text = (data_dir / "words.tsv").read_text(encoding="utf-8")
    _, retrieved, _ = run(["retrieve"], text)
    _, generated, _ = run(["generate"], retrieved)
    _, piped, _ = run(["pipeline"], text)
    assert generated == piped


def test_batch_independence():
    one = run(["pipeline"], SQUANDER)[1]
    two = run(["pipeline"], SQUANDER + "think\tθɪŋk\t생각하다\n")[1]
    assert two.splitlines()[0] == one.strip()


def test_output_file(tmp_path):
    target = tmp_path / "out.jsonl"
    assert run(["retrieve", "-o", str(target)], SQUANDER)[:2] == (0, "")
    assert json.loads(target.read_text(encoding="utf-8"))["l2_word"] == "squander"


def test_table_format():
    code, out, _ = run(["pipeline", "--format", "table"], SQUANDER)
    lines = out.splitlines()
    assert code == 0 and lines[0].split()[:3] == ["word", "adapted", "syllables"]
    assert "세관 더" in lines[2]


@pytest.mark.parametrize("name, omission, modification", [
    ("omission_record.jsonl", 1 / 3, 0.0),
    ("modification_record.jsonl", 0.0, 1 / 3),
])
def test_evaluate_fixtures(data_dir, name, omission, modification):
    code, out, _ = run(["evaluate", str(data_dir / name)])
    report = json.loads(out)
    assert code == 0
    assert report["omission_rate"] == pytest.approx(omission, abs=1e-12)
    assert report["modification_rate"] == pytest.approx(modification, abs=1e-12)


def test_evaluate_with_gold_and_figures(data_dir, tmp_path):
    _, records, _ = run(["pipeline"], SQUANDER)
    figs = tmp_path / "figs"
    code, out, err = run(["evaluate", "--gold", str(data_dir / "boundary_gold.tsv"), "--figures", str(figs)],
                         records)
    report = json.loads(out)
    assert code == 0
    assert report["stages"]["cer"] == 0.0 and report["stages"]["emr"] == 1.0
    assert report["stages"]["boundary_f1"] == 1.0
    assert report["omission_rate"] == 0.0 and report["modification_rate"] == 0.0
    pngs = sorted(p.name for p in figs.iterdir())
    assert pngs == ["keyword_status.png", "perplexity.png", "scores.png"]
    assert all((figs / p).read_bytes()[:4] == b"\x89PNG" for p in pngs)
    assert err.count("wrote ") == 3


def test_evaluate_parallel_fixture(data_dir):
    _, records, _ = run(["pipeline"], SQUANDER)
    _, out, _ = run(["evaluate", "--gold", str(data_dir / "parallel_5.tsv")], records)
    stages = json.loads(out)["stages"]
    assert stages["cer"] == pytest.approx(8 / 75, abs=1e-9)
    assert stages["emr"] == pytest.approx(3 / 5, abs=1e-9)


def test_evaluate_skips_incomplete():
    _, out, _ = run(["pipeline"], SQUANDER + "desk\tdɛsk\n")
    code, report, _ = run(["evaluate"], out)
    rep = json.loads(report)
    assert code == 1 and rep["n_items"] == 1 and rep["stages"]["skipped_records"] == 1


def test_evaluate_nothing_complete():
    _, out, _ = run(["retrieve"], SQUANDER)
    code, _, err = run(["evaluate"], out)
    assert code == 1 and "no complete records" in err


def test_console_script():
    proc = subprocess.run([sys.executable, "-m", "mnemokey.cli", "transliterate"], input=SQUANDER,
                          capture_output=True, text=True, encoding="utf-8")
    assert proc.returncode == 0 and proc.stdout == "squander\tsɯkʰwantʌ\n"
