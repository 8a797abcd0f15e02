"""Command-line behaviour: exit codes, modes, determinism."""

from __future__ import annotations

import subprocess
import sys

import pytest

from gmi.bundled import bundled_category_table_path, bundled_program_paths
from gmi.cli import main
from gmi.rubric import builtin_template, collect_responses, load_responses

CATEGORY_TABLE = str(bundled_category_table_path())
PROGRAM_FILES = [str(p) for p in bundled_program_paths()]


def test_validate_bundled_reports_unscorable_categories(capsys):
    # GOV has only code-valued cells and links in the bundled data, and the
    # Optimism transparency figures are all placeholders, so the gate fails.
    code = main(["validate", *PROGRAM_FILES])
    out = capsys.readouterr().out
    assert code == 1
    assert "unscorable categories: GOV" in out
    assert "unscorable categories: GOV, TAC" in out


def test_validate_rejects_out_of_range_rubric(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("program|X\ngovernance|9\n", encoding="utf-8")
    code = main(["validate", str(bad)])
    err = capsys.readouterr().err
    assert code == 2
    assert "RubricRangeError" in err


def test_validate_without_inputs_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["validate"])
    assert exc.value.code == 2


def test_score_precomputed_reproduces_published_composites(capsys):
    code = main(["score", CATEGORY_TABLE, "--mode", "precomputed-categories",
                 "--format", "delimited"])
    out = capsys.readouterr().out
    assert code == 0
    gmi_row = next(ln for ln in out.splitlines() if ln.startswith("GMI|"))
    cells = gmi_row.split("|")[1:]
    assert cells == ["1.8415", "3.2945", "3.9311", "1.1807"]


def test_score_single_program_precomputed(tmp_path, capsys):
    table = tmp_path / "one.txt"
    table.write_text(
        "program|FAO|PSO|GOV|EFI|TAC|COM\nSolo|1|2|3|4|5|6\n", encoding="utf-8"
    )
    code = main(["score", str(table), "--mode", "precomputed-categories",
                 "--format", "delimited"])
    out = capsys.readouterr().out
    assert code == 0
    assert "GMI|3.0000" in out
    assert "STAGE|Developmental" in out


def test_score_raw_without_allow_partial_names_missing_pairs(capsys):
    code = main(["score", *PROGRAM_FILES])
    err = capsys.readouterr().err
    assert code == 1
    assert "PartialDataError" in err
    assert "(Taiko, GOV)" in err


def test_score_raw_allow_partial_succeeds(capsys):
    code = main(["score", *PROGRAM_FILES, "--allow-partial"])
    out = capsys.readouterr().out
    assert code == 0
    assert out.splitlines()[0].startswith("ID")


def test_compare_is_alias_of_score(capsys):
    main(["score", *PROGRAM_FILES, "--allow-partial", "--format", "delimited"])
    score_out = capsys.readouterr().out
    main(["compare", *PROGRAM_FILES, "--allow-partial", "--format", "delimited"])
    compare_out = capsys.readouterr().out
    assert score_out == compare_out


def test_precomputed_mode_forbids_rates(tmp_path, capsys):
    rates = tmp_path / "rates.txt"
    rates.write_text("ARB|1.0\n", encoding="utf-8")
    with pytest.raises(SystemExit) as exc:
        main(["score", CATEGORY_TABLE, "--mode", "precomputed-categories",
              "--rates", str(rates)])
    assert exc.value.code == 2


def test_precomputed_mode_takes_one_input(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["score", CATEGORY_TABLE, CATEGORY_TABLE,
              "--mode", "precomputed-categories"])
    assert exc.value.code == 2


def test_rates_change_raw_scores(tmp_path, capsys):
    rates = tmp_path / "rates.txt"
    rates.write_text("ARB|1.0\nOP|1.0\n", encoding="utf-8")
    main(["score", *PROGRAM_FILES, "--allow-partial", "--format", "delimited"])
    without = capsys.readouterr().out
    code = main(["score", *PROGRAM_FILES, "--allow-partial", "--rates", str(rates),
                 "--format", "delimited"])
    with_rates = capsys.readouterr().out
    assert code == 0
    assert with_rates != without
    assert "token-unconverted" not in with_rates


def test_missing_file_is_input_error(capsys):
    code = main(["score", "does-not-exist.txt"])
    assert code == 2
    assert "error" in capsys.readouterr().err.lower()


def test_schema_flag_and_env_override(tmp_path, capsys, monkeypatch):
    main(["schema", "dump"])
    dumped = capsys.readouterr().out
    custom = tmp_path / "schema.txt"
    custom.write_text(dumped, encoding="utf-8")

    code = main(["schema", "dump", "--schema", str(custom)])
    assert code == 0
    assert capsys.readouterr().out == dumped

    monkeypatch.setenv("GMI_SCHEMA", str(custom))
    code = main(["schema", "dump"])
    assert code == 0
    assert capsys.readouterr().out == dumped

    monkeypatch.setenv("GMI_SCHEMA", str(tmp_path / "nope.txt"))
    code = main(["schema", "dump"])
    assert code == 2


def test_broken_schema_file_is_input_error(tmp_path, capsys):
    broken = tmp_path / "broken.txt"
    broken.write_text("id|category|kind\n", encoding="utf-8")
    code = main(["validate", PROGRAM_FILES[0], "--schema", str(broken)])
    assert code == 2
    assert "ParseError" in capsys.readouterr().err


def test_survey_template_round_trip(capsys):
    code = main(["survey", "template"])
    template_text = capsys.readouterr().out
    assert code == 0
    for criterion in builtin_template().criteria:
        assert criterion.name in template_text
        assert f"{criterion.id}|" in template_text

    filled = [
        line + "4" if line and not line.startswith("#") else line
        for line in template_text.splitlines()
    ]
    answers = load_responses("\n".join(filled))
    grouped = collect_responses(builtin_template(), answers)
    assert sum(len(v) for v in grouped.values()) == 6


def test_survey_template_is_deterministic(capsys):
    main(["survey", "template"])
    first = capsys.readouterr().out
    main(["survey", "template"])
    assert capsys.readouterr().out == first


def test_out_flag_writes_identical_bytes(tmp_path):
    out1 = tmp_path / "a.txt"
    out2 = tmp_path / "b.txt"
    for out in (out1, out2):
        code = main(["score", CATEGORY_TABLE, "--mode", "precomputed-categories",
                     "--format", "structured", "--out", str(out)])
        assert code == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_console_entry_point_runs():
    result = subprocess.run(
        [sys.executable, "-m", "gmi.cli", "score", CATEGORY_TABLE,
         "--mode", "precomputed-categories"],
        capture_output=True,
    )
    assert result.returncode == 0
    assert b"GMI" in result.stdout
