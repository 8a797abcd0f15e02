"""Deterministic rendering of comparisons, program reports and validations.

Three output formats share one reserved delimiter (``|``):

* ``table``      fixed-width text for terminals,
* ``delimited``  pipe-separated rows for spreadsheets and diffing,
* ``structured`` a key-value document that parses back into GmiResult
  values (4-decimal fixed-point).

All numeric cells are rendered to four decimals with round-half-even.
Identical inputs render to identical bytes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import MismatchedProgram, ParseError
from .ingest import Qualifier, ValidationReport
from .schema import Category
from .scoring import AuditRecord, GmiResult, Stage

FORMATS = ("table", "delimited", "structured")

_ABSENT = "n.a."


def _fmt(x: float | None) -> str:
    return _ABSENT if x is None else format(x, ".4f")


@dataclass(frozen=True)
class ComparisonReport:
    programs: tuple[str, ...]
    gmi_row: dict[str, float]
    category_rows: dict[Category, dict[str, float | None]]
    stages: dict[str, Stage]
    exclusions: tuple[tuple[str, str, str, str], ...]  # program, indicator, raw, reason
    footnotes: tuple[str, ...]


def build_comparison(results: Sequence[GmiResult],
                     notes: Sequence[str] = ()) -> ComparisonReport:
    if not results:
        raise ValueError("at least one result is required")
    programs = tuple(r.program for r in results)
    gmi_row = {r.program: r.gmi for r in results}
    category_rows = {
        cat: {r.program: r.normalized_category_scores.get(cat) for r in results}
        for cat in Category
    }
    stages = {r.program: r.stage for r in results}

    exclusions: list[tuple[str, str, str, str]] = []
    footnotes: list[str] = []
    for result in results:
        for rec in result.audit:
            if rec.exclusion is not None:
                exclusions.append((result.program, rec.indicator, rec.raw, rec.exclusion))
            elif rec.qualifier in (Qualifier.APPROX_UPPER_BOUND, Qualifier.APPROX_LOWER_BOUND):
                footnotes.append(
                    f"{result.program} {rec.indicator} {rec.raw!r} scored at face value "
                    f"({rec.qualifier.value})"
                )
            if rec.exclusion == "token-unconverted":
                footnotes.append(
                    f"{result.program} {rec.indicator} {rec.raw!r} excluded: "
                    "token amount with no conversion rate supplied"
                )
    footnotes.extend(notes)
    return ComparisonReport(
        programs=programs,
        gmi_row=gmi_row,
        category_rows=category_rows,
        stages=stages,
        exclusions=tuple(exclusions),
        footnotes=tuple(footnotes),
    )


def _table_rows(report: ComparisonReport) -> list[list[str]]:
    rows = [["ID", *report.programs]]
    rows.append(["GMI", *(_fmt(report.gmi_row[p]) for p in report.programs)])
    for cat in Category:
        row = report.category_rows[cat]
        rows.append([cat.code, *(_fmt(row[p]) for p in report.programs)])
    return rows


def _render_table(report: ComparisonReport) -> str:
    rows = _table_rows(report)
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = []
    for row in rows:
        lines.append(" | ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    lines.append("")
    lines.append("Stages:")
    for program in report.programs:
        lines.append(f"  {program}: {report.stages[program].value}")
    lines.append("")
    lines.append("Exclusions:")
    if report.exclusions:
        for program, indicator, raw, reason in report.exclusions:
            lines.append(f"  {program} | {indicator} | {raw} | {reason}")
    else:
        lines.append("  (none)")
    lines.append("")
    lines.append("Footnotes:")
    if report.footnotes:
        for note in report.footnotes:
            lines.append(f"  - {note}")
    else:
        lines.append("  (none)")
    return "\n".join(lines) + "\n"


def _render_delimited(report: ComparisonReport) -> str:
    lines = ["|".join(row) for row in _table_rows(report)]
    lines.append("|".join(["STAGE", *(report.stages[p].value for p in report.programs)]))
    for program, indicator, raw, reason in report.exclusions:
        lines.append(f"EXCLUDED|{program}|{indicator}|{raw}|{reason}")
    for note in report.footnotes:
        lines.append(f"NOTE|{note}")
    return "\n".join(lines) + "\n"


def _render_structured(results: Sequence[GmiResult], notes: Sequence[str]) -> str:
    lines = ["format|gmi-comparison|1"]
    lines.append("|".join(["programs", *(r.program for r in results)]))
    for result in results:
        lines.append("")
        lines.append(f"program|{result.program}")
        lines.append(f"gmi|{_fmt(result.gmi)}")
        lines.append(f"stage|{result.stage.value}")
        for cat in Category:
            if cat in result.category_scores:
                lines.append(f"category|{cat.code}|input|{_fmt(result.category_scores[cat])}")
            if cat in result.normalized_category_scores:
                lines.append(
                    f"category|{cat.code}|score|"
                    f"{_fmt(result.normalized_category_scores[cat])}"
                )
        for rec in result.audit:
            lo = "" if rec.minimum is None else _fmt(rec.minimum)
            hi = "" if rec.maximum is None else _fmt(rec.maximum)
            if rec.exclusion is None:
                tail = f"score|{_fmt(rec.score)}"
            else:
                tail = f"excluded|{rec.exclusion}"
            lines.append(
                f"audit|{rec.indicator}|{rec.raw}|{lo}|{hi}|{tail}|{rec.qualifier.value}"
            )
    if notes:
        lines.append("")
        for note in notes:
            lines.append(f"note|{note}")
    return "\n".join(lines) + "\n"


def render_comparison(results: Sequence[GmiResult], fmt: str = "table",
                      notes: Sequence[str] = ()) -> bytes:
    """Render the Mantle-style comparison: composite row first, then the six
    category rows in FAO/PSO/GOV/EFI/TAC/COM order, programs in input order.
    """
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")
    if fmt == "structured":
        return _render_structured(results, notes).encode("utf-8")
    report = build_comparison(results, notes)
    if fmt == "table":
        return _render_table(report).encode("utf-8")
    return _render_delimited(report).encode("utf-8")


def parse_structured(data: bytes | str) -> list[GmiResult]:
    """Parse the structured format back into GmiResult values."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    lines = [ln for ln in data.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("format|gmi-comparison"):
        raise ParseError("not a structured comparison document")

    results: list[GmiResult] = []
    current: dict | None = None

    def _close():
        if current is None:
            return
        results.append(
            GmiResult(
                program=current["program"],
                category_scores=current["inputs"],
                normalized_category_scores=current["scores"],
                gmi=current["gmi"],
                stage=current["stage"],
                audit=tuple(current["audit"]),
            )
        )

    for line in lines[1:]:
        fields = line.split("|")
        key = fields[0]
        if key in ("programs", "note"):
            continue
        if key == "program":
            _close()
            current = {"program": fields[1], "inputs": {}, "scores": {},
                       "gmi": 0.0, "stage": Stage.EXPERIMENTAL, "audit": []}
        elif current is None:
            raise ParseError(f"record {key!r} before any program block")
        elif key == "gmi":
            current["gmi"] = float(fields[1])
        elif key == "stage":
            current["stage"] = Stage(fields[1])
        elif key == "category":
            cat = Category.from_code(fields[1])
            bucket = "inputs" if fields[2] == "input" else "scores"
            current[bucket][cat] = float(fields[3])
        elif key == "audit":
            if len(fields) != 8:
                raise ParseError(f"malformed audit record: {line!r}")
            _, indicator, raw, lo, hi, mode, payload, qualifier = fields
            score = float(payload) if mode == "score" else None
            exclusion = payload if mode == "excluded" else None
            if mode not in ("score", "excluded"):
                raise ParseError(f"malformed audit record: {line!r}")
            current["audit"].append(
                AuditRecord(
                    indicator=indicator,
                    raw=raw,
                    minimum=float(lo) if lo else None,
                    maximum=float(hi) if hi else None,
                    score=score,
                    exclusion=exclusion,
                    qualifier=Qualifier(qualifier),
                )
            )
        else:
            raise ParseError(f"unknown record {key!r}")
    _close()
    return results


# ---------------------------------------------------------------------------
# Per-program report and validation rendering
# ---------------------------------------------------------------------------


def render_program_report(result: GmiResult, validation: ValidationReport) -> bytes:
    """One program's findings: composite, stage, category scores, exclusions
    and qualifier footnotes."""
    if result.program != validation.program:
        raise MismatchedProgram(result.program, validation.program)

    lines = [
        f"Program: {result.program}",
        f"Composite: {_fmt(result.gmi)}",
        f"Stage: {result.stage.value}",
        "",
        "Category scores (normalized):",
    ]
    for cat in Category:
        lines.append(f"  {cat.code} | {_fmt(result.normalized_category_scores.get(cat))}")

    lines.append("")
    lines.append("Data coverage:")
    for cat in Category:
        cv = validation.categories[cat]
        flag = "yes" if cv.scorable else "no"
        lines.append(
            f"  {cat.code}: scorable={flag} | included: {_ids(cv.scorable_present)} | "
            f"missing: {_ids(cv.missing)} | non-scorable: {_ids(cv.non_scorable)} | "
            f"token-unconverted: {_ids(cv.token_unconverted)} | "
            f"rubric responses: {cv.rubric_responses}"
        )

    lines.append("")
    lines.append("Exclusions:")
    excluded = [rec for rec in result.audit if rec.exclusion is not None]
    if excluded:
        for rec in excluded:
            lines.append(f"  {rec.indicator} | {rec.raw} | {rec.exclusion}")
    else:
        lines.append("  (none)")

    lines.append("")
    lines.append("Footnotes:")
    qualified = [
        rec for rec in result.audit
        if rec.exclusion is None
        and rec.qualifier in (Qualifier.APPROX_UPPER_BOUND, Qualifier.APPROX_LOWER_BOUND)
    ]
    if qualified:
        for rec in qualified:
            lines.append(f"  - {rec.indicator} {rec.raw!r} scored at face value "
                         f"({rec.qualifier.value})")
    else:
        lines.append("  (none)")
    return ("\n".join(lines) + "\n").encode("utf-8")


def _ids(ids: tuple[str, ...]) -> str:
    return ", ".join(ids) if ids else "-"


def render_validation(report: ValidationReport) -> bytes:
    lines = [f"Program: {report.program}"]
    for cat in Category:
        cv = report.categories[cat]
        flag = "yes" if cv.scorable else "NO"
        lines.append(
            f"  {cat.code}: scorable={flag} | included: {_ids(cv.scorable_present)} | "
            f"missing: {_ids(cv.missing)} | non-scorable: {_ids(cv.non_scorable)} | "
            f"token-unconverted: {_ids(cv.token_unconverted)} | "
            f"rubric responses: {cv.rubric_responses}"
        )
    if not report.all_scorable:
        names = ", ".join(cat.code for cat in report.unscorable_categories())
        lines.append(f"  => unscorable categories: {names}")
    return ("\n".join(lines) + "\n").encode("utf-8")
