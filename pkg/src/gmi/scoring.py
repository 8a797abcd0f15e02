"""Composite scoring: min-max normalization, equal-weight aggregation,
maturity classification.

The pipeline has four steps: per-indicator min-max scaling across the
program cohort, equal-weight aggregation inside each category (the rubric
channel counts as one element), a second min-max pass over the category
scores, and the composite as the plain sum of the six normalized category
scores (range 0..6).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import IO, Mapping, Sequence

from .errors import EmptyCategory, ParseError, PartialDataError, RubricRangeError
from .ingest import ProgramDataset, Qualifier, scoring_status
from .schema import Category, Direction, Schema

#: Width of the composite range: six categories, each normalized to [0, 1].
CATEGORY_COUNT = 6

_EPS = 1e-9


class Stage(Enum):
    EXPERIMENTAL = "Experimental"
    FOUNDATIONAL = "Foundational"
    DEVELOPMENTAL = "Developmental"
    ADVANCED = "Advanced"


# Four equal quartiles of [0, 6], half-open below the top. Configurable via
# the classify_maturity argument.
DEFAULT_STAGE_THRESHOLDS: tuple[tuple[float, Stage], ...] = (
    (1.5, Stage.EXPERIMENTAL),
    (3.0, Stage.FOUNDATIONAL),
    (4.5, Stage.DEVELOPMENTAL),
)


@dataclass(frozen=True)
class Excluded:
    reason: str  # missing | non-scorable | token-unconverted


@dataclass(frozen=True)
class AuditRecord:
    indicator: str
    raw: str
    minimum: float | None
    maximum: float | None
    score: float | None
    exclusion: str | None = None
    qualifier: Qualifier = Qualifier.EXACT


@dataclass(frozen=True)
class ScoreMatrix:
    programs: tuple[str, ...]
    entries: dict[tuple[str, str], float | Excluded]
    category_scores: dict[tuple[str, Category], float]


@dataclass(frozen=True)
class GmiResult:
    program: str
    category_scores: dict[Category, float]
    normalized_category_scores: dict[Category, float]
    gmi: float
    stage: Stage
    audit: tuple[AuditRecord, ...] = ()


def minmax_normalize(values: Mapping[str, float | None]) -> dict[str, float | Excluded]:
    """Min-max scale present values across programs.

    Missing entries become Excluded("missing") and do not influence the
    bounds. When all present values coincide (or only one is present) every
    present value maps to the neutral midpoint 0.5.
    """
    if not values:
        raise ValueError("at least one program is required")
    present = {p: v for p, v in values.items() if v is not None}
    out: dict[str, float | Excluded] = {}
    if present:
        lo = min(present.values())
        hi = max(present.values())
        degenerate = hi <= lo
        for program, value in values.items():
            if value is None:
                out[program] = Excluded("missing")
            elif degenerate:
                out[program] = 0.5
            else:
                out[program] = (value - lo) / (hi - lo)
    else:
        for program in values:
            out[program] = Excluded("missing")
    return out


def directional_score(normalized: float, direction: Direction) -> float:
    """Identity for higher-better, reflection for lower-better."""
    if direction is Direction.HIGHER_BETTER:
        return normalized
    if direction is Direction.LOWER_BETTER:
        return 1.0 - normalized
    raise ValueError("direction must be higher-better or lower-better")


def rubric_to_unit(score: int) -> float:
    """Map a 1..5 self-assessment answer onto [0, 1]."""
    if score not in (1, 2, 3, 4, 5):
        raise RubricRangeError(score)
    return (score - 1) / 4


def rubric_category_score(responses: Sequence[int]) -> float:
    """Equal-weight mean of the unit-mapped answers for one category."""
    if not responses:
        raise EmptyCategory("no rubric responses for this category")
    return sum(rubric_to_unit(s) for s in responses) / len(responses)


def score_category(indicator_scores: Sequence[float],
                   rubric_score: float | None = None) -> float:
    """Unweighted mean over indicator scores plus the rubric score, which
    counts as one element."""
    inputs = list(indicator_scores)
    if rubric_score is not None:
        inputs.append(rubric_score)
    if not inputs:
        raise EmptyCategory("category has no scorable inputs")
    return sum(inputs) / len(inputs)


def classify_maturity(
    gmi: float,
    thresholds: tuple[tuple[float, Stage], ...] = DEFAULT_STAGE_THRESHOLDS,
) -> Stage:
    if gmi < -_EPS or gmi > CATEGORY_COUNT + _EPS:
        raise ValueError(f"composite {gmi} outside [0, {CATEGORY_COUNT}]")
    for upper, stage in thresholds:
        if gmi < upper:
            return stage
    return Stage.ADVANCED


def _format_score(x: float) -> str:
    return format(x, ".4f")


def compute_gmi(category_scores: Mapping[str, Mapping[Category, float]],
                allow_partial: bool = False) -> dict[str, GmiResult]:
    """Normalize category scores across programs and sum into composites.

    Without allow_partial, every program must carry all six categories;
    otherwise PartialDataError lists the absent (program, category) pairs.
    With allow_partial, a program's composite is rescaled by
    6 / (present category count).
    """
    if not category_scores:
        raise ValueError("at least one program is required")
    programs = list(category_scores)
    missing = [
        (program, cat.code)
        for program in programs
        for cat in Category
        if cat not in category_scores[program]
    ]
    if missing and not allow_partial:
        raise PartialDataError(missing)

    normalized: dict[Category, dict[str, float | Excluded]] = {}
    for cat in Category:
        column = {p: category_scores[p].get(cat) for p in programs}
        normalized[cat] = minmax_normalize(column)

    results: dict[str, GmiResult] = {}
    for program in programs:
        per_cat: dict[Category, float] = {}
        audit: list[AuditRecord] = []
        for cat in Category:
            roll_up = f"{cat.code}-QN"
            entry = normalized[cat][program]
            column = [v for v in (category_scores[p].get(cat) for p in programs)
                      if v is not None]
            lo = min(column) if column else None
            hi = max(column) if column else None
            if isinstance(entry, Excluded):
                audit.append(AuditRecord(roll_up, "n.a.", lo, hi, None, entry.reason))
            else:
                per_cat[cat] = entry
                raw = _format_score(category_scores[program][cat])
                audit.append(AuditRecord(roll_up, raw, lo, hi, entry))
        if not per_cat:
            raise EmptyCategory(f"program {program!r} has no category scores")
        gmi = sum(per_cat.values())
        if len(per_cat) < CATEGORY_COUNT:
            gmi *= CATEGORY_COUNT / len(per_cat)
        results[program] = GmiResult(
            program=program,
            category_scores={cat: category_scores[program][cat] for cat in per_cat},
            normalized_category_scores=per_cat,
            gmi=gmi,
            stage=classify_maturity(gmi),
            audit=tuple(audit),
        )
    return results


# ---------------------------------------------------------------------------
# Raw-indicator pipeline
# ---------------------------------------------------------------------------


def score_datasets(
    datasets: Sequence[ProgramDataset],
    schema: Schema,
    template=None,
    rates: Mapping[str, float] | None = None,
    allow_partial: bool = False,
) -> tuple[ScoreMatrix, list[GmiResult]]:
    """Full pipeline from typed observations to composite results.

    Program order follows the input order throughout.
    """
    from .rubric import builtin_template, collect_responses

    template = template or builtin_template()
    programs = [ds.program for ds in datasets]
    if len(set(programs)) != len(programs):
        raise ParseError("duplicate program names across datasets")
    by_program = {ds.program: ds for ds in datasets}

    observed_ids: list[str] = []
    for ds in datasets:
        for indicator_id in ds.observations:
            if indicator_id not in observed_ids:
                observed_ids.append(indicator_id)

    entries: dict[tuple[str, str], float | Excluded] = {}
    audits: dict[str, list[AuditRecord]] = {p: [] for p in programs}
    included: dict[tuple[str, Category], list[float]] = {}

    for indicator_id in observed_ids:
        definition = schema.get(indicator_id)
        values: dict[str, float | None] = {}
        reasons: dict[str, str | None] = {}
        for program in programs:
            obs = by_program[program].observations.get(indicator_id)
            if obs is None:
                values[program], reasons[program] = None, "missing"
                continue
            value, exclusion = scoring_status(obs.value, definition, rates)
            values[program], reasons[program] = value, exclusion

        if not definition.scorable:
            # Record observed-but-unscorable cells for the audit trail only.
            for program in programs:
                obs = by_program[program].observations.get(indicator_id)
                if obs is not None:
                    entries[(program, indicator_id)] = Excluded("non-scorable")
                    audits[program].append(
                        AuditRecord(indicator_id, obs.raw, None, None, None,
                                    "non-scorable", obs.value.qualifier)
                    )
            continue

        normalized = minmax_normalize(values)
        present = [v for v in values.values() if v is not None]
        lo = min(present) if present else None
        hi = max(present) if present else None
        for program in programs:
            obs = by_program[program].observations.get(indicator_id)
            raw = obs.raw if obs is not None else "n.a."
            qualifier = obs.value.qualifier if obs is not None else Qualifier.UNSPECIFIED
            entry = normalized[program]
            if isinstance(entry, Excluded):
                reason = reasons[program] or entry.reason
                entries[(program, indicator_id)] = Excluded(reason)
                audits[program].append(
                    AuditRecord(indicator_id, raw, lo, hi, None, reason, qualifier)
                )
            else:
                score = directional_score(entry, definition.direction)
                entries[(program, indicator_id)] = score
                audits[program].append(
                    AuditRecord(indicator_id, raw, lo, hi, score, None, qualifier)
                )
                included.setdefault((program, definition.category), []).append(score)

    category_scores: dict[str, dict[Category, float]] = {p: {} for p in programs}
    matrix_scores: dict[tuple[str, Category], float] = {}
    for program in programs:
        grouped = collect_responses(template, by_program[program].rubric)
        for cat in Category:
            indicator_scores = included.get((program, cat), [])
            rubric_scores = grouped.get(cat)
            rubric_score = (
                sum(rubric_scores) / len(rubric_scores) if rubric_scores else None
            )
            if not indicator_scores and rubric_score is None:
                continue
            score = score_category(indicator_scores, rubric_score)
            category_scores[program][cat] = score
            matrix_scores[(program, cat)] = score

    results_by_program = compute_gmi(category_scores, allow_partial=allow_partial)
    results = []
    for program in programs:
        result = results_by_program[program]
        results.append(replace(result, audit=tuple(audits[program]) + result.audit))

    matrix = ScoreMatrix(
        programs=tuple(programs), entries=entries, category_scores=matrix_scores
    )
    return matrix, results


# ---------------------------------------------------------------------------
# Precomputed category-score path
# ---------------------------------------------------------------------------

_TABLE_HEADER = ("program",) + tuple(cat.code for cat in Category)


@dataclass(frozen=True)
class CategoryTable:
    programs: tuple[str, ...]
    scores: dict[str, dict[Category, float]]
    notes: tuple[str, ...] = ()


def load_category_table(source: IO[bytes] | IO[str] | str) -> CategoryTable:
    """Read a precomputed category-score table.

    Format: header ``program|FAO|PSO|GOV|EFI|TAC|COM``, one program per row,
    cells numeric or ``n.a.`` for absent categories; ``note|...`` lines are
    carried into report footnotes.
    """
    from .ingest import _read_text, _records

    records = list(_records(_read_text(source)))
    if not records:
        raise ParseError("category table has no header row")
    rows = []
    notes: list[str] = []
    header_seen = False
    for line_no, fields in records:
        if fields[0].lower() == "note":
            notes.append("|".join(fields[1:]))
            continue
        if not header_seen:
            if tuple(f.upper() if i else f.lower() for i, f in enumerate(fields)) != _TABLE_HEADER:
                raise ParseError(
                    f"line {line_no}: expected header {'|'.join(_TABLE_HEADER)!r}"
                )
            header_seen = True
            continue
        if len(fields) != len(_TABLE_HEADER):
            raise ParseError(f"line {line_no}: expected {len(_TABLE_HEADER)} fields")
        rows.append((line_no, fields))
    if not header_seen:
        raise ParseError("category table has no header row")

    programs: list[str] = []
    scores: dict[str, dict[Category, float]] = {}
    for line_no, fields in rows:
        program = fields[0]
        if program in scores:
            raise ParseError(f"line {line_no}: duplicate program {program!r}")
        programs.append(program)
        per_cat: dict[Category, float] = {}
        for cat, cell in zip(Category, fields[1:]):
            if cell.lower() in ("n.a.", ""):
                continue
            try:
                per_cat[cat] = float(cell)
            except ValueError:
                raise ParseError(
                    f"line {line_no}: score {cell!r} is not a number"
                ) from None
        scores[program] = per_cat
    if not programs:
        raise ParseError("category table has no program rows")
    return CategoryTable(programs=tuple(programs), scores=scores, notes=tuple(notes))


def score_category_table(table: CategoryTable,
                         allow_partial: bool = False) -> list[GmiResult]:
    results = compute_gmi(table.scores, allow_partial=allow_partial)
    return [results[p] for p in table.programs]
