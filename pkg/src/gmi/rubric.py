"""Self-assessment survey: builtin criteria, response handling, grouping.

Response files are pipe-delimited ``criterion-id|score`` lines; scores run
from 1 (Low) to 5 (High). A blank score means the criterion was left
unanswered and is simply omitted from the aggregation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import IO, Mapping

from .errors import ParseError, RubricRangeError, UnknownCriterion
from .ingest import _read_text, _records
from .schema import Category
from .scoring import rubric_to_unit

SCALE_MIN = 1
SCALE_MAX = 5
SCALE_ANCHORS = ("Low", "High")


@dataclass(frozen=True)
class Criterion:
    id: str
    category: Category
    name: str
    prompt: str


@dataclass(frozen=True)
class RubricTemplate:
    criteria: tuple[Criterion, ...]

    def __post_init__(self):
        seen: set[str] = set()
        for criterion in self.criteria:
            if criterion.id in seen:
                raise ParseError(f"duplicate criterion id {criterion.id!r}")
            seen.add(criterion.id)

    def get(self, criterion_id: str) -> Criterion | None:
        for criterion in self.criteria:
            if criterion.id == criterion_id:
                return criterion
        return None


_BUILTIN_CRITERIA = (
    ("clarity-of-objectives", Category.GOV, "Clarity of Objectives",
     "How clearly the program's goals are communicated."),
    ("alignment-with-ecosystem-needs", Category.FAO, "Alignment with Ecosystem Needs",
     "The program's ability to address emerging ecosystem needs."),
    ("diversity-of-supported-projects", Category.FAO, "Diversity of Supported Projects",
     "The variety of supported projects across different verticals."),
    ("organizational-clarity", Category.PSO, "Organizational Clarity",
     "The transparency and efficiency of the program's structure."),
    ("governance", Category.GOV, "Governance",
     "The decision-making processes and overall governance structure."),
    ("community-participation-and-engagement", Category.COM,
     "Community Participation and Engagement",
     "How effectively the community is involved in the grant process."),
)


def builtin_template() -> RubricTemplate:
    return RubricTemplate(
        criteria=tuple(Criterion(id=c[0], category=c[1], name=c[2], prompt=c[3])
                       for c in _BUILTIN_CRITERIA)
    )


def collect_responses(template: RubricTemplate,
                      answers: Mapping[str, int]) -> dict[Category, list[float]]:
    """Group unit-interval rubric scores by the criterion's category.

    Grouping runs in template order, so the result is independent of the
    order answers arrive in.
    """
    for criterion_id, score in answers.items():
        if template.get(criterion_id) is None:
            raise UnknownCriterion(criterion_id)
        if score not in (1, 2, 3, 4, 5):
            raise RubricRangeError(score, criterion_id)
    grouped: dict[Category, list[float]] = {}
    for criterion in template.criteria:
        if criterion.id in answers:
            grouped.setdefault(criterion.category, []).append(
                rubric_to_unit(answers[criterion.id])
            )
    return grouped


def render_template(template: RubricTemplate | None = None) -> str:
    """Blank survey in the response file format, ready to fill offline."""
    template = template or builtin_template()
    lines = [
        f"# Self-assessment survey: score each criterion from "
        f"{SCALE_MIN} ({SCALE_ANCHORS[0]}) to {SCALE_MAX} ({SCALE_ANCHORS[1]}).",
        "# Leave the score empty to skip a criterion.",
    ]
    for criterion in template.criteria:
        lines.append(f"# [{criterion.category.code}] {criterion.name}: {criterion.prompt}")
        lines.append(f"{criterion.id}|")
    return "\n".join(lines) + "\n"


def load_responses(source: IO[bytes] | IO[str] | str) -> dict[str, int]:
    """Read filled survey lines; blank scores are skipped."""
    answers: dict[str, int] = {}
    for line_no, fields in _records(_read_text(source)):
        if len(fields) != 2:
            raise ParseError(f"line {line_no}: response rows have 2 fields")
        criterion_id, score_text = fields
        if not score_text:
            continue
        try:
            score = int(score_text)
        except ValueError:
            raise ParseError(
                f"line {line_no}: score {score_text!r} is not an integer"
            ) from None
        if score not in (1, 2, 3, 4, 5):
            raise RubricRangeError(score, criterion_id)
        if criterion_id in answers:
            raise ParseError(f"line {line_no}: duplicate response for {criterion_id!r}")
        answers[criterion_id] = score
    return answers
