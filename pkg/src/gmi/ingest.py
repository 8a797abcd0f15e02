"""Observation parsing: raw cell grammar, unit coercion, dataset loading.

Value grammar (case-insensitive, surrounding whitespace ignored), applied
under the indicator's declared data type:

* ``n.a.`` / ``tbc`` / empty cell -> Missing.  ``Link`` is kept as text under
  text indicators and treated as Missing elsewhere (placeholder cell).
* text indicators keep the cell verbatim as Text.
* a leading ``<`` or ``>`` marks an approximate upper/lower bound; the rest
  of the cell parses normally and the qualifier is preserved.
* iso-alpha-3 indicators accept a bare ISO 3166-1 alpha-3 code or a known
  jurisdiction name; a trailing ``Foundation`` entity suffix is ignored.
* binary indicators accept ``0``/``1`` and ``no``/``yes``.
* ``$X`` is USD money; thousands separators and magnitude suffixes
  k/m/b (1e3/1e6/1e9) are understood; a trailing token symbol after a ``$``
  amount is ignored.
* ``A:B`` is a ratio, stored with numerator and denominator.
* a number followed by a time-unit word (``week(s)``/``month(s)``/
  ``year(s)``) is a Number annotated with that unit for later coercion.
* a number followed by an upper-case symbol (``50K OP``) is a token amount.
* ``N (free text)`` is a Number carrying the leading numeral; under
  indicators with unit ``scoring`` the numeral is a categorical code and is
  marked as such (codes only score when the indicator's direction was set
  explicitly).
* a bare number (separators and magnitude suffixes allowed) is a Number.
* anything else raises ValueParseError.

Observation files are pipe-delimited UTF-8 text::

    # comments and blank lines are ignored
    program|<name>                      (required, first record)
    <indicator-id>|<raw value>[|<unit>] (observation row)
    <criterion-id>|<score>              (rubric self-assessment row)

A first field matching the indicator id pattern is an observation; any other
first field is read as a rubric criterion id with an integer 1..5 score.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace
from enum import Enum
from typing import IO, Iterable, Mapping

from .errors import (
    DuplicateIndicator,
    ParseError,
    RubricRangeError,
    UnitError,
    UnknownIndicator,
    ValueParseError,
)
from .schema import (
    DELIMITER,
    INDICATOR_ID_PATTERN,
    Category,
    DataType,
    IndicatorDef,
    Kind,
    Schema,
)

# Fixed time conversions, chosen for reproducibility over calendar precision.
WEEKS_PER_MONTH = 4.345
WEEKS_PER_YEAR = 52.14

_TIME_UNITS = {
    "week": 1.0,
    "weeks": 1.0,
    "month": WEEKS_PER_MONTH,
    "months": WEEKS_PER_MONTH,
    "year": WEEKS_PER_YEAR,
    "years": WEEKS_PER_YEAR,
}

_CANONICAL_TIME = {"week": "weeks", "month": "months", "year": "years"}

_MISSING_SENTINELS = {"n.a.", "tbc", ""}

_MAGNITUDE = {"k": 1e3, "m": 1e6, "b": 1e9}

# Jurisdiction names that appear in legal-domicile cells, mapped to ISO
# 3166-1 alpha-3. Extend as new domiciles show up in source data.
_JURISDICTIONS = {
    "cayman islands": "CYM",
    "british virgin islands": "VGB",
    "switzerland": "CHE",
    "singapore": "SGP",
    "panama": "PAN",
    "united states": "USA",
    "liechtenstein": "LIE",
    "gibraltar": "GIB",
    "bermuda": "BMU",
    "seychelles": "SYC",
}

_MAGNITUDE_RE = re.compile(r"^(-?\d[\d,]*(?:\.\d+)?)([kKmMbB])?$")
_RATIO_RE = re.compile(r"^(\d[\d,]*(?:\.\d+)?)\s*:\s*(\d[\d,]*(?:\.\d+)?)$")
_CODE_RE = re.compile(r"^(-?\d[\d,]*(?:\.\d+)?)\s*\((.+)\)$")
_WORD_SUFFIX_RE = re.compile(r"^(\S+)\s+([A-Za-z]+)$")


class ValueKind(Enum):
    NUMBER = "number"
    RATIO = "ratio"
    MONEY = "money"
    TOKEN_AMOUNT = "token-amount"
    BINARY = "binary"
    COUNTRY = "country"
    TEXT = "text"
    MISSING = "missing"


class Qualifier(Enum):
    EXACT = "exact"
    APPROX_LOWER_BOUND = "approximate-lower-bound"
    APPROX_UPPER_BOUND = "approximate-upper-bound"
    UNSPECIFIED = "unspecified"


@dataclass(frozen=True)
class TypedValue:
    kind: ValueKind
    value: float | None = None
    symbol: str | None = None  # token symbol, or "USD" for money
    text: str | None = None
    numerator: float | None = None  # ratio components, kept for round-trips
    denominator: float | None = None
    unit: str | None = None  # unit the value is currently expressed in
    is_code: bool = False  # leading-numeral categorical cell under unit=scoring
    qualifier: Qualifier = Qualifier.EXACT

    @property
    def missing(self) -> bool:
        return self.kind is ValueKind.MISSING

    def __post_init__(self):
        if self.kind in (ValueKind.MONEY, ValueKind.TOKEN_AMOUNT):
            if self.value is None or self.value < 0:
                raise ValueError(f"{self.kind.value} amount must be >= 0")
        if self.kind is ValueKind.BINARY and self.value not in (0.0, 1.0):
            raise ValueError("binary value must be 0 or 1")
        if self.kind is ValueKind.MISSING and self.qualifier is not Qualifier.UNSPECIFIED:
            raise ValueError("missing values carry no qualifier")


MISSING = TypedValue(kind=ValueKind.MISSING, qualifier=Qualifier.UNSPECIFIED)


def number(value: float, unit: str | None = None, is_code: bool = False,
           qualifier: Qualifier = Qualifier.EXACT) -> TypedValue:
    return TypedValue(kind=ValueKind.NUMBER, value=float(value), unit=unit,
                      is_code=is_code, qualifier=qualifier)


def money(amount: float, qualifier: Qualifier = Qualifier.EXACT) -> TypedValue:
    return TypedValue(kind=ValueKind.MONEY, value=float(amount), symbol="USD",
                      qualifier=qualifier)


def token_amount(amount: float, symbol: str,
                 qualifier: Qualifier = Qualifier.EXACT) -> TypedValue:
    return TypedValue(kind=ValueKind.TOKEN_AMOUNT, value=float(amount),
                      symbol=symbol.upper(), qualifier=qualifier)


def ratio(numerator: float, denominator: float,
          qualifier: Qualifier = Qualifier.EXACT) -> TypedValue:
    if denominator == 0:
        raise ValueError("ratio denominator must be non-zero")
    return TypedValue(kind=ValueKind.RATIO, value=numerator / denominator,
                      numerator=float(numerator), denominator=float(denominator),
                      qualifier=qualifier)


def binary(value: int, qualifier: Qualifier = Qualifier.EXACT) -> TypedValue:
    return TypedValue(kind=ValueKind.BINARY, value=float(value), qualifier=qualifier)


def country(code: str, qualifier: Qualifier = Qualifier.EXACT) -> TypedValue:
    return TypedValue(kind=ValueKind.COUNTRY, text=code.upper(), qualifier=qualifier)


def text(value: str, qualifier: Qualifier = Qualifier.EXACT) -> TypedValue:
    return TypedValue(kind=ValueKind.TEXT, text=value, qualifier=qualifier)


def _to_float(token: str) -> float:
    return float(token.replace(",", ""))


def _parse_amount(token: str) -> float | None:
    m = _MAGNITUDE_RE.match(token)
    if not m:
        return None
    base = _to_float(m.group(1))
    if m.group(2):
        base *= _MAGNITUDE[m.group(2).lower()]
    return base


def _parse_country(body: str, raw: str, definition: IndicatorDef) -> TypedValue:
    cleaned = re.sub(r"\(.*?\)", " ", body).strip()
    words = cleaned.split()
    if words and words[-1].lower() == "foundation":
        words = words[:-1]
    cleaned = " ".join(words)
    if re.fullmatch(r"[A-Za-z]{3}", cleaned):
        return country(cleaned)
    code = _JURISDICTIONS.get(cleaned.lower())
    if code:
        return country(code)
    raise ValueParseError(raw, definition.id, "not an ISO alpha-3 code or known jurisdiction")


def parse_value(raw: str, definition: IndicatorDef) -> TypedValue:
    """Parse one raw cell under *definition*'s declared data type."""
    try:
        return _parse_cell(raw, definition)
    except ValueParseError:
        raise
    except ValueError as exc:
        # constructor guards (negative amounts, zero denominators)
        raise ValueParseError(raw, definition.id, str(exc)) from exc


def _parse_cell(raw: str, definition: IndicatorDef) -> TypedValue:
    body = raw.strip()
    lowered = body.lower()

    if lowered in _MISSING_SENTINELS:
        return MISSING
    if lowered == "link" and definition.data_type is not DataType.TEXT:
        return MISSING

    if definition.data_type is DataType.TEXT:
        return text(body)

    qualifier = Qualifier.EXACT
    if body.startswith("<"):
        qualifier = Qualifier.APPROX_UPPER_BOUND
        body = body[1:].strip()
    elif body.startswith(">"):
        qualifier = Qualifier.APPROX_LOWER_BOUND
        body = body[1:].strip()

    if definition.data_type is DataType.ISO_ALPHA_3:
        parsed = _parse_country(body, raw, definition)
        return replace(parsed, qualifier=qualifier)

    if definition.data_type is DataType.BINARY:
        if body in ("0", "1"):
            return binary(int(body), qualifier)
        if body.lower() in ("no", "yes"):
            return binary(int(body.lower() == "yes"), qualifier)
        raise ValueParseError(raw, definition.id, "binary cells must be 0/1 or no/yes")

    if definition.data_type not in (DataType.NUMERIC, DataType.RATIONAL):
        raise ValueParseError(raw, definition.id, "indicator is not observable")

    if body.startswith("$"):
        rest = body[1:].strip()
        # A trailing token symbol after a dollar amount is ignored in favour
        # of the dollar sign.
        sym = _WORD_SUFFIX_RE.match(rest)
        if sym and sym.group(2).isupper():
            rest = sym.group(1)
        amount = _parse_amount(rest)
        if amount is None:
            raise ValueParseError(raw, definition.id, "malformed money amount")
        return money(amount, qualifier)

    m = _RATIO_RE.match(body)
    if m:
        return ratio(_to_float(m.group(1)), _to_float(m.group(2)), qualifier)

    m = _CODE_RE.match(body)
    if m:
        return number(_to_float(m.group(1)), is_code=definition.unit == "scoring",
                      qualifier=qualifier)

    m = _WORD_SUFFIX_RE.match(body)
    if m:
        head, word = m.group(1), m.group(2)
        if word.lower() in _TIME_UNITS:
            amount = _parse_amount(head)
            if amount is None:
                raise ValueParseError(raw, definition.id, "malformed duration")
            unit = _CANONICAL_TIME[word.lower().rstrip("s")]
            return number(amount, unit=unit, qualifier=qualifier)
        if word.isupper() and 2 <= len(word) <= 6:
            amount = _parse_amount(head)
            if amount is None:
                raise ValueParseError(raw, definition.id, "malformed token amount")
            return token_amount(amount, word, qualifier)
        raise ValueParseError(raw, definition.id, f"unrecognised suffix {word!r}")

    amount = _parse_amount(body)
    if amount is not None:
        return number(amount, qualifier=qualifier)

    raise ValueParseError(raw, definition.id)


def format_value(value: TypedValue) -> str:
    """Canonical text form; parse_value(format_value(v), def) == v."""
    prefix = {Qualifier.APPROX_UPPER_BOUND: "<", Qualifier.APPROX_LOWER_BOUND: ">"}.get(
        value.qualifier, ""
    )
    if value.kind is ValueKind.MISSING:
        return "n.a."
    if value.kind is ValueKind.TEXT:
        return value.text or ""
    if value.kind is ValueKind.COUNTRY:
        return prefix + (value.text or "")
    if value.kind is ValueKind.BINARY:
        return prefix + str(int(value.value))
    if value.kind is ValueKind.MONEY:
        return prefix + "$" + _format_number(value.value)
    if value.kind is ValueKind.TOKEN_AMOUNT:
        return f"{prefix}{_format_number(value.value)} {value.symbol}"
    if value.kind is ValueKind.RATIO:
        return f"{prefix}{_format_number(value.numerator)}:{_format_number(value.denominator)}"
    out = prefix + _format_number(value.value)
    if value.is_code:
        out += " (code)"
    if value.unit:
        out += f" {value.unit}"
    return out


def _format_number(x: float | None) -> str:
    if x is None:
        return ""
    if math.isfinite(x) and x == int(x):
        return str(int(x))
    return repr(x)


def coerce_unit(value: TypedValue, from_unit: str | None, definition: IndicatorDef) -> TypedValue:
    """Express *value* in the indicator's declared unit.

    Identity when units already agree; otherwise only time units convert
    (fixed week factors above). Any other mismatch raises UnitError.
    """
    if from_unit is None or from_unit.lower() == definition.unit.lower():
        if value.kind is ValueKind.NUMBER and value.unit is not None:
            return replace(value, unit=None)
        return value
    src = from_unit.lower()
    dst = definition.unit.lower()
    if src in _TIME_UNITS and dst in _TIME_UNITS and value.kind is ValueKind.NUMBER:
        converted = value.value * _TIME_UNITS[src] / _TIME_UNITS[dst]
        return replace(value, value=converted, unit=None)
    raise UnitError(from_unit, definition.unit)


# ---------------------------------------------------------------------------
# Datasets
# ---------------------------------------------------------------------------

_COMPATIBLE = {
    DataType.NUMERIC: {ValueKind.NUMBER, ValueKind.RATIO, ValueKind.MONEY,
                       ValueKind.TOKEN_AMOUNT},
    DataType.RATIONAL: {ValueKind.NUMBER, ValueKind.RATIO, ValueKind.MONEY,
                        ValueKind.TOKEN_AMOUNT},
    DataType.BINARY: {ValueKind.BINARY},
    DataType.TEXT: {ValueKind.TEXT},
    DataType.ISO_ALPHA_3: {ValueKind.COUNTRY},
}


@dataclass(frozen=True)
class Observation:
    indicator_id: str
    raw: str
    value: TypedValue

    def check_compatible(self, definition: IndicatorDef) -> None:
        if self.value.missing or definition.data_type is None:
            return
        if self.value.kind not in _COMPATIBLE[definition.data_type]:
            raise ValueParseError(
                self.raw, self.indicator_id,
                f"{self.value.kind.value} value under {definition.data_type.value} indicator",
            )


@dataclass(frozen=True)
class ProgramDataset:
    program: str
    observations: dict[str, Observation]
    rubric: dict[str, int]


def _read_text(source: IO[bytes] | IO[str] | str) -> str:
    if hasattr(source, "read"):
        data = source.read()
    else:
        data = source
    if isinstance(data, bytes):
        try:
            return data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"document is not UTF-8: {exc}") from exc
    return data


def _records(textdata: str) -> Iterable[tuple[int, list[str]]]:
    for line_no, line in enumerate(textdata.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        yield line_no, [f.strip() for f in line.split(DELIMITER)]


def load_program_dataset(source: IO[bytes] | IO[str] | str, schema: Schema) -> ProgramDataset:
    """Load one program's observation file against *schema*."""
    records = list(_records(_read_text(source)))
    if not records or records[0][1][0].lower() != "program" or len(records[0][1]) < 2:
        raise ParseError("observation file must start with a 'program|<name>' record")
    program = records[0][1][1]
    if not program:
        raise ParseError("program name is empty")

    observations: dict[str, Observation] = {}
    rubric: dict[str, int] = {}
    for line_no, fields in records[1:]:
        key = fields[0]
        if INDICATOR_ID_PATTERN.match(key):
            if len(fields) not in (2, 3):
                raise ParseError(f"line {line_no}: observation rows have 2 or 3 fields")
            definition = schema.get(key)
            if definition is None:
                raise UnknownIndicator(key)
            if definition.kind is not Kind.QUANTITATIVE:
                raise ParseError(
                    f"line {line_no}: {key} is a {definition.kind.value} indicator "
                    "and cannot be observed directly"
                )
            if key in observations:
                raise DuplicateIndicator(key)
            raw = fields[1]
            value = parse_value(raw, definition)
            annotation = fields[2] if len(fields) == 3 and fields[2] else None
            if annotation:
                annotation = annotation.lower()
                annotation = _CANONICAL_TIME.get(annotation.rstrip("s"), annotation)
            inline = value.unit if value.kind is ValueKind.NUMBER else None
            if inline and annotation and inline != annotation:
                raise ParseError(
                    f"line {line_no}: unit annotation {annotation!r} contradicts "
                    f"inline unit {inline!r}"
                )
            value = coerce_unit(value, inline or annotation or definition.unit, definition)
            obs = Observation(indicator_id=key, raw=raw, value=value)
            obs.check_compatible(definition)
            observations[key] = obs
        else:
            if len(fields) != 2:
                raise ParseError(f"line {line_no}: rubric rows have 2 fields")
            if key in rubric:
                raise ParseError(f"line {line_no}: duplicate rubric row for {key!r}")
            try:
                score = int(fields[1])
            except ValueError:
                raise ParseError(
                    f"line {line_no}: rubric score {fields[1]!r} is not an integer"
                ) from None
            if score not in (1, 2, 3, 4, 5):
                raise RubricRangeError(score, key)
            rubric[key] = score

    return ProgramDataset(program=program, observations=observations, rubric=rubric)


def load_rates(source: IO[bytes] | IO[str] | str) -> dict[str, float]:
    """Load a token conversion table (``SYMBOL|usd-per-token`` lines)."""
    rates: dict[str, float] = {}
    for line_no, fields in _records(_read_text(source)):
        if len(fields) != 2:
            raise ParseError(f"line {line_no}: rate rows have 2 fields")
        symbol = fields[0].upper()
        try:
            rate = float(fields[1])
        except ValueError:
            raise ParseError(f"line {line_no}: rate {fields[1]!r} is not a number") from None
        if rate <= 0:
            raise ParseError(f"line {line_no}: rate for {symbol} must be positive")
        if symbol in rates:
            raise ParseError(f"line {line_no}: duplicate rate for {symbol}")
        rates[symbol] = rate
    return rates


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def scoring_status(value: TypedValue, definition: IndicatorDef,
                   rates: Mapping[str, float] | None = None) -> tuple[float | None, str | None]:
    """(numeric value, None) when the observation would score now, else
    (None, exclusion reason)."""
    if not definition.scorable:
        return None, "non-scorable"
    if value.missing:
        return None, "missing"
    if value.kind is ValueKind.TOKEN_AMOUNT:
        rate = (rates or {}).get(value.symbol or "")
        if rate is None:
            return None, "token-unconverted"
        return value.value * rate, None
    if value.kind is ValueKind.NUMBER and value.is_code and not definition.explicit_direction:
        return None, "non-scorable"
    if value.kind in (ValueKind.TEXT, ValueKind.COUNTRY):
        return None, "non-scorable"
    return value.value, None


@dataclass(frozen=True)
class CategoryValidation:
    category: Category
    scorable_present: tuple[str, ...]
    missing: tuple[str, ...]
    non_scorable: tuple[str, ...]
    token_unconverted: tuple[str, ...]
    rubric_responses: int
    scorable: bool


@dataclass(frozen=True)
class ValidationReport:
    program: str
    categories: dict[Category, CategoryValidation]

    @property
    def all_scorable(self) -> bool:
        return all(c.scorable for c in self.categories.values())

    def unscorable_categories(self) -> list[Category]:
        return [cat for cat, c in self.categories.items() if not c.scorable]


def validate_dataset(dataset: ProgramDataset, schema: Schema,
                     template=None) -> ValidationReport:
    """Pre-scoring gate: per category, what would score and what is excluded.

    A category is scorable iff it has at least one observation that would be
    included in normalization right now (no conversion table assumed) or at
    least one rubric response.
    """
    from .rubric import builtin_template  # local import to avoid a cycle

    template = template or builtin_template()
    by_category: dict[Category, dict[str, list[str]]] = {
        cat: {"present": [], "missing": [], "non_scorable": [], "token": []}
        for cat in Category
    }
    for obs in dataset.observations.values():
        definition = schema.get(obs.indicator_id)
        if definition is None:
            raise UnknownIndicator(obs.indicator_id)
        buckets = by_category[definition.category]
        value, exclusion = scoring_status(obs.value, definition)
        if exclusion is None:
            buckets["present"].append(obs.indicator_id)
        elif exclusion == "missing":
            buckets["missing"].append(obs.indicator_id)
        elif exclusion == "token-unconverted":
            buckets["token"].append(obs.indicator_id)
        else:
            buckets["non_scorable"].append(obs.indicator_id)

    rubric_counts = {cat: 0 for cat in Category}
    for criterion_id in dataset.rubric:
        criterion = template.get(criterion_id)
        if criterion is not None:
            rubric_counts[criterion.category] += 1

    categories = {
        cat: CategoryValidation(
            category=cat,
            scorable_present=tuple(buckets["present"]),
            missing=tuple(buckets["missing"]),
            non_scorable=tuple(buckets["non_scorable"]),
            token_unconverted=tuple(buckets["token"]),
            rubric_responses=rubric_counts[cat],
            scorable=bool(buckets["present"]) or rubric_counts[cat] > 0,
        )
        for cat, buckets in by_category.items()
    }
    return ValidationReport(program=dataset.program, categories=categories)
