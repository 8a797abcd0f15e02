"""Command-line front end for reproducible batch runs.

Subcommands: ``validate``, ``score``, ``compare`` (alias of score),
``survey template`` and ``schema dump``.  Exit statuses: 0 success,
1 domain failure (unscorable data, partial cohorts), 2 input or usage
failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .errors import GmiError, PartialDataError
from .ingest import load_program_dataset, load_rates, validate_dataset
from .report import FORMATS, render_comparison, render_validation
from .rubric import render_template
from .schema import Schema, builtin_schema, dump_schema, load_schema
from .scoring import load_category_table, score_category_table, score_datasets

SCHEMA_ENV_VAR = "GMI_SCHEMA"

MODE_RAW = "raw-indicators"
MODE_PRECOMPUTED = "precomputed-categories"

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2


def _active_schema(path: str | None) -> Schema:
    path = path or os.environ.get(SCHEMA_ENV_VAR)
    if not path:
        return builtin_schema()
    return load_schema(Path(path).read_bytes())


def _emit(payload: bytes, out: str | None) -> None:
    if out:
        Path(out).write_bytes(payload)
    else:
        sys.stdout.buffer.write(payload)
        sys.stdout.buffer.flush()


def _cmd_validate(args: argparse.Namespace) -> int:
    schema = _active_schema(args.schema)
    chunks: list[bytes] = []
    all_ok = True
    for path in args.inputs:
        dataset = load_program_dataset(Path(path).read_bytes(), schema)
        report = validate_dataset(dataset, schema)
        chunks.append(render_validation(report))
        all_ok = all_ok and report.all_scorable
    _emit(b"".join(chunks), args.out)
    return EXIT_OK if all_ok else EXIT_DOMAIN


def _cmd_score(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    if args.mode == MODE_PRECOMPUTED and args.rates:
        parser.error("--rates cannot be combined with precomputed-categories mode")
    schema = _active_schema(args.schema)

    if args.mode == MODE_PRECOMPUTED:
        if len(args.inputs) != 1:
            parser.error("precomputed-categories mode takes exactly one input file")
        table = load_category_table(Path(args.inputs[0]).read_bytes())
        try:
            results = score_category_table(table, allow_partial=args.allow_partial)
        except PartialDataError as exc:
            print(f"PartialDataError: {exc}", file=sys.stderr)
            return EXIT_DOMAIN
        payload = render_comparison(results, fmt=args.format, notes=table.notes)
    else:
        rates = load_rates(Path(args.rates).read_bytes()) if args.rates else None
        datasets = [
            load_program_dataset(Path(path).read_bytes(), schema)
            for path in args.inputs
        ]
        try:
            _, results = score_datasets(
                datasets, schema, rates=rates, allow_partial=args.allow_partial
            )
        except PartialDataError as exc:
            print(f"PartialDataError: {exc}", file=sys.stderr)
            return EXIT_DOMAIN
        payload = render_comparison(results, fmt=args.format)

    _emit(payload, args.out)
    return EXIT_OK


def _cmd_survey_template(args: argparse.Namespace) -> int:
    _emit(render_template().encode("utf-8"), args.out)
    return EXIT_OK


def _cmd_schema_dump(args: argparse.Namespace) -> int:
    schema = _active_schema(args.schema)
    _emit(dump_schema(schema).encode("utf-8"), args.out)
    return EXIT_OK


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--schema", metavar="PATH",
                        help=f"schema file (default: builtin, or ${SCHEMA_ENV_VAR})")
    parser.add_argument("--out", metavar="PATH", help="write output to a file")


def _add_score_options(parser: argparse.ArgumentParser) -> None:
    _add_common(parser)
    parser.add_argument("inputs", nargs="+", metavar="FILE")
    parser.add_argument("--mode", choices=(MODE_RAW, MODE_PRECOMPUTED),
                        default=MODE_RAW)
    parser.add_argument("--allow-partial", action="store_true",
                        help="rescale composites when categories are missing")
    parser.add_argument("--rates", metavar="PATH",
                        help="token conversion table (SYMBOL|usd-per-token)")
    parser.add_argument("--format", choices=FORMATS, default="table")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gmi",
        description="Grant Maturity Index scoring engine",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("validate", help="load datasets and report scorability")
    _add_common(p_validate)
    p_validate.add_argument("inputs", nargs="+", metavar="FILE")
    p_validate.set_defaults(func=_cmd_validate)

    for name, help_text in (
        ("score", "run the scoring pipeline and render a comparison"),
        ("compare", "alias of score for multi-program runs"),
    ):
        p_score = sub.add_parser(name, help=help_text)
        _add_score_options(p_score)
        p_score.set_defaults(func=lambda args, p=p_score: _cmd_score(args, p))

    p_survey = sub.add_parser("survey", help="self-assessment survey utilities")
    survey_sub = p_survey.add_subparsers(dest="survey_command", required=True)
    p_template = survey_sub.add_parser("template", help="print the blank survey")
    p_template.add_argument("--out", metavar="PATH")
    p_template.set_defaults(func=_cmd_survey_template)

    p_schema = sub.add_parser("schema", help="indicator registry utilities")
    schema_sub = p_schema.add_subparsers(dest="schema_command", required=True)
    p_dump = schema_sub.add_parser("dump", help="print the active schema")
    _add_common(p_dump)
    p_dump.set_defaults(func=_cmd_schema_dump)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except GmiError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
