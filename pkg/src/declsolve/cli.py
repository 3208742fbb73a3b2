"""Command-line front end.

Subcommands:

- ``solve``: run one question through the full pipeline and print the answer.
- ``eval``: run a dataset, write reports, optionally repeat with --runs.
- ``check``: parse a transcript file and report principle violations.

Endpoint, model, and decoding parameters come from an optional JSON config
file; flags override the file; the API credential only ever comes from an
environment variable.
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys
from fractions import Fraction
from pathlib import Path

from .client import ClientError, Live, RecordThrough, Replay
from .evaluation import (
    RunConfig,
    load_algebra,
    load_gsm8k,
    run_eval,
    run_problem,
)
from .exprs import format_rational
from .parsing import render_script
from .prompts import (
    DEFAULT_STOP_SEQUENCES,
    VARIANT_PRINCIPLES,
    VARIANTS,
    DecodingParams,
    spec_for_variant,
)

DEFAULT_ENDPOINT = "https://api.openai.com/v1/completions"
DEFAULT_MODEL = "gpt-3.5-turbo-instruct"


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, encoding="utf-8") as handle:
        return json.load(handle)


def _run_config(args: argparse.Namespace, config: dict) -> RunConfig:
    params = DecodingParams(
        temperature=config.get("temperature", 0.0),
        max_tokens=config.get("max_tokens", 600),
        n_samples=config.get("n_samples", 1),
    )
    model = args.model or config.get("model", DEFAULT_MODEL)
    stop = tuple(config.get("stop_sequences", DEFAULT_STOP_SEQUENCES))
    return RunConfig(model=model, params=params, stop_sequences=stop)


def _client_mode(args: argparse.Namespace, config: dict):
    endpoint = getattr(args, "endpoint", None) or config.get("endpoint", DEFAULT_ENDPOINT)
    credential_env = config.get("credential_env", "OPENAI_API_KEY")
    timeout = config.get("timeout", 120.0)
    mode_name = args.mode
    if mode_name is None:
        mode_name = "replay" if args.cassette else "live"
    if mode_name == "replay":
        if not args.cassette:
            raise SystemExit("replay mode requires --cassette")
        return Replay(args.cassette)
    if mode_name == "record":
        if not args.cassette:
            raise SystemExit("record mode requires --cassette")
        return RecordThrough(endpoint, args.cassette, credential_env, timeout)
    return Live(endpoint, credential_env, timeout)


def _cmd_solve(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    spec = spec_for_variant(args.variant)
    run_config = _run_config(args, config)
    mode = _client_mode(args, config)
    from .evaluation import Problem

    problem = Problem("cli", args.question, Fraction(0))
    record = run_problem(problem, spec, run_config, mode)
    if args.explain:
        if record.transcript is not None:
            print("transcript:")
            for line in record.transcript.splitlines():
                print(f"  {line}")
        if record.script is not None:
            print("script:")
            for line in render_script(record.script).splitlines():
                print(f"  {line}")
        if record.outcome is not None:
            print("trace:")
            for step in record.outcome.trace:
                print(f"  {step}")
            rendered = ", ".join(
                format_rational(c) if isinstance(c, Fraction) else repr(c)
                for c in record.outcome.candidates
            )
            print(f"candidates: {rendered}")
        if record.principle_warnings:
            print(f"principle warnings: {record.principle_warnings}")
    if record.predicted is None:
        detail = f": {record.detail}" if record.detail else ""
        print(f"failed ({record.verdict}){detail}", file=sys.stderr)
        return 1
    value = record.predicted
    print(format_rational(value) if isinstance(value, Fraction) else repr(value))
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    loaders = {"gsm8k": load_gsm8k, "algebra": load_algebra}
    problems = loaders[args.format](args.dataset)
    spec = spec_for_variant(args.variant)
    run_config = _run_config(args, config)
    dataset_name = args.dataset_name or Path(args.dataset).stem

    rates = []
    for run_index in range(1, args.runs + 1):
        mode = _client_mode(args, config)
        out_dir = Path(args.out)
        if args.runs > 1:
            out_dir = out_dir / f"run-{run_index}"
        report = run_eval(
            problems,
            spec,
            mode,
            run_config,
            dataset_name=dataset_name,
            workers=args.workers,
            out_dir=out_dir,
            force=args.force,
        )
        rates.append(report.solve_rate)
        print(
            f"run {run_index}: {report.variant} on {dataset_name} — "
            f"solve rate {report.solve_rate:.1f}% "
            f"({report.histogram['Correct']}/{report.total})"
        )
    if args.runs > 1:
        mean = statistics.fmean(rates)
        spread = statistics.stdev(rates) if len(rates) > 1 else 0.0
        print(f"runs: {args.runs}  mean solve rate: {mean:.1f}%  stddev: {spread:.2f}")
    return 0


def _cmd_check(args: argparse.Namespace) -> int:
    from .parsing import check_transcript

    text = Path(args.transcript).read_text(encoding="utf-8")
    result = check_transcript(text, args.question or "")
    if result.script is not None:
        print("script:")
        for line in render_script(result.script).splitlines():
            print(f"  {line}")
    failures = result.report.failures
    for violation in failures:
        print(f"violation (principle {violation.principle}): {violation.message}")
    for violation in result.report.warnings:
        print(f"warning (principle {violation.principle}): {violation.message}")
    if result.report.unused_question_numbers:
        unused = ", ".join(
            format_rational(n) for n in result.report.unused_question_numbers
        )
        print(f"unused question numbers: {unused}")
    if result.script is None or failures:
        return 1
    print("ok")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="declsolve",
        description="Formalize math word problems into equations and solve them exactly.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="solve a single question end to end")
    solve.add_argument("question")
    solve.add_argument("--variant", choices=VARIANTS, default=VARIANT_PRINCIPLES)
    solve.add_argument("--explain", action="store_true", help="print script, trace, candidates")
    solve.add_argument("--mode", choices=["live", "replay", "record"], default=None)
    solve.add_argument("--cassette", help="cassette path for replay/record modes")
    solve.add_argument("--config", help="JSON config file (endpoint, model, params)")
    solve.add_argument("--endpoint", help="completions endpoint URL")
    solve.add_argument("--model", help="model identifier")
    solve.set_defaults(func=_cmd_solve)

    evaluate = sub.add_parser("eval", help="evaluate a dataset and write reports")
    evaluate.add_argument("--dataset", required=True, help="dataset file path")
    evaluate.add_argument("--format", choices=["gsm8k", "algebra"], required=True)
    evaluate.add_argument("--variant", choices=VARIANTS, default=VARIANT_PRINCIPLES)
    evaluate.add_argument("--mode", choices=["live", "replay", "record"], default=None)
    evaluate.add_argument("--cassette", help="cassette path for replay/record modes")
    evaluate.add_argument("--workers", type=int, default=1)
    evaluate.add_argument("--runs", type=int, default=1)
    evaluate.add_argument("--out", required=True, help="report output directory")
    evaluate.add_argument("--force", action="store_true", help="overwrite existing records")
    evaluate.add_argument("--config", help="JSON config file (endpoint, model, params)")
    evaluate.add_argument("--endpoint", help="completions endpoint URL")
    evaluate.add_argument("--model", help="model identifier")
    evaluate.add_argument("--dataset-name", help="label used in reports (default: file stem)")
    evaluate.set_defaults(func=_cmd_eval)

    check = sub.add_parser("check", help="parse a transcript and check the principles")
    check.add_argument("transcript", help="file containing a model transcript")
    check.add_argument("--question", help="question text, for unused-number warnings")
    check.set_defaults(func=_cmd_check)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ClientError as err:
        print(f"client error: {err}", file=sys.stderr)
        return 1
    except FileExistsError as err:
        print(str(err), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
