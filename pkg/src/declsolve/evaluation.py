"""End-to-end evaluation: datasets, scoring, verdicts, reports.

Per problem the pipeline assembles the prompt, obtains a completion,
parses the bracketed declarations into a script, checks the structural
principles, produces an answer (symbolically — or, for the variant where
the model computes its own answer, by extracting the final number from
the transcript), scores it against gold, and classifies the result into
exactly one verdict.  Per-problem failures become verdicts; they never
abort a run.

Reports are byte-deterministic: no timestamps, fixed key order, fixed
float formatting.  Records stream to disk in dataset order as they are
produced, so a crashed run can be re-aggregated from the partial file.
"""

from __future__ import annotations

import csv
import io
import json
import re
import threading
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

from .client import ClientError, ClientMode, CompletionRequest, Transport, complete
from .exprs import ExprError, Var, format_rational, free_vars
from .parsing import (
    EqDecl,
    GoalDecl,
    ParseError,
    ScriptError,
    SolutionScript,
    VarDecl,
    check_principles,
    extract_brackets,
    parse_declaration,
    script_from_transcript,
)
from .prompts import (
    DEFAULT_STOP_SEQUENCES,
    VARIANT_LLM_SOLVES,
    VARIANT_ONE_STEP,
    DecodingParams,
    PromptSpec,
    assemble_prompt,
)
from .solver import EquationSystem, SolveOutcome, SolverError, Value, solve_system

# Verdicts, one per record, in report order.
CORRECT = "Correct"
WRONG_ANSWER = "WrongAnswer"
PARSE_FAILURE = "ParseFailure"
SCRIPT_INVALID = "ScriptInvalid"
SOLVER_FAILURE = "SolverFailure"
CLIENT_FAILURE = "ClientFailure"
VERDICTS: tuple[str, ...] = (
    CORRECT,
    WRONG_ANSWER,
    PARSE_FAILURE,
    SCRIPT_INVALID,
    SOLVER_FAILURE,
    CLIENT_FAILURE,
)

SCORE_RELATIVE_TOLERANCE = 1e-4

_GOLD_NUMERAL_RE = re.compile(r"^-?\d+(?:\.\d+)?$")
_TRANSCRIPT_NUMERAL_RE = re.compile(r"-?\d[\d,]*(?:\.\d+)?")


class DatasetError(Exception):
    """Base class for dataset loading failures."""


class MissingMarkerError(DatasetError):
    def __init__(self, problem_id: str):
        super().__init__(f"{problem_id}: answer text has no '####' marker")
        self.problem_id = problem_id


class UnparseableGoldError(DatasetError):
    def __init__(self, problem_id: str, raw: str):
        super().__init__(f"{problem_id}: cannot parse gold answer {raw!r}")
        self.problem_id = problem_id
        self.raw = raw


@dataclass(frozen=True)
class Problem:
    id: str
    question: str
    gold_answer: Fraction


@dataclass(frozen=True)
class RunConfig:
    """Model identity and decoding parameters for a run."""

    model: str
    params: DecodingParams = field(default_factory=DecodingParams)
    stop_sequences: tuple[str, ...] = DEFAULT_STOP_SEQUENCES


@dataclass(frozen=True)
class EvalRecord:
    problem_id: str
    transcript: str | None
    script: SolutionScript | None
    outcome: SolveOutcome | None
    predicted: Value | None
    verdict: str
    any_candidate_correct: bool
    principle_warnings: int
    detail: str = ""


@dataclass(frozen=True)
class RunReport:
    variant: str
    dataset: str
    solve_rate: float
    histogram: dict[str, int]
    records: tuple[EvalRecord, ...]
    config: dict[str, Any]

    @property
    def total(self) -> int:
        return sum(self.histogram.values())


# --------------------------------------------------------------------------
# Datasets

def _parse_gold(raw: str, problem_id: str) -> Fraction:
    cleaned = raw.strip().replace(",", "").rstrip(".")
    if cleaned.endswith("%"):
        cleaned = cleaned[:-1]
    if not _GOLD_NUMERAL_RE.match(cleaned):
        raise UnparseableGoldError(problem_id, raw)
    return Fraction(cleaned)


def load_gsm8k(path: str | Path) -> list[Problem]:
    """Grade-school set: JSONL with question/answer fields.

    The gold answer is the numeral after the final ``####`` marker in the
    answer text, with thousands commas stripped.
    """
    problems: list[Problem] = []
    with open(path, encoding="utf-8") as handle:
        for index, line in enumerate(handle):
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            problem_id = str(record.get("id", f"gsm8k-{index:04d}"))
            answer_text = record["answer"]
            marker = answer_text.rfind("####")
            if marker < 0:
                raise MissingMarkerError(problem_id)
            gold = _parse_gold(answer_text[marker + 4 :], problem_id)
            problems.append(Problem(problem_id, record["question"], gold))
    _require_unique_ids(problems, path)
    return problems


def load_algebra(path: str | Path) -> list[Problem]:
    """Algebra set: CSV (question/answer columns) or JSONL records.

    Gold answers must be single numerals; anything else is rejected at
    load time.
    """
    path = Path(path)
    problems: list[Problem] = []
    if path.suffix.lower() in (".csv", ".tsv"):
        dialect = "excel-tab" if path.suffix.lower() == ".tsv" else "excel"
        with open(path, encoding="utf-8", newline="") as handle:
            for index, row in enumerate(csv.DictReader(handle, dialect=dialect)):
                problem_id = str(row.get("id") or f"algebra-{index:04d}")
                gold = _parse_gold(row["answer"], problem_id)
                problems.append(Problem(problem_id, row["question"], gold))
    else:
        with open(path, encoding="utf-8") as handle:
            for index, line in enumerate(handle):
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                problem_id = str(record.get("id", f"algebra-{index:04d}"))
                gold = _parse_gold(str(record["answer"]), problem_id)
                problems.append(Problem(problem_id, record["question"], gold))
    _require_unique_ids(problems, path)
    return problems


def _require_unique_ids(problems: list[Problem], path: str | Path) -> None:
    seen: set[str] = set()
    for problem in problems:
        if problem.id in seen:
            raise DatasetError(f"{path}: duplicate problem id {problem.id!r}")
        seen.add(problem.id)


# --------------------------------------------------------------------------
# Scoring and answer extraction

def score(predicted: Value, gold: Fraction) -> bool:
    """Exact equality for exact values; relative tolerance for floats."""
    if isinstance(predicted, Fraction):
        return predicted == gold
    gold_f = float(gold)
    return abs(predicted - gold_f) <= SCORE_RELATIVE_TOLERANCE * max(1.0, abs(gold_f))


def extract_final_number(transcript: str) -> Fraction | None:
    """Last numeral on the last non-empty line, commas stripped."""
    for line in reversed(transcript.splitlines()):
        if line.strip():
            numerals = _TRANSCRIPT_NUMERAL_RE.findall(line)
            if not numerals:
                return None
            return Fraction(numerals[-1].replace(",", ""))
    return None


def _one_step_script(transcript: str) -> SolutionScript:
    """Synthesize a script from a lone bracketed equation.

    The single-equation convention: one declaration of the form
    ``name = expression``; the left-hand variable is the implicit goal.
    """
    brackets = extract_brackets(transcript)
    declarations = [parse_declaration(raw, span) for raw, span in brackets]
    equations = [d for d in declarations if isinstance(d, EqDecl)]
    if len(equations) != 1 or not isinstance(equations[0].lhs, Var):
        raise ScriptError(
            "expected exactly one equation with a variable on the left"
        )
    equation = equations[0]
    goal = equation.lhs.name
    names = [goal] + sorted(free_vars(equation.rhs) - {goal})
    synthesized: list[VarDecl | EqDecl | GoalDecl] = [VarDecl(n) for n in names]
    synthesized.append(equation)
    synthesized.append(GoalDecl(goal))
    return SolutionScript(tuple(synthesized), goal)


# --------------------------------------------------------------------------
# The per-problem pipeline

def run_problem(
    problem: Problem,
    spec: PromptSpec,
    config: RunConfig,
    mode: ClientMode,
    *,
    transport: Transport | None = None,
) -> EvalRecord:
    """Run one problem end to end and classify the result."""
    prompt = assemble_prompt(spec, problem.question)
    request = CompletionRequest(config.model, prompt, config.params, config.stop_sequences)
    try:
        transcript = complete(request, mode, transport=transport)
    except ClientError as err:
        return EvalRecord(
            problem.id, None, None, None, None, CLIENT_FAILURE, False, 0, str(err)
        )

    try:
        script = script_from_transcript(transcript)
    except ScriptError as err:
        if spec.variant == VARIANT_ONE_STEP:
            try:
                script = _one_step_script(transcript)
            except (ParseError, ScriptError, ExprError) as inner:
                return EvalRecord(
                    problem.id, transcript, None, None, None,
                    SCRIPT_INVALID, False, 0, str(inner),
                )
        else:
            return EvalRecord(
                problem.id, transcript, None, None, None,
                SCRIPT_INVALID, False, 0, str(err),
            )
    except ParseError as err:
        return EvalRecord(
            problem.id, transcript, None, None, None, PARSE_FAILURE, False, 0, str(err)
        )

    warnings = len(check_principles(script, problem.question).warnings)

    if spec.variant == VARIANT_LLM_SOLVES:
        predicted = extract_final_number(transcript)
        if predicted is None:
            return EvalRecord(
                problem.id, transcript, script, None, None,
                SOLVER_FAILURE, False, warnings, "no final number in transcript",
            )
        correct = score(predicted, problem.gold_answer)
        return EvalRecord(
            problem.id, transcript, script, None, predicted,
            CORRECT if correct else WRONG_ANSWER, correct, warnings,
        )

    try:
        outcome = solve_system(EquationSystem.from_script(script))
    except (SolverError, ExprError, ValueError) as err:
        return EvalRecord(
            problem.id, transcript, script, None, None,
            SOLVER_FAILURE, False, warnings, str(err),
        )
    predicted = outcome.selected
    correct = score(predicted, problem.gold_answer)
    any_correct = any(score(c, problem.gold_answer) for c in outcome.candidates)
    return EvalRecord(
        problem.id, transcript, script, outcome, predicted,
        CORRECT if correct else WRONG_ANSWER, any_correct, warnings,
    )


# --------------------------------------------------------------------------
# Record serialization

def _value_to_json(value: Value | None) -> Any:
    if value is None:
        return None
    if isinstance(value, Fraction):
        return format_rational(value)
    return value


def _value_from_json(raw: Any) -> Value | None:
    if raw is None:
        return None
    if isinstance(raw, str):
        return Fraction(raw)
    return float(raw)


def record_to_json(record: EvalRecord) -> dict[str, Any]:
    row: dict[str, Any] = {
        "id": record.problem_id,
        "verdict": record.verdict,
        "predicted": _value_to_json(record.predicted),
        "any_candidate_correct": record.any_candidate_correct,
        "principle_warnings": record.principle_warnings,
        "transcript": record.transcript,
    }
    if record.outcome is not None:
        row["candidates"] = [_value_to_json(c) for c in record.outcome.candidates]
        row["trace"] = list(record.outcome.trace)
    if record.detail:
        row["detail"] = record.detail
    return row


def record_from_json(row: dict[str, Any]) -> EvalRecord:
    outcome = None
    if "candidates" in row:
        candidates = tuple(_value_from_json(c) for c in row["candidates"])
        outcome = SolveOutcome(
            candidates, _value_from_json(row["predicted"]), tuple(row.get("trace", ()))
        )
    return EvalRecord(
        problem_id=row["id"],
        transcript=row.get("transcript"),
        script=None,
        outcome=outcome,
        predicted=_value_from_json(row.get("predicted")),
        verdict=row["verdict"],
        any_candidate_correct=row.get("any_candidate_correct", False),
        principle_warnings=row.get("principle_warnings", 0),
        detail=row.get("detail", ""),
    )


def _record_line(record: EvalRecord) -> str:
    return json.dumps(record_to_json(record), sort_keys=True, ensure_ascii=False)


# --------------------------------------------------------------------------
# Run orchestration

def _spec_digest(spec: PromptSpec) -> str:
    import hashlib

    return hashlib.sha256(assemble_prompt(spec, "").encode("utf-8")).hexdigest()


def _config_snapshot(spec: PromptSpec, config: RunConfig, dataset: str) -> dict[str, Any]:
    return {
        "variant": spec.variant,
        "dataset": dataset,
        "model": config.model,
        "params": {
            "temperature": config.params.temperature,
            "max_tokens": config.params.max_tokens,
            "n_samples": config.params.n_samples,
        },
        "stop_sequences": list(config.stop_sequences),
        "prompt_spec_sha256": _spec_digest(spec),
        "seed": None,
    }


def _aggregate(
    records: Sequence[EvalRecord],
    spec_variant: str,
    dataset: str,
    snapshot: dict[str, Any],
) -> RunReport:
    histogram = {verdict: 0 for verdict in VERDICTS}
    for record in records:
        histogram[record.verdict] += 1
    total = len(records)
    solve_rate = 100.0 * histogram[CORRECT] / total if total else 0.0
    return RunReport(spec_variant, dataset, solve_rate, histogram, tuple(records), snapshot)


class _OrderedWriter:
    """Funnel for out-of-order worker results: emits in dataset order."""

    def __init__(self, sink: Callable[[EvalRecord], None]):
        self._sink = sink
        self._pending: dict[int, EvalRecord] = {}
        self._next = 0
        self._lock = threading.Lock()
        self.emitted: list[EvalRecord] = []

    def push(self, index: int, record: EvalRecord) -> None:
        with self._lock:
            self._pending[index] = record
            while self._next in self._pending:
                ready = self._pending.pop(self._next)
                self._sink(ready)
                self.emitted.append(ready)
                self._next += 1


def run_eval(
    problems: Sequence[Problem],
    spec: PromptSpec,
    mode: ClientMode,
    config: RunConfig,
    *,
    dataset_name: str = "dataset",
    workers: int = 1,
    out_dir: str | Path | None = None,
    force: bool = False,
    transport: Transport | None = None,
) -> RunReport:
    """Evaluate every problem and aggregate a report.

    Records stream to ``out_dir/records.jsonl`` in dataset order as they
    are produced.  An existing records file is refused unless ``force``.
    """
    if not problems:
        raise ValueError("dataset is empty")
    snapshot = _config_snapshot(spec, config, dataset_name)

    handle: io.TextIOBase | None = None
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        records_path = out_dir / "records.jsonl"
        if records_path.exists() and not force:
            raise FileExistsError(
                f"{records_path} already exists; pass force=True (--force) to overwrite"
            )
        handle = open(records_path, "w", encoding="utf-8")
        handle.write(json.dumps({"meta": snapshot}, sort_keys=True, ensure_ascii=False) + "\n")
        handle.flush()

    def sink(record: EvalRecord) -> None:
        if handle is not None:
            handle.write(_record_line(record) + "\n")
            handle.flush()

    writer = _OrderedWriter(sink)
    try:
        if workers <= 1:
            for index, problem in enumerate(problems):
                writer.push(index, run_problem(problem, spec, config, mode, transport=transport))
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                futures = {
                    pool.submit(
                        run_problem, problem, spec, config, mode, transport=transport
                    ): index
                    for index, problem in enumerate(problems)
                }
                remaining = set(futures)
                while remaining:
                    done, remaining = wait(remaining, return_when=FIRST_COMPLETED)
                    for future in done:
                        writer.push(futures[future], future.result())
    finally:
        if handle is not None:
            handle.close()

    report = _aggregate(writer.emitted, spec.variant, dataset_name, snapshot)
    if out_dir is not None:
        emit_report(report, out_dir, formats=("table", "csv"))
    return report


# --------------------------------------------------------------------------
# Reports

def render_report_table(report: RunReport) -> str:
    """Human-readable summary: one rate row plus the verdict histogram."""
    lines = [
        "run report",
        "==========",
        f"variant:    {report.variant}",
        f"dataset:    {report.dataset}",
        f"model:      {report.config.get('model', '?')}",
        f"problems:   {report.total}",
        f"solve rate: {report.solve_rate:.1f}%",
        "",
        "verdict histogram:",
    ]
    width = max(len(v) for v in VERDICTS)
    for verdict in VERDICTS:
        lines.append(f"  {verdict:<{width}}  {report.histogram.get(verdict, 0)}")
    lines.append("")
    lines.append(f"{'variant':<28} {'dataset':<16} {'rate':>6}")
    lines.append(f"{report.variant:<28} {report.dataset:<16} {report.solve_rate:>6.1f}")
    return "\n".join(lines) + "\n"


def render_report_csv(report: RunReport) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["variant", "dataset", "total", "solve_rate", *VERDICTS])
    writer.writerow(
        [
            report.variant,
            report.dataset,
            report.total,
            f"{report.solve_rate:.4f}",
            *[report.histogram.get(v, 0) for v in VERDICTS],
        ]
    )
    return buffer.getvalue()


def emit_report(
    report: RunReport,
    out_dir: str | Path,
    *,
    formats: Iterable[str] = ("table", "csv", "records"),
) -> dict[str, Path]:
    """Write report files; returns {format: path}.  Bytes are deterministic."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}
    for fmt in formats:
        if fmt == "table":
            path = out_dir / "report.txt"
            path.write_text(render_report_table(report), encoding="utf-8")
        elif fmt == "csv":
            path = out_dir / "summary.csv"
            path.write_text(render_report_csv(report), encoding="utf-8")
        elif fmt == "records":
            path = out_dir / "records.jsonl"
            lines = [json.dumps({"meta": report.config}, sort_keys=True, ensure_ascii=False)]
            lines.extend(_record_line(r) for r in report.records)
            path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        else:
            raise ValueError(f"unknown report format {fmt!r}")
        written[fmt] = path
    return written


def report_from_records(path: str | Path) -> RunReport:
    """Re-aggregate a report from a streamed records file.

    Works on partial files from interrupted runs: the histogram reflects
    exactly the records present.
    """
    records: list[EvalRecord] = []
    meta: dict[str, Any] = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle):
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            if "meta" in row and lineno == 0:
                meta = row["meta"]
                continue
            records.append(record_from_json(row))
    return _aggregate(
        records, meta.get("variant", "?"), meta.get("dataset", "?"), meta
    )
