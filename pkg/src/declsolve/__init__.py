"""Solve math word problems by declarative formalization.

A completion-style language model translates a word problem into variables
and equations (written in double square brackets, interleaved with prose);
this package parses that formalization into a script, solves the equation
system with exact rational arithmetic, and evaluates the whole pipeline
against word-problem datasets with deterministic record/replay.
"""

from .client import (
    CassetteMissError,
    Cassette,
    ClientError,
    CompletionRequest,
    EndpointError,
    Live,
    RecordThrough,
    Replay,
    append_record,
    complete,
    fingerprint,
    write_cassette,
)
from .exprs import (
    Add,
    Div,
    Expr,
    Mul,
    Neg,
    Num,
    Pow,
    Rational,
    Sub,
    Var,
    eval_exact,
    free_vars,
    linear_form,
    render,
    substitute,
)
from .evaluation import (
    EvalRecord,
    Problem,
    RunConfig,
    RunReport,
    load_algebra,
    load_gsm8k,
    run_eval,
    run_problem,
    score,
)
from .parsing import (
    EqDecl,
    GoalDecl,
    ParseError,
    ScriptError,
    SolutionScript,
    VarDecl,
    build_script,
    check_principles,
    check_transcript,
    extract_brackets,
    parse_declaration,
    parse_expression,
    render_script,
    script_from_transcript,
)
from .prompts import (
    DecodingParams,
    Exemplar,
    PromptSpec,
    VARIANTS,
    assemble_prompt,
    load_exemplars,
    principles_header_text,
    spec_for_variant,
)
from .solver import (
    EquationSystem,
    SolveOutcome,
    SolverError,
    forward_substitute,
    select_answer,
    solve_linear,
    solve_script,
    solve_system,
    solve_univariate,
)

__version__ = "0.1.0"

__all__ = [
    "Add",
    "Cassette",
    "CassetteMissError",
    "ClientError",
    "CompletionRequest",
    "DecodingParams",
    "Div",
    "EndpointError",
    "EqDecl",
    "EquationSystem",
    "EvalRecord",
    "Exemplar",
    "Expr",
    "GoalDecl",
    "Live",
    "Mul",
    "Neg",
    "Num",
    "ParseError",
    "Pow",
    "Problem",
    "PromptSpec",
    "Rational",
    "RecordThrough",
    "Replay",
    "RunConfig",
    "RunReport",
    "ScriptError",
    "SolutionScript",
    "SolveOutcome",
    "SolverError",
    "Sub",
    "VARIANTS",
    "Var",
    "VarDecl",
    "append_record",
    "assemble_prompt",
    "build_script",
    "check_principles",
    "check_transcript",
    "complete",
    "eval_exact",
    "extract_brackets",
    "fingerprint",
    "forward_substitute",
    "free_vars",
    "linear_form",
    "load_algebra",
    "load_exemplars",
    "load_gsm8k",
    "parse_declaration",
    "parse_expression",
    "principles_header_text",
    "render",
    "render_script",
    "run_eval",
    "run_problem",
    "score",
    "script_from_transcript",
    "select_answer",
    "solve_linear",
    "solve_script",
    "solve_system",
    "solve_univariate",
    "spec_for_variant",
    "substitute",
    "write_cassette",
]
