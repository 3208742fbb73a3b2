"""Few-shot prompt assembly for the formalization variants.

A prompt is a fixed-byte concatenation: an optional instruction header,
an optional variant banner, k worked (question, solution) exemplars, and
the test question with an empty solution slot for the model to complete.
Identical inputs always assemble to identical bytes — the replay cassette
layer depends on that.

Exemplars live in sentinel-delimited text files (see docs/FORMATS.md),
never in code.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .parsing import ParseError, ScriptError, extract_brackets, script_from_transcript

QUESTION_PREFIX = "Question: "
SOLUTION_PREFIX = "Solution:"
BLOCK_SEPARATOR = "\n\n"

# Stop generation when the model starts inventing a next question block.
DEFAULT_STOP_SEQUENCES: tuple[str, ...] = ("Question:",)

VARIANT_DECLARATIVE = "declarative"
VARIANT_PRINCIPLES = "declarative_principles"
VARIANT_LLM_SOLVES = "declarative_llm_solves"
VARIANT_ONE_STEP = "one_step_declarative"

VARIANTS: tuple[str, ...] = (
    VARIANT_DECLARATIVE,
    VARIANT_PRINCIPLES,
    VARIANT_LLM_SOLVES,
    VARIANT_ONE_STEP,
)

_HEADER_LINES = (
    "1. Introduce each quantity as a named variable and state each fact as"
    " an equation, writing every declaration inside double square brackets.",
    "2. The last declaration names the answer variable, written"
    " [[answer = x]].",
    "3. An equation may mention only variables that were introduced earlier.",
    "4. Never introduce the same variable twice.",
    "5. Use every number that appears in the question in at least one"
    " equation.",
)

# Per-variant banner lines.  They mark the variant in the prompt bytes, so
# two variants sharing an exemplar set still assemble distinct prompts.
VARIANT_BANNERS: dict[str, str] = {
    VARIANT_LLM_SOLVES: (
        "After stating the variables and equations, compute the final answer"
        " and give it on the last line."
    ),
    VARIANT_ONE_STEP: (
        "Translate each problem into a single equation whose left side names"
        " the answer variable."
    ),
}

_EXEMPLAR_FILES: dict[str, str] = {
    VARIANT_DECLARATIVE: "declarative_3shot.txt",
    VARIANT_PRINCIPLES: "declarative_3shot.txt",
    VARIANT_LLM_SOLVES: "declarative_llm_solves_3shot.txt",
    VARIANT_ONE_STEP: "one_step_3shot.txt",
}

_QUESTION_SENTINEL = "=== QUESTION ==="
_SOLUTION_SENTINEL = "=== SOLUTION ==="


class PromptError(Exception):
    """Base class for prompt-kit failures."""


class FormatError(PromptError):
    """The exemplar file does not follow the sentinel format."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class InvalidExemplarScript(PromptError):
    """An exemplar solution's brackets do not build a valid script."""

    def __init__(self, index: int, cause: ParseError | ScriptError):
        super().__init__(f"exemplar {index}: {cause}")
        self.index = index
        self.cause = cause


@dataclass(frozen=True)
class Exemplar:
    """One worked (question, solution) pair shown to the model."""

    question: str
    solution: str


@dataclass(frozen=True)
class DecodingParams:
    temperature: float = 0.0
    max_tokens: int = 600
    n_samples: int = 1

    def __post_init__(self):
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")
        if self.n_samples < 1:
            raise ValueError("n_samples must be at least 1")


@dataclass(frozen=True)
class PromptSpec:
    """Everything that determines the assembled prompt bytes."""

    variant: str
    exemplars: tuple[Exemplar, ...]
    principles_header: str | None = field(default=None)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(
                f"unknown variant {self.variant!r}; expected one of {VARIANTS}"
            )
        if self.variant in (VARIANT_PRINCIPLES, VARIANT_LLM_SOLVES):
            if not self.principles_header:
                raise ValueError(f"variant {self.variant!r} requires a header")
        if self.variant == VARIANT_ONE_STEP:
            for i, ex in enumerate(self.exemplars):
                brackets = extract_brackets(ex.solution)
                if len(brackets) != 1:
                    raise ValueError(
                        f"one-step exemplar {i} must contain exactly one"
                        f" bracketed declaration, found {len(brackets)}"
                    )


def principles_header_text() -> str:
    """The numbered formalization rules, byte-stable across calls."""
    return "\n".join(_HEADER_LINES)


def assemble_prompt(spec: PromptSpec, question: str) -> str:
    """Concatenate header, banner, exemplars, and the test question.

    Blocks are joined with blank lines; the final block is the test
    question with an empty solution slot (``Solution:`` with nothing after
    it) for the model to complete.
    """
    blocks: list[str] = []
    if spec.principles_header:
        blocks.append(spec.principles_header)
    banner = VARIANT_BANNERS.get(spec.variant)
    if banner:
        blocks.append(banner)
    for ex in spec.exemplars:
        blocks.append(
            f"{QUESTION_PREFIX}{ex.question}{BLOCK_SEPARATOR}"
            f"{SOLUTION_PREFIX} {ex.solution}"
        )
    blocks.append(f"{QUESTION_PREFIX}{question}{BLOCK_SEPARATOR}{SOLUTION_PREFIX}")
    return BLOCK_SEPARATOR.join(blocks)


# --------------------------------------------------------------------------
# Exemplar files

def parse_exemplars(text: str) -> list[Exemplar]:
    """Parse sentinel-delimited exemplar text (no script validation here)."""
    exemplars: list[Exemplar] = []
    question_lines: list[str] | None = None
    solution_lines: list[str] | None = None
    start_line = 0

    def flush(line: int) -> None:
        nonlocal question_lines, solution_lines
        if question_lines is None:
            return
        if solution_lines is None:
            raise FormatError(start_line, "question block has no solution block")
        question = "\n".join(question_lines).strip()
        solution = "\n".join(solution_lines).strip()
        if not question:
            raise FormatError(start_line, "empty question block")
        if not solution:
            raise FormatError(start_line, "empty solution block")
        exemplars.append(Exemplar(question, solution))
        question_lines = solution_lines = None

    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped == _QUESTION_SENTINEL:
            flush(lineno)
            question_lines = []
            start_line = lineno
        elif stripped == _SOLUTION_SENTINEL:
            if question_lines is None:
                raise FormatError(lineno, "solution sentinel before any question")
            if solution_lines is not None:
                raise FormatError(lineno, "duplicate solution sentinel")
            solution_lines = []
        elif solution_lines is not None:
            solution_lines.append(line)
        elif question_lines is not None:
            question_lines.append(line)
        elif stripped:
            raise FormatError(lineno, "text before the first question sentinel")
    flush(-1)
    if not exemplars:
        raise FormatError(1, "no exemplars in file")
    return exemplars


def render_exemplars(exemplars: list[Exemplar] | tuple[Exemplar, ...]) -> str:
    parts = []
    for ex in exemplars:
        parts.append(f"{_QUESTION_SENTINEL}\n{ex.question}\n")
        parts.append(f"{_SOLUTION_SENTINEL}\n{ex.solution}\n")
    return "\n".join(parts)


def validate_exemplar_scripts(exemplars: list[Exemplar]) -> None:
    """Require every solution's brackets to build a valid script."""
    for i, ex in enumerate(exemplars):
        try:
            script_from_transcript(ex.solution)
        except (ParseError, ScriptError) as err:
            raise InvalidExemplarScript(i, err) from err


def load_exemplars(path: str | Path, *, require_scripts: bool = True) -> list[Exemplar]:
    """Load exemplars from a sentinel-delimited file.

    With ``require_scripts`` (the default, right for the declarative
    variants) each solution must parse into a valid script.  One-step
    exemplar files hold bare equations, not full scripts — load those with
    ``require_scripts=False``.
    """
    text = Path(path).read_text(encoding="utf-8")
    exemplars = parse_exemplars(text)
    if require_scripts:
        validate_exemplar_scripts(exemplars)
    return exemplars


def dump_exemplars(path: str | Path, exemplars: list[Exemplar] | tuple[Exemplar, ...]) -> None:
    Path(path).write_text(render_exemplars(exemplars), encoding="utf-8")


def default_exemplar_path(variant: str) -> Path:
    """Filesystem path of the packaged exemplar file for a variant."""
    if variant not in _EXEMPLAR_FILES:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    root = resources.files("declsolve").joinpath("data", "exemplars")
    return Path(str(root.joinpath(_EXEMPLAR_FILES[variant])))


def spec_for_variant(
    variant: str,
    exemplars: list[Exemplar] | tuple[Exemplar, ...] | None = None,
) -> PromptSpec:
    """A ready-to-use PromptSpec: packaged exemplars plus the right header."""
    if exemplars is None:
        exemplars = load_exemplars(
            default_exemplar_path(variant),
            require_scripts=variant != VARIANT_ONE_STEP,
        )
    header = (
        principles_header_text()
        if variant in (VARIANT_PRINCIPLES, VARIANT_LLM_SOLVES)
        else None
    )
    return PromptSpec(variant, tuple(exemplars), header)
