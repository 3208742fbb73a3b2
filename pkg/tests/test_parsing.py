from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from declsolve.exprs import Add, Div, Mul, Neg, Num, Pow, Sub, Var, render
from declsolve.parsing import (
    DuplicateDeclarationError,
    EqDecl,
    ExprSyntaxError,
    GoalDecl,
    GoalNotLastError,
    MultipleEqualsError,
    NoDeclarationsError,
    NoGoalError,
    ReservedIdentifierError,
    SolutionScript,
    UndeclaredVariableError,
    UnterminatedBracketError,
    VarDecl,
    build_script,
    check_principles,
    check_transcript,
    extract_brackets,
    parse_declaration,
    parse_expression,
    question_numbers,
    render_script,
    script_from_transcript,
)


# --- expression grammar ------------------------------------------------------

def test_precedence():
    assert parse_expression("1 + 2 * 3") == Add(Num(1), Mul(Num(2), Num(3)))
    assert parse_expression("1 * 2 + 3") == Add(Mul(Num(1), Num(2)), Num(3))
    assert parse_expression("2 ^ 3 * 4") == Mul(Pow(Num(2), Num(3)), Num(4))


def test_left_associativity():
    assert parse_expression("1 - 2 - 3") == Sub(Sub(Num(1), Num(2)), Num(3))
    assert parse_expression("8 / 4 / 2") == Div(Div(Num(8), Num(4)), Num(2))


def test_power_is_right_associative():
    assert parse_expression("2 ^ 3 ^ 2") == Pow(Num(2), Pow(Num(3), Num(2)))


def test_unary_minus_binds_tighter_than_multiplication():
    assert parse_expression("-2 * 3") == Mul(Neg(Num(2)), Num(3))
    assert parse_expression("2 * -3") == Mul(Num(2), Neg(Num(3)))
    assert parse_expression("--x") == Neg(Neg(Var("x")))
    # but looser than ^ : -2^2 is -(2^2)
    assert parse_expression("-2 ^ 2") == Neg(Pow(Num(2), Num(2)))


def test_parentheses_override():
    assert parse_expression("(1 + 2) * 3") == Mul(Add(Num(1), Num(2)), Num(3))


def test_decimals_parse_exactly():
    assert parse_expression("0.25") == Num(Fraction(1, 4))
    assert parse_expression("3.50") == Num(Fraction(7, 2))


def test_no_implicit_multiplication():
    with pytest.raises(ExprSyntaxError):
        parse_expression("2 x")
    with pytest.raises(ExprSyntaxError):
        parse_expression("2(3)")


def test_syntax_error_positions():
    with pytest.raises(ExprSyntaxError) as info:
        parse_expression("1 + ")
    assert info.value.position == 4
    with pytest.raises(ExprSyntaxError):
        parse_expression("(1 + 2")
    with pytest.raises(ExprSyntaxError):
        parse_expression("* 3")
    with pytest.raises(ExprSyntaxError):
        parse_expression("1 $ 2")


# --- brackets and declarations ----------------------------------------------

def test_extract_brackets_spans():
    text = "intro [[var x]] middle [[x = 3]] end"
    got = extract_brackets(text)
    assert [raw for raw, _ in got] == ["var x", "x = 3"]
    (_, span0), (_, span1) = got
    assert text[span0[0] : span0[1]] == "[[var x]]"
    assert text[span1[0] : span1[1]] == "[[x = 3]]"


def test_unterminated_bracket():
    with pytest.raises(UnterminatedBracketError):
        extract_brackets("start [[var x")


def test_parse_declaration_forms():
    assert parse_declaration("var total") == VarDecl("total")
    decl = parse_declaration("x + y = 12")
    assert decl == EqDecl(Add(Var("x"), Var("y")), Num(12))
    assert parse_declaration("answer = x") == GoalDecl("x")


def test_parse_declaration_rejects_garbage():
    with pytest.raises(ExprSyntaxError):
        parse_declaration("var")
    with pytest.raises(ExprSyntaxError):
        parse_declaration("var x y")
    with pytest.raises(ExprSyntaxError):
        parse_declaration("var 3")
    with pytest.raises(MultipleEqualsError):
        parse_declaration("x = y = 3")
    with pytest.raises(ExprSyntaxError):
        parse_declaration("answer = x + 1")  # goal must name a variable


def test_script_structure_errors_carry_principles():
    # no goal
    with pytest.raises(NoGoalError) as info:
        build_script([VarDecl("x"), EqDecl(Var("x"), Num(1))])
    assert info.value.principle == 2
    # goal not last
    with pytest.raises(GoalNotLastError):
        build_script([VarDecl("x"), GoalDecl("x"), EqDecl(Var("x"), Num(1))])
    # forward reference
    with pytest.raises(UndeclaredVariableError) as info:
        build_script([VarDecl("x"), EqDecl(Var("x"), Var("y")), GoalDecl("x")])
    assert info.value.principle == 3
    # duplicate introduction
    with pytest.raises(DuplicateDeclarationError) as info:
        build_script([VarDecl("x"), VarDecl("x"), GoalDecl("x")])
    assert info.value.principle == 4
    # reserved name
    with pytest.raises(ReservedIdentifierError):
        build_script([VarDecl("answer"), GoalDecl("answer")])


def test_goal_must_reference_declared_variable():
    with pytest.raises(UndeclaredVariableError):
        build_script([VarDecl("x"), EqDecl(Var("x"), Num(1)), GoalDecl("y")])


def test_script_from_transcript():
    text = (
        "Let [[var x]] be a number and [[var y]] another. "
        "Then [[x + y = 12]] and [[x - y = 4]]. So [[answer = x]]."
    )
    script = script_from_transcript(text)
    assert script.goal == "x"
    assert script.variables == ("x", "y")
    assert len(script.equations) == 2


def test_transcript_without_brackets_is_a_parse_failure():
    with pytest.raises(NoDeclarationsError):
        script_from_transcript("There are no declarations here, just 42.")


def test_render_script_round_trips():
    text = "[[var x]] [[var y]] [[x + y = 12]] [[x - y = 4]] [[answer = x]]"
    script = script_from_transcript(text)
    rendered = render_script(script)
    assert rendered.splitlines() == [
        "var x",
        "var y",
        "(x + y) = 12",
        "(x - y) = 4",
        "answer = x",
    ]
    reparsed = script_from_transcript(
        " ".join(f"[[{line}]]" for line in rendered.splitlines())
    )
    assert reparsed == script


# --- question numbers and principles ------------------------------------------

def test_question_numbers_dedupe_and_percent():
    numbers = question_numbers("He paid 1,200 twice: 1,200 at 15% interest.")
    faces = [face for face, _ in numbers]
    assert faces == [Fraction(1200), Fraction(15)]
    _, aliases = numbers[1]
    assert aliases == frozenset({Fraction(15), Fraction(3, 20)})


def test_check_principles_warns_on_unused_numbers():
    script = script_from_transcript("[[var x]] [[x = 4]] [[answer = x]]")
    report = check_principles(script, "Tom has 4 apples and 3 pears. How many apples?")
    assert not report.failures
    assert len(report.warnings) == 1
    assert report.unused_question_numbers == (Fraction(3),)
    assert report.warnings[0].principle == 5
    assert report.ok  # warnings never invalidate a script


def test_check_principles_percent_alias_counts_as_used():
    script = script_from_transcript(
        "[[var p]] [[var s]] [[s = p - 0.30 * p]] [[s = 84]] [[answer = p]]"
    )
    report = check_principles(script, "A 30% discount brings the price to 84.")
    assert report.warnings == ()
    assert report.ok


def test_check_transcript_maps_errors_to_principles():
    # syntax failure inside a bracket -> principle 1
    result = check_transcript("[[var x]] [[x ++ = 3]] [[answer = x]]")
    assert result.script is None
    assert [v.principle for v in result.report.failures] == [1]
    # structural failure keeps its own principle
    result = check_transcript("[[var x]] [[x = 3]]")
    assert result.script is None
    assert [v.principle for v in result.report.failures] == [2]


def test_check_transcript_ok_path():
    result = check_transcript(
        "[[var x]] [[x = 12]] [[answer = x]]", question="What is 12?"
    )
    assert result.script is not None
    assert result.report.ok


# --- the grammar round-trip property ------------------------------------------

identifiers = st.sampled_from(["x", "y", "zed", "total_9"])
literals = st.one_of(
    st.integers(min_value=0, max_value=10**6).map(Num),
    st.builds(
        lambda whole, frac: Num(Fraction(f"{whole}.{frac}")),
        st.integers(min_value=0, max_value=999),
        st.integers(min_value=0, max_value=999),
    ),
)


@st.composite
def parser_image_exprs(draw, depth=5):
    """Trees the renderer can print and the parser can read back verbatim."""
    if depth == 0:
        return draw(st.one_of(literals, identifiers.map(Var)))
    kind = draw(st.integers(min_value=0, max_value=7))
    if kind == 0:
        return draw(literals)
    if kind == 1:
        return Var(draw(identifiers))
    if kind == 2:
        return Neg(draw(parser_image_exprs(depth=depth - 1)))
    if kind == 7:
        return Pow(
            draw(parser_image_exprs(depth=depth - 1)),
            draw(parser_image_exprs(depth=depth - 1)),
        )
    ctor = {3: Add, 4: Sub, 5: Mul, 6: Div}[kind]
    return ctor(
        draw(parser_image_exprs(depth=depth - 1)),
        draw(parser_image_exprs(depth=depth - 1)),
    )


@given(parser_image_exprs())
def test_parse_render_round_trip(e):
    assert parse_expression(render(e)) == e
