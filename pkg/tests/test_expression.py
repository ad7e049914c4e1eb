import numpy as np
import pytest

from core.errors import ExpressionEvalError, ExpressionSyntaxError
from core.expression import Call, Compare, Expression, Number, Variable, parse, tokenize, variables


def _eval(source, *coords):
    env = np.array([coords], dtype=float) if coords else np.zeros((1, 1))
    return float(Expression(source)(env)[0])


@pytest.mark.parametrize("source,expected", [
    ("1 + 2 * 3", 7.0),
    ("(1 + 2) * 3", 9.0),
    ("2 - 3 - 4", -5.0),
    ("8 / 4 / 2", 1.0),
    ("-2 * 3", -6.0),
    ("--2", 2.0),
    ("+4", 4.0),
    (".5 + 2.", 2.5),
    ("1e-3 * 1E3", 1.0),
    ("-1/3", -1 / 3),
])
def test_arithmetic_precedence(source, expected):
    assert _eval(source) == pytest.approx(expected)


def test_variables_are_one_based():
    assert _eval("x1 - 2 * x2", 5.0, 1.0) == pytest.approx(3.0)


@pytest.mark.parametrize("source,expected", [
    ("abs(-3)", 3.0),
    ("min(4, 2, 7)", 2.0),
    ("max(4, 2, 7)", 7.0),
    ("if(1, 10, 20)", 10.0),
    ("if(0, 10, 20)", 20.0),
])
def test_functions(source, expected):
    assert _eval(source) == expected


@pytest.mark.parametrize("source,expected", [
    ("2 < 3", 1.0),
    ("3 <= 3", 1.0),
    ("3 ≤ 2", 0.0),
    ("3 ≥ 3", 1.0),
    ("2 > 3", 0.0),
    ("2 >= 3", 0.0),
])
def test_comparisons_yield_zero_or_one(source, expected):
    assert _eval(source) == expected


def test_unicode_comparison_aliases_tokenize_to_ascii():
    ops = [t.text for t in tokenize("x1 ≤ 2 ≥") if t.kind == "op"]
    assert ops == ["<=", ">="]


def test_parse_tree_shape():
    tree = parse("if(x1 <= 2, 0, -1/3)")
    assert isinstance(tree, Call)
    assert tree.func == "if"
    assert isinstance(tree.args[0], Compare)
    assert tree.args[0].left == Variable("x1", 0)
    assert tree.args[1] == Number(0.0)


def test_variables_lists_indices():
    assert variables(parse("x3 + abs(x1) * x3")) == [0, 2]


def test_step_formula_matches_step_map():
    f = Expression("if(x1 <= 2, 0, -1/3)")
    env = np.array([[-10.0], [2.0], [2.5], [100.0]])
    assert f(env).tolist() == [0.0, 0.0, -1 / 3, -1 / 3]


def test_vectorized_over_rows():
    f = Expression("1 - x1")
    env = np.array([[2.0, 0.0], [0.5, 0.0], [-1.0, 0.0]])
    assert f(env).tolist() == [-1.0, 0.5, 2.0]


@pytest.mark.parametrize("source", ["1 +", "(1 + 2", "1 2", "abs(1, 2)", "if(1, 2)",
                                    "min(1)", "foo(1)", "1 $ 2", ""])
def test_syntax_errors(source):
    with pytest.raises(ExpressionSyntaxError):
        Expression(source)


def test_syntax_error_reports_column():
    with pytest.raises(ExpressionSyntaxError, match="column 3"):
        Expression("1 $ 2")


def test_unknown_variable_name():
    with pytest.raises(ExpressionEvalError):
        Expression("y + 1")


def test_variable_outside_dimension():
    with pytest.raises(ExpressionEvalError):
        Expression("x3 + 1", dim=2)


def test_division_by_zero():
    f = Expression("1 / x1")
    with pytest.raises(ExpressionEvalError):
        f(np.array([[0.0]]))


def test_division_in_untaken_branch_is_allowed():
    f = Expression("if(x1 > 0, 1 / x1, 0)")
    assert f(np.array([[0.0], [4.0]])).tolist() == [0.0, 0.25]
