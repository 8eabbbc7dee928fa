from __future__ import annotations

import pytest

from storysync.script.expr import (
    ExprError,
    eval_expr,
    expr_names,
    infer_type,
    parse_expr,
    render_expr,
)


@pytest.mark.parametrize(
    "src,env,expected",
    [
        ("1 + 2", {}, 3),
        ("10 - 3 - 2", {}, 5),
        ("points + 500", {"points": 100}, 600),
        ("points > 500", {"points": 600}, True),
        ("points < 500", {"points": 600}, False),
        ("mood == 'calm'", {"mood": "calm"}, True),
        ("mood != 'calm'", {"mood": "angry"}, True),
        ("true", {}, True),
        ("false", {}, False),
        ("done == true", {"done": False}, False),
        ("-5 + 10", {}, 5),
        ("x > -1", {"x": 0}, True),
        ("'it\\'s'", {}, "it's"),
    ],
)
def test_eval(src, env, expected):
    assert eval_expr(parse_expr(src), env) == expected


@pytest.mark.parametrize(
    "src",
    ["", "1 +", "== 3", "'unterminated", "a ? b", "1 2", "points ="],
)
def test_malformed(src):
    with pytest.raises(ExprError):
        parse_expr(src)


def test_unknown_variable_at_eval():
    with pytest.raises(ExprError):
        eval_expr(parse_expr("ghost + 1"), {})


@pytest.mark.parametrize(
    "src,types,expected",
    [
        ("points + 1", {"points": "int"}, "int"),
        ("points > 1", {"points": "int"}, "bool"),
        ("mood == 'x'", {"mood": "str"}, "bool"),
        ("flag == true", {"flag": "bool"}, "bool"),
    ],
)
def test_infer(src, types, expected):
    assert infer_type(parse_expr(src), types) == expected


@pytest.mark.parametrize(
    "src,types",
    [
        ("mood + 1", {"mood": "str"}),
        ("mood > 'a'", {"mood": "str"}),
        ("points == 'x'", {"points": "int"}),
        ("flag + flag", {"flag": "bool"}),
    ],
)
def test_infer_rejects_bad_types(src, types):
    with pytest.raises(ExprError):
        infer_type(parse_expr(src), types)


def test_names():
    assert expr_names(parse_expr("a + b == c")) == {"a", "b", "c"}


@pytest.mark.parametrize(
    "src",
    ["points + 500", "mood == 'calm'", "a - -1", "flag != false", "'it\\'s' == mood"],
)
def test_render_round_trip(src):
    expr = parse_expr(src)
    assert parse_expr(render_expr(expr)) == expr
