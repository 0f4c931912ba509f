import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finslerjet import exprdsl, jets
from finslerjet.errors import DimensionError, DomainError, ParseError
from finslerjet.exprdsl import BinOp, Call, Neg, Num, Pow, Var
from finslerjet.jets import Jet


def test_parse_examples():
    e = exprdsl.parse("0.5*(x1^2 + x2^2)", 2)
    assert e == BinOp("*", Num(0.5), BinOp("+", Pow(Var(1), 2), Pow(Var(2), 2)))
    e = exprdsl.parse("sin(x1)*cos(x2)", 2)
    assert e == BinOp("*", Call("sin", Var(1)), Call("cos", Var(2)))


def test_precedence():
    assert exprdsl.parse("-x1^2", 1) == Neg(Pow(Var(1), 2))
    assert exprdsl.parse("1-2-3", 1) == BinOp("-", BinOp("-", Num(1.0), Num(2.0)), Num(3.0))
    assert exprdsl.parse("x^2^3", 1) == Pow(Var(1), 8)
    assert exprdsl.parse("x^-2", 1) == Pow(Var(1), -2)


def test_dimension_errors():
    with pytest.raises(DimensionError):
        exprdsl.parse("x3", 2)
    with pytest.raises(DimensionError):
        exprdsl.parse("x + x1", 2)


@pytest.mark.parametrize("src", ["x1 +", "sin x1", "(x1", "x1 ^ 0.5", "foo(x1)", "x1 $ 2", "1.2.3"])
def test_parse_errors_carry_offset(src):
    with pytest.raises(ParseError) as info:
        exprdsl.parse(src, 1)
    assert 0 <= info.value.offset <= len(src.encode())


def test_eval_examples():
    j = exprdsl.eval_jet(exprdsl.parse("x1^2", 1), [Jet.seed(3.0, 0, 1, 2)])
    np.testing.assert_allclose(j.coeffs, [9.0, 6.0, 1.0])
    with pytest.raises(DomainError):
        exprdsl.eval_jet(exprdsl.parse("sqrt(x1)", 1), [Jet.seed(-1.0, 0, 1, 2)])
    j = exprdsl.eval_jet(exprdsl.parse("exp(x1+x2)", 2), [Jet.seed(0.0, 0, 2, 2), Jet.seed(0.0, 1, 2, 2)])
    assert jets.extract_derivative(j, (1, 1)) == pytest.approx(1.0, abs=1e-15)


# -- random trees ----------------------------------------------------------------


def random_tree(rng, depth, dim=3):
    if depth == 0 or rng.random() < 0.25:
        if rng.random() < 0.5:
            return Var(int(rng.integers(1, dim + 1)))
        return Num(float(np.round(rng.uniform(0, 3), int(rng.integers(0, 4)))))
    kind = rng.integers(0, 4)
    if kind == 0:
        return Neg(random_tree(rng, depth - 1, dim))
    if kind == 1:
        return BinOp(str(rng.choice(list("+-*/"))), random_tree(rng, depth - 1, dim), random_tree(rng, depth - 1, dim))
    if kind == 2:
        return Pow(random_tree(rng, depth - 1, dim), int(rng.integers(-3, 4)))
    return Call(str(rng.choice(exprdsl.FUNCTIONS)), random_tree(rng, depth - 1, dim))


def test_print_parse_round_trip():
    rng = np.random.default_rng(3)
    for _ in range(1000):
        e = random_tree(rng, 6)
        assert exprdsl.parse(exprdsl.to_string(e), 3) == e


def safe_tree(rng, depth):
    """Random smooth expressions that stay away from singularities near [-0.5, 0.5]^2."""
    if depth == 0 or rng.random() < 0.3:
        return Var(int(rng.integers(1, 3))) if rng.random() < 0.6 else Num(float(rng.uniform(0.1, 1.0)))
    a = safe_tree(rng, depth - 1)
    kind = rng.integers(0, 6)
    if kind == 0:
        return BinOp(str(rng.choice(list("+-*"))), a, safe_tree(rng, depth - 1))
    if kind == 1:
        # 1 + a^2 stays positive
        return BinOp("/", a, BinOp("+", Num(1.0), Pow(safe_tree(rng, depth - 1), 2)))
    if kind == 2:
        return Call(str(rng.choice(["sin", "cos", "arctan"])), a)
    if kind == 3:
        return Call("exp", BinOp("*", Num(0.3), Call("sin", a)))
    if kind == 4:
        return Call(str(rng.choice(["sqrt", "ln"])), BinOp("+", Num(2.0), Call("cos", a)))
    return Neg(Pow(a, int(rng.integers(0, 4))))


def test_degree_zero_matches_float():
    rng = np.random.default_rng(11)
    for _ in range(300):
        e = safe_tree(rng, 5)
        x = rng.uniform(-0.5, 0.5, size=2)
        jv = exprdsl.eval_jet(e, [Jet.constant(v, 2, 0) for v in x]).value
        fv = exprdsl.eval_float(e, x)
        assert abs(jv - fv) <= 1e-15 * max(1.0, abs(fv))


def test_jet_derivatives_match_fd():
    rng = np.random.default_rng(12)
    for _ in range(60):
        e = safe_tree(rng, 4)
        x = rng.uniform(-0.5, 0.5, size=2)
        j = exprdsl.eval_jet(e, [Jet.seed(x[0], 0, 2, 3), Jet.seed(x[1], 1, 2, 3)])
        f = lambda z: exprdsl.eval_float(e, z)
        for alpha in [(1, 0), (0, 1), (1, 1), (2, 0), (0, 3), (2, 1)]:
            exact = jets.extract_derivative(j, alpha)
            fd = jets.fd_oracle(f, x, alpha, richardson=True)
            assert abs(fd - exact) <= 1e-5 * max(1.0, abs(exact)), (exprdsl.to_string(e), alpha)


def test_symbolic_diff_matches_jets():
    rng = np.random.default_rng(13)
    for _ in range(100):
        e = safe_tree(rng, 4)
        x = rng.uniform(-0.5, 0.5, size=2)
        j = exprdsl.eval_jet(e, [Jet.seed(x[0], 0, 2, 1), Jet.seed(x[1], 1, 2, 1)])
        for k, g in enumerate(exprdsl.gradient(e, 2)):
            want = jets.extract_derivative(j, (1 - k, k))
            assert abs(exprdsl.eval_float(g, x) - want) <= 1e-12 * max(1.0, abs(want))


def test_substitute_and_const():
    inner = exprdsl.parse("2*x", 1)
    outer = exprdsl.parse("sin(x)^2", 1)
    comp = exprdsl.substitute(outer, inner)
    assert exprdsl.eval_float(comp, [0.3]) == pytest.approx(math.sin(0.6) ** 2, rel=1e-15)
    assert exprdsl.const(-2.5) == Neg(Num(2.5))
    assert exprdsl.max_variable(exprdsl.parse("x1 + sin(x3)", 3)) == 3


@settings(max_examples=200)
@given(st.floats(0, 1e6, allow_nan=False, allow_infinity=False))
def test_number_literals_round_trip(v):
    assert exprdsl.parse(exprdsl.to_string(Num(v)), 1) == Num(v)
