import math

import numpy as np
import pytest

from upkolmo import exprdsl as E
from genexpr import central_difference, random_bindings, random_expr, \
    usable_point


def ev(text, **bindings):
    return E.evaluate(E.parse(text), bindings)


class TestParseEval:
    def test_quadratic(self):
        assert ev("lambda^2/2", **{"lambda": 3.0}) == pytest.approx(4.5)

    def test_sin_zero(self):
        assert ev("sin(lambda)", **{"lambda": 0.0}) == pytest.approx(0.0)

    def test_negated_product(self):
        # hand evaluation: -(1+1)*2 = -4
        assert ev("-(x+1)*2", x=1.0) == pytest.approx(-4.0)

    def test_identity(self):
        assert ev("lambda", **{"lambda": 7.0}) == 7.0

    def test_exp_zero(self):
        assert ev("exp(0)") == pytest.approx(1.0)

    def test_mixed(self):
        assert ev("lambda^2/2 + sin(x)", x=0.0, **{"lambda": 2.0}) \
            == pytest.approx(2.0)

    def test_power_right_assoc(self):
        assert ev("2^3^2") == 512.0

    def test_subtraction_left_assoc(self):
        assert ev("2-3-4") == -5.0

    def test_scientific_notation(self):
        assert ev("1.5e-3 + 2E2") == pytest.approx(0.0015 + 200.0)

    def test_two_argument_functions(self):
        assert ev("min(2, 3)") == 2.0
        assert ev("max(2, 3)") == 3.0

    def test_array_broadcast(self):
        vals = E.evaluate(E.parse("lambda^2"), {"lambda": np.array([1.0, 2.0])})
        assert np.allclose(vals, [1.0, 4.0])


class TestErrors:
    def test_unbound_variable(self):
        with pytest.raises(E.UnboundVariableError):
            ev("x + s", x=1.0)

    def test_division_by_zero(self):
        with pytest.raises(E.DomainError):
            ev("1/x", x=0.0)

    def test_sqrt_negative(self):
        with pytest.raises(E.DomainError):
            ev("sqrt(x)", x=-1.0)

    def test_unknown_identifier_offset(self):
        with pytest.raises(E.ExprSyntaxError) as exc:
            E.parse("2 + foo")
        assert exc.value.offset == 4
        assert "foo" in str(exc.value)

    def test_unbalanced_paren(self):
        with pytest.raises(E.ExprSyntaxError) as exc:
            E.parse("(1 + 2")
        assert "')'" in exc.value.expected

    def test_trailing_input(self):
        with pytest.raises(E.ExprSyntaxError):
            E.parse("1 2")

    def test_missing_argument_count(self):
        with pytest.raises(E.ExprSyntaxError):
            E.parse("min(1)")

    def test_fractional_power_of_negative(self):
        with pytest.raises(E.DomainError):
            ev("x^0.5", x=-2.0)


class TestDual:
    def test_quadratic(self):
        v, d = E.eval_dual(E.parse("lambda^2/2"), {"lambda": 3.0}, "lambda")
        assert (v, d) == (pytest.approx(4.5), pytest.approx(3.0))

    def test_sin(self):
        v, d = E.eval_dual(E.parse("sin(lambda)"), {"lambda": 0.0}, "lambda")
        assert (v, d) == (pytest.approx(0.0), pytest.approx(1.0))

    def test_product_rule(self):
        # d/dl [l e^l] = (1 + l) e^l -> 2e at l = 1
        v, d = E.eval_dual(E.parse("lambda*exp(lambda)"), {"lambda": 1.0},
                           "lambda")
        assert v == pytest.approx(math.e)
        assert d == pytest.approx(2.0 * math.e)
        fd = central_difference(E.parse("lambda*exp(lambda)"),
                                {"lambda": 1.0}, "lambda")
        assert d == pytest.approx(fd, abs=1e-8)

    def test_abs_kink_right_limit(self):
        _, d = E.eval_dual(E.parse("abs(x)"), {"x": 0.0}, "x")
        assert d == 1.0

    def test_minmax_tie_first_argument(self):
        _, d = E.eval_dual(E.parse("max(x, 2*x)"), {"x": 0.0}, "x")
        assert d == 1.0
        _, d = E.eval_dual(E.parse("min(x, 2*x)"), {"x": 0.0}, "x")
        assert d == 1.0

    def test_unseeded_variable_zero(self):
        _, d = E.eval_dual(E.parse("x + s"), {"x": 1.0, "s": 2.0}, "x")
        assert d == 1.0

    def test_negative_base_integer_power(self):
        v, d = E.eval_dual(E.parse("lambda^2"), {"lambda": -3.0}, "lambda")
        assert v == pytest.approx(9.0)
        assert d == pytest.approx(-6.0)

    def test_array_dual(self):
        lam = np.linspace(-1, 1, 11)
        v, d = E.eval_dual(E.parse("lambda^3"), {"lambda": lam}, "lambda")
        assert np.allclose(d, 3 * lam ** 2)


def test_dual_matches_central_difference_on_random_expressions():
    rng = np.random.default_rng(20240811)
    checked = 0
    while checked < 100:
        expr = random_expr(rng, depth=rng.integers(1, 7), smooth=True)
        point = random_bindings(rng)
        if not usable_point(expr, point, "lambda"):
            continue
        _, dual = E.eval_dual(expr, point, "lambda")
        fd = central_difference(expr, point, "lambda")
        assert abs(float(dual) - float(fd)) <= 1e-6 * (1.0 + abs(float(dual)))
        checked += 1


def test_print_round_trip_pointwise():
    rng = np.random.default_rng(77)
    for _ in range(60):
        expr = random_expr(rng, depth=rng.integers(1, 6), smooth=False)
        text = E.to_string(expr)
        back = E.parse(text)
        agreements = 0
        for _ in range(32):
            point = random_bindings(rng)
            try:
                a = E.evaluate(expr, point)
            except E.DomainError:
                continue
            b = E.evaluate(back, point)
            if np.isfinite(a) and np.isfinite(b):
                assert float(a) == pytest.approx(float(b), rel=1e-12,
                                                 abs=1e-12), text
                agreements += 1
        assert agreements > 0, f"no usable points for {text}"


def test_parse_is_deterministic():
    assert E.parse("1 + lambda*2") == E.parse("1 + lambda*2")
