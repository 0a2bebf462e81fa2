"""Expression parser and potential fields."""

import math

import numpy as np
import pytest

from strip_spectrum.exceptions import ConfigError
from strip_spectrum.potential import (
    Expression,
    ExpressionPotential,
    GridPotential,
    check_nonnegative,
    zero_potential,
)


def _value(source: str, **values) -> float:
    return float(Expression(source)(**{"x1": 0.0, "x2": 0.0, **values}))


class TestExpression:
    @pytest.mark.parametrize("source,expected", [
        ("2^3^2", 512.0),
        ("-2^2", -4.0),
        ("2**3", 8.0),
        ("1 + 2*3", 7.0),
        ("(1 + 2)*3", 9.0),
        ("8/4/2", 1.0),
        ("2*-3", -6.0),
        ("1.5e1 + .5", 15.5),
        ("cos(pi)", -1.0),
        ("exp(0) + abs(-2)", 3.0),
    ])
    def test_arithmetic(self, source, expected):
        assert _value(source) == pytest.approx(expected)

    def test_constant_folding(self):
        expr = Expression("2*pi/4 + sin(0)")
        assert expr.is_constant
        assert expr.constant_value == pytest.approx(math.pi / 2)

    def test_variables_are_not_folded(self):
        expr = Expression("1 + x1")
        assert not expr.is_constant
        with pytest.raises(ValueError, match="not constant"):
            expr.constant_value

    def test_indicator_is_closed(self):
        out = Expression("indicator(x1, -1, 1)")(x1=np.array([-1.0, 0.0, 1.0, 1.5]), x2=np.zeros(4))
        assert out.tolist() == [1.0, 1.0, 1.0, 0.0]

    def test_broadcasts_constant(self):
        out = Expression("3")(x1=np.zeros((2, 3)), x2=np.zeros((2, 3)))
        assert out.shape == (2, 3)
        assert np.all(out == 3.0)

    def test_custom_variables(self):
        assert float(Expression("2*s + 1", ("s",))(s=1.5)) == pytest.approx(4.0)

    @pytest.mark.parametrize("source,match", [
        ("1 $ 2", "unexpected character"),
        ("foo(x1)", "unknown function"),
        ("x3 + 1", "unknown name"),
        ("indicator(x1, 0)", "takes 3 argument"),
        ("(1 + 2", "expected '\\)'"),
        ("1 +", "unexpected"),
        ("1 2", "unexpected '2'"),
    ])
    def test_parse_errors(self, source, match):
        with pytest.raises(ConfigError, match=match):
            Expression(source)


class TestPotentials:
    def test_expression_potential(self):
        V = ExpressionPotential("x1^2 + x2")
        assert V(np.array([2.0]), np.array([0.5])).tolist() == [4.5]
        assert V.description == "x1^2 + x2"

    def test_zero_detection(self):
        assert zero_potential().is_zero
        assert ExpressionPotential("0*1").is_zero
        assert not ExpressionPotential("x1*0").is_zero
        assert ExpressionPotential("1").scaled(0.0).is_zero

    def test_scaled_and_product(self):
        V = ExpressionPotential("2").scaled(3.0)
        assert float(V(0.0, 0.0)) == pytest.approx(6.0)
        W = V.with_factor(lambda x1, x2: x2, "x2")
        assert float(W(0.0, 0.5)) == pytest.approx(3.0)
        assert W.description == "(3*(2))*x2"

    def test_grid_roundtrip_from_npz(self, tmp_path):
        x1 = np.array([-1.0, 0.0, 1.0])
        x2 = np.array([0.0, 1.0])
        values = np.array([[0.0, 1.0], [2.0, 3.0], [4.0, 5.0]])
        path = tmp_path / "v.npz"
        np.savez(path, x1=x1, x2=x2, values=values)
        V = GridPotential.from_file(path)
        assert float(V(0.5, 0.5)) == pytest.approx(3.5)
        assert float(V(5.0, 0.5)) == 0.0

    def test_grid_missing_arrays(self, tmp_path):
        path = tmp_path / "v.npz"
        np.savez(path, x1=np.zeros(2), values=np.zeros((2, 2)))
        with pytest.raises(ConfigError, match="missing arrays"):
            GridPotential.from_file(path)

    def test_grid_shape_mismatch(self):
        with pytest.raises(ConfigError, match="shape"):
            GridPotential(np.array([0.0, 1.0]), np.array([0.0, 1.0]), np.zeros((3, 2)))

    def test_grid_unreadable(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            GridPotential.from_file(tmp_path / "absent.npz")


class TestNonnegativity:
    def test_accepts_nonnegative(self):
        x1, x2 = np.meshgrid(np.linspace(-2, 2, 5), np.linspace(0, 1, 3), indexing="ij")
        check_nonnegative(ExpressionPotential("x1^2"), x1, x2)

    def test_rejects_negative(self):
        x1, x2 = np.meshgrid(np.linspace(-2, 2, 5), np.linspace(0, 1, 3), indexing="ij")
        with pytest.raises(ConfigError, match="negative or non-finite"):
            check_nonnegative(ExpressionPotential("x1"), x1, x2)

    def test_rejects_non_finite(self):
        x1, x2 = np.zeros(2), np.zeros(2)
        with pytest.raises(ConfigError, match="negative or non-finite"):
            check_nonnegative(ExpressionPotential("1/x1"), x1, x2)
