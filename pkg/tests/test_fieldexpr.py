import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from wavekahler import jets
from wavekahler.fieldexpr import (FieldSyntaxError, PhiDependenceError, UnknownIdentifierError,
                                  parse_field)


class TestParsing:
    def test_variables_of_wave_profile(self):
        e = parse_field("sin(theta)*cos(z1)")
        assert e.variables == {"theta", "z1"}

    def test_unicode_aliases(self):
        assert parse_field("θ*ζ").variables == {"theta", "zeta"}

    def test_constant_folding_sqrt6(self):
        e = parse_field("sqrt(6)*z")
        assert e.constant_factor() == pytest.approx(math.sqrt(6), abs=1e-15)
        assert str(e.folded()).startswith("2.449489742783178")

    def test_power_is_right_associative(self):
        assert parse_field("2^3^2").evaluate({}) == pytest.approx(2.0 ** 9)

    def test_unary_minus_binds_looser_than_power(self):
        assert parse_field("-2^2").evaluate({}) == pytest.approx(-4.0)

    @pytest.mark.parametrize("src", ["sin(theta)*cos(z1)", "-x^2 + 2/(y - 1)",
                                     "exp(-(x+y))*2", "log(1 + t1^2)*sqrt(z2)", "  theta  "])
    def test_print_parse_roundtrip(self, src):
        e = parse_field(src)
        again = parse_field(str(e))
        assert str(again) == str(e)
        assert str(e).replace(" ", "") == src.replace(" ", "")


class TestErrors:
    def test_syntax_error_position(self):
        with pytest.raises(FieldSyntaxError) as info:
            parse_field("x +* y")
        assert (info.value.line, info.value.column) == (1, 4)

    def test_error_on_second_line(self):
        with pytest.raises(FieldSyntaxError) as info:
            parse_field("x\n+ @")
        assert (info.value.line, info.value.column) == (2, 3)

    def test_unbalanced(self):
        with pytest.raises(FieldSyntaxError, match="expected '\\)'"):
            parse_field("sin(x")

    def test_unknown_identifier(self):
        with pytest.raises(UnknownIdentifierError):
            parse_field("q + 1")

    def test_variable_outside_chart(self):
        with pytest.raises(UnknownIdentifierError, match="not available"):
            parse_field("z1 + x", allowed=("x", "y"))

    @pytest.mark.parametrize("src", ["H(phi)", "sin(phi)", "x + φ"])
    def test_phi_rejected_in_H_slot(self, src):
        with pytest.raises(PhiDependenceError, match="phi"):
            parse_field(src, forbid_phi=True)

    def test_phi_allowed_elsewhere(self):
        assert parse_field("sin(phi)").variables == {"phi"}


class TestEvaluation:
    X, Y = sp.symbols("x y")

    @given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))
    def test_float_evaluation_matches_sympy(self, a, b):
        src = "exp(x/2)*cos(y) + x^3 - sqrt(2 + sin(x*y))"
        e = parse_field(src)
        ref = sp.sympify(src.replace("^", "**")).subs({self.X: a, self.Y: b})
        assert e.evaluate({"x": a, "y": b}) == pytest.approx(float(ref), rel=1e-12, abs=1e-12)

    def test_jet_evaluation_matches_sympy_derivatives(self):
        src = "log(2 + x^2)*sin(y) / (1 + y^2)"
        e = parse_field(src)
        x, y = jets.seed(np.array([0.4, 1.1]), 3)
        J = e.evaluate({"x": x, "y": y})
        expr = sp.sympify(src.replace("^", "**"))
        at = {self.X: 0.4, self.Y: 1.1}
        for mi in [(1, 0), (0, 1), (2, 1), (0, 3), (1, 2)]:
            exact = float(sp.diff(expr, self.X, mi[0], self.Y, mi[1]).subs(at))
            assert J.partial(mi) == pytest.approx(exact, rel=1e-11)

    def test_constants(self):
        assert parse_field("pi + e").evaluate({}) == pytest.approx(math.pi + math.e)
