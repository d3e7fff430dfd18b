import pytest

from starq.errors import ExprParseError
from starq.exprparse import coordinate_names, parse_base_poly, parse_phase_poly
from starq.poly import Poly
from starq.scalars import gr


def test_coordinate_names():
    assert coordinate_names(2, 1) == ["q1", "q2", "p1", "p2", "c1"]


def test_coordinates_map_to_indices():
    d = 2
    assert parse_phase_poly("q1", 1) == Poly.coordinate(d, 0)
    assert parse_phase_poly("p1", 1) == Poly.coordinate(d, 1)
    assert parse_phase_poly("c1", 1, 1) == Poly.coordinate(3, 2)


def test_rational_and_imaginary_literals():
    assert parse_phase_poly("3/4", 1) == Poly.const(2, gr("3/4"))
    assert parse_phase_poly("i", 1) == Poly.const(2, gr(0, 1))
    assert parse_phase_poly("1/2*i", 1) == Poly.const(2, gr(0, "1/2"))


def test_arithmetic_precedence():
    d = 2
    q = Poly.coordinate(d, 0)
    p = Poly.coordinate(d, 1)
    assert parse_phase_poly("q1 + p1*q1", 1) == q + p * q
    assert parse_phase_poly("q1^2*p1 - 2", 1) == q * q * p - Poly.const(d, 2)
    assert parse_phase_poly("-q1^2", 1) == -(q ** 2)
    assert parse_phase_poly("(q1 + p1)^2", 1) == (q + p) ** 2


def test_base_polynomials_exclude_momenta():
    assert parse_base_poly("1 + q1^2", 1) == Poly.const(1, 1) + Poly.coordinate(1, 0) ** 2
    with pytest.raises(ExprParseError):
        parse_base_poly("p1", 1)


def test_parse_errors():
    with pytest.raises(ExprParseError):
        parse_phase_poly("", 1)
    with pytest.raises(ExprParseError):
        parse_phase_poly("q1 +", 1)
    with pytest.raises(ExprParseError):
        parse_phase_poly("q3", 1)
    with pytest.raises(ExprParseError):
        parse_phase_poly("q1 @ p1", 1)
    with pytest.raises(ExprParseError):
        parse_phase_poly("q1^(1/2)", 1)
    with pytest.raises(ExprParseError):
        parse_phase_poly("(q1", 1)


def test_round_trip_through_format():
    expr = "q1^2*p1 - 1/3*p1 + 2*i"
    poly = parse_phase_poly(expr, 1)
    again = parse_phase_poly(poly.format(coordinate_names(1)).replace(" ", ""), 1)
    assert poly == again
