import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from starq.errors import DimensionMismatch
from starq.poly import EMPTY_INDEX, MultiIndex, Poly
from starq.scalars import GaussianRational, gr

rationals = st.fractions(min_value=-3, max_value=3, max_denominator=4)
scalars = st.builds(GaussianRational, rationals, rationals)


def multiindices(dim, max_degree=3):
    return st.lists(
        st.integers(min_value=0, max_value=dim - 1), min_size=0, max_size=max_degree
    ).map(lambda cs: MultiIndex.of(*cs))


def polys(dim, max_degree=3, max_terms=4):
    term = st.tuples(multiindices(dim, max_degree), scalars)

    def build(ts):
        acc = Poly.zero(dim)
        for mi, c in ts:
            acc = acc + Poly.monomial(dim, mi, c)
        return acc

    return st.lists(term, max_size=max_terms).map(build)


# -- multi-index ----------------------------------------------------------

def test_multiindex_no_zero_entries():
    mi = MultiIndex({0: 2, 1: 0, 3: 1})
    assert mi.pairs == ((0, 2), (3, 1))
    assert mi.degree == 3
    assert mi.exponent(1) == 0


def test_multiindex_of_and_add():
    assert MultiIndex.of(0, 0, 2) == MultiIndex({0: 2, 2: 1})
    assert MultiIndex.of(0) + MultiIndex.of(1) == MultiIndex.of(0, 1)
    assert MultiIndex.of(0, 1).decrement(0) == MultiIndex.of(1)


def test_multiindex_sub_indices_and_binomial():
    mi = MultiIndex.of(0, 0, 1)
    subs = list(mi.sub_indices())
    assert len(subs) == 6  # (0..2) x (0..1)
    assert mi.binomial(MultiIndex.of(0)) == 2
    assert mi.binomial(MultiIndex.of(0, 0, 1)) == 1


# -- arithmetic -------------------------------------------------------------

def test_cancellation():
    q = Poly.coordinate(2, 0)
    p = Poly.coordinate(2, 1)
    assert (q + p) + (q - p) == q.scale(2)


def test_product_and_scale():
    q = Poly.coordinate(2, 0)
    p = Poly.coordinate(2, 1)
    assert q * p == Poly.monomial(2, MultiIndex.of(0, 1))
    scaled = (q * q * p).scale(gr(0, "1/2"))
    assert scaled.coefficient(MultiIndex.of(0, 0, 1)) == gr(0, "1/2")


def test_zero_polynomial_is_empty_map():
    z = Poly.zero(3)
    assert z.is_zero()
    assert z.term_count() == 0
    assert (z + z).is_zero()
    q = Poly.coordinate(3, 0)
    assert (q - q).is_zero()


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        Poly.coordinate(2, 0) + Poly.coordinate(3, 0)
    with pytest.raises(DimensionMismatch):
        Poly.coordinate(1, 0) * Poly.coordinate(2, 0)


@settings(max_examples=40)
@given(polys(2), polys(2), polys(2))
def test_ring_axioms(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a * b == b * a


# -- differentiation ----------------------------------------------------------

def test_diff_basic():
    q = Poly.coordinate(2, 0)
    p = Poly.coordinate(2, 1)
    f = q * q * p
    assert f.diff_coord(0) == (q * p).scale(2)
    assert (q * q).diff(MultiIndex.of(1, 1)).is_zero()


def test_diff_mixed_hand_value():
    q = Poly.coordinate(2, 0)
    p = Poly.coordinate(2, 1)
    f = q * q * p * p
    assert f.diff(MultiIndex.of(0, 1)) == (q * p).scale(4)


@settings(max_examples=40)
@given(polys(3), multiindices(3), multiindices(3))
def test_diff_commutes(f, i, j):
    assert f.diff(i).diff(j) == f.diff(j).diff(i)
    assert f.diff(i + j) == f.diff(i).diff(j)


@settings(max_examples=40)
@given(polys(2), polys(2), multiindices(2, 2))
def test_leibniz(f, g, idx):
    # iterated Leibniz: d^I(fg) = sum over K <= I of C(I,K) d^K f d^(I-K) g
    lhs = (f * g).diff(idx)
    rhs = Poly.zero(2)
    for sub in idx.sub_indices():
        rhs = rhs + (f.diff(sub) * g.diff(idx.subtract(sub))).scale(idx.binomial(sub))
    assert lhs == rhs


# -- canonical form / serialization -----------------------------------------

def test_terms_are_grlex_sorted():
    q = Poly.coordinate(2, 0)
    p = Poly.coordinate(2, 1)
    f = p + q * q * p + q
    degrees = [mi.degree for mi, _ in f.terms()]
    assert degrees == sorted(degrees, reverse=True)
    # same degree: lexicographically larger exponent vector first
    g = q + p
    assert [mi.dense(2) for mi, _ in g.terms()] == [(1, 0), (0, 1)]


def test_json_round_trip():
    f = Poly(
        2,
        {
            MultiIndex.of(0, 0, 1): gr("2/3", "-1/5"),
            EMPTY_INDEX: gr(7),
        },
    )
    assert Poly.from_json(2, f.to_json()) == f


def test_embed():
    base = Poly.coordinate(1, 0) ** 2 + Poly.const(1, 3)
    lifted = base.embed(4)
    assert lifted.dim == 4
    assert lifted.coefficient(MultiIndex.of(0, 0)) == gr(1)
