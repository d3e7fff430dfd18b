import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from starq.errors import DimensionMismatch, OperatorOrderExceeded
from starq.operators import BiDiffOp, DiffOp, OperatorSeries, set_max_op_order
from starq.poly import EMPTY_INDEX, MultiIndex, Poly
from starq.scalars import gr

from test_poly import multiindices, polys


def diffops(dim, max_order=2, max_terms=3):
    term = st.tuples(multiindices(dim, max_order), polys(dim, 2, 2))

    def build(ts):
        acc = DiffOp.zero(dim)
        for mi, p in ts:
            acc = acc + DiffOp(dim, {mi: p})
        return acc

    return st.lists(term, max_size=max_terms).map(build)


# -- apply -------------------------------------------------------------------

def test_identity_apply():
    f = Poly.coordinate(2, 0) ** 2 * Poly.coordinate(2, 1)
    assert DiffOp.identity(2).apply(f) == f


def test_euler_operator():
    p = Poly.coordinate(2, 1)
    op = DiffOp(2, {MultiIndex.unit(1): p})  # p d_p
    assert op.apply(p ** 3) == (p ** 3).scale(3)


def test_apply_to_zero():
    op = DiffOp(2, {MultiIndex.of(0, 1): Poly.coordinate(2, 0)})
    assert op.apply(Poly.zero(2)).is_zero()


# -- compose -----------------------------------------------------------------

def test_compose_leibniz_by_hand():
    dq = DiffOp.partial(2, 0)
    mq = DiffOp.multiplication(Poly.coordinate(2, 0))
    assert dq.compose(mq) == DiffOp(
        2,
        {
            MultiIndex.unit(0): Poly.coordinate(2, 0),
            EMPTY_INDEX: Poly.const(2, 1),
        },
    )


def test_compose_identity():
    a = DiffOp(2, {MultiIndex.of(0, 1): Poly.coordinate(2, 1)})
    assert DiffOp.identity(2).compose(a) == a
    assert a.compose(DiffOp.identity(2)) == a


def test_constant_coefficients_commute():
    dp = DiffOp.partial(2, 1)
    dq = DiffOp.partial(2, 0)
    assert dp.compose(dq) == DiffOp.derivative(2, MultiIndex.of(0, 1))
    assert dp.compose(dq) == dq.compose(dp)


@settings(max_examples=25, deadline=None)
@given(diffops(2), diffops(2), polys(2, 3, 3))
def test_compose_matches_sequential_apply(a, b, f):
    assert a.compose(b).apply(f) == a.apply(b.apply(f))


@settings(max_examples=15, deadline=None)
@given(diffops(2, 2, 2), diffops(2, 2, 2), diffops(2, 2, 2))
def test_compose_associative(a, b, c):
    assert a.compose(b).compose(c) == a.compose(b.compose(c))


# -- coordinate commutators ---------------------------------------------------

def test_canonical_commutator():
    dq = DiffOp.partial(2, 0)
    assert dq.commutator_with_coordinate(0) == DiffOp.identity(2)
    assert dq.commutator_with_coordinate(1).is_zero()


def test_half_square_commutator():
    op = DiffOp.derivative(2, MultiIndex.of(0, 0), gr("1/2"))
    assert op.commutator_with_coordinate(0) == DiffOp.partial(2, 0)


def test_multiplication_operators_commute():
    mq = DiffOp.multiplication(Poly.coordinate(2, 0))
    assert mq.commutator_with_coordinate(0).is_zero()


@settings(max_examples=25, deadline=None)
@given(diffops(2))
def test_commutator_equals_composition_difference(op):
    for coord in range(2):
        x = DiffOp.multiplication(Poly.coordinate(2, coord))
        assert op.commutator_with_coordinate(coord) == op.compose(x) - x.compose(op)


@settings(max_examples=25, deadline=None)
@given(diffops(2))
def test_repeated_commutation_terminates(op):
    current = op
    steps = 0
    while not current.is_zero() and steps < 10:
        order_before = current.order
        current = current.commutator_with_coordinate(steps % 2)
        steps += 1
        if not current.is_zero():
            assert current.order < order_before or order_before == 0
    # an operator of order m dies after at most m commutations per direction
    assert steps <= 2 * (op.order + 1)


# -- bidifferential operators -------------------------------------------------

def test_bidiff_apply_single_term():
    C = BiDiffOp.tensor(DiffOp.partial(2, 0), DiffOp.partial(2, 1))
    q = Poly.coordinate(2, 0)
    p = Poly.coordinate(2, 1)
    assert C.apply(q, p) == Poly.const(2, 1)


def test_vanishing_on_constants():
    C = BiDiffOp.tensor(DiffOp.partial(2, 0), DiffOp.partial(2, 1))
    assert C.vanishes_on_constants()
    g = Poly.coordinate(2, 1) ** 2
    assert C.apply(Poly.const(2, 1), g).is_zero()
    D = BiDiffOp.multiplication(2)
    assert not D.vanishes_on_constants()


def test_slot_fix_zero():
    assert BiDiffOp.zero(2).slot_fix(0, "left").is_zero()


def test_slot_fix_coefficient_substitution():
    # a term with an empty left slot picks up the coordinate as a factor
    C = BiDiffOp(2, {(EMPTY_INDEX, MultiIndex.unit(1)): Poly.const(2, 1)})
    fixed = C.slot_fix(0, "left")
    assert fixed == DiffOp(2, {MultiIndex.unit(1): Poly.coordinate(2, 0)})


@settings(max_examples=25, deadline=None)
@given(diffops(2, 2, 2), diffops(2, 2, 2), polys(2, 3, 3))
def test_slot_fix_matches_bidiff_apply(a, b, f):
    C = BiDiffOp.tensor(a, b)
    for coord in range(2):
        x = Poly.coordinate(2, coord)
        assert C.slot_fix(coord, "left").apply(f) == C.apply(x, f)
        assert C.slot_fix(coord, "right").apply(f) == C.apply(f, x)


def test_swap_round_trip():
    C = BiDiffOp.tensor(
        DiffOp(2, {MultiIndex.of(0): Poly.coordinate(2, 1)}), DiffOp.partial(2, 1)
    )
    assert C.swap().swap() == C


# -- equality ------------------------------------------------------------------

def test_structural_equality_of_leibniz_identity():
    # q d_q  ==  d_q o (q .) - id
    q = Poly.coordinate(2, 0)
    lhs = DiffOp(2, {MultiIndex.unit(0): q})
    rhs = DiffOp.partial(2, 0).compose(DiffOp.multiplication(q)) - DiffOp.identity(2)
    assert lhs == rhs
    assert DiffOp.partial(2, 0) != DiffOp.partial(2, 1)


# -- order guard -----------------------------------------------------------------

def test_order_guard():
    set_max_op_order(3)
    try:
        with pytest.raises(OperatorOrderExceeded):
            DiffOp.derivative(1, MultiIndex({0: 4}))
        DiffOp.derivative(1, MultiIndex({0: 3}))
    finally:
        set_max_op_order(None)


def test_order_guard_env_override(monkeypatch):
    from starq.operators import max_op_order

    assert max_op_order() == 12
    monkeypatch.setenv("STARQ_MAX_OP_ORDER", "5")
    assert max_op_order() == 5
    with pytest.raises(OperatorOrderExceeded):
        DiffOp.derivative(1, MultiIndex({0: 6}))


def test_jet_rank_guard():
    from starq.geometry import Connection, covariant_jet_ops, lift_connection

    lifted = lift_connection(Connection.one_dim(Poly.coordinate(1, 0)))
    set_max_op_order(3)
    try:
        with pytest.raises(OperatorOrderExceeded):
            covariant_jet_ops(lifted, 4)
    finally:
        set_max_op_order(None)


def test_values_are_immutable():
    q = Poly.coordinate(2, 0)
    with pytest.raises(AttributeError):
        q.dim = 3
    op = DiffOp.partial(2, 0)
    with pytest.raises(AttributeError):
        op.dim = 3
    mi = MultiIndex.of(0)
    with pytest.raises(AttributeError):
        mi._pairs = ()


def test_dimension_checks():
    with pytest.raises(DimensionMismatch):
        DiffOp.partial(2, 0).apply(Poly.coordinate(3, 0))
    with pytest.raises(DimensionMismatch):
        DiffOp.partial(2, 0).compose(DiffOp.partial(3, 0))


# -- serialization ------------------------------------------------------------------

def test_diffop_json_round_trip():
    op = DiffOp(
        2,
        {
            MultiIndex.of(0, 1, 1): Poly.coordinate(2, 1).scale(gr("1/3", "5/7")),
            EMPTY_INDEX: Poly.const(2, gr(0, "-2/9")),
        },
    )
    assert DiffOp.from_json(op.to_json()) == op


def test_bidiffop_json_round_trip():
    op = BiDiffOp(
        2,
        {
            (MultiIndex.of(0), MultiIndex.of(1, 1)): Poly.coordinate(2, 0).scale(
                gr("-7/11")
            ),
        },
    )
    assert BiDiffOp.from_json(op.to_json()) == op


# -- operator series -----------------------------------------------------------------

def test_operator_series_identity_head():
    with pytest.raises(ValueError):
        OperatorSeries([DiffOp.zero(2)])
    series = OperatorSeries([DiffOp.identity(2), DiffOp.partial(2, 0)])
    f = Poly.coordinate(2, 0) ** 2
    out = series.apply(f)
    assert out[0] == f
    assert out[1] == f.diff_coord(0)
