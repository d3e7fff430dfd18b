import itertools
import random
from fractions import Fraction

import pytest
import sympy as sp

from starq.errors import DimensionMismatch
from starq.geometry import (
    Connection,
    SymplecticConnectionSpec,
    canonical_poisson_entries,
    covariant_jet,
    curvature,
    f_tensors,
    flat_connection_from_diffeo,
    is_flat,
    lift_connection,
    ricci,
    symplectic_form_entries,
)
from starq.poly import MultiIndex, Poly
from starq.scalars import GaussianRational

from helpers import christoffel_oracle, sympy_to_poly


def q_poly(n, j):
    return Poly.coordinate(n, j)


def random_flat_connection(n, rng, cubic=False):
    """Triangular polynomial map with random lower-triangular parts."""
    targets = []
    for a in range(n):
        t = Poly.coordinate(n, a)
        for b in range(a):
            c1 = rng.randint(-2, 2)
            if c1:
                t = t + (Poly.coordinate(n, b) ** 2).scale(c1)
            if cubic:
                c2 = rng.randint(-1, 1)
                if c2:
                    t = t + (Poly.coordinate(n, b) ** 3).scale(c2)
        targets.append(t)
    return flat_connection_from_diffeo(targets)


# -- matrices ------------------------------------------------------------------

def test_canonical_matrices_are_inverse():
    n = 3
    p = canonical_poisson_entries(n)
    w = symplectic_form_entries(n)
    d = 2 * n
    for a in range(d):
        for b in range(d):
            acc = sum(v * w.get((mu, b), 0) for (a2, mu), v in p.items() if a2 == a)
            assert acc == (1 if a == b else 0)


# -- flat connections from coordinate maps ----------------------------------------

def test_identity_map_gives_zero_connection():
    targets = [Poly.coordinate(2, j) for j in range(2)]
    assert flat_connection_from_diffeo(targets).is_zero()


def test_quadratic_map_hand_value():
    x0, x1 = (Poly.coordinate(2, j) for j in range(2))
    conn = flat_connection_from_diffeo([x0, x1 + x0 * x0])
    assert conn.christoffel(1, 0, 0) == Poly.const(2, 2)
    assert conn.christoffel(0, 0, 0).is_zero()
    assert is_flat(conn)


def test_non_triangular_map_rejected():
    x0, x1 = (Poly.coordinate(2, j) for j in range(2))
    with pytest.raises(ValueError):
        flat_connection_from_diffeo([x0 + x1 * x1, x1])
    with pytest.raises(ValueError):
        flat_connection_from_diffeo([x0.scale(2), x1])


def test_diffeo_connection_matches_sympy_oracle():
    rng = random.Random(11)
    n = 3
    syms = sp.symbols([f"x{j}" for j in range(n)])
    for _ in range(3):
        coeffs = [[rng.randint(-2, 2) for _ in range(a)] for a in range(n)]
        targets = []
        sym_targets = []
        for a in range(n):
            t = Poly.coordinate(n, a)
            ts = syms[a]
            for b, c in enumerate(coeffs[a]):
                t = t + (Poly.coordinate(n, b) ** 2).scale(c)
                ts = ts + c * syms[b] ** 2
            targets.append(t)
            sym_targets.append(ts)
        conn = flat_connection_from_diffeo(targets)
        oracle = christoffel_oracle(sym_targets, syms)
        for key, expr in oracle.items():
            assert conn.christoffel(*key) == sympy_to_poly(expr, syms, n)


def test_curvature_of_diffeo_connection_vanishes():
    rng = random.Random(5)
    for n in (2, 3):
        conn = random_flat_connection(n, rng, cubic=True)
        assert is_flat(conn)


def test_one_dim_always_flat():
    gamma = Poly.const(1, 1) + Poly.coordinate(1, 0) ** 2
    conn = Connection.one_dim(gamma)
    assert is_flat(conn)


def test_symbol_symmetry_enforced():
    b = Poly.const(2, 1)
    with pytest.raises(ValueError):
        Connection(2, {(0, 0, 1): b})  # missing the (0,1,0) mirror


# -- curvature ---------------------------------------------------------------------

def test_zero_connection_curvature():
    assert curvature(Connection.zero(2)) == {}


def test_curved_connection_detected_and_matches_oracle():
    # G^0_(00) = x1 is curved: sympy cross-check of every component
    conn = Connection(2, {(0, 0, 0): Poly.coordinate(2, 1)})
    riem = curvature(conn)
    assert not is_flat(conn)
    syms = sp.symbols(["x0", "x1"])
    g = [[[sp.Integer(0)] * 2 for _ in range(2)] for _ in range(2)]
    g[0][0][0] = syms[1]
    for rho, sigma, mu, nu in itertools.product(range(2), repeat=4):
        expect = (
            sp.diff(g[rho][nu][sigma], syms[mu])
            - sp.diff(g[rho][mu][sigma], syms[nu])
            + sum(
                g[rho][mu][lam] * g[lam][nu][sigma]
                - g[rho][nu][lam] * g[lam][mu][sigma]
                for lam in range(2)
            )
        )
        got = riem.get((rho, sigma, mu, nu), Poly.zero(2))
        assert got == sympy_to_poly(sp.expand(expect), syms, 2)


# -- the lift ---------------------------------------------------------------------

def test_lift_zero():
    assert not lift_connection(Connection.zero(2)).components()


def test_lift_one_dim_hand_values():
    gamma = Poly.coordinate(1, 0)  # symbol q
    lifted = lift_connection(Connection.one_dim(gamma))
    d = 2
    q = Poly.coordinate(d, 0)
    p = Poly.coordinate(d, 1)
    assert lifted.christoffel(0, 0, 0) == q
    assert lifted.christoffel(1, 1, 0) == -q
    assert lifted.christoffel(1, 0, 1) == -q
    # momentum family: p(2 gamma^2 - gamma')
    assert lifted.christoffel(1, 0, 0) == p * ((q * q).scale(2) - Poly.const(d, 1))


def test_lift_is_flat_and_symmetric_for_flat_bases():
    rng = random.Random(23)
    conns = [
        Connection.one_dim(Poly.coordinate(1, 0)),
        Connection.one_dim(Poly.const(1, 1) + Poly.coordinate(1, 0) ** 2),
        random_flat_connection(2, rng, cubic=True),
    ]
    for conn in conns:
        lifted = lift_connection(conn)
        assert is_flat(lifted)
        # lowered symbols totally symmetric
        d = lifted.dim
        for idx in itertools.product(range(d), repeat=3):
            val = lifted.lowered(*idx)
            for perm in itertools.permutations(idx):
                assert lifted.lowered(*perm) == val


# -- symplectic spec ----------------------------------------------------------------

def _random_spec(n, rng, a=GaussianRational(0), deg=2):
    d = 2 * n
    comps = {}
    from starq.products import monomials_up_to

    for key in itertools.combinations_with_replacement(range(d), 3):
        terms = {}
        for mi in monomials_up_to(d, deg):
            v = rng.randint(-2, 2)
            if v:
                terms[mi] = GaussianRational(Fraction(v, rng.randint(1, 3)))
        comps[key] = Poly(d, terms)
    return SymplecticConnectionSpec.from_symmetric_components(n, comps, a)


def test_spec_symmetry_enforced():
    d = 2
    with pytest.raises(ValueError):
        SymplecticConnectionSpec(
            1, {(0, 0, 1): Poly.const(d, 1)}  # no symmetric partners
        )


def test_spec_raise_lower_round_trip():
    rng = random.Random(3)
    spec = _random_spec(1, rng)
    d = 2
    omega = symplectic_form_entries(1)
    for idx in itertools.product(range(d), repeat=3):
        re_lowered = Poly.zero(d)
        for (al, de), v in omega.items():
            if al == idx[0]:
                re_lowered = re_lowered + spec.christoffel(de, idx[1], idx[2]).scale(v)
        assert re_lowered == spec.lowered(*idx)


def test_lifted_to_spec_round_trip():
    conn = Connection.one_dim(Poly.coordinate(1, 0))
    lifted = lift_connection(conn)
    spec = SymplecticConnectionSpec.from_lifted(lifted)
    d = 2
    for idx in itertools.product(range(d), repeat=3):
        assert spec.christoffel(*idx) == lifted.christoffel(*idx)


def test_ricci_zero_for_zero_and_constant_hand_value():
    spec0 = SymplecticConnectionSpec(1, {})
    assert ricci(spec0) == {}
    # constant lowered symbols: only the quadratic terms contribute
    d = 2
    comps = {}
    rng = random.Random(9)
    for key in itertools.combinations_with_replacement(range(d), 3):
        comps[key] = Poly.const(d, rng.randint(-2, 2))
    spec = SymplecticConnectionSpec.from_symmetric_components(1, comps)
    ric = ricci(spec)
    for (mu, nu), val in ric.items():
        expect = Poly.zero(d)
        for al, lam in itertools.product(range(d), repeat=2):
            expect = expect + spec.christoffel(al, al, lam) * spec.christoffel(lam, nu, mu)
            expect = expect - spec.christoffel(al, nu, lam) * spec.christoffel(lam, al, mu)
        assert val == expect


def test_ricci_symmetric_for_random_specs():
    rng = random.Random(17)
    for _ in range(4):
        spec = _random_spec(1, rng)
        ric = ricci(spec)
        d = 2
        for mu in range(d):
            for nu in range(d):
                a = ric.get((mu, nu), Poly.zero(d))
                b = ric.get((nu, mu), Poly.zero(d))
                assert a == b


# -- f tensors --------------------------------------------------------------------

def test_f_tensor_base_case_is_symbol():
    conn = Connection.one_dim(Poly.coordinate(1, 0))
    fam = f_tensors(conn, 1)
    assert fam[0].component(0, (0,), 0) == Poly.coordinate(1, 0)


def test_f_tensor_rank2_hand_value():
    # gamma' + gamma*gamma - gamma*gamma = gamma'
    gamma = Poly.coordinate(1, 0) ** 2
    conn = Connection.one_dim(gamma)
    fam = f_tensors(conn, 2)
    assert fam[1].component(0, (0, 0), 0) == gamma.diff_coord(0)


def test_f_tensors_zero_connection():
    fam = f_tensors(Connection.zero(2), 3)
    assert all(t.is_zero() for t in fam)


def test_f_tensor_recursion_self_consistency():
    rng = random.Random(31)
    conn = random_flat_connection(2, rng, cubic=True)
    n = 2
    fam = f_tensors(conn, 3)
    for rank in (2, 3):
        prev, this = fam[rank - 2], fam[rank - 1]
        for l in range(n):
            for lowers in itertools.product(range(n), repeat=rank):
                *first, new = lowers
                first = tuple(first)
                for i in range(n):
                    expect = prev.component(l, first, i).diff_coord(new)
                    for j in range(n):
                        expect = expect + conn.christoffel(l, new, j) * prev.component(
                            j, first, i
                        )
                        for s in range(rank - 1):
                            expect = expect - conn.christoffel(
                                j, first[s], new
                            ) * prev.component(l, first[:s] + (j,) + first[s + 1 :], i)
                    assert this.component(l, lowers, i) == expect


# -- covariant jets -----------------------------------------------------------------

def test_rank1_jet_is_gradient():
    conn = lift_connection(Connection.one_dim(Poly.coordinate(1, 0)))
    f = Poly.coordinate(2, 0) ** 2 * Poly.coordinate(2, 1)
    jets = covariant_jet(conn, 1, f)
    assert jets[(0,)] == f.diff_coord(0)
    assert jets[(1,)] == f.diff_coord(1)


def test_rank2_jet_of_coordinates_gives_symbols():
    conn = Connection.one_dim(Poly.coordinate(1, 0))
    lifted = lift_connection(conn)
    d = 2
    # base-base components of the second jet of a configuration coordinate
    # equal the negated symbol, matching the base-manifold jet
    jets_q = covariant_jet(lifted, 2, Poly.coordinate(d, 0))
    assert jets_q[(0, 0)] == -Poly.coordinate(d, 0)
    base_jets = covariant_jet(conn, 2, Poly.coordinate(1, 0))
    assert base_jets[(0, 0)].embed(d) == jets_q[(0, 0)]
    # momentum second jet at (bar l, i) equals the rank-1 tensor
    jets_p = covariant_jet(lifted, 2, Poly.coordinate(d, 1))
    fam = f_tensors(conn, 1)
    assert jets_p[(1, 0)] == fam[0].component(0, (0,), 0).embed(d)


def test_momentum_jet_base_components_match_tensor_formula():
    # all-base components of the momentum jets reduce to tensor-family
    # combinations, linear in the momenta
    conn = Connection.one_dim(Poly.const(1, 1) + Poly.coordinate(1, 0) ** 2)
    lifted = lift_connection(conn)
    d = 2
    n = 1
    fam = f_tensors(conn, 3)

    def f_comp(rank, l, lowers, i):
        if rank == 0:
            return Poly.const(n, 1) if l == i else Poly.zero(n)
        return fam[rank - 1].component(l, lowers, i)

    for rank in (2, 3):
        jets = covariant_jet(lifted, rank, Poly.coordinate(d, n))  # p_1
        for lowers in itertools.product(range(n), repeat=rank):
            expect = Poly.zero(d)
            for l in range(n):
                inner = f_comp(rank, l, lowers, 0)
                for s in range(rank):
                    for j in range(n):
                        inner = inner - conn.christoffel(l, j, lowers[s]) * f_comp(
                            rank - 1, j, lowers[:s] + lowers[s + 1 :], 0
                        )
                expect = expect + Poly.coordinate(d, n + l) * inner.embed(d)
            assert jets[lowers] == expect


def test_mixed_jet_recursion_hand_check():
    # second jet with one base and one momentum index picks up a symbol
    # correction on the momentum slot
    gamma = Poly.coordinate(1, 0)
    conn = Connection.one_dim(gamma)
    lifted = lift_connection(conn)
    d = 2
    g = Poly.coordinate(d, 0) ** 2 * Poly.coordinate(d, 1) ** 2
    jets = covariant_jet(lifted, 2, g)
    q = Poly.coordinate(d, 0)
    expect = g.diff_coord(0).diff_coord(1) + q * g.diff_coord(1)
    assert jets[(0, 1)] == expect


def test_jet_symmetry_for_flat_connections():
    rng = random.Random(41)
    conn = random_flat_connection(2, rng)
    lifted = lift_connection(conn)
    d = 4
    f = (
        Poly.coordinate(d, 0) * Poly.coordinate(d, 2)
        + Poly.coordinate(d, 1) ** 2 * Poly.coordinate(d, 3)
    )
    for rank in (2, 3):
        jets = covariant_jet(lifted, rank, f)
        for idx in itertools.product(range(d), repeat=rank):
            for perm in itertools.permutations(idx):
                assert jets[idx] == jets[perm]


def test_jet_dimension_mismatch():
    conn = lift_connection(Connection.one_dim(Poly.coordinate(1, 0)))
    with pytest.raises(DimensionMismatch):
        covariant_jet(conn, 1, Poly.coordinate(3, 0))
