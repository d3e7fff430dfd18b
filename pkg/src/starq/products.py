"""Star-product constructors and validators.

Four constructors are provided: the Moyal product of a constant Poisson
tensor, the product induced by a commuting vector-field frame, the
natural product of a flat cotangent bundle built from iterated covariant
derivatives, and the order-2 product of a general symplectic connection
with a Ricci-weight parameter.  `check_axioms` and
`quantum_canonicity_check` validate any product against the defining
conditions on a degree-bounded monomial basis, which is exact because
all operators involved have finite order and polynomial coefficients.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Dict, List, Tuple

from .errors import DimensionMismatch, InvalidFrame, NonFlatConnection, OrderMismatch
from .geometry import (
    Connection,
    SymplecticConnectionSpec,
    canonical_poisson_entries,
    covariant_jet_ops,
    f_tensors,
    is_flat,
    lift_connection,
    ricci,
)
from .operators import BiDiffOp, DiffOp, _acc_poly
from .poly import MultiIndex, Poly
from .scalars import GaussianRational, HALF_I, I as IMAG
from .series import HbarSeries


# ---------------------------------------------------------------------------
# Poisson tensor
# ---------------------------------------------------------------------------

class PoissonTensor:
    """Antisymmetric bivector with polynomial components on R^d, d = 2n + k."""

    __slots__ = ("n", "casimir", "dim", "_entries")

    def __init__(self, n: int, casimir: int, entries: Dict[Tuple[int, int], Poly]):
        d = 2 * n + casimir
        clean: Dict[Tuple[int, int], Poly] = {}
        for (mu, nu), poly in entries.items():
            if not (0 <= mu < d and 0 <= nu < d):
                raise DimensionMismatch("Poisson index out of range")
            if poly.dim != d:
                raise DimensionMismatch("Poisson component has wrong dimension")
            if not poly.is_zero():
                clean[(mu, nu)] = poly
        for (mu, nu), poly in clean.items():
            if clean.get((nu, mu), Poly.zero(d)) != -poly:
                raise ValueError("Poisson tensor must be antisymmetric")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "casimir", casimir)
        object.__setattr__(self, "dim", d)
        object.__setattr__(self, "_entries", clean)

    def __setattr__(self, name, value):
        raise AttributeError("PoissonTensor is immutable")

    @classmethod
    def canonical(cls, n: int, casimir: int = 0) -> "PoissonTensor":
        """Block form: symplectic 2n x 2n block plus `casimir` null directions."""
        d = 2 * n + casimir
        entries = {
            (mu, nu): Poly.const(d, v)
            for (mu, nu), v in canonical_poisson_entries(n).items()
        }
        return cls(n, casimir, entries)

    def entry(self, mu: int, nu: int) -> Poly:
        return self._entries.get((mu, nu), Poly.zero(self.dim))

    def is_constant(self) -> bool:
        return all(p.is_constant() for p in self._entries.values())

    def constant_entries(self) -> List[Tuple[int, int, GaussianRational]]:
        """Nonzero entries as scalars; requires a constant tensor."""
        if not self.is_constant():
            raise ValueError("Poisson tensor is not constant")
        return sorted(
            (mu, nu, poly.constant_term()) for (mu, nu), poly in self._entries.items()
        )

    def bracket(self, f: Poly, g: Poly) -> Poly:
        """Classical Poisson bracket sum P^(mu nu) d_mu f d_nu g."""
        acc = Poly.zero(self.dim)
        for (mu, nu), p in self._entries.items():
            df = f.diff_coord(mu)
            if df.is_zero():
                continue
            dg = g.diff_coord(nu)
            if dg.is_zero():
                continue
            acc = acc + p * df * dg
        return acc

    def as_bidiff(self) -> BiDiffOp:
        return BiDiffOp(
            self.dim,
            {
                (MultiIndex.unit(mu), MultiIndex.unit(nu)): p
                for (mu, nu), p in self._entries.items()
            },
        )

    def __eq__(self, other):
        if not isinstance(other, PoissonTensor):
            return NotImplemented
        return (
            self.n == other.n
            and self.casimir == other.casimir
            and self._entries == other._entries
        )


# ---------------------------------------------------------------------------
# vector-field frames
# ---------------------------------------------------------------------------

class VectorFieldFrame:
    """d first-order operators without multiplication parts."""

    __slots__ = ("dim", "fields")

    def __init__(self, fields: List[DiffOp]):
        if not fields:
            raise InvalidFrame("empty frame")
        dim = fields[0].dim
        if len(fields) != dim:
            raise InvalidFrame(f"expected {dim} fields, got {len(fields)}")
        for op in fields:
            if op.dim != dim:
                raise DimensionMismatch("mixed dimensions in frame")
            if not op.annihilates_constants() or op.order != 1:
                raise InvalidFrame("frame entries must be pure first-order operators")
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "fields", list(fields))

    def __setattr__(self, name, value):
        raise AttributeError("VectorFieldFrame is immutable")

    @classmethod
    def coordinate(cls, dim: int) -> "VectorFieldFrame":
        return cls([DiffOp.partial(dim, mu) for mu in range(dim)])

    @classmethod
    def from_components(cls, components: List[List[Poly]]) -> "VectorFieldFrame":
        dim = len(components)
        fields = []
        for comps in components:
            terms = {
                MultiIndex.unit(a): c for a, c in enumerate(comps) if not c.is_zero()
            }
            fields.append(DiffOp(dim, terms))
        return cls(fields)

    def component(self, mu: int, a: int) -> Poly:
        return self.fields[mu].coefficient(MultiIndex.unit(a))

    def validate(self, p: PoissonTensor):
        """Pairwise commutation and reproduction of the Poisson tensor."""
        if p.dim != self.dim:
            raise DimensionMismatch("frame and Poisson tensor dimensions differ")
        for mu in range(self.dim):
            for nu in range(mu + 1, self.dim):
                a, b = self.fields[mu], self.fields[nu]
                if a.compose(b) != b.compose(a):
                    raise InvalidFrame(f"fields {mu} and {nu} do not commute")
        entries = p.constant_entries()
        for a in range(self.dim):
            for b in range(self.dim):
                acc = Poly.zero(self.dim)
                for mu, nu, v in entries:
                    acc = acc + (self.component(mu, a) * self.component(nu, b)).scale(v)
                if acc != p.entry(a, b):
                    raise InvalidFrame(
                        f"frame does not reproduce the Poisson tensor at ({a},{b})"
                    )


# ---------------------------------------------------------------------------
# star products
# ---------------------------------------------------------------------------

class StarProduct:
    """Truncated product f * g = sum_k hbar^k C_k(f, g)."""

    __slots__ = ("dim", "order", "C", "parity", "poisson")

    def __init__(
        self,
        poisson: PoissonTensor,
        C: List[BiDiffOp],
        parity: bool,
    ):
        if not C:
            raise ValueError("need at least the order-0 operator")
        dim = poisson.dim
        for op in C:
            if op.dim != dim:
                raise DimensionMismatch("operator dimension differs from phase space")
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "order", len(C) - 1)
        object.__setattr__(self, "C", list(C))
        object.__setattr__(self, "parity", parity)
        object.__setattr__(self, "poisson", poisson)

    def __setattr__(self, name, value):
        raise AttributeError("StarProduct is immutable")

    def apply(self, f, g) -> HbarSeries:
        """f * g for Poly or HbarSeries arguments, truncated at the order."""
        N = self.order
        if isinstance(f, Poly):
            f = HbarSeries.from_constant(f, N)
        if isinstance(g, Poly):
            g = HbarSeries.from_constant(g, N)
        if f.order != N or g.order != N:
            raise OrderMismatch("series order must match the product order")
        out = []
        for m in range(N + 1):
            acc = Poly.zero(self.dim)
            for l in range(m + 1):
                for a in range(m - l + 1):
                    fa = f[a]
                    if fa.is_zero():
                        continue
                    gb = g[m - l - a]
                    if gb.is_zero():
                        continue
                    acc = acc + self.C[l].apply(fa, gb)
            out.append(acc)
        return HbarSeries(out)

    def truncate(self, order: int) -> "StarProduct":
        if order > self.order:
            raise OrderMismatch(f"cannot extend order {self.order} to {order}")
        return StarProduct(self.poisson, self.C[: order + 1], self.parity)

    def __eq__(self, other):
        if not isinstance(other, StarProduct):
            return NotImplemented
        return (
            self.dim == other.dim
            and self.order == other.order
            and self.parity == other.parity
            and self.poisson == other.poisson
            and self.C == other.C
        )

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "order": self.order,
            "parity": self.parity,
            "operators": [op.to_json() for op in self.C],
        }


def _add_scaled_tensor(acc: dict, a: DiffOp, b: DiffOp, scalar: GaussianRational):
    """acc += scalar * (a tensor b), working on raw term maps."""
    for li, pa in a.terms():
        for ri, pb in b.terms():
            _acc_poly(acc, (li, ri), (pa * pb).scale(scalar))


def _order_factor(k: int) -> GaussianRational:
    """(i/2)^k / k!."""
    return (HALF_I ** k) * GaussianRational(Fraction(1, factorial(k)))


def moyal_product(p: PoissonTensor, order: int) -> StarProduct:
    """Moyal product of a constant Poisson tensor, truncated at `order`."""
    if not p.is_constant():
        raise ValueError("the Moyal construction needs a constant Poisson tensor")
    d = p.dim
    entries = p.constant_entries()
    C = [BiDiffOp.multiplication(d)]
    for k in range(1, order + 1):
        factor = _order_factor(k)
        acc: Dict[Tuple[MultiIndex, MultiIndex], Poly] = {}
        for combo in itertools.product(entries, repeat=k):
            left = MultiIndex.of(*(mu for mu, _, _ in combo))
            right = MultiIndex.of(*(nu for _, nu, _ in combo))
            v = factor
            for _, _, val in combo:
                v = v * val
            _acc_poly(acc, (left, right), Poly.const(d, v))
        C.append(BiDiffOp(d, acc))
    return StarProduct(p, C, parity=True)


def vector_field_product(
    frame: VectorFieldFrame, p: PoissonTensor, order: int
) -> StarProduct:
    """Product generated by a commuting frame reproducing `p`."""
    frame.validate(p)
    d = p.dim
    entries = p.constant_entries()
    # compositions D_mu1 o ... o D_muk, memoized on the sorted index tuple
    comp: Dict[Tuple[int, ...], DiffOp] = {(): DiffOp.identity(d)}

    def composed(idx: Tuple[int, ...]) -> DiffOp:
        key = tuple(sorted(idx))
        if key not in comp:
            comp[key] = frame.fields[key[0]].compose(composed(key[1:]))
        return comp[key]

    C = [BiDiffOp.multiplication(d)]
    for k in range(1, order + 1):
        factor = _order_factor(k)
        acc: Dict[Tuple[MultiIndex, MultiIndex], Poly] = {}
        for combo in itertools.product(entries, repeat=k):
            v = factor
            for _, _, val in combo:
                v = v * val
            left = composed(tuple(mu for mu, _, _ in combo))
            right = composed(tuple(nu for _, nu, _ in combo))
            _add_scaled_tensor(acc, left, right, v)
        C.append(BiDiffOp(d, acc))
    return StarProduct(p, C, parity=True)


def natural_cotangent_product(conn: Connection, order: int) -> StarProduct:
    """Natural product on the phase space over a flat base connection.

    Order k pairs the rank-k covariant jets of both arguments through k
    copies of the canonical Poisson tensor.  Associativity requires the
    base connection to be flat, so curvature is rejected up front.
    """
    if not is_flat(conn):
        raise NonFlatConnection("the natural product needs a flat base connection")
    lifted = lift_connection(conn)
    d = lifted.dim
    p = PoissonTensor.canonical(conn.n, 0)
    entries = p.constant_entries()
    C = [BiDiffOp.multiplication(d)]
    for k in range(1, order + 1):
        jets = covariant_jet_ops(lifted, k)
        factor = _order_factor(k)
        acc: Dict[Tuple[MultiIndex, MultiIndex], Poly] = {}
        for combo in itertools.product(entries, repeat=k):
            v = factor
            for _, _, val in combo:
                v = v * val
            left = jets[tuple(mu for mu, _, _ in combo)]
            right = jets[tuple(nu for _, nu, _ in combo)]
            _add_scaled_tensor(acc, left, right, v)
        C.append(BiDiffOp(d, acc))
    return StarProduct(p, C, parity=True)


def truncated_symplectic_product(spec: SymplecticConnectionSpec) -> StarProduct:
    """Order-2 product of a torsionless symplectic connection.

    The order-2 operator pairs second covariant jets and subtracts the
    Ricci term weighted by the connection's rational parameter;
    associativity holds (and is only claimed) through order 2.
    """
    d = spec.dim
    p = PoissonTensor.canonical(spec.n, 0)
    entries = p.constant_entries()
    C1_acc: Dict[Tuple[MultiIndex, MultiIndex], Poly] = {}
    for mu, nu, v in entries:
        _acc_poly(
            C1_acc,
            (MultiIndex.unit(mu), MultiIndex.unit(nu)),
            Poly.const(d, v * HALF_I),
        )
    jets = covariant_jet_ops(spec, 2)
    ric = ricci(spec)
    factor = _order_factor(2)
    acc: Dict[Tuple[MultiIndex, MultiIndex], Poly] = {}
    for (mu1, nu1, v1), (mu2, nu2, v2) in itertools.product(entries, repeat=2):
        v = factor * v1 * v2
        _add_scaled_tensor(acc, jets[(mu1, mu2)], jets[(nu1, nu2)], v)
        ric_comp = ric.get((mu1, mu2))
        if ric_comp is not None:
            _acc_poly(
                acc,
                (MultiIndex.unit(nu1), MultiIndex.unit(nu2)),
                ric_comp.scale(v * spec.a).scale(-1),
            )
    C = [BiDiffOp.multiplication(d), BiDiffOp(d, C1_acc), BiDiffOp(d, acc)]
    return StarProduct(p, C, parity=True)


# ---------------------------------------------------------------------------
# closed-form coordinate slots of the natural product
# ---------------------------------------------------------------------------

def closed_form_slot_ops(conn: Connection, k: int) -> Dict[int, DiffOp]:
    """The operators f -> C_k(x^alpha, f) of the natural product, in closed
    form, for every phase-space coordinate alpha.

    Configuration slots need only the base jets of the coordinate
    functions; momentum slots are assembled from the recursive tensor
    family.  This is an independent route to the same operators that
    `natural_cotangent_product` produces, used for cross-validation.
    """
    n = conn.n
    d = 2 * n
    out: Dict[int, DiffOp] = {}
    if k == 0:
        for alpha in range(d):
            out[alpha] = DiffOp.multiplication(Poly.coordinate(d, alpha))
        return out

    half_i_k = HALF_I ** k
    inv_kfact = GaussianRational(Fraction(1, factorial(k)))
    inv_km1fact = GaussianRational(Fraction(1, factorial(k - 1)))

    base_jets = covariant_jet_ops(conn, k)
    for i in range(n):
        qi = Poly.coordinate(n, i)
        acc: Dict[MultiIndex, Poly] = {}
        for idx, op in base_jets.items():
            comp = op.apply(qi)
            if comp.is_zero():
                continue
            deriv = MultiIndex.of(*(n + j for j in idx))
            _acc_poly(acc, deriv, comp.embed(d).scale(half_i_k * inv_kfact))
        out[i] = DiffOp(d, acc)

    # momentum slots: rank-0 tensor component is the Kronecker delta
    tensors = f_tensor_lookup(conn, k)
    for i in range(n):
        acc = {}
        # p_l d^k/dp^k part
        for lowers in itertools.product(range(n), repeat=k):
            for l in range(n):
                head = tensors(k, l, lowers, i)
                last = lowers[-1]
                sub = Poly.zero(n)
                for j in range(n):
                    sym = conn.christoffel(l, j, last)
                    if not sym.is_zero():
                        sub = sub + sym * tensors(k - 1, j, lowers[:-1], i)
                total = head - sub.scale(k)
                if total.is_zero():
                    continue
                coeff = (Poly.coordinate(d, n + l) * total.embed(d)).scale(
                    half_i_k * inv_kfact
                )
                _acc_poly(acc, MultiIndex.of(*(n + j for j in lowers)), coeff)
        # -f^l d_q^l d_p^(k-1) part and trailing d_p^(k-1) part
        for lowers in itertools.product(range(n), repeat=k - 1):
            for l in range(n):
                val = tensors(k - 1, l, lowers, i)
                if not val.is_zero():
                    deriv = MultiIndex.of(l, *(n + j for j in lowers))
                    _acc_poly(
                        acc,
                        deriv,
                        val.embed(d).scale(half_i_k * inv_km1fact).scale(-1),
                    )
            tail = Poly.zero(n)
            for l in range(n):
                tail = tail + tensors(k, l, lowers + (l,), i)
                tail = tail - tensors(k - 1, l, lowers, i).diff_coord(l)
                for j in range(n):
                    sym = conn.christoffel(l, l, j)
                    if not sym.is_zero():
                        tail = tail - sym * tensors(k - 1, j, lowers, i)
            if not tail.is_zero():
                _acc_poly(
                    acc,
                    MultiIndex.of(*(n + j for j in lowers)),
                    tail.embed(d).scale(half_i_k * inv_km1fact),
                )
        out[n + i] = DiffOp(d, acc)
    return out


def f_tensor_lookup(conn: Connection, max_rank: int):
    """Component accessor for the recursive tensor family, with the rank-0
    convention f^l_i = delta^l_i."""
    family = f_tensors(conn, max_rank) if max_rank >= 1 else []

    def lookup(rank: int, l: int, lowers: Tuple[int, ...], i: int) -> Poly:
        if rank == 0:
            return Poly.const(conn.n, 1) if l == i else Poly.zero(conn.n)
        return family[rank - 1].component(l, lowers, i)

    return lookup


# ---------------------------------------------------------------------------
# deformed bracket and validation reports
# ---------------------------------------------------------------------------

def star_bracket(s: StarProduct, f, g) -> HbarSeries:
    """Deformed bracket (f*g - g*f) / (i hbar), one order shorter.

    The division is a series shift; the order-0 commutator coefficient
    vanishes because the order-0 operator is pointwise multiplication.
    """
    comm = s.apply(f, g) - s.apply(g, f)
    shifted = comm.shift_down()
    return shifted.scale(-IMAG)  # 1/i == -i


@dataclass(frozen=True)
class CheckEntry:
    name: str
    passed: bool
    detail: str = ""

    def to_json(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


@dataclass(frozen=True)
class CheckReport:
    title: str
    entries: Tuple[CheckEntry, ...]
    params: Dict[str, object] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def failures(self) -> List[CheckEntry]:
        return [e for e in self.entries if not e.passed]

    def to_json(self) -> dict:
        return {
            "title": self.title,
            "passed": self.passed,
            "params": {k: str(v) for k, v in sorted(self.params.items())},
            "entries": [e.to_json() for e in self.entries],
        }


def check_axioms(s: StarProduct, max_degree: int = 4) -> CheckReport:
    """Validate the defining conditions of a star product.

    Associativity is verified exactly on every monomial triple of total
    degree <= max_degree, separately at each order of the deformation
    parameter; the remaining conditions are structural.
    """
    d = s.dim
    entries: List[CheckEntry] = []

    entries.append(
        CheckEntry(
            "bidifferential",
            True,
            f"{s.order + 1} operators of bounded order with polynomial coefficients",
        )
    )

    entries.append(
        CheckEntry(
            "order0-multiplication",
            s.C[0] == BiDiffOp.multiplication(d),
            "order-0 operator must be pointwise multiplication",
        )
    )

    p_bidiff = s.poisson.as_bidiff()
    lhs = s.C[1] - s.C[1].swap() if s.order >= 1 else None
    ok = lhs == p_bidiff.scale(IMAG) if lhs is not None else False
    entries.append(
        CheckEntry(
            "bracket-leading-term",
            ok,
            "antisymmetric part of the order-1 operator must be i times the Poisson bivector",
        )
    )

    basis = monomials_up_to(d, max_degree)
    assoc_ok = True
    assoc_detail = f"monomial triples of total degree <= {max_degree}, orders <= {s.order}"
    for fm in basis:
        fdeg = fm.degree
        if not assoc_ok:
            break
        fp = Poly.monomial(d, fm)
        for gm in basis:
            if fdeg + gm.degree > max_degree or not assoc_ok:
                break
            gp = Poly.monomial(d, gm)
            for hm in basis:
                if fdeg + gm.degree + hm.degree > max_degree:
                    break
                hp = Poly.monomial(d, hm)
                for k in range(s.order + 1):
                    acc = Poly.zero(d)
                    for l in range(k + 1):
                        inner_fg = s.C[k - l].apply(fp, gp)
                        if not inner_fg.is_zero():
                            acc = acc + s.C[l].apply(inner_fg, hp)
                        inner_gh = s.C[k - l].apply(gp, hp)
                        if not inner_gh.is_zero():
                            acc = acc - s.C[l].apply(fp, inner_gh)
                    if not acc.is_zero():
                        assoc_ok = False
                        assoc_detail = (
                            f"failed at order {k} on ({fp}, {gp}, {hp}): residual {acc}"
                        )
                        break
                if not assoc_ok:
                    break
    entries.append(CheckEntry("associativity", assoc_ok, assoc_detail))

    unit_ok = all(s.C[k].vanishes_on_constants() for k in range(1, s.order + 1))
    entries.append(
        CheckEntry(
            "unit-annihilation",
            unit_ok,
            "every positive-order operator must differentiate both slots",
        )
    )

    if s.parity:
        parity_ok = all(
            s.C[k].swap() == s.C[k].scale(GaussianRational((-1) ** k))
            for k in range(s.order + 1)
        )
        entries.append(
            CheckEntry(
                "parity",
                parity_ok,
                "slot swap must rescale order k by (-1)^k",
            )
        )

    return CheckReport(
        "star-product-axioms",
        tuple(entries),
        {"max_degree": max_degree, "order": s.order, "dim": d},
    )


def quantum_canonicity_check(s: StarProduct) -> CheckReport:
    """Check the deformed bracket of every coordinate pair against the
    Poisson tensor, exactly at every available order."""
    d = s.dim
    entries: List[CheckEntry] = []
    for mu in range(d):
        for nu in range(mu + 1, d):
            bracket = star_bracket(
                s, Poly.coordinate(d, mu), Poly.coordinate(d, nu)
            )
            expected = HbarSeries.from_constant(s.poisson.entry(mu, nu), bracket.order)
            ok = bracket == expected
            detail = "" if ok else f"bracket = {bracket}"
            entries.append(CheckEntry(f"pair-{mu}-{nu}", ok, detail))
    return CheckReport("quantum-canonicity", tuple(entries), {"dim": d, "order": s.order})


def monomials_up_to(dim: int, max_degree: int) -> List[MultiIndex]:
    """All monomial indices of total degree <= max_degree, canonically ordered."""
    out: List[MultiIndex] = []

    def rec(coord, remaining, acc):
        if coord == dim:
            out.append(MultiIndex(dict(acc)))
            return
        for e in range(remaining + 1):
            if e:
                acc[coord] = e
            rec(coord + 1, remaining - e, acc)
            acc.pop(coord, None)

    rec(0, max_degree, {})
    out.sort(key=lambda m: m.grlex_key(dim))
    return out
