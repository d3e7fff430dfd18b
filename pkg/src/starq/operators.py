"""Normal-form differential and bidifferential operators.

Operators are stored with coefficient polynomials to the left of
derivative monomials and terms keyed by the derivative multi-index, so
structural equality of the term maps is equality of operators.  The
derivative order of any term is capped by a configurable guard (default
12, overridable through the STARQ_MAX_OP_ORDER environment variable) to
catch runaway recursions early.
"""

from __future__ import annotations

import os
from fractions import Fraction
from typing import Dict, Iterator, List, Tuple

from .errors import DimensionMismatch, OperatorOrderExceeded
from .poly import EMPTY_INDEX, MultiIndex, Poly
from .scalars import GaussianRational, ONE
from .series import HbarSeries

_DEFAULT_MAX_ORDER = 12
_max_order_override: int | None = None


def max_op_order() -> int:
    if _max_order_override is not None:
        return _max_order_override
    return int(os.environ.get("STARQ_MAX_OP_ORDER", _DEFAULT_MAX_ORDER))


def set_max_op_order(value: int | None):
    """Override the derivative-order guard (None restores the default)."""
    global _max_order_override
    _max_order_override = value


class DiffOp:
    """Differential operator sum_I coeff_I(x) d^I in normal form."""

    __slots__ = ("dim", "_terms")

    def __init__(self, dim: int, terms: Dict[MultiIndex, Poly] | None = None):
        clean: Dict[MultiIndex, Poly] = {}
        guard = max_op_order()
        for mi, poly in (terms or {}).items():
            if poly.dim != dim:
                raise DimensionMismatch(f"coefficient dim {poly.dim} != operator dim {dim}")
            if mi.max_coord() >= dim:
                raise DimensionMismatch(f"derivative index {mi!r} out of range for dim {dim}")
            if mi.degree > guard:
                raise OperatorOrderExceeded(
                    f"derivative order {mi.degree} exceeds guard {guard}"
                )
            if not poly.is_zero():
                clean[mi] = poly
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "_terms", clean)

    def __setattr__(self, name, value):
        raise AttributeError("DiffOp is immutable")

    # -- constructors ---------------------------------------------------------

    @classmethod
    def zero(cls, dim: int) -> "DiffOp":
        return cls(dim)

    @classmethod
    def identity(cls, dim: int) -> "DiffOp":
        return cls(dim, {EMPTY_INDEX: Poly.const(dim, 1)})

    @classmethod
    def derivative(cls, dim: int, index: MultiIndex, coeff=ONE) -> "DiffOp":
        return cls(dim, {index: Poly.const(dim, coeff)})

    @classmethod
    def partial(cls, dim: int, coord: int) -> "DiffOp":
        return cls.derivative(dim, MultiIndex.unit(coord))

    @classmethod
    def multiplication(cls, poly: Poly) -> "DiffOp":
        """The operator f -> poly * f."""
        return cls(poly.dim, {EMPTY_INDEX: poly})

    # -- accessors --------------------------------------------------------------

    def terms(self) -> Iterator[Tuple[MultiIndex, Poly]]:
        for mi in sorted(self._terms, key=lambda m: m.grlex_key(self.dim), reverse=True):
            yield mi, self._terms[mi]

    def coefficient(self, index: MultiIndex) -> Poly:
        return self._terms.get(index, Poly.zero(self.dim))

    def is_zero(self) -> bool:
        return not self._terms

    @property
    def order(self) -> int:
        return max((mi.degree for mi in self._terms), default=0)

    def term_count(self) -> int:
        return len(self._terms)

    def annihilates_constants(self) -> bool:
        """True when there is no pure multiplication term."""
        return EMPTY_INDEX not in self._terms

    def zero_like(self) -> "DiffOp":
        return DiffOp(self.dim)

    # -- action and composition -----------------------------------------------------

    def apply(self, f: Poly) -> Poly:
        if f.dim != self.dim:
            raise DimensionMismatch(f"operand dim {f.dim} != operator dim {self.dim}")
        result = Poly.zero(self.dim)
        for mi, coeff in self._terms.items():
            d = f.diff(mi)
            if not d.is_zero():
                result = result + coeff * d
        return result

    def compose(self, other: "DiffOp") -> "DiffOp":
        """Normal form of self applied after `other` (generalized Leibniz)."""
        if other.dim != self.dim:
            raise DimensionMismatch(f"dim {self.dim} vs {other.dim}")
        acc: Dict[MultiIndex, Poly] = {}
        for i_idx, a in self._terms.items():
            for j_idx, b in other._terms.items():
                for k_idx in i_idx.sub_indices():
                    db = b.diff(k_idx)
                    if db.is_zero():
                        continue
                    mult = i_idx.binomial(k_idx)
                    new_idx = i_idx.subtract(k_idx) + j_idx
                    contrib = a * db
                    if mult != 1:
                        contrib = contrib.scale(mult)
                    _acc_poly(acc, new_idx, contrib)
        return DiffOp(self.dim, acc)

    def commutator_with_coordinate(self, coord: int) -> "DiffOp":
        """[self, x^coord] in normal form.

        Equals self o (x^coord *) - (x^coord *) o self; for a term
        coeff * d^I it is coeff * I_coord * d^(I - e_coord), so the result
        is strictly lower order.
        """
        if not 0 <= coord < self.dim:
            raise DimensionMismatch(f"coordinate {coord} out of range for dim {self.dim}")
        acc: Dict[MultiIndex, Poly] = {}
        for mi, coeff in self._terms.items():
            e = mi.exponent(coord)
            if e:
                _acc_poly(acc, mi.decrement(coord), coeff.scale(e))
        return DiffOp(self.dim, acc)

    # -- arithmetic ---------------------------------------------------------------------

    def __add__(self, other: "DiffOp") -> "DiffOp":
        if not isinstance(other, DiffOp):
            return NotImplemented
        if other.dim != self.dim:
            raise DimensionMismatch(f"dim {self.dim} vs {other.dim}")
        acc = dict(self._terms)
        for mi, poly in other._terms.items():
            _acc_poly(acc, mi, poly)
        return DiffOp(self.dim, acc)

    def __neg__(self) -> "DiffOp":
        return DiffOp(self.dim, {mi: -p for mi, p in self._terms.items()})

    def __sub__(self, other: "DiffOp") -> "DiffOp":
        if not isinstance(other, DiffOp):
            return NotImplemented
        return self + (-other)

    def scale(self, factor) -> "DiffOp":
        return DiffOp(self.dim, {mi: p.scale(factor) for mi, p in self._terms.items()})

    def __mul__(self, other):
        """Composition for operators, left coefficient product for Poly/scalars."""
        if isinstance(other, DiffOp):
            return self.compose(other)
        if isinstance(other, (int, Fraction, GaussianRational)):
            return self.scale(other)
        return NotImplemented

    def premultiply(self, poly: Poly) -> "DiffOp":
        """Multiply every coefficient by `poly` on the left."""
        return DiffOp(self.dim, {mi: poly * p for mi, p in self._terms.items()})

    # -- dunder -----------------------------------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, DiffOp):
            return NotImplemented
        return self.dim == other.dim and self._terms == other._terms

    def __hash__(self):
        return hash((self.dim, frozenset((mi, p) for mi, p in self._terms.items())))

    def __repr__(self):
        return f"DiffOp({self.dim}, {self.format()!r})"

    def __str__(self):
        return self.format()

    def format(self, names: List[str] | None = None) -> str:
        if self.is_zero():
            return "0"
        if names is None:
            names = [f"x{j}" for j in range(self.dim)]
        chunks = []
        for mi, coeff in self.terms():
            ds = "".join(
                f"d_{names[c]}" + (f"^{e}" if e > 1 else "") for c, e in mi.pairs
            )
            cs = coeff.format(names)
            if ds and cs == "1":
                chunks.append(ds)
            elif ds:
                chunks.append(f"({cs}) {ds}")
            else:
                chunks.append(f"({cs})")
        return " + ".join(chunks)

    # -- serialization ---------------------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "terms": [
                {"derivative": list(mi.dense(self.dim)), "coefficient": p.to_json()}
                for mi, p in self.terms()
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "DiffOp":
        dim = data["dim"]
        terms: Dict[MultiIndex, Poly] = {}
        for entry in data["terms"]:
            mi = MultiIndex.from_exponents(entry["derivative"])
            if mi in terms:
                raise ValueError("duplicate derivative index in serialized operator")
            terms[mi] = Poly.from_json(dim, entry["coefficient"])
        return cls(dim, terms)


class BiDiffOp:
    """Bidifferential operator sum_(I,J) coeff_(I,J)(x) d^I (x) d^J."""

    __slots__ = ("dim", "_terms")

    def __init__(
        self,
        dim: int,
        terms: Dict[Tuple[MultiIndex, MultiIndex], Poly] | None = None,
    ):
        clean: Dict[Tuple[MultiIndex, MultiIndex], Poly] = {}
        guard = max_op_order()
        for (li, ri), poly in (terms or {}).items():
            if poly.dim != dim:
                raise DimensionMismatch(f"coefficient dim {poly.dim} != operator dim {dim}")
            if li.max_coord() >= dim or ri.max_coord() >= dim:
                raise DimensionMismatch("derivative index out of range")
            if li.degree > guard or ri.degree > guard:
                raise OperatorOrderExceeded(
                    f"derivative order exceeds guard {guard}"
                )
            if not poly.is_zero():
                clean[(li, ri)] = poly
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "_terms", clean)

    def __setattr__(self, name, value):
        raise AttributeError("BiDiffOp is immutable")

    # -- constructors ----------------------------------------------------------

    @classmethod
    def zero(cls, dim: int) -> "BiDiffOp":
        return cls(dim)

    @classmethod
    def multiplication(cls, dim: int) -> "BiDiffOp":
        """(f, g) -> f*g."""
        return cls(dim, {(EMPTY_INDEX, EMPTY_INDEX): Poly.const(dim, 1)})

    @classmethod
    def tensor(cls, a: DiffOp, b: DiffOp) -> "BiDiffOp":
        """(f, g) -> a(f) * b(g)."""
        if a.dim != b.dim:
            raise DimensionMismatch(f"dim {a.dim} vs {b.dim}")
        acc: Dict[Tuple[MultiIndex, MultiIndex], Poly] = {}
        for li, pa in a._terms.items():
            for ri, pb in b._terms.items():
                _acc_poly(acc, (li, ri), pa * pb)
        return cls(a.dim, acc)

    # -- accessors ----------------------------------------------------------------

    def terms(self) -> Iterator[Tuple[Tuple[MultiIndex, MultiIndex], Poly]]:
        def key(pair):
            li, ri = pair
            return (li.grlex_key(self.dim), ri.grlex_key(self.dim))

        for pair in sorted(self._terms, key=key, reverse=True):
            yield pair, self._terms[pair]

    def coefficient(self, li: MultiIndex, ri: MultiIndex) -> Poly:
        return self._terms.get((li, ri), Poly.zero(self.dim))

    def is_zero(self) -> bool:
        return not self._terms

    def term_count(self) -> int:
        return len(self._terms)

    def vanishes_on_constants(self) -> bool:
        """No term differentiates zero times in either slot."""
        return all(li.degree and ri.degree for li, ri in self._terms)

    # -- action ----------------------------------------------------------------------

    def apply(self, f: Poly, g: Poly) -> Poly:
        if f.dim != self.dim or g.dim != self.dim:
            raise DimensionMismatch("operand dimension mismatch")
        result = Poly.zero(self.dim)
        for (li, ri), coeff in self._terms.items():
            df = f.diff(li)
            if df.is_zero():
                continue
            dg = g.diff(ri)
            if dg.is_zero():
                continue
            result = result + coeff * df * dg
        return result

    def slot_fix(self, coord: int, side: str = "left") -> DiffOp:
        """Freeze one slot at the coordinate function x^coord.

        For side="left" this is the operator f -> self(x^coord, f): a term
        coeff * d^I (x) d^J contributes coeff * d^J when I is the bare first
        derivative along `coord`, and (coeff * x^coord) * d^J when I is
        empty; higher-order I kill the coordinate.
        """
        if not 0 <= coord < self.dim:
            raise DimensionMismatch(f"coordinate {coord} out of range for dim {self.dim}")
        if side not in ("left", "right"):
            raise ValueError("side must be 'left' or 'right'")
        unit = MultiIndex.unit(coord)
        x = Poly.coordinate(self.dim, coord)
        acc: Dict[MultiIndex, Poly] = {}
        for (li, ri), coeff in self._terms.items():
            fixed, free = (li, ri) if side == "left" else (ri, li)
            if fixed == unit:
                _acc_poly(acc, free, coeff)
            elif fixed.degree == 0:
                _acc_poly(acc, free, coeff * x)
        return DiffOp(self.dim, acc)

    def swap(self) -> "BiDiffOp":
        """(f, g) -> self(g, f)."""
        acc: Dict[Tuple[MultiIndex, MultiIndex], Poly] = {}
        for (li, ri), coeff in self._terms.items():
            _acc_poly(acc, (ri, li), coeff)
        return BiDiffOp(self.dim, acc)

    # -- arithmetic ----------------------------------------------------------------------

    def __add__(self, other: "BiDiffOp") -> "BiDiffOp":
        if not isinstance(other, BiDiffOp):
            return NotImplemented
        if other.dim != self.dim:
            raise DimensionMismatch(f"dim {self.dim} vs {other.dim}")
        acc = dict(self._terms)
        for pair, poly in other._terms.items():
            _acc_poly(acc, pair, poly)
        return BiDiffOp(self.dim, acc)

    def __neg__(self) -> "BiDiffOp":
        return BiDiffOp(self.dim, {pair: -p for pair, p in self._terms.items()})

    def __sub__(self, other: "BiDiffOp") -> "BiDiffOp":
        if not isinstance(other, BiDiffOp):
            return NotImplemented
        return self + (-other)

    def scale(self, factor) -> "BiDiffOp":
        return BiDiffOp(self.dim, {pair: p.scale(factor) for pair, p in self._terms.items()})

    # -- dunder -------------------------------------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, BiDiffOp):
            return NotImplemented
        return self.dim == other.dim and self._terms == other._terms

    def __repr__(self):
        return f"BiDiffOp(dim={self.dim}, terms={self.term_count()})"

    # -- serialization ---------------------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "terms": [
                {
                    "left": list(li.dense(self.dim)),
                    "right": list(ri.dense(self.dim)),
                    "coefficient": p.to_json(),
                }
                for (li, ri), p in self.terms()
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "BiDiffOp":
        dim = data["dim"]
        terms: Dict[Tuple[MultiIndex, MultiIndex], Poly] = {}
        for entry in data["terms"]:
            key = (
                MultiIndex.from_exponents(entry["left"]),
                MultiIndex.from_exponents(entry["right"]),
            )
            if key in terms:
                raise ValueError("duplicate derivative pair in serialized operator")
            terms[key] = Poly.from_json(dim, entry["coefficient"])
        return cls(dim, terms)


class OperatorSeries:
    """id + sum_k hbar^k T_k as a plain list of operators, T_0 = id."""

    __slots__ = ("dim", "orders")

    def __init__(self, orders: List[DiffOp]):
        if not orders:
            raise ValueError("an operator series needs at least the order-0 term")
        dim = orders[0].dim
        if orders[0] != DiffOp.identity(dim):
            raise ValueError("the order-0 operator must be the identity")
        for op in orders:
            if op.dim != dim:
                raise DimensionMismatch("mixed dimensions in operator series")
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "orders", list(orders))

    def __setattr__(self, name, value):
        raise AttributeError("OperatorSeries is immutable")

    @property
    def order(self) -> int:
        return len(self.orders) - 1

    def __getitem__(self, k: int) -> DiffOp:
        return self.orders[k]

    def apply(self, f: Poly) -> HbarSeries:
        return HbarSeries([op.apply(f) for op in self.orders])

    def apply_series(self, h: HbarSeries) -> HbarSeries:
        """Action on a coefficient series, truncated at the series order."""
        out = []
        for m in range(h.order + 1):
            acc = Poly.zero(self.dim)
            for j in range(min(m, self.order) + 1):
                acc = acc + self.orders[j].apply(h[m - j])
            out.append(acc)
        return HbarSeries(out)

    def __eq__(self, other):
        if not isinstance(other, OperatorSeries):
            return NotImplemented
        return self.orders == other.orders


def _acc_poly(acc: dict, key, poly: Poly):
    existing = acc.get(key)
    total = poly if existing is None else existing + poly
    if total.is_zero():
        acc.pop(key, None)
    else:
        acc[key] = total
