"""Multi-indices and exact multivariate polynomials.

A `MultiIndex` is a sparse map from coordinate index to a positive
exponent; zero entries are never stored, so equal indices are equal
objects under `==`/`hash`.  A `Poly` stores its terms as a map from
`MultiIndex` to `GaussianRational` with zero coefficients pruned, which
makes structural equality canonical.  The display/serialization order is
graded lexicographic, leading term first.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, Iterable, Iterator, Tuple

from .errors import DimensionMismatch
from .scalars import GaussianRational, ONE, ZERO


class MultiIndex:
    """Sparse multi-index of derivative/monomial exponents."""

    __slots__ = ("_pairs", "_degree", "_hash")

    def __init__(self, exponents: Dict[int, int] | Iterable[Tuple[int, int]] = ()):
        if isinstance(exponents, dict):
            items = exponents.items()
        else:
            items = exponents
        pairs = tuple(sorted((c, e) for c, e in items if e))
        for c, e in pairs:
            if c < 0 or e < 0:
                raise ValueError(f"invalid multi-index entry ({c}, {e})")
        object.__setattr__(self, "_pairs", pairs)
        object.__setattr__(self, "_degree", sum(e for _, e in pairs))
        object.__setattr__(self, "_hash", hash(pairs))

    def __setattr__(self, name, value):
        raise AttributeError("MultiIndex is immutable")

    # -- constructors -----------------------------------------------------

    @classmethod
    def unit(cls, coord: int) -> "MultiIndex":
        return cls(((coord, 1),))

    @classmethod
    def of(cls, *coords: int) -> "MultiIndex":
        """Multi-index from a list of coordinates with repetition."""
        counts: Dict[int, int] = {}
        for c in coords:
            counts[c] = counts.get(c, 0) + 1
        return cls(counts)

    @classmethod
    def from_exponents(cls, exps: Iterable[int]) -> "MultiIndex":
        return cls({c: e for c, e in enumerate(exps) if e})

    # -- accessors ---------------------------------------------------------

    @property
    def degree(self) -> int:
        return self._degree

    @property
    def pairs(self) -> Tuple[Tuple[int, int], ...]:
        return self._pairs

    def exponent(self, coord: int) -> int:
        for c, e in self._pairs:
            if c == coord:
                return e
        return 0

    def max_coord(self) -> int:
        """Largest coordinate with a nonzero exponent, or -1."""
        return self._pairs[-1][0] if self._pairs else -1

    def dense(self, dim: int) -> Tuple[int, ...]:
        exps = [0] * dim
        for c, e in self._pairs:
            exps[c] = e
        return tuple(exps)

    def coords(self) -> Iterator[int]:
        """Coordinates with repetition, ascending."""
        for c, e in self._pairs:
            for _ in range(e):
                yield c

    # -- algebra -----------------------------------------------------------

    def __add__(self, other: "MultiIndex") -> "MultiIndex":
        counts = dict(self._pairs)
        for c, e in other._pairs:
            counts[c] = counts.get(c, 0) + e
        return MultiIndex(counts)

    def decrement(self, coord: int) -> "MultiIndex":
        """Remove one power of `coord`; exponent must be positive."""
        counts = dict(self._pairs)
        counts[coord] -= 1
        return MultiIndex(counts)

    def subtract(self, other: "MultiIndex") -> "MultiIndex":
        counts = dict(self._pairs)
        for c, e in other._pairs:
            counts[c] = counts.get(c, 0) - e
            if counts[c] < 0:
                raise ValueError(f"{self} does not dominate {other}")
        return MultiIndex(counts)

    def divides(self, other: "MultiIndex") -> bool:
        return all(other.exponent(c) >= e for c, e in self._pairs)

    def sub_indices(self) -> Iterator["MultiIndex"]:
        """All K with K <= self componentwise (includes 0 and self)."""
        pairs = self._pairs
        if not pairs:
            yield MultiIndex()
            return

        def rec(i, acc):
            if i == len(pairs):
                yield MultiIndex(tuple(acc))
                return
            c, e = pairs[i]
            for k in range(e + 1):
                if k:
                    acc.append((c, k))
                    yield from rec(i + 1, acc)
                    acc.pop()
                else:
                    yield from rec(i + 1, acc)

        yield from rec(0, [])

    def binomial(self, sub: "MultiIndex") -> int:
        """Product of per-coordinate binomial coefficients C(self_c, sub_c)."""
        result = 1
        for c, k in sub._pairs:
            result *= _binom(self.exponent(c), k)
        return result

    def grlex_key(self, dim: int) -> Tuple:
        return (self._degree, self.dense(dim))

    # -- dunder ------------------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, MultiIndex):
            return NotImplemented
        return self._pairs == other._pairs

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"MultiIndex({dict(self._pairs)!r})"


EMPTY_INDEX = MultiIndex()


def _binom(n: int, k: int) -> int:
    if k < 0 or k > n:
        return 0
    result = 1
    for j in range(k):
        result = result * (n - j) // (j + 1)
    return result


def _falling(n: int, k: int) -> int:
    result = 1
    for j in range(k):
        result *= n - j
    return result


class Poly:
    """Multivariate polynomial over GaussianRational in `dim` coordinates."""

    __slots__ = ("dim", "_terms")

    def __init__(self, dim: int, terms: Dict[MultiIndex, GaussianRational] | None = None):
        if dim < 0:
            raise ValueError("dimension must be non-negative")
        clean: Dict[MultiIndex, GaussianRational] = {}
        for mi, c in (terms or {}).items():
            if mi.max_coord() >= dim:
                raise DimensionMismatch(f"monomial {mi!r} out of range for dim {dim}")
            if c:
                clean[mi] = c
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "_terms", clean)

    def __setattr__(self, name, value):
        raise AttributeError("Poly is immutable")

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, dim: int) -> "Poly":
        return cls(dim)

    @classmethod
    def const(cls, dim: int, value) -> "Poly":
        value = _as_scalar(value)
        return cls(dim, {EMPTY_INDEX: value})

    @classmethod
    def coordinate(cls, dim: int, coord: int) -> "Poly":
        if not 0 <= coord < dim:
            raise DimensionMismatch(f"coordinate {coord} out of range for dim {dim}")
        return cls(dim, {MultiIndex.unit(coord): ONE})

    @classmethod
    def monomial(cls, dim: int, mi: MultiIndex, coeff=ONE) -> "Poly":
        return cls(dim, {mi: _as_scalar(coeff)})

    # -- predicates/accessors -------------------------------------------------

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def is_constant(self) -> bool:
        return all(mi.degree == 0 for mi in self._terms)

    def constant_term(self) -> GaussianRational:
        return self._terms.get(EMPTY_INDEX, ZERO)

    @property
    def degree(self) -> int:
        """Total degree; 0 for the zero polynomial."""
        return max((mi.degree for mi in self._terms), default=0)

    def coefficient(self, mi: MultiIndex) -> GaussianRational:
        return self._terms.get(mi, ZERO)

    def terms(self) -> Iterator[Tuple[MultiIndex, GaussianRational]]:
        """Terms in canonical (graded lex, leading first) order."""
        for mi in sorted(self._terms, key=lambda m: m.grlex_key(self.dim), reverse=True):
            yield mi, self._terms[mi]

    def term_count(self) -> int:
        return len(self._terms)

    # -- arithmetic -------------------------------------------------------------

    def _check_dim(self, other: "Poly"):
        if self.dim != other.dim:
            raise DimensionMismatch(f"dim {self.dim} vs {other.dim}")

    def __add__(self, other):
        if isinstance(other, (int, Fraction, GaussianRational)):
            other = Poly.const(self.dim, other)
        if not isinstance(other, Poly):
            return NotImplemented
        self._check_dim(other)
        terms = dict(self._terms)
        for mi, c in other._terms.items():
            acc = terms.get(mi)
            s = c if acc is None else acc + c
            if s:
                terms[mi] = s
            elif acc is not None:
                del terms[mi]
        return Poly(self.dim, terms)

    __radd__ = __add__

    def __neg__(self):
        return Poly(self.dim, {mi: -c for mi, c in self._terms.items()})

    def __sub__(self, other):
        if isinstance(other, (int, Fraction, GaussianRational)):
            other = Poly.const(self.dim, other)
        if not isinstance(other, Poly):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, GaussianRational)):
            return self.scale(other)
        if not isinstance(other, Poly):
            return NotImplemented
        self._check_dim(other)
        terms: Dict[MultiIndex, GaussianRational] = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = m1 + m2
                c = c1 * c2
                acc = terms.get(m)
                s = c if acc is None else acc + c
                if s:
                    terms[m] = s
                elif acc is not None:
                    del terms[m]
        return Poly(self.dim, terms)

    __rmul__ = __mul__

    def scale(self, factor) -> "Poly":
        factor = _as_scalar(factor)
        if not factor:
            return Poly(self.dim)
        return Poly(self.dim, {mi: c * factor for mi, c in self._terms.items()})

    def __pow__(self, n: int) -> "Poly":
        if not isinstance(n, int) or n < 0:
            raise ValueError("exponent must be a non-negative integer")
        result = Poly.const(self.dim, 1)
        for _ in range(n):
            result = result * self
        return result

    # -- calculus -----------------------------------------------------------------

    def diff_coord(self, coord: int, times: int = 1) -> "Poly":
        """Iterated partial derivative along one coordinate."""
        if not 0 <= coord < self.dim:
            raise DimensionMismatch(f"coordinate {coord} out of range for dim {self.dim}")
        terms: Dict[MultiIndex, GaussianRational] = {}
        for mi, c in self._terms.items():
            e = mi.exponent(coord)
            if e < times:
                continue
            factor = _falling(e, times)
            counts = dict(mi.pairs)
            counts[coord] = e - times
            nm = MultiIndex(counts)
            nc = c * factor
            acc = terms.get(nm)
            s = nc if acc is None else acc + nc
            if s:
                terms[nm] = s
            elif acc is not None:
                del terms[nm]
        return Poly(self.dim, terms)

    def diff(self, index: MultiIndex) -> "Poly":
        """Iterated partial derivative for a whole multi-index."""
        result = self
        for coord, e in index.pairs:
            result = result.diff_coord(coord, e)
            if result.is_zero():
                break
        return result

    # -- reshaping -------------------------------------------------------------------

    def embed(self, dim: int) -> "Poly":
        """Reinterpret in a space of at least the current dimension."""
        if dim < self.dim:
            raise DimensionMismatch(f"cannot shrink dim {self.dim} to {dim}")
        return Poly(dim, dict(self._terms))

    def zero_like(self) -> "Poly":
        return Poly(self.dim)

    # -- dunder ------------------------------------------------------------------------

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, GaussianRational)):
            other = Poly.const(self.dim, other)
        if not isinstance(other, Poly):
            return NotImplemented
        return self.dim == other.dim and self._terms == other._terms

    def __hash__(self):
        return hash((self.dim, frozenset(self._terms.items())))

    def __repr__(self):
        return f"Poly({self.dim}, {self.format()!r})"

    def __str__(self):
        return self.format()

    def format(self, names: list[str] | None = None) -> str:
        if self.is_zero():
            return "0"
        if names is None:
            names = [f"x{j}" for j in range(self.dim)]
        chunks = []
        for mi, c in self.terms():
            factors = []
            for coord, e in mi.pairs:
                factors.append(names[coord] if e == 1 else f"{names[coord]}^{e}")
            cs = str(c)
            if factors and cs == "1":
                cs = ""
            elif factors and cs == "-1":
                cs = "-"
            elif ("+" in cs[1:]) or ("-" in cs[1:]) or ("*" in cs):
                cs = f"({cs})"
            body = "*".join(factors)
            if cs and body:
                chunks.append(f"{cs}{'*' if cs not in ('-',) else ''}{body}")
            elif body:
                chunks.append(body)
            else:
                chunks.append(cs)
        out = " + ".join(chunks)
        return out.replace("+ -", "- ")

    # -- serialization ------------------------------------------------------------------

    def to_json(self) -> list:
        return [
            {"exps": list(mi.dense(self.dim)), **c.to_json()}
            for mi, c in self.terms()
        ]

    @classmethod
    def from_json(cls, dim: int, data: list) -> "Poly":
        terms: Dict[MultiIndex, GaussianRational] = {}
        for entry in data:
            mi = MultiIndex.from_exponents(entry["exps"])
            c = GaussianRational.from_json(entry)
            if mi in terms:
                raise ValueError(f"duplicate monomial {entry['exps']}")
            terms[mi] = c
        return cls(dim, terms)


def _as_scalar(value) -> GaussianRational:
    if isinstance(value, GaussianRational):
        return value
    if isinstance(value, (int, Fraction)):
        return GaussianRational(value)
    raise TypeError(f"cannot use {value!r} as a scalar")
