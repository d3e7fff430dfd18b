"""Connections on the base manifold and on phase space.

The base objects are polynomial Christoffel symbols on an n-dimensional
configuration space.  A flat base connection induces a flat symplectic
connection on the 2n-dimensional phase space whose only nonzero
components are the four families produced by `lift_connection`; general
symplectic connections on phase space enter through
`SymplecticConnectionSpec` as fully lowered, totally symmetric symbols.

Index layout on phase space: coordinates 0..n-1 are the configuration
directions, n..2n-1 the conjugate momentum directions (the momentum
partner of base index i sits at n + i).
"""

from __future__ import annotations

import itertools
from typing import Dict, List, Tuple

from .errors import DimensionMismatch, OperatorOrderExceeded
from .operators import DiffOp
from .poly import MultiIndex, Poly
from .scalars import GaussianRational


# ---------------------------------------------------------------------------
# canonical Poisson tensor / symplectic form entries
# ---------------------------------------------------------------------------

def canonical_poisson_entries(n: int, casimir: int = 0) -> Dict[Tuple[int, int], int]:
    """Nonzero entries of the canonical block Poisson matrix on R^(2n+k).

    The top-left 2n x 2n part is ((0, I), (-I, 0)); the k Casimir
    directions contribute nothing.
    """
    entries: Dict[Tuple[int, int], int] = {}
    for i in range(n):
        entries[(i, n + i)] = 1
        entries[(n + i, i)] = -1
    return entries


def symplectic_form_entries(n: int) -> Dict[Tuple[int, int], int]:
    """Nonzero entries of the inverse of the canonical Poisson matrix (k=0)."""
    entries: Dict[Tuple[int, int], int] = {}
    for i in range(n):
        entries[(i, n + i)] = -1
        entries[(n + i, i)] = 1
    return entries


# ---------------------------------------------------------------------------
# base connection
# ---------------------------------------------------------------------------

class Connection:
    """Linear connection on the base manifold with polynomial symbols.

    Components depend on the configuration coordinates only and are
    symmetric in the two lower indices.
    """

    __slots__ = ("n", "_gamma")

    def __init__(self, n: int, gamma: Dict[Tuple[int, int, int], Poly] | None = None):
        clean: Dict[Tuple[int, int, int], Poly] = {}
        for (i, j, k), poly in (gamma or {}).items():
            if not (0 <= i < n and 0 <= j < n and 0 <= k < n):
                raise DimensionMismatch(f"index ({i},{j},{k}) out of range for n={n}")
            if poly.dim != n:
                raise DimensionMismatch("symbol must be a polynomial in the base coordinates")
            if not poly.is_zero():
                clean[(i, j, k)] = poly
        for (i, j, k), poly in clean.items():
            if clean.get((i, k, j), Poly.zero(n)) != poly:
                raise ValueError("connection symbols must be symmetric in the lower indices")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "_gamma", clean)

    def __setattr__(self, name, value):
        raise AttributeError("Connection is immutable")

    @property
    def dim(self) -> int:
        return self.n

    @classmethod
    def zero(cls, n: int) -> "Connection":
        return cls(n)

    @classmethod
    def one_dim(cls, gamma: Poly) -> "Connection":
        """Any single symbol gives a flat connection when n = 1."""
        if gamma.dim != 1:
            raise DimensionMismatch("expected a univariate symbol")
        return cls(1, {(0, 0, 0): gamma})

    def christoffel(self, i: int, j: int, k: int) -> Poly:
        return self._gamma.get((i, j, k), Poly.zero(self.n))

    def components(self) -> Dict[Tuple[int, int, int], Poly]:
        return dict(self._gamma)

    def is_zero(self) -> bool:
        return not self._gamma

    def __eq__(self, other):
        if not isinstance(other, Connection):
            return NotImplemented
        return self.n == other.n and self._gamma == other._gamma


def flat_connection_from_diffeo(targets: List[Poly]) -> Connection:
    """Pull the trivial connection back along a triangular polynomial map.

    `targets[a]` is the a-th component of the map; it must equal the a-th
    coordinate plus a polynomial in the strictly earlier coordinates, which
    makes the Jacobian unipotent lower-triangular and hence polynomially
    invertible.  The result has identically zero curvature.
    """
    n = len(targets)
    if n == 0:
        raise ValueError("empty coordinate map")
    for a, t in enumerate(targets):
        if t.dim != n:
            raise DimensionMismatch("map components must live in the base space")
    jac = [[targets[a].diff_coord(b) for b in range(n)] for a in range(n)]
    one = Poly.const(n, 1)
    for a in range(n):
        if jac[a][a] != one:
            raise ValueError(f"component {a} must have unit coefficient on its own coordinate")
        for b in range(a + 1, n):
            if not jac[a][b].is_zero():
                raise ValueError(f"component {a} depends on later coordinate {b}: not triangular")
    # unipotent inverse: (I + N)^-1 = sum_m (-N)^m with N strictly lower triangular
    nil = [[jac[a][b] if a != b else Poly.zero(n) for b in range(n)] for a in range(n)]
    inv = [[one if a == b else Poly.zero(n) for b in range(n)] for a in range(n)]
    power = [[one if a == b else Poly.zero(n) for b in range(n)] for a in range(n)]
    for _ in range(1, n):
        power = [
            [
                sum((power[a][c] * nil[c][b] for c in range(n)), Poly.zero(n)).scale(-1)
                for b in range(n)
            ]
            for a in range(n)
        ]
        inv = [[inv[a][b] + power[a][b] for b in range(n)] for a in range(n)]
    gamma: Dict[Tuple[int, int, int], Poly] = {}
    for a in range(n):
        hess = [[targets[a].diff(MultiIndex.of(j, k)) for k in range(n)] for j in range(n)]
        for i in range(n):
            factor = inv[i][a]
            if factor.is_zero():
                continue
            for j in range(n):
                for k in range(j, n):
                    contrib = factor * hess[j][k]
                    if contrib.is_zero():
                        continue
                    gamma[(i, j, k)] = gamma.get((i, j, k), Poly.zero(n)) + contrib
                    if k != j:
                        gamma[(i, k, j)] = gamma.get((i, k, j), Poly.zero(n)) + contrib
    return Connection(n, gamma)


# ---------------------------------------------------------------------------
# lifted connection on phase space
# ---------------------------------------------------------------------------

class LiftedConnection:
    """Symplectic connection on phase space induced by a base connection."""

    __slots__ = ("n", "dim", "_symbols", "base")

    def __init__(self, base: Connection, symbols: Dict[Tuple[int, int, int], Poly]):
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "n", base.n)
        object.__setattr__(self, "dim", 2 * base.n)
        object.__setattr__(self, "_symbols", symbols)

    def __setattr__(self, name, value):
        raise AttributeError("LiftedConnection is immutable")

    def christoffel(self, mu: int, nu: int, rho: int) -> Poly:
        return self._symbols.get((mu, nu, rho), Poly.zero(self.dim))

    def components(self) -> Dict[Tuple[int, int, int], Poly]:
        return dict(self._symbols)

    def lowered(self, alpha: int, beta: int, gamma: int) -> Poly:
        """Index-lowered symbol via the symplectic form."""
        omega = symplectic_form_entries(self.n)
        acc = Poly.zero(self.dim)
        for (a, d), v in omega.items():
            if a == alpha:
                acc = acc + self.christoffel(d, beta, gamma).scale(v)
        return acc


def lift_connection(conn: Connection) -> LiftedConnection:
    """Phase-space symbols induced by a base connection.

    Exactly four component families are nonzero: base-base-base copies the
    base symbols; the mixed families are transposed negatives; and the
    momentum-direction family with two base lower indices is linear
    homogeneous in the momenta.
    """
    n = conn.n
    d = 2 * n
    symbols: Dict[Tuple[int, int, int], Poly] = {}

    def put(key, poly):
        if not poly.is_zero():
            symbols[key] = poly

    for i, j, k in itertools.product(range(n), repeat=3):
        base = conn.christoffel(i, j, k)
        put((i, j, k), base.embed(d))
        # momentum upper index, mixed lower indices
        put((n + i, n + j, k), conn.christoffel(j, i, k).embed(d).scale(-1))
        put((n + i, j, n + k), conn.christoffel(k, j, i).embed(d).scale(-1))
    for i, j, k in itertools.product(range(n), repeat=3):
        acc = Poly.zero(d)
        for l in range(n):
            p_l = Poly.coordinate(d, n + l)
            inner = Poly.zero(n)
            for r in range(n):
                inner = inner + conn.christoffel(r, j, k) * conn.christoffel(l, r, i)
                inner = inner + conn.christoffel(r, i, k) * conn.christoffel(l, r, j)
            inner = inner - conn.christoffel(l, i, j).diff_coord(k)
            if not inner.is_zero():
                acc = acc + p_l * inner.embed(d)
        put((n + i, j, k), acc)
    return LiftedConnection(conn, symbols)


# ---------------------------------------------------------------------------
# symplectic connection given by lowered symbols
# ---------------------------------------------------------------------------

class SymplecticConnectionSpec:
    """Torsionless symplectic connection on R^(2n) plus a curvature weight.

    Stored as fully lowered symbols, which must be totally symmetric --
    that symmetry is exactly the torsionless+symplectic condition in
    canonical coordinates.  The rational weight `a` multiplies the Ricci
    term of the associated truncated product.
    """

    __slots__ = ("n", "dim", "_lowered", "a")

    def __init__(
        self,
        n: int,
        lowered: Dict[Tuple[int, int, int], Poly],
        a: GaussianRational = GaussianRational(0),
    ):
        d = 2 * n
        clean: Dict[Tuple[int, int, int], Poly] = {}
        for (al, be, ga), poly in lowered.items():
            if not all(0 <= x < d for x in (al, be, ga)):
                raise DimensionMismatch("lowered index out of range")
            if poly.dim != d:
                raise DimensionMismatch("lowered symbols live on phase space")
            if not poly.is_zero():
                clean[(al, be, ga)] = poly
        for (al, be, ga), poly in clean.items():
            for perm in itertools.permutations((al, be, ga)):
                if clean.get(perm, Poly.zero(d)) != poly:
                    raise ValueError("lowered symbols must be totally symmetric")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "dim", d)
        object.__setattr__(self, "_lowered", clean)
        object.__setattr__(self, "a", a)

    def __setattr__(self, name, value):
        raise AttributeError("SymplecticConnectionSpec is immutable")

    @classmethod
    def from_symmetric_components(
        cls, n: int, components: Dict[Tuple[int, int, int], Poly], a=GaussianRational(0)
    ) -> "SymplecticConnectionSpec":
        """Build from one representative per index multiset."""
        d = 2 * n
        full: Dict[Tuple[int, int, int], Poly] = {}
        for key, poly in components.items():
            for perm in itertools.permutations(key):
                existing = full.get(perm)
                if existing is not None and existing != poly:
                    raise ValueError(f"conflicting values for symmetric index set {key}")
                full[perm] = poly
        return cls(n, full, a)

    @classmethod
    def from_lifted(cls, lifted: LiftedConnection, a=GaussianRational(0)) -> "SymplecticConnectionSpec":
        d = lifted.dim
        lowered: Dict[Tuple[int, int, int], Poly] = {}
        for al, be, ga in itertools.product(range(d), repeat=3):
            val = lifted.lowered(al, be, ga)
            if not val.is_zero():
                lowered[(al, be, ga)] = val
        return cls(lifted.n, lowered, a)

    def lowered(self, alpha: int, beta: int, gamma: int) -> Poly:
        return self._lowered.get((alpha, beta, gamma), Poly.zero(self.dim))

    def christoffel(self, mu: int, nu: int, rho: int) -> Poly:
        """Raised symbol via the canonical Poisson matrix."""
        acc = Poly.zero(self.dim)
        for (m, al), v in canonical_poisson_entries(self.n).items():
            if m == mu:
                acc = acc + self.lowered(al, nu, rho).scale(v)
        return acc

    def is_zero(self) -> bool:
        return not self._lowered


# ---------------------------------------------------------------------------
# curvature
# ---------------------------------------------------------------------------

def curvature(conn) -> Dict[Tuple[int, int, int, int], Poly]:
    """Nonzero components R^rho_(sigma mu nu) of the curvature tensor.

    R^rho_(sigma mu nu) = d_mu G^rho_(nu sigma) - d_nu G^rho_(mu sigma)
                        + G^rho_(mu lam) G^lam_(nu sigma)
                        - G^rho_(nu lam) G^lam_(mu sigma).
    """
    d = conn.dim
    out: Dict[Tuple[int, int, int, int], Poly] = {}
    for rho, sigma in itertools.product(range(d), repeat=2):
        for mu in range(d):
            for nu in range(mu + 1, d):
                term = conn.christoffel(rho, nu, sigma).diff_coord(mu)
                term = term - conn.christoffel(rho, mu, sigma).diff_coord(nu)
                for lam in range(d):
                    term = term + conn.christoffel(rho, mu, lam) * conn.christoffel(lam, nu, sigma)
                    term = term - conn.christoffel(rho, nu, lam) * conn.christoffel(lam, mu, sigma)
                if not term.is_zero():
                    out[(rho, sigma, mu, nu)] = term
                    out[(rho, sigma, nu, mu)] = -term
    return out


def is_flat(conn) -> bool:
    return not curvature(conn)


def ricci(conn) -> Dict[Tuple[int, int], Poly]:
    """Ricci tensor R_(mu nu) = R^alpha_(mu alpha nu); zeros omitted.

    The contraction is over the first upper and first lower-derivative
    slot of the curvature convention above.
    """
    d = conn.dim
    riem = curvature(conn)
    out: Dict[Tuple[int, int], Poly] = {}
    for mu, nu in itertools.product(range(d), repeat=2):
        acc = Poly.zero(d)
        for al in range(d):
            comp = riem.get((al, mu, al, nu))
            if comp is not None:
                acc = acc + comp
        if not acc.is_zero():
            out[(mu, nu)] = acc
    return out


# ---------------------------------------------------------------------------
# iterated covariant derivatives
# ---------------------------------------------------------------------------

def covariant_jet_ops(conn, rank: int) -> Dict[Tuple[int, ...], DiffOp]:
    """Operators computing the components of the rank-k iterated
    covariant derivative of a scalar.

    The recursion prepends the new index: the next jet along mu0 is the
    mu0-partial of the previous jet minus symbol contractions on each of
    the existing slots.
    """
    from .operators import max_op_order

    if rank > max_op_order():
        raise OperatorOrderExceeded(f"jet rank {rank} exceeds the operator-order guard")
    d = conn.dim
    jets: Dict[Tuple[int, ...], DiffOp] = {(): DiffOp.identity(d)}
    for _ in range(rank):
        nxt: Dict[Tuple[int, ...], DiffOp] = {}
        for idx, op in jets.items():
            for mu0 in range(d):
                new = DiffOp.partial(d, mu0).compose(op)
                for s, mus in enumerate(idx):
                    for lam in range(d):
                        sym = conn.christoffel(lam, mu0, mus)
                        if sym.is_zero():
                            continue
                        replaced = idx[:s] + (lam,) + idx[s + 1:]
                        new = new - jets[replaced].premultiply(sym)
                nxt[(mu0,) + idx] = new
        jets = nxt
    return jets


def covariant_jet(conn, rank: int, f: Poly) -> Dict[Tuple[int, ...], Poly]:
    """Components of the rank-k iterated covariant derivative of f."""
    if f.dim != conn.dim:
        raise DimensionMismatch("function does not live on the connection's space")
    return {idx: op.apply(f) for idx, op in covariant_jet_ops(conn, rank).items()}


# ---------------------------------------------------------------------------
# recursive momentum-jet tensors
# ---------------------------------------------------------------------------

class FTensor:
    """Rank-k family of base tensors generated by the jet recursion.

    Components carry one upper index, k ordered lower indices and one
    trailing lower index; rank 1 is the connection symbol itself.
    """

    __slots__ = ("n", "rank", "_components")

    def __init__(self, n: int, rank: int, components: Dict[Tuple[int, ...], Poly]):
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "rank", rank)
        object.__setattr__(self, "_components", {
            key: val for key, val in components.items() if not val.is_zero()
        })

    def __setattr__(self, name, value):
        raise AttributeError("FTensor is immutable")

    def component(self, l: int, lowers: Tuple[int, ...], i: int) -> Poly:
        if len(lowers) != self.rank:
            raise ValueError(f"expected {self.rank} middle indices")
        return self._components.get((l,) + lowers + (i,), Poly.zero(self.n))

    def is_zero(self) -> bool:
        return not self._components


def f_tensors(conn: Connection, max_rank: int) -> List[FTensor]:
    """The tensor family of ranks 1..max_rank for a base connection."""
    if max_rank < 1:
        raise ValueError("max_rank must be at least 1")
    n = conn.n
    rank1 = {
        (l, i1, i): conn.christoffel(l, i1, i)
        for l, i1, i in itertools.product(range(n), repeat=3)
    }
    out = [FTensor(n, 1, rank1)]
    for rank in range(2, max_rank + 1):
        prev = out[-1]
        comps: Dict[Tuple[int, ...], Poly] = {}
        for l in range(n):
            for lowers in itertools.product(range(n), repeat=rank):
                *first, i_new = lowers
                first = tuple(first)
                for i in range(n):
                    val = prev.component(l, first, i).diff_coord(i_new)
                    for j in range(n):
                        sym = conn.christoffel(l, i_new, j)
                        if not sym.is_zero():
                            val = val + sym * prev.component(j, first, i)
                        for s in range(rank - 1):
                            drop = conn.christoffel(j, first[s], i_new)
                            if not drop.is_zero():
                                replaced = first[:s] + (j,) + first[s + 1:]
                                val = val - drop * prev.component(l, replaced, i)
                    comps[(l,) + lowers + (i,)] = val
        out.append(FTensor(n, rank, comps))
    return out
