"""Independent reference implementations used as test oracles.

Everything here goes through sympy's symbolic differentiation and exact
rationals, sharing no code with the package under test.
"""

from fractions import Fraction

import sympy as sp

from starq.poly import Poly
from starq.scalars import GaussianRational


def phase_symbols(n, casimir=0):
    names = (
        [f"q{j + 1}" for j in range(n)]
        + [f"p{j + 1}" for j in range(n)]
        + [f"c{j + 1}" for j in range(casimir)]
    )
    return sp.symbols(names)


def poly_to_sympy(poly: Poly, syms):
    expr = sp.Integer(0)
    for mi, coeff in poly.terms():
        term = sp.Rational(coeff.re.numerator, coeff.re.denominator) + sp.I * sp.Rational(
            coeff.im.numerator, coeff.im.denominator
        )
        for coord, e in mi.pairs:
            term *= syms[coord] ** e
        expr += term
    return sp.expand(expr)


def sympy_to_poly(expr, syms, dim=None):
    if dim is None:
        dim = len(syms)
    expr = sp.expand(expr)
    poly = Poly.zero(dim)
    terms = expr.as_ordered_terms() if expr != 0 else []
    for term in terms:
        coeff = term
        exps = {}
        for j, s in enumerate(syms):
            e = sp.degree(term, s) if term.has(s) else 0
            if e:
                exps[j] = int(e)
                coeff = coeff / s ** e
        coeff = sp.simplify(coeff)
        re, im = coeff.as_real_imag()
        gr = GaussianRational(
            Fraction(int(sp.numer(re)), int(sp.denom(re))),
            Fraction(int(sp.numer(im)), int(sp.denom(im))),
        )
        from starq.poly import MultiIndex

        poly = poly + Poly.monomial(dim, MultiIndex(exps), gr)
    return poly


def canonical_pairs(n):
    """(mu, nu, value) entries of the canonical Poisson matrix."""
    out = []
    for i in range(n):
        out.append((i, n + i, 1))
        out.append((n + i, i, -1))
    return out


def moyal_oracle(f_expr, g_expr, syms, n, order):
    """Brute-force Moyal product, one sympy expression per order."""
    import itertools

    pairs = canonical_pairs(n)
    out = []
    for k in range(order + 1):
        acc = sp.Integer(0)
        factor = sp.Rational(1, sp.factorial(k)) * (sp.I / 2) ** k
        for combo in itertools.product(pairs, repeat=k):
            value = sp.Integer(1)
            df, dg = f_expr, g_expr
            for mu, nu, v in combo:
                value *= v
                df = sp.diff(df, syms[mu])
                dg = sp.diff(dg, syms[nu])
            if df == 0 or dg == 0:
                continue
            acc += value * df * dg
        out.append(sp.expand(factor * acc))
    return out


def poisson_bracket_oracle(f_expr, g_expr, syms, n):
    acc = sp.Integer(0)
    for mu, nu, v in canonical_pairs(n):
        acc += v * sp.diff(f_expr, syms[mu]) * sp.diff(g_expr, syms[nu])
    return sp.expand(acc)


def christoffel_oracle(targets, syms):
    """Pullback symbols (dx/dy)^i_a d2 y^a / dx^j dx^k via sympy matrices."""
    n = len(targets)
    jac = sp.Matrix([[sp.diff(targets[a], syms[b]) for b in range(n)] for a in range(n)])
    inv = jac.inv()
    gamma = {}
    for i in range(n):
        for j in range(n):
            for k in range(n):
                acc = sp.Integer(0)
                for a in range(n):
                    acc += inv[i, a] * sp.diff(targets[a], syms[j], syms[k])
                gamma[(i, j, k)] = sp.expand(acc)
    return gamma
