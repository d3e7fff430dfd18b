"""Star products on a flat phase space, exactly.

Walks through the Moyal product: coordinate products, the deformed
bracket, the defining axioms, and a Casimir direction that stays inert.
Everything is exact Gaussian-rational arithmetic; 'h' in the printout is
the deformation parameter tracked as a series index.
"""

from starq import (
    Poly,
    PoissonTensor,
    check_axioms,
    moyal_product,
    quantum_canonicity_check,
    star_bracket,
)
from starq.exprparse import coordinate_names


def show_series(label, series, names):
    print(f"{label}:")
    for k, coeff in enumerate(series.coeffs):
        if not coeff.is_zero():
            print(f"   h^{k}: {coeff.format(names)}")
    print()


def main():
    n = 1
    names = coordinate_names(n)
    P = PoissonTensor.canonical(n)
    M = moyal_product(P, order=4)
    d = P.dim
    q = Poly.coordinate(d, 0)
    p = Poly.coordinate(d, 1)

    print("== products of coordinates ==")
    show_series("q * p", M.apply(q, p), names)
    show_series("p * q", M.apply(p, q), names)
    show_series("q^2 * p^2", M.apply(q * q, p * p), names)

    print("== deformed bracket ==")
    show_series("[[q, p]]", star_bracket(M, q, p), names)
    f = q * q * p
    g = q * p * p
    show_series("[[q^2 p, q p^2]]", star_bracket(M, f, g), names)
    print("classical bracket for comparison:", P.bracket(f, g).format(names))
    print()

    print("== axiom suite (degree bound 6) ==")
    report = check_axioms(M, max_degree=6)
    for entry in report.entries:
        print(f"   {entry.name:<24} {'ok' if entry.passed else 'FAILED'}")
    print()

    print("== a Casimir direction stays inert ==")
    Pc = PoissonTensor.canonical(1, casimir=1)
    Mc = moyal_product(Pc, order=3)
    names3 = coordinate_names(1, 1)
    c = Poly.coordinate(Pc.dim, 2)
    q3 = Poly.coordinate(Pc.dim, 0)
    show_series("c1 * q1", Mc.apply(c, q3), names3)
    print("canonicity including the Casimir block:",
          "ok" if quantum_canonicity_check(Mc).passed else "FAILED")


if __name__ == "__main__":
    main()
