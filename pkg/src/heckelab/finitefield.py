"""Hecke matrices over prime fields, with exact spectra.

The correspondence counting that drives everything is N = #{w : w^2 = f},
evaluated in F_q.  The cuspidal Hecke matrix T_z packages those counts with
a diagonal correction at x = z and, for z away from the marked points, three
q-weighted deltas tying the marked columns to the matched points of z.

Spectra are computed exactly: the characteristic polynomial is found over
the rationals and factored, so quadratic eigenvalues come out as surds
(a + coef*sqrt(d))/b rather than floats.  Factors of degree three or more
are kept whole, with high-precision numerical roots attached.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

import sympy
from sympy import Poly, Rational, factorint, isprime

from .kernels import kontsevich_f

__all__ = [
    "PrimeField",
    "TzMatrix",
    "Surd",
    "PolyRoot",
    "Eigenvalue",
    "sqrt_count",
    "n_count",
    "tz_matrix",
    "eigenvalues_exact",
    "algebraic_value",
    "drinfeld_check",
]


@dataclass(frozen=True)
class PrimeField:
    """The prime field F_q for an odd prime q."""

    q: int

    def __post_init__(self):
        if self.q < 3 or self.q % 2 == 0 or not isprime(self.q):
            raise ValueError(f"q must be an odd prime >= 3, got {self.q}")

    def reduce(self, a) -> int:
        return int(a) % self.q

    def inv(self, a) -> int:
        return pow(self.reduce(a), -1, self.q)


def _as_q(q) -> int:
    if isinstance(q, PrimeField):
        return q.q
    F = PrimeField(int(q))  # validates
    return F.q


def sqrt_count(q, a) -> int:
    """#{w in F_q : w^2 = a}: 1 at a = 0, 2 on nonzero squares, else 0."""
    qq = _as_q(q)
    a = int(a) % qq
    if a == 0:
        return 1
    return 2 if pow(a, (qq - 1) // 2, qq) == 1 else 0


def n_count(q, t, z, x, y) -> int:
    """Number of points of the correspondence fiber over (x, y, z) in F_q.

    Arguments may be the float infinity, in which case the projective
    degenerations of f_t apply: one infinite slot leaves the square of the
    difference of the other two, two or more leave the constant 1.
    """
    qq = _as_q(q)
    t = int(t) % qq
    if t == 0 or t == 1:
        raise ValueError("t must avoid 0 and 1 in F_q")
    args = (x, y, z)
    infinite = [v == math.inf for v in args]
    k = sum(infinite)
    if k >= 2:
        return sqrt_count(qq, 1)
    if k == 1:
        a, b = (int(v) % qq for v, bad in zip(args, infinite) if not bad)
        return sqrt_count(qq, (a - b) ** 2)
    xx, yy, zz = (int(v) % qq for v in args)
    return sqrt_count(qq, kontsevich_f(t, xx, yy, zz))


@dataclass(frozen=True)
class TzMatrix:
    """The q x q cuspidal Hecke matrix at a point z, indexed by x, y in F_q."""

    q: int
    t: int
    z: int
    entries: tuple

    def __post_init__(self):
        if len(self.entries) != self.q or any(len(r) != self.q for r in self.entries):
            raise ValueError("entries must be a q x q matrix")

    def row(self, x: int) -> tuple:
        return self.entries[x % self.q]

    def column_sums(self) -> list:
        return [sum(r[y] for r in self.entries) for y in range(self.q)]


def tz_matrix(q, t, z) -> TzMatrix:
    """Assemble T_z over F_q for marked points (0, 1, t, infinity).

    (T_z)_{x,y} = 2 - N(t,z,x,y) - c_z delta_{x,z} + q-corrections, where
    c_z is q + 1 away from the marked points and 1 on them, and the
    corrections place a q at (x, y) = (matched point of z at r, r) for
    r = 0, 1, t whenever z avoids the marked points.
    """
    qq = _as_q(q)
    t = int(t) % qq
    z = int(z) % qq
    if t == 0 or t == 1:
        raise ValueError("t must avoid 0 and 1 in F_q")
    marked = z in (0, 1, t)
    c_z = 1 if marked else qq + 1
    rows = []
    for x in range(qq):
        row = []
        for y in range(qq):
            e = 2 - n_count(qq, t, z, x, y)
            if x == z:
                e -= c_z
            row.append(e)
        rows.append(row)
    if not marked:
        x0 = (t * pow(z, -1, qq)) % qq
        x1 = ((z - t) * pow(z - 1, -1, qq)) % qq
        xt = (t * (z - 1) * pow(z - t, -1, qq)) % qq
        rows[x0][0] += qq
        rows[x1][1] += qq
        rows[xt][t] += qq
    return TzMatrix(qq, t, z, tuple(tuple(r) for r in rows))


# ---------------------------------------------------------------------------
# exact spectra


@dataclass(frozen=True)
class Surd:
    """The real or complex quadratic integer-form value (a + coef sqrt(d)) / b.

    d is squarefree and not 0 or 1; b > 0; gcd(a, coef, b) = 1.
    """

    a: int
    coef: int
    d: int
    b: int

    def value(self) -> complex:
        root = math.sqrt(self.d) if self.d > 0 else 1j * math.sqrt(-self.d)
        return (self.a + self.coef * root) / self.b

    def conjugate(self) -> "Surd":
        return Surd(self.a, -self.coef, self.d, self.b)


@dataclass(frozen=True)
class PolyRoot:
    """A root of an irreducible integer polynomial of degree >= 3.

    coeffs are low-order first; approx is a 25-digit numerical root, stored
    as a complex double.
    """

    coeffs: tuple
    approx: complex


Eigenvalue = Union[Fraction, Surd, PolyRoot]


def _squarefree_split(n: int) -> tuple[int, int]:
    """n = s^2 * d with d squarefree; returns (s, d). Sign stays on d."""
    sign = -1 if n < 0 else 1
    n = abs(n)
    s, d = 1, 1
    for p, e in factorint(n).items():
        s *= p ** (e // 2)
        if e % 2:
            d *= p
    return s, sign * d


def _quadratic_roots(c2: int, c1: int, c0: int) -> list:
    disc = c1 * c1 - 4 * c2 * c0
    s, d = _squarefree_split(disc)
    if d == 1:  # rational roots; larger first for c2 > 0
        return [Fraction(-c1 + s, 2 * c2), Fraction(-c1 - s, 2 * c2)]
    a, coef, b = -c1, s, 2 * c2
    g = math.gcd(math.gcd(abs(a), abs(coef)), abs(b))
    a, coef, b = a // g, coef // g, b // g
    if b < 0:
        a, coef, b = -a, -coef, -b
    return [Surd(a, coef, d, b), Surd(a, -coef, d, b)]


def eigenvalues_exact(M) -> list[Eigenvalue]:
    """Exact eigenvalues of an integer or rational matrix.

    The characteristic polynomial is computed over Q and factored into
    irreducibles.  Linear factors give Fractions, quadratic factors give
    Surd pairs, anything of higher degree is returned as a PolyRoot per
    root.  Multiplicities are respected; the list always has length n.
    """
    if isinstance(M, TzMatrix):
        M = M.entries
    rows = [list(r) for r in M]
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ValueError("matrix must be square")
    sym = sympy.Matrix(n, n, lambda i, j: Rational(rows[i][j]))
    lam = sympy.Symbol("lam")
    charpoly = sym.charpoly(lam).as_expr()
    out: list[Eigenvalue] = []
    _, factors = sympy.factor_list(charpoly)
    for fac, mult in factors:
        poly = Poly(fac, lam)
        deg = poly.degree()
        # clear denominators to primitive integer coefficients
        coeffs = poly.all_coeffs()
        den = math.lcm(*(Fraction(str(c)).denominator for c in coeffs))
        ints = [int(c * den) for c in coeffs]
        if deg == 1:
            root = Fraction(-ints[1], ints[0])
            out.extend([root] * mult)
        elif deg == 2:
            r1, r2 = _quadratic_roots(ints[0], ints[1], ints[2])
            out.extend([r1, r2] * mult)
        else:
            for approx in poly.nroots(n=25):
                out.extend([PolyRoot(tuple(ints), complex(approx))] * mult)
    if len(out) != n:
        raise RuntimeError("eigenvalue count does not match matrix size")

    def sort_key(e):
        v = algebraic_value(e)
        return (v.real, v.imag)

    return sorted(out, key=sort_key)


def algebraic_value(e) -> complex:
    """Numeric value of an exact eigenvalue (Fraction, Surd, or PolyRoot)."""
    if isinstance(e, Surd):
        return e.value()
    if isinstance(e, PolyRoot):
        return e.approx
    return complex(float(e), 0.0)


def drinfeld_check(q, eigs: Sequence) -> bool:
    """True iff every eigenvalue magnitude is at most 2 sqrt(q) (+1e-9 slack)."""
    qq = _as_q(q)
    bound = 2.0 * math.sqrt(qq) + 1e-9
    return all(abs(algebraic_value(e)) <= bound for e in eigs)
