"""Euler continuants, the completion variety, and level-m T-systems.

Everything here is exact integer/rational algebra.  The central objects are
the continuant polynomials P_r, computed by the three-term recursion
P_r = P_{r-1} b_r - P_{r-2}, and the hypersurface of (m+2)-tuples
(b_0, ..., b_{m+1}) cut out by P_m(b_1, ..., b_m) = 1 with the outer
coordinates determined by P_{m-1} windows.  Points of that hypersurface are
in bijection with nonvanishing solutions of the type A1 T-system of level m
(Hirota bilinear form), and each one satisfies an exact 2x2 matrix equation
over the Gaussian rationals: the ordered product of the monodromy factors
B_j J equals minus the identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import StratumBoundary

__all__ = [
    "ContinuantPoint",
    "GaussianRational2x2",
    "continuant",
    "continuant_euler",
    "xm_complete",
    "tsystem_table",
    "balanced_product",
    "chebyshev_equal_b",
]


def _exactify(v):
    """Ints become Fractions; Fractions and floats pass through."""
    if isinstance(v, int):
        return Fraction(v)
    return v


def continuant(bs: Sequence) -> object:
    """Euler continuant P_r(b_1, ..., b_r), with P_0 = 1 for the empty tuple.

    Exact when the inputs are ints or Fractions; floats float through.
    """
    prev2, prev1 = 0, 1  # P_{-1} = 0, P_0 = 1
    for b in bs:
        prev2, prev1 = prev1, prev1 * _exactify(b) - prev2
    return _exactify(prev1)


def _even_run_subsets(r: int):
    """Bitmasks over [0, r) whose maximal runs of set bits all have even length."""
    for mask in range(1 << r):
        run = 0
        ok = True
        for i in range(r):
            if mask >> i & 1:
                run += 1
            else:
                if run % 2:
                    ok = False
                    break
                run = 0
        if ok and run % 2 == 0:
            yield mask


def continuant_euler(bs: Sequence) -> tuple:
    """P_r via Euler's subset-sum formula; returns (value, term count).

    The sum runs over subsets of positions that are disjoint unions of
    even-length intervals, each contributing (-1)^(|S|/2) times the product
    of the b_i at the remaining positions.  The term count is the (r+1)-th
    Fibonacci number, which the tests pin against the recursion route.
    """
    bs = [_exactify(b) for b in bs]
    r = len(bs)
    if r > 12:
        raise ValueError("combinatorial enumeration is capped at r = 12")
    total = Fraction(0)
    terms = 0
    for mask in _even_run_subsets(r):
        size = mask.bit_count()
        term = Fraction(1, 1) if size % 4 == 0 else Fraction(-1, 1)
        for i in range(r):
            if not (mask >> i & 1):
                term = term * bs[i]
        total = total + term
        terms += 1
    return total, terms


def _invariant_holds(lhs, rhs) -> bool:
    if isinstance(lhs, Fraction) and isinstance(rhs, Fraction):
        return lhs == rhs
    return abs(lhs - rhs) <= 1e-9 * max(1.0, abs(lhs), abs(rhs))


@dataclass(frozen=True)
class ContinuantPoint:
    """A tuple (b_0, ..., b_{m+1}) on the continuant hypersurface.

    Invariants, checked at construction: P_m(b_1, ..., b_m) = 1,
    b_0 = P_{m-1}(b_2, ..., b_m) and b_{m+1} = P_{m-1}(b_1, ..., b_{m-1}).
    Entries are exact rationals by default; float entries switch the checks
    to a 1e-9 relative tolerance (numeric mode).
    """

    m: int
    b: tuple

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("level m must be >= 1")
        if len(self.b) != self.m + 2:
            raise ValueError(f"expected {self.m + 2} coordinates, got {len(self.b)}")
        object.__setattr__(self, "b", tuple(_exactify(v) for v in self.b))
        inner = self.b[1 : self.m + 1]
        checks = [
            (continuant(inner), _exactify(1)),
            (self.b[0], continuant(self.b[2 : self.m + 1])),
            (self.b[self.m + 1], continuant(self.b[1 : self.m])),
        ]
        for got, want in checks:
            if not _invariant_holds(got, want):
                raise ValueError(f"not on the continuant hypersurface: {got} != {want}")

    def window(self, start: int, length: int) -> tuple:
        """Cyclic window (b_start, ..., b_{start+length-1}) mod m+2."""
        n = self.m + 2
        return tuple(self.b[(start + j) % n] for j in range(length))


def xm_complete(m: int, bs: Sequence, free=None) -> ContinuantPoint:
    """Complete (b_1, ..., b_{m-1}) to a full hypersurface point.

    Generically P_{m-1}(b_1, ..., b_{m-1}) != 0 and b_m is solved linearly
    from P_m = 1.  When P_{m-1} = 0 the point lies on the deeper stratum:
    completion is only consistent if P_{m-2}(b_1, ..., b_{m-2}) = -1, and
    then b_m is a free coordinate that must be supplied via ``free``.
    Raises StratumBoundary when ``free`` is needed but absent.
    """
    bs = tuple(_exactify(v) for v in bs)
    if len(bs) != m - 1:
        raise ValueError(f"expected {m - 1} inner coordinates, got {len(bs)}")
    p_head = continuant(bs)
    p_tail = continuant(bs[: m - 2]) if m >= 2 else Fraction(0)  # formal P_{-1}
    if p_head != 0:
        if free is not None:
            raise ValueError("free coordinate only applies on the stratum P_{m-1} = 0")
        b_m = (1 + p_tail) / p_head
    else:
        if free is None:
            raise StratumBoundary(
                "P_{m-1} = 0: the point lies on a deeper stratum; pass the free coordinate"
            )
        if p_tail != -1:
            raise ValueError("no completion: the stratum needs P_{m-2} = -1")
        b_m = _exactify(free)
    inner = bs + (b_m,)
    b0 = continuant(inner[1:])
    b_top = continuant(inner[: m - 1])
    return ContinuantPoint(m=m, b=(b0,) + inner + (b_top,))


def tsystem_table(point: ContinuantPoint, ks: Iterable[int]) -> dict:
    """Table {(i, k): T_i(k)} for 0 <= i <= m, k in ks, i + k even.

    T_i(k) is the continuant of the cyclic window of length i starting at
    index (k - i) / 2; the cyclic index convention (period m + 2) is what
    makes the table half-periodic.
    """
    out = {}
    for k in ks:
        for i in range(point.m + 1):
            if (i + k) % 2:
                continue
            out[(i, k)] = continuant(point.window((k - i) // 2, i))
    return out


@dataclass(frozen=True)
class GaussianRational2x2:
    """A 2x2 matrix over Q(i), each entry a (real, imag) pair of Fractions."""

    entries: tuple  # ((z11, z12), (z21, z22))

    @staticmethod
    def _entry(v) -> tuple:
        if isinstance(v, tuple):
            return (Fraction(v[0]), Fraction(v[1]))
        return (Fraction(v), Fraction(0))

    @classmethod
    def from_rows(cls, rows) -> "GaussianRational2x2":
        return cls(tuple(tuple(cls._entry(v) for v in row) for row in rows))

    @classmethod
    def identity(cls) -> "GaussianRational2x2":
        return cls.from_rows(((1, 0), (0, 1)))

    @classmethod
    def j_factor(cls) -> "GaussianRational2x2":
        """The corner matrix J = [[i, 0], [1, i]]."""
        return cls.from_rows((((0, 1), 0), (1, (0, 1))))

    @classmethod
    def shear(cls) -> "GaussianRational2x2":
        """S = [[1, 2i], [0, 1]], conjugating B J into B J^{-1}."""
        return cls.from_rows(((1, (0, 2)), (0, 1)))

    @classmethod
    def balanced_factor(cls, b) -> "GaussianRational2x2":
        """B = [[1, b], [0, -1]] for one hypersurface coordinate b."""
        return cls.from_rows(((1, _exactify(b)), (0, -1)))

    def __matmul__(self, other: "GaussianRational2x2") -> "GaussianRational2x2":
        a, b = self.entries, other.entries

        def mul(u, v):
            return (u[0] * v[0] - u[1] * v[1], u[0] * v[1] + u[1] * v[0])

        def add(u, v):
            return (u[0] + v[0], u[1] + v[1])

        rows = tuple(
            tuple(add(mul(a[i][0], b[0][j]), mul(a[i][1], b[1][j])) for j in (0, 1))
            for i in (0, 1)
        )
        return GaussianRational2x2(rows)

    def __neg__(self) -> "GaussianRational2x2":
        return GaussianRational2x2(
            tuple(tuple((-re, -im) for (re, im) in row) for row in self.entries)
        )

    def det(self) -> tuple:
        ((z11, z12), (z21, z22)) = self.entries
        ad = (z11[0] * z22[0] - z11[1] * z22[1], z11[0] * z22[1] + z11[1] * z22[0])
        bc = (z12[0] * z21[0] - z12[1] * z21[1], z12[0] * z21[1] + z12[1] * z21[0])
        return (ad[0] - bc[0], ad[1] - bc[1])

    def entry(self, i: int, j: int) -> tuple:
        return self.entries[i][j]


def balanced_product(point: ContinuantPoint) -> GaussianRational2x2:
    """Ordered product (B_0 J)(B_1 J)...(B_{m+1} J) over the Gaussian rationals.

    For every point on the hypersurface this equals minus the identity: the
    total monodromy along a loop just off the real axis is trivial.
    """
    out = GaussianRational2x2.identity()
    jf = GaussianRational2x2.j_factor()
    for b in point.b:
        out = out @ GaussianRational2x2.balanced_factor(b) @ jf
    return out


def continuant_corner(bs: Sequence, b0=Fraction(7, 3)):
    """P_r read off as the lower-left entry of -(B_0 J)(B_1 J)...(B_r J).

    The entry is independent of b_0 (any value works; a nonzero default makes
    that independence visible in tests).  Matrix route, used as the oracle
    for the recursion.
    """
    out = GaussianRational2x2.balanced_factor(b0) @ GaussianRational2x2.j_factor()
    jf = GaussianRational2x2.j_factor()
    for b in bs:
        out = out @ GaussianRational2x2.balanced_factor(b) @ jf
    re, im = (-out).entry(1, 0)
    if im != 0:
        raise AssertionError("continuant corner entry must be real")
    return re


def chebyshev_equal_b(m: int) -> list:
    """All equal-coordinate hypersurface values b = 2 cos(pi k / (m+2)), k odd.

    Floating point; there are floor((m+2)/2) of them.  Each satisfies
    P_m(b, ..., b) = 1 and P_{m+1}(b, ..., b) = 0, since P_r at 2 cos(x) is
    the second-kind Chebyshev value sin((r+1)x)/sin(x).
    """
    if m < 1:
        raise ValueError("level m must be >= 1")
    return [2.0 * math.cos(math.pi * k / (m + 2)) for k in range(1, m + 2, 2)]
