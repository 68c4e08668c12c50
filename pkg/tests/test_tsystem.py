"""Continuants, hypersurface completion, T-system tables, balanced products."""

import math
import random
from fractions import Fraction

import pytest

from heckelab.errors import StratumBoundary
from heckelab.tsystem import (
    ContinuantPoint,
    GaussianRational2x2,
    balanced_product,
    chebyshev_equal_b,
    continuant,
    continuant_corner,
    continuant_euler,
    tsystem_table,
    xm_complete,
)

MINUS_ID = GaussianRational2x2.from_rows(((-1, 0), (0, -1)))


def fib(n):
    a, b = 0, 1
    for _ in range(n):
        a, b = b, a + b
    return a


def rand_point(rng, m):
    while True:
        try:
            bs = [Fraction(rng.randint(-6, 6), rng.randint(1, 3)) for _ in range(m - 1)]
            return xm_complete(m, bs)
        except (StratumBoundary, ZeroDivisionError):
            continue


# ---------------------------------------------------------------------------
# continuants


def test_continuant_closed_forms():
    assert continuant(()) == 1
    assert continuant((5,)) == 5
    b1, b2, b3 = Fraction(3), Fraction(5, 2), Fraction(-7, 3)
    assert continuant((b1, b2)) == b1 * b2 - 1
    assert continuant((b1, b2, b3)) == b1 * b2 * b3 - b1 - b3


def test_continuant_euler_matches_recursion():
    rng = random.Random(4)
    for r in range(0, 11):
        bs = [Fraction(rng.randint(-9, 9), rng.randint(1, 4)) for _ in range(r)]
        val, terms = continuant_euler(bs)
        assert val == continuant(bs)
        assert terms == fib(r + 1)


def test_continuant_euler_small():
    val, terms = continuant_euler((7,))
    assert (val, terms) == (7, 1)
    _, terms4 = continuant_euler((1, 1, 1, 1))
    assert terms4 == 5
    with pytest.raises(ValueError):
        continuant_euler((1,) * 13)


def test_continuant_corner_route():
    # lower-left entry of minus the matrix product, independent of b_0
    rng = random.Random(9)
    for r in range(0, 8):
        bs = [Fraction(rng.randint(-9, 9), rng.randint(1, 4)) for _ in range(r)]
        assert continuant_corner(bs) == continuant(bs)
        assert continuant_corner(bs, b0=Fraction(-11, 5)) == continuant(bs)


# ---------------------------------------------------------------------------
# hypersurface completion


def test_xm_complete_level_one_and_two():
    assert xm_complete(1, ()).b == (1, 1, 1)
    assert xm_complete(2, (1,)).b == (2, 1, 2, 1)
    assert xm_complete(2, (4,)).b == (Fraction(1, 2), 4, Fraction(1, 2), 4)


def test_xm_complete_level_three_closed_form():
    b, c = Fraction(3), Fraction(2)
    p = xm_complete(3, (b, c))
    assert p.b == ((1 + c) / (b * c - 1), b, c, (1 + b) / (b * c - 1), b * c - 1)


def test_xm_complete_stratum():
    # the inner product b*c = 1 sits on the deeper stratum; completion needs
    # a free coordinate and forces b = c = -1
    with pytest.raises(StratumBoundary):
        xm_complete(3, (-1, -1))
    d = Fraction(9, 4)
    p = xm_complete(3, (-1, -1), free=d)
    assert p.b == (-d - 1, -1, -1, d, 0)
    with pytest.raises(ValueError):
        xm_complete(3, (2, Fraction(1, 2)), free=0)  # on the stratum, no completion
    with pytest.raises(ValueError):
        xm_complete(3, (3, 2), free=1)  # generic point takes no free coordinate


def test_point_invariants_and_cyclic_windows():
    # every cyclic window of length m evaluates to 1 and of length m+1 to 0
    rng = random.Random(23)
    for m in range(2, 9):
        for _ in range(12):
            pt = rand_point(rng, m)
            for r in range(m + 2):
                assert continuant(pt.window(r, m)) == 1
                assert continuant(pt.window(r, m + 1)) == 0


def test_point_validation_rejects_off_surface_tuples():
    with pytest.raises(ValueError):
        ContinuantPoint(m=3, b=(2, 3, 2, 1, 1))
    with pytest.raises(ValueError):
        ContinuantPoint(m=2, b=(2, 1, 2))  # wrong length


def test_point_numeric_mode():
    b = chebyshev_equal_b(3)[0]
    pt = ContinuantPoint(m=3, b=(b,) * 5)  # float entries, tolerance checks
    assert pt.window(0, 2) == (b, b)


# ---------------------------------------------------------------------------
# T-system tables


@pytest.mark.parametrize("m", [1, 2, 3, 4, 6])
def test_tsystem_table_properties(m):
    rng = random.Random(100 + m)
    pt = rand_point(rng, m)
    ks = range(-2 * (m + 2), 2 * (m + 2) + 3)
    T = tsystem_table(pt, ks)

    for (i, k), v in T.items():
        assert (i + k) % 2 == 0
        if i in (0, m):
            assert v == 1

    # bilinear relation, anchored on the odd sublattice between table cells
    checked = 0
    for i in range(1, m):
        for k in ks:
            if (i + k) % 2 == 0:
                continue
            cells = [(i, k - 1), (i, k + 1), (i - 1, k), (i + 1, k)]
            if all(c in T for c in cells):
                assert T[(i, k - 1)] * T[(i, k + 1)] == T[(i - 1, k)] * T[(i + 1, k)] + 1
                checked += 1
    assert checked > 0 or m == 1

    # half-periodicity over two periods
    for (i, k), v in T.items():
        if (m - i, k + m + 2) in T:
            assert T[(m - i, k + m + 2)] == v

    # the b-tuple reads back off the first row
    for i in range(m + 2):
        assert T[(1, 2 * i + 1)] == pt.b[i % (m + 2)]


def test_tsystem_level_one_is_constant():
    T = tsystem_table(ContinuantPoint(m=1, b=(1, 1, 1)), range(-6, 7))
    assert set(T.values()) == {1}


def test_tsystem_level_two_alternates():
    # level 2 completions live on the hyperbola b1 * b2 = 2, and the middle
    # row alternates between the two coordinates
    pt = xm_complete(2, (Fraction(5),))
    T = tsystem_table(pt, range(0, 9))
    assert T[(1, 1)] == Fraction(2, 5)
    assert T[(1, 3)] == 5
    assert T[(1, 5)] == Fraction(2, 5)
    assert T[(1, 1)] * T[(1, 3)] == 2


# ---------------------------------------------------------------------------
# balanced matrix products


def test_balanced_product_is_minus_identity():
    assert balanced_product(ContinuantPoint(m=1, b=(1, 1, 1))) == MINUS_ID
    assert balanced_product(ContinuantPoint(m=2, b=(2, 1, 2, 1))) == MINUS_ID
    rng = random.Random(31)
    for m in (2, 3, 4, 5, 7):
        for _ in range(8):
            assert balanced_product(rand_point(rng, m)) == MINUS_ID


def test_balanced_product_negative_control():
    bad = GaussianRational2x2.identity()
    jf = GaussianRational2x2.j_factor()
    for b in (2, 3, 2, 1, 1):
        bad = bad @ GaussianRational2x2.balanced_factor(b) @ jf
    assert bad != MINUS_ID


def test_shear_conjugation_swaps_corner_orientation():
    # S (B J) S^{-1} = B J^{-1}, so the second matrix equation follows from
    # the first on the balanced locus
    S = GaussianRational2x2.shear()
    Sinv = GaussianRational2x2.from_rows(((1, (0, -2)), (0, 1)))
    jf = GaussianRational2x2.j_factor()
    j_inv = GaussianRational2x2.from_rows((((0, -1), 0), (1, (0, -1))))
    rng = random.Random(57)
    pt = rand_point(rng, 4)
    for b in pt.b:
        B = GaussianRational2x2.balanced_factor(b)
        assert S @ (B @ jf) @ Sinv == B @ j_inv
    assert S @ balanced_product(pt) @ Sinv == MINUS_ID


def test_gaussian_matrix_determinants():
    assert GaussianRational2x2.j_factor().det() == (Fraction(-1), Fraction(0))
    assert GaussianRational2x2.balanced_factor(5).det() == (Fraction(-1), Fraction(0))
    assert GaussianRational2x2.shear().det() == (Fraction(1), Fraction(0))


# ---------------------------------------------------------------------------
# equal-coordinate solutions


def test_chebyshev_equal_b_level_two():
    vals = chebyshev_equal_b(2)
    assert len(vals) == 2
    assert abs(vals[0] - math.sqrt(2)) < 1e-15
    assert abs(vals[1] + math.sqrt(2)) < 1e-15


def test_chebyshev_equal_b_satisfies_continuant_relations():
    for m in range(1, 9):
        vals = chebyshev_equal_b(m)
        assert len(vals) == (m + 2) // 2
        for b in vals:
            assert abs(continuant([b] * (m + 1))) < 1e-12
            assert abs(continuant([b] * m) - 1.0) < 1e-12
            assert abs(continuant([b] * (m - 1)) - b) < 1e-12


def test_chebyshev_leading_value_is_largest():
    # k = 1 gives 2 cos(pi/(m+2)), the largest value; it heads the list
    for m in (2, 5, 8):
        vals = chebyshev_equal_b(m)
        assert vals[0] == max(vals)
        assert abs(vals[0] - 2 * math.cos(math.pi / (m + 2))) < 1e-15
