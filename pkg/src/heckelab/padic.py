"""First-batch Hecke matrices over Q_p and mollified kernel evaluation.

The mollified Hecke operator averages the point kernels over a disc of
radius q^-m around a center x0.  Its Schwartz kernel reduces to a single
square-root character integral J_m(c), which has a closed form in every
case; `j_integral` and `mollified_kernel` evaluate these exactly.

Applying the operator at depth m = 1 to the indicator functions of
radius-1/q discs produces a (q + 5)-dimensional invariant space: the
q + 1 disc indicators on the projective line plus one logarithmic
companion function per parabolic point.  `first_batch_matrix` assembles
the exact integer matrix of q*H_z on that space, `batch_spectrum` gives
its eigenvalues and Perron-Frobenius data, and `cuspidal_restriction`
exhibits the q-dimensional cuspidal block, which matches the Hecke
matrix over the residue field up to sign.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import sympy

from .errors import PrecisionExhausted
from .finitefield import Surd, _as_q, _quadratic_roots, eigenvalues_exact, n_count
from .localfield import INF, PadicNumber, padic_field, theta

__all__ = [
    "FirstBatchMatrix",
    "MollifiedParams",
    "BatchSpectrum",
    "j_integral",
    "mollified_kernel",
    "hecke_indicator_coeffs",
    "first_batch_matrix",
    "batch_spectrum",
    "cuspidal_restriction",
    "v0_block",
    "perron_frobenius_pair",
]


def _branch_valuation(q: int, x) -> float:
    """Valuation used to pick a closed-form branch; exact zeros give +inf.

    A finite-precision zero cannot be told apart from q^-N for N beyond
    the working precision, so it refuses rather than guess a branch.
    """
    if isinstance(x, PadicNumber):
        if x.is_zero:
            raise PrecisionExhausted(
                "branch needs to separate an exact zero from a small nonzero value; "
                "pass exact rational inputs"
            )
        return x.val
    x = Fraction(x)
    if x == 0:
        return INF
    v = 0
    num, den = x.numerator, x.denominator
    while num % q == 0:
        num //= q
        v += 1
    while den % q == 0:
        den //= q
        v -= 1
    return v


def _theta(q: int, x) -> int:
    return theta(padic_field(q, 32), x)


def j_integral(q, m: int, c) -> float:
    """The integral of theta(x^2 + c)/sqrt(||x^2 + c||) over ||x - 1|| <= q^-m.

    Closed form by cases.  For m > 0 the disc sits inside the unit
    sphere: if ||1 + c|| = q^-r > q^-m the integrand is constant and the
    value is q^-m * theta(1 + c)/sqrt(||1 + c||); otherwise the value is
    q^-m/2 / 2 for even m and q^-(m+1)/2 / 2 for odd m, independent of c.
    For m <= 0 the domain is the disc ||x|| <= q^-m and rescaling gives
    J_0(c * pi^-2m), where J_0(c) is theta(c)/sqrt(||c||) for ||c|| > 1
    and (1 - 1/q)(1 - log_q ||c||)/2 otherwise.

    c = 0 with m <= 0 makes the integral diverge; the function returns
    math.inf there.  Haar measure is normalized so the unit disc has
    volume 1.
    """
    qq = _as_q(q)
    m = int(m)
    if m > 0:
        r = _branch_valuation(qq, 1 + c)
        if r < m:
            th = _theta(qq, 1 + c)
            return th * float(qq) ** (r / 2.0 - m)
        m0 = m if m % 2 == 0 else m + 1
        return 0.5 * float(qq) ** (-m0 / 2.0)
    vc = _branch_valuation(qq, c)
    if vc == INF:
        return math.inf
    v = vc - 2 * m  # valuation of c * pi^-2m; theta is blind to even shifts
    if v < 0:
        return _theta(qq, c) * float(qq) ** (v / 2.0)
    return 0.5 * (1.0 - 1.0 / qq) * (v + 1)


@dataclass(frozen=True)
class MollifiedParams:
    """Averaging window of a mollified Hecke operator: center x0, depth m.

    The first batch uses m >= 1.  Finite rank of the averaged operator
    additionally needs the residue of x0 to avoid 0, 1, t; check with
    `residue_ok` when that matters.
    """

    x0: object
    m: int

    def __post_init__(self):
        if int(self.m) < 1:
            raise ValueError("averaging depth m must be >= 1")

    def residue_ok(self, q, t) -> bool:
        qq = _as_q(q)
        v = _branch_valuation(qq, self.x0)
        if v != 0:
            return v > 0 and int(t) % qq not in (0,)  # x0 = 0 mod pi iff v > 0
        if isinstance(self.x0, PadicNumber):
            res = self.x0.residue()
        else:
            x = Fraction(self.x0)
            res = x.numerator * pow(x.denominator, -1, qq) % qq
        return res not in (1 % qq, int(t) % qq) and res != 0


def _is_exact_zero(q: int, x) -> bool:
    """True when x is exactly zero; finite-precision zeros refuse."""
    if isinstance(x, PadicNumber):
        if x.is_zero:
            raise PrecisionExhausted(
                "cannot certify an exact zero at working precision; pass exact rationals"
            )
        return False
    return Fraction(x) == 0


def mollified_kernel(q, t, x0, m: int, y, z) -> float:
    """Kernel of the depth-m mollified Hecke operator centered at x0, at (y, z).

    Averages 2*theta(f_t(x, y, z))/sqrt(||f_t||) over ||x - x0|| <= q^-m.
    Generically (y != z and P != 0, where P is the half-derivative of f_t
    in x times (y - z)^2) this is 2*J_{m-k}(-D/(4P^2))/||y - z|| with
    k = 2v(y - z) - v(P); the remaining branches are evaluated directly:

    * y = z at a parabolic point: f_t is constant in x, value
      2 q^-m / sqrt(||f_t||).
    * y = z elsewhere: f_t is linear in x; constant branch when the root
      lies outside the averaging disc, otherwise a pure parity mass
      q^(s - m0)/2 with q^-s = ||P|| and m0 the parity-aligned depth.
    * P = 0, D != 0: a centered quadratic, 2*J_0(-D/(4(y-z)^4) pi^-2m)/||y-z||.
    * P = 0, D = 0: the kernel diverges logarithmically (returns inf);
      as m grows these points shrink to the eight exceptional pairs.

    Arguments may be ints, Fractions, or PadicNumbers; finite-precision
    inputs raise PrecisionExhausted when a branch hinges on an exact zero.
    """
    qq = _as_q(q)
    m = int(m)
    dy = y - z
    if _is_exact_zero(qq, dy):
        p_half = -2 * y * (y - 1) * (y - t)
        if _is_exact_zero(qq, p_half):
            f0 = (t - y * y) ** 2  # y at a parabolic point: constant kernel
            return 2.0 * float(qq) ** (_branch_valuation(qq, f0) / 2.0 - m)
        f0 = 2 * p_half * x0 + (t - y * y) ** 2
        s = _branch_valuation(qq, p_half)
        if not _is_exact_zero(qq, f0) and _branch_valuation(qq, f0) < m + s:
            th = _theta(qq, f0)
            return 2.0 * th * float(qq) ** (_branch_valuation(qq, f0) / 2.0 - m)
        m0 = m if (m - s) % 2 == 0 else m + 1
        return float(qq) ** ((s - m0) / 2.0)
    p_val = x0 * dy**2 + 2 * (1 + t) * y * z - (y + z) * (t + y * z)
    d_val = 16 * y * (y - 1) * (y - t) * z * (z - 1) * (z - t)
    ny = float(qq) ** (-_branch_valuation(qq, dy))
    if _is_exact_zero(qq, p_val):
        if _is_exact_zero(qq, d_val):
            return math.inf
        shifted = (-d_val * Fraction(qq) ** (-2 * m)) / (4 * dy**4)
        return 2.0 * j_integral(qq, 0, shifted) / ny
    k = _branch_valuation(qq, p_val) - 2 * _branch_valuation(qq, dy)
    num = -d_val if not isinstance(d_val, int) else Fraction(-d_val)
    c = num / (4 * p_val * p_val)  # keep exact: int / int would go float
    return 2.0 * j_integral(qq, m - int(k), c) / ny


def _validate_tz(qq: int, t, z) -> tuple:
    t0 = int(t) % qq
    z0 = int(z) % qq
    if t0 in (0, 1):
        raise ValueError("t must avoid 0 and 1 in F_q")
    if z0 in (0, 1, t0):
        raise ValueError("z must avoid 0, 1, t in F_q")
    return t0, z0


def _matched_points(qq: int, t0: int, z0: int) -> dict:
    """The x-residue paired with each parabolic point r by the kernel of H_z.

    These are the eight exceptional pairs (r, x) at which the disc
    indicator coefficients degenerate: the fiber polynomial vanishes
    identically on the pair of discs.
    """
    return {
        0: t0 * pow(z0, -1, qq) % qq,
        1: (z0 - t0) * pow(z0 - 1, -1, qq) % qq,
        t0: t0 * (z0 - 1) * pow(z0 - t0, -1, qq) % qq,
        INF: z0,
    }


def hecke_indicator_coeffs(q, t, z, x) -> tuple:
    """Expansion coefficients of H_z applied to a radius-1/q disc indicator.

    H_z 1_x decomposes over the disc indicators 1_j and the logarithmic
    companion functions at the parabolic points.  Returns (a_row, b_row):
    a_row has one Fraction per point of P^1(F_q) in the order
    (0, 1, ..., q-1, inf); b_row has one int per parabolic point in the
    order (0, 1, t, inf), scaled so the value is q at the matched point
    and 0 elsewhere.

    For x and j both away from the parabolic points, a_j counts square
    roots of the fiber polynomial: 2/q on nonzero squares, 1/q at zeros,
    0 otherwise.  The same rule covers x at a parabolic point.  For j at
    a parabolic point the coefficient is 2/q except at the matched x,
    where the whole contribution moves into the companion term b.
    """
    qq = _as_q(q)
    t0, z0 = _validate_tz(qq, t, z)
    marked = (0, 1, t0, INF)
    match = _matched_points(qq, t0, z0)
    if x != INF:
        x = int(x) % qq
    points = list(range(qq)) + [INF]
    a = []
    for j in points:
        if x not in marked and j in marked:
            a.append(Fraction(0) if x == match[j] else Fraction(2, qq))
        else:
            a.append(Fraction(n_count(qq, t0, z0, x, math.inf if j == INF else j), qq))
    b = tuple(qq if (x not in marked and x == match[r]) else 0 for r in marked)
    return tuple(a), b


@dataclass(frozen=True)
class FirstBatchMatrix:
    """Exact matrix of q*H_z on the first invariant batch of functions.

    Basis order: disc indicators 1_x for x in (0, ..., q-1, inf), then
    companion functions psi_r for r in (0, 1, t, inf).  Entries are the
    integers 0, 1, 2, or q; columns hold images, so entry (i, j) is the
    i-th coordinate of q*H_z applied to the j-th basis function.  The
    matrix is symmetric after rescaling to the orthonormal basis
    (q^(1/2) 1_x, q psi_r).
    """

    q: int
    t: int
    z: int
    entries: tuple

    def __post_init__(self):
        n = self.q + 5
        if len(self.entries) != n or any(len(r) != n for r in self.entries):
            raise ValueError("entries must be (q+5) x (q+5)")
        allowed = {0, 1, 2, self.q}
        if any(v not in allowed for row in self.entries for v in row):
            raise ValueError("entries must lie in {0, 1, 2, q}")
        _validate_tz(self.q, self.t, self.z)

    @property
    def t0(self) -> int:
        return self.t % self.q

    @property
    def z0(self) -> int:
        return self.z % self.q

    @property
    def marked(self) -> tuple:
        return (0, 1, self.t0, INF)

    def labels(self) -> list:
        pts = list(range(self.q)) + ["inf"]
        return [f"1_{x}" for x in pts] + [f"psi_{r}" for r in (0, 1, self.t0, "inf")]


def _assemble(qq: int, t, z) -> tuple:
    t0, z0 = _validate_tz(qq, t, z)
    marked = (0, 1, t0, INF)
    match = _matched_points(qq, t0, z0)
    points = list(range(qq)) + [INF]
    n = qq + 5
    mat = [[0] * n for _ in range(n)]
    psi_index = {r: qq + 1 + i for i, r in enumerate(marked)}

    def ind_index(j):
        return qq if j == INF else j

    for col, x in enumerate(points):
        a_row, b_row = hecke_indicator_coeffs(qq, t0, z0, x)
        for jpos, j in enumerate(points):
            v = qq * a_row[jpos]
            if j in marked:
                v += Fraction(b_row[marked.index(j)], qq)
            assert v.denominator == 1
            mat[ind_index(j)][col] = int(v)
        for i, r in enumerate(marked):
            mat[psi_index[r]][col] = b_row[i]
    for r in marked:
        mat[ind_index(match[r])][psi_index[r]] = 1

    # symmetric in the orthonormal basis: weights q for 1_x, q^2 for psi_r
    w = [qq] * (qq + 1) + [qq * qq] * 4
    for i in range(n):
        for j in range(i + 1, n):
            assert mat[i][j] * w[j] == mat[j][i] * w[i]
    return tuple(tuple(row) for row in mat)


def first_batch_matrix(q, t, z) -> FirstBatchMatrix:
    """Assemble the exact (q+5) x (q+5) matrix of q*H_z on the first batch.

    t and z are integer lifts; the matrix depends only on their residues,
    which is asserted by rebuilding with a second lift.
    """
    qq = _as_q(q)
    entries = _assemble(qq, t, z)
    assert entries == _assemble(qq, int(t) + qq, int(z) + qq)
    return FirstBatchMatrix(q=qq, t=int(t) % qq, z=int(z) % qq, entries=entries)


def perron_frobenius_pair(q) -> tuple:
    """The two eigenvalues of H_z on the symmetric part of the batch.

    Roots of q*lam^2 - (q+1)*lam - 8 = 0, returned as exact values with
    lam_plus > 0 > lam_minus.  The matrix of `first_batch_matrix` is
    q*H_z, so its corresponding eigenvalues are q times these.
    """
    qq = _as_q(q)
    roots = _quadratic_roots(qq, -(qq + 1), -8)
    lo, hi = sorted(roots, key=lambda r: (r if isinstance(r, Fraction) else r.value().real))
    return hi, lo


def _as_sympy(value):
    if isinstance(value, Surd):
        return (sympy.Integer(value.a) + value.coef * sympy.sqrt(value.d)) / value.b
    return sympy.Rational(Fraction(value))


def _scale_entry(value, factor: int):
    if isinstance(value, Surd):
        scaled = Fraction(value.a * factor, value.b)
        coef = Fraction(value.coef * factor, value.b)
        assert scaled.denominator == 1 and coef.denominator == 1
        return Surd(int(scaled), int(coef), value.d, 1)
    out = Fraction(value) * factor
    assert out.denominator == 1
    return int(out)


@dataclass(frozen=True)
class BatchSpectrum:
    """Exact spectrum of a first-batch matrix with Perron-Frobenius data."""

    eigenvalues: tuple
    pf_value: object
    pf_vector: tuple


def batch_spectrum(M: FirstBatchMatrix) -> BatchSpectrum:
    """Exact eigenvalues of the batch matrix plus its top eigenpair.

    The top eigenvalue is the larger root of mu^2 - (q+1)mu - 8q = 0 (the
    Perron-Frobenius value of q*H_z); its eigenvector is lam_plus on the
    generic indicator coordinates, lam_plus + 1 at the parabolic ones and
    1 on the companion coordinates, returned scaled to integral entries.
    The eigenpair is verified against the matrix symbolically.
    """
    qq = M.q
    eigs = eigenvalues_exact(M.entries)
    top = _quadratic_roots(1, -(qq + 1), -8 * qq)[0]  # larger root of mu^2-(q+1)mu-8q
    lam_plus, _ = perron_frobenius_pair(qq)
    one = Fraction(1)
    marked_pos = {0, 1, M.t0, qq}  # positions of 1_0, 1_1, 1_t, 1_inf
    raw = []
    for i in range(qq + 1):
        if isinstance(lam_plus, Fraction):
            raw.append(lam_plus + (1 if i in marked_pos else 0))
        else:
            bump = lam_plus.b if i in marked_pos else 0
            raw.append(Surd(lam_plus.a + bump, lam_plus.coef, lam_plus.d, lam_plus.b))
    raw.extend([one, one, one, one])
    dens = [v.b if isinstance(v, Surd) else Fraction(v).denominator for v in raw]
    factor = math.lcm(*dens)
    vector = tuple(_scale_entry(v, factor) for v in raw)

    mat = sympy.Matrix([[sympy.Integer(v) for v in row] for row in M.entries])
    vec = sympy.Matrix([[_as_sympy(v)] for v in vector])
    residue = sympy.simplify(mat * vec - _as_sympy(top) * vec)
    assert residue == sympy.zeros(qq + 5, 1)
    return BatchSpectrum(eigenvalues=tuple(eigs), pf_value=top, pf_vector=vector)


def _image(M: FirstBatchMatrix, vec: list) -> list:
    return [sum(row[j] * vec[j] for j in range(len(vec))) for row in M.entries]


def cuspidal_restriction(M: FirstBatchMatrix) -> tuple:
    """Negated restriction of q*H_z to the cuspidal complement, as q x q rows.

    The complement of the symmetric five-dimensional block is spanned by
    v_k = 1_k - 1_inf + q psi_inf, with an extra -q psi_k term when k is
    a parabolic point.  The result equals the residue-field Hecke matrix
    tz_matrix(q, t, z) exactly; entry (x, y) is the v_x-coordinate of
    -q*H_z v_y.
    """
    qq = M.q
    t0 = M.t0
    n = qq + 5
    psi = {r: qq + 1 + i for i, r in enumerate(M.marked)}
    cols = []
    for k in range(qq):
        vec = [0] * n
        vec[k] += 1
        vec[qq] -= 1
        vec[psi[INF]] += qq
        if k in (0, 1, t0):
            vec[psi[k]] -= qq
        w = _image(M, vec)
        c = w[:qq]
        total = sum(c)
        ok = w[qq] == -total and w[psi[INF]] == qq * total
        ok = ok and all(w[psi[r]] == -qq * c[r] for r in (0, 1, t0))
        if not ok:
            raise RuntimeError("cuspidal block is not invariant; matrix is corrupt")
        cols.append(c)
    return tuple(tuple(-cols[y][x] for y in range(qq)) for x in range(qq))


def v0_block(M: FirstBatchMatrix) -> tuple:
    """Matrix of q*H_z on the symmetric block, in the basis (sum, e_0, e_1, e_t, e_inf).

    Here sum is the total of all disc indicators and e_r pairs the
    indicator at a parabolic point with its companion, e_r = 1_r + psi_r.
    The result depends only on q: the first column is (q+1, q, q, q, q)
    and every e_r maps to twice the sum vector.
    """
    qq = M.q
    t0 = M.t0
    n = qq + 5
    psi = {r: qq + 1 + i for i, r in enumerate(M.marked)}
    basis = []
    total = [0] * n
    for i in range(qq + 1):
        total[i] = 1
    basis.append(total)
    for r in M.marked:
        vec = [0] * n
        vec[qq if r == INF else r] += 1
        vec[psi[r]] += 1
        basis.append(vec)
    unmarked = [j for j in range(qq) if j not in (0, 1, t0)]
    cols = []
    for vec in basis:
        w = _image(M, vec)
        beta = [w[psi[r]] for r in M.marked]
        alpha = w[unmarked[0]]
        ok = all(w[j] == alpha for j in unmarked)
        for i, r in enumerate(M.marked):
            ok = ok and w[qq if r == INF else r] == alpha + beta[i]
        if not ok:
            raise RuntimeError("symmetric block is not invariant; matrix is corrupt")
        cols.append([alpha] + beta)
    return tuple(tuple(cols[j][i] for j in range(5)) for i in range(5))
