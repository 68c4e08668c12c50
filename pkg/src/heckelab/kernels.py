"""Chart-level algebra for rank-two parabolic Hecke modifications on the line.

This module collects the machinery shared by the finite-field, p-adic, and
archimedean layers: the symmetric quartic kernel polynomial and its P/D
decomposition, pointwise modification maps, the involutions attached to
parabolic points, elliptic measure densities, and the interpolation formulas
behind simultaneous multi-point modifications.

Algebraic routines accept ints, Fractions, floats, complex numbers, or p-adic
elements and stay exact whenever the inputs are exact.  Conventions: the
finite marked points are (t_0, ..., t_m) with an implicit further marked
point at infinity; the four-point setup is (0, t, 1, infinity).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as _dc_field
from fractions import Fraction

import numpy as np
from scipy.integrate import quad
from scipy.special import ellipk

from .errors import (
    DegenerateNode,
    ExceptionalLocus,
    IntegrableSingularity,
    InterpolationDegenerate,
    OnSingularLocus,
    PoleAtParabolicLine,
    TraceDivergent,
)
from .localfield import (
    FieldDescriptor,
    PadicNumber,
    ResidueDisc,
    _shell_centers,
    as_element,
    haar_scale,
    is_square,
    log_norm_sign,
    norm,
    padic_integrate,
    real_field,
    theta,
)

_QUAD_LIMIT = 200


def _is_inf(v) -> bool:
    return isinstance(v, float) and math.isinf(v)


@dataclass(frozen=True)
class ParabolicConfig:
    """Finite marked points (t_0, ..., t_m); infinity is an implicit extra one.

    ``field`` fixes the local field used for norms in weight computations.
    """

    t: tuple
    field: FieldDescriptor = _dc_field(default_factory=real_field)

    def __post_init__(self):
        object.__setattr__(self, "t", tuple(self.t))
        if len(self.t) < 2:
            raise ValueError("need at least two finite marked points")
        for i in range(len(self.t)):
            for j in range(i + 1, len(self.t)):
                if self.t[i] == self.t[j]:
                    raise ValueError("marked points must be distinct")

    @property
    def m(self) -> int:
        return len(self.t) - 1

    @classmethod
    def four_point(cls, t, field: FieldDescriptor | None = None) -> "ParabolicConfig":
        """The configuration (0, t, 1, infinity)."""
        return cls((0, t, 1), field if field is not None else real_field())


@dataclass(frozen=True)
class BunPoint:
    """A bundle chart point: parabolic directions y_i over the marked points.

    ``degree`` distinguishes the two standard realizations (trivial bundle
    versus its elementary modification); the identification between them is
    the identity on the y-coordinates.
    """

    y: tuple
    degree: int = 0

    def __post_init__(self):
        object.__setattr__(self, "y", tuple(self.y))
        if self.degree not in (0, 1):
            raise ValueError("degree must be 0 or 1")


def kontsevich_f(t, x, y, z):
    """The symmetric quartic kernel polynomial f_t(x, y, z).

    Fully symmetric in (x, y, z); its vanishing locus is where the pointwise
    Hecke kernel becomes singular.  Equal to
    (xy + xz + yz - t)^2 + 4(1 + t - x - y - z)xyz.
    """
    return (t + x * y - z * x - z * y) ** 2 - 4 * (z - t) * (z - 1) * x * y


def kontsevich_f_p1(t, x, y, z):
    """f_t extended to projective arguments by iterated scaled limits.

    Each argument at infinity divides out the leading square: one infinite
    argument leaves the squared difference of the other two, two or more
    leave 1.
    """
    infs = [_is_inf(v) for v in (x, y, z)]
    k = sum(infs)
    if k == 0:
        return kontsevich_f(t, x, y, z)
    if k >= 2:
        return 1
    finite = [v for v, bad in zip((x, y, z), infs) if not bad]
    return (finite[0] - finite[1]) ** 2


def pd_identity(t, x, y, z):
    """Decompose 4 (y-z)^2 f_t = 4P^2 - D and return (P, D, residual).

    P is linear in x with leading coefficient (y-z)^2, and D collects the
    product of the two cubic discriminant factors in y and z, so that
    -D/(4P^2) is the discriminant-over-square ratio driving the kernel's
    local behaviour.  The residual 4 (y-z)^2 f_t - (4P^2 - D) is
    identically zero; it is returned so callers can assert exactness in
    their own arithmetic.
    """
    p_val = x * (y - z) ** 2 + 2 * (1 + t) * y * z - (y + z) * (t + y * z)
    d_val = 16 * y * (y - 1) * (y - t) * z * (z - 1) * (z - t)
    residual = 4 * (y - z) ** 2 * kontsevich_f(t, x, y, z) - (4 * p_val ** 2 - d_val)
    return p_val, d_val, residual


def correspondence_factor(i, t, y, z):
    """Graph factor h_i(y, z) of the four-point correspondence at t_i.

    h_i vanishes precisely on the graph of the involution S_i, and
    f_t(t_i, y, z) = h_i(y, z)^2 for i = 0, 1, 2 (marked points 0, t, 1).
    """
    if i == 0:
        return t - y * z
    if i == 1:
        return t * y + t * z - t - y * z
    if i == 2:
        return y + z - t - y * z
    raise ValueError("correspondence index must be 0, 1, or 2")


def kernel_4pt(F: FieldDescriptor, t, x, y, z) -> float:
    """Pointwise four-point Hecke kernel 2 theta(f_t) / sqrt(|f_t|).

    Raises OnSingularLocus when f_t(x, y, z) vanishes exactly.
    """
    tv, xv, yv, zv = (as_element(F, v) for v in (t, x, y, z))
    f = kontsevich_f(tv, xv, yv, zv)
    nf = norm(F, f)
    if f == 0 or nf == 0.0:
        raise OnSingularLocus("kernel evaluated on the singular locus f_t = 0")
    return 2.0 * theta(F, f) / math.sqrt(nf)


def hecke_mod_point(config: ParabolicConfig, x, yvec, s, translation_symmetric: bool = False):
    """Image parabolic directions under one Hecke modification at (x, s).

    In the default chart (which assumes t_0 = y_0 = 0) the input ``yvec``
    lists the directions over t_1, ..., t_m and

        z_i = (t_i s - x y_i) / (s - y_i).

    With ``translation_symmetric=True`` the chart keeps the affine symmetry,
    ``yvec`` pairs with all of t_0, ..., t_m, and z_i = (t_i - x)/(s - y_i).
    Raises PoleAtParabolicLine when s collides with one of the y_i.
    """
    ts = config.t
    yvec = tuple(yvec)
    if translation_symmetric:
        if len(yvec) != len(ts):
            raise ValueError("expected one direction per finite marked point")
        pairs = list(zip(ts, yvec))
    else:
        if ts[0] != 0:
            raise ValueError("default chart requires t_0 = 0")
        if len(yvec) != config.m:
            raise ValueError("expected directions over t_1, ..., t_m")
        pairs = list(zip(ts[1:], yvec))
    out = []
    for ti, yi in pairs:
        den = s - yi
        if den == 0:
            raise PoleAtParabolicLine("modification line passes through a parabolic direction")
        if translation_symmetric:
            out.append((ti - x) / den)
        else:
            out.append((ti * s - x * yi) / den)
    return tuple(out)


def involution_S(i: int, config: ParabolicConfig, yvec):
    """The birational involution S_i attached to the i-th marked point.

    For the four-point configuration (0, t, 1, infinity) a scalar ``yvec``
    is accepted and the Moebius formulas are used (i = 3 is the identity).
    For a vector ``yvec`` = (y_1, ..., y_m) over t_1, ..., t_m the general
    chart formulas apply; i = m + 1 is the identity, and for 1 <= i <= m the
    map is an involution only up to the common projective rescaling.
    Raises ExceptionalLocus where the map is undefined.
    """
    ts = config.t
    if not isinstance(yvec, (list, tuple)):
        y = yvec
        if len(ts) != 3 or ts[0] != 0 or ts[2] != 1:
            raise ValueError("scalar form requires the four-point configuration (0, t, 1)")
        t = ts[1]
        if i == 0:
            if y == 0:
                raise ExceptionalLocus("S_0 is undefined at y = 0")
            return t / y
        if i == 1:
            if y == t:
                raise ExceptionalLocus("S_1 is undefined at y = t")
            return t * (y - 1) / (y - t)
        if i == 2:
            if y == 1:
                raise ExceptionalLocus("S_2 is undefined at y = 1")
            return (y - t) / (y - 1)
        if i == 3:
            return y
        raise ValueError("four-point involution index must lie in 0..3")

    yvec = tuple(yvec)
    m = config.m
    if len(yvec) != m:
        raise ValueError("expected directions over t_1, ..., t_m")
    if ts[0] != 0:
        raise ValueError("vector form requires the chart with t_0 = 0")
    if i == 0:
        if any(yj == 0 for yj in yvec):
            raise ExceptionalLocus("S_0 is undefined where some y_j = 0")
        return tuple(tj / yj for tj, yj in zip(ts[1:], yvec))
    if 1 <= i <= m:
        ti, yi = ts[i], yvec[i - 1]
        out = []
        for j in range(1, m + 1):
            if j == i:
                out.append(ti)
                continue
            tj, yj = ts[j], yvec[j - 1]
            if yj == yi:
                raise ExceptionalLocus("S_i is undefined where y_j = y_i")
            out.append((yj * ti - yi * tj) / (yj - yi))
        return tuple(out)
    if i == m + 1:
        return yvec
    raise ValueError("involution index must lie in 0..m+1")


def nu_weight(F: FieldDescriptor, x, s) -> float:
    """Spectral density sqrt(|x(x-1) / (s(s-1)(s-x))|) of the one-point operator.

    Invariant under the Moebius involution s -> x(s-1)/(s-x) weighted by the
    norm of its derivative.  Raises IntegrableSingularity at s in {0, 1, x}.
    """
    xv = as_element(F, x)
    sv = as_element(F, s)
    den = sv * (sv - 1) * (sv - xv)
    if den == 0:
        raise IntegrableSingularity("density has an integrable singularity at s in {0, 1, x}")
    return math.sqrt(norm(F, xv * (xv - 1)) / norm(F, den))


# ---------------------------------------------------------------------------
# exact determinants and interpolation


def _det(rows):
    """Determinant by Gaussian elimination; exact for rational or p-adic entries."""
    m = [list(r) for r in rows]
    n = len(m)
    if n == 0:
        return 1
    exact = all(isinstance(e, (int, Fraction, PadicNumber)) for r in m for e in r)
    if exact:
        m = [[Fraction(e) if isinstance(e, int) else e for e in r] for r in m]
    sign = 1
    for k in range(n):
        if exact:
            piv = next((r for r in range(k, n) if m[r][k] != 0), None)
        else:
            piv = max(range(k, n), key=lambda r: abs(m[r][k]))
            if abs(m[piv][k]) == 0.0:
                piv = None
        if piv is None:
            return Fraction(0) if exact else 0.0
        if piv != k:
            m[k], m[piv] = m[piv], m[k]
            sign = -sign
        for r in range(k + 1, n):
            factor = m[r][k] / m[k][k]
            m[r] = [a - factor * b for a, b in zip(m[r], m[k])]
    det = m[0][0]
    for k in range(1, n):
        det = det * m[k][k]
    return -det if sign < 0 else det


def cauchy_jacobi(xs, ss, w):
    """Value at w of the degree-n rational function through (x_i, s_i), i = 0..2n.

    Computed as a ratio of two bordered-moment determinants of size 2n + 1.
    Exact over rational inputs.  Raises InterpolationDegenerate when the data
    does not determine a degree-n function (vanishing denominator
    determinant).
    """
    xs = list(xs)
    ss = list(ss)
    if len(xs) != len(ss) or len(xs) % 2 == 0:
        raise ValueError("need an odd number 2n+1 of interpolation points")
    n = (len(xs) - 1) // 2
    for xi, si in zip(xs, ss):
        if w == xi:
            return si
    rows_a, rows_b = [], []
    for xi, si in zip(xs, ss):
        tail = [si * xi ** (j - 1) for j in range(1, n + 1)]
        tail += [xi ** (j - n - 1) for j in range(n + 1, 2 * n + 1)]
        rows_a.append([si / (w - xi)] + tail)
        rows_b.append([1 / (w - xi)] + tail)
    det_b = _det(rows_b)
    if det_b == 0:
        raise InterpolationDegenerate("interpolation data is degenerate")
    return _det(rows_a) / det_b


def product_mod_point(xvec, svec, config: ParabolicConfig, yvec):
    """Simultaneous Hecke modification at points xvec along lines svec.

    ``yvec`` lists the directions over all finite marked points t_0, ..., t_m
    (translation-symmetric chart).  Returns (zvec, weight) where weight is
    the norm density |Delta(x) T(x, s)^{-2} / prod_i (p_1(t_i) - q_1(t_i) y_i)|
    of the symmetric integral formula.  Supports n = 1 and n = 2; for n = 1
    this reproduces the one-point modification map exactly.
    """
    xvec = tuple(xvec)
    svec = tuple(svec)
    if len(xvec) != len(svec):
        raise ValueError("need one modification line per point")
    n = len(xvec)
    ts = config.t
    yvec = tuple(yvec)
    if len(yvec) != len(ts):
        raise ValueError("expected one direction per finite marked point")
    F = config.field

    if n == 1:
        x, s = xvec[0], svec[0]
        dens = []
        for yi in yvec:
            d = s - yi
            if d == 0:
                raise PoleAtParabolicLine("modification line passes through a parabolic direction")
            dens.append(d)
        zvec = tuple((ti - x) / d for ti, d in zip(ts, dens))
        prod = dens[0]
        for d in dens[1:]:
            prod = prod * d
        return zvec, 1.0 / norm(F, prod)

    if n == 2:
        (x1, x2), (s1, s2) = xvec, svec
        if s1 == s2 or x1 == x2:
            raise InterpolationDegenerate("coincident interpolation data for the pair")
        dt = s1 - s2
        # f_1 = p_1/q_1 fixes infinity, f_2 = p_2/q_2 sends it to zero;
        # p_1 and q_2 are monic of degree one.
        d1 = (s1 * x2 - s2 * x1) / dt
        q1 = (x1 - x2) / dt
        d2 = (s1 * x1 - s2 * x2) / dt
        p2 = s1 * s2 * (x2 - x1) / dt
        zvec = []
        dens = []
        for ti, yi in zip(ts, yvec):
            den = (ti - d1) - q1 * yi
            if den == 0:
                raise PoleAtParabolicLine("modification line passes through a parabolic direction")
            zvec.append((p2 - (ti - d2) * yi) / den)
            dens.append(den)
        prod = dens[0]
        for d in dens[1:]:
            prod = prod * d
        weight = norm(F, (x1 - x2) / (dt * dt * prod))
        return tuple(zvec), weight

    raise ValueError("only n = 1 and n = 2 simultaneous modifications are supported")


def wobbly_membership(config: ParabolicConfig, yvec, S):
    """Test whether the directions over the marked points indexed by S are wobbly.

    S must be an even-sized set of indices into the finite marked points.
    Returns (bool, residual) where residual is the defining determinant
    (rows i in S, columns t_i^j and y_i t_i^j for j < |S|/2); membership
    means the determinant vanishes.  For |S| = 2 this reduces to y_i = y_j.
    """
    ts = config.t
    yvec = tuple(yvec)
    if len(yvec) != len(ts):
        raise ValueError("expected one direction per finite marked point")
    S = tuple(S)
    idx = sorted(set(S))
    if len(idx) != len(S):
        raise ValueError("indices in S must be distinct")
    if len(idx) < 2 or len(idx) % 2 != 0:
        raise ValueError("S must have even size at least 2")
    if idx[0] < 0 or idx[-1] > config.m:
        raise ValueError("indices in S must point at finite marked points")
    r = len(idx) // 2
    rows = []
    for i in idx:
        ti, yi = ts[i], yvec[i]
        row = [ti ** j for j in range(r)] + [yi * ti ** j for j in range(r)]
        rows.append(row)
    det = _det(rows)
    if isinstance(det, (int, Fraction)):
        member = det == 0
    elif isinstance(det, PadicNumber):
        member = det.is_zero
    else:
        scale = max(1.0, max(abs(e) for row in rows for e in row)) ** (2 * r)
        member = abs(det) <= 1e-10 * scale
    return member, det


# ---------------------------------------------------------------------------
# elliptic measure densities


def _quad0(f, a, b, **kw):
    val, _err = quad(f, a, b, limit=_QUAD_LIMIT, **kw)
    return val


def _real_elliptic(x: float, positive_only: bool) -> float:
    """Lebesgue integral of |s(s-1)(s-x)|^{-1/2} over the line (or where positive)."""
    roots = sorted((0.0, 1.0, x))
    r1, r2, r3 = roots

    def absg_ex(s, skip):
        out = 1.0
        for k, r in enumerate(roots):
            if k != skip:
                out *= abs(s - r)
        return out

    def bounded(a, b, ia, ib):
        mid = 0.5 * (a + b)
        lo = _quad0(lambda v: 2.0 / math.sqrt(absg_ex(a + v * v, ia)), 0.0, math.sqrt(mid - a))
        hi = _quad0(lambda v: 2.0 / math.sqrt(absg_ex(b - v * v, ib)), 0.0, math.sqrt(b - mid))
        return lo + hi

    # sign of (s-r1)(s-r2)(s-r3): + on (r1, r2) and (r3, inf), - elsewhere
    total = bounded(r1, r2, 0, 1)
    upper = _quad0(lambda v: 2.0 / math.sqrt(absg_ex(r3 + v * v, 2)), 0.0, 1.0)
    upper += _quad0(
        lambda v: 2.0 / math.sqrt(abs((1 - r1 * v * v) * (1 - r2 * v * v) * (1 - r3 * v * v))),
        0.0,
        1.0 / math.sqrt(r3 + 1.0),
    )
    total += upper
    if not positive_only:
        total += bounded(r2, r3, 1, 2)
        lower = _quad0(lambda v: 2.0 / math.sqrt(absg_ex(r1 - v * v, 0)), 0.0, 1.0)
        lower += _quad0(
            lambda v: 2.0 / math.sqrt(abs((1 + r1 * v * v) * (1 + r2 * v * v) * (1 + r3 * v * v))),
            0.0,
            1.0 / math.sqrt(1.0 - r1),
        )
        total += lower
    return total


def _complex_segment_period(a, b, c, nodes: int = 241) -> complex:
    """Integral over the segment [a, b] of ds / sqrt((s-a)(s-b)(s-c)).

    Uses tau = sin^2(phi) to remove both endpoint singularities and tracks a
    continuous square-root branch along the segment.
    """
    xs, ws = np.polynomial.legendre.leggauss(nodes)
    phi = 0.25 * np.pi * (xs + 1.0)
    wphi = 0.25 * np.pi * ws
    u = (c - a) - (b - a) * np.sin(phi) ** 2
    ang = np.unwrap(np.angle(u))
    inv_sqrt = np.exp(-0.5 * (np.log(np.abs(u)) + 1j * ang))
    return complex(2.0 * np.sum(wphi * inv_sqrt))


def _complex_elliptic(x: complex) -> float:
    """Area integral (1/pi) int dA / |s(s-1)(s-x)| via the period lattice."""
    roots = [0.0 + 0.0j, 1.0 + 0.0j, complex(x)]
    if abs(complex(x).imag) < 1e-12:
        roots.sort(key=lambda r: r.real)
    a, b, c = roots
    omega1 = 2.0 * _complex_segment_period(a, b, c)
    omega2 = 2.0 * _complex_segment_period(b, c, a)
    area = abs((omega1.conjugate() * omega2).imag)
    return area / (2.0 * math.pi)


def _padic_elliptic_closed(F: FieldDescriptor, x: PadicNumber) -> float:
    """Closed form for the p-adic elliptic density integral, all valuations."""
    q = float(F.p)
    logq = math.log(q)
    base = (1.0 + 4.0 / math.sqrt(q) + 1.0 / q) / (1.0 - 1.0 / q) * logq
    v = x.val
    if v > 0:
        return base + v * logq
    if v == 0:
        w = (1 - x).val
        if w == 0:
            return base
        return base + w * logq  # E(x) = E(1 - x)
    # E(x) = |1/x|^{1/2} E(1/x) for |x| > 1
    return q ** (v / 2.0) * (base + (-v) * logq)


def _padic_elliptic_brute(F: FieldDescriptor, x: PadicNumber, plus: bool, depth: int) -> float:
    """Two-chart shell integration of the (positive-locus) elliptic density."""
    zero = PadicNumber(F.p, F.precision, 0, 0)

    def interior(s):
        c = s * (s - 1) * (s - x)
        val = 1.0 / math.sqrt(norm(F, c))
        if plus:
            val *= 2.0 * theta(F, c)
        return val

    def exterior(u):
        c = (1 - u) * (1 - u * x)
        val = 1.0 / math.sqrt(norm(F, u) * norm(F, c))
        if plus:
            val *= 2.0 * theta(F, u * c)
        return val

    inner = padic_integrate(F, interior, ResidueDisc(zero, 0), depth=depth)
    outer = padic_integrate(F, exterior, ResidueDisc(zero, 1), depth=depth)
    return inner.value + outer.value


def elliptic_E(F: FieldDescriptor, x) -> float:
    """The elliptic integral E(x): total mass of |s(s-1)(s-x)|^{-1/2} ds.

    Over R and C adaptive quadrature with square-root substitutions (periods
    of the curve in the complex case); over Q_p an exact closed form extended
    to all valuations by the functional equations E(x) = E(1-x) and
    E(1/x) = |x|^{1/2} E(x).  Raises DegenerateNode at x in {0, 1}.
    """
    xv = as_element(F, x)
    if xv == 0 or xv == 1:
        raise DegenerateNode("elliptic curve degenerates at x in {0, 1}")
    if F.kind == "R":
        return 0.5 * _real_elliptic(float(xv), positive_only=False)
    if F.kind == "C":
        return _complex_elliptic(complex(xv))
    return _padic_elliptic_closed(F, xv)


def elliptic_Eplus(F: FieldDescriptor, x, depth: int = 5) -> float:
    """The restricted integral E_+(x) = 2 int theta(s(s-1)(s-x)) |...|^{-1/2} ds.

    Over R this integrates where the cubic is positive; over C it equals
    2 E(x); over Q_p it is computed by two-chart shell integration at the
    given depth (truncation error O(q^{-depth/2}) near the square-root
    locus).
    """
    xv = as_element(F, x)
    if xv == 0 or xv == 1:
        raise DegenerateNode("elliptic curve degenerates at x in {0, 1}")
    if F.kind == "R":
        return 2.0 * 0.5 * _real_elliptic(float(xv), positive_only=True)
    if F.kind == "C":
        return 2.0 * _complex_elliptic(complex(xv))
    return _padic_elliptic_brute(F, xv, plus=True, depth=depth)


# ---------------------------------------------------------------------------
# the regularized square-root resolvent identity


def _l33_real(b: float, cutoff: float) -> float:
    if b > 0:
        rb = 2.0 * math.sqrt(b)
        if cutoff <= rb + 1.0:
            raise ValueError("cutoff must exceed the singular radius 2 sqrt(b) + 1")
        # x = rb + v^2 makes the edge integrable: x^2 - 4b = v^2 (v^2 + 2 rb)
        first = _quad0(lambda v: 4.0 / math.sqrt(v * v + 2.0 * rb), 0.0, 1.0)
        first += _quad0(lambda x: 2.0 / math.sqrt(x * x - 4.0 * b), rb + 1.0, cutoff)
    else:
        c = -4.0 * b
        first = _quad0(lambda x: 2.0 / math.sqrt(x * x + c), 0.0, 1.0)
        first += _quad0(lambda x: 2.0 / math.sqrt(x * x + c), 1.0, cutoff)
    return first - 2.0 * math.log(cutoff)


def _l33_complex(b: complex, cutoff: float) -> float:
    ab = abs(b)

    # the angular average of 1/|x^2 - 4b| on |x| = r is a complete elliptic integral
    def radial(r):
        den = r * r + 4.0 * ab
        mpar = 16.0 * r * r * ab / (den * den)
        return 8.0 * r * float(ellipk(mpar)) / den

    sing = 2.0 * math.sqrt(ab)
    pts = sorted({p for p in (1.0, sing) if 0.0 < p < cutoff})
    val, _err = quad(radial, 0.0, cutoff, points=pts, limit=2 * _QUAD_LIMIT)
    return val / math.pi - 4.0 * math.log(cutoff)


def _l33_shell_subtractor(q: int, v: int) -> float:
    """Value of (1 + sgn log|x|)/|x| on the sphere |x| = q^{-v} (constant there)."""
    if v > 0:
        return 0.0
    if v == 0:
        return 1.0
    return 2.0 * float(q) ** v


def _l33_singular_shell(F: FieldDescriptor, fourb: PadicNumber, root: PadicNumber, v: int) -> float:
    """Exact integral of the l33 integrand over the sphere carrying both roots of x^2 - 4b.

    The sphere |x| = |root| = q^{-v} splits into q - 1 discs of radius
    q^{-(v+1)}.  Away from the two discs containing +-root the integrand is
    locally constant (x -+ root keeps norm q^{-v}, so x^2 - 4b moves by a
    square unit across each disc).  On a root disc, x = root + e turns
    theta(x^2-4b)/sqrt|x^2-4b| into theta(2*root*e)/sqrt(|2 root| |e|), whose
    integral telescopes to 1/(2q) in vol(Z_p) = 1 units regardless of v.
    """
    q = F.p
    cell_vol = float(q) ** (-(v + 1))
    sub = _l33_shell_subtractor(q, v)
    # two root discs: theta part 2 * (2 * 1/(2q)), subtractor exact on each
    total = 2.0 / q - 2.0 * sub * cell_vol
    for c in _shell_centers(F, v, v + 1):
        if (c - root).val >= v + 1 or (c + root).val >= v + 1:
            continue
        f = c * c - fourb
        total += (2.0 * theta(F, f) / math.sqrt(norm(F, f)) - sub) * cell_vol
    return total * haar_scale(F)


def _l33_padic(F: FieldDescriptor, b: PadicNumber, cutoff: float, rel_depth: int = 6) -> float:
    q = F.p
    fourb = 4 * b
    v4b = fourb.val
    tail_start = max(1, v4b // 2 + 2)
    if tail_start >= F.precision:
        raise ValueError("field precision too small for the constant tail radius")
    vmin = -int(math.floor(math.log(cutoff) / math.log(q) + 1e-9))

    def integrand(xx):
        f = xx * xx - fourb
        first = 2.0 * theta(F, f) / math.sqrt(norm(F, f))
        second = (1 + log_norm_sign(F, xx)) / norm(F, xx)
        return first - second

    sing_v = None
    root = None
    if v4b % 2 == 0 and is_square(F, fourb):
        root = fourb.sqrt()
        sing_v = v4b // 2

    total = 0.0
    for v in range(vmin, tail_start):
        if v == sing_v:
            total += _l33_singular_shell(F, fourb, root, v)
        else:
            depth = min(F.precision, v + rel_depth)
            total += padic_integrate(F, integrand, [v], depth=depth).value
    # below the tail radius the integrand is the constant 2 theta(-4b)/sqrt(|4b|)
    tail = 2.0 * theta(F, -fourb) / math.sqrt(norm(F, fourb))
    total += tail * haar_scale(F) * float(q) ** (-tail_start)
    return total


def l33_check(F: FieldDescriptor, b, cutoff: float) -> float:
    """Numerically evaluate int (2 theta(x^2-4b)/sqrt(|x^2-4b|) - (1+sgn log|x|)/|x|) dx.

    The integral over all of F equals -log|b|; the return value carries the
    truncation error of restricting to |x| <= cutoff.  Over Q_p the outer
    shells cancel exactly and the result is exact up to shell sampling.
    """
    bv = as_element(F, b)
    if bv == 0:
        raise ValueError("b must be nonzero")
    if F.kind == "R":
        return _l33_real(float(bv), float(cutoff))
    if F.kind == "C":
        return _l33_complex(complex(bv), float(cutoff))
    return _l33_padic(F, bv, float(cutoff))


# ---------------------------------------------------------------------------
# regularized trace of the four-point operator


def _diag_quartic_coeffs(t, x):
    """Coefficients of g(y) = f_t(x, y, y) = (t - y^2)^2 - 4x y(y-1)(y-t)."""
    return [1.0, -4.0 * x, 4.0 * x * (1.0 + t) - 2.0 * t, -4.0 * x * t, t * t]


def _trace_real(t: float, x: float, cutoff: float) -> float:
    coeffs = _diag_quartic_coeffs(t, x)
    rho = np.roots(coeffs)
    scale = 1.0 + max(abs(r) for r in rho)
    # a double root splits into a close pair (real or conjugate) under np.roots
    for i in range(len(rho)):
        for j in range(i + 1, len(rho)):
            if abs(rho[i] - rho[j]) <= 1e-6 * scale:
                raise TraceDivergent("diagonal kernel has a double root; trace diverges")
    real_idx = [k for k, r in enumerate(rho) if abs(r.imag) <= 1e-9 * scale]
    real_roots = sorted((rho[k].real, k) for k in real_idx)

    def absg(y):
        return abs(np.prod(y - rho))

    def absg_ex(y, skip):
        out = 1.0
        for k, r in enumerate(rho):
            if k != skip:
                out *= abs(y - r)
        return out

    def piece(lo, hi, lo_idx, hi_idx):
        mid = 0.5 * (lo + hi)
        out = 0.0
        if lo_idx is None:
            out += _quad0(lambda y: 2.0 / math.sqrt(absg(y)), lo, mid)
        else:
            out += _quad0(
                lambda v: 4.0 / math.sqrt(absg_ex(lo + v * v, lo_idx)), 0.0, math.sqrt(mid - lo)
            )
        if hi_idx is None:
            out += _quad0(lambda y: 2.0 / math.sqrt(absg(y)), mid, hi)
        else:
            out += _quad0(
                lambda v: 4.0 / math.sqrt(absg_ex(hi - v * v, hi_idx)), 0.0, math.sqrt(hi - mid)
            )
        return out

    cuts = [(-cutoff, None)] + [rc for rc in real_roots if -cutoff < rc[0] < cutoff] + [(cutoff, None)]
    total = 0.0
    for (lo, lo_idx), (hi, hi_idx) in zip(cuts, cuts[1:]):
        if hi - lo <= 0:
            continue
        if np.polyval(coeffs, 0.5 * (lo + hi)) > 0:
            total += piece(lo, hi, lo_idx, hi_idx)
    return 0.5 * total


def _trace_complex(t: complex, x: complex, cutoff: float) -> float:
    coeffs = _diag_quartic_coeffs(t, x)
    rho = np.roots(coeffs)
    scale = 1.0 + max(abs(r) for r in rho)
    for i in range(len(rho)):
        for j in range(i + 1, len(rho)):
            if abs(rho[i] - rho[j]) <= 1e-7 * scale:
                raise TraceDivergent("diagonal kernel has a double root; trace diverges")

    def ring(r):
        f = lambda th: 2.0 / abs(np.polyval(coeffs, r * np.exp(1j * th)))
        return r * _quad0(f, 0.0, 2.0 * math.pi)

    radii = sorted({abs(r) for r in rho if 0.0 < abs(r) < cutoff})
    val, _err = quad(ring, 0.0, cutoff, points=radii, limit=2 * _QUAD_LIMIT)
    return val / math.pi


def _trace_padic(F: FieldDescriptor, t, x, cutoff: float, rel_depth: int) -> float:
    q = F.p
    tv, xv = as_element(F, t), as_element(F, x)
    if tv.is_zero or xv.is_zero:
        raise TraceDivergent("trace diverges at degenerate modification data")

    def integrand(y):
        g = kontsevich_f(tv, xv, y, y)
        return 2.0 * theta(F, g) / math.sqrt(norm(F, g))

    # below the tail radius g = t^2 (1 + small): v(4xty) must exceed v(t^2)
    tail_start = max(2, 2 * tv.val - (4 * xv * tv).val + 2)
    if tail_start >= F.precision:
        raise ValueError("field precision too small for the constant tail radius")
    vmin = -int(math.floor(math.log(cutoff) / math.log(q) + 1e-9))
    total = 0.0
    for v in range(vmin, tail_start):
        depth = min(F.precision, v + rel_depth)
        total += padic_integrate(F, integrand, [v], depth=depth).value
    total += (2.0 / norm(F, tv)) * haar_scale(F) * float(q) ** (-tail_start)
    return total


def regularized_trace(F: FieldDescriptor, t, x, cutoff: float, rel_depth: int = 5) -> float:
    """Diagonal integral of the four-point kernel over |y| <= cutoff.

    Integrates 2 theta(f_t(x, y, y)) / sqrt(|f_t(x, y, y)|); the diagonal
    quartic has simple roots for generic x and the integral converges as the
    cutoff grows (the tail decays like 1/cutoff).  Raises TraceDivergent when
    the quartic acquires a double root (e.g. x in {0, 1, t} over R).
    """
    if F.kind == "R":
        return _trace_real(float(t), float(x), float(cutoff))
    if F.kind == "C":
        return _trace_complex(complex(t), complex(x), float(cutoff))
    return _trace_padic(F, t, x, float(cutoff), rel_depth)
