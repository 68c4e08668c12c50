"""Projective opers: path transport, monodromy, and the real locus.

The operator studied here is d^2/dx^2 + sum_i (1/(4(x - t_i)^2)
- mu_i/(x - t_i)) on the sphere, with an implicit marked point at infinity
enforced by the residue constraints sum(mu) = 0 and sum(t*mu) = m/4.  Every
marked point is regular singular with both exponents 1/2 (-1/2 at infinity),
so each local monodromy is minus a unipotent matrix.

Solutions are carried along paths in the complex plane by high-order
adaptive integration, with series handoff inside a small disc around a
marked point.  Monodromy matrices come from loop transports; reality of the
representation is decided from word traces; for the four-point family the
residues are an affine function of the single Lame eigenvalue, and the
module scans that eigenvalue for the discrete real locus and assembles the
single-valued bilinear eigenvalue function from the invariant Hermitian
form.  Closed hypergeometric forms for the cyclically symmetric
configurations and finite-difference residuals of the Lame flux operator
d/dz z(z-1)(z-t) d/dz + z give independent cross-checks.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import reduce
from typing import Callable, Iterable, Sequence

import mpmath
import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq, minimize_scalar

from .errors import (
    HeckeLabError,
    HypergeometricPole,
    NonRealOrDegenerate,
    OnSingularLocus,
    PoleAtParabolicLine,
    ReducibleMonodromy,
)
from .kernels import kontsevich_f

FROBENIUS_ORDER = 12
FROBENIUS_RADIUS_FACTOR = 1e-3
LOOP_RADIUS_FACTOR = 0.45
REALITY_TOL = 1e-6

_ID2 = np.eye(2, dtype=complex)


def _min_gap(points: Sequence[complex]) -> float:
    return min(
        abs(points[i] - points[j])
        for i in range(len(points))
        for j in range(i + 1, len(points))
    )


def _inv2(m: np.ndarray) -> np.ndarray:
    # unit-determinant transfers invert without division
    d = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]], dtype=complex) / d


@dataclass(frozen=True)
class OperCoefficients:
    """Finite marked points and residues of a projective oper.

    ``t`` lists the finite marked points, ``mu`` the residues at them; the
    point at infinity is always marked.  The residues must satisfy
    sum(mu) = 0 and sum(t*mu) = m/4 with m = len(t) - 1, which is exactly
    the condition that infinity is regular singular with exponents
    -1/2, -1/2.  Four-point instances built by ``from_lame`` keep the Lame
    eigenvalue in ``lame_lambda``.
    """

    t: tuple
    mu: tuple
    lame_lambda: complex | None = None

    def __post_init__(self):
        ts = tuple(complex(v) for v in self.t)
        mus = tuple(complex(v) for v in self.mu)
        object.__setattr__(self, "t", ts)
        object.__setattr__(self, "mu", mus)
        if len(ts) != len(mus):
            raise ValueError("points and residues must have equal length")
        if len(ts) < 2:
            raise ValueError("need at least two finite marked points")
        if _min_gap(ts) == 0.0:
            raise ValueError("marked points must be distinct")
        scale = 1.0 + sum(abs(m) * (1.0 + abs(p)) for m, p in zip(mus, ts))
        if abs(sum(mus)) > 1e-9 * scale:
            raise ValueError("residues must sum to zero")
        if abs(sum(p * m for p, m in zip(ts, mus)) - self.m / 4.0) > 1e-9 * scale:
            raise ValueError("weighted residue sum must equal m/4")

    @property
    def m(self) -> int:
        return len(self.t) - 1

    @property
    def frobenius_radius(self) -> float:
        return FROBENIUS_RADIUS_FACTOR * _min_gap(self.t)

    @classmethod
    def from_lame(cls, t, lam) -> "OperCoefficients":
        """Four-point residues at (0, t, 1) for Lame eigenvalue lam.

        mu_i = (1/2) sum_{j != i} 1/(e_i - e_j) + (lam - e_i)/P'(e_i) with
        P(z) = z(z-1)(z-t); this is the unique residue triple for which the
        oper equation is the Lame eigenproblem conjugated by sqrt(P).
        """
        tc = complex(t)
        if tc in (0j, 1 + 0j):
            raise ValueError("four-point parameter t must avoid 0 and 1")
        es = (0j, tc, 1 + 0j)
        mus = []
        for i, e in enumerate(es):
            others = [es[j] for j in range(3) if j != i]
            dp = (e - others[0]) * (e - others[1])
            mus.append(0.5 * sum(1.0 / (e - o) for o in others) + (lam - e) / dp)
        return cls(es, tuple(mus), lame_lambda=lam)

    def potential(self, x):
        """Coefficient V(x) of the zeroth-order term, vectorized over x."""
        x = np.asarray(x, dtype=complex)
        v = np.zeros_like(x)
        for p, m in zip(self.t, self.mu):
            d = x - p
            v += 0.25 / (d * d) - m / d
        return v


# ---------------------------------------------------------------------------
# series solutions at a marked point

def _frobenius_coeffs(coeffs: OperCoefficients, index: int, order: int):
    """Taylor data (a_n, b_n, c_n) of the two local branches at t[index]."""
    e = coeffs.t[index]
    c_pole = -coeffs.mu[index]
    cs = []
    for n in range(order + 1):
        acc = 0j
        for j, (p, m) in enumerate(zip(coeffs.t, coeffs.mu)):
            if j == index:
                continue
            d = p - e
            acc += (n + 1) / (4.0 * d ** (n + 2)) + m / d ** (n + 1)
        cs.append(acc)
    a = [1.0 + 0j]
    b = [0j]
    for n in range(1, order + 1):
        acc = c_pole * a[n - 1]
        for k in range(0, n - 1):
            acc += cs[k] * a[n - 2 - k]
        a.append(-acc / (n * n))
        acc = 2.0 * n * a[n] + c_pole * b[n - 1]
        for k in range(0, n - 1):
            acc += cs[k] * b[n - 2 - k]
        b.append(-acc / (n * n))
    return a, b


def frobenius_basis(coeffs: OperCoefficients, index: int, x, order: int = FROBENIUS_ORDER) -> np.ndarray:
    """Local fundamental matrix [[u1, u2], [u1', u2']] near t[index].

    u1 = s^(1/2) (1 + ...) is the pure square-root branch and
    u2 = u1 log(s) + s^(1/2)(b_1 s + ...) the logarithmic one, s = x - t.
    Their Wronskian is exactly 1.  Principal branches of sqrt and log are
    used, so transfers built from two evaluations describe a path that does
    not cross the leftward cut from the marked point.
    """
    a, b = _frobenius_coeffs(coeffs, index, order)
    s = complex(x) - coeffs.t[index]
    if s == 0:
        raise PoleAtParabolicLine("series basis requested exactly at a marked point")
    g = gp = h = hp = 0j
    for n in range(order, 0, -1):
        g = a[n] + s * g
        h = b[n] + s * h
        gp = n * a[n] + s * gp
        hp = n * b[n] + s * hp
    g = a[0] + s * g
    h = b[0] + s * h
    rt = cmath.sqrt(s)
    lg = cmath.log(s)
    u1 = rt * g
    u1p = rt * (gp + g / (2.0 * s))
    u2 = u1 * lg + rt * h
    u2p = u1p * lg + u1 / s + rt * (hp + h / (2.0 * s))
    return np.array([[u1, u2], [u1p, u2p]], dtype=complex)


# ---------------------------------------------------------------------------
# path transport

def _line_piece(a: complex, b: complex):
    dz = b - a
    return (lambda s: a + s * dz), (lambda s: dz)


def _arc_piece(center: complex, start: complex):
    # full counterclockwise turn beginning and ending at `start`
    u0 = start - center
    tau = 2.0j * math.pi
    return (
        lambda s: center + u0 * cmath.exp(tau * s),
        lambda s: u0 * tau * cmath.exp(tau * s),
    )


def _segment_distance(a: complex, b: complex, p: complex) -> float:
    ab = b - a
    L2 = abs(ab) ** 2
    if L2 == 0.0:
        return abs(p - a)
    s = max(0.0, min(1.0, ((p - a) * ab.conjugate()).real / L2))
    return abs(a + s * ab - p)


def _transport(pieces, vfun: Callable, batch: int, rtol: float, atol: float) -> np.ndarray:
    """Integrate the fundamental matrix of f'' + V f = 0 along path pieces.

    Returns the transfer stack T of shape (batch, 2, 2) acting on value
    vectors (f, f'); vfun(x) must return the batch of potentials at x.
    """
    y = np.broadcast_to(_ID2, (batch, 2, 2)).astype(complex).reshape(-1)
    for xfun, dxfun in pieces:
        def rhs(s, yflat, _x=xfun, _dx=dxfun):
            cur = np.ascontiguousarray(yflat).view(np.complex128).reshape(batch, 2, 2)
            x = _x(s)
            dx = _dx(s)
            out = np.empty_like(cur)
            out[:, 0, :] = dx * cur[:, 1, :]
            out[:, 1, :] = (-dx * vfun(x))[:, None] * cur[:, 0, :]
            return out.reshape(-1).view(np.float64)

        sol = solve_ivp(
            rhs,
            (0.0, 1.0),
            y.view(np.float64),
            method="DOP853",
            rtol=rtol,
            atol=atol,
        )
        if not sol.success:
            raise HeckeLabError("path transport failed: " + sol.message)
        y = np.ascontiguousarray(sol.y[:, -1]).view(np.complex128)
    return y.reshape(batch, 2, 2)


def _scalar_vfun(coeffs: OperCoefficients):
    return lambda x: np.atleast_1d(coeffs.potential(x))


def _first_radius_exit(verts, center: complex, radius: float):
    """First point along the polyline where |x - center| reaches radius."""
    for k in range(len(verts) - 1):
        a, b = verts[k], verts[k + 1]
        if abs(b - center) >= radius:
            # solve |a + s(b-a) - center| = radius on this segment
            u = a - center
            v = b - a
            aa = abs(v) ** 2
            bb = 2.0 * (u * v.conjugate()).real
            cc = abs(u) ** 2 - radius * radius
            disc = bb * bb - 4.0 * aa * cc
            s = (-bb + math.sqrt(max(disc, 0.0))) / (2.0 * aa)
            s = min(max(s, 0.0), 1.0)
            return k, a + s * v
    raise PoleAtParabolicLine("path never leaves the series disc of a marked point")


def oper_ode_solve(coeffs: OperCoefficients, path: Iterable[complex], rtol: float = 1e-10, atol: float = 1e-12) -> np.ndarray:
    """Transfer matrix of the oper equation along a polyline path.

    Returns T with (f, f')(end) = T (f, f')(start); det T = 1 because the
    equation has no first-derivative term.  Interior segments must keep
    distance at least the series radius from every marked point; an endpoint
    inside that radius is reached by the local series instead, entering or
    leaving the disc along the path itself.
    """
    verts = [complex(p) for p in path]
    if len(verts) < 2:
        raise ValueError("path needs at least two vertices")
    delta = coeffs.frobenius_radius
    pre = _ID2
    post = _ID2

    gaps = [min(abs(v - p) for p in coeffs.t) for v in (verts[0], verts[-1])]
    if gaps[0] < delta:
        i0 = min(range(len(coeffs.t)), key=lambda i: abs(verts[0] - coeffs.t[i]))
        if verts[0] == coeffs.t[i0]:
            raise PoleAtParabolicLine("path starts exactly at a marked point")
        k, clip = _first_radius_exit(verts, coeffs.t[i0], delta)
        f_in = frobenius_basis(coeffs, i0, verts[0])
        f_out = frobenius_basis(coeffs, i0, clip)
        pre = f_out @ _inv2(f_in)
        verts = [clip] + verts[k + 1 :]
    if gaps[1] < delta:
        i1 = min(range(len(coeffs.t)), key=lambda i: abs(verts[-1] - coeffs.t[i]))
        if verts[-1] == coeffs.t[i1]:
            raise PoleAtParabolicLine("path ends exactly at a marked point")
        k, clip = _first_radius_exit(verts[::-1], coeffs.t[i1], delta)
        f_in = frobenius_basis(coeffs, i1, clip)
        f_out = frobenius_basis(coeffs, i1, verts[-1])
        post = f_out @ _inv2(f_in)
        verts = verts[: len(verts) - 1 - k] + [clip]

    pieces = []
    for a, b in zip(verts, verts[1:]):
        if a == b:
            continue
        for p in coeffs.t:
            if _segment_distance(a, b, p) < delta * (1.0 - 1e-9):
                raise PoleAtParabolicLine(
                    f"path segment passes within {delta:.3g} of marked point {p}"
                )
        pieces.append(_line_piece(a, b))
    t_ode = _transport(pieces, _scalar_vfun(coeffs), 1, rtol, atol)[0] if pieces else _ID2
    return post @ t_ode @ pre


# ---------------------------------------------------------------------------
# monodromy

@dataclass(frozen=True)
class MonodromyData:
    """Loop transfers of an oper around its marked points.

    ``matrices`` holds one 2x2 complex matrix per finite marked point in
    ascending (real, imag) order of the points, followed by the loop around
    infinity; all are based at ``basepoint`` and taken counterclockwise.
    The left-to-right product matrices[-1] @ matrices[-2] @ ... @
    matrices[0] is the identity, and every matrix has trace -2.
    ``wronskian_drift`` records |det - 1| per matrix as an integration log.
    """

    basepoint: complex
    points: tuple
    loops: tuple
    matrices: tuple
    wronskian_drift: tuple

    def loop_product(self) -> np.ndarray:
        return reduce(lambda acc, m: m @ acc, self.matrices, _ID2)


def standard_basepoint(coeffs: OperCoefficients) -> complex:
    """Default monodromy basepoint: high above the centroid of the points."""
    c0 = sum(coeffs.t) / len(coeffs.t)
    spread = max(max(abs(p - c0) for p in coeffs.t), 0.5)
    lift = max((p.imag for p in coeffs.t), default=0.0) - c0.imag
    return c0 + 1j * (2.5 * spread + max(lift, 0.0))


def _loop_geometry(points, basepoint):
    """Descent and circle pieces for each finite point, sorted by (re, im)."""
    order = sorted(range(len(points)), key=lambda i: (points[i].real, points[i].imag))
    out = []
    for i in order:
        e = points[i]
        r = LOOP_RADIUS_FACTOR * min(abs(e - points[j]) for j in range(len(points)) if j != i)
        w = complex(e.real, basepoint.imag)
        top = e + 1j * r
        descent = []
        if basepoint != w:
            descent.append(_line_piece(basepoint, w))
        descent.append(_line_piece(w, top))
        circle = [_arc_piece(e, top)]
        verts = (basepoint, w, top)
        out.append((i, e, r, descent, circle, verts))
    return out


def monodromy(coeffs: OperCoefficients, basepoint: complex, rtol: float = 1e-12, atol: float = 1e-14) -> MonodromyData:
    """Counterclockwise loop matrices around every marked point.

    The basepoint must sit strictly above all finite marked points and far
    enough out that a circle through it encloses them; loops descend
    vertically, circle once, and return the same way.  Matrices act on
    value vectors (f, f') at the basepoint.  The tight default tolerances
    matter: trace reality tests downstream compare imaginary parts against
    1e-6 while the matrices themselves can reach norms of 1e5.
    """
    bp = complex(basepoint)
    pts = coeffs.t
    c0 = sum(pts) / len(pts)
    maxdist = max(abs(p - c0) for p in pts)
    delta = coeffs.frobenius_radius
    if bp.imag <= max(p.imag for p in pts) + 10 * delta:
        raise ValueError("basepoint must lie strictly above every marked point")
    if abs(bp - c0) < 1.3 * maxdist + 10 * delta:
        raise ValueError("basepoint too close in for the loop around infinity")

    vfun = _scalar_vfun(coeffs)
    mats = []
    loops = []
    for i, e, r, descent, circle, verts in _loop_geometry(pts, bp):
        for (a, b) in ((verts[0], verts[1]), (verts[1], verts[2])):
            for j, p in enumerate(pts):
                d = _segment_distance(a, b, p)
                floor = r if j == i else max(delta, 0.5 * r)
                if d < floor * (1.0 - 1e-9):
                    raise PoleAtParabolicLine(
                        f"descent to {e} passes too close to marked point {p}"
                    )
        c_mat = _transport(descent, vfun, 1, rtol, atol)[0]
        l_mat = _transport(circle, vfun, 1, rtol, atol)[0]
        mats.append(_inv2(c_mat) @ l_mat @ c_mat)
        loops.append(verts)

    t_big = _transport([_arc_piece(c0, bp)], vfun, 1, rtol, atol)[0]
    # counterclockwise around infinity is the clockwise outer circle
    mats.append(_inv2(t_big))
    loops.append((bp, c0, abs(bp - c0)))

    drift = tuple(float(abs(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0] - 1.0)) for m in mats)
    data = MonodromyData(
        basepoint=bp,
        points=tuple(sorted(pts, key=lambda p: (p.real, p.imag))),
        loops=tuple(loops),
        matrices=tuple(mats),
        wronskian_drift=drift,
    )
    scale = 1.0 + max(float(np.max(np.abs(m))) for m in mats) ** 2
    resid = float(np.max(np.abs(data.loop_product() - _ID2)))
    if resid > 1e-6 * scale:
        raise HeckeLabError(f"loop product deviates from identity by {resid:.3g}")
    for m, p in zip(mats, list(data.points) + ["infinity"]):
        tr = m[0, 0] + m[1, 1]
        if abs(tr + 2.0) > 1e-6 * (1.0 + abs(tr)):
            raise HeckeLabError(f"loop around {p} has trace {tr}, expected -2")
    return data


def _trace_words(gens: Sequence[np.ndarray]):
    words = {}
    n = len(gens)
    for i in range(n):
        words[f"g{i}"] = gens[i]
    for i in range(n):
        for j in range(i + 1, n):
            words[f"g{i}g{j}"] = gens[i] @ gens[j]
    triple = reduce(lambda a, b: a @ b, (gens[k % n] for k in range(3)))
    words["triple"] = triple
    return words


def is_real_oper(mon: MonodromyData, tol: float = REALITY_TOL) -> bool:
    """Whether all sampled word traces are real, i.e. the representation
    is conjugate into SL(2, R).

    Raises ReducibleMonodromy when the generators share an eigenvector;
    trace reality is meaningless there.  The parabolic local matrices rule
    out the compact unitary case on their own.
    """
    gens = [np.asarray(m, dtype=complex) for m in mon.matrices[:-1]]
    anchor = None
    for g in gens:
        if min(np.max(np.abs(g - _ID2)), np.max(np.abs(g + _ID2))) > 1e-8:
            anchor = g
            break
    if anchor is None:
        raise ReducibleMonodromy("all generators are scalar")
    _, vecs = np.linalg.eig(anchor)
    for k in range(2):
        v = vecs[:, k]
        if all(
            abs(np.linalg.det(np.column_stack((g @ v, v))))
            < 1e-8 * (np.linalg.norm(g @ v) + 1e-300)
            for g in gens
        ):
            raise ReducibleMonodromy("generators share an eigenvector")
    for m in _trace_words(gens).values():
        tr = m[0, 0] + m[1, 1]
        if abs(tr.imag) > tol * (1.0 + abs(tr)):
            return False
    return True


# ---------------------------------------------------------------------------
# the four-point family

def _lame_vfun(t: complex, lams: np.ndarray):
    base = OperCoefficients.from_lame(t, 0.0)

    def vfun(x):
        p = x * (x - 1.0) * (x - t)
        return base.potential(x) - lams / p

    return vfun


def _lame_word_traces(t: float, lams: np.ndarray, rtol: float = 1e-9) -> dict:
    """Batched traces of the finite-loop words over an array of eigenvalues."""
    lams = np.asarray(lams, dtype=complex)
    base = OperCoefficients.from_lame(t, 0.0)
    bp = standard_basepoint(base)
    vfun = _lame_vfun(complex(t), lams)
    atol = min(1e-12, 1e-2 * rtol)
    mats = []
    for _i, _e, _r, descent, circle, _verts in _loop_geometry(base.t, bp):
        c_mat = _transport(descent, vfun, len(lams), rtol, atol)
        l_mat = _transport(circle, vfun, len(lams), rtol, atol)
        c_inv = np.empty_like(c_mat)
        c_inv[:, 0, 0] = c_mat[:, 1, 1]
        c_inv[:, 0, 1] = -c_mat[:, 0, 1]
        c_inv[:, 1, 0] = -c_mat[:, 1, 0]
        c_inv[:, 1, 1] = c_mat[:, 0, 0]
        det = c_mat[:, 0, 0] * c_mat[:, 1, 1] - c_mat[:, 0, 1] * c_mat[:, 1, 0]
        mats.append(np.einsum("bij,bjk,bkl->bil", c_inv / det[:, None, None], l_mat, c_mat))
    out = {}
    for i in range(3):
        out[f"g{i}"] = np.trace(mats[i], axis1=1, axis2=2)
    for i in range(3):
        for j in range(i + 1, 3):
            out[f"g{i}g{j}"] = np.einsum("bij,bji->b", mats[i], mats[j])
    out["triple"] = np.trace(
        np.einsum("bij,bjk,bkl->bil", mats[0], mats[1], mats[2]), axis1=1, axis2=2
    )
    return out


def _reality_score(traces: dict) -> np.ndarray:
    return np.max(
        np.stack([np.abs(tr.imag) / (1.0 + np.abs(tr)) for tr in traces.values()]),
        axis=0,
    )


def real_oper_scan_4pt(t: float, lam_min: float, lam_max: float, step: float) -> list:
    """Eigenvalues in [lam_min, lam_max] whose four-point oper has real
    monodromy, refined to 1e-8.

    Scans the normalized imaginary part of the sampled word traces on a
    grid, brackets its sign changes and dips, polishes each candidate, and
    keeps those that pass is_real_oper on a full monodromy computation.
    """
    if lam_max <= lam_min:
        return []
    n = int(math.floor((lam_max - lam_min) / step)) + 1
    grid = lam_min + step * np.arange(n + 1)
    grid = grid[grid <= lam_max + 1e-12 * max(1.0, abs(lam_max))]
    scores = np.empty(len(grid))
    locator = np.empty(len(grid))
    chunk = 64
    for lo in range(0, len(grid), chunk):
        tr = _lame_word_traces(t, grid[lo : lo + chunk])
        scores[lo : lo + chunk] = _reality_score(tr)
        # for real t and lam the adjacent pair traces are real by the
        # reflection symmetry of the configuration, so the separated pair
        # carries all of the imaginary content; its sign changes bracket
        # the simple roots
        locator[lo : lo + chunk] = tr["g0g2"].imag

    def score_at(lam: float) -> float:
        # verification must outresolve the 1e-6 reality threshold even when
        # the loop matrices are large, hence the much tighter tolerance
        return float(
            _reality_score(_lame_word_traces(t, np.array([lam]), rtol=1e-12))[0]
        )

    def locator_at(lam: float) -> float:
        return float(_lame_word_traces(t, np.array([lam]))["g0g2"].imag[0])

    def locator_tight(lam: float) -> float:
        return float(
            _lame_word_traces(t, np.array([lam]), rtol=1e-12)["g0g2"].imag[0]
        )

    def polish(lam0: float) -> float:
        # a bracketing residual of 1e-9 is already amplified past the
        # verification threshold where the trace slopes are steep, so take
        # one Newton step on the tightly integrated locator
        h = 1e-6 * max(1.0, abs(lam0))
        f0 = locator_tight(lam0)
        slope = (locator_tight(lam0 + h) - f0) / h
        if math.isfinite(slope) and slope != 0.0:
            shift = -f0 / slope
            if abs(shift) < step:
                return lam0 + shift
        return lam0

    candidates = []
    for k in range(len(grid) - 1):
        va, vb = locator[k], locator[k + 1]
        if va * vb < 0.0 and max(abs(va), abs(vb)) > 1e-7:
            candidates.append(
                polish(float(brentq(locator_at, grid[k], grid[k + 1], xtol=1e-9)))
            )
    for k in range(1, len(grid) - 1):
        # tangential zeros never flip the locator's sign; catch them as
        # low dips of the reality score instead
        if not (scores[k] < scores[k - 1] and scores[k] <= scores[k + 1]):
            continue
        if scores[k] > 0.2:
            continue
        if locator[k - 1] * locator[k + 1] < 0.0:
            continue
        res = minimize_scalar(
            score_at, bounds=(grid[k - 1], grid[k + 1]), method="bounded",
            options={"xatol": 1e-8},
        )
        candidates.append(float(res.x))

    roots = []
    for lam_star in candidates:
        if score_at(lam_star) > 10 * REALITY_TOL:
            continue
        coeffs = OperCoefficients.from_lame(t, lam_star)
        if is_real_oper(monodromy(coeffs, standard_basepoint(coeffs))):
            roots.append(lam_star)
    out = []
    for r in sorted(roots):
        if not out or abs(r - out[-1]) > 1e-6:
            out.append(r)
    return out


# ---------------------------------------------------------------------------
# the bilinear eigenvalue function

_HERM_BASIS = (
    np.array([[1, 0], [0, 0]], dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, 1j], [-1j, 0]], dtype=complex),
    np.array([[0, 0], [0, 1]], dtype=complex),
)


def _invariant_hermitian(mon: MonodromyData, strict: bool = True) -> np.ndarray:
    """Hermitian h with conj(M) h M^T = h for every loop matrix M.

    That is the invariance making x -> conj(u(x)) h u(x)^T single-valued
    for the row u(x) of fundamental-solution values.  In strict mode the
    solution space must be one-dimensional and the residual tiny.
    """
    cols = []
    for basis_h in _HERM_BASIS:
        col = []
        for m in mon.matrices:
            n = np.asarray(m, dtype=complex).T
            d = n.conj().T @ basis_h @ n - basis_h
            col.append(d.reshape(-1).real)
            col.append(d.reshape(-1).imag)
        cols.append(np.concatenate(col))
    a = np.stack(cols, axis=1)
    _, s, vt = np.linalg.svd(a, full_matrices=False)
    if strict:
        if s[-1] > 1e-6 * s[0]:
            raise NonRealOrDegenerate("no invariant Hermitian form: residual too large")
        if s[-2] < 1e-8 * s[0]:
            raise NonRealOrDegenerate("invariant form is not unique up to scale")
    coeff = vt[-1]
    h = sum(c * b for c, b in zip(coeff, _HERM_BASIS))
    return h


def _grid_drop_pieces(bp: complex, x: complex):
    w = complex(x.real, bp.imag)
    pieces = []
    if bp != w:
        pieces.append(_line_piece(bp, w))
    if w != x:
        pieces.append(_line_piece(w, x))
    return pieces


def _bilinear_at(coeffs, h, bp, x, prefix: np.ndarray | None = None, rtol: float = 1e-10):
    delta = coeffs.frobenius_radius
    if min(abs(complex(x) - p) for p in coeffs.t) < delta:
        raise PoleAtParabolicLine(f"grid point {x} is inside the series disc")
    t_drop = _transport(_grid_drop_pieces(bp, complex(x)), _scalar_vfun(coeffs), 1, rtol, 1e-12)[0]
    if prefix is not None:
        t_drop = t_drop @ prefix
    u = t_drop[0, :]
    return float((u.conj() @ h @ u).real)


def eigenvalue_bilinear(t: float, lam: float, x_grid) -> np.ndarray:
    """Single-valued eigenvalue function beta on a grid, for a real oper.

    Solves for the monodromy-invariant Hermitian form, scales it to unit
    absolute determinant (the normalization in which the defining solution
    basis has unit Wronskian), and evaluates conj(u) h u^T along the grid
    with the overall sign fixed positive far from the marked points.
    """
    coeffs = OperCoefficients.from_lame(t, lam)
    bp = standard_basepoint(coeffs)
    mon = monodromy(coeffs, bp)
    if not is_real_oper(mon):
        raise NonRealOrDegenerate("the requested eigenvalue is not on the real locus")
    h = _invariant_hermitian(mon)
    det = (h[0, 0] * h[1, 1] - h[0, 1] * h[1, 0]).real
    if det >= 0.0:
        raise NonRealOrDegenerate("invariant form is definite; expected signature (1,1)")
    h = h / math.sqrt(abs(det))
    spread = max(abs(p - q) for p in coeffs.t for q in coeffs.t)
    x_ref = complex(max(p.real for p in coeffs.t) + 40.0 * (1.0 + spread), 0.0)
    if _bilinear_at(coeffs, h, bp, x_ref) < 0.0:
        h = -h
    return np.array([_bilinear_at(coeffs, h, bp, complex(x)) for x in np.atleast_1d(x_grid)])


def two_path_gap(t: float, lam: float, x: complex) -> float:
    """Relative disagreement of the bilinear value at x along two
    homotopy-inequivalent paths.

    Near zero exactly when the candidate form is monodromy invariant, i.e.
    when lam sits on the real locus; order one otherwise.  No reality or
    degeneracy gate is applied, so this is usable as a rejection witness.
    """
    coeffs = OperCoefficients.from_lame(t, lam)
    bp = standard_basepoint(coeffs)
    mon = monodromy(coeffs, bp)
    h = _invariant_hermitian(mon, strict=False)
    h = h / np.linalg.norm(h)
    direct = _bilinear_at(coeffs, h, bp, x)
    looped = _bilinear_at(coeffs, h, bp, x, prefix=np.asarray(mon.matrices[0]))
    return abs(direct - looped) / max(abs(direct), abs(looped), 1e-30)


# ---------------------------------------------------------------------------
# hypergeometric closed forms

def hypergeom_2f1(a, b, c, z) -> complex:
    """Gauss hypergeometric function, analytic continuation included."""
    if abs(c - round(c.real if isinstance(c, complex) else c)) < 1e-13 and (
        round(c.real if isinstance(c, complex) else c) <= 0
    ):
        raise HypergeometricPole("third parameter is a nonpositive integer")
    with mpmath.workdps(25):
        try:
            val = mpmath.hyp2f1(a, b, c, z)
        except (mpmath.libmp.NoConvergence, ZeroDivisionError) as exc:
            raise HypergeometricPole(f"hypergeometric evaluation failed: {exc}") from exc
    return complex(val)


def beta0_symmetric_complex(n_points: int, x) -> float:
    """Leading complex-case eigenvalue at x for marked points at the
    n-th roots of unity.

    Vanishes like |x - 1| log at the marked points themselves.
    """
    if n_points < 3:
        raise ValueError("the symmetric family needs at least three points")
    nu = 1.0 / n_points
    y = complex(x) ** n_points
    if abs(1.0 - y) < 1e-12:
        return 0.0
    f_minus = hypergeom_2f1(0.5, 0.5 - nu, 1.0 - nu, y)
    f_plus = hypergeom_2f1(0.5, 0.5 + nu, 1.0 + nu, y)
    num = 2.0 * abs(1.0 - y) * (
        math.gamma(0.5 - nu) ** 2 * abs(f_minus) ** 2
        - math.gamma(0.5 + nu) ** 2 * abs(complex(x) * f_plus) ** 2
    )
    den = math.gamma(nu) * math.gamma(1.0 + nu) * math.sin(2.0 * math.pi * nu)
    return num / den


def beta0_symmetric_real(n_points: int, theta: float):
    """Real-case leading eigenvalue (and the second balancing when the
    point count is even) on the angle chart theta in (-pi/2, pi/2).

    Returns (beta0, beta1) with beta1 = None for odd point counts.  beta0
    extends evenly and periodically, beta1 oddly and antiperiodically; both
    solve w'' + (1/n^2 + 1/(4 cos^2 theta)) w = 0.
    """
    if n_points < 3:
        raise ValueError("the symmetric family needs at least three points")
    if not -math.pi / 2 < theta < math.pi / 2:
        raise ValueError("theta must lie in (-pi/2, pi/2)")
    nu = 1.0 / n_points
    core = cmath.exp(1j * theta * (0.5 - nu)) * hypergeom_2f1(
        0.5, 0.5 - nu, 1.0 - nu, -cmath.exp(2j * theta)
    )
    root = math.sqrt(math.cos(theta))
    front = math.sqrt(math.pi) * math.gamma(0.5 - nu) / math.gamma(1.0 - nu)
    beta0 = front / math.cos(math.pi / 2 * (0.5 - nu)) * root * core.real
    beta1 = None
    if n_points % 2 == 0:
        beta1 = front / math.cos(math.pi / 2 * (0.5 + nu)) * root * core.imag
    return beta0, beta1


# ---------------------------------------------------------------------------
# finite-difference identity checks

def _lame_cubic(t, w):
    return w * (w - 1.0) * (w - t)


def _flux_op_on_power(t: float, x: float, u, v, h: float, weight: float):
    """L_u |f_t|^weight by flux-form central differences in u.

    f_t is quadratic in each of its variables, so the stencil increments
    of f are polynomial identities evaluated without cancellation; the
    increments of the power then go through log1p/expm1, keeping the
    second difference far below the naive double-precision floor.
    """
    a = (x - v) ** 2
    b = 4.0 * (1.0 + t) * x * v - 2.0 * (t + x * v) * (x + v)
    c = (t + x * v) ** 2 - 4.0 * t * x * v
    f0 = (a * u + b) * u + c
    if np.min(np.abs(f0)) < 1e-12 * (1.0 + np.max(np.abs(a) + np.abs(b) + np.abs(c))):
        raise OnSingularLocus("sample lies on the zero set of f_t")
    dplus = h * (a * (2.0 * u + h) + b)
    dminus = -h * (a * (2.0 * u - h) + b)
    if np.min(np.minimum(dplus / f0, dminus / f0)) <= -1.0 + 1e-12:
        raise OnSingularLocus("sample stencil crosses the zero set of f_t")
    g0 = np.abs(f0) ** weight
    inc_plus = g0 * np.expm1(weight * np.log1p(dplus / f0))
    inc_minus = g0 * np.expm1(weight * np.log1p(dminus / f0))
    flux = (
        _lame_cubic(t, u + h / 2) * inc_plus + _lame_cubic(t, u - h / 2) * inc_minus
    ) / h**2
    return flux + u * g0, g0


def kernel_oper_identity_check(t: float, x: float, samples, step: float = 1e-4, weight: float = -0.5) -> float:
    """Max normalized residual of (L_y - L_z) |f_t(x, y, z)|^weight over
    the samples, with L the Lame flux operator in its variable.

    The residual vanishes (to discretization error) exactly at the
    half-power weight -1/2; any other weight is a negative control.
    Samples must avoid the zero set of f_t.  Swapping y and z in a sample
    swaps the two operator values, so the returned maximum is exactly
    symmetric.
    """
    pts = np.asarray([(float(y), float(z)) for (y, z) in samples], dtype=float)
    ys, zs = pts[:, 0], pts[:, 1]
    ly, gy = _flux_op_on_power(t, x, ys, zs, step, weight)
    lz, gz = _flux_op_on_power(t, x, zs, ys, step, weight)
    scale = np.abs(ly) + np.abs(lz) + 0.5 * (gy + gz) + 1e-300
    return float(np.max(np.abs(ly - lz) / scale))


def lame_residual(t: float, lam: float, z, psi, window=None) -> float:
    """Relative residual of the eigenequation (L - lam) psi = 0 on a
    uniform grid, L = d/dz z(z-1)(z-t) d/dz + z in flux form.

    ``window`` restricts the scored nodes (boolean mask or index pair);
    the default keeps interior nodes a few steps away from 0, 1 and t.
    For constant psi the flux term drops out exactly and the result is 1.
    """
    z = np.asarray(z, dtype=float)
    psi = np.asarray(psi, dtype=float)
    if z.shape != psi.shape or z.ndim != 1 or len(z) < 5:
        raise ValueError("need matching one-dimensional grids of length >= 5")
    h = z[1] - z[0]
    if np.max(np.abs(np.diff(z) - h)) > 1e-9 * abs(h):
        raise ValueError("grid must be uniform")
    flux = (
        _lame_cubic(t, z[1:-1] + h / 2) * (psi[2:] - psi[1:-1])
        - _lame_cubic(t, z[1:-1] - h / 2) * (psi[1:-1] - psi[:-2])
    ) / h**2
    zeroth = (z[1:-1] - lam) * psi[1:-1]
    if window is None:
        keep = np.ones(len(z) - 2, dtype=bool)
        for s in (0.0, 1.0, float(t)):
            keep &= np.abs(z[1:-1] - s) > 5 * abs(h)
    elif isinstance(window, tuple):
        keep = np.zeros(len(z) - 2, dtype=bool)
        lo, hi = window
        keep[max(lo - 1, 0) : max(hi - 1, 0)] = True
    else:
        keep = np.asarray(window, dtype=bool)[1:-1]
    if not np.any(keep):
        raise ValueError("window keeps no interior nodes")
    resid = np.linalg.norm(flux[keep] + zeroth[keep])
    scale = np.linalg.norm(flux[keep]) + np.linalg.norm(zeroth[keep]) + 1e-300
    return float(resid / scale)
