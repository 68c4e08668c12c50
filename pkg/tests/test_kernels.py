"""Chart-level kernel algebra: the symmetric polynomial, modifications, integrals."""

import math
import random
from fractions import Fraction

import pytest

from heckelab.errors import (
    InterpolationDegenerate,
    OnSingularLocus,
    PoleAtParabolicLine,
    TraceDivergent,
)
from heckelab.kernels import (
    ParabolicConfig,
    cauchy_jacobi,
    correspondence_factor,
    elliptic_E,
    elliptic_Eplus,
    hecke_mod_point,
    involution_S,
    kernel_4pt,
    kontsevich_f,
    kontsevich_f_p1,
    l33_check,
    nu_weight,
    pd_identity,
    product_mod_point,
    regularized_trace,
    wobbly_membership,
)
from heckelab.localfield import complex_field, padic_field, real_field

R = real_field()
C = complex_field()
Q5 = padic_field(5)

INF = float("inf")


def rand_rational(rng, span=40):
    return Fraction(rng.randint(-span, span), rng.randint(1, 12))


# ---------------------------------------------------------------------------
# the symmetric polynomial and its quadratic structure


def test_kontsevich_s3_symmetry():
    rng = random.Random(8101)
    for _ in range(1000):
        t, x, y, z = (rand_rational(rng) for _ in range(4))
        f = kontsevich_f(t, x, y, z)
        assert f == kontsevich_f(t, y, x, z)
        assert f == kontsevich_f(t, z, y, x)
        assert f == kontsevich_f(t, x, z, y)


def test_kontsevich_degenerate_closed_forms():
    rng = random.Random(8102)
    for _ in range(300):
        t, x, y, z = (rand_rational(rng) for _ in range(4))
        assert kontsevich_f(t, x, 0, 0) == t * t
        assert kontsevich_f(t, x, 1, 1) == (t - 1) ** 2
        assert kontsevich_f(t, x, t, t) == t * t * (t - 1) ** 2
        assert kontsevich_f(t, x, 0, 1) == (x - t) ** 2
        assert kontsevich_f(t, x, 0, t) == t * t * (x - 1) ** 2
        assert kontsevich_f(t, x, 1, t) == (t - 1) ** 2 * x * x
        assert kontsevich_f(t, 0, y, z) == (t - y * z) ** 2
        assert kontsevich_f(t, 1, y, z) == (y + z - t - y * z) ** 2
        assert kontsevich_f(t, t, y, z) == (t * y + t * z - t - y * z) ** 2


def test_kontsevich_alternative_form():
    # (xy+xz+yz-t)^2 + 4(1+t-x-y-z)xyz is the same polynomial
    rng = random.Random(8103)
    for _ in range(500):
        t, x, y, z = (rand_rational(rng) for _ in range(4))
        alt = (x * y + x * z + y * z - t) ** 2 + 4 * (1 + t - x - y - z) * x * y * z
        assert kontsevich_f(t, x, y, z) == alt


def test_kontsevich_p1_infinity_rules():
    assert kontsevich_f_p1(2.0, INF, 3.0, 5.0) == 4.0
    assert kontsevich_f_p1(2.0, 3.0, INF, 5.0) == 4.0
    assert kontsevich_f_p1(2.0, 3.0, 5.0, INF) == 4.0
    assert kontsevich_f_p1(2.0, INF, INF, 5.0) == 1
    assert kontsevich_f_p1(2.0, INF, 3.0, INF) == 1
    assert kontsevich_f_p1(2.0, INF, INF, INF) == 1
    assert kontsevich_f_p1(2.0, 3.0, 4.0, 5.0) == kontsevich_f(2.0, 3.0, 4.0, 5.0)


def test_pd_identity_exact():
    rng = random.Random(8104)
    for _ in range(2000):
        t, x, y, z = (rand_rational(rng) for _ in range(4))
        p_val, d_val, res = pd_identity(t, x, y, z)
        assert res == 0
        assert 4 * (y - z) ** 2 * kontsevich_f(t, x, y, z) == 4 * p_val**2 - d_val


def test_pd_matches_quadratic_in_x():
    # f = A x^2 + B x + C with A = (y-z)^2; P = A x + B/2 and D = B^2 - 4AC
    rng = random.Random(8105)
    for _ in range(500):
        t, x, y, z = (rand_rational(rng) for _ in range(4))
        a = (y - z) ** 2
        b = 2 * (2 * (1 + t) * y * z - (y + z) * (t + y * z))
        c = (t - y * z) ** 2
        assert kontsevich_f(t, x, y, z) == a * x * x + b * x + c
        p_val, d_val, _ = pd_identity(t, x, y, z)
        assert p_val == a * x + b / 2
        assert d_val == b * b - 4 * a * c


# ---------------------------------------------------------------------------
# correspondence factors and involutions


def test_correspondence_factors_square_the_fiber():
    rng = random.Random(8106)
    for _ in range(300):
        t, y, z = (rand_rational(rng) for _ in range(3))
        for i, ti in enumerate((Fraction(0), t, Fraction(1))):
            h = correspondence_factor(i, t, y, z)
            assert kontsevich_f(t, ti, y, z) == h * h
    with pytest.raises(ValueError):
        correspondence_factor(3, Fraction(2), Fraction(1), Fraction(1))


def test_correspondence_factor_vanishes_on_involution_graph():
    rng = random.Random(8107)
    cfg = ParabolicConfig.four_point(Fraction(7, 3))
    for _ in range(300):
        y = rand_rational(rng)
        for i in range(3):
            try:
                z = involution_S(i, cfg, y)
            except Exception:
                continue
            assert correspondence_factor(i, Fraction(7, 3), y, z) == 0


def test_four_point_involutions_klein_four():
    rng = random.Random(8108)
    cfg = ParabolicConfig.four_point(Fraction(7, 3))
    for _ in range(400):
        y = rand_rational(rng)
        try:
            y0 = involution_S(0, cfg, y)
            y1 = involution_S(1, cfg, y)
            y2 = involution_S(2, cfg, y)
            assert involution_S(0, cfg, y0) == y
            assert involution_S(1, cfg, y1) == y
            assert involution_S(2, cfg, y2) == y
            assert involution_S(3, cfg, y) == y
            assert involution_S(0, cfg, y1) == involution_S(1, cfg, y0) == y2
        except Exception:
            continue


def test_vector_chart_involutions():
    cfg = ParabolicConfig((Fraction(0), Fraction(2), Fraction(5)))
    rng = random.Random(8109)
    for _ in range(300):
        yv = (rand_rational(rng), rand_rational(rng))
        try:
            s0 = involution_S(0, cfg, yv)
            assert involution_S(0, cfg, s0) == yv
        except Exception:
            pass
        for i in (1, 2):
            try:
                si = involution_S(i, cfg, yv)
            except Exception:
                continue
            assert si[i - 1] == cfg.t[i]
        assert involution_S(cfg.m + 1, cfg, yv) == yv


# ---------------------------------------------------------------------------
# modification maps


def test_hecke_mod_point_charts():
    cfg = ParabolicConfig((Fraction(0), Fraction(2), Fraction(5)))
    rng = random.Random(8110)
    for _ in range(300):
        x, s = rand_rational(rng), rand_rational(rng)
        yv = (rand_rational(rng), rand_rational(rng), rand_rational(rng))
        if any(s == yi for yi in yv):
            continue
        zt = hecke_mod_point(cfg, x, yv, s, translation_symmetric=True)
        assert zt == tuple((ti - x) / (s - yi) for ti, yi in zip(cfg.t, yv))
        zp = hecke_mod_point(cfg, x, yv[1:], s)
        assert zp == tuple(
            (ti * s - x * yi) / (s - yi) for ti, yi in zip(cfg.t[1:], yv[1:])
        )


def test_hecke_mod_point_pole():
    cfg = ParabolicConfig((Fraction(0), Fraction(2), Fraction(5)))
    with pytest.raises(PoleAtParabolicLine):
        hecke_mod_point(cfg, Fraction(1), (Fraction(3), Fraction(1)), Fraction(3))


def test_product_n1_is_translation_symmetric_modification():
    cfg = ParabolicConfig((Fraction(0), Fraction(2), Fraction(5)))
    rng = random.Random(8111)
    checked = 0
    for _ in range(300):
        x, s = rand_rational(rng), rand_rational(rng)
        yv = tuple(rand_rational(rng) for _ in range(3))
        if any(s == yi for yi in yv):
            continue
        zv, w = product_mod_point((x,), (s,), cfg, yv)
        assert zv == hecke_mod_point(cfg, x, yv, s, translation_symmetric=True)
        den = math.prod(float(s - yi) for yi in yv)
        assert w == pytest.approx(1.0 / abs(den), rel=1e-12)
        checked += 1
    assert checked > 200


def test_product_n2_swap_invariance():
    cfg = ParabolicConfig((Fraction(0), Fraction(2), Fraction(5)))
    rng = random.Random(8112)
    checked = 0
    for _ in range(300):
        x1, x2, s1, s2 = (rand_rational(rng) for _ in range(4))
        yv = tuple(rand_rational(rng) for _ in range(3))
        try:
            z12, w12 = product_mod_point((x1, x2), (s1, s2), cfg, yv)
            z21, w21 = product_mod_point((x2, x1), (s2, s1), cfg, yv)
        except (InterpolationDegenerate, PoleAtParabolicLine):
            continue
        assert z12 == z21 and w12 == w21
        checked += 1
    assert checked > 200


def test_product_n2_composes_two_elementary_modifications():
    # applying the x2 modification (variable s2), then the x1 modification at
    # the composite variable (x2-x1)/(s1-s2), lands on the n=2 image up to one
    # common affine map, which is invisible to the weight measure
    cfg = ParabolicConfig((Fraction(0), Fraction(2), Fraction(5)))
    rng = random.Random(8113)
    checked = 0
    for _ in range(500):
        x1, x2, s1, s2 = (rand_rational(rng) for _ in range(4))
        yv = tuple(rand_rational(rng) for _ in range(3))
        try:
            zv, _ = product_mod_point((x1, x2), (s1, s2), cfg, yv)
            sp = (x2 - x1) / (s1 - s2)
            mid = hecke_mod_point(cfg, x2, yv, s2, translation_symmetric=True)
            out = hecke_mod_point(cfg, x1, mid, sp, translation_symmetric=True)
        except (InterpolationDegenerate, PoleAtParabolicLine, ZeroDivisionError):
            continue
        dz = [zv[i] - zv[0] for i in (1, 2)]
        do = [out[i] - out[0] for i in (1, 2)]
        if do[0] == 0 or dz[0] == 0:
            continue
        ratio = dz[0] / do[0]
        assert dz[1] == ratio * do[1]
        checked += 1
    assert checked > 200


def test_product_n2_weight_formula():
    cfg = ParabolicConfig((Fraction(0), Fraction(2), Fraction(5)))
    rng = random.Random(8114)
    checked = 0
    for _ in range(300):
        x1, x2, s1, s2 = (rand_rational(rng) for _ in range(4))
        yv = tuple(rand_rational(rng) for _ in range(3))
        try:
            _, w = product_mod_point((x1, x2), (s1, s2), cfg, yv)
        except (InterpolationDegenerate, PoleAtParabolicLine):
            continue
        dt = s1 - s2
        d1 = (s1 * x2 - s2 * x1) / dt
        q1 = (x1 - x2) / dt
        dens = [(ti - d1) - q1 * yi for ti, yi in zip(cfg.t, yv)]
        if any(d == 0 for d in dens):
            continue
        want = abs(float((x1 - x2) / (dt * dt * math.prod(dens))))
        assert w == pytest.approx(want, rel=1e-12)
        checked += 1
    assert checked > 150


def test_product_rejects_unimplemented_rank():
    cfg = ParabolicConfig((Fraction(0), Fraction(2), Fraction(5)))
    with pytest.raises(ValueError):
        product_mod_point(
            (Fraction(1), Fraction(2), Fraction(3)),
            (Fraction(4), Fraction(5), Fraction(6)),
            cfg,
            (Fraction(1), Fraction(2), Fraction(3)),
        )


# ---------------------------------------------------------------------------
# interpolation and the wobbly locus


def _random_rational_map(rng, deg):
    num = [rand_rational(rng) for _ in range(deg + 1)]
    den = [rand_rational(rng) for _ in range(deg + 1)]
    if den[-1] == 0:
        den[-1] = Fraction(1)

    def f(w):
        n = sum(cc * w**i for i, cc in enumerate(num))
        d = sum(cc * w**i for i, cc in enumerate(den))
        return n / d

    return f


def test_cauchy_jacobi_round_trip():
    rng = random.Random(8115)
    for deg in (1, 2):
        done = 0
        while done < 50:
            f = _random_rational_map(rng, deg)
            xs, ss = [], []
            tries = 0
            while len(xs) < 2 * deg + 1 and tries < 400:
                tries += 1
                w = rand_rational(rng)
                if w in xs:
                    continue
                try:
                    val = f(w)
                except ZeroDivisionError:
                    continue
                xs.append(w)
                ss.append(val)
            if len(xs) < 2 * deg + 1:
                continue
            w0 = rand_rational(rng)
            try:
                want = f(w0)
            except ZeroDivisionError:
                continue
            try:
                got = cauchy_jacobi(tuple(xs), tuple(ss), w0)
            except InterpolationDegenerate:
                continue
            assert got == want
            done += 1


def test_cauchy_jacobi_at_node_returns_sample():
    xs = (Fraction(0), Fraction(1), Fraction(2))
    ss = (Fraction(5), Fraction(7), Fraction(11))
    assert cauchy_jacobi(xs, ss, Fraction(1)) == Fraction(7)


def test_cauchy_jacobi_needs_odd_count():
    with pytest.raises(ValueError):
        cauchy_jacobi((Fraction(0), Fraction(1)), (Fraction(1), Fraction(2)), Fraction(3))


def test_wobbly_pairs_detect_equal_coordinates():
    cfg = ParabolicConfig((Fraction(0), Fraction(2), Fraction(5), Fraction(9)))
    rng = random.Random(8116)
    for _ in range(200):
        yv = tuple(rand_rational(rng) for _ in range(4))
        for i in range(4):
            for j in range(i + 1, 4):
                on, _ = wobbly_membership(cfg, yv, (i, j))
                assert on == (yv[i] == yv[j])


def test_wobbly_quadruple_rational_section():
    # y_i = a(t_i)/b(t_i) for a degree-1 pencil makes every 4-subset wobbly
    cfg = ParabolicConfig((Fraction(0), Fraction(2), Fraction(5), Fraction(9)))
    a0, a1, b0, b1 = Fraction(3), Fraction(2), Fraction(7), Fraction(1)
    yv = tuple((a0 + a1 * ti) / (b0 + b1 * ti) for ti in cfg.t)
    on, res = wobbly_membership(cfg, yv, (0, 1, 2, 3))
    assert on and res == 0
    bent = (yv[0] + 1,) + yv[1:]
    on2, res2 = wobbly_membership(cfg, bent, (0, 1, 2, 3))
    assert not on2 and res2 != 0


def test_wobbly_validates_subset():
    cfg = ParabolicConfig((Fraction(0), Fraction(2), Fraction(5)))
    yv = (Fraction(1), Fraction(2), Fraction(3))
    with pytest.raises(ValueError):
        wobbly_membership(cfg, yv, (0,))
    with pytest.raises(ValueError):
        wobbly_membership(cfg, yv, (0, 0))


# ---------------------------------------------------------------------------
# pointwise kernels and weights


def test_kernel_4pt_values():
    # real: 2/sqrt(f) on positive f, 0 on negative
    t, x, y, z = 3.0, 1.0, 2.0, 5.0
    f = kontsevich_f(t, x, y, z)
    assert f == 36.0
    assert kernel_4pt(R, t, x, y, z) == pytest.approx(2.0 / 6.0)
    assert kernel_4pt(R, 0.25, 0.5, -0.3, 0.9) == 0.0 or kontsevich_f(
        0.25, 0.5, -0.3, 0.9
    ) >= 0
    # complex: norm is |f|^2, so the kernel is 2/|f|
    assert kernel_4pt(C, t, x, y, z) == pytest.approx(2.0 / 36.0)
    # Q5: f_2(3,4,6) = -704 = 1 mod 5 is a unit square, f_4(2,3,7) = 193 is not
    assert kernel_4pt(Q5, 2, 3, 4, 6) == 2.0
    assert kernel_4pt(Q5, 4, 2, 3, 7) == 0.0


def test_kernel_4pt_singular_locus():
    # f_3(0, y, z) = (3 - yz)^2 vanishes at z = 3/y
    with pytest.raises(OnSingularLocus):
        kernel_4pt(R, 3.0, 0.0, 2.0, 1.5)


def test_nu_weight_moebius_invariance():
    rng = random.Random(8117)
    checked = 0
    for _ in range(500):
        x = rng.uniform(-5, 5)
        s = rng.uniform(-5, 5)
        if min(abs(s - x), abs(s), abs(s - 1)) < 1e-3:
            continue
        image = x * (s - 1) / (s - x)
        jac = abs(x * (1 - x) / (s - x) ** 2)
        if min(abs(image), abs(image - 1), abs(image - x)) < 1e-6:
            continue
        lhs = nu_weight(R, x, image) * jac
        rhs = nu_weight(R, x, s)
        assert lhs == pytest.approx(rhs, rel=1e-9)
        checked += 1
    assert checked > 300


# ---------------------------------------------------------------------------
# integral identities


def test_l33_real():
    for b in (10.0, math.e**2, 0.1):
        got = l33_check(R, b, cutoff=1.0e4)
        assert got == pytest.approx(-math.log(abs(b)), abs=1.0e-3)


def test_l33_complex():
    b = 2.0 + 1.0j
    got = l33_check(C, b, cutoff=1.0e3)
    assert got == pytest.approx(-2.0 * math.log(abs(b)), abs=1.0e-2)


def test_l33_padic():
    # -log||b|| = log 5 at b = 5; b = 1 exercises the singular shell exactly
    assert l33_check(Q5, 5, cutoff=5**6) == pytest.approx(math.log(5), abs=1e-9)
    assert l33_check(Q5, 1, cutoff=5**6) == pytest.approx(0.0, abs=1e-9)
    assert l33_check(Q5, Fraction(1, 5), cutoff=5**6) == pytest.approx(
        -math.log(5), abs=1e-9
    )
    with pytest.raises(ValueError):
        l33_check(Q5, 0, cutoff=5**6)


def test_elliptic_real_functional_equations():
    for x in (0.3, 0.07, 2.5, -1.7):
        e1 = elliptic_E(R, x)
        assert elliptic_E(R, 1.0 - x) == pytest.approx(e1, rel=1e-6)
        assert elliptic_E(R, 1.0 / x) == pytest.approx(
            math.sqrt(abs(x)) * e1, rel=1e-5
        )


def test_elliptic_complex_symmetries():
    e1 = elliptic_E(C, 0.3 + 0.0j)
    assert e1 > 0
    assert elliptic_E(C, 0.7 + 0.0j) == pytest.approx(e1, rel=1e-6)
    e3 = elliptic_E(C, 0.3 + 0.4j)
    assert elliptic_E(C, 0.7 - 0.4j) == pytest.approx(e3, rel=1e-6)


def test_elliptic_padic_unit_parameter_value():
    # for ||x|| = ||1-x|| = 1 the closed form is the x-independent constant
    base = (1 + 4 * 5**-0.5 + 1 / 5) / (1 - 1 / 5) * math.log(5)
    assert elliptic_E(Q5, 3) == pytest.approx(base, rel=1e-12)
    # one step into the cusp adds log q per valuation unit
    assert elliptic_E(Q5, 15) == pytest.approx(base + math.log(5), rel=1e-12)
    assert elliptic_E(Q5, 16) == pytest.approx(base + math.log(5), rel=1e-12)
    # E(x) = E(1/x)/sqrt||x||, so a large parameter damps by the root norm
    assert elliptic_E(Q5, Fraction(3, 25)) == pytest.approx(
        (base + 2 * math.log(5)) / 5.0, rel=1e-12
    )


def test_elliptic_eplus_bounds():
    ep = elliptic_Eplus(R, 0.3)
    assert 0.0 < ep <= elliptic_E(R, 0.3) + 1e-12
    assert elliptic_Eplus(C, 0.3 + 0.1j) == pytest.approx(
        2.0 * elliptic_E(C, 0.3 + 0.1j), rel=1e-12
    )
    assert elliptic_Eplus(Q5, 2, depth=6) > 0.0


def test_regularized_trace_finite_and_divergent():
    assert math.isfinite(regularized_trace(R, 0.3, 1.7, cutoff=1.0e4))
    assert math.isfinite(regularized_trace(C, 0.3 + 0.0j, 1.7 + 0.5j, cutoff=1.0e3))
    assert math.isfinite(regularized_trace(Q5, 2, 3, cutoff=5**5))
    with pytest.raises(TraceDivergent):
        regularized_trace(R, 0.3, 0.0, cutoff=1.0e4)
    with pytest.raises(TraceDivergent):
        regularized_trace(Q5, 2, 0, cutoff=5**5)
