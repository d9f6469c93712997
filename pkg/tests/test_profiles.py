"""Tests for the asymptotic profiles and data families.

Golden values marked "mpmath" were computed independently at 30 digits from
the defining integrals (quadrature of the closed forms, not this package).
"""

import io
import math

import numpy as np
import pytest

from kdvb.numerics import Grid1D, RealField, adaptive_quad, gamma, spectral_derivative
from kdvb.profiles import (
    GaussianDatum,
    ModelParams,
    PowerTailDatum,
    SampledDatum,
    TailLimitError,
    V_profile,
    V_star,
    WavePerturbedDatum,
    Window,
    Z_leading_coefficient,
    Z_profile,
    beta_constants,
    chi,
    chi_star,
    chi_star_cumulative,
    constants_report,
    d_constant,
    eta,
    eta_star,
    eta_x,
    make_context,
    make_context_from_datum,
    tail_limits,
    total_mass,
    w0_datum,
    windowed_samples,
    write_profile_csv,
    z0_datum,
)

P_KDVB = ModelParams(b=1.0, c=0.0, k=1.0)


# ---------------------------------------------------------------- chi_star / chi


def test_model_params_reject_zero_b():
    with pytest.raises(ValueError):
        ModelParams(b=0.0)


@pytest.mark.parametrize("b,delta", [(1.0, 1.0), (1.0, -0.5), (-2.0, 0.3)])
def test_chi_star_mass_is_delta(b, delta):
    q = adaptive_quad(lambda y: chi_star(y, b, delta), -np.inf, np.inf, tol=1e-12)
    assert q.value == pytest.approx(delta, abs=1e-8)


def test_chi_star_zero_mass_is_identically_zero():
    xs = np.linspace(-30, 30, 101)
    assert np.all(chi_star(xs, 2.0, 0.0) == 0.0)


def test_chi_star_values_at_zero():
    # mpmath: q/(sqrt(pi) + q*sqrt(pi)/2) at b=1, delta=1
    assert chi_star(0.0, 1.0, 1.0) == pytest.approx(0.27636111628924434, rel=1e-13)


def test_chi_star_gaussian_tail():
    # decays like the Gaussian numerator once the denominator saturates
    assert abs(chi_star(12.0, 1.0, 1.0)) < math.exp(-35.0)
    assert abs(chi_star(12.0, 1.0, 1.0)) > 0.0


def test_chi_star_degenerate_denominator_guard():
    with pytest.raises(ValueError):
        chi_star(np.array([-50.0, 0.0]), 1.0, -3000.0)


def test_chi_self_similarity_exact():
    ctx = make_context(P_KDVB, 1.5, 0.7)
    s = np.array([-3.0, -0.4, 0.0, 1.2, 5.0])
    for t in [0.0, 1.0, 10.0, 100.0]:
        lhs = math.sqrt(1 + t) * np.asarray(chi(s * math.sqrt(1 + t), t, ctx))
        assert np.allclose(lhs, chi_star(s, 1.0, 0.7), rtol=0, atol=1e-15)


def test_chi_mass_conserved_in_time():
    ctx = make_context(P_KDVB, 1.5, 1.0)
    for t in [0.0, 1.0, 10.0, 100.0]:
        q = adaptive_quad(lambda y: chi(y, t, ctx), -np.inf, np.inf, tol=1e-10)
        assert q.value == pytest.approx(1.0, abs=1e-7)


def test_chi_pointwise_gaussian_bound():
    # |chi(x,t)| <= C |delta| (1+t)^{-1/2} e^{-x^2/(4(1+t))} with C fitted at t=0
    delta = 0.8
    ctx = make_context(P_KDVB, 1.5, delta)
    xs = np.linspace(-40, 40, 801)
    C = np.max(np.abs(chi_star(xs, 1.0, delta)) * np.exp(xs**2 / 4.0)) / abs(delta)
    for t in [1.0, 10.0, 100.0]:
        lhs = np.abs(np.asarray(chi(xs, t, ctx)))
        rhs = C * abs(delta) / math.sqrt(1 + t) * np.exp(-(xs**2) / (4 * (1 + t)))
        assert np.all(lhs <= rhs * (1 + 1e-12))


# ---------------------------------------------------------------- eta


@pytest.mark.parametrize("b,delta", [(1.0, 1.0), (1.0, -0.5), (-2.0, 0.3)])
def test_eta_star_closed_form_vs_quadrature(b, delta):
    ctx = make_context(ModelParams(b=b), 1.5, delta)
    for x in [-10.0, -1.0, 0.0, 1.0, 10.0]:
        direct = math.exp(0.5 * b * adaptive_quad(lambda y: chi_star(y, b, delta), -np.inf, x, tol=1e-13).value)
        assert eta_star(x, ctx) == pytest.approx(direct, abs=1e-9)


def test_eta_star_limits_and_bounds():
    b, delta = 1.0, 1.0
    ctx = make_context(ModelParams(b=b), 1.5, delta)
    assert eta_star(-40.0, ctx) == pytest.approx(1.0, abs=1e-12)
    assert eta_star(40.0, ctx) == pytest.approx(math.exp(b * delta / 2), rel=1e-12)
    assert eta_star(0.0, ctx) == pytest.approx(1.2449186624037091, rel=1e-13)  # mpmath
    xs = np.linspace(-50, 50, 401)
    vals = np.asarray(eta(xs, 7.0, ctx))
    assert np.all(vals >= min(1.0, math.exp(b * delta / 2)) - 1e-12)
    assert np.all(vals <= max(1.0, math.exp(b * delta / 2)) + 1e-12)


def test_eta_identity_delta_zero():
    ctx = make_context(P_KDVB, 1.5, 0.0)
    xs = np.linspace(-20, 20, 41)
    assert np.allclose(eta(xs, 3.0, ctx), 1.0, atol=1e-15)


def test_eta_x_matches_finite_difference():
    ctx = make_context(P_KDVB, 1.5, 0.9)
    h = 1e-6
    for x, t in [(-2.0, 0.5), (0.3, 4.0), (7.0, 50.0)]:
        fd = (eta(x + h, t, ctx) - eta(x - h, t, ctx)) / (2 * h)
        assert eta_x(x, t, ctx) == pytest.approx(fd, rel=1e-8, abs=1e-12)


def test_chi_star_cumulative_is_log_eta():
    # (2/b) log eta_star reproduces the quadrature of chi_star
    for x in [-8.0, 0.0, 3.0]:
        ref = adaptive_quad(lambda y: chi_star(y, 1.0, 1.0), -np.inf, x, tol=1e-13).value
        assert chi_star_cumulative(x, 1.0, 1.0) == pytest.approx(ref, abs=1e-10)


# ---------------------------------------------------------------- d and V


def test_d_constant_golden():
    # mpmath 30-digit quadrature of eta_star^{-1} chi_star^3
    assert d_constant(1.0, 1.0) == pytest.approx(0.035742957350659039, rel=1e-9)


def test_d_constant_dual_route():
    d1 = d_constant(1.0, 1.0)
    xs = np.linspace(-60.0, 60.0, 2**15 + 1)
    from kdvb.profiles import _eta_star_raw  # second route: plain trapezoid

    d2 = np.trapezoid(chi_star(xs, 1.0, 1.0) ** 3 / _eta_star_raw(xs, 1.0, 1.0), xs)
    assert d1 == pytest.approx(d2, abs=1e-9)


def test_d_constant_sign_and_zero():
    assert d_constant(1.0, 0.0) == 0.0
    assert d_constant(1.0, 1.0) > 0.0


def test_v_star_dual_form():
    ctx = make_context(P_KDVB, 1.5, 1.0)
    g = Grid1D(60.0, 2048)
    direct = np.asarray(V_star(g.x, ctx))
    other = 2.0 * spectral_derivative(
        RealField(g, np.asarray(eta_star(g.x, ctx)) * np.exp(-g.x**2 / 4.0)), 1
    ).values
    assert np.max(np.abs(direct - other)) <= 1e-8


def test_v_profile_zero_cases():
    xs = np.linspace(-10, 10, 21)
    # b^2 k/8 + c/3 = 0 with k = -8c/(3b^2)
    ctx = make_context(ModelParams(b=1.0, c=3.0, k=-8.0), 1.5, 1.0)
    assert np.all(V_profile(xs, 5.0, ctx) == 0.0)
    ctx0 = make_context(P_KDVB, 1.5, 0.0)
    assert np.all(V_profile(xs, 5.0, ctx0) == 0.0)
    ctx1 = make_context(P_KDVB, 1.5, 1.0)
    assert np.all(V_profile(xs, 0.0, ctx1) == 0.0)  # log(1) = 0


def test_v_profile_finite_difference_oracle():
    ctx = make_context(P_KDVB, 1.5, 1.0)
    t, x = 10.0, 0.0
    s = math.sqrt(1 + t)
    h = 1e-6

    def g(y):
        return eta_star(y, ctx) * math.exp(-(y**2) / 4.0)

    vstar_fd = 2.0 * (g(x / s + h) - g(x / s - h)) / (2 * h)
    coeff = -(ctx.d_const / (4 * math.sqrt(math.pi))) * (1.0 / 8.0)
    assert V_profile(x, t, ctx) == pytest.approx(coeff * vstar_fd * math.log(1 + t) / (1 + t), rel=1e-8)


# ---------------------------------------------------------------- data families


def test_power_tail_mass_golden():
    u0 = PowerTailDatum(0.1, 1.5)
    assert u0.mass() == pytest.approx(0.52441151085842396, rel=1e-13)  # mpmath Beta integral
    assert total_mass(u0) == pytest.approx(u0.mass(), abs=1e-8)


def test_power_tail_mass_second_oracle_doubled_window():
    u0 = PowerTailDatum(0.1, 1.5, 0.3)
    # second route: quadrature over [-X, X] plus exact tail series, X doubled
    for X in (300.0, 600.0):
        core = adaptive_quad(lambda y: u0(y), -X, X, tol=1e-11, points=[0.0]).value
        left, right = u0.tail_mass(X)
        assert left + core + right == pytest.approx(u0.mass(), abs=1e-9)


def test_power_tail_cumulative_matches_quadrature():
    u0 = PowerTailDatum(0.1, 1.2, -0.4)
    for x in [-55.0, -2.0, 0.0, 1.7, 30.0, 2000.0]:
        ref = adaptive_quad(lambda y: u0(y), -np.inf, x, tol=1e-13).value
        assert u0.cumulative(x) == pytest.approx(ref, abs=1e-11)


def test_power_tail_bound_constant():
    u0 = PowerTailDatum(0.1, 1.5, 0.3)
    xs = np.linspace(-200, 200, 4001)
    assert np.all(np.abs(u0(xs)) <= u0.bound_constant * (1 + np.abs(xs)) ** -1.5 + 1e-15)


def test_alpha_out_of_range_rejected():
    with pytest.raises(ValueError):
        PowerTailDatum(0.1, 1.0)
    with pytest.raises(ValueError):
        PowerTailDatum(0.1, 2.5)
    with pytest.raises(ValueError):
        WavePerturbedDatum(b=1.0, delta=0.5, zc=0.1, alpha=0.9)


def test_gaussian_mass():
    u0 = GaussianDatum(0.25)
    assert u0.mass() == pytest.approx(0.5 * math.sqrt(math.pi), rel=1e-14)  # 2 A sqrt(pi)
    assert total_mass(u0) == pytest.approx(u0.mass(), abs=1e-9)
    assert u0.cumulative(0.0) == pytest.approx(u0.mass() / 2, rel=1e-13)


def test_zero_datum_mass():
    u0 = GaussianDatum(0.0)
    assert total_mass(u0) == 0.0


def test_wave_perturbed_mass_and_cumulative():
    u0 = WavePerturbedDatum(b=1.0, delta=0.5, zc=0.1, alpha=2.0)
    assert u0.mass() == 0.5
    assert total_mass(u0) == pytest.approx(0.5, abs=1e-8)
    for x in [-10.0, 0.0, 4.0]:
        ref = adaptive_quad(lambda y: u0(y), -np.inf, x, tol=1e-12).value
        assert u0.cumulative(x) == pytest.approx(ref, abs=1e-9)


def test_sampled_datum_against_closed_form():
    closed = PowerTailDatum(0.1, 1.5, 0.3)
    g = Grid1D(400.0, 8192)
    s = SampledDatum(g, np.asarray(closed(g.x)), alpha=1.5)
    assert s.mass() == pytest.approx(closed.mass(), rel=2e-4)
    for x in [-100.0, 0.0, 50.0]:
        assert s.cumulative(x) == pytest.approx(float(closed.cumulative(x)), abs=2e-4)


# ---------------------------------------------------------------- window


def test_window_regions():
    w = Window()
    g = Grid1D(100.0, 1024)
    f = w.factor(g.x, 100.0)
    inner = np.abs(g.x) <= 90.0
    outer = np.abs(g.x) >= 98.0
    assert np.all(f[inner] == 1.0)
    assert np.all(f[outer] == 0.0)
    assert np.all((f >= 0.0) & (f <= 1.0))


def test_window_validation():
    with pytest.raises(ValueError):
        Window(inner=0.99, outer=0.98)


def test_windowed_samples_mass_close_to_line_integral():
    u0 = PowerTailDatum(0.1, 1.5, 0.3)
    g = Grid1D(400.0, 2**13)
    fld, dw = windowed_samples(u0, g)
    assert fld.values[0] == 0.0 and fld.values[-1] == 0.0
    # truncation removes only the O(L^{1-alpha}) tail
    assert abs(dw - u0.mass()) < 2 * u0.bound_constant * 360.0**-0.5 / 0.5


# ---------------------------------------------------------------- w0 / z0 / tail limits


def test_w0_z0_vanish_for_exact_wave():
    u0 = WavePerturbedDatum(b=1.0, delta=0.5, zc=0.0)
    ctx = make_context(P_KDVB, 2.0, 0.5)
    xs = np.linspace(-30, 30, 61)
    assert np.max(np.abs(w0_datum(u0, ctx, xs))) < 1e-14
    assert np.max(np.abs(z0_datum(u0, ctx, xs))) < 1e-14


def test_w0_z0_decay_at_plus_infinity():
    u0 = PowerTailDatum(0.1, 1.5, 0.3)
    ctx = make_context_from_datum(P_KDVB, u0)
    ws = np.abs(np.asarray(w0_datum(u0, ctx, np.array([50.0, 200.0, 800.0]))))
    zs = np.abs(np.asarray(z0_datum(u0, ctx, np.array([50.0, 200.0, 800.0]))))
    assert np.all(np.diff(ws) < 0) and ws[-1] < 1e-2
    assert np.all(np.diff(zs) < 0) and zs[-1] < 1e-2


def test_z0_tail_stabilization():
    u0 = PowerTailDatum(0.1, 1.5)
    ctx = make_context_from_datum(P_KDVB, u0)
    a = float(z0_datum(u0, ctx, 10.0)) * 11.0**0.5
    b = float(z0_datum(u0, ctx, 40.0)) * 41.0**0.5
    assert abs(a - b) <= 0.1 * abs(b)


def test_wave_perturbed_z0_is_exact_power():
    u0 = WavePerturbedDatum(b=1.0, delta=0.5, zc=0.1, alpha=2.0)
    ctx = make_context(P_KDVB, 2.0, 0.5)
    xs = np.array([-40.0, -3.0, 0.0, 5.0, 80.0])
    assert np.max(np.abs(np.asarray(z0_datum(u0, ctx, xs)) - 0.1 * (1 + xs**2) ** -0.5)) < 1e-14


def test_tail_limits_power_datum_match_analytic():
    # closed-form limits: c+ = -A(1+eps) e^{-b delta/2}/(alpha-1), c- = A(1-eps)/(alpha-1)
    A, eps, alpha = 0.1, 0.3, 1.5
    u0 = PowerTailDatum(A, alpha, eps)
    ctx = make_context(P_KDVB, alpha, u0.mass())
    lim = tail_limits(lambda xs: np.asarray(z0_datum(u0, ctx, xs)), alpha, 800.0)
    cp = -(A * (1 + eps)) / ((alpha - 1) * math.exp(0.5 * u0.mass()))
    cm = (A * (1 - eps)) / (alpha - 1)
    assert lim.c_plus == pytest.approx(cp, rel=1e-4)
    assert lim.c_minus == pytest.approx(cm, rel=1e-4)
    assert lim.error < 5e-3


def test_tail_limits_zero_for_exact_wave():
    u0 = WavePerturbedDatum(b=1.0, delta=0.5, zc=0.0)
    ctx = make_context(P_KDVB, 2.0, 0.5)
    lim = tail_limits(lambda xs: np.asarray(z0_datum(u0, ctx, xs)), 2.0, 400.0)
    assert lim.c_plus == 0.0 and lim.c_minus == 0.0


def test_tail_limits_compact_odd_bump_gives_zero():
    # u0 = chi_star + odd bump supported in [-1, 1]: the cumulative of the
    # difference has compact support, so both limits vanish.
    ctx = make_context(P_KDVB, 1.5, 0.5)

    def z0(xs):
        xs = np.asarray(xs)
        cum = np.where(np.abs(xs) < 1.0, np.sin(np.pi * xs) ** 2 * np.sign(xs) * 0.01, 0.0)
        return cum / np.asarray(eta_star(xs, ctx))

    lim = tail_limits(z0, 1.5, 400.0)
    assert lim.c_plus == 0.0 and lim.c_minus == 0.0


def test_tail_limits_nonstabilizing_raises():
    z0 = lambda xs: (1.0 + np.abs(xs)) ** -0.5 * (2.0 + np.sin(np.asarray(xs) / 3.0))  # noqa: E731
    with pytest.raises(TailLimitError):
        tail_limits(z0, 1.5, 400.0)


# ---------------------------------------------------------------- Z profile


def test_z_profile_zero_when_no_tails():
    ctx = make_context(P_KDVB, 1.5, 0.5)
    xs = np.linspace(-5, 5, 11)
    assert np.all(Z_profile(xs, 3.0, ctx) == 0.0)


def test_z_profile_rejects_nonpositive_time():
    ctx = make_context(P_KDVB, 1.5, 0.5, c_plus=1.0)
    with pytest.raises(ValueError):
        Z_profile(0.0, 0.0, ctx)
    with pytest.raises(ValueError):
        Z_profile(0.0, -2.0, ctx)


def test_z_profile_against_direct_quadrature():
    # brute-force oracle for the product-rule + heat_convolve decomposition
    ctx = make_context(P_KDVB, 1.5, 0.5, c_plus=-0.2, c_minus=0.14)
    rng = np.random.default_rng(5)
    from kdvb.profiles import eta as eta_fn, eta_x as eta_x_fn

    for _ in range(5):
        x = float(rng.uniform(-5, 5))
        t = float(rng.uniform(0.5, 20.0))
        ex, ee = float(eta_x_fn(x, t, ctx)), float(eta_fn(x, t, ctx))

        def integrand(y):
            cy = ctx.c_plus if y >= 0 else ctx.c_minus
            G = math.exp(-((x - y) ** 2) / (4 * t)) / math.sqrt(4 * math.pi * t)
            dG = -(x - y) / (2 * t) * G
            return cy * (1 + abs(y)) ** (-0.5) * (ex * G + ee * dG)

        ref = (
            adaptive_quad(integrand, -np.inf, 0.0, tol=1e-11).value
            + adaptive_quad(integrand, 0.0, np.inf, tol=1e-11).value
        )
        assert float(Z_profile(x, t, ctx)) == pytest.approx(ref, abs=1e-7)


def test_z_profile_leading_term_at_large_time():
    # with delta=0 (eta == 1) and c+ = -c- = 1 the x=0 value approaches
    # (c+ - c-)/(4 sqrt(pi)) 2^{2-alpha} Gamma((3-alpha)/2) t^{-alpha/2}
    ctx = make_context(P_KDVB, 1.5, 0.0, c_plus=1.0, c_minus=-1.0)
    t = 1e4
    lead = 2.0 / (4 * math.sqrt(math.pi)) * 2**0.5 * gamma(0.75) * t**-0.75
    assert float(Z_profile(0.0, t, ctx, tol=1e-10)) == pytest.approx(lead, rel=0.03)


# ---------------------------------------------------------------- constants


def test_beta0_direct_substitution():
    ctx = make_context(P_KDVB, 1.5, 0.0, c_plus=1.0, c_minus=-1.0)
    beta0, beta1 = beta_constants(ctx)
    assert beta0 == pytest.approx(2.4508334049303553, rel=1e-12)  # 2 Gamma(0.75), mpmath
    assert beta1 == pytest.approx(-d_constant(1.0, 0.0) * (1 / 8), abs=1e-15)  # = 0


def test_beta1_d_term_drops_without_dispersion():
    ctx = make_context(ModelParams(b=1.0, c=0.0, k=0.0), 1.5, 1.0, c_plus=1.0, c_minus=1.0)
    assert ctx.beta1 == pytest.approx(1.0, abs=1e-15)


def test_beta_zero_inputs():
    ctx = make_context(ModelParams(b=1.0, c=3.0, k=-8.0), 1.5, 1.0)  # b^2k/8 + c/3 = 0
    assert ctx.beta0 == 0.0 and ctx.beta1 == 0.0


def test_beta0_refused_at_alpha_two():
    ctx = make_context(P_KDVB, 2.0, 0.5, c_plus=0.1, c_minus=0.1)
    assert ctx.beta0 is None
    with pytest.raises(ValueError, match="beta1"):
        beta_constants(ctx)


def test_z_leading_coefficient_example():
    ctx = make_context(P_KDVB, 1.5, 0.0, c_plus=1.0, c_minus=-1.0)
    assert Z_leading_coefficient(ctx) == pytest.approx(0.4888705337234619, rel=1e-12)  # mpmath
    ctx0 = make_context(P_KDVB, 1.5, 0.5)
    assert Z_leading_coefficient(ctx0) == 0.0


def test_make_context_from_datum_roundtrip():
    u0 = WavePerturbedDatum(b=1.0, delta=0.5, zc=0.1, alpha=2.0)
    ctx = make_context_from_datum(ModelParams(b=1.0, c=0.0, k=1.0), u0)
    assert ctx.delta == pytest.approx(0.5, abs=1e-8)
    assert ctx.c_plus == pytest.approx(0.1, rel=1e-4)
    assert ctx.c_minus == pytest.approx(0.1, rel=1e-4)
    assert ctx.small_mass


# ---------------------------------------------------------------- reports


def test_constants_report_keys():
    ctx = make_context(P_KDVB, 1.5, 0.5, c_plus=0.1, c_minus=-0.2)
    text = constants_report(ctx)
    for key in ("delta=", "d=", "beta0=", "beta1=", "c_plus=", "c_minus=", "chi_star_0=", "eta_star_0="):
        assert key in text
    ctx2 = make_context(P_KDVB, 2.0, 0.5, c_plus=0.1, c_minus=0.1)
    assert "beta0=undefined" in constants_report(ctx2)


def test_write_profile_csv(tmp_path):
    ctx = make_context(P_KDVB, 1.5, 0.5, c_plus=0.1, c_minus=-0.2)
    path = tmp_path / "profiles.csv"
    xs = np.linspace(-5, 5, 9)
    write_profile_csv(path, ctx, [0.0, 2.0], xs, header_lines=("alpha=1.5",))
    lines = path.read_text().splitlines()
    assert lines[0] == "# alpha=1.5"
    assert lines[1] == "t,x,chi,eta,V,Z"
    assert len(lines) == 2 + 2 * 9
    row = lines[2].split(",")
    assert float(row[0]) == 0.0 and float(row[1]) == -5.0
