import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from acdyn import analysis as an
from acdyn.analysis import PeakCase, Regime
from acdyn.integrator import IntegrationOptions, integrate
from acdyn.models import AsirParams, AsirState, AsisParams, asir_rhs, asis_field, asis_rhs


def endemic_params():
    """Random A-SIS parameters strictly inside the endemic regime."""
    return st.builds(
        AsisParams,
        beta=st.floats(0.2, 2.0),
        beta_a=st.floats(0.01, 2.0),
        alpha=st.floats(0.01, 0.5),
        x_a=st.floats(0.01, 0.99),
    ).filter(lambda p: an.spectral(p).lambda_plus > 1e-3)


# --- spectrum and regimes ------------------------------------------------------


def test_spectral_examples(ife_case, endemic_case):
    s2, s3 = an.spectral(ife_case), an.spectral(endemic_case)
    assert s2.lambda_plus == pytest.approx(-0.01, abs=1e-15)
    assert s2.lambda_minus == pytest.approx(-0.31, abs=1e-15)
    assert s3.lambda_plus == pytest.approx(0.144, abs=1e-15)
    assert s3.lambda_minus == pytest.approx(-0.156, abs=1e-15)
    p = AsisParams(0.3, 0.5, 0.1, 0.0)
    assert an.spectral(p).lambda_plus == pytest.approx(0.2)


def test_classify_examples(ife_case, endemic_case):
    r2 = an.classify(ife_case)
    assert r2.regime is Regime.IFE_GAS and r2.limiting_infected == 0.0 and r2.endemic is None
    r3 = an.classify(endemic_case)
    assert r3.regime is Regime.ENDEMIC
    np.testing.assert_allclose(r3.endemic, (0.1180328, 0.4721312), atol=1e-7)
    assert r3.f == pytest.approx(0.5901639, abs=1e-7)
    assert r3.limiting_infected == pytest.approx(r3.f, abs=1e-15)


def test_equality_case_is_ife():
    p = AsisParams(0.3, 0.28, 0.1, 0.2 / 0.28)
    rep = an.classify(p)
    assert rep.spectral.lambda_plus == pytest.approx(0.0, abs=1e-15)
    assert rep.regime is Regime.IFE_GAS


def test_threshold_equivalence_random_draws():
    rng = np.random.default_rng(7)
    for _ in range(10_000):
        b, ba, al = rng.uniform(0.01, 1.0, 3)
        xa = rng.uniform(0, 1)
        p = AsisParams(b, ba, al, xa)
        rep = an.classify(p)
        by_ratio = b / al <= 1 + ba * xa / al
        by_eig = rep.spectral.lambda_plus <= 0
        assert (rep.regime is Regime.IFE_GAS) == by_eig
        if abs(rep.spectral.lambda_plus) > 1e-12:
            assert by_ratio == by_eig


@settings(max_examples=200)
@given(endemic_params())
def test_endemic_point_is_an_equilibrium(p):
    rep = an.classify(p)
    ia, ir = rep.endemic
    assert np.hypot(*asis_field(p, (ia, ir))) < 1e-12
    assert ia / p.x_a == pytest.approx(ir / (1 - p.x_a), rel=1e-12)
    assert 0 < rep.f < 1
    assert rep.spectral.lambda_minus < 0 < rep.spectral.lambda_plus


def test_sis_classify():
    from acdyn.models import SisParams

    assert an.sis_classify(SisParams(0.3, 0.1)) == (Regime.ENDEMIC, pytest.approx(2 / 3))
    assert an.sis_classify(SisParams(0.1, 0.1)) == (Regime.IFE_GAS, 0.0)


# --- Jacobian --------------------------------------------------------------------


def test_jacobian_at_ife(ife_case):
    np.testing.assert_allclose(an.jacobian(ife_case, (0, 0)), [[-0.13, 0.18], [0.12, -0.19]], atol=1e-15)


@pytest.mark.parametrize("p", [AsisParams(0.3, 0.35, 0.1, 0.6), AsisParams(0.3, 0.28, 0.1, 0.2), AsisParams(0.9, 0.1, 0.2, 0.45)])
def test_jacobian_eigenvalues_match_spectrum(p):
    eig = np.sort(np.linalg.eigvals(an.jacobian(p, (0, 0))).real)
    sp = an.spectral(p)
    np.testing.assert_allclose(eig, sorted([sp.lambda_minus, sp.lambda_plus]), atol=1e-12)


def test_jacobian_matches_central_differences(endemic_case):
    rng = np.random.default_rng(1)
    h = 1e-6
    for p in (endemic_case, AsisParams(0.7, 0.4, 0.15, 0.35)):
        for _ in range(100):
            ia = rng.uniform(h, p.x_a - h)
            ir = rng.uniform(h, 1 - p.x_a - h)
            fd = np.empty((2, 2))
            for j, (da, dr) in enumerate(((h, 0), (0, h))):
                plus = np.array(asis_field(p, (ia + da, ir + dr)))
                minus = np.array(asis_field(p, (ia - da, ir - dr)))
                fd[:, j] = (plus - minus) / (2 * h)
            np.testing.assert_allclose(an.jacobian(p, (ia, ir)), fd, atol=1e-5)


# --- nullclines ------------------------------------------------------------------


def test_a_nullcline(endemic_case):
    assert an.nullcline_a(endemic_case, 0.0) == 0.0
    ia, ir = an.classify(endemic_case).endemic
    assert an.nullcline_a(endemic_case, ia) == pytest.approx(ir, abs=1e-9)
    with pytest.raises(ValueError):
        an.nullcline_a(endemic_case, endemic_case.x_a)


@pytest.mark.parametrize("p", [AsisParams(0.3, 0.35, 0.1, 0.6), AsisParams(0.3, 0.28, 0.1, 0.2)])
def test_a_nullcline_zeroes_fa_and_is_convex_increasing(p):
    grid = np.linspace(0, 0.9 * p.x_a, 400)
    vals = an.nullcline_a(p, grid)
    assert np.all(np.diff(vals) > 0)
    assert np.all(np.diff(vals, 2) >= -1e-15)
    for ia, ir in zip(grid, vals):
        if 0 <= ir <= 1 - p.x_a:
            assert abs(asis_field(p, (ia, ir))[0]) < 1e-14


def test_r_nullcline_inverse_examples(ife_case, endemic_case):
    assert an.nullcline_d(ife_case) == pytest.approx(0.19)
    assert an.nullcline_r_inverse(ife_case, 0.0) == 0.0
    assert an.nullcline_d(endemic_case) == pytest.approx(-0.084)
    assert an.nullcline_r_inverse(endemic_case, 0.0) == pytest.approx(0.28, abs=1e-12)
    ia, ir = an.classify(endemic_case).endemic
    assert an.nullcline_r_inverse(endemic_case, ia) == pytest.approx(ir, abs=1e-9)


@pytest.mark.parametrize("p", [AsisParams(0.3, 0.35, 0.1, 0.6), AsisParams(0.3, 0.28, 0.1, 0.2), AsisParams(0.8, 0.5, 0.1, 0.5)])
def test_r_nullcline_inverse_zeroes_fr_and_is_concave_increasing(p):
    grid = np.linspace(0, p.x_a, 400)
    vals = an.nullcline_r_inverse(p, grid)
    assert np.all(np.diff(vals) > 0)
    assert np.all(np.diff(vals, 2) <= 1e-15)
    for ia, ir in zip(grid, vals):
        if ir <= 1 - p.x_a:
            assert abs(asis_field(p, (ia, ir))[1]) < 1e-14


@pytest.mark.parametrize("p", [AsisParams(0.3, 0.35, 0.1, 0.6), AsisParams(0.3, 0.28, 0.1, 0.2)])
def test_r_nullcline_inverse_relation(p):
    lo = max(0.0, -an.nullcline_d(p) / p.beta)
    i_r = np.linspace(lo, 1 - p.x_a, 300, endpoint=False)
    i_a = an.nullcline_r(p, i_r)
    ok = (i_a >= 0) & (i_a <= p.x_a)
    np.testing.assert_allclose(an.nullcline_r_inverse(p, i_a[ok]), i_r[ok], atol=1e-10)


def test_r_slope_matches_finite_difference(endemic_case):
    h = 1e-6
    for ia in np.linspace(0.01, 0.19, 10):
        fd = (an.nullcline_r_inverse(endemic_case, ia + h) - an.nullcline_r_inverse(endemic_case, ia - h)) / (2 * h)
        assert an.nullcline_r_inverse_slope(endemic_case, ia) == pytest.approx(fd, abs=1e-7)


# --- Lyapunov functions ---------------------------------------------------------


def test_lyapunov_ife_values():
    p = AsisParams(0.3, 0.35, 0.1, 0.6)
    assert an.lyapunov_ife(p, (0, 0)) == 0.0
    assert an.lyapunov_ife(p, (0.3, 0.1)) == pytest.approx(0.2)
    with pytest.raises(ValueError):
        an.lyapunov_ife(AsisParams(0.3, 0.35, 0.1, 0.0), (0, 0.1))


def test_lyapunov_endemic_values(endemic_case):
    ia, ir = an.classify(endemic_case).endemic
    assert an.lyapunov_endemic(endemic_case, (ia, ir), 0.5).value == 0.0
    v = an.lyapunov_endemic(endemic_case, (0.118033, 0.6), 0.5)
    assert v.value == pytest.approx(0.063934, abs=1e-6)
    assert v.region == "r>="
    with pytest.raises(ValueError):
        an.lyapunov_endemic(AsisParams(0.3, 0.35, 0.1, 0.6), (0.1, 0.1), 0.5)


def _trajectories(p, t_end, n, seed):
    rng = np.random.default_rng(seed)
    lo, hi = p.bounds
    for _ in range(n):
        yield integrate(asis_rhs(p), rng.uniform(lo, hi), IntegrationOptions(t_end=t_end, sample_interval=2.0), lower=lo, upper=hi)


def test_ife_lyapunov_decreases_along_trajectories(ife_case):
    for traj in _trajectories(ife_case, 800.0, 50, 11):
        V = [an.lyapunov_ife(ife_case, s) for s in traj.states]
        assert np.all(np.diff(V) <= 0)


def test_endemic_lyapunov_decreases_along_trajectories(endemic_case):
    for traj in _trajectories(endemic_case, 300.0, 50, 12):
        V = [an.lyapunov_endemic(endemic_case, s, 0.5).value for s in traj.states]
        assert np.all(np.diff(V) <= 0)


def test_ife_grid_certificate(ife_case):
    cert = an.certify_ife(ife_case, n=200)
    assert cert.samples_checked == 200 * 200 - 1
    assert cert.max_violation < 0 and cert.passed


@pytest.mark.parametrize("R", [0.25, 0.4, 0.5, 0.61])
def test_endemic_grid_certificate_over_window(endemic_case, R):
    cert = an.certify_endemic(endemic_case, R=R, n=200)
    assert cert.sign_failures == 0
    assert cert.max_violation < 0


def test_endemic_certificate_fails_outside_window(endemic_case):
    # far above the cone bound the a-regions no longer contain the r-nullcline
    cert = an.certify_endemic(endemic_case, R=3.0, n=200)
    assert not cert.passed


def test_admissible_R_endemic(endemic_case):
    w = an.admissible_R(endemic_case)
    assert w.lower == 0.25
    assert round(w.inverse_slope_bound, 4) == 0.8746
    assert round(w.cone_bound, 4) == 0.6143
    assert w.upper == w.cone_bound
    assert w.pick() == pytest.approx(0.5 * (0.25 + w.cone_bound))
    assert w.contains(0.5)


def test_admissible_R_large_defender_fraction():
    p = AsisParams(0.3, 0.28, 0.1, 0.5)
    assert 0.5 > (0.3 - 0.1) / (0.3 + 0.28)
    w = an.admissible_R(p)
    assert w.fixed == 1.0 and w.pick() == 1.0
    assert an.certify_endemic(p).passed


def test_unit_weight_fails_above_threshold():
    # above the threshold with x_a != 1/2, V_1 grows along an actual trajectory
    p = AsisParams(1.1666614583454236, 1.1608884707032827, 0.10512358871648884, 0.5249813586731602)
    assert p.x_a > (p.beta - p.alpha) / (p.beta + p.beta_a)
    assert not an.certify_endemic(p, R=1.0).passed
    lo, hi = p.bounds
    traj = integrate(asis_rhs(p), [0.0396, 0.0], IntegrationOptions(t_end=0.5, sample_interval=0.01), lower=lo, upper=hi)
    V1 = [an.lyapunov_endemic(p, s, 1.0).value for s in traj.states]
    assert V1[1] > V1[0]
    R = an.admissible_R(p).pick()
    assert R == pytest.approx(p.x_a / (1 - p.x_a))
    VR = [an.lyapunov_endemic(p, s, R).value for s in traj.states]
    assert np.all(np.diff(VR) < 0)
    assert an.certify_endemic(p).passed


def test_fixed_weight_certifies_random_draws_above_threshold():
    rng = np.random.default_rng(8)
    checked = 0
    while checked < 40:
        p = AsisParams(rng.uniform(0.1, 2), rng.uniform(0.01, 2), rng.uniform(0.01, 0.5), rng.uniform(0.02, 0.98))
        if an.spectral(p).lambda_plus <= 1e-3 or an.admissible_R(p).fixed is None:
            continue
        checked += 1
        assert an.certify_endemic(p, n=100).passed, p


def test_window_certifies_random_draws_below_threshold():
    rng = np.random.default_rng(9)
    checked = 0
    while checked < 40:
        p = AsisParams(rng.uniform(0.1, 2), rng.uniform(0.01, 2), rng.uniform(0.01, 0.5), rng.uniform(0.02, 0.98))
        if an.spectral(p).lambda_plus <= 1e-3 or an.admissible_R(p).fixed is not None:
            continue
        assert not an.admissible_R(p).is_empty
        checked += 1
        assert an.certify_endemic(p, n=100).passed, p


def test_admissible_R_rejects_ife(ife_case):
    with pytest.raises(ValueError):
        an.admissible_R(ife_case)


# --- A-SIR peak --------------------------------------------------------------------


def test_asir_peak_monotone_case():
    rep = an.asir_peak(AsirParams(0.3, 0.2, 0.1), 0.99, 0.01)
    assert rep.case is PeakCase.MONOTONE
    assert rep.threshold_rhs == pytest.approx(0.985)
    assert rep.i_pk == 0.01


def test_asir_peak_classic_sir():
    rep = an.asir_peak(AsirParams(0.3, 0.0, 0.1), 0.0, 0.01)
    expected = 1 - 1 / 3 + (1 / 3) * math.log(0.1 / (0.3 * 0.99))
    assert rep.case is PeakCase.FORMULA
    assert rep.i_pk == pytest.approx(expected, abs=1e-15)
    assert rep.i_pk == pytest.approx(0.3038, abs=1e-4)


def test_asir_peak_formula_case():
    rep = an.asir_peak(AsirParams(0.3, 0.2, 0.1), 0.3, 0.01)
    assert rep.case is PeakCase.FORMULA
    assert rep.i_pk == pytest.approx(0.1790, abs=1e-4)


def test_asir_peak_rejects_bad_start():
    with pytest.raises(ValueError):
        an.asir_peak(AsirParams(0.3, 0.2, 0.1), 0.995, 0.01)


def test_i_of_sa_identities():
    p = AsirParams(0.3, 0.2, 0.1)
    assert an.asir_i_of_sa(p, 0.3, 0.01, 0.3) == pytest.approx(0.01, abs=1e-15)
    s_star = an.asir_peak_location(p, 0.3, 0.01)
    assert s_star < 0.3
    assert an.asir_i_of_sa(p, 0.3, 0.01, s_star) == pytest.approx(an.asir_peak(p, 0.3, 0.01).i_pk, abs=1e-12)
    with pytest.raises(ValueError):
        an.asir_i_of_sa(p, 0.0, 0.01, 0.0)


def test_i_of_sa_matches_integrated_trajectory():
    p = AsirParams(0.3, 0.2, 0.1)
    lo, hi = p.bounds
    traj = integrate(
        asir_rhs(p),
        AsirState.from_initial(0.3, 0.01),
        IntegrationOptions(t_end=300.0, sample_interval=0.05, rel_tol=1e-10, abs_tol=1e-12),
        lower=lo,
        upper=hi,
    )
    s_a = traj.states[:, 0]
    i = traj.states[:, 2] + traj.states[:, 3]
    assert s_a.min() < 0.2
    i_at = np.interp(0.2, s_a[::-1], i[::-1])
    assert an.asir_i_of_sa(p, 0.3, 0.01, 0.2) == pytest.approx(i_at, abs=1e-4)
