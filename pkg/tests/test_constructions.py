import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wspdiff.constructions import (PsiParams, appendixA_envelope_constant, appendixA_field,
                                   appendixA_region_bounds, appendixA_region_integrals,
                                   appendixA_region_quadrature, appendixA_total_length, displacement_pair,
                                   make_psi, make_radial_psi, make_u_alpha_eps, radial_step_field,
                                   spike_distance, spike_pair, support_split, translation, translation_path,
                                   u_alpha_eps)
from wspdiff.experiments import random_circle_diffeo
from wspdiff.grids import (CircleDiffeo, IntervalDiffeo, MollifierError, circle_grid, compose, derivative,
                           interval_grid)
from wspdiff.lenells import lenells_inverse
from wspdiff.norms import SobolevIndex, lp_norm_values, wsp_norm
from wspdiff.paths import path_length
from wspdiff.radial import radial_wsp_norm

from oracles import appendix_regions, psi_printed, spike_distance_direct

SIG, P = 0.25, 2.0


# ---------------------------------------------------------------------------
# psi and the affine homotopy


def test_psi_params():
    prm = PsiParams(2.0, 0.5)
    assert prm.kink == pytest.approx(0.25)
    assert prm.second_slope == pytest.approx(2 / 3)
    assert prm.lam == 1.0
    with pytest.raises(ValueError):
        PsiParams(0.5, 0.1)
    with pytest.raises(ValueError):
        PsiParams(2.0, 1.0)


def test_make_psi_examples():
    g = interval_grid(1025)
    assert np.array_equal(make_psi(PsiParams(1.0, 0.3), grid=g).values, g.nodes)
    psi = make_psi(PsiParams(2.0, 0.5), grid=g)
    assert psi.values[256] == pytest.approx(0.5, abs=1e-14)  # x = 0.25
    assert psi.values[-1] == 1.0
    sl = np.diff(psi.values) / g.h
    assert np.allclose(sl[:256], 2.0) and np.allclose(sl[256:], 2 / 3)
    h = 0.01
    sm = make_psi(PsiParams(4.0, 0.2), h, grid=g)
    x = g.nodes
    core = (x >= h) & (x <= 0.2 - h)
    assert np.allclose(sm.values[core], 4 * x[core], atol=1e-12)
    with pytest.raises(MollifierError):
        make_psi(PsiParams(4.0, 0.2), 0.3, grid=g)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_printed_parametrization_cross_check(seed):
    rng = np.random.default_rng(seed)
    lam = int(rng.integers(1, 40))
    delta = float(rng.uniform(0.01, 0.9))
    t = float(rng.uniform(0.01, 0.99))
    prm = PsiParams(lam + 1, delta)
    x = np.linspace(0, 1, 1001)
    assert np.allclose(make_psi(prm, grid=interval_grid(1001)).values, psi_printed(x, lam, delta), atol=1e-14)
    got = appendixA_region_integrals(t, prm, SIG, P).as_tuple()
    assert np.allclose(got, appendix_regions(t, lam, delta, SIG, P), rtol=1e-13)
    # the printed first and fourth integrals, term by term
    a, c = 1 - SIG * P, 1 / ((1 - SIG * P) * SIG * P)
    I1 = (t + 1 / lam) ** -P * c * ((1 - delta) * (1 + lam * t) / (lam + 1)) ** a
    I4 = c * ((1 - delta) / ((1 - t) * (1 - delta) + delta * (1 + 1 / lam))) ** P \
        * (delta + (1 - delta) * lam / (lam + 1) * (1 - t)) ** a
    assert got[0] == pytest.approx(I1, rel=1e-13)
    assert got[3] == pytest.approx(I4, rel=1e-13)


def test_appendix_field_examples():
    prm = PsiParams(5.0, 0.1)  # lam = 4
    f1 = appendixA_field(1.0, prm)
    assert f1.slope_left == pytest.approx(0.8)
    y = np.linspace(0, 1, 513)
    f0 = appendixA_field(0.0, prm)
    psi = make_psi(prm, grid=interval_grid(513))
    assert np.allclose(f0.u(y), psi.values - y, atol=1e-14)
    for t in (0.0, 0.3, 1.0):
        f = appendixA_field(t, prm)
        assert f.u(0.0) == 0.0 and abs(f.u(1.0)) < 1e-15
        assert f.breakpoint == pytest.approx(0.9 * (1 + 4 * t) / 5)
    with pytest.raises(ValueError):
        appendixA_field(1.5, prm)


def test_region_integrals_match_quadrature():
    prm = PsiParams(3.0, 0.5)  # printed lam = 2
    ex = appendixA_region_integrals(0.5, prm, SIG, P).as_tuple()
    num = appendixA_region_quadrature(0.5, prm, SIG, P).as_tuple()
    assert np.all(np.array(ex) >= 0)
    assert np.allclose(ex, num, rtol=1e-2)
    with pytest.raises(ValueError):
        appendixA_region_integrals(0.5, prm, 0.6, 2.0)


def test_region_bounds_dominate_exact_values():
    for lam in (2, 8, 32):
        for d in (0.5, 0.1):
            for t in (0.1, 0.5, 0.9):
                prm = PsiParams(lam + 1, d)
                ex = appendixA_region_integrals(t, prm, SIG, P)
                bd = appendixA_region_bounds(t, prm, SIG, P)
                assert ex.seminorm_power <= bd.seminorm_power * (1 + 1e-12)


def test_first_region_scaling_ratio():
    # exact first integral: c (t + 1/lam)^{-p} y*^{1 - sigma p}
    t, d = 0.4, 0.2
    vals = {}
    for lam in (3, 11):
        vals[lam] = appendixA_region_integrals(t, PsiParams(lam + 1, d), SIG, P).I1
    a = 1 - SIG * P
    law = lambda lam: (t + 1 / lam) ** -P * ((1 - d) * (1 + lam * t) / (lam + 1)) ** a
    assert vals[11] / vals[3] == pytest.approx(law(11) / law(3), rel=1e-10)


def test_total_length_finite_and_below_fitted_envelope():
    a = 1 - SIG * P
    C = appendixA_envelope_constant(PsiParams(5.0, 0.1), SIG, P)
    bound = 2 * C * P / a
    L = appendixA_total_length(PsiParams(5.0, 0.1), SIG, P)
    assert 0 < L < np.inf
    for lam in (2, 8, 32, 64):
        for d in (0.5, 0.1, 0.01):
            assert appendixA_total_length(PsiParams(lam + 1, d), SIG, P) <= bound


@pytest.mark.xfail(strict=True, reason="the homotopy length still grows about 18% from lam=16 to lam=64")
def test_total_length_saturates_for_delta_01():
    L = {lam: appendixA_total_length(PsiParams(lam + 1, 0.1), SIG, P) for lam in (2, 4, 8, 16, 32, 64)}
    assert max(L.values()) < 1.05 * L[16]


# ---------------------------------------------------------------------------
# u_{alpha, eps} and the displacement pair


def test_u_alpha_eps_continuity():
    for alpha in (0.1, 0.5):
        for eps in (0.01, 0.1):
            u = u_alpha_eps(alpha, eps, h=0.0)
            assert u(np.array([eps]))[0] == pytest.approx(eps ** (1 - alpha))
            assert u(np.array([eps - 1e-12]))[0] == pytest.approx(eps ** (1 - alpha), rel=1e-9)
            assert u(np.array([0.75]))[0] == pytest.approx(0.75 ** (1 - alpha))
            assert u(np.array([0.75 + 1e-12]))[0] == pytest.approx(0.75 ** (1 - alpha), rel=1e-9)
    with pytest.raises(ValueError):
        u_alpha_eps(1.2, 0.1)


def test_u_alpha_eps_uniform_in_eps():
    # (alpha + s - 1) p = 0.7 < 1
    idx = SobolevIndex(1.2, 2)
    g = circle_grid(2 ** 16)
    vals = [wsp_norm(make_u_alpha_eps(0.15, e, g), idx, estimate_error=False).total for e in (1e-2, 1e-3, 1e-4)]
    assert (max(vals) - min(vals)) / min(vals) < 0.05


def test_displacement_pair_properties():
    alpha, eps, delta = 0.15, 0.05, 0.1
    dp = displacement_pair(alpha, eps, circle_grid(2048))
    x = dp.phi.grid.nodes
    assert dp.phi.values[0] == 0.0
    assert np.all(dp.phi.values[x > eps] > 0.5)
    img = np.mod(dp.psi.values[x > delta], 1.0)
    assert not np.any((img > delta) & (img < 1))
    assert dp.conjugation_defect() < 1e-8


def test_translation():
    g = circle_grid(256)
    assert np.array_equal(translation(0.0, g).values, g.nodes)
    half = translation(0.5, g)
    twice = compose(half, half)
    assert np.allclose(twice.values - 1.0, g.nodes, atol=1e-14)
    for s, p in ((0.5, 2), (1.2, 2), (2.3, 3)):
        assert path_length(translation_path(0.5, g, 16), SobolevIndex(s, p)) == pytest.approx(0.5, abs=1e-10)
    with pytest.raises(ValueError):
        translation(1.0, g)


# ---------------------------------------------------------------------------
# spikes on the L^q sphere


@pytest.mark.parametrize("q", [1.0, 2.0, 4.0])
def test_spike_pair_on_sphere_and_far(q):
    # the spike has width 10^{-q}; q = 8 is below any grid and covered by the closed form
    g = circle_grid(2 ** 17 if q > 2 else 2 ** 12)
    f, s = spike_pair(q, 10.0, 0.01, g)
    assert lp_norm_values(g, f.values, q) == pytest.approx(q, abs=1e-8)
    assert lp_norm_values(g, s.values, q) == pytest.approx(q, abs=1e-8)
    assert lp_norm_values(g, f.values - s.values, q) > q


@pytest.mark.parametrize("q", [1.0, 2.0, 4.0, 8.0])
def test_spike_distance_exceeds_radius(q):
    assert spike_distance(q, 10.0, 0.01) > q


@pytest.mark.parametrize("q", [1.0, 2.0, 4.0, 8.0])
def test_spike_distance_approaches_limit(q):
    lim = 2 ** (1 / q) * q
    d = [spike_distance(q, n, 0.01) for n in (10.0, 100.0, 1000.0)]
    assert all(abs(lim - b) < abs(lim - a) for a, b in zip(d[:-1], d[1:]))
    assert abs(d[-1] / lim - 1) < 0.05
    assert d[0] == pytest.approx(spike_distance_direct(q, 10.0, 0.01), rel=1e-8)


def test_spike_pullback_concentrates():
    q, n, eps = 2.0, 10.0, 0.01
    _, s = spike_pair(q, n, eps, circle_grid(4096))
    d = derivative(lenells_inverse(s, q)).values
    x = s.grid.nodes
    w = n ** -q
    # unsmoothed pullback: phi' = c^q n^q on (0, w), so the spike carries mass c^q
    exact = 1 / (1 + eps ** q * (1 - w))
    assert np.mean(d[x < w]) * w == pytest.approx(exact, rel=0.1)
    assert np.mean(np.where(x < w, 0.0, d)) < 0.1
    with pytest.raises(ValueError):
        spike_pair(8.0, 10.0, 0.01, circle_grid(256))


# ---------------------------------------------------------------------------
# support splitting


def test_support_split_identity_and_one_sided():
    g = circle_grid(512)
    p1, p2 = support_split(CircleDiffeo.identity(g), 0.1)
    x = p1.grid.nodes
    assert np.array_equal(p1.values, x) and np.array_equal(p2.values, x)
    gi = interval_grid(1025)
    xi = gi.nodes
    w = np.where((xi > 0.2) & (xi < 0.6), np.sin(np.pi * (xi - 0.2) / 0.4) ** 3, 0.0)
    phi = IntervalDiffeo(gi, xi + 0.03 * w)
    p1, p2 = support_split(phi, 0.1)
    assert np.array_equal(p1.values, phi.values)
    assert np.array_equal(p2.values, xi)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 100_000))
def test_support_split_recomposes(seed):
    g = circle_grid(2048)
    phi = random_circle_diffeo(g, np.random.default_rng(seed), amp=0.3)
    if np.max(np.abs(phi.values - g.nodes)) >= 0.2:
        return
    delta = 0.05
    p1, p2 = support_split(phi, delta)
    x = p1.grid.nodes
    assert np.array_equal(p1.values[x >= 1 - delta], x[x >= 1 - delta])
    assert np.array_equal(p2.values[x <= delta], x[x <= delta])
    err = np.max(np.abs(compose(p1, p2).values - np.append(phi.values, 1.0)))
    assert err < 1e-6


def test_support_split_rejects_large_delta():
    g = circle_grid(512)
    phi = CircleDiffeo.from_callable(g, lambda x: x + 0.15 * np.sin(2 * np.pi * x) / (2 * np.pi))
    with pytest.raises(ValueError):
        support_split(phi, 0.6)


# ---------------------------------------------------------------------------
# radial contraction


def test_make_radial_psi():
    pts = np.random.default_rng(0).uniform(-0.7, 0.7, size=(100, 2))
    pts = pts[np.linalg.norm(pts, axis=1) <= 1]
    assert np.allclose(make_radial_psi(PsiParams(1.0, 0.2))(pts), pts, atol=1e-12)
    h = 0.01
    prm = PsiParams(4.0, 0.2)
    Psi = make_radial_psi(prm, h, n=3)
    r = np.linspace(0.02, prm.kink - h, 20)
    p3 = np.stack([r, 0 * r, 0 * r], axis=1)
    assert np.allclose(Psi(p3)[:, 0], 4 * r, atol=1e-9)


def _step_two_length(lam, nodes=8):
    prm = PsiParams(lam + 1, 0.1)
    z, w = np.polynomial.legendre.leggauss(nodes)
    idx = SobolevIndex(0.5, 2)
    vals = [radial_wsp_norm(radial_step_field(0.5 * (zi + 1), prm), idx, n_r=96, n_ang=48,
                            extra_breaks=(appendixA_field(0.5 * (zi + 1), prm).breakpoint,)).total for zi in z]
    return 0.5 * float(np.sum(w * np.array(vals)))


@pytest.mark.xfail(strict=True, reason="lengths at lam = 2, 4, 8 are about 5.10, 5.96, 6.51; lam = 2 is 22% below lam = 8")
def test_radial_step_two_length_within_ten_percent():
    L = {lam: _step_two_length(lam) for lam in (2, 4, 8)}
    assert all(abs(L[lam] / L[8] - 1) < 0.1 for lam in (2, 4))
