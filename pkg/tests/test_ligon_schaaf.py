import numpy as np
import pytest
from numpy.testing import assert_allclose

from kepler_sphere import ligon_schaaf as ls
from kepler_sphere import suites
from kepler_sphere.conserved import circular_angular_momentum_sq, conserved_set
from kepler_sphere.dynamics import IntegratorConfig, KeplerParams, integrate
from kepler_sphere.errors import CollisionProximity, PositiveEnergy, ZeroSection
from kepler_sphere.geometry import SpherePhasePoint, sample_phase_point

from oracles import central_gradient

S2 = np.sqrt(2.0) / 2.0


def _unbound_state():
    q = np.array([S2, S2, 0.0, 0.0])
    v = np.array([0.0, 0.0, 3.0, 0.0])
    return SpherePhasePoint(q, v)


def test_c1_frame_frozen(params, c1):
    f = ls.ls_frame(c1, params)
    assert_allclose(f.alpha, [0.0, 1.0, 0.0, 0.0], atol=1e-15)
    assert_allclose(f.beta, [0.0, 0.0, 1.0, 0.0], atol=1e-15)
    assert f.phi == pytest.approx(0.0, abs=1e-15)
    assert f.nu == pytest.approx(1.0, abs=1e-15)


def test_c1_map_frozen(params, c1):
    d = ls.ls_map(c1, params)
    assert_allclose(d.x, [0.0, 0.0, 1.0, 0.0], atol=1e-15)
    assert_allclose(d.y, [0.0, -1.0, 0.0, 0.0], atol=1e-15)


def test_frame_orthonormal(params):
    for seed in range(10):
        p = sample_phase_point(seed, (-1.0, -0.1), params.gamma)
        f = ls.ls_frame(p, params)
        assert abs(f.alpha @ f.alpha - 1.0) < 1e-12
        assert abs(f.beta @ f.beta - 1.0) < 1e-12
        assert abs(f.alpha @ f.beta) < 1e-12


def test_map_lands_on_unit_bundle(params):
    for seed in range(10):
        p = sample_phase_point(seed, (-1.0, -0.1), params.gamma)
        d = ls.ls_map(p, params)
        c = conserved_set(p, params)
        assert abs(d.x @ d.x - 1.0) < 1e-12
        assert abs(d.x @ d.y) < 1e-12
        assert abs(np.linalg.norm(d.y) - c.nu) < 1e-12


def test_momentum_and_energy_intertwining(params):
    for seed in range(10):
        p = sample_phase_point(seed, (-1.0, -0.1), params.gamma)
        d = ls.ls_map(p, params)
        J = ls.momentum_J(p, params)
        M = ls.delaunay_momentum(d)
        assert_allclose(M.left, J.left, atol=1e-12)
        assert_allclose(M.right, J.right, atol=1e-12)
        c = conserved_set(p, params)
        assert ls.delaunay_hamiltonian(d, params) == pytest.approx(c.E, abs=1e-12)


def test_phase_override_moves_nothing_observable(params):
    p = sample_phase_point(5, (-0.8, -0.3), params.gamma)
    base = ls.ls_map(p, params)
    for phase in (0.0, 0.7, 2.4, -1.3):
        d = ls.ls_map(p, params, phase=phase)
        # the conserved content is phase-independent ...
        M0, M1 = ls.delaunay_momentum(base), ls.delaunay_momentum(d)
        assert_allclose(M1.left, M0.left, atol=1e-12)
        assert_allclose(M1.right, M0.right, atol=1e-12)
        assert ls.delaunay_hamiltonian(d, params) == pytest.approx(
            ls.delaunay_hamiltonian(base, params), abs=1e-13)
        # ... because the whole x wedge y bivector is
        w0 = np.outer(base.x, base.y) - np.outer(base.y, base.x)
        w1 = np.outer(d.x, d.y) - np.outer(d.y, d.x)
        assert np.max(np.abs(w0 - w1)) < 1e-12


def test_delaunay_flow_quarter_turn(params, c1):
    d0 = ls.ls_map(c1, params)  # |y| = 1, so the rate is 1
    d = ls.delaunay_flow(d0, np.pi / 2, params)
    assert_allclose(d.x, [0.0, -1.0, 0.0, 0.0], atol=5e-15)
    assert_allclose(d.y, [0.0, 0.0, -1.0, 0.0], atol=5e-15)


def test_delaunay_flow_exact_invariants(params):
    p = sample_phase_point(3, (-0.8, -0.3), params.gamma)
    d0 = ls.ls_map(p, params)
    h0 = ls.delaunay_hamiltonian(d0, params)
    ynorm = np.linalg.norm(d0.y)
    period = 2.0 * np.pi * ynorm**3 / params.gamma**2
    for t in (0.3, 1.7, 4.0, 11.0):
        d = ls.delaunay_flow(d0, t, params)
        assert abs(d.x @ d.x - 1.0) < 1e-14
        assert abs(d.x @ d.y) < 5e-14
        assert abs(d.y @ d.y - ynorm**2) < 1e-13
        assert ls.delaunay_hamiltonian(d, params) == pytest.approx(h0, abs=1e-13)
    back = ls.delaunay_flow(d0, period, params)
    assert_allclose(back.x, d0.x, atol=1e-12)
    assert_allclose(back.y, d0.y, atol=1e-12)


def test_delaunay_field_is_flow_derivative(params):
    p = sample_phase_point(4, (-0.8, -0.3), params.gamma)
    d0 = ls.ls_map(p, params)
    h = 1e-6
    dp = ls.delaunay_flow(d0, h, params)
    dm = ls.delaunay_flow(d0, -h, params)
    fd = np.concatenate((dp.x - dm.x, dp.y - dm.y)) / (2.0 * h)
    assert_allclose(fd, ls.delaunay_field(d0, params), atol=1e-8)


def test_zero_section_raises(params):
    d = ls.DelaunayPoint(x=np.array([1.0, 0, 0, 0]), y=np.zeros(4))
    with pytest.raises(ZeroSection):
        ls.delaunay_hamiltonian(d, params)
    with pytest.raises(ZeroSection):
        ls.delaunay_field(d, params)
    with pytest.raises(ZeroSection):
        ls.delaunay_flow(d, 1.0, params)


def test_positive_energy_raises(params):
    p = _unbound_state()
    with pytest.raises(PositiveEnergy):
        ls.ls_frame(p, params)
    with pytest.raises(PositiveEnergy):
        ls.ls_map(p, params)
    with pytest.raises(PositiveEnergy):
        ls.momentum_J(p, params)


def test_guard_band_blocks_frame(params):
    eps = 1e-10
    q = np.array([np.sqrt(1.0 - eps), np.sqrt(eps), 0.0, 0.0])
    v = np.array([0.0, 0.0, 1.0, 0.0])
    with pytest.raises(CollisionProximity):
        ls.ls_frame(SpherePhasePoint(q, v), params)


def test_momenta_on_circular_fixture(params, c1):
    J = ls.momentum_J(c1, params)
    assert_allclose(J.left, [0.0, 0.0, 1.0], atol=1e-15)
    assert_allclose(J.right, [0.0, 0.0, 0.0], atol=1e-15)
    rho = ls.momentum_rho(c1, params)
    assert_allclose(rho.left, J.left, atol=1e-15)
    assert_allclose(rho.right, [0.0, 0.0, 0.0], atol=1e-15)
    c = conserved_set(c1, params)
    assert float(c.mu @ c.mu) == pytest.approx(
        circular_angular_momentum_sq(c.H, params), abs=1e-14)


def test_momentum_rho_norm_identity(params):
    for seed in range(10):
        p = sample_phase_point(seed, (-1.0, -0.1), params.gamma)
        c = conserved_set(p, params)
        rho = ls.momentum_rho(p, params)
        target = circular_angular_momentum_sq(c.H, params) - float(c.mu @ c.mu)
        assert abs(float(rho.right @ rho.right) - target) < 1e-12
        # right slot is a positive multiple of the apsis vector
        if c.eps > 1e-6:
            cosang = (rho.right @ c.A) / (np.linalg.norm(rho.right)
                                          * np.linalg.norm(c.A))
            assert cosang == pytest.approx(1.0, abs=1e-12)


def test_gradient_etilde_rho_matches_finite_differences(params):
    p = sample_phase_point(6, (-0.8, -0.3), params.gamma)
    z = np.concatenate((p.q, p.v))
    gamma = params.gamma

    def rho_right(z):
        # ambient extension: |A|^2 spelled through the on-shell identity
        # gamma^2 + |mu|^2 (2H - |mu|^2), matching the analytic gradient
        q, v = z[:4], z[4:]
        qv, vv = q[1:], v[1:]
        mu = np.cross(qv, vv)
        m = mu @ mu
        pi = q[0] * vv - v[0] * qv
        A = np.cross(pi, mu) - gamma * qv / np.linalg.norm(qv)
        H = 0.5 * v @ v - gamma * q[0] / np.sqrt(1.0 - q[0] ** 2)
        C = H + np.sqrt(gamma**2 + H * H)
        eta = np.sqrt((C - m) / (gamma**2 + 2.0 * H * m - m * m))
        return eta * A

    fd = central_gradient(rho_right, z, h=1e-6)
    assert np.max(np.abs(fd - ls.gradient_etilde_rho(p, params))) < 5e-8


def test_tau_clock_c1(params, c1):
    traj = integrate(c1, params, IntegratorConfig(dt=1e-3, t_end=np.pi))
    traj = ls.tau_clock(traj)
    # q0^2 = 1/2 throughout, so tau runs twice as fast as t
    assert traj.tau[0] == 0.0
    assert traj.tau[-1] == pytest.approx(2.0 * np.pi, abs=1e-9)
    assert np.all(np.diff(traj.tau) > 0)


def test_equivalence_of_flows(params):
    for seed in range(5):
        p = sample_phase_point(seed, (-0.8, -0.3), params.gamma)
        resid, q0_sq = ls.equivalence_check(p, params)
        assert 0.0 < q0_sq <= 1.0
        assert resid < 1e-5


def test_frame_rotation_rates(params):
    for seed in range(5):
        p = sample_phase_point(seed, (-0.8, -0.3), params.gamma)
        assert ls.dalpha_dbeta_check(p, params) < 1e-5


def test_suite_passes(params, tol):
    (report,) = suites.run_suite("ligon-schaaf", seeds=8, tol=tol, params=params)
    assert report.passed, report.to_dict()
