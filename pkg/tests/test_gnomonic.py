import numpy as np
import pytest
from numpy.testing import assert_allclose

from kepler_sphere import gnomonic as gn
from kepler_sphere import ligon_schaaf as ls
from kepler_sphere import suites
from kepler_sphere.conserved import conserved_set
from kepler_sphere.dynamics import IntegratorConfig, integrate
from kepler_sphere.errors import (
    DegenerateOrbit,
    EquatorSingularity,
    PositiveEnergy,
    PunctureHit,
)
from kepler_sphere.geometry import SpherePhasePoint, sample_phase_point, state_from_elements

S2 = np.sqrt(2.0) / 2.0


def _bound_flat_point():
    return gn.EuclidPhasePoint(Q=[1.2, 0.3, -0.4], V=[0.2, 0.8, 0.1])


def test_psi_c1_frozen(params, c1):
    e = gn.psi(c1)
    assert_allclose(e.Q, [1.0, 0.0, 0.0], atol=1e-15)
    assert_allclose(e.V, [0.0, 1.0, 0.0], atol=1e-15)


def test_psi_inverse_zero_velocity():
    p = gn.psi_inverse(gn.EuclidPhasePoint(Q=[1.0, 0.0, 0.0], V=[0.0, 0.0, 0.0]))
    assert_allclose(p.q, [S2, S2, 0.0, 0.0], atol=1e-15)
    assert_allclose(p.v, np.zeros(4), atol=1e-15)


def test_psi_singularities():
    q0 = 1e-9
    near_equator = SpherePhasePoint(
        np.array([q0, np.sqrt(1.0 - q0 * q0), 0.0, 0.0]), np.zeros(4))
    with pytest.raises(EquatorSingularity):
        gn.psi(near_equator)
    at_pole = SpherePhasePoint(np.array([1.0, 0.0, 0.0, 0.0]),
                               np.array([0.0, 0.3, 0.0, 0.0]))
    with pytest.raises(PunctureHit):
        gn.psi(at_pole)
    with pytest.raises(PunctureHit):
        gn.psi_inverse(gn.EuclidPhasePoint(Q=np.zeros(3), V=np.ones(3)))


def test_psi_roundtrips(params):
    for seed in range(10):
        p = sample_phase_point(seed, (-1.0, -0.1), params.gamma)
        back = gn.psi_inverse(gn.psi(p))
        assert np.max(np.abs(back.q - p.q)) < 1e-13
        assert np.max(np.abs(back.v - p.v)) < 1e-13
    e = _bound_flat_point()
    again = gn.psi(gn.psi_inverse(e))
    assert_allclose(again.Q, e.Q, atol=1e-14)
    assert_allclose(again.V, e.V, atol=1e-14)


def test_flat_energy_and_momentum_intertwining(params):
    for seed in range(10):
        p = sample_phase_point(seed, (-1.0, -0.1), params.gamma)
        de, dj = gn.intertwine_euclid(p, params)
        assert de < 1e-12
        assert dj < 1e-12


def test_flat_momentum_requires_bound_state(params):
    e = gn.EuclidPhasePoint(Q=[1.0, 0.0, 0.0], V=[2.0, 0.0, 0.0])  # H = 1
    with pytest.raises(PositiveEnergy):
        gn.euclid_conserved(e, params)


def test_pushforward_matches_clock_scaled_field(params):
    for seed in range(6):
        p = sample_phase_point(seed, (-0.8, -0.3), params.gamma)
        assert gn.pushforward_check(p, params) < 1e-5


def test_composition_identity(params):
    for seed in range(10):
        p = sample_phase_point(seed, (-1.0, -0.1), params.gamma)
        assert gn.composition_check(p, params) < 1e-12


def test_phi_c_inverse_roundtrip(params):
    e = _bound_flat_point()
    back = gn.phi_c_inverse(gn.phi_c(e, params), params)
    assert_allclose(back.Q, e.Q, atol=1e-12)
    assert_allclose(back.V, e.V, atol=1e-12)


def test_phi_c_inverse_of_c1_image(params, c1):
    # Phi_c . Psi = Phi, so inverting the flat map on Phi(C1) lands on Psi(C1)
    e = gn.phi_c_inverse(ls.ls_map(c1, params), params)
    assert_allclose(e.Q, [1.0, 0.0, 0.0], atol=1e-12)
    assert_allclose(e.V, [0.0, 1.0, 0.0], atol=1e-12)


def test_phi_c_inverse_degenerate_cases(params):
    with pytest.raises(DegenerateOrbit):
        gn.phi_c_inverse(ls.DelaunayPoint(x=np.array([1.0, 0, 0, 0]),
                                          y=np.zeros(4)), params)
    # phase amplitude 1 marks the rectilinear boundary of the image
    with pytest.raises(DegenerateOrbit):
        gn.phi_c_inverse(ls.DelaunayPoint(x=np.array([1.0, 0, 0, 0]),
                                          y=np.array([0.0, 0.5, 0, 0])), params)


def test_kappa_matrix_structure_c1(c1):
    M = gn.kappa_pullback_matrix(c1)
    assert np.max(np.abs(M + M.T)) == 0.0
    qq = np.array([[0.0, 2.0, 0.0], [-2.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    assert_allclose(M[:3, :3], qq, atol=1e-14)
    assert_allclose(M[:3, 3:], 0.5 * np.eye(3), atol=1e-14)
    assert_allclose(M[3:, 3:], np.zeros((3, 3)), atol=1e-14)


def test_defect_channel_c1(params, c1):
    # closed form says the fiber-scaling defect at C1 is exactly 2
    pred = gn.kappa_defect_prediction(c1)
    assert pred == pytest.approx(2.0, abs=1e-14)
    assert gn.symplectic_defect(c1, params) == pytest.approx(pred, abs=1e-5)
    # raw projection pullback carries the chart distortion on top
    assert gn.psi_pullback_defect(c1, params) == pytest.approx(6.0, abs=1e-4)
    # sphere-side regularizing map shows the identical defect ...
    assert abs(gn.ls_pullback_defect(c1, params)
               - gn.psi_pullback_defect(c1, params)) < 1e-6
    # ... while the flat regularizing map is symplectic (noise floor)
    assert gn.phi_c_pullback_defect(c1, params) < 1e-8


def test_defect_vanishes_toward_pole(params):
    qv = np.array([1e-3, 0.0, 0.0])
    q0 = np.sqrt(1.0 - qv @ qv)
    p = SpherePhasePoint(np.concatenate(([q0], qv)),
                         np.array([0.0, 0.0, 1.0, 0.0]))
    pred = gn.kappa_defect_prediction(p)
    assert pred == pytest.approx(2e-3, rel=1e-6)
    assert gn.symplectic_defect(p, params) == pytest.approx(pred, abs=1e-6)


def test_bound_orbit_period_circular(params):
    # a = 1 makes the clock factor constant: T = pi exactly
    assert gn.bound_orbit_period(-0.5, 0.0, params.gamma) == pytest.approx(
        np.pi, abs=1e-12)


def test_bound_orbit_period_flat_limit(params):
    a = 0.01
    E = -params.gamma / (2.0 * a)
    T = gn.bound_orbit_period(E, 0.3, params.gamma)
    kepler = 2.0 * np.pi * np.sqrt(a**3 / params.gamma)
    assert abs(T - kepler) / kepler < 3e-4


def test_bound_orbit_period_rejects(params):
    with pytest.raises(PositiveEnergy):
        gn.bound_orbit_period(0.0, 0.3, params.gamma)
    with pytest.raises(DegenerateOrbit):
        gn.bound_orbit_period(-0.5, 1.0, params.gamma)


def test_period_closes_the_orbit(params):
    p = state_from_elements(0.5, 0.3, params.gamma)
    c = conserved_set(p, params)
    T = gn.bound_orbit_period(c.E, c.eps, params.gamma)
    traj = integrate(p, params, IntegratorConfig(dt=T / 4096, t_end=T))
    assert np.max(np.abs(traj.q[-1] - traj.q[0])) < 1e-6
    assert np.max(np.abs(traj.v[-1] - traj.v[0])) < 1e-6


def test_integrate_euclid_matches_projected_orbit(params):
    p = state_from_elements(0.5, 0.5, params.gamma)
    traj = integrate(p, params, IntegratorConfig(dt=5e-4, t_end=3.0))
    traj = ls.tau_clock(traj)
    Q, V = gn.integrate_euclid(gn.psi(p), params, traj.tau)
    Q_true = traj.q[:, 1:] / traj.q[:, 0:1]
    V_true = traj.q[:, 0:1] * traj.v[:, 1:] - traj.v[:, 0:1] * traj.q[:, 1:]
    assert np.max(np.abs(Q - Q_true)) < 1e-6
    assert np.max(np.abs(V - V_true)) < 1e-6


def test_moser_correspondence(params, c1):
    traj = integrate(c1, params, IntegratorConfig(dt=1e-3, t_end=np.pi))
    assert abs(gn.moser_correspondence(traj, params)) < 1e-12
    p = state_from_elements(0.5, 0.5, params.gamma)
    traj = integrate(p, params, IntegratorConfig(dt=5e-4, t_end=3.0))
    assert abs(gn.moser_correspondence(traj, params)) < 1e-9


def test_suite_passes(params, tol):
    (report,) = suites.run_suite("gnomonic", seeds=8, tol=tol, params=params)
    assert report.passed, report.to_dict()


def test_suite_mutation_trips_composition(params, tol):
    (report,) = suites.run_suite("gnomonic", seeds=4, tol=tol, params=params,
                                 mutate=True)
    assert not report.passed
    failed = {c.name for c in report.checks if not c.passed}
    assert "composition_identity" in failed
