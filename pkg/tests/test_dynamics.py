import numpy as np
import pytest
from numpy.testing import assert_allclose

from kepler_sphere import dynamics as dyn
from kepler_sphere.errors import CollisionProximity, ConfigError
from kepler_sphere.geometry import (
    SpherePhasePoint,
    fixture_c1,
    sample_phase_point,
    state_from_elements,
)

from oracles import central_gradient


def test_params_validation():
    with pytest.raises(ConfigError):
        dyn.KeplerParams(gamma=0.0)
    with pytest.raises(ConfigError):
        dyn.KeplerParams(gamma=-1.0)


def test_integrator_config_validation():
    with pytest.raises(ConfigError):
        dyn.IntegratorConfig(method="leapfrog")
    with pytest.raises(ConfigError):
        dyn.IntegratorConfig(dt=0.0)
    with pytest.raises(ConfigError):
        dyn.IntegratorConfig(t_end=-1.0)
    with pytest.raises(ConfigError):
        dyn.IntegratorConfig(reproject_every=-1)
    # 0 is legal and means "never reproject"
    assert dyn.IntegratorConfig(reproject_every=0).reproject_every == 0


def test_structure_matrix_antisymmetry(params):
    for seed in range(8):
        p = sample_phase_point(seed, (-1.0, -0.1), 1.0)
        P = dyn.structure_matrix(p)
        assert np.max(np.abs(P + P.T)) == 0.0


def test_field_is_structure_times_gradient(params):
    for seed in range(8):
        p = sample_phase_point(seed, (-1.0, -0.1), 1.0)
        X = dyn.vector_field(p, params)
        Y = dyn.structure_matrix(p) @ dyn.hamiltonian_gradient(p, params)
        assert np.max(np.abs(X - Y)) < 1e-13


def test_field_preserves_constraints(params):
    """d/dt <q,q> = 2<q,v> = 0 and d/dt <q,v> = |v|^2 + <q, a> = 0."""
    for seed in range(8):
        p = sample_phase_point(seed, (-1.0, -0.1), 1.0)
        X = dyn.vector_field(p, params)
        qdot, vdot = X[:4], X[4:]
        assert abs(p.q @ qdot) < 1e-13
        assert abs(p.v @ qdot + p.q @ vdot) < 1e-12


def test_hamiltonian_gradient_against_finite_differences(params):
    p = sample_phase_point(2, (-0.8, -0.2), 1.0)
    z = np.concatenate((p.q, p.v))

    def h_of(zz):
        return dyn.hamiltonian(SpherePhasePoint(zz[:4].copy(), zz[4:].copy()),
                               params)

    fd = central_gradient(h_of, z, h=1e-6)[0]
    assert np.max(np.abs(fd - dyn.hamiltonian_gradient(p, params))) < 2e-9


def test_jacobi_identity_on_and_off_shell():
    rng = np.random.default_rng(4)
    for seed in range(5):
        p = sample_phase_point(seed, (-1.0, -0.1), 1.0)
        assert dyn.jacobi_residual(p) < 1e-12
    for _ in range(5):
        off = SpherePhasePoint(rng.normal(size=4) * 1.5, rng.normal(size=4))
        assert dyn.jacobi_residual(off) < 1e-12


def test_structure_matrix_derivative_against_finite_differences():
    p = sample_phase_point(1, (-0.8, -0.2), 1.0)
    z0 = np.concatenate((p.q, p.v))
    T = dyn.structure_matrix_derivative(p)
    h = 1e-6
    for k in range(8):
        dz = np.zeros(8)
        dz[k] = h
        Pp = dyn.structure_matrix(SpherePhasePoint(z0[:4] + dz[:4], z0[4:] + dz[4:]))
        Pm = dyn.structure_matrix(SpherePhasePoint(z0[:4] - dz[:4], z0[4:] - dz[4:]))
        fd = (Pp - Pm) / (2 * h)
        assert np.max(np.abs(fd - T[:, :, k])) < 1e-9


def test_circular_orbit_closes_after_one_period(params, c1):
    cfg = dyn.IntegratorConfig(dt=1e-3, t_end=np.pi)
    traj = dyn.integrate(c1, params, cfg)
    assert traj.collision is None
    assert np.max(np.abs(traj.q[-1] - traj.q[0])) < 1e-10
    assert np.max(np.abs(traj.v[-1] - traj.v[0])) < 1e-10
    h = [dyn.hamiltonian(traj.point(i), params) for i in range(0, len(traj), 500)]
    assert max(h) - min(h) < 1e-12


def test_final_partial_step_covers_t_end(params, c1):
    cfg = dyn.IntegratorConfig(dt=1e-3, t_end=0.0105)
    traj = dyn.integrate(c1, params, cfg)
    # a trailing partial step is taken so the run ends at t_end
    assert traj.t[-1] == pytest.approx(0.0105, abs=1e-14)
    assert len(traj) == 12
    assert np.all(np.diff(traj.t) > 0)


def test_reprojection_controls_constraint_drift(params):
    p = state_from_elements(0.4, 0.6, params.gamma)
    cfg = dyn.IntegratorConfig(dt=2e-3, t_end=3.0, reproject_every=5)
    traj = dyn.integrate(p, params, cfg)
    c1 = np.abs(np.sum(traj.q * traj.q, axis=1) - 1.0)
    c2 = np.abs(np.sum(traj.q * traj.v, axis=1))
    assert c1.max() < 1e-11
    assert c2.max() < 5e-11


def test_dop853_matches_rk4(params):
    p = state_from_elements(0.5, 0.4, params.gamma)
    cfg_a = dyn.IntegratorConfig(method="rk4_projected", dt=2e-4, t_end=2.0)
    cfg_b = dyn.IntegratorConfig(method="dop853_projected", dt=1e-2, t_end=2.0)
    ta = dyn.integrate(p, params, cfg_a)
    tb = dyn.integrate(p, params, cfg_b)
    assert np.max(np.abs(ta.q[-1] - tb.q[-1])) < 1e-8
    assert np.max(np.abs(ta.v[-1] - tb.v[-1])) < 1e-8


def test_collision_guard_truncates_and_records_rk4(params):
    # eccentric enough to dip into a band the fixed step can resolve
    p = state_from_elements(0.785, 0.9, params.gamma, at_aphelion=True)
    cfg = dyn.IntegratorConfig(method="rk4_projected", dt=1e-3, t_end=10.0,
                               collision_guard=1e-2)
    traj = dyn.integrate(p, params, cfg)
    ev = traj.collision
    assert ev is not None
    assert 0.0 < ev.t < 10.0
    assert traj.t[-1] == ev.t
    # recorded state is the last valid one: finite, on the bundle, outside
    # the band, and matching the last stored sample
    assert np.all(np.isfinite(ev.q)) and np.all(np.isfinite(ev.v))
    assert 1.0 - ev.q[0] ** 2 > 1e-2
    assert abs(ev.q @ ev.q - 1.0) < 1e-9
    assert np.array_equal(ev.q, traj.q[-1])
    assert (1.0 - traj.q[:, 0] ** 2).min() > 1e-2
    h0 = dyn.hamiltonian(traj.point(0), params)
    h1 = dyn.hamiltonian(traj.point(len(traj) - 1), params)
    assert abs(h1 - h0) < 1e-6


def test_collision_guard_truncates_and_records_dop853(params):
    p = state_from_elements(0.785, 0.999, params.gamma, at_aphelion=True)
    cfg = dyn.IntegratorConfig(method="dop853_projected", dt=1e-3, t_end=40.0,
                               collision_guard=1e-5)
    traj = dyn.integrate(p, params, cfg)
    ev = traj.collision
    assert ev is not None
    assert ev.t < 40.0
    assert traj.t[-1] <= ev.t
    # the event locator stops on the band boundary itself
    assert 1.0 - ev.q[0] ** 2 == pytest.approx(1e-5, rel=1e-6)
    assert (1.0 - traj.q[:, 0] ** 2).min() >= 0.5e-5


def test_guard_violating_initial_state_records_at_time_zero(params):
    eps = 1e-10
    q = np.array([np.sqrt(1.0 - eps), np.sqrt(eps), 0.0, 0.0])
    v = np.array([0.0, 0.0, 1.0, 0.0])
    traj = dyn.integrate(SpherePhasePoint(q, v), params,
                         dyn.IntegratorConfig(dt=1e-3, t_end=0.1))
    assert len(traj) == 1
    assert traj.collision is not None
    assert traj.collision.t == 0.0
    assert np.array_equal(traj.collision.q, q)


def test_potential_guard(params):
    eps = 1e-10
    q = np.array([np.sqrt(1.0 - eps), np.sqrt(eps), 0.0, 0.0])
    with pytest.raises(CollisionProximity):
        dyn.potential(q, params)


def test_integrate_batch_matches_single(params):
    pts = [sample_phase_point(s, (-0.8, -0.3), 1.0) for s in (0, 1, 2)]
    q0 = np.stack([p.q for p in pts])
    v0 = np.stack([p.v for p in pts])
    cfg = dyn.IntegratorConfig(dt=1e-3, t_end=1.0)
    t, qs, vs = dyn.integrate_batch(q0, v0, params, cfg)
    for i, p in enumerate(pts):
        single = dyn.integrate(p, params, cfg)
        assert np.max(np.abs(qs[:, i] - single.q)) < 1e-13
        assert np.max(np.abs(vs[:, i] - single.v)) < 1e-13


def test_integrate_batch_collision_names_orbit(params):
    good = sample_phase_point(0, (-0.8, -0.3), 1.0)
    bad = state_from_elements(0.785, 0.9, params.gamma, at_aphelion=True)
    q0 = np.stack([good.q, bad.q])
    v0 = np.stack([good.v, bad.v])
    cfg = dyn.IntegratorConfig(dt=1e-3, t_end=10.0, collision_guard=1e-2)
    with pytest.raises(CollisionProximity, match="orbit 1"):
        dyn.integrate_batch(q0, v0, params, cfg)


def test_trajectory_point_accessor(params, c1):
    traj = dyn.integrate(c1, params, dyn.IntegratorConfig(dt=1e-3, t_end=0.1))
    p = traj.point(3)
    assert isinstance(p, SpherePhasePoint)
    assert np.array_equal(p.q, traj.q[3])
    assert len(traj) == traj.q.shape[0] == traj.t.shape[0]
