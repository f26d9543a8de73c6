"""Seeded verification batteries behind ``kepler-sphere verify`` and the tests.

Each suite evaluates a family of identities at reproducibly sampled
states (or along short integrated orbits) and reports the worst residual
per identity against its tolerance.  Suites are pure functions of
(seed count, tolerances, coupling), so a report is bit-identical across
runs with the same inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation

from . import conserved as cq
from . import dynamics as dyn
from . import gnomonic as gn
from . import ligon_schaaf as ls
from . import moser as ms
from .geometry import (
    SpherePhasePoint,
    Tolerances,
    fixture_c1,
    sample_phase_point,
    state_from_elements,
)

_EPS3 = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    _EPS3[_i, _j, _k] = 1.0
    _EPS3[_j, _i, _k] = -1.0


@dataclass
class CheckResult:
    name: str
    max_residual: float
    tolerance: float
    passed: bool


@dataclass
class SuiteReport:
    suite: str
    seeds: int
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name: str, value: float, tol: float):
        value = float(value)
        tol = float(tol)
        self.checks.append(CheckResult(name, value, tol, value <= tol))

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "seeds": self.seeds,
            "passed": self.passed,
            "checks": [
                {
                    "name": c.name,
                    "max_residual": c.max_residual,
                    "tolerance": c.tolerance,
                    "passed": c.passed,
                }
                for c in self.checks
            ],
        }


def _points(n: int, gamma: float, window=(-1.0, -0.1)) -> list[SpherePhasePoint]:
    return [sample_phase_point(seed, window, gamma) for seed in range(n)]


def relative_drift(series: np.ndarray) -> float:
    """Max deviation from the first row, relative to max(1, initial scale)."""
    arr = np.atleast_2d(np.asarray(series, dtype=float).T).T
    scale = max(1.0, float(np.max(np.abs(arr[0]))))
    return float(np.max(np.abs(arr - arr[0]))) / scale


# ---------------------------------------------------------------------------
# Orbit battery: seeded bound orbits from apsis elements, integrated in
# lockstep for a fixed number of periods with per-orbit step size.


@dataclass
class OrbitBattery:
    points: list[SpherePhasePoint]
    periods: np.ndarray           # (m,) one-period durations
    eccentricities: np.ndarray    # (m,)
    energies: np.ndarray          # (m,)
    t_index_one_period: int       # stored-sample index of t = T per orbit
    q: np.ndarray                 # (n_stored, m, 4)
    v: np.ndarray                 # (n_stored, m, 4)
    steps_per_period: int


def sample_orbit_elements(seed: int, gamma: float,
                          ecc_range=(0.1, 0.8),
                          energy_range=(-0.6, -0.35)) -> SpherePhasePoint:
    """Reproducible bound orbit from random apsis elements, reoriented."""
    rng = np.random.default_rng(seed)
    eps = rng.uniform(*ecc_range)
    energy = rng.uniform(*energy_range)
    colat = np.arctan(gamma * (1.0 - eps) / (2.0 * abs(energy)))
    rot = Rotation.from_euler("ZYZ", rng.uniform(0.0, 2.0 * np.pi, 3)).as_matrix()
    return state_from_elements(colat, eps, gamma, orientation=rot)


def run_orbit_battery(points: list[SpherePhasePoint], params: dyn.KeplerParams,
                      n_periods: int = 10, store_every: int = 8,
                      safety: float = 0.05) -> OrbitBattery:
    """Integrate the given bound states for n_periods each, in lockstep.

    Every orbit gets its own step dt_i = T_i / K with one shared K, so
    sample k of orbit i sits at time k*T_i/K; K is chosen so the worst
    orbit resolves its perihelion passage (dt <= safety * sin(theta_min)
    / v_max) and is at least 1600 steps per period.
    """
    gamma = params.gamma
    m = len(points)
    T = np.empty(m)
    ecc = np.empty(m)
    en = np.empty(m)
    k_req = 1600
    for i, p in enumerate(points):
        cs = cq.conserved_set(p, params)
        en[i] = cs.E
        ecc[i] = cs.eps
        T[i] = gn.bound_orbit_period(cs.E, cs.eps, gamma)
        # perihelion colatitude and top speed bound the stable step
        mu_sq = float(cs.mu @ cs.mu)
        cot_min = gamma * (1.0 + cs.eps) / mu_sq
        sin_min = 1.0 / np.sqrt(1.0 + cot_min**2)
        v_max = np.sqrt(2.0 * (cs.H + gamma * cot_min))
        k_req = max(k_req, int(np.ceil(T[i] * v_max / (safety * sin_min))))
    K = int(np.ceil(k_req / store_every)) * store_every
    dts = (T / K)[:, None]
    q = np.stack([p.q for p in points])
    v = np.stack([p.v for p in points])
    qs = [q.copy()]
    vs = [v.copy()]
    n_steps = n_periods * K
    for step in range(n_steps):
        q, v = dyn._rk4_step(q, v, dts, gamma)
        if np.any(1.0 - q[:, 0] ** 2 <= 1e-10):
            raise RuntimeError("orbit battery hit the pole; step control failed")
        q, v = (q / np.linalg.norm(q, axis=1, keepdims=True)), v
        v = v - np.sum(q * v, axis=1, keepdims=True) * q
        if (step + 1) % store_every == 0:
            qs.append(q.copy())
            vs.append(v.copy())
    return OrbitBattery(points=points, periods=T, eccentricities=ecc, energies=en,
                        t_index_one_period=K // store_every,
                        q=np.stack(qs), v=np.stack(vs),
                        steps_per_period=K)


def battery_conserved_histories(b: OrbitBattery, params: dyn.KeplerParams) -> dict:
    """Per-sample conserved quantities over the battery, axes (n_stored, m)."""
    return cq.conserved_arrays(b.q, b.v, params.gamma)


# ---------------------------------------------------------------------------
# Suite: brackets


def _bracket_all(grads_f: np.ndarray, grads_g: np.ndarray, P: np.ndarray) -> np.ndarray:
    """Pairwise brackets between two stacks of gradients under matrix P."""
    return grads_f @ P @ grads_g.T


def brackets_suite(seeds: int, tol: Tolerances,
                   params: dyn.KeplerParams | None = None) -> SuiteReport:
    """Bracket tables of the ambient structure matrix with analytic gradients."""
    params = params or dyn.KeplerParams(1.0)
    rep = SuiteReport(suite="brackets", seeds=seeds)
    gamma = params.gamma

    worst = {
        "bracket_mu_mu": 0.0,
        "bracket_mu_runge": 0.0,
        "bracket_runge_runge": 0.0,
        "bracket_mu_position": 0.0,
        "bracket_mu_velocity": 0.0,
        "bracket_mu_modified_velocity": 0.0,
        "bracket_pi_pi": 0.0,
        "bracket_pi_position": 0.0,
        "bracket_mu_radius_sq": 0.0,
        "bracket_pi_inverse_radius": 0.0,
        "conservation_via_bracket": 0.0,
        "field_matches_structure_gradient": 0.0,
        "jacobi_identity": 0.0,
        "gradient_fd_agreement": 0.0,
    }

    for p in _points(seeds, gamma):
        P = dyn.structure_matrix(p)
        cs = cq.conserved_set(p, params)
        gmu = cq.gradient_mu(p)
        gpi = cq.gradient_pi(p)
        gA = cq.gradient_A(p, params)
        gH = dyn.hamiltonian_gradient(p, params)
        gq = np.zeros((3, 8))
        gq[:, 1:4] = np.eye(3)
        gv = np.zeros((3, 8))
        gv[:, 5:8] = np.eye(3)

        def tbl(target, table):
            return float(np.max(np.abs(table - target)))

        eps_mu = np.einsum("ijk,k->ij", _EPS3, cs.mu)
        eps_A = np.einsum("ijk,k->ij", _EPS3, cs.A)
        eps_q = np.einsum("ijk,k->ij", _EPS3, p.qvec)
        eps_v = np.einsum("ijk,k->ij", _EPS3, p.vvec)
        eps_pi = np.einsum("ijk,k->ij", _EPS3, cs.pi)

        worst["bracket_mu_mu"] = max(worst["bracket_mu_mu"],
                                     tbl(eps_mu, _bracket_all(gmu, gmu, P)))
        worst["bracket_mu_runge"] = max(worst["bracket_mu_runge"],
                                        tbl(eps_A, _bracket_all(gmu, gA, P)))
        coef = -2.0 * (cs.H - float(cs.mu @ cs.mu))
        worst["bracket_runge_runge"] = max(worst["bracket_runge_runge"],
                                           tbl(coef * eps_mu, _bracket_all(gA, gA, P)))
        worst["bracket_mu_position"] = max(worst["bracket_mu_position"],
                                           tbl(eps_q, _bracket_all(gmu, gq, P)))
        worst["bracket_mu_velocity"] = max(worst["bracket_mu_velocity"],
                                           tbl(eps_v, _bracket_all(gmu, gv, P)))
        worst["bracket_mu_modified_velocity"] = max(
            worst["bracket_mu_modified_velocity"],
            tbl(eps_pi, _bracket_all(gmu, gpi, P)))
        worst["bracket_pi_pi"] = max(worst["bracket_pi_pi"],
                                     tbl(eps_mu, _bracket_all(gpi, gpi, P)))
        gq0 = np.zeros(8)
        gq0[0] = 1.0
        worst["bracket_pi_position"] = max(
            worst["bracket_pi_position"],
            tbl(-float(p.q[0]) * np.eye(3), _bracket_all(gpi, gq, P)),
            float(np.max(np.abs(gpi @ P @ gq0 - p.qvec))))
        grs = np.zeros(8)
        grs[1:4] = 2.0 * p.qvec
        worst["bracket_mu_radius_sq"] = max(worst["bracket_mu_radius_sq"],
                                            float(np.max(np.abs(gmu @ P @ grs))))
        r = float(np.linalg.norm(p.qvec))
        ginv = cq.gradient_inverse_radius(p)
        target = float(p.q[0]) * p.qvec / r**3
        worst["bracket_pi_inverse_radius"] = max(
            worst["bracket_pi_inverse_radius"],
            float(np.max(np.abs(gpi @ P @ ginv - target))))
        cons = np.vstack((gmu, gA))
        worst["conservation_via_bracket"] = max(
            worst["conservation_via_bracket"],
            float(np.max(np.abs(cons @ P @ gH))))
        X = dyn.vector_field(p, params)
        worst["field_matches_structure_gradient"] = max(
            worst["field_matches_structure_gradient"],
            float(np.max(np.abs(P @ gH - X))))
        worst["jacobi_identity"] = max(worst["jacobi_identity"],
                                       dyn.jacobi_residual(p))

    # independent finite-difference validation of the analytic gradients
    h = tol.fd_step

    def observables(z: np.ndarray) -> np.ndarray:
        st = SpherePhasePoint(z[:4].copy(), z[4:].copy())
        mu = np.cross(st.qvec, st.vvec)
        pi = st.q[0] * st.vvec - st.v[0] * st.qvec
        rr = np.linalg.norm(st.qvec)
        A = np.cross(pi, mu) - gamma * st.qvec / rr
        Hv = 0.5 * float(st.v @ st.v) - gamma * st.q[0] / np.sqrt(1 - st.q[0] ** 2)
        return np.concatenate((mu, pi, A, [Hv]))

    for p in _points(3, gamma):
        z0 = np.concatenate((p.q, p.v))
        grads_fd = np.empty((10, 8))
        for k in range(8):
            dz = np.zeros(8)
            dz[k] = h
            grads_fd[:, k] = (observables(z0 + dz) - observables(z0 - dz)) / (2 * h)
        analytic = np.vstack((cq.gradient_mu(p), cq.gradient_pi(p),
                              cq.gradient_A(p, params),
                              dyn.hamiltonian_gradient(p, params)))
        scale = max(1.0, float(np.max(np.abs(analytic))))
        worst["gradient_fd_agreement"] = max(
            worst["gradient_fd_agreement"],
            float(np.max(np.abs(grads_fd - analytic))) / scale)

    # off-shell closure of the bracket matrix
    rng = np.random.default_rng(10_000)
    for _ in range(5):
        off = SpherePhasePoint(rng.normal(size=4) * 1.2, rng.normal(size=4))
        worst["jacobi_identity"] = max(worst["jacobi_identity"],
                                       dyn.jacobi_residual(off))

    for name, value in worst.items():
        if name == "gradient_fd_agreement":
            rep.add(name, value, tol.tol_fd)
        else:
            rep.add(name, value, tol.tol_identity)
    return rep


# ---------------------------------------------------------------------------
# Suite: conserved


def conserved_suite(seeds: int, tol: Tolerances,
                    params: dyn.KeplerParams | None = None) -> SuiteReport:
    params = params or dyn.KeplerParams(1.0)
    gamma = params.gamma
    rep = SuiteReport(suite="conserved", seeds=seeds)

    worst = dict.fromkeys([
        "sample_constraints",
        "eccentricity_energy_relation",
        "runge_norm_relation",
        "runge_from_center_cross_momentum",
        "momentum_orthogonality",
        "energy_decomposition",
        "momentum_sphere_norms",
        "orbit_cone_equation",
        "surface_energy_identity",
    ], 0.0)

    for p in _points(seeds, gamma):
        c1, c2 = p.q @ p.q - 1.0, p.q @ p.v
        worst["sample_constraints"] = max(worst["sample_constraints"],
                                          abs(float(c1)), abs(float(c2)))
        cs = cq.conserved_set(p, params)
        m2 = float(cs.mu @ cs.mu)
        worst["eccentricity_energy_relation"] = max(
            worst["eccentricity_energy_relation"],
            abs(cs.eps**2 - (1.0 + 2.0 * cs.E * m2 / gamma**2)))
        worst["runge_norm_relation"] = max(
            worst["runge_norm_relation"],
            abs(float(cs.A @ cs.A) - (gamma**2 + m2 * (2.0 * cs.H - m2))))
        worst["runge_from_center_cross_momentum"] = max(
            worst["runge_from_center_cross_momentum"],
            float(np.max(np.abs(np.cross(cs.B, cs.mu) - cs.A))))
        worst["momentum_orthogonality"] = max(
            worst["momentum_orthogonality"],
            abs(float(cs.mu @ cs.A)), abs(float(cs.mu @ cs.B)),
            abs(float(cs.A @ cs.B)))
        V = dyn.potential(p.q, params)
        worst["energy_decomposition"] = max(
            worst["energy_decomposition"],
            abs(cs.H - (0.5 * (float(cs.pi @ cs.pi) + m2) + V)),
            abs(cs.E - (0.5 * float(cs.pi @ cs.pi) + V)))
        if cs.etilde is not None:
            worst["momentum_sphere_norms"] = max(
                worst["momentum_sphere_norms"],
                abs(float((cs.mu + cs.etilde) @ (cs.mu + cs.etilde)) - cs.nu**2),
                abs(float((cs.mu - cs.etilde) @ (cs.mu - cs.etilde)) - cs.nu**2))
        worst["orbit_cone_equation"] = max(worst["orbit_cone_equation"],
                                           cq.orbit_equation_residual(p, params))
        worst["surface_energy_identity"] = max(
            worst["surface_energy_identity"],
            abs(ms.energy_identity_residual(p, params)))

    for name, value in worst.items():
        t = tol.tol_constraint if name == "sample_constraints" else tol.tol_identity
        rep.add(name, value, t)

    # one short integrated orbit: drift, closure, confinement
    p0 = sample_orbit_elements(101, gamma)
    bat = run_orbit_battery([p0], params, n_periods=2, store_every=4)
    hist = battery_conserved_histories(bat, params)
    rep.add("orbit_energy_drift", relative_drift(hist["H"][:, 0]), tol.tol_drift)
    rep.add("orbit_momentum_drift", relative_drift(hist["mu"][:, 0]), tol.tol_drift)
    rep.add("orbit_runge_drift", relative_drift(hist["A"][:, 0]), tol.tol_drift)
    rep.add("orbit_center_drift", relative_drift(hist["B"][:, 0]), tol.tol_drift)
    k = bat.t_index_one_period
    closure = max(float(np.max(np.abs(bat.q[k, 0] - bat.q[0, 0]))),
                  float(np.max(np.abs(bat.v[k, 0] - bat.v[0, 0]))))
    rep.add("orbit_closure_one_period", closure, tol.tol_drift)
    rep.add("upper_hemisphere_confinement",
            max(0.0, float(np.max(-hist["q0"][:, 0]))), 0.0)
    return rep


# ---------------------------------------------------------------------------
# Suite: moser


def moser_suite(seeds: int, tol: Tolerances,
                params: dyn.KeplerParams | None = None) -> SuiteReport:
    params = params or dyn.KeplerParams(1.0)
    gamma = params.gamma
    rep = SuiteReport(suite="moser", seeds=seeds)

    worst_speed = 0.0
    worst_energy = 0.0
    worst_factor = 0.0
    for p in _points(seeds, gamma):
        worst_speed = max(worst_speed, ms.hodograph_speed_residual(p, params))
        worst_energy = max(worst_energy, abs(ms.energy_identity_residual(p, params)))
        cs = cq.conserved_set(p, params)
        chart = ms.moser_chart(p, params)
        alt = ms.moser_metric_inverted(chart.w, cs.E) / float(cs.pi @ cs.pi) ** 2
        worst_factor = max(worst_factor, abs(chart.factor - alt)
                           / max(1.0, chart.factor))
    rep.add("hodograph_unit_speed", worst_speed, tol.tol_identity)
    rep.add("surface_energy_identity", worst_energy, tol.tol_identity)
    rep.add("chart_factor_compatibility", worst_factor, tol.tol_identity)

    rng = np.random.default_rng(42)
    worst_curv = 0.0
    for E in (-0.5, -1.0, -2.0):
        pts = [rng.normal(size=3) * 0.8 for _ in range(6)]
        worst_curv = max(worst_curv, ms.curvature_check(E, pts, rng=rng))
    rep.add("constant_curvature", worst_curv, 1e-3 * (tol.tol_drift / 1e-6))

    # one eccentric orbit: hodocycle residuals, chart lengths, clock, geodesics
    p0 = sample_orbit_elements(202, gamma, ecc_range=(0.5, 0.7))
    cs0 = cq.conserved_set(p0, params)
    T = gn.bound_orbit_period(cs0.E, cs0.eps, gamma)
    cfg = dyn.IntegratorConfig(dt=T / 4096, t_end=T)
    traj = ms.arclength_clock(dyn.integrate(p0, params, cfg), params)
    circle = ms.hodocycle(cs0, params)
    pi_samples = traj.q[:, 0:1] * traj.v[:, 1:] - traj.v[:, 0:1] * traj.q[:, 1:]
    radial, planar = ms.hodocycle_residuals(circle, pi_samples)
    rep.add("hodocycle_radial_residual", radial, tol.tol_drift)
    rep.add("hodocycle_planar_residual", planar, tol.tol_drift)
    L_pi, L_w = ms.chart_lengths(traj, params)
    rep.add("chart_length_agreement", abs(L_pi - L_w), tol.tol_identity)
    rep.add("arclength_clock_matches_metric_length",
            abs(L_pi - traj.s[-1] / gamma) / max(1.0, abs(L_pi)), tol.tol_drift)
    res_coarse, _ = ms.geodesic_residual(traj, params)
    cfg2 = dyn.IntegratorConfig(dt=T / 8192, t_end=T)
    traj2 = ms.arclength_clock(dyn.integrate(p0, params, cfg2), params)
    res_fine, _ = ms.geodesic_residual(traj2, params)
    rep.add("geodesic_residual_second_order",
            res_fine / max(res_coarse, 1e-30), 0.4)
    return rep


# ---------------------------------------------------------------------------
# Suite: ligon-schaaf (includes the so(4) momentum checks)


def ligon_schaaf_suite(seeds: int, tol: Tolerances,
                       params: dyn.KeplerParams | None = None) -> SuiteReport:
    params = params or dyn.KeplerParams(1.0)
    gamma = params.gamma
    rep = SuiteReport(suite="ligon-schaaf", seeds=seeds)

    worst = dict.fromkeys([
        "frame_orthonormality",
        "image_on_unit_bundle",
        "momentum_intertwining",
        "energy_intertwining",
        "phase_family_momentum_invariance",
        "momentum_sphere_image",
    ], 0.0)
    worst_equiv = 0.0
    worst_dab = 0.0
    rng = np.random.default_rng(777)
    for p in _points(seeds, gamma):
        f = ls.ls_frame(p, params)
        worst["frame_orthonormality"] = max(
            worst["frame_orthonormality"],
            abs(float(f.alpha @ f.alpha) - 1.0),
            abs(float(f.beta @ f.beta) - 1.0),
            abs(float(f.alpha @ f.beta)))
        d = ls.ls_map(p, params)
        worst["image_on_unit_bundle"] = max(
            worst["image_on_unit_bundle"],
            abs(float(d.x @ d.x) - 1.0), abs(float(d.x @ d.y)))
        cs = cq.conserved_set(p, params)
        jm = ls.delaunay_momentum(d)
        worst["momentum_intertwining"] = max(
            worst["momentum_intertwining"],
            float(np.max(np.abs(jm.left - cs.mu))),
            float(np.max(np.abs(jm.right - cs.etilde))))
        worst["energy_intertwining"] = max(
            worst["energy_intertwining"],
            abs(ls.delaunay_hamiltonian(d, params) - cs.E))
        d_alt = ls.ls_map(p, params, phase=rng.uniform(0.0, 2.0 * np.pi))
        jm_alt = ls.delaunay_momentum(d_alt)
        worst["phase_family_momentum_invariance"] = max(
            worst["phase_family_momentum_invariance"],
            float(np.max(np.abs(jm_alt.left - cs.mu))),
            float(np.max(np.abs(jm_alt.right - cs.etilde))),
            abs(ls.delaunay_hamiltonian(d_alt, params) - cs.E))
        worst["momentum_sphere_image"] = max(
            worst["momentum_sphere_image"],
            abs(float(np.linalg.norm(jm.left + jm.right)) - cs.nu),
            abs(float(np.linalg.norm(jm.left - jm.right)) - cs.nu))
        res, _q0sq = ls.equivalence_check(p, params, fd_step=tol.fd_step)
        fieldmag = float(np.linalg.norm(
            ls.delaunay_field(d, params))) / _q0sq
        worst_equiv = max(worst_equiv, res / max(1.0, fieldmag))
        worst_dab = max(worst_dab,
                        ls.dalpha_dbeta_check(p, params, fd_step=tol.fd_step))

    for name, value in worst.items():
        rep.add(name, value, tol.tol_identity)
    rep.add("flow_equivalence_up_to_clock", worst_equiv, tol.tol_fd)
    rep.add("frame_rotation_rates", worst_dab, tol.tol_fd)

    # so(4) bracket table through the structure matrix
    worst_so4 = 0.0
    accepted = 0
    seed = 0
    while accepted < max(10, seeds // 2) and seed < 50 * max(10, seeds):
        p = sample_phase_point(seed, (-1.0, -0.1), gamma)
        seed += 1
        cs = cq.conserved_set(p, params)
        if cs.eps < 0.2:
            continue
        accepted += 1
        P = dyn.structure_matrix(p)
        gmu = cq.gradient_mu(p)
        get = ls.gradient_etilde_rho(p, params)
        rho = ls.momentum_rho(p, params)
        eps_mu = np.einsum("ijk,k->ij", _EPS3, rho.left)
        eps_et = np.einsum("ijk,k->ij", _EPS3, rho.right)
        worst_so4 = max(
            worst_so4,
            float(np.max(np.abs(gmu @ P @ gmu.T - eps_mu))),
            float(np.max(np.abs(gmu @ P @ get.T - eps_et))),
            float(np.max(np.abs(get @ P @ get.T - eps_mu))))
    rep.add("so4_structure_constants", worst_so4, 1e-8 * (tol.tol_identity / 1e-9))

    c1 = fixture_c1()
    csc = cq.conserved_set(c1, params if gamma == 1.0 else dyn.KeplerParams(1.0))
    locus = abs(float(csc.mu @ csc.mu)
                - cq.circular_angular_momentum_sq(csc.H, dyn.KeplerParams(1.0)))
    rep.add("circular_locus_consistency", locus, tol.tol_identity)

    # closed-form flow: conservation, periodicity, RK4 convergence order
    d0 = ls.ls_map(sample_phase_point(3, (-0.8, -0.3), gamma), params)
    worst_flow = 0.0
    h0 = ls.delaunay_hamiltonian(d0, params)
    ynorm = float(np.linalg.norm(d0.y))
    omega = gamma**2 / ynorm**3
    for tval in (0.3, 1.7, 4.0):
        dt_ = ls.delaunay_flow(d0, tval, params)
        worst_flow = max(worst_flow,
                         abs(float(dt_.x @ dt_.x) - 1.0),
                         abs(float(dt_.x @ dt_.y)),
                         abs(ls.delaunay_hamiltonian(dt_, params) - h0))
    dback = ls.delaunay_flow(d0, 2.0 * np.pi / omega, params)
    worst_flow = max(worst_flow,
                     float(np.max(np.abs(dback.x - d0.x))),
                     float(np.max(np.abs(dback.y - d0.y))))
    rep.add("delaunay_flow_exactness", worst_flow, tol.tol_identity)

    def rk4_error(n_steps: int) -> float:
        period = 2.0 * np.pi / omega
        h = period / n_steps
        z = np.concatenate((d0.x, d0.y))

        def f(zz):
            return ls.delaunay_field(ls.DelaunayPoint(zz[:4], zz[4:]), params)

        for _ in range(n_steps):
            k1 = f(z)
            k2 = f(z + 0.5 * h * k1)
            k3 = f(z + 0.5 * h * k2)
            k4 = f(z + h * k3)
            z = z + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        ref = ls.delaunay_flow(d0, period, params)
        return float(np.max(np.abs(z - np.concatenate((ref.x, ref.y)))))

    e1, e2 = rk4_error(200), rk4_error(400)
    order = np.log2(e1 / e2)
    rep.add("delaunay_rk4_order_deficit", max(0.0, 3.8 - order), 0.0)

    # flow conjugation along an integrated orbit, on the tau clock
    c1p = fixture_c1()
    cfg = dyn.IntegratorConfig(dt=np.pi / 4096, t_end=np.pi)
    traj = ls.tau_clock(dyn.integrate(c1p, params if gamma == 1.0
                                      else dyn.KeplerParams(1.0), cfg))
    pars1 = dyn.KeplerParams(1.0)
    d0c = ls.ls_map(c1p, pars1)
    worst_conj = 0.0
    for i in range(0, len(traj), 256):
        di = ls.ls_map(traj.point(i), pars1)
        df = ls.delaunay_flow(d0c, traj.tau[i], pars1)
        worst_conj = max(worst_conj,
                         float(np.max(np.abs(di.x - df.x))),
                         float(np.max(np.abs(di.y - df.y))))
    rep.add("flow_conjugation_on_clock", worst_conj, tol.tol_drift)
    return rep


# ---------------------------------------------------------------------------
# Suite: gnomonic


def gnomonic_suite(seeds: int, tol: Tolerances,
                   params: dyn.KeplerParams | None = None,
                   mutate: bool = False) -> SuiteReport:
    params = params or dyn.KeplerParams(1.0)
    gamma = params.gamma
    rep = SuiteReport(suite="gnomonic", seeds=seeds)

    def phi_c_impl(e, pars):
        d = gn.phi_c(e, pars)
        if mutate:
            return ls.DelaunayPoint(x=d.x, y=-d.y)
        return d

    worst = dict.fromkeys([
        "projection_roundtrip",
        "energy_intertwining",
        "momentum_intertwining",
        "flat_regularizer_energy",
        "composition_identity",
        "back_map_roundtrip",
    ], 0.0)
    worst_push = 0.0
    worst_defect_match = 0.0
    worst_noise_margin = 0.0
    worst_phic_defect = 0.0
    worst_direct_floor = np.inf
    worst_phi_vs_direct = 0.0
    for p in _points(seeds, gamma):
        e = gn.psi(p)
        back = gn.psi_inverse(e)
        worst["projection_roundtrip"] = max(
            worst["projection_roundtrip"],
            float(np.max(np.abs(back.q - p.q))),
            float(np.max(np.abs(back.v - p.v))))
        de, dj = gn.intertwine_euclid(p, params)
        worst["energy_intertwining"] = max(worst["energy_intertwining"], de)
        worst["momentum_intertwining"] = max(worst["momentum_intertwining"], dj)
        d_flat = phi_c_impl(e, params)
        worst["flat_regularizer_energy"] = max(
            worst["flat_regularizer_energy"],
            abs(ls.delaunay_hamiltonian(d_flat, params)
                - gn.euclid_hamiltonian(e, params)))
        direct = ls.ls_map(p, params)
        worst["composition_identity"] = max(
            worst["composition_identity"],
            float(np.max(np.abs(d_flat.x - direct.x))),
            float(np.max(np.abs(d_flat.y - direct.y))))
        e_back = gn.phi_c_inverse(gn.phi_c(e, params), params)
        sph = gn.psi_inverse(e_back)
        worst["back_map_roundtrip"] = max(
            worst["back_map_roundtrip"],
            float(np.max(np.abs(sph.q - p.q))),
            float(np.max(np.abs(sph.v - p.v))))

        X = dyn.vector_field(p, params)
        worst_push = max(worst_push,
                         gn.pushforward_check(p, params, fd_step=tol.fd_step)
                         / max(1.0, float(np.linalg.norm(X))))
        defect = gn.symplectic_defect(p, params, fd_step=tol.fd_step)
        predicted = gn.kappa_defect_prediction(p)
        worst_defect_match = max(worst_defect_match, abs(defect - predicted))
        noise = gn.phi_c_pullback_defect(p, params, fd_step=tol.fd_step)
        worst_phic_defect = max(worst_phic_defect, noise)
        worst_noise_margin = max(worst_noise_margin,
                                 10.0 * noise / max(defect, 1e-300))
        direct_defect = gn.psi_pullback_defect(p, params, fd_step=tol.fd_step)
        worst_direct_floor = min(worst_direct_floor, direct_defect)
        phi_defect = gn.ls_pullback_defect(p, params, fd_step=tol.fd_step)
        worst_phi_vs_direct = max(
            worst_phi_vs_direct,
            abs(phi_defect - direct_defect) / max(1.0, direct_defect))

    for name, value in worst.items():
        rep.add(name, value, tol.tol_identity)
    rep.add("pushforward_up_to_clock", worst_push, tol.tol_fd)
    rep.add("scaling_defect_matches_closed_form", worst_defect_match, tol.tol_fd)
    rep.add("scaling_defect_above_noise", worst_noise_margin, 1.0)
    rep.add("flat_regularizer_defect_at_noise_floor", worst_phic_defect, tol.tol_fd)
    rep.add("projection_defect_above_witness_level",
            10.0 * tol.tol_fd / max(worst_direct_floor, 1e-300), 1.0)
    rep.add("regularizer_defect_equals_projection_defect",
            worst_phi_vs_direct, tol.tol_fd)

    # defect vanishes toward the pole
    rng = np.random.default_rng(5)
    qsmall = 1e-3 * rng.normal(size=3)
    qsmall /= np.linalg.norm(qsmall) * 1e3
    vdir = rng.normal(size=3)
    vdir -= (vdir @ qsmall) * qsmall / float(qsmall @ qsmall)
    q0 = np.sqrt(1.0 - float(qsmall @ qsmall))
    pole_state = SpherePhasePoint(
        np.concatenate(([q0], qsmall)),
        np.concatenate(([-(qsmall @ vdir) / q0], vdir)))
    rep.add("scaling_defect_vanishes_at_pole",
            gn.symplectic_defect(pole_state, params, fd_step=tol.fd_step),
            5e-3)

    # orbit-level checks: clock correspondence and flat-image property
    p0 = sample_orbit_elements(303, gamma, ecc_range=(0.4, 0.6))
    cs0 = cq.conserved_set(p0, params)
    T = gn.bound_orbit_period(cs0.E, cs0.eps, gamma)
    cfg = dyn.IntegratorConfig(dt=T / 6000, t_end=T)
    traj = ls.tau_clock(dyn.integrate(p0, params, cfg))
    rep.add("moser_clock_correspondence",
            abs(gn.moser_correspondence(traj, params)), tol.tol_drift)

    e0 = gn.psi(p0)
    Q, V = gn.integrate_euclid(e0, params, traj.tau)
    img_q = traj.q[:, 1:] / traj.q[:, 0:1]
    img_v = (traj.q[:, 0:1] * traj.v[:, 1:] - traj.v[:, 0:1] * traj.q[:, 1:])
    worst_img = max(float(np.max(np.abs(Q - img_q))),
                    float(np.max(np.abs(V - img_v))))
    rep.add("flat_orbit_image", worst_img, tol.tol_drift)
    return rep


SUITES = {
    "brackets": brackets_suite,
    "conserved": conserved_suite,
    "moser": moser_suite,
    "ligon-schaaf": ligon_schaaf_suite,
    "gnomonic": gnomonic_suite,
}


def run_suite(name: str, seeds: int, tol: Tolerances | None = None,
              params: dyn.KeplerParams | None = None,
              mutate: bool = False) -> list[SuiteReport]:
    """Run one named suite (or 'all'); returns a list of reports."""
    tol = tol or Tolerances()
    if name == "all":
        names = list(SUITES)
    else:
        names = [name]
    out = []
    for nm in names:
        fn = SUITES[nm]
        if nm == "gnomonic":
            out.append(fn(seeds, tol, params, mutate=mutate))
        else:
            out.append(fn(seeds, tol, params))
    return out
