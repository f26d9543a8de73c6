"""Velocity-space geometry of bound orbits: hodocycles and the conformal metric.

For E < 0 the modified velocity pi = q0*vvec - v0*qvec traces a circle
(the hodocycle) of radius gamma/|mu| centered at the conserved vector B,
lying in the plane normal to mu.  Velocity space carries the conformal
metric

    ds^2 = 4 dpi.dpi / (|pi|^2 - 2E)^2,

of constant curvature -2E, together with the inverted chart w = pi/|pi|^2
where the same metric reads 4 dw.dw / (1 - 2E w.w)^2.  Along an orbit the
curve pi(t) traverses the hodocycle at unit metric speed once time is
traded for the arc-length clock s = integral gamma dt / (q0 |qvec|).

The clock stored here carries the gamma factor, so the metric length of
a segment equals (s1 - s0)/gamma; speed identities below are phrased in
the gamma-robust form |dpi/dt| * q0 * |qvec| = 0.5*|pi|^2 - E, which at
gamma = 1 is literally |dpi/ds| = |0.5*|pi|^2 - E|.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson, simpson

from .dynamics import KeplerParams, Trajectory, vector_field
from .errors import CollisionProximity, DegenerateOrbit, OutsideChart, ZeroSection
from .geometry import SpherePhasePoint, Vec3
from .conserved import ConservedSet, conserved_set, modified_velocity


@dataclass
class Hodocycle:
    center: Vec3
    radius: float
    normal: Vec3


@dataclass
class MoserChart:
    """Inverted-chart data of one velocity point: energy, factor at pi, w."""

    E: float
    factor: float
    w: Vec3


def hodocycle(cs: ConservedSet, params: KeplerParams) -> Hodocycle:
    """Circle traced by pi: center B, radius gamma/|mu|, normal mu-hat."""
    mu_norm = float(np.linalg.norm(cs.mu))
    if mu_norm <= 1e-12:
        raise DegenerateOrbit("hodocycle undefined for vanishing angular momentum")
    return Hodocycle(center=cs.B.copy(), radius=params.gamma / mu_norm,
                     normal=cs.mu / mu_norm)


def hodocycle_residuals(h: Hodocycle, pi_samples: np.ndarray) -> tuple[float, float]:
    """(max |pi - center| - radius deviation, max out-of-plane component).

    pi_samples has shape (n, 3).
    """
    rel = pi_samples - h.center
    radial = np.abs(np.linalg.norm(rel, axis=1) - h.radius)
    planar = np.abs(rel @ h.normal)
    return float(radial.max()), float(planar.max())


def moser_metric(pi: Vec3, E: float) -> float:
    """Conformal factor 4/(|pi|^2 - 2E)^2 of the velocity-space metric."""
    p2 = float(np.asarray(pi) @ np.asarray(pi))
    gap = p2 - 2.0 * E
    if gap <= 0:
        raise OutsideChart(f"pi.pi = {p2:g} <= 2E = {2 * E:g}")
    return 4.0 / gap**2


def moser_metric_inverted(w: Vec3, E: float) -> float:
    """Conformal factor 4/(1 - 2E w.w)^2 in the inverted chart."""
    w2 = float(np.asarray(w) @ np.asarray(w))
    gap = 1.0 - 2.0 * E * w2
    if gap <= 0:
        raise OutsideChart(f"1 - 2E w.w = {gap:g} <= 0")
    return 4.0 / gap**2


def invert_velocity(pi: Vec3) -> Vec3:
    """w = pi/|pi|^2, the inverted chart coordinate."""
    pi = np.asarray(pi, dtype=float)
    p2 = float(pi @ pi)
    if p2 < 1e-28:
        raise ZeroSection("inverted coordinate undefined at pi = 0")
    return pi / p2


def moser_chart(p: SpherePhasePoint, params: KeplerParams) -> MoserChart:
    cs = conserved_set(p, params)
    pi = cs.pi
    return MoserChart(E=cs.E, factor=moser_metric(pi, cs.E), w=invert_velocity(pi))


def arclength_clock(traj: Trajectory, params: KeplerParams) -> Trajectory:
    """Attach s(t_i) = integral_0^{t_i} gamma dt / (q0 |qvec|) to a trajectory.

    Cumulative Simpson quadrature on the sample grid -- fourth order,
    matching the RK4 integrator that produced the samples.  A trajectory
    truncated by the collision guard is rejected here, since the clock
    integrand is about to blow up where it stopped.
    """
    if traj.collision is not None:
        raise CollisionProximity(
            "trajectory was truncated by the collision guard; arc-length clock "
            "undefined past the last valid sample",
            q=traj.collision.q, v=traj.collision.v, t=traj.collision.t,
            guard=traj.collision.guard,
        )
    q0 = traj.q[:, 0]
    r = np.linalg.norm(traj.q[:, 1:], axis=1)
    integrand = params.gamma / (q0 * r)
    s = cumulative_simpson(integrand, x=traj.t, initial=0.0)
    return Trajectory(t=traj.t, q=traj.q, v=traj.v, tau=traj.tau, s=s,
                      collision=None)


def modified_velocity_rate(p: SpherePhasePoint, params: KeplerParams) -> Vec3:
    """dpi/dt along the flow, by the product rule on pi = q0*vvec - v0*qvec.

    Closed form: -gamma * qvec / |qvec|^3; computed here from the vector
    field instead, so the two versions cross-check each other in tests.
    """
    X = vector_field(p, params)
    qdot, vdot = X[:4], X[4:]
    return (qdot[0] * p.vvec + p.q[0] * vdot[1:]
            - vdot[0] * p.qvec - p.v[0] * qdot[1:])


def hodograph_speed_residual(p: SpherePhasePoint, params: KeplerParams) -> float:
    """| |dpi/dt| * q0 * |qvec| - (0.5*|pi|^2 - E) |.

    The gamma-robust form of the unit-speed statement for the hodograph
    on the arc-length clock; with gamma = 1 it is exactly
    | |dpi/ds| - |0.5*|pi|^2 - E| |.
    """
    cs = conserved_set(p, params)
    rate = modified_velocity_rate(p, params)
    r = float(np.linalg.norm(p.qvec))
    lhs = float(np.linalg.norm(rate)) * float(p.q[0]) * r
    rhs = 0.5 * float(cs.pi @ cs.pi) - cs.E
    return abs(lhs - rhs)


def energy_identity_residual(p: SpherePhasePoint, params: KeplerParams) -> float:
    """gamma*q0/|qvec| - (0.5*|pi|^2 - E); vanishes on valid states."""
    pi = modified_velocity(p)
    r = float(np.linalg.norm(p.qvec))
    v2 = float(p.v @ p.v)
    mu = np.cross(p.qvec, p.vvec)
    # E spelled out directly so both sides are independent evaluations.
    E = 0.5 * v2 - params.gamma * p.q[0] / np.sqrt(1.0 - p.q[0] ** 2) \
        - 0.5 * float(mu @ mu)
    lhs = params.gamma * float(p.q[0]) / r
    rhs = 0.5 * float(pi @ pi) - E
    return lhs - rhs


def curvature_check(E: float, samples: list, fd_step: float = 1e-4,
                    rng: np.random.Generator | None = None) -> float:
    """Max deviation of the numeric sectional curvature from -2E.

    For each sample pi the Gaussian curvature of the conformal metric is
    estimated on a 2-plane through the origin containing pi, using the
    conformal-factor formula K = -(1/lambda) * Laplacian_2D(0.5*log(lambda))
    with a five-point stencil of step fd_step.  Planes through the origin
    are totally geodesic for this rotationally symmetric factor, so the
    section's curvature equals the ambient one.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    worst = 0.0
    for pi in samples:
        pi = np.asarray(pi, dtype=float)
        moser_metric(pi, E)  # raises OutsideChart if inadmissible
        p = float(np.linalg.norm(pi))
        if p < 1e-12:
            e1 = np.array([1.0, 0.0, 0.0])
        else:
            e1 = pi / p
        # second in-plane direction, orthonormal to e1
        while True:
            trial = rng.normal(size=3)
            trial -= (trial @ e1) * e1
            n = np.linalg.norm(trial)
            if n > 1e-6:
                e2 = trial / n
                break

        def log_factor(a: float, b: float) -> float:
            x = pi + a * e1 + b * e2
            return 0.5 * np.log(moser_metric(x, E))

        h = fd_step
        lap = (log_factor(h, 0.0) + log_factor(-h, 0.0)
               + log_factor(0.0, h) + log_factor(0.0, -h)
               - 4.0 * log_factor(0.0, 0.0)) / h**2
        curv = -lap / moser_metric(pi, E)
        worst = max(worst, abs(curv - (-2.0 * E)))
    return worst


def chart_lengths(traj: Trajectory, params: KeplerParams) -> tuple[float, float]:
    """Metric length of the velocity curve in the pi-chart and the w-chart.

    Both are Simpson quadratures of sqrt(factor)*|velocity| over t; the
    integrands agree pointwise (|dw| = |dpi|/|pi|^2 exactly), so the two
    results differ only by roundoff.
    """
    E = None
    pi_all = traj.q[:, 0:1] * traj.v[:, 1:] - traj.v[:, 0:1] * traj.q[:, 1:]
    r = np.linalg.norm(traj.q[:, 1:], axis=1)
    cs0 = conserved_set(traj.point(0), params)
    E = cs0.E
    pidot = -params.gamma * traj.q[:, 1:] / r[:, None] ** 3
    p2 = np.sum(pi_all * pi_all, axis=1)
    f_pi = 2.0 / (p2 - 2.0 * E) * np.linalg.norm(pidot, axis=1)
    w = pi_all / p2[:, None]
    wdot = pidot / p2[:, None] - 2.0 * (np.sum(pi_all * pidot, axis=1) / p2**2)[:, None] * pi_all
    w2 = np.sum(w * w, axis=1)
    f_w = 2.0 / (1.0 - 2.0 * E * w2) * np.linalg.norm(wdot, axis=1)
    return float(simpson(f_pi, x=traj.t)), float(simpson(f_w, x=traj.t))


def geodesic_residual(traj: Trajectory, params: KeplerParams) -> tuple[float, float]:
    """Max residual of the conformal-metric geodesic equation along pi(s).

    The curve is differentiated by nonuniform central differences on the
    arc-length parameter sigma = s/gamma (an affine parameter for the
    metric).  Returns (max residual norm, max sigma spacing); the
    residual is expected to scale like the spacing squared.
    """
    if traj.s is None:
        traj = arclength_clock(traj, params)
    sigma = traj.s / params.gamma
    pi_all = traj.q[:, 0:1] * traj.v[:, 1:] - traj.v[:, 0:1] * traj.q[:, 1:]
    cs0 = conserved_set(traj.point(0), params)
    E = cs0.E
    worst = 0.0
    hmax = 0.0
    for i in range(1, len(traj) - 1):
        h1 = sigma[i] - sigma[i - 1]
        h2 = sigma[i + 1] - sigma[i]
        denom = h1 * h2 * (h1 + h2)
        d1 = (h1**2 * pi_all[i + 1] - h2**2 * pi_all[i - 1]
              + (h2**2 - h1**2) * pi_all[i]) / denom
        d2 = 2.0 * (h1 * pi_all[i + 1] + h2 * pi_all[i - 1]
                    - (h1 + h2) * pi_all[i]) / denom
        x = pi_all[i]
        # grad of u = 0.5*log(lambda) = const - log(|pi|^2 - 2E)
        grad_u = -2.0 * x / (float(x @ x) - 2.0 * E)
        resid = d2 + 2.0 * float(grad_u @ d1) * d1 - grad_u * float(d1 @ d1)
        worst = max(worst, float(np.linalg.norm(resid)))
        hmax = max(hmax, max(h1, h2))
    return worst, hmax
