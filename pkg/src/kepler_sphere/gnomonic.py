"""Central projection to the flat problem and the composition identity.

The upper hemisphere q0 > 0 projects to the tangent space at the pole by
Q = qvec/q0; on phase space the projection acts as

    Psi(q, v) = (qvec/q0, pi),        pi = q0*vvec - v0*qvec,

carrying spherical orbits to ordinary inverse-square orbits up to the
clock tau = integral dt/q0^2:  D(Psi) X_H = (1/q0^2) X_flat(Psi).  The
flat problem's regularizing map Phi_c (same construction as the sphere's
Phi, written in (Q, V)) satisfies Phi_c . Psi = Phi identically.

Psi preserves energies and momenta but NOT the symplectic structure.  In
the q-chart with the flat form sum dq_i ^ dv_i, the non-symplecticity is
carried entirely by the fiber-scaling component kappa: (q, v) ->
(q, (1-|q|^2) v) of the decomposition Psi = (tangent lift) . kappa, whose
pullback has the closed form

    kappa* (dq ^ dv) = (1-|q|^2) dq ^ dv - 2 sum v_i q_j dq_i ^ dq_j.

symplectic_defect measures exactly this component (finite differences
through the lift-inverted projection), so the measured defect matches
the closed form; psi_pullback_defect measures the raw pullback through
Psi itself, which witnesses non-symplecticity but includes the lift's
chart distortion on top of the kappa part.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson, simpson
from scipy.optimize import brentq

from .conserved import conserved_set
from .dynamics import KeplerParams, Trajectory
from .errors import (
    DegenerateOrbit,
    EquatorSingularity,
    PositiveEnergy,
    PunctureHit,
)
from .geometry import SpherePhasePoint, Vec3
from .ligon_schaaf import DelaunayPoint, So4Element, ls_map

_EQUATOR_GUARD = 1e-8
_PUNCTURE = 1e-12


@dataclass
class EuclidPhasePoint:
    """Flat-space state: position Q (punctured at 0) and velocity V."""

    Q: Vec3
    V: Vec3

    def __post_init__(self):
        self.Q = np.asarray(self.Q, dtype=float)
        self.V = np.asarray(self.V, dtype=float)


@dataclass
class EuclidConserved:
    H_K: float
    J_K: So4Element


def psi(p: SpherePhasePoint, guard: float = _EQUATOR_GUARD) -> EuclidPhasePoint:
    """Gnomonic projection (Q, V) = (qvec/q0, pi).

    Raises EquatorSingularity at or below the guard level on q0 (the
    chart blows up at the equator) and PunctureHit for qvec = 0, whose
    image is the flat collision point Q = 0.
    """
    q0 = float(p.q[0])
    if q0 <= guard:
        raise EquatorSingularity(f"q0 = {q0:g} at or below the chart guard")
    r2 = float(p.qvec @ p.qvec)
    if r2 <= _PUNCTURE**2:
        raise PunctureHit("pole tangent point maps to the flat collision point Q = 0")
    return EuclidPhasePoint(Q=p.qvec / q0, V=q0 * p.vvec - p.v[0] * p.qvec)


def psi_inverse(e: EuclidPhasePoint) -> SpherePhasePoint:
    """Inverse projection: q0 = 1/sqrt(1+|Q|^2), qvec = q0*Q, pi = V.

    v is fixed by requiring pi(result) = V and tangency, which gives
    v0 = -qvec.V and vvec = (V + v0*qvec)/q0.
    """
    Q, V = e.Q, e.V
    if float(Q @ Q) <= _PUNCTURE**2:
        raise PunctureHit("Q = 0 has no preimage off the pole tangent fiber")
    q0 = 1.0 / np.sqrt(1.0 + float(Q @ Q))
    qvec = q0 * Q
    v0 = -float(qvec @ V)
    vvec = (V + v0 * qvec) / q0
    return SpherePhasePoint(np.concatenate(([q0], qvec)),
                            np.concatenate(([v0], vvec)))


def euclid_hamiltonian(e: EuclidPhasePoint, params: KeplerParams) -> float:
    """0.5*V.V - gamma/|Q|."""
    r = float(np.linalg.norm(e.Q))
    if r <= _PUNCTURE:
        raise PunctureHit("flat Hamiltonian singular at Q = 0")
    return 0.5 * float(e.V @ e.V) - params.gamma / r


def euclid_field(e: EuclidPhasePoint, params: KeplerParams) -> tuple[Vec3, Vec3]:
    """(Qdot, Vdot) = (V, -gamma*Q/|Q|^3)."""
    r = float(np.linalg.norm(e.Q))
    if r <= _PUNCTURE:
        raise PunctureHit("flat field singular at Q = 0")
    return e.V.copy(), -params.gamma * e.Q / r**3


def euclid_conserved(e: EuclidPhasePoint, params: KeplerParams) -> EuclidConserved:
    """Energy and the so(4) momentum pair (Q x V, etilde) of the flat problem."""
    h = euclid_hamiltonian(e, params)
    if h >= 0:
        raise PositiveEnergy(f"flat momentum pair requires H < 0, got {h:g}")
    gamma = params.gamma
    nu = gamma / np.sqrt(-2.0 * h)
    mu = np.cross(e.Q, e.V)
    runge = np.cross(e.V, mu) / gamma - e.Q / np.linalg.norm(e.Q)
    return EuclidConserved(H_K=h, J_K=So4Element(left=mu, right=-nu * runge))


def _chart_to_state(z: np.ndarray) -> SpherePhasePoint:
    """(qvec, vvec) chart of the upper-hemisphere tangent bundle."""
    qvec, vvec = z[:3], z[3:]
    q0 = np.sqrt(1.0 - float(qvec @ qvec))
    v0 = -float(qvec @ vvec) / q0
    return SpherePhasePoint(np.concatenate(([q0], qvec)),
                            np.concatenate(([v0], vvec)))


def _state_to_chart(p: SpherePhasePoint) -> np.ndarray:
    return np.concatenate((p.qvec, p.vvec))


def tangent_lift_inverse(e: EuclidPhasePoint) -> np.ndarray:
    """Undo the chart-lift part of the projection: (Q, W) -> (qvec, vvec-slot).

    The base map qvec -> Q = qvec/sqrt(1-|qvec|^2) lifts fibers by the
    matrix (1/q0)(I + qvec qvec^T / q0^2); its inverse is
    q0 (I - qvec qvec^T).  Composing this with Psi leaves exactly the
    fiber scaling vvec -> (1-|qvec|^2) vvec.
    """
    Q, W = e.Q, e.V
    q0 = 1.0 / np.sqrt(1.0 + float(Q @ Q))
    qvec = q0 * Q
    fiber = q0 * (W - qvec * float(qvec @ W))
    return np.concatenate((qvec, fiber))


def pushforward_check(p: SpherePhasePoint, params: KeplerParams,
                      fd_step: float = 1e-6) -> float:
    """|| D(Psi) X_H(p) - (1/q0^2) X_flat(Psi(p)) || by central differences."""
    from .dynamics import vector_field

    X = vector_field(p, params)

    def image(state: SpherePhasePoint) -> np.ndarray:
        ep = psi(state)
        return np.concatenate((ep.Q, ep.V))

    plus = image(SpherePhasePoint(p.q + fd_step * X[:4], p.v + fd_step * X[4:]))
    minus = image(SpherePhasePoint(p.q - fd_step * X[:4], p.v - fd_step * X[4:]))
    dpsi = (plus - minus) / (2.0 * fd_step)
    qd, vd = euclid_field(psi(p), params)
    target = np.concatenate((qd, vd)) / float(p.q[0]) ** 2
    return float(np.linalg.norm(dpsi - target))


def intertwine_euclid(p: SpherePhasePoint, params: KeplerParams) -> tuple[float, float]:
    """(|H_flat(Psi p) - E|, max |J_flat(Psi p) - (mu, etilde)|)."""
    cs = conserved_set(p, params)
    if cs.nu is None:
        raise PositiveEnergy(f"momentum comparison requires E < 0, got {cs.E:g}")
    ec = euclid_conserved(psi(p), params)
    de = abs(ec.H_K - cs.E)
    dj = max(float(np.max(np.abs(ec.J_K.left - cs.mu))),
             float(np.max(np.abs(ec.J_K.right - cs.etilde))))
    return de, dj


def phi_c(e: EuclidPhasePoint, params: KeplerParams) -> DelaunayPoint:
    """Flat-space regularizing map, same construction as the sphere's.

    alpha_c = ((V.Q)/nu, Q/|Q| - ((V.Q)/gamma) V)
    beta_c  = ((|Q|/gamma)|V|^2 - 1, (|Q|/nu) V),   phase = alpha_c0.
    """
    h = euclid_hamiltonian(e, params)
    if h >= 0:
        raise PositiveEnergy(f"regularizing map requires H < 0, got {h:g}")
    gamma = params.gamma
    nu = gamma / np.sqrt(-2.0 * h)
    Q, V = e.Q, e.V
    r = float(np.linalg.norm(Q))
    vq = float(V @ Q)
    alpha = np.concatenate(([vq / nu], Q / r - (vq / gamma) * V))
    beta = np.concatenate(([(r / gamma) * float(V @ V) - 1.0], (r / nu) * V))
    phi = alpha[0]
    sin, cos = np.sin(phi), np.cos(phi)
    return DelaunayPoint(x=alpha * sin + beta * cos,
                         y=nu * (-alpha * cos + beta * sin))


def phi_c_inverse(d: DelaunayPoint, params: KeplerParams) -> EuclidPhasePoint:
    """Invert the flat regularizing map on its image.

    The phase solves phi = x0 sin(phi) - (y0/nu) cos(phi); the right side
    has amplitude equal to the eccentricity (< 1 on the image), so the
    root is unique and bracketed by +-(amplitude + delta).
    """
    gamma = params.gamma
    nu = float(np.linalg.norm(d.y))
    if nu < 1e-14:
        raise DegenerateOrbit("cannot invert from the zero section")
    x0 = float(d.x[0])
    y0n = float(d.y[0]) / nu

    def f(phi):
        return x0 * np.sin(phi) - y0n * np.cos(phi) - phi

    amp = np.hypot(x0, y0n)
    if amp >= 1.0:
        raise DegenerateOrbit(f"phase amplitude {amp:g} >= 1: not on the bound image")
    lo, hi = -(amp + 1e-9), amp + 1e-9
    phi = brentq(f, lo, hi, xtol=1e-15, rtol=8.9e-16) if amp > 0 else 0.0
    sin, cos = np.sin(phi), np.cos(phi)
    alpha = d.x * sin - (d.y / nu) * cos
    beta = d.x * cos + (d.y / nu) * sin
    bn = float(np.linalg.norm(beta[1:]))
    if bn < 1e-13:
        raise DegenerateOrbit("rectilinear image: velocity direction undefined")
    speed = gamma * (beta[0] + 1.0) / (nu * bn)
    r = nu * bn / speed
    V = (nu / r) * beta[1:]
    Q = r * alpha[1:] + (nu * alpha[0] / gamma) * r * V
    return EuclidPhasePoint(Q=Q, V=V)


def composition_check(p: SpherePhasePoint, params: KeplerParams) -> float:
    """max |Phi_c(Psi(p)) - Phi(p)| over the 8 components (identically 0)."""
    via_flat = phi_c(psi(p), params)
    direct = ls_map(p, params)
    return max(float(np.max(np.abs(via_flat.x - direct.x))),
               float(np.max(np.abs(via_flat.y - direct.y))))


# ---------------------------------------------------------------------------
# Symplectic-defect machinery.  All pullbacks are finite-difference and
# measured against the flat chart form Omega = sum dq_i ^ dv_i, entrywise.

_OMEGA6 = np.block([[np.zeros((3, 3)), np.eye(3)], [-np.eye(3), np.zeros((3, 3))]])
_OMEGA8 = np.block([[np.zeros((4, 4)), np.eye(4)], [-np.eye(4), np.zeros((4, 4))]])


def _fd_pullback(f, z: np.ndarray, form: np.ndarray, h: float) -> np.ndarray:
    cols = []
    for k in range(6):
        dz = np.zeros(6)
        dz[k] = h
        cols.append((f(z + dz) - f(z - dz)) / (2.0 * h))
    J = np.column_stack(cols)
    return J.T @ form @ J


def kappa_pullback_matrix(p: SpherePhasePoint) -> np.ndarray:
    """Closed form of the fiber-scaling pullback in the q-chart.

    (1-|q|^2) sum dq^dv - 2 sum v_i q_j dq_i ^ dq_j, as a 6x6
    antisymmetric coefficient matrix in (qvec, vvec).
    """
    q, v = p.qvec, p.vvec
    s2 = 1.0 - float(q @ q)
    out = np.zeros((6, 6))
    out[:3, :3] = 2.0 * (np.outer(q, v) - np.outer(v, q))
    out[:3, 3:] = s2 * np.eye(3)
    out[3:, :3] = -s2 * np.eye(3)
    return out


def symplectic_defect(p: SpherePhasePoint, params: KeplerParams | None = None,
                      fd_step: float = 1e-6) -> float:
    """Max-entry defect of the fiber-scaling pullback vs the chart form.

    Finite-difference pullback of the flat form through the projection
    with the chart lift undone (Psi followed by tangent_lift_inverse,
    which is the scaling (q, v) -> (q, (1-|q|^2) v)); the result matches
    kappa_pullback_matrix, and its deviation from sum dq^dv is the
    symplectic defect.  Strictly positive whenever vvec != 0 off the
    pole; -> 0 as qvec -> 0.
    """

    def f(z):
        return tangent_lift_inverse(psi(_chart_to_state(z)))

    M = _fd_pullback(f, _state_to_chart(p), _OMEGA6, fd_step)
    return float(np.max(np.abs(M - _OMEGA6)))


def kappa_defect_prediction(p: SpherePhasePoint) -> float:
    """The defect symplectic_defect should measure, from the closed form."""
    return float(np.max(np.abs(kappa_pullback_matrix(p) - _OMEGA6)))


def psi_pullback_defect(p: SpherePhasePoint, params: KeplerParams | None = None,
                        fd_step: float = 1e-6) -> float:
    """Max-entry defect of the raw pullback through the projection itself.

    Includes the chart distortion of the lift on top of the fiber
    scaling; bounded away from zero at generic points (the map is not
    symplectic), and identical to the regularizing map's defect because
    the flat regularizing map is symplectic.
    """

    def f(z):
        ep = psi(_chart_to_state(z))
        return np.concatenate((ep.Q, ep.V))

    M = _fd_pullback(f, _state_to_chart(p), _OMEGA6, fd_step)
    return float(np.max(np.abs(M - _OMEGA6)))


def ls_pullback_defect(p: SpherePhasePoint, params: KeplerParams,
                       fd_step: float = 1e-6) -> float:
    """Defect of the sphere-side regularizing map in the same chart."""

    def f(z):
        d = ls_map(_chart_to_state(z), params)
        return np.concatenate((d.x, d.y))

    M = _fd_pullback(f, _state_to_chart(p), _OMEGA8, fd_step)
    return float(np.max(np.abs(M - _OMEGA6)))


def phi_c_pullback_defect(p: SpherePhasePoint, params: KeplerParams,
                          fd_step: float = 1e-6) -> float:
    """Defect of the flat regularizing map, evaluated at the projected point.

    The map is symplectic, so this sits at the finite-difference noise
    floor; used as the reference noise level for the witnesses above.
    """
    e0 = psi(p)

    def f(z):
        d = phi_c(EuclidPhasePoint(Q=z[:3], V=z[3:]), params)
        return np.concatenate((d.x, d.y))

    z0 = np.concatenate((e0.Q, e0.V))
    M = _fd_pullback(f, z0, _OMEGA8, fd_step)
    return float(np.max(np.abs(M - _OMEGA6)))


# ---------------------------------------------------------------------------
# Clock correspondence and flat-image utilities.


def moser_correspondence(traj: Trajectory, params: KeplerParams) -> float:
    """Difference of the two arc-length integrals along a trajectory.

    The flat-side Moser clock integral dtau/|Q| of the projected orbit
    equals the spherical integral dt/(q0 |qvec|); both are computed by
    Simpson quadrature on their own grids and the (signed) difference is
    returned.
    """
    q0 = traj.q[:, 0]
    r = np.linalg.norm(traj.q[:, 1:], axis=1)
    tau = traj.tau
    if tau is None:
        tau = cumulative_simpson(1.0 / q0**2, x=traj.t, initial=0.0)
    # |Q| = r/q0 sample-wise on the projected trajectory
    flat_side = simpson(q0 / r, x=tau)
    sphere_side = simpson(1.0 / (q0 * r), x=traj.t)
    return float(flat_side - sphere_side)


def integrate_euclid(e0: EuclidPhasePoint, params: KeplerParams,
                     tau_grid: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """RK4 integration of the flat field on a given (nonuniform) clock grid.

    Returns arrays Q, V of shape (len(tau_grid), 3) with row 0 = e0.
    """
    gamma = params.gamma
    n = len(tau_grid)
    Q = np.empty((n, 3))
    V = np.empty((n, 3))
    Q[0], V[0] = e0.Q, e0.V

    def acc(qq):
        return -gamma * qq / np.linalg.norm(qq) ** 3

    for i in range(n - 1):
        h = tau_grid[i + 1] - tau_grid[i]
        q, v = Q[i], V[i]
        k1q, k1v = v, acc(q)
        k2q, k2v = v + 0.5 * h * k1v, acc(q + 0.5 * h * k1q)
        k3q, k3v = v + 0.5 * h * k2v, acc(q + 0.5 * h * k2q)
        k4q, k4v = v + h * k3v, acc(q + h * k3q)
        Q[i + 1] = q + (h / 6.0) * (k1q + 2 * k2q + 2 * k3q + k4q)
        V[i + 1] = v + (h / 6.0) * (k1v + 2 * k2v + 2 * k3v + k4v)
    return Q, V


def bound_orbit_period(E: float, eps: float, gamma: float, nodes: int = 400) -> float:
    """Period of a bound orbit in sphere time, by quadrature.

    The projected orbit is an ellipse with semi-major axis a =
    gamma/(-2E) run on the clock tau; with eccentric anomaly u,
    dtau = sqrt(a^3/gamma)(1 - eps cos u) du and dt = dtau/(1 + rho^2)
    with rho = a(1 - eps cos u), giving

        T = sqrt(a^3/gamma) * integral_0^{2pi} (1-eps cos u) /
            (1 + a^2 (1-eps cos u)^2) du.
    """
    if E >= 0:
        raise PositiveEnergy("period defined for bound orbits only")
    if not 0.0 <= eps < 1.0:
        raise DegenerateOrbit(f"eccentricity {eps:g} outside [0, 1)")
    a = gamma / (-2.0 * E)
    nodes_x, weights = np.polynomial.legendre.leggauss(nodes)
    u = np.pi * (nodes_x + 1.0)
    w = np.pi * weights
    rho = a * (1.0 - eps * np.cos(u))
    integrand = (1.0 - eps * np.cos(u)) / (1.0 + rho**2)
    return float(np.sqrt(a**3 / gamma) * np.sum(w * integrand))
