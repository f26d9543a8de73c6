"""Hamiltonian dynamics of the attractive central-force problem on S^3.

The Hamiltonian is H(q, v) = 0.5*<v, v> - gamma*q0/sqrt(1 - q0^2) on the
tangent bundle of the unit sphere.  The constrained bracket of ambient
coordinate functions is encoded by an 8x8 structure matrix in the
variables z = (q0..q3, v0..v3):

    {q_i, q_j} = 0
    {q_i, v_j} = delta_ij - q_i q_j
    {v_i, v_j} = v_i q_j - q_i v_j

which is antisymmetric by construction and satisfies the Jacobi identity
for every z, on or off the constraint set.  The equations of motion are
recovered as z_dot = Pi(z) grad H(z).

Two integrators are provided: a fixed-step RK4 with periodic constraint
reprojection, and an adaptive DOP853 leg (scipy) with a terminal event
on the collision guard band for near-collision studies.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import CollisionProximity, ConfigError, StepFailure
from .geometry import SpherePhasePoint, Vec4, project_arrays

DEFAULT_COLLISION_GUARD = 1e-8
_DOP853_RTOL = 1e-11
_DOP853_ATOL = 1e-12

# 8x8 real antisymmetric matrix in z = (q, v).
StructureMatrix = np.ndarray


@dataclass(frozen=True)
class KeplerParams:
    """Coupling strength of the attracting center at the north pole."""

    gamma: float = 1.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ConfigError("gamma must be positive")


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "rk4_projected"
    dt: float = 1e-3
    t_end: float = 1.0
    reproject_every: int = 1
    collision_guard: float = DEFAULT_COLLISION_GUARD

    def __post_init__(self):
        if self.method not in ("rk4_projected", "dop853_projected"):
            raise ConfigError(f"unknown integrator method {self.method!r}")
        if not self.dt > 0:
            raise ConfigError("dt must be positive")
        if not self.t_end > 0:
            raise ConfigError("t_end must be positive")
        if self.reproject_every < 0:
            raise ConfigError("reproject_every must be >= 0")
        if self.collision_guard < 0:
            raise ConfigError("collision_guard must be >= 0")


@dataclass
class CollisionEvent:
    """Where and when an integration entered the collision guard band."""

    t: float
    q: Vec4
    v: Vec4
    guard: float


@dataclass
class Trajectory:
    """Samples (t_i, q_i, v_i) of one integrated orbit.

    tau and s are optional reparametrization clocks, attached by the
    chart modules; collision is set when the run was truncated by the
    guard band instead of reaching t_end.
    """

    t: np.ndarray
    q: np.ndarray
    v: np.ndarray
    tau: np.ndarray | None = None
    s: np.ndarray | None = None
    collision: CollisionEvent | None = field(default=None)

    def __len__(self) -> int:
        return len(self.t)

    def point(self, i: int) -> SpherePhasePoint:
        return SpherePhasePoint(self.q[i].copy(), self.v[i].copy())


def _check_guard(q0: float, guard: float, t: float | None = None, q=None, v=None):
    if 1.0 - q0 * q0 <= guard:
        raise CollisionProximity(
            f"state within collision guard band (1 - q0^2 <= {guard:g})",
            q=q, v=v, t=t, guard=guard,
        )


def potential(q: Vec4, params: KeplerParams, guard: float = DEFAULT_COLLISION_GUARD) -> float:
    """V(q) = -gamma*q0/sqrt(1 - q0^2), singular at both poles."""
    q0 = float(q[0])
    _check_guard(q0, guard, q=np.asarray(q))
    return -params.gamma * q0 / np.sqrt(1.0 - q0 * q0)


def potential_gradient(q: Vec4, params: KeplerParams) -> Vec4:
    """Ambient gradient of the potential: only the q0 slot is nonzero."""
    q0 = float(q[0])
    g = np.zeros(4)
    g[0] = -params.gamma / (1.0 - q0 * q0) ** 1.5
    return g


def hamiltonian(p: SpherePhasePoint, params: KeplerParams,
                guard: float = DEFAULT_COLLISION_GUARD) -> float:
    return 0.5 * float(p.v @ p.v) + potential(p.q, params, guard=guard)


def hamiltonian_gradient(p: SpherePhasePoint, params: KeplerParams) -> np.ndarray:
    """grad H in the ambient 8 variables z = (q, v)."""
    out = np.empty(8)
    out[:4] = potential_gradient(p.q, params)
    out[4:] = p.v
    return out


def structure_matrix(p: SpherePhasePoint) -> StructureMatrix:
    """The 8x8 bracket matrix Pi(z) at the given point.

    Exactly antisymmetric: the off-diagonal blocks are built from one
    shared array and the vv block from a single outer-product pair.
    """
    q, v = p.q, p.v
    proj = np.eye(4) - np.outer(q, q)
    vv = np.outer(v, q) - np.outer(q, v)
    out = np.zeros((8, 8))
    out[:4, 4:] = proj
    out[4:, :4] = -proj
    out[4:, 4:] = vv
    return out


def structure_matrix_derivative(p: SpherePhasePoint) -> np.ndarray:
    """T[i, j, k] = d Pi_ij / d z_k, the exact derivative of the bracket matrix."""
    q, v = p.q, p.v
    T = np.zeros((8, 8, 8))
    eye = np.eye(4)
    for a in range(4):
        for b in range(4):
            for g in range(4):
                d = -eye[a, g] * q[b] - q[a] * eye[b, g]
                T[a, 4 + b, g] = d
                T[4 + a, b, g] = -d
                T[4 + a, 4 + b, g] = v[a] * eye[b, g] - eye[a, g] * v[b]
                T[4 + a, 4 + b, 4 + g] = eye[a, g] * q[b] - q[a] * eye[b, g]
    return T


def jacobi_residual(p: SpherePhasePoint) -> float:
    """Max |cyclic sum| of the Jacobi identity for Pi at this point.

    Machine-zero everywhere, including off the constraint set.
    """
    P = structure_matrix(p)
    T = structure_matrix_derivative(p)
    R = np.einsum("ijl,lk->ijk", T, P)
    S = R + np.transpose(R, (1, 2, 0)) + np.transpose(R, (2, 0, 1))
    return float(np.max(np.abs(S)))


def bracket(grad_f: np.ndarray, grad_g: np.ndarray, p: SpherePhasePoint) -> float:
    """{F, G}(p) = grad_F^T Pi(p) grad_G for ambient gradients of shape (8,)."""
    return float(np.asarray(grad_f) @ structure_matrix(p) @ np.asarray(grad_g))


def _acceleration(q: np.ndarray, v: np.ndarray, gamma: float) -> np.ndarray:
    """v_dot for states of shape (..., 4); no guard checks (hot path)."""
    q0 = q[..., 0]
    s3 = (1.0 - q0 * q0) ** 1.5
    vv = np.sum(v * v, axis=-1)
    coef = vv + gamma * q0 / s3
    vdot = -coef[..., None] * q
    vdot[..., 0] += gamma / s3
    return vdot


def vector_field(p: SpherePhasePoint, params: KeplerParams,
                 guard: float = DEFAULT_COLLISION_GUARD) -> np.ndarray:
    """The Hamiltonian vector field as an 8-vector (q_dot, v_dot).

    Agrees with Pi(z) grad H(z) on the constraint set.
    """
    _check_guard(float(p.q[0]), guard, q=p.q, v=p.v)
    out = np.empty(8)
    out[:4] = p.v
    out[4:] = _acceleration(p.q, p.v, params.gamma)
    return out


def _rk4_step(q: np.ndarray, v: np.ndarray, dt: float, gamma: float):
    k1q = v
    k1v = _acceleration(q, v, gamma)
    q2 = q + 0.5 * dt * k1q
    v2 = v + 0.5 * dt * k1v
    k2q = v2
    k2v = _acceleration(q2, v2, gamma)
    q3 = q + 0.5 * dt * k2q
    v3 = v + 0.5 * dt * k2v
    k3q = v3
    k3v = _acceleration(q3, v3, gamma)
    q4 = q + dt * k3q
    v4 = v + dt * k3v
    k4q = v4
    k4v = _acceleration(q4, v4, gamma)
    qn = q + (dt / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q)
    vn = v + (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    return qn, vn


def integrate(p0: SpherePhasePoint, params: KeplerParams, cfg: IntegratorConfig) -> Trajectory:
    """Integrate one orbit, sampling every output step.

    rk4_projected: fixed step dt with constraint reprojection every
    reproject_every steps (0 disables reprojection).

    dop853_projected: scipy's adaptive DOP853 sampled on the same grid,
    with emitted samples reprojected; a terminal event stops the run at
    the guard-band boundary.

    Either way, entering the band 1 - q0^2 <= collision_guard does not
    raise: the trajectory is truncated and carries a collision record
    with the last valid state.
    """
    if cfg.method == "rk4_projected":
        return _integrate_rk4(p0, params, cfg)
    return _integrate_dop853(p0, params, cfg)


def _integrate_rk4(p0, params, cfg) -> Trajectory:
    gamma = params.gamma
    guard = cfg.collision_guard
    n = int(np.floor(cfg.t_end / cfg.dt + 1e-9))
    rem = cfg.t_end - n * cfg.dt
    steps = [cfg.dt] * n
    if rem > 1e-12 * cfg.dt:
        steps.append(rem)
    ts = [0.0]
    qs = [p0.q.copy()]
    vs = [p0.v.copy()]
    q, v = p0.q.copy(), p0.v.copy()
    t = 0.0
    collision = None
    try:
        _check_guard(float(q[0]), guard, t=t, q=q, v=v)
    except CollisionProximity:
        return Trajectory(np.array(ts), np.array(qs), np.array(vs),
                          collision=CollisionEvent(t, q.copy(), v.copy(), guard))
    for i, h in enumerate(steps):
        qn, vn = _rk4_step(q, v, h, gamma)
        t = t + h
        if 1.0 - qn[0] * qn[0] <= guard or not np.isfinite(qn[0]):
            # record the last valid sample, not the in-band/blown-up one
            collision = CollisionEvent(t - h, q.copy(), v.copy(), guard)
            break
        if cfg.reproject_every and (i + 1) % cfg.reproject_every == 0:
            qn, vn = project_arrays(qn, vn)
        q, v = qn, vn
        ts.append(t)
        qs.append(q.copy())
        vs.append(v.copy())
    return Trajectory(np.array(ts), np.array(qs), np.array(vs), collision=collision)


def _integrate_dop853(p0, params, cfg) -> Trajectory:
    gamma = params.gamma
    guard = cfg.collision_guard

    def rhs(_t, z):
        q, v = z[:4], z[4:]
        return np.concatenate((v, _acceleration(q, v, gamma)))

    def guard_event(_t, z):
        return (1.0 - z[0] * z[0]) - guard

    guard_event.terminal = True
    guard_event.direction = -1.0

    n = int(np.floor(cfg.t_end / cfg.dt + 1e-9))
    grid = np.unique(np.concatenate((np.arange(n + 1) * cfg.dt, [cfg.t_end])))
    z0 = np.concatenate((p0.q, p0.v))
    sol = solve_ivp(rhs, (0.0, cfg.t_end), z0, method="DOP853",
                    t_eval=grid, rtol=_DOP853_RTOL, atol=_DOP853_ATOL,
                    events=guard_event, dense_output=False)
    if sol.status == -1:
        raise StepFailure(f"adaptive step failed: {sol.message}")
    collision = None
    if sol.status == 1 and len(sol.t_events[0]):
        te = float(sol.t_events[0][0])
        ze = sol.y_events[0][0]
        collision = CollisionEvent(te, ze[:4].copy(), ze[4:].copy(), guard)
    q, v = project_arrays(sol.y[:4].T, sol.y[4:].T)
    return Trajectory(sol.t.copy(), q, v, collision=collision)


def integrate_batch(q0: np.ndarray, v0: np.ndarray, params: KeplerParams,
                    cfg: IntegratorConfig, store_every: int = 1):
    """Lockstep fixed-step RK4 over a batch of initial states.

    q0, v0 have shape (m, 4).  Returns (t, q, v) with q, v of shape
    (n_stored, m, 4).  Used by the verification batteries; raises
    CollisionProximity naming the first orbit that hits the guard band.
    """
    if cfg.method != "rk4_projected":
        raise ConfigError("batch integration only supports rk4_projected")
    gamma = params.gamma
    guard = cfg.collision_guard
    n = int(np.floor(cfg.t_end / cfg.dt + 1e-9))
    q = np.array(q0, dtype=float)
    v = np.array(v0, dtype=float)
    ts = [0.0]
    qs = [q.copy()]
    vs = [v.copy()]
    for i in range(n):
        q, v = _rk4_step(q, v, cfg.dt, gamma)
        bad = (1.0 - q[:, 0] * q[:, 0] <= guard) | ~np.isfinite(q[:, 0])
        if np.any(bad):
            idx = int(np.argmax(bad))
            raise CollisionProximity(
                f"batch orbit {idx} entered the guard band at t={(i + 1) * cfg.dt:g}",
                q=q[idx], v=v[idx], t=(i + 1) * cfg.dt, guard=guard,
            )
        if cfg.reproject_every and (i + 1) % cfg.reproject_every == 0:
            q, v = project_arrays(q, v)
        if (i + 1) % store_every == 0 or i == n - 1:
            ts.append((i + 1) * cfg.dt)
            qs.append(q.copy())
            vs.append(v.copy())
    return np.array(ts), np.array(qs), np.array(vs)
