"""First integrals of the spherical central-force problem.

With q = (q0, qvec), v = (v0, vvec) on TS3 and r = |qvec|, the motion
conserves

    mu  = qvec x vvec                  (angular momentum)
    pi  = q0*vvec - v0*qvec            (modified velocity)
    H   = 0.5*<v, v> + V(q0)           (full energy)
    E   = H - 0.5*|mu|^2               (reduced orbital energy)
    A   = pi x mu - gamma*qvec/r       (apsis-line vector)
    B   = pi - gamma/(r*|mu|^2) * (mu x qvec)   (hodograph center)

plus the derived scalars eps = |A|/gamma (eccentricity) and, for E < 0,
nu = gamma/sqrt(-2E) with the rescaled apsis vector etilde = -nu*A/gamma.

The analytic ambient gradients of these observables drive the bracket
verification tables; they are exact, so bracket residuals sit at
roundoff rather than at finite-difference accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import KeplerParams, hamiltonian, hamiltonian_gradient
from .errors import DegenerateOrbit
from .geometry import SpherePhasePoint, Vec3

_DEGENERATE_MU = 1e-12


@dataclass
class ConservedSet:
    H: float
    E: float
    mu: Vec3
    pi: Vec3
    A: Vec3
    B: Vec3
    e: Vec3
    eps: float
    nu: float | None
    etilde: Vec3 | None


@dataclass
class OrbitGeometry:
    """Conic-on-the-sphere data: cot(theta) = cone_coefficient * (1 + eps*cos(phi)).

    frame = (A_hat, B_hat, mu_hat) is right-handed orthonormal whenever
    eps > 0, with phi measured from A_hat inside the orbital plane.
    """

    cone_coefficient: float
    eccentricity: float
    frame: np.ndarray  # shape (3, 3), rows A_hat, B_hat, mu_hat


def _skew(a: Vec3) -> np.ndarray:
    return np.array([
        [0.0, -a[2], a[1]],
        [a[2], 0.0, -a[0]],
        [-a[1], a[0], 0.0],
    ])


def angular_momentum(p: SpherePhasePoint) -> Vec3:
    return np.cross(p.qvec, p.vvec)


def modified_velocity(p: SpherePhasePoint) -> Vec3:
    return p.q[0] * p.vvec - p.v[0] * p.qvec


def conserved_set(p: SpherePhasePoint, params: KeplerParams) -> ConservedSet:
    """Evaluate the full set of first integrals at one state.

    Raises DegenerateOrbit for (numerically) vanishing angular momentum,
    where B and the orbital frame stop making sense.
    """
    mu = angular_momentum(p)
    scale = max(1.0, float(np.linalg.norm(p.qvec)) * float(np.linalg.norm(p.vvec)))
    mu_norm = float(np.linalg.norm(mu))
    if mu_norm <= _DEGENERATE_MU * scale:
        raise DegenerateOrbit("angular momentum vanishes (rectilinear orbit)")
    pi = modified_velocity(p)
    r = float(np.linalg.norm(p.qvec))
    gamma = params.gamma
    H = hamiltonian(p, params)
    E = H - 0.5 * mu_norm**2
    A = np.cross(pi, mu) - gamma * p.qvec / r
    B = pi - gamma / (r * mu_norm**2) * np.cross(mu, p.qvec)
    e = A / gamma
    eps = float(np.linalg.norm(e))
    if E < 0:
        nu = gamma / np.sqrt(-2.0 * E)
        etilde = -nu * e
    else:
        nu = None
        etilde = None
    return ConservedSet(H=H, E=E, mu=mu, pi=pi, A=A, B=B, e=e, eps=eps,
                        nu=nu, etilde=etilde)


def circular_angular_momentum_sq(H: float, params: KeplerParams) -> float:
    """|mu|^2 on the circular-orbit locus at energy H: H + sqrt(gamma^2 + H^2)."""
    return H + np.sqrt(params.gamma**2 + H * H)


def orbit_geometry(p: SpherePhasePoint, params: KeplerParams) -> OrbitGeometry:
    c = conserved_set(p, params)
    mu_hat = c.mu / np.linalg.norm(c.mu)
    if c.eps > 1e-13:
        a_hat = c.A / np.linalg.norm(c.A)
    else:
        # Circular orbit: apsis line undefined; any in-plane direction works.
        trial = np.array([1.0, 0.0, 0.0])
        if abs(trial @ mu_hat) > 0.9:
            trial = np.array([0.0, 1.0, 0.0])
        a_hat = trial - (trial @ mu_hat) * mu_hat
        a_hat /= np.linalg.norm(a_hat)
    b_hat = np.cross(mu_hat, a_hat)
    frame = np.vstack((a_hat, b_hat, mu_hat))
    coeff = params.gamma / float(c.mu @ c.mu)
    return OrbitGeometry(cone_coefficient=coeff, eccentricity=c.eps, frame=frame)


def orbit_equation_residual(p: SpherePhasePoint, params: KeplerParams) -> float:
    """|cot(theta) - coeff*(1 + eps*cos(phi))| at the given state.

    theta is the colatitude (cot = q0/|qvec|) and phi the azimuth of
    qvec from the apsis line.  An exact identity for every state on a
    non-degenerate orbit.
    """
    geom = orbit_geometry(p, params)
    r = float(np.linalg.norm(p.qvec))
    cot = float(p.q[0]) / r
    if geom.eccentricity > 1e-13:
        cos_phi = float(geom.frame[0] @ p.qvec) / r
        model = geom.cone_coefficient * (1.0 + geom.eccentricity * cos_phi)
    else:
        model = geom.cone_coefficient
    return abs(cot - model)


def classify_orbit(p: SpherePhasePoint, params: KeplerParams,
                   tol: float = 1e-10) -> str:
    """One of 'circle', 'ellipse', 'parabola', 'hyperbola'.

    Classification is by reduced energy E and eccentricity; 'parabola'
    means |E| <= tol (the flat-limit escape threshold).
    """
    c = conserved_set(p, params)
    if c.E < -tol:
        return "circle" if c.eps <= tol else "ellipse"
    if c.E <= tol:
        return "parabola"
    return "hyperbola"


def conserved_arrays(q: np.ndarray, v: np.ndarray, gamma: float) -> dict:
    """Vectorized first integrals over sample stacks of shape (..., 4).

    Returns a dict of arrays (H, E, mu, pi, A, B, eps, q0, r) with the
    leading axes of the inputs.  No degeneracy checks are performed:
    rows with mu = 0 or r = 0 yield NaN/inf in the affected entries,
    which downstream consumers treat as undefined.
    """
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    q0 = q[..., 0]
    qvec = q[..., 1:]
    vvec = v[..., 1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.linalg.norm(qvec, axis=-1)
        H = 0.5 * np.sum(v * v, axis=-1) - gamma * q0 / r
        mu = np.cross(qvec, vvec)
        mu_sq = np.sum(mu * mu, axis=-1)
        E = H - 0.5 * mu_sq
        pi = q0[..., None] * vvec - v[..., 0:1] * qvec
        A = np.cross(pi, mu) - gamma * qvec / r[..., None]
        B = pi - (gamma / (r * mu_sq))[..., None] * np.cross(mu, qvec)
        eps = np.linalg.norm(A, axis=-1) / gamma
    return {"H": H, "E": E, "mu": mu, "pi": pi, "A": A, "B": B,
            "eps": eps, "q0": q0, "r": r}


# ---------------------------------------------------------------------------
# Analytic ambient gradients (shape (8,) rows in z = (q, v)) for the
# bracket tables.


def gradient_coordinate(i: int) -> np.ndarray:
    g = np.zeros(8)
    g[i] = 1.0
    return g


def gradient_mu(p: SpherePhasePoint) -> np.ndarray:
    """Rows k = 1..3: grad of mu_k.  d mu/d qvec = -skew(vvec), d mu/d vvec = skew(qvec)."""
    out = np.zeros((3, 8))
    out[:, 1:4] = -_skew(p.vvec)
    out[:, 5:8] = _skew(p.qvec)
    return out


def gradient_pi(p: SpherePhasePoint) -> np.ndarray:
    out = np.zeros((3, 8))
    out[:, 0] = p.vvec
    out[:, 1:4] = -p.v[0] * np.eye(3)
    out[:, 4] = -p.qvec
    out[:, 5:8] = p.q[0] * np.eye(3)
    return out


def gradient_radial_direction(p: SpherePhasePoint) -> np.ndarray:
    """Rows k: grad of (qvec/r)_k; only spatial q-slots are nonzero."""
    r = float(np.linalg.norm(p.qvec))
    q = p.qvec
    out = np.zeros((3, 8))
    out[:, 1:4] = np.eye(3) / r - np.outer(q, q) / r**3
    return out


def gradient_inverse_radius(p: SpherePhasePoint) -> np.ndarray:
    """grad of 1/r as an 8-vector."""
    r = float(np.linalg.norm(p.qvec))
    out = np.zeros(8)
    out[1:4] = -p.qvec / r**3
    return out


def gradient_A(p: SpherePhasePoint, params: KeplerParams) -> np.ndarray:
    """Rows k: grad of A_k = (pi x mu - gamma*qvec/r)_k."""
    mu = angular_momentum(p)
    pi = modified_velocity(p)
    gm = gradient_mu(p)
    gp = gradient_pi(p)
    return -_skew(mu) @ gp + _skew(pi) @ gm - params.gamma * gradient_radial_direction(p)


def gradient_E(p: SpherePhasePoint, params: KeplerParams) -> np.ndarray:
    mu = angular_momentum(p)
    return hamiltonian_gradient(p, params) - mu @ gradient_mu(p)
