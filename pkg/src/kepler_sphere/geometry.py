"""Phase-space primitives for point dynamics on the unit 3-sphere.

States live on the tangent bundle

    TS3 = {(q, v) in R^4 x R^4 : <q, q> = 1, <q, v> = 0},

with q0 the coordinate along the polar axis and qvec = (q1, q2, q3) the
spatial part.  Everything downstream (dynamics, conserved quantities,
chart changes) assumes points satisfy the two constraints to roundoff,
so this module owns projection, residual measurement, and reproducible
sampling of admissible states.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

# Shape-(3,) / shape-(4,) float arrays.  Used for documentation; runtime
# checks only where a silent shape bug would corrupt results.
Vec3 = np.ndarray
Vec4 = np.ndarray


@dataclass(frozen=True)
class Tolerances:
    """Default numerical budgets used across the verification layers.

    tol_constraint : sphere/tangency residual after projection
    tol_identity   : algebraic identities evaluated pointwise
    tol_drift      : relative drift of conserved quantities along orbits
    fd_step        : step for finite-difference derivative checks
    tol_fd         : budget for finite-difference comparisons
    """

    tol_constraint: float = 1e-10
    tol_identity: float = 1e-9
    tol_drift: float = 1e-6
    fd_step: float = 1e-6
    tol_fd: float = 1e-5

    def scaled(self, factor: float) -> "Tolerances":
        """Return a copy with every *tolerance* multiplied by ``factor``.

        The finite-difference step is a discretization parameter, not a
        pass/fail budget, so it is left untouched.
        """
        return Tolerances(
            tol_constraint=self.tol_constraint * factor,
            tol_identity=self.tol_identity * factor,
            tol_drift=self.tol_drift * factor,
            fd_step=self.fd_step,
            tol_fd=self.tol_fd * factor,
        )


@dataclass
class SpherePhasePoint:
    """A point (q, v) of TS3 stored as two length-4 arrays."""

    q: Vec4
    v: Vec4

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        if self.q.shape != (4,) or self.v.shape != (4,):
            raise ValueError("phase point needs two shape-(4,) arrays")

    def copy(self) -> "SpherePhasePoint":
        return SpherePhasePoint(self.q.copy(), self.v.copy())

    @property
    def qvec(self) -> Vec3:
        return self.q[1:]

    @property
    def vvec(self) -> Vec3:
        return self.v[1:]


def fixture_c1() -> SpherePhasePoint:
    """Reference state used throughout the test batteries (gamma = 1).

    q = (sqrt(2)/2, sqrt(2)/2, 0, 0), v = (0, 0, sqrt(2), 0): a circular
    orbit at colatitude 45 degrees with angular speed 2 and period pi.
    """
    h = np.sqrt(2.0) / 2.0
    return SpherePhasePoint(
        q=np.array([h, h, 0.0, 0.0]),
        v=np.array([0.0, 0.0, np.sqrt(2.0), 0.0]),
    )


FIXTURE_C1_GAMMA = 1.0


def project_to_TS3(q: Vec4, v: Vec4) -> SpherePhasePoint:
    """Orthogonally project an ambient pair onto the constraint set.

    q is renormalized to the unit sphere, then the radial component of v
    is removed.  Raises ValueError for a vanishing base point, where the
    projection has no well-defined direction.
    """
    q = np.asarray(q, dtype=float).reshape(4)
    v = np.asarray(v, dtype=float).reshape(4)
    nq = np.linalg.norm(q)
    if nq < 1e-14:
        raise ValueError("cannot project from q = 0")
    qn = q / nq
    vn = v - (qn @ v) * qn
    return SpherePhasePoint(qn, vn)


def project_arrays(q: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Constraint projection on arrays of shape (..., 4); returns arrays."""
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    qn = q / np.linalg.norm(q, axis=-1, keepdims=True)
    vn = v - np.sum(qn * v, axis=-1, keepdims=True) * qn
    return qn, vn


def constraint_residual(p: SpherePhasePoint) -> tuple[float, float]:
    """Return (|<q,q> - 1|, |<q,v>|) for a phase point."""
    c1 = abs(float(p.q @ p.q) - 1.0)
    c2 = abs(float(p.q @ p.v))
    return c1, c2


def rotate_state(p: SpherePhasePoint, rot: np.ndarray) -> SpherePhasePoint:
    """Apply a spatial rotation matrix to both the q and v parts.

    Rotations of the (q1, q2, q3) block fix the polar axis and therefore
    commute with the dynamics; they are used to randomize orbit
    orientation without re-deriving initial data.
    """
    q = p.q.copy()
    v = p.v.copy()
    q[1:] = rot @ q[1:]
    v[1:] = rot @ v[1:]
    return SpherePhasePoint(q, v)


def _random_unit(rng: np.random.Generator) -> Vec3:
    while True:
        u = rng.normal(size=3)
        n = np.linalg.norm(u)
        if n > 1e-6:
            return u / n


def sample_phase_point(
    seed: int,
    energy_window: tuple[float, float],
    gamma: float = 1.0,
) -> SpherePhasePoint:
    """Draw a reproducible, non-degenerate state with E in the window.

    E here is the reduced orbital energy 0.5*|pi|^2 - gamma*q0/|qvec|
    where pi = q0*vvec - v0*qvec.  The sampler picks a colatitude, an
    energy, and a direction for pi, rejecting draws that are too close
    to rectilinear (|qhat x pihat| small) or that would need negative
    kinetic energy.  Raises ConfigError once the retry budget is spent,
    which happens only for infeasible windows.
    """
    lo, hi = float(energy_window[0]), float(energy_window[1])
    if not (np.isfinite(lo) and np.isfinite(hi)) or lo > hi:
        raise ConfigError(f"bad energy window ({lo}, {hi})")
    if gamma <= 0:
        raise ConfigError("gamma must be positive")
    rng = np.random.default_rng(seed)
    for _ in range(256):
        q0 = rng.uniform(0.2, 0.9)
        r = np.sqrt(1.0 - q0 * q0)
        qdir = _random_unit(rng)
        energy = rng.uniform(lo, hi)
        kinetic = energy + gamma * q0 / r
        if kinetic <= 0.05:
            continue
        pidir = _random_unit(rng)
        if np.linalg.norm(np.cross(qdir, pidir)) < 0.3:
            continue
        qvec = r * qdir
        pi = np.sqrt(2.0 * kinetic) * pidir
        v0 = -float(qvec @ pi)
        vvec = (pi + v0 * qvec) / q0
        q = np.concatenate(([q0], qvec))
        v = np.concatenate(([v0], vvec))
        return SpherePhasePoint(q, v)
    raise ConfigError(
        f"no admissible state found for energy window ({lo}, {hi}) with gamma={gamma}"
    )


def state_from_elements(
    colatitude: float,
    eccentricity: float,
    gamma: float = 1.0,
    orientation: np.ndarray | None = None,
    at_aphelion: bool = False,
) -> SpherePhasePoint:
    """Build the apsis state of a bound orbit from orbital elements.

    ``colatitude`` is the apsis colatitude theta (angle from the
    attracting pole, 0 < theta < pi/2), ``eccentricity`` in [0, 1).  At
    an apsis the radial velocity vanishes, so the state is

        q = (cos t, sin t, 0, 0),   v = (0, 0, |mu|/sin t, 0),

    with |mu|^2 = gamma*(1 +/- eps)*tan t (+ at perihelion, - at
    aphelion).  An optional 3x3 rotation reorients the orbit.  The
    perihelion branch puts the apsis-line unit vector at +x; energy
    comes out as E = gamma*cot(t)*(eps - 1)/2 < 0 at perihelion.
    """
    t = float(colatitude)
    eps = float(eccentricity)
    if not 0.0 < t < np.pi / 2:
        raise ConfigError("apsis colatitude must lie in (0, pi/2)")
    if not 0.0 <= eps < 1.0:
        raise ConfigError("eccentricity must lie in [0, 1) for bound elements")
    sign = -1.0 if at_aphelion else 1.0
    mu_sq = gamma * (1.0 + sign * eps) * np.tan(t)
    if mu_sq <= 0:
        raise ConfigError("elements give non-positive angular momentum")
    st, ct = np.sin(t), np.cos(t)
    q = np.array([ct, sign * st, 0.0, 0.0])
    v = np.array([0.0, 0.0, sign * np.sqrt(mu_sq) / st, 0.0])
    p = SpherePhasePoint(q, v)
    if orientation is not None:
        p = rotate_state(p, np.asarray(orientation, dtype=float))
    return p
