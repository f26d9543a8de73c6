"""Kepler problem on the 3-sphere and its three regularizations.

The library integrates the constrained central-force flow on the unit
tangent bundle of S^3, evaluates its full set of first integrals, and
implements three classical regularizing transformations:

- the hodograph picture, where modified-velocity curves are circles and
  bound motion becomes geodesic flow on a round 2-sphere in velocity
  space (``moser``);
- the map onto the Delaunay/geodesic flow of T+S^3, which conjugates
  the collision-singular flow to a global rotation (``ligon_schaaf``);
- the gnomonic chart, which carries the spherical problem verbatim to
  the flat Kepler problem and exposes the scaling defect of the chart
  (``gnomonic``).

``suites`` hosts the seeded verification batteries and ``cli`` the
``kepler-sphere`` command-line entry point.
"""

from . import cli, conserved, dynamics, geometry, gnomonic, ligon_schaaf, moser, suites
from .conserved import (
    ConservedSet,
    OrbitGeometry,
    classify_orbit,
    conserved_set,
    orbit_equation_residual,
    orbit_geometry,
)
from .dynamics import (
    CollisionEvent,
    IntegratorConfig,
    KeplerParams,
    Trajectory,
    hamiltonian,
    integrate,
    integrate_batch,
    jacobi_residual,
    structure_matrix,
    vector_field,
)
from .errors import (
    CollisionProximity,
    ConfigError,
    DegenerateOrbit,
    EquatorSingularity,
    KeplerSphereError,
    OutsideChart,
    PositiveEnergy,
    PunctureHit,
    StepFailure,
    ZeroSection,
)
from .geometry import (
    SpherePhasePoint,
    Tolerances,
    fixture_c1,
    project_to_TS3,
    sample_phase_point,
    state_from_elements,
)
from .gnomonic import (
    EuclidPhasePoint,
    bound_orbit_period,
    moser_correspondence,
    phi_c,
    phi_c_inverse,
    psi,
    psi_inverse,
    symplectic_defect,
)
from .ligon_schaaf import (
    DelaunayPoint,
    So4Element,
    delaunay_flow,
    delaunay_hamiltonian,
    ls_frame,
    ls_map,
    momentum_J,
    momentum_rho,
    tau_clock,
)
from .moser import (
    Hodocycle,
    MoserChart,
    arclength_clock,
    hodocycle,
    hodocycle_residuals,
    moser_chart,
    moser_metric,
)
from .suites import run_suite

__all__ = [
    "CollisionEvent",
    "CollisionProximity",
    "ConfigError",
    "ConservedSet",
    "DegenerateOrbit",
    "DelaunayPoint",
    "EquatorSingularity",
    "EuclidPhasePoint",
    "Hodocycle",
    "IntegratorConfig",
    "KeplerParams",
    "KeplerSphereError",
    "MoserChart",
    "OrbitGeometry",
    "OutsideChart",
    "PositiveEnergy",
    "PunctureHit",
    "So4Element",
    "SpherePhasePoint",
    "StepFailure",
    "Tolerances",
    "Trajectory",
    "ZeroSection",
    "arclength_clock",
    "bound_orbit_period",
    "classify_orbit",
    "cli",
    "conserved",
    "conserved_set",
    "delaunay_flow",
    "delaunay_hamiltonian",
    "dynamics",
    "fixture_c1",
    "geometry",
    "gnomonic",
    "hamiltonian",
    "hodocycle",
    "hodocycle_residuals",
    "integrate",
    "integrate_batch",
    "jacobi_residual",
    "ligon_schaaf",
    "ls_frame",
    "ls_map",
    "momentum_J",
    "momentum_rho",
    "moser",
    "moser_chart",
    "moser_correspondence",
    "moser_metric",
    "orbit_equation_residual",
    "orbit_geometry",
    "phi_c",
    "phi_c_inverse",
    "project_to_TS3",
    "psi",
    "psi_inverse",
    "run_suite",
    "sample_phase_point",
    "state_from_elements",
    "structure_matrix",
    "suites",
    "symplectic_defect",
    "tau_clock",
    "vector_field",
]

__version__ = "0.1.0"
