"""Isotropic Cosserat shell model with energies up to O(h^5).

Submodules: ``geometry`` (midsurface frames), ``kinematics`` (strain
measures), ``energy`` (quadratic forms and densities), ``analysis``
(coercivity constants), ``discrete`` and ``solver`` (grid minimization),
``reconstruction`` (3D deformation), ``config``/``io``/``cli``.
"""

from __future__ import annotations

from .analysis import (
    CoercivityReport,
    closed_form_eigs,
    coercivity_constant_h3,
    coercivity_constant_h5,
    coercivity_sample_check,
    h3_conditions,
    h5_admissible,
    hessian_convexity_check,
    quadratic_form_eigs,
)
from .discrete import DiscreteProblem, Grid, ShellConfiguration, assemble_gradient
from .energy import (
    EnergyBreakdown,
    LoadSpec,
    MaterialParams,
    density_h3,
    density_h5,
    load_potential,
    total_energy,
    w_curv,
    w_mp,
    w_shell,
    w_shell_bilinear,
)
from .errors import (
    ConditionsViolated,
    ConfigError,
    DegenerateMetric,
    InconsistentGrid,
    InvalidMaterial,
    LineSearchFailure,
    NotOrientationPreserving,
    NotSkew,
    ShellError,
)
from .geometry import (
    Cylinder,
    GeometryFrame,
    HyperbolicParaboloid,
    Plane,
    SphereCap,
    SurfacePatch,
    TabulatedPatch,
    fundamental_forms,
    identity_suite,
    polar_decompose,
    surface_tensors,
)
from .kinematics import (
    RotationField,
    StrainState,
    anti,
    axl,
    bending_curvature_tensor,
    dislocation_density,
    nye_convert,
    strain_tensor,
    wryness,
)
from .reconstruction import Slab3D, reconstruct, thickness_coefficients
from .solver import Problem, SolveTrace, SolverOptions, minimize, refine_study

__version__ = "0.1.0"
