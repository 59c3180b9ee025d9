"""Numerical workbench for variational problems on parametrised hypersurfaces."""

from .errors import ConfigError, DomainError, EvaluationError, NotAttainedError, UnsupportedError, VarcalcError
from .fields import FrameVectorField, ScalarField, constant, coordinate, divergence, intrinsic_gradient, laplace_beltrami
from .functionals import EnergyFunctional, Integrand, eval_energy, fd_integrand, make_dirichlet, make_perelman
from .geodesics import (
    CurveSamples,
    GeodesicParams,
    curve_length,
    eq1_residual,
    eq3prime_residual,
    gamma_from_initial,
    geodesic_chart,
    geodesic_defect,
    geodesic_shoot,
    planarity_defect,
    reparametrize_by_arclength,
    s2_geodesic_closed_form,
    s3_geodesic_closed_form,
)
from .geometry import (
    Chart,
    MetricData,
    QuadratureGrid,
    build_chart,
    christoffel,
    gauss_grid,
    metric_at,
    scalar_curvature,
    surface_integral,
)
from .ivp import IVPProblem, ODESolution, integrate_ivp
from .reduced_odes import (
    RadialHarmonic,
    find_parallel_crossing,
    perelman_s2_profile,
    radial_harmonic,
    radial_laplace_residual,
)
from .variations import (
    ClassificationReport,
    classify_critical_point,
    el_residual,
    gateaux_fd,
    gateaux_first,
    neumann_residual,
    second_variation,
    urysohn_saddle_witness,
)

__version__ = "0.1.0"
