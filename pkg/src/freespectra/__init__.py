"""Limiting singular value spectra of deep-network Jacobians.

The master equation for the Stieltjes transform of the squared-singular-value
law is a rational equation P(m) = z Q(m); this package solves it along a grid
of spectral points with certified Newton steps, and validates the results with
Monte-Carlo and all-roots baselines.
"""

from .network_model import (
    LayerSpec,
    NetworkSpec,
    Nonlinearity,
    g_moment,
    layer_coefficient,
    propagate_variances,
    summarize,
)
from .oracles import EmpiricalSpectrum, RootSet, all_roots, ks_distance, monte_carlo_spectrum
from .solver import (
    BasinCertificate,
    SolveStats,
    SolverConfig,
    SolverError,
    is_in_basin,
    newton_lilypads,
    newton_raphson,
)
from .spectrum import (
    DensityCurve,
    GridMoments,
    Moments,
    QuantileTable,
    atom_lower_bound,
    closed_form_moments,
    default_grid,
    density_grid,
    grid_moments,
    quantiles,
    support_upper_bound,
    uniform_density_curve,
)
from .transform_algebra import (
    ComplexPolynomial,
    RationalMasterEq,
    RationalSTransform,
    compose_layers,
    eval_phi,
    layer_s_transforms,
    master_from_spec,
    master_from_summary,
    rect_convolve,
)

__version__ = "0.1.0"

__all__ = [
    "LayerSpec",
    "NetworkSpec",
    "Nonlinearity",
    "g_moment",
    "layer_coefficient",
    "propagate_variances",
    "summarize",
    "EmpiricalSpectrum",
    "RootSet",
    "all_roots",
    "ks_distance",
    "monte_carlo_spectrum",
    "BasinCertificate",
    "SolveStats",
    "SolverConfig",
    "SolverError",
    "is_in_basin",
    "newton_lilypads",
    "newton_raphson",
    "DensityCurve",
    "GridMoments",
    "Moments",
    "QuantileTable",
    "atom_lower_bound",
    "closed_form_moments",
    "default_grid",
    "density_grid",
    "grid_moments",
    "quantiles",
    "support_upper_bound",
    "uniform_density_curve",
    "ComplexPolynomial",
    "RationalMasterEq",
    "RationalSTransform",
    "compose_layers",
    "eval_phi",
    "layer_s_transforms",
    "master_from_spec",
    "master_from_summary",
    "rect_convolve",
    "__version__",
]
