"""Numerical workbench for linearizing the Chern scalar curvature.

Closed-form Hermitian metrics are evaluated as forward-mode jets; Chern and
Levi-Civita quantities, their first and second variations, the operators
``gamma`` and ``gamma^*`` and the obstruction integral are computed from
those jets and checked against finite-difference and closed-form oracles.
"""

__version__ = "0.1.0"

from .algebra import GeometryError, OneForm, RealEndo, Sym11Value, inner, to_complex, to_real
from .chern import (
    ChernGeometry,
    chern_christoffel,
    chern_cov_deriv,
    chern_curvature,
    chern_ricci,
    chern_scalar,
    ddc_scalar,
    fce_residual,
    levi_civita,
    torsion_and_lee,
)
from .harness import CheckReport, SuiteConfig, adjointness_test, fd_derivative, run_suite
from .jets import Jet
from .linearization import (
    KernelError,
    VariationInput,
    gamma,
    gamma_star,
    instability_witness,
    obstruction,
    second_var,
)
from .manifolds import ZOO, ManifoldSpec, jet_eval, make_manifold, zoo
from .quadrature import integrate, quadrature_rule

__all__ = [
    "__version__",
    "GeometryError",
    "OneForm",
    "RealEndo",
    "Sym11Value",
    "inner",
    "to_complex",
    "to_real",
    "ChernGeometry",
    "chern_christoffel",
    "chern_cov_deriv",
    "chern_curvature",
    "chern_ricci",
    "chern_scalar",
    "ddc_scalar",
    "fce_residual",
    "levi_civita",
    "torsion_and_lee",
    "CheckReport",
    "SuiteConfig",
    "adjointness_test",
    "fd_derivative",
    "run_suite",
    "Jet",
    "KernelError",
    "VariationInput",
    "gamma",
    "gamma_star",
    "instability_witness",
    "obstruction",
    "second_var",
    "ZOO",
    "ManifoldSpec",
    "jet_eval",
    "make_manifold",
    "zoo",
    "integrate",
    "quadrature_rule",
]
