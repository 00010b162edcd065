"""Symbolic-numeric engine for the Moyal-deformed 2-sphere.

Submodules:

* ``starprod`` -- star-product engines and closed shift identities
* ``geometry`` -- embedding, deformed metric, connections, curvature
* ``flow``     -- y-symmetric auto-parallel flow and its perturbative solutions
* ``modes``    -- Fourier p-mode residual system and its quadrature oracle
* ``cli``      -- command-line front end (verification suites, datasets)
"""

from .starprod import (
    AnalyticFn1D,
    AnalyticityError,
    Deformation,
    DomainError,
    ReducedProducts,
    SingularityError,
    TrigPoly,
    basis_f,
    closed_star_basis,
    reduced_products,
    star_F_basis,
    star_F_trigmode,
    star_lattice,
    star_series,
    verify_identities,
)

__all__ = [
    "AnalyticFn1D",
    "AnalyticityError",
    "Deformation",
    "DomainError",
    "ReducedProducts",
    "SingularityError",
    "TrigPoly",
    "basis_f",
    "closed_star_basis",
    "reduced_products",
    "star_F_basis",
    "star_F_trigmode",
    "star_lattice",
    "star_series",
    "verify_identities",
]

__version__ = "0.1.0"
