"""Numerical machinery for energy-conservation analysis of hydrostatic
incompressible flow on the unit torus: constrained-field reconstruction,
mollified energy-flux defects, Besov/log-Holder/anisotropic regularity
estimation, dyadic paraproducts, synthetic rough fields, a short-time
pseudo-spectral solver, and the conservation-criterion engine."""

from .grid import (
    Grid,
    ScalarField,
    SpectralField,
    VectorField,
    dealias,
    extend_symmetric,
    fft3,
    ifft3,
    spectral_derivative,
    vertical_antiderivative,
)
from .incompress import (
    CompatibilityReport,
    check_weak_solution_structure,
    horizontal_divergence,
    reconstruct_w,
)
from .mollify import (
    DefectSweep,
    Mollifier,
    cez_decompose,
    defect_density,
    defect_sweep,
    increment,
    mollify,
)
from .pressure import PressureField, solve_pressure

__version__ = "0.1.0"
