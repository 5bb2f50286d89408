"""Quantum particles as classical threads in a thermal dimension.

Each particle is a ring thread of contour length ``beta = 1/kT``. Its
statistics follow from the imaginary-time propagator ``q(r0, r, beta)``,
closed self-consistently with a mean field. The same propagator is the
Boltzmann-weighted eigen-sum of the Kohn-Sham operator, which gives an
independent route to every static quantity.

Modules
-------
domain      grids, fields, quadrature, units
propagator  contour stepping, composition, ring densities
spectral    Kohn-Sham eigenpairs and the eigen-sum kernel
scf         external and Hartree fields, the SCF loop, free energies
exchange    pair statistics from ring and cross paths
dynamics    real-time orbitals and the double-slit screen
cli         JSON-configured batch front end
"""

from .domain import (
    ATOMIC,
    ComplexField,
    Grid,
    ScalarField,
    UnitSystem,
    beta_from_temperature,
    integrate,
    make_grid,
)
from .errors import (
    BoundaryError,
    ConfigError,
    ConvergenceError,
    DivergenceError,
    GridError,
    NumericalError,
    ThreadSCFError,
    TruncationError,
    ZeroPartitionError,
)
from .propagator import (
    ContourSchedule,
    Propagator,
    build_propagator,
    compose,
    density_single,
    diagonal,
    evolve_slice,
    partition_function,
)
from .scf import PotentialSpec, SCFConfig, SCFState, external_potential, scf_solve
from .spectral import Spectrum, reconstruct_propagator, solve_kohn_sham

__version__ = "0.1.0"
