"""Assumption-free entanglement lower bounds from measurable observables.

The package turns two standard lab observables — the spin structure factor
S(q) and time-of-flight detector densities n(x, y) — into certified lower
bounds on how much of a state is irreducibly entangled, with no modelling
assumptions about the state itself. Desk-scale exact diagonalization of
Heisenberg and Bose-Hubbard lattices provides reference data, and a set of
brute-force self-check suites (``entbound validate``) guards the math.
"""

__version__ = "0.1.0"

from .bounds import (
    MASK_CODES,
    MASK_F_FLOOR,
    MASK_MISSING,
    MASK_NEGATIVE_S,
    MASK_OK,
    BoundMap,
    boson_bound,
    boson_bound_map,
    boson_bound_raw,
    product_witness_expectation,
    spin_bound,
    spin_bound_map,
    spin_bound_raw,
    spin_bound_values,
)
from .errors import (
    EntboundError,
    FormatError,
    InputError,
    InternalConsistencyError,
    NumericError,
    ResourceError,
    ValidationError,
)
from .lattice import Lattice, LatticeSpec, QGrid, build_lattice, q_grid
from .tof import (
    TofCalibration,
    envelope_values,
    f_envelope,
    kernel_ratio_matrix,
    tof_density,
    tof_density_grid,
    tof_kernel,
    wannier_sq,
)

__all__ = [
    "__version__",
    "BoundMap",
    "EntboundError",
    "FormatError",
    "InputError",
    "InternalConsistencyError",
    "Lattice",
    "LatticeSpec",
    "MASK_CODES",
    "MASK_F_FLOOR",
    "MASK_MISSING",
    "MASK_NEGATIVE_S",
    "MASK_OK",
    "NumericError",
    "QGrid",
    "ResourceError",
    "TofCalibration",
    "ValidationError",
    "boson_bound",
    "boson_bound_map",
    "boson_bound_raw",
    "build_lattice",
    "envelope_values",
    "f_envelope",
    "kernel_ratio_matrix",
    "product_witness_expectation",
    "q_grid",
    "spin_bound",
    "spin_bound_map",
    "spin_bound_raw",
    "spin_bound_values",
    "tof_density",
    "tof_density_grid",
    "tof_kernel",
    "wannier_sq",
]
