"""Direct and inverse scattering for the semi-discrete derivative NLS lattice.

Modules
-------
lattice      potential pairs, transfer matrices and Jost solutions
scattering   scattering coefficients on the unit circle and their identities
transforms   maps between the qr, uv and ps systems
boundstates  matrix triplets, pole finding and norming constants
marchenko    Marchenko kernels, solvers and the five inversion methods
soliton      closed-form reflectionless solutions
ist          time evolution, the inverse scattering transform and PDE residuals
io           JSON and CSV serialization
cli          the ``dnls`` command
"""

from .boundstates import BoundStateTriplet, MatrixTriplet, TripletBlock, find_simple_poles, triplets_from_potential
from .errors import DNLSError, InputError, NumericalFailure
from .grid import SpectralGrid
from .ist import evolve, ist_solve, pde_residual
from .lattice import PotentialPair, jost_solutions, transfer_matrix
from .marchenko import invert, solve_alternate, solve_standard
from .scattering import ScatteringData, scatter, verify_identities
from .soliton import soliton_qr, soliton_uv, sylvester
from .transforms import qr_to_ps, qr_to_uv, us_to_qr

__version__ = "0.1.0"

__all__ = [
    "BoundStateTriplet",
    "DNLSError",
    "InputError",
    "MatrixTriplet",
    "NumericalFailure",
    "PotentialPair",
    "ScatteringData",
    "SpectralGrid",
    "TripletBlock",
    "evolve",
    "find_simple_poles",
    "invert",
    "ist_solve",
    "jost_solutions",
    "pde_residual",
    "qr_to_ps",
    "qr_to_uv",
    "scatter",
    "soliton_qr",
    "soliton_uv",
    "solve_alternate",
    "solve_standard",
    "sylvester",
    "transfer_matrix",
    "triplets_from_potential",
    "us_to_qr",
    "verify_identities",
]
