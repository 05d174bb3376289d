"""Inverse problem for the half-line Schrodinger operator -u'' + q u.

Forward map q -> r (response function), and recoveries r -> q by the
Krein-type boundary control equations, Remling's equations, the local and
classical Gelfand-Levitan equations, and the A-amplitude flow.  A spectral
module links the dynamical data to Dirichlet eigenvalues, norming constants
and the m-function.
"""
from .connecting import build_connecting_kernel, positivity_margin
from .errors import (
    ConvergenceError,
    EigensolverError,
    FlowError,
    FormatError,
    PoleProximityError,
    SolvabilityError,
)
from .forward import response_function, wave_solve
from .goursat import goursat_fd_oracle, solve_goursat_picard
from .grids import PotentialSample, ResponseSample, UniformGrid
from .inverse_bc import recover_q_bc, remling_solve
from .inverse_gl import gl_local_solve, simon_flow
from .spectral import a_amplitude_check, dirichlet_eigs, m_function

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError", "EigensolverError", "FlowError", "FormatError",
    "PoleProximityError", "SolvabilityError", "PotentialSample", "ResponseSample",
    "UniformGrid", "a_amplitude_check", "build_connecting_kernel", "dirichlet_eigs",
    "gl_local_solve", "goursat_fd_oracle", "m_function", "positivity_margin",
    "recover_q_bc", "remling_solve", "response_function", "simon_flow",
    "solve_goursat_picard", "wave_solve",
]
