"""Krylov approximation of ``exp(-tau A) v`` with a posteriori and a priori error bounds."""

from .bounds import (
    BoundContext,
    ConvergenceRecord,
    aposteriori_estimate,
    apriori_bound,
    apriori_nonhermitian,
    apriori_skew,
    bound_curve,
    make_context,
    optimal_q_nonhermitian,
    optimal_q_skew,
    reference_bounds,
    spectral_box,
    threshold_q_m0,
    tilde_z,
)
from .conformal import ConformalParams, SpectralBox, build_conformal, level_curve, psi_minus_r, solve_modulus
from .elliptic import EllipticPair, JacobiTriple, complete_elliptic, incomplete_F, jacobi_epsilon, jacobi_scd
from .errors import KexpmError
from .krylov import (
    KrylovDecomposition,
    KrylovProcess,
    LinearOperator,
    SparseMatrix,
    arnoldi,
    as_operator,
    dense_expm,
    h_entry_series,
    krylov_approx,
    lanczos,
)
from .problems import (
    TestProblem,
    convection_diffusion,
    diagonal_skew,
    example2_box,
    lattice_normal_matrix,
    reference_solution,
)

__version__ = "0.1.0"

__all__ = [
    "BoundContext",
    "ConvergenceRecord",
    "aposteriori_estimate",
    "apriori_bound",
    "apriori_nonhermitian",
    "apriori_skew",
    "bound_curve",
    "make_context",
    "optimal_q_nonhermitian",
    "optimal_q_skew",
    "reference_bounds",
    "spectral_box",
    "threshold_q_m0",
    "tilde_z",
    "KrylovDecomposition",
    "KrylovProcess",
    "LinearOperator",
    "SparseMatrix",
    "arnoldi",
    "as_operator",
    "dense_expm",
    "h_entry_series",
    "krylov_approx",
    "lanczos",
    "TestProblem",
    "convection_diffusion",
    "diagonal_skew",
    "example2_box",
    "lattice_normal_matrix",
    "reference_solution",
    "ConformalParams",
    "SpectralBox",
    "build_conformal",
    "level_curve",
    "psi_minus_r",
    "solve_modulus",
    "EllipticPair",
    "JacobiTriple",
    "complete_elliptic",
    "incomplete_F",
    "jacobi_epsilon",
    "jacobi_scd",
    "KexpmError",
]
