from ._core import (
    ConsistencyViolation,
    InvalidArgument,
    SearchFailure,
    certify_rank_one,
    chain_dims,
    construct_3generic,
    hilbert,
    hunt_rank_one,
    is_n_generic,
    jacobi,
    selmer_basis,
    selmer_rank,
    solve_square_system,
    twist_parity_ratio,
    verify_certificate,
)

__all__ = [
    "ConsistencyViolation",
    "InvalidArgument",
    "SearchFailure",
    "certify_rank_one",
    "chain_dims",
    "construct_3generic",
    "hilbert",
    "hunt_rank_one",
    "is_n_generic",
    "jacobi",
    "selmer_basis",
    "selmer_rank",
    "solve_square_system",
    "twist_parity_ratio",
    "verify_certificate",
]
