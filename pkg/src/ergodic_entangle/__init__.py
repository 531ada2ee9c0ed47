"""Entangled ergodic averages of unitary matrices and their spectral limits."""

from .entangled import (
    EntangledSystem,
    analytic_error_bound,
    average_kernel,
    average_time_domain,
    cesaro_kernel,
    lemma1_bound_check,
    limit_general,
    limit_pair_partition,
    qper_identities,
    reduce_partition,
)
from .numerics import adjoint, eig_unitary, frob_norm, is_unitary, matmul, op_norm_estimate
from .partitions import enumerate_pair_partitions, make_partition, parse_partition
from .spectral import adjoint_spectrum_part, cluster_spectrum, decompose, s_a

__all__ = [
    "EntangledSystem",
    "adjoint",
    "adjoint_spectrum_part",
    "analytic_error_bound",
    "average_kernel",
    "average_time_domain",
    "cesaro_kernel",
    "cluster_spectrum",
    "decompose",
    "eig_unitary",
    "enumerate_pair_partitions",
    "frob_norm",
    "is_unitary",
    "lemma1_bound_check",
    "limit_general",
    "limit_pair_partition",
    "make_partition",
    "matmul",
    "op_norm_estimate",
    "parse_partition",
    "qper_identities",
    "reduce_partition",
    "s_a",
]

__version__ = "0.1.0"
