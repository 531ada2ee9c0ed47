"""Instance generators, the exact resonance oracle and verification harness."""

from .convergence import ConvergenceReport, convergence_study, geometric_schedule
from .exact import resonance_tuples_exact
from .generators import (
    gen_diagonal_unitary,
    gen_haar_unitary,
    gen_operator,
    gen_shift_unitary,
    parse_phase,
    phase_rational,
)

__all__ = [
    "ConvergenceReport",
    "convergence_study",
    "gen_diagonal_unitary",
    "gen_haar_unitary",
    "gen_operator",
    "gen_shift_unitary",
    "geometric_schedule",
    "parse_phase",
    "phase_rational",
    "resonance_tuples_exact",
]
