"""Seeded test instances: unitaries, operators and random systems.

All randomness goes through ``numpy.random.default_rng(seed)`` (PCG64).
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence, Union

import numpy as np

from ..errors import DomainError
from ..numerics import cis, op_norm_estimate

GENERATOR_NAME = "numpy.random.default_rng (PCG64)"

Phase = Union[Fraction, float]


def phase_rational(num: int, den: int) -> Fraction:
    """Reduced rational phase ``num/den`` taken mod 1."""
    if den <= 0:
        raise DomainError(f"denominator must be positive, got {den}")
    return Fraction(num, den) % 1


def parse_phase(text: str) -> Fraction:
    """Exact phase from ``"p/q"`` or a decimal literal such as ``"0.05"``, mod 1."""
    try:
        return Fraction(text.strip()) % 1
    except (ValueError, ZeroDivisionError):
        raise DomainError(f"malformed phase {text!r}") from None


def gen_diagonal_unitary(phases: Sequence[Phase]) -> np.ndarray:
    ph = np.array([float(p) for p in phases], dtype=float)
    if np.any(ph < 0) or np.any(ph >= 1):
        raise DomainError("phases must lie in [0, 1)")
    return np.diag(cis(ph))


def gen_shift_unitary(d: int) -> np.ndarray:
    """Cyclic shift ``e_a -> e_{a+1 mod d}``."""
    if d < 1:
        raise DomainError("dimension must be >= 1")
    return np.roll(np.eye(d, dtype=np.complex128), 1, axis=0)


def _ginibre(rng: np.random.Generator, d: int) -> np.ndarray:
    return (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)


def haar_from_rng(rng: np.random.Generator, d: int) -> np.ndarray:
    q, r = np.linalg.qr(_ginibre(rng, d))
    diag = np.diag(r)
    return q * (diag / np.abs(diag))


def gen_haar_unitary(d: int, seed: int) -> np.ndarray:
    """Haar-distributed unitary: QR of a complex Ginibre matrix with the
    phases of ``R``'s diagonal moved into ``Q``."""
    if d < 1:
        raise DomainError("dimension must be >= 1")
    return haar_from_rng(np.random.default_rng(seed), d)


OPERATOR_KINDS = ("rankOne", "dense", "hermitian")


def operator_from_rng(rng: np.random.Generator, d: int, kind: str) -> np.ndarray:
    if kind == "rankOne":
        u = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        a = np.outer(u, v.conj())
    elif kind == "dense":
        a = _ginibre(rng, d)
    elif kind == "hermitian":
        g = _ginibre(rng, d)
        a = (g + g.conj().T) / 2
    else:
        raise DomainError(f"unknown operator kind {kind!r}; expected one of {OPERATOR_KINDS}")
    a = a / op_norm_estimate(a)
    if kind == "hermitian":
        a = (a + a.conj().T) / 2
    return a


def gen_operator(d: int, kind: str, seed: int) -> np.ndarray:
    """Seeded random operator with operator norm one."""
    if d < 1:
        raise DomainError("dimension must be >= 1")
    return operator_from_rng(np.random.default_rng(seed), d, kind)


def random_rational_phases(rng: np.random.Generator, count: int, max_den: int = 12,
                           distinct: bool = False) -> list[Fraction]:
    out: list[Fraction] = []
    while len(out) < count:
        den = int(rng.integers(1, max_den + 1))
        ph = phase_rational(int(rng.integers(0, den)), den)
        if distinct and ph in out:
            continue
        out.append(ph)
    return out


def conjugated_unitary(rng: np.random.Generator, phases: Sequence[Phase]) -> np.ndarray:
    """``V diag(exp(2 pi i phases)) V^*`` with Haar ``V``."""
    v = haar_from_rng(rng, len(phases))
    return v @ gen_diagonal_unitary(phases) @ v.conj().T
