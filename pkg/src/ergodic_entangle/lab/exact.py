"""Tolerance-free resonance decisions for rational eigenphases."""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from typing import Sequence

import numpy as np

from ..entangled import EntangledSystem, ResonanceTuple, limit_general
from ..errors import DomainError, RangeError
from ..partitions import Partition
from ..spectral import SpectralDecomposition

LCM_LIMIT = 2**31


def common_denominator(phases: Sequence[Fraction]) -> int:
    den = 1
    for p in phases:
        den = math.lcm(den, Fraction(p).denominator)
        if den > LCM_LIMIT:
            raise RangeError(f"common denominator exceeds 2^31 ({den})")
    return den


def resonance_tuples_exact(phases: Sequence[Fraction], partition: Partition
                           ) -> list[ResonanceTuple]:
    """All assignments of phase indices whose class phase sums are integers.

    With ``L`` the common denominator, a class product equals one exactly
    when ``sum_p num_p * (L / den_p)`` is divisible by ``L``.  Assignments
    are returned in lexicographic order.
    """
    phases = [Fraction(p) % 1 for p in phases]
    if len(set(phases)) != len(phases):
        raise DomainError("phases must be distinct")
    big = common_denominator(phases)
    scaled = [int(p * big) for p in phases]
    classes = [[q - 1 for q in c] for c in partition.classes]
    ones = (1 + 0j,) * partition.k
    out = []
    for assign in itertools.product(range(len(phases)), repeat=partition.m):
        if all(sum(scaled[assign[q]] for q in cls) % big == 0 for cls in classes):
            out.append(ResonanceTuple(assign, ones))
    return out


def float_resonance_by_phase(sd: SpectralDecomposition, phases: Sequence[Fraction],
                             partition: Partition, eps_res: float):
    """Floating-point resonant tuples, relabelled by index into ``phases``.

    Returns ``None`` when the clusters cannot be matched one-to-one with the
    given phases (for instance when clustering merged two of them).
    """
    targets = np.array([float(p) for p in phases])
    if len(sd) != len(targets):
        return None
    mapping = {}
    for c, cl in enumerate(sd.clusters):
        gaps = np.abs((targets - cl.phase + 0.5) % 1.0 - 0.5)
        mapping[c] = int(np.argmin(gaps))
    if len(set(mapping.values())) != len(targets):
        return None
    d = sd.dim
    ops = tuple(np.ones((d, d), dtype=np.complex128) for _ in range(partition.m - 1))
    _, tuples = limit_general(EntangledSystem(sd, ops, partition), eps_res)
    return sorted(tuple(mapping[c] for c in t.assignment) for t in tuples)
