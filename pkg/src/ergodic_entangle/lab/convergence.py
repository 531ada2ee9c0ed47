"""Convergence of the kernel average towards the resonant limit."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..entangled import Ceilings, EntangledSystem, _kernel_study
from ..errors import ContractViolation, DomainError
from ..spectral import EPS_RES

DEFAULT_SCHEDULE = tuple(8 * 2**i for i in range(8))

# absolute slack for reassociation noise, scaled by prod ||A_i||_F
BOUND_SLACK = 1e-12


def geometric_schedule(start: int = 8, factor: int = 2, count: int = 8) -> tuple[int, ...]:
    if start < 1 or factor < 2 or count < 1:
        raise DomainError("schedule needs start >= 1, factor >= 2, count >= 1")
    return tuple(start * factor**i for i in range(count))


def tail_slope(schedule: Sequence[int], distances: Sequence[float]) -> Optional[float]:
    """Least-squares slope of log distance against log N over the tail half.

    ``None`` when fewer than two tail points exist or a tail distance is
    numerically zero.
    """
    half = len(schedule) // 2
    ns = np.asarray(schedule[half:], dtype=float)
    ds = np.asarray(distances[half:], dtype=float)
    if len(ns) < 2 or np.any(ds <= 1e-14):
        return None
    return float(np.polyfit(np.log(ns), np.log(ds), 1)[0])


@dataclass
class ConvergenceReport:
    schedule: tuple[int, ...]
    distances: tuple[float, ...]
    bounds: tuple[float, ...]
    fitted_slope: Optional[float]
    resonance_gap: float
    nonresonant_tuples: int = 0
    max_chain_norm: float = 0.0
    slack: float = field(default=0.0, repr=False)

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.schedule, self.schedule[1:])):
            raise DomainError("schedule must be strictly increasing")

    @property
    def dominated(self) -> bool:
        return all(d <= b + self.slack for d, b in zip(self.distances, self.bounds))

    def rows(self):
        for n, d, b in zip(self.schedule, self.distances, self.bounds):
            ratio = d / b if b > 0 else (0.0 if d <= self.slack else math.inf)
            yield n, d, b, ratio

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["N", "distance", "bound", "ratio"])
        for n, d, b, r in self.rows():
            w.writerow([n, repr(d), repr(b), repr(r)])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "fittedSlope": self.fitted_slope if self.fitted_slope is not None else "n/a",
            "resonanceGap": self.resonance_gap if math.isfinite(self.resonance_gap) else "inf",
            "boundDomination": "pass" if self.dominated else "fail",
            "nonresonantTuples": self.nonresonant_tuples,
            "maxChainNorm": self.max_chain_norm,
            "finalDistance": self.distances[-1] if self.distances else None,
        }


def convergence_study(sys: EntangledSystem, schedule: Sequence[int] = DEFAULT_SCHEDULE,
                      eps_res: float = EPS_RES, ceilings: Optional[Ceilings] = None,
                      check: bool = True) -> ConvergenceReport:
    """Distance of ``average_kernel(N)`` to ``limit_general`` against the bound.

    With ``check`` set, a distance above its bound raises
    :class:`ContractViolation`.
    """
    schedule = tuple(int(n) for n in schedule)
    scale = max(1.0, float(np.prod([np.linalg.norm(a) for a in sys.ops])))
    distances, bounds = [], []
    gap, count, max_chain = math.inf, 0, 0.0
    for n in schedule:
        avg, lim, bound, gap, count, max_chain = _kernel_study(sys, n, eps_res, ceilings)
        distances.append(float(np.linalg.norm(avg - lim)))
        bounds.append(bound)
    report = ConvergenceReport(
        schedule=schedule,
        distances=tuple(distances),
        bounds=tuple(bounds),
        fitted_slope=tail_slope(schedule, distances),
        resonance_gap=gap,
        nonresonant_tuples=count,
        max_chain_norm=max_chain,
        slack=BOUND_SLACK * scale,
    )
    if check and not report.dominated:
        worst = max(d - b for d, b in zip(distances, bounds))
        raise ContractViolation(f"distance exceeds analytic bound by {worst:.3e}", residual=worst)
    return report
