"""Clustered spectral projections of a unitary and the adjoint spectrum part.

A cluster groups eigenphases (eigenvalue ``exp(2*pi*i*phase)``) that lie
within ``eps_cluster`` of each other on the circle.  Two clusters are
partners when their eigenvalues multiply to one within ``eps_res``; the
clusters that have a partner form the adjoint part of the spectrum.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError, DomainError, ContractViolation
from .numerics import EigenPairs, as_matrix, cis, eig_unitary

EPS_CLUSTER = 1e-8
EPS_RES = 1e-8
NEAR_RESONANCE_WARN = 1e-6


@dataclass(frozen=True)
class Cluster:
    phase: float
    multiplicity: int
    projection: np.ndarray

    @property
    def eigenvalue(self) -> complex:
        return cis(self.phase)


@dataclass(frozen=True)
class SpectralDecomposition:
    dim: int
    clusters: tuple[Cluster, ...]
    adjoint_part: tuple[int, ...]
    partner: dict[int, Optional[int]]
    eps_cluster: float = EPS_CLUSTER
    eps_res: float = EPS_RES
    resonance_gap: float = float("inf")
    warnings: tuple[str, ...] = field(default=())

    def __len__(self) -> int:
        return len(self.clusters)

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([c.eigenvalue for c in self.clusters], dtype=np.complex128)

    @property
    def projections(self) -> np.ndarray:
        """Stacked projections, shape ``(n_clusters, d, d)``."""
        return np.stack([c.projection for c in self.clusters])

    def projection_for(self, index: Optional[int]) -> np.ndarray:
        """``E_c`` for a cluster index; ``None`` means the zero projection."""
        if index is None:
            return np.zeros((self.dim, self.dim), dtype=np.complex128)
        return self.clusters[index].projection

    def reconstruct(self) -> np.ndarray:
        return np.einsum("c,cij->ij", self.eigenvalues, self.projections)


def check_tolerances(eps_cluster: float, eps_res: float) -> None:
    if not (eps_cluster > 0 and eps_res > 0):
        raise ConfigError("tolerances must be positive")
    if eps_res > eps_cluster:
        raise ConfigError(
            f"eps_res={eps_res:g} must not exceed eps_cluster={eps_cluster:g}; "
            "resonance partners would be ambiguous"
        )


def _circular_gap(a: float, b: float) -> float:
    d = abs(a - b) % 1.0
    return min(d, 1.0 - d)


def _group_phases(phases: np.ndarray, eps_cluster: float) -> list[list[int]]:
    """Single-linkage groups of eigenphases on the circle (wraps at 1 -> 0)."""
    n = len(phases)
    if n == 0:
        return []
    order = np.argsort(phases, kind="stable")
    srt = phases[order]
    gaps = np.diff(np.append(srt, srt[0] + 1.0))
    breaks = [i for i in range(n) if gaps[i] > eps_cluster]
    if not breaks:
        return [list(order)]
    # start just after a break so no group straddles the array end
    start = (breaks[-1] + 1) % n
    groups: list[list[int]] = [[]]
    for step in range(n):
        i = (start + step) % n
        groups[-1].append(int(order[i]))
        if i in breaks and step != n - 1:
            groups.append([])
    return groups


def _circular_mean(phases: Sequence[float]) -> float:
    z = np.mean(np.exp(2j * np.pi * np.asarray(phases)))
    phase = float(np.angle(z) / (2 * np.pi)) % 1.0
    # a mean just below one turn is the same point as zero
    return 0.0 if phase > 1.0 - 1e-14 else phase


def adjoint_spectrum_part(sd_or_values, eps_res: float = EPS_RES, eps_cluster=None):
    """Clusters whose eigenvalue has a partner ``w`` with ``z*w = 1``.

    Accepts a :class:`SpectralDecomposition` or an array of cluster
    eigenvalues.  Returns ``(indices, partner)`` where ``partner`` maps every
    cluster index to its partner index or ``None``.
    """
    if isinstance(sd_or_values, SpectralDecomposition):
        z = sd_or_values.eigenvalues
        if eps_cluster is None:
            eps_cluster = sd_or_values.eps_cluster
    else:
        z = np.asarray(sd_or_values, dtype=np.complex128)
    if eps_cluster is not None:
        check_tolerances(eps_cluster, eps_res)
    prod = np.abs(np.outer(z, z) - 1.0)
    partner: dict[int, Optional[int]] = {}
    for c in range(len(z)):
        hits = np.flatnonzero(prod[c] <= eps_res)
        if len(hits) > 1:
            raise ContractViolation(
                f"cluster {c} has {len(hits)} resonance partners; "
                "clusters are not separated enough for eps_res"
            )
        partner[c] = int(hits[0]) if len(hits) else None
    indices = tuple(c for c in range(len(z)) if partner[c] is not None)
    return indices, partner


def cluster_spectrum(
    ep: EigenPairs, eps_cluster: float = EPS_CLUSTER, eps_res: float = EPS_RES
) -> SpectralDecomposition:
    check_tolerances(eps_cluster, eps_res)
    phases = (np.angle(ep.values) / (2 * np.pi)) % 1.0
    # angle() of a value just below the positive real axis rounds to 1.0
    phases[phases >= 1.0] = 0.0
    clusters = []
    for members in _group_phases(phases, eps_cluster):
        vecs = ep.vectors[:, members]
        clusters.append(
            Cluster(
                phase=_circular_mean(phases[members]),
                multiplicity=len(members),
                projection=vecs @ vecs.conj().T,
            )
        )
    clusters.sort(key=lambda c: c.phase)

    warnings = []
    for a, b in itertools.combinations(clusters, 2):
        if _circular_gap(a.phase, b.phase) < 3 * eps_cluster:
            warnings.append(
                f"ill-conditioned clustering: phases {a.phase:.17g} and "
                f"{b.phase:.17g} closer than 3*eps_cluster"
            )

    z = np.array([c.eigenvalue for c in clusters])
    indices, partner = adjoint_spectrum_part(z, eps_res, eps_cluster)
    prod = np.abs(np.outer(z, z) - 1.0)
    off = [prod[a, b] for a in range(len(z)) for b in range(len(z)) if partner[a] != b]
    gap = float(min(off)) if off else float("inf")
    if gap < NEAR_RESONANCE_WARN:
        warnings.append(f"near resonance: min non-partnered |z w - 1| = {gap:.3e}")

    return SpectralDecomposition(
        dim=ep.dim,
        clusters=tuple(clusters),
        adjoint_part=indices,
        partner=partner,
        eps_cluster=eps_cluster,
        eps_res=eps_res,
        resonance_gap=gap,
        warnings=tuple(warnings),
    )


def decompose(u, eps_cluster: float = EPS_CLUSTER, eps_res: float = EPS_RES,
              tol: float = 1e-8) -> SpectralDecomposition:
    """Shortcut for ``cluster_spectrum(eig_unitary(u, tol), ...)``."""
    return cluster_spectrum(eig_unitary(u, tol), eps_cluster, eps_res)


def s_a(sd: SpectralDecomposition, a) -> np.ndarray:
    """``sum_{z in adjoint part} E_z A E_{conj z}``."""
    a = as_matrix(a, square=True)
    out = np.zeros_like(a)
    for c in sd.adjoint_part:
        out += sd.clusters[c].projection @ a @ sd.clusters[sd.partner[c]].projection
    return out


def partial_sum_norm(sd: SpectralDecomposition, a, subset, x, atol: float = 1e-9) -> float:
    """Norm of the partial sum ``sum_{c in subset} E_c A E_{partner(c)} x``.

    The summands have mutually orthogonal ranges, so the norm must match
    the root of the summed squared norms; a mismatch beyond ``atol`` raises
    :class:`ContractViolation`.
    """
    subset = list(subset)
    bad = [c for c in subset if c not in sd.adjoint_part]
    if bad:
        raise DomainError(f"clusters {bad} are not in the adjoint spectrum part")
    a = as_matrix(a, square=True)
    x = np.asarray(x, dtype=np.complex128)
    terms = [sd.clusters[c].projection @ a @ sd.clusters[sd.partner[c]].projection @ x
             for c in subset]
    if not terms:
        return 0.0
    norm = float(np.linalg.norm(np.sum(terms, axis=0)))
    pyth = float(np.sqrt(sum(np.linalg.norm(t) ** 2 for t in terms)))
    if abs(norm - pyth) > atol:
        raise ContractViolation(
            f"Pythagoras identity off by {abs(norm - pyth):.3e}", residual=abs(norm - pyth)
        )
    return norm
