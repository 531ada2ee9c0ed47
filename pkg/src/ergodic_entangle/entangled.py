"""Entangled Cesaro averages, their limits, and the bounds around them.

For a unitary ``U``, operators ``A_1..A_{m-1}`` and a partition ``alpha``
of ``{1..m}`` into ``k`` classes, the average at order ``N`` is

    N^{-k} sum_{n_1..n_k < N} U^{n_alpha(1)} A_1 U^{n_alpha(2)} ... A_{m-1} U^{n_alpha(m)}.

Two engines evaluate it.  :func:`average_time_domain` sums powers of ``U``
literally.  :func:`average_kernel` expands each power spectrally, which
turns the ``n``-sums into Cesaro kernels of the class products
``mu_j = prod_{p in class j} z_{c_p}``.  A *chain* is the operator word
``E_{c_1} A_1 E_{c_2} ... A_{m-1} E_{c_m}`` for one cluster assignment.
"""

from __future__ import annotations

import itertools
import math
import os
import string
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np

from .errors import ConfigError, DomainError, ResourceError, ShapeError
from .numerics import as_matrix, op_norm_estimate
from .partitions import Partition, make_partition
from .spectral import EPS_RES, SpectralDecomposition, s_a

CEILING_ENV = "ERGODIC_ENTANGLE_CEILING"
KERNEL_SWITCH = 1e-3

# suffix chain tensors are capped at this many complex entries per block
_BLOCK_ENTRIES = 1 << 21


@dataclass(frozen=True)
class Ceilings:
    """Cost ceilings: time-domain flop estimate and cluster-tuple count."""

    flops: float = 1e9
    tuples: float = 1e7

    @classmethod
    def from_env(cls) -> "Ceilings":
        """Defaults, overridden by ``ERGODIC_ENTANGLE_CEILING``.

        The variable holds ``FLOPS`` or ``FLOPS,TUPLES``.
        """
        raw = os.environ.get(CEILING_ENV, "").strip()
        if not raw:
            return cls()
        try:
            parts = [float(p) for p in raw.split(",")]
        except ValueError:
            raise ConfigError(f"{CEILING_ENV}={raw!r} is not FLOPS[,TUPLES]") from None
        if len(parts) == 1:
            return cls(flops=parts[0])
        if len(parts) == 2:
            return cls(flops=parts[0], tuples=parts[1])
        raise ConfigError(f"{CEILING_ENV}={raw!r} is not FLOPS[,TUPLES]")


@dataclass(frozen=True)
class EntangledSystem:
    sd: SpectralDecomposition
    ops: tuple[np.ndarray, ...]
    partition: Partition

    def __post_init__(self):
        d = self.sd.dim
        if len(self.ops) != self.partition.m - 1:
            raise ShapeError(
                f"partition has {self.partition.m} positions, so {self.partition.m - 1} "
                f"operators are needed; got {len(self.ops)}"
            )
        for i, a in enumerate(self.ops, start=1):
            if a.shape != (d, d):
                raise ShapeError(f"operator A_{i} has shape {a.shape}, expected {(d, d)}")

    @classmethod
    def build(cls, sd: SpectralDecomposition, ops: Sequence, partition: Partition):
        return cls(sd, tuple(as_matrix(a, square=True) for a in ops), partition)

    @property
    def dim(self) -> int:
        return self.sd.dim

    @property
    def m(self) -> int:
        return self.partition.m

    @property
    def k(self) -> int:
        return self.partition.k

    def op_product(self) -> np.ndarray:
        out = np.eye(self.dim, dtype=np.complex128)
        for a in self.ops:
            out = out @ a
        return out


@dataclass(frozen=True)
class ResonanceTuple:
    assignment: tuple[int, ...]
    class_products: tuple[complex, ...]


# ---------------------------------------------------------------- kernel


def cesaro_kernel(mu, n: int):
    """``K_N(mu) = N^{-1} sum_{n<N} mu^n`` for scalar or array ``mu``.

    Closed form ``(1 - mu^N) / (N (1 - mu))`` when ``|1 - mu| >= 1e-3``;
    closer to one the quotient cancels badly, so the powers are summed
    directly with compensated (``math.fsum``) summation.
    """
    if n < 1:
        raise DomainError(f"N must be >= 1, got {n}")
    scalar = np.ndim(mu) == 0
    mu = np.atleast_1d(np.asarray(mu, dtype=np.complex128))
    if np.any(np.abs(np.abs(mu) - 1.0) > 1e-6):
        raise DomainError("Cesaro kernel argument must lie on the unit circle")
    out = np.empty_like(mu)
    far = np.abs(1.0 - mu) >= KERNEL_SWITCH
    mf = mu[far]
    out[far] = (1.0 - mf**n) / (n * (1.0 - mf))
    near = ~far
    if np.any(near):
        out[near] = _compensated_power_mean(mu[near], n)
    return complex(out[0]) if scalar else out


def _compensated_power_mean(mu: np.ndarray, n: int) -> np.ndarray:
    # repeated arguments (resonant products are often exactly 1) are summed once
    uniq, inverse = np.unique(mu, return_inverse=True)
    exps = np.arange(n)
    vals = np.empty_like(uniq)
    for i, z in enumerate(uniq):
        if z == 1:
            vals[i] = 1.0
            continue
        p = np.power(z, exps)
        vals[i] = complex(math.fsum(p.real), math.fsum(p.imag)) / n
    return vals[inverse.reshape(-1)]


# ---------------------------------------------------------------- costs


def time_domain_cost(sys: EntangledSystem, n: int) -> float:
    return float(n) ** sys.k * sys.dim**3 * sys.m


def tuple_count(sys: EntangledSystem) -> int:
    return len(sys.sd) ** sys.m


def _check_tuples(sys: EntangledSystem, ceilings: Optional[Ceilings]):
    ceilings = ceilings or Ceilings.from_env()
    count = tuple_count(sys)
    if count > ceilings.tuples:
        raise ResourceError(
            f"{len(sys.sd)} clusters ^ {sys.m} positions = {count} tuples exceeds "
            f"the ceiling {ceilings.tuples:g}",
            estimate=count,
            ceiling=ceilings.tuples,
        )


# ---------------------------------------------------------------- engines


def unitary_powers(u, n: int) -> np.ndarray:
    """``U^0 .. U^{n-1}`` stacked, shape ``(n, d, d)``."""
    u = as_matrix(u, square=True)
    out = np.empty((n,) + u.shape, dtype=np.complex128)
    out[0] = np.eye(u.shape[0])
    for j in range(1, n):
        out[j] = out[j - 1] @ u
    return out


def average_time_domain(sys: EntangledSystem, u, n: int,
                        ceilings: Optional[Ceilings] = None) -> np.ndarray:
    """Literal evaluation of the entangled average from powers of ``U``.

    Each position ``p`` receives the power stack indexed by its class
    label and the whole word is contracted as one einsum, so the ``N^k``
    index tuples are summed without ever touching the spectral
    decomposition.
    """
    if n < 1:
        raise DomainError(f"N must be >= 1, got {n}")
    u = as_matrix(u, square=True)
    if u.shape[0] != sys.dim:
        raise ShapeError(f"unitary has dimension {u.shape[0]}, system has {sys.dim}")
    ceilings = ceilings or Ceilings.from_env()
    cost = time_domain_cost(sys, n)
    if cost > ceilings.flops:
        raise ResourceError(
            f"time-domain average needs about {cost:.3g} flops "
            f"(N^k d^3 m), ceiling is {ceilings.flops:g}",
            estimate=cost,
            ceiling=ceilings.flops,
        )
    powers = unitary_powers(u, n)
    letters = iter(string.ascii_letters)
    class_idx = [next(letters) for _ in range(sys.k)]
    row = [next(letters) for _ in range(2 * sys.m)]
    terms, operands = [], []
    for p, lab in enumerate(sys.partition.labels):
        terms.append(class_idx[lab - 1] + row[2 * p] + row[2 * p + 1])
        operands.append(powers)
        if p < sys.m - 1:
            terms.append(row[2 * p + 1] + row[2 * p + 2])
            operands.append(sys.ops[p])
    expr = ",".join(terms) + "->" + row[0] + row[-1]
    total = np.einsum(expr, *operands, optimize="greedy")
    return total / float(n) ** sys.k


def iter_chain_blocks(sys: EntangledSystem, ceilings: Optional[Ceilings] = None
                      ) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield ``(assignments, chains)`` over all cluster assignments.

    ``assignments`` has shape ``(B, m)`` (0-based cluster indices) and
    ``chains`` shape ``(B, d, d)``.  Assignments come in lexicographic
    order.  A suffix tensor over the last ``s`` positions is built once and
    left-multiplied by each prefix word, which keeps memory bounded.
    """
    _check_tuples(sys, ceilings)
    proj = sys.sd.projections
    n_cl, d, m = len(sys.sd), sys.dim, sys.m
    s = m
    while s > 1 and n_cl**s * d * d > _BLOCK_ENTRIES:
        s -= 1
    r = m - s

    # suffix[c_{r+1}..c_m] = E_{c_{r+1}} A_{r+1} ... A_{m-1} E_{c_m}
    suffix = proj
    for p in range(m - 2, r - 1, -1):
        left = np.einsum("aij,jk->aik", proj, sys.ops[p])
        suffix = np.einsum("aik,bkl->abil", left, suffix).reshape(-1, d, d)
    suf_assign = np.indices((n_cl,) * s).reshape(s, -1).T

    for prefix in itertools.product(range(n_cl), repeat=r):
        word = np.eye(d, dtype=np.complex128)
        for p, c in enumerate(prefix):
            word = word @ proj[c] @ sys.ops[p]
        chains = suffix if r == 0 else np.einsum("ij,bjk->bik", word, suffix)
        assign = np.empty((len(suf_assign), m), dtype=np.intp)
        assign[:, :r] = prefix
        assign[:, r:] = suf_assign
        yield assign, chains


def class_products(sys: EntangledSystem, assign: np.ndarray) -> np.ndarray:
    """``mu_j`` for each assignment row, shape ``(B, k)``."""
    z = sys.sd.eigenvalues[assign]
    out = np.ones((len(assign), sys.k), dtype=np.complex128)
    for j, positions in enumerate(sys.partition.classes):
        for p in positions:
            out[:, j] *= z[:, p - 1]
    return out


def _resonant(mu: np.ndarray, eps_res: float) -> np.ndarray:
    return np.all(np.abs(mu - 1.0) <= eps_res, axis=1)


def average_kernel(sys: EntangledSystem, n: int,
                   ceilings: Optional[Ceilings] = None) -> np.ndarray:
    """Spectral evaluation: ``sum_c prod_j K_N(mu_j) * chain(c)``."""
    if n < 1:
        raise DomainError(f"N must be >= 1, got {n}")
    total = np.zeros((sys.dim, sys.dim), dtype=np.complex128)
    for assign, chains in iter_chain_blocks(sys, ceilings):
        weights = np.prod(cesaro_kernel(class_products(sys, assign), n), axis=1)
        total += np.einsum("b,bij->ij", weights, chains)
    return total


def limit_general(sys: EntangledSystem, eps_res: float = EPS_RES,
                  ceilings: Optional[Ceilings] = None
                  ) -> tuple[np.ndarray, list[ResonanceTuple]]:
    """Sum of chains over assignments whose class products are all one.

    Works for any partition.  Returns the limit matrix and the list of
    contributing assignments in lexicographic order.
    """
    total = np.zeros((sys.dim, sys.dim), dtype=np.complex128)
    tuples: list[ResonanceTuple] = []
    for assign, chains in iter_chain_blocks(sys, ceilings):
        mu = class_products(sys, assign)
        mask = _resonant(mu, eps_res)
        if np.any(mask):
            total += chains[mask].sum(axis=0)
            for row, prods in zip(assign[mask], mu[mask]):
                tuples.append(ResonanceTuple(tuple(int(c) for c in row),
                                             tuple(complex(v) for v in prods)))
    return total, tuples


def limit_pair_partition(sys: EntangledSystem) -> np.ndarray:
    """Projection-chain sum over k-tuples from the adjoint spectrum part.

    Class ``j`` gets cluster ``z_j``; its first position carries ``E_{z_j}``
    and its second ``E_{conj z_j}``.  Empty adjoint part gives zero.
    """
    p = sys.partition
    if not p.is_pair():
        raise DomainError(
            f"partition {p} is not a pair partition; use limit_general instead"
        )
    sd = sys.sd
    d = sys.dim
    total = np.zeros((d, d), dtype=np.complex128)
    first = p.first_occurrence
    for zs in itertools.product(sd.adjoint_part, repeat=p.k):
        word = None
        for pos, lab in enumerate(p.labels, start=1):
            c = zs[lab - 1] if first[lab - 1] == pos else sd.partner[zs[lab - 1]]
            e = sd.clusters[c].projection
            word = e.copy() if word is None else word @ e
            if pos < p.m:
                word = word @ sys.ops[pos - 1]
        total += word
    return total


def analytic_error_bound(sys: EntangledSystem, n: int, eps_res: float = EPS_RES,
                         ceilings: Optional[Ceilings] = None) -> float:
    """Triangle-inequality bound on ``||average_kernel(N) - limit_general||_F``."""
    return _kernel_study(sys, n, eps_res, ceilings)[2]


def _kernel_study(sys: EntangledSystem, n: int, eps_res: float,
                  ceilings: Optional[Ceilings] = None):
    """One pass over the chains: ``(average, limit, bound, gap, T, max_chain)``.

    ``gap`` is the smallest, over non-resonant assignments, of the largest
    ``|1 - mu_j|`` among that assignment's non-resonant classes; ``T`` is
    the number of non-resonant assignments and ``max_chain`` the largest
    Frobenius norm of their chains.
    """
    d = sys.dim
    avg = np.zeros((d, d), dtype=np.complex128)
    lim = np.zeros((d, d), dtype=np.complex128)
    bound = 0.0
    gap, count, max_chain = math.inf, 0, 0.0
    for assign, chains in iter_chain_blocks(sys, ceilings):
        mu = class_products(sys, assign)
        kern = np.prod(cesaro_kernel(mu, n), axis=1)
        res = _resonant(mu, eps_res)
        norms = np.linalg.norm(chains, axis=(1, 2))
        avg += np.einsum("b,bij->ij", kern, chains)
        if np.any(res):
            lim += chains[res].sum(axis=0)
        bound += float(np.sum(np.abs(kern - res) * norms))
        nonres = ~res
        if np.any(nonres):
            dist = np.abs(mu[nonres] - 1.0)
            dist = np.where(dist <= eps_res, 0.0, dist)
            gap = min(gap, float(np.min(np.max(dist, axis=1))))
            count += int(np.count_nonzero(nonres))
            max_chain = max(max_chain, float(np.max(norms[nonres])))
    return avg, lim, bound, gap, count, max_chain


def lemma1_bound_check(sys: EntangledSystem, x, y) -> tuple[float, float]:
    """``(|<S x, y>|, ||x|| ||y|| prod ||A_j||)`` for a pair partition.

    Raises ``AssertionError`` if the first exceeds the second by more than
    a relative 1e-6.
    """
    if not sys.partition.is_pair():
        raise DomainError(f"partition {sys.partition} is not a pair partition")
    x = np.asarray(x, dtype=np.complex128)
    y = np.asarray(y, dtype=np.complex128)
    nx, ny = np.linalg.norm(x), np.linalg.norm(y)
    if nx == 0 or ny == 0:
        raise DomainError("x and y must be non-zero")
    lhs = float(abs(np.vdot(y, limit_pair_partition(sys) @ x)))
    rhs = float(nx * ny * np.prod([op_norm_estimate(a) for a in sys.ops]))
    assert lhs <= rhs * (1 + 1e-6), f"sesquilinear bound violated: {lhs} > {rhs}"
    return lhs, rhs


@dataclass(frozen=True)
class Reduction:
    """Result of deleting one class from a pair-partition system.

    For an eigenvector ``x`` of eigenvalue ``z0``:
    ``S_full x = left @ S_reduced (right @ x)``.
    """

    system: EntangledSystem
    left: np.ndarray
    right: np.ndarray
    deleted_class: int
    folded: np.ndarray


def reduce_partition(sys: EntangledSystem, eig_index: int) -> Reduction:
    """Fold the class that holds the last position into its neighbours.

    The last position carries ``E_{conj z_j}`` for its class ``j``; on an
    eigenvector ``x`` of ``z0`` (cluster ``eig_index``) this pins
    ``z_j = conj z0``, so the class's first position becomes the fixed
    projection ``E_{conj z0}`` and both positions drop out.  When that first
    position is interior it is folded into ``A_{q-1} E A_q``; when it is
    position 1 the factor ``E A_1`` moves to ``left``; when it is position
    ``m-1`` the product ``A_{m-2} E A_{m-1}`` becomes ``right``.
    """
    p = sys.partition
    if not p.is_pair():
        raise DomainError(f"partition {p} is not a pair partition")
    if p.k < 2:
        raise DomainError("a single pair has nothing to reduce")
    sd = sys.sd
    d = sys.dim
    e_bar = sd.projection_for(sd.partner.get(eig_index))
    j = p.labels[-1]
    q = p.classes[j - 1][0]
    ops = list(sys.ops)
    right = ops[-1]
    left = np.eye(d, dtype=np.complex128)
    keep = [pos for pos in range(1, p.m + 1) if pos not in (q, p.m)]
    if q == 1:
        left = e_bar @ ops[0]
        new_ops = ops[1:-1]
        folded = left
    elif q == p.m - 1:
        right = ops[-2] @ e_bar @ ops[-1]
        new_ops = ops[:-2]
        folded = right
    else:
        folded = ops[q - 2] @ e_bar @ ops[q - 1]
        new_ops = ops[: q - 2] + [folded] + ops[q:-1]
    reduced = EntangledSystem(sd, tuple(new_ops),
                              make_partition([p.labels[pos - 1] for pos in keep]))
    return Reduction(system=reduced, left=left, right=right, deleted_class=j, folded=folded)


def qper_identities(sd: SpectralDecomposition, a, b, c) -> dict[str, float]:
    """Frobenius residuals of the three four-position pair-partition identities.

    The left-hand side is the resonance-indicator limit, so each residual
    compares two independent evaluations.

    ``(1,1,2,2)``: limit = S_A B S_C
    ``(1,2,2,1)``: limit = S_{A S_B C}
    ``(1,2,1,2)``: limit = sum_{z,w} E_z A E_w B E_{conj z} C E_{conj w}
    """
    a, b, c = (as_matrix(x, square=True) for x in (a, b, c))
    ops = (a, b, c)

    def lim(labels):
        return limit_general(EntangledSystem(sd, ops, make_partition(labels)), sd.eps_res)[0]

    rhs_cross = np.zeros_like(a)
    for z in sd.adjoint_part:
        for w in sd.adjoint_part:
            e = sd.clusters
            rhs_cross += (e[z].projection @ a @ e[w].projection @ b
                          @ e[sd.partner[z]].projection @ c @ e[sd.partner[w]].projection)
    return {
        "1,1,2,2": float(np.linalg.norm(lim((1, 1, 2, 2)) - s_a(sd, a) @ b @ s_a(sd, c))),
        "1,2,2,1": float(np.linalg.norm(lim((1, 2, 2, 1)) - s_a(sd, a @ s_a(sd, b) @ c))),
        "1,2,1,2": float(np.linalg.norm(lim((1, 2, 1, 2)) - rhs_cross)),
    }
