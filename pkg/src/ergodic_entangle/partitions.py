"""Partitions of {1..m} as surjective label maps, in canonical form.

Positions are 1-based on every public surface.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

from .errors import DomainError, SizeError

MAX_PAIR_K = 6


@dataclass(frozen=True)
class Partition:
    """Canonical partition: classes are numbered by first occurrence."""

    labels: tuple[int, ...]

    def __post_init__(self):
        if tuple(canonical_labels(self.labels)) != self.labels:
            raise DomainError(f"labels {self.labels} are not canonical; use make_partition")

    @property
    def m(self) -> int:
        return len(self.labels)

    @property
    def k(self) -> int:
        return max(self.labels)

    @cached_property
    def classes(self) -> tuple[tuple[int, ...], ...]:
        """Ordered 1-based positions of each class."""
        out: list[list[int]] = [[] for _ in range(self.k)]
        for pos, lab in enumerate(self.labels, start=1):
            out[lab - 1].append(pos)
        return tuple(tuple(c) for c in out)

    @property
    def first_occurrence(self) -> tuple[int, ...]:
        return tuple(c[0] for c in self.classes)

    def is_pair(self) -> bool:
        return all(len(c) == 2 for c in self.classes)

    def role(self, position: int) -> str:
        """``"first"`` or ``"later"`` for a 1-based position."""
        if not 1 <= position <= self.m:
            raise DomainError(f"position {position} outside 1..{self.m}")
        lab = self.labels[position - 1]
        return "first" if self.first_occurrence[lab - 1] == position else "later"

    def literal(self) -> str:
        return ",".join(map(str, self.labels))

    def __str__(self) -> str:
        return self.literal()


def canonical_labels(labels: Iterable) -> list[int]:
    seen: dict = {}
    out = []
    for lab in labels:
        if lab not in seen:
            seen[lab] = len(seen) + 1
        out.append(seen[lab])
    return out


def make_partition(labels: Iterable) -> Partition:
    labels = list(labels)
    if not labels:
        raise DomainError("a partition needs at least one position")
    return Partition(tuple(canonical_labels(labels)))


def parse_partition(text: str) -> Partition:
    """Parse a literal such as ``"1,2,1,2"``."""
    parts = [p.strip() for p in text.split(",")]
    if not parts or any(not p for p in parts):
        raise DomainError(f"malformed partition literal {text!r}")
    try:
        labels = [int(p) for p in parts]
    except ValueError:
        raise DomainError(f"malformed partition literal {text!r}") from None
    if any(lab < 0 for lab in labels):
        raise DomainError(f"negative label in partition literal {text!r}")
    return make_partition(labels)


def is_pair_partition(p: Partition) -> bool:
    return p.is_pair()


def occurrence_role(p: Partition, position: int) -> str:
    return p.role(position)


def enumerate_pair_partitions(k: int) -> list[Partition]:
    """All canonical pair partitions of {1..2k}, ``(2k-1)!!`` of them.

    Output is in lexicographic order of the label tuples.
    """
    if not 1 <= k <= MAX_PAIR_K:
        raise SizeError(f"k={k} outside the supported range 1..{MAX_PAIR_K}")
    out: list[Partition] = []

    def extend(labels: list[int], used: int, open_: list[int]):
        # open_: classes seen once so far
        if len(labels) == 2 * k:
            out.append(Partition(tuple(labels)))
            return
        remaining = 2 * k - len(labels)
        for lab in sorted(open_):
            open_.remove(lab)
            extend(labels + [lab], used, open_)
            open_.append(lab)
        if used < k and len(open_) + 1 <= remaining - 1:
            extend(labels + [used + 1], used + 1, open_ + [used + 1])

    extend([], 0, [])
    return sorted(out, key=lambda p: p.labels)


def enumerate_partitions(m: int, max_m: int = 8) -> list[Partition]:
    """Every canonical partition of {1..m} (Bell-number many)."""
    if not 1 <= m <= max_m:
        raise SizeError(f"m={m} outside the supported range 1..{max_m}")
    out: list[Partition] = []

    def extend(labels: list[int], top: int):
        if len(labels) == m:
            out.append(Partition(tuple(labels)))
            return
        for lab in range(1, top + 2):
            extend(labels + [lab], max(top, lab))

    extend([], 0)
    return out
