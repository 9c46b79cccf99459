"""Enumerated partition universes and seeded uniform sampling from them."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterator, Optional, Sequence

import numpy as np

from .partition import (
    Partition,
    PartitionError,
    embed_matrix,
    format_partition,
    parse_partition,
    uncd_matrix,
)


class Constraint(str, enum.Enum):
    FULL = "full"
    KMAX = "kmax"
    STRUCTURED = "structured"
    STRUCTURED_PLUS_TOTALSEP = "structured+ts"


@dataclass(frozen=True)
class UniverseSpec:
    """Which universe to enumerate. ``pair`` is 1-based."""

    n: int
    constraint: Constraint = Constraint.FULL
    k_max: Optional[int] = None
    pair: Optional[tuple[int, int]] = None

    def __post_init__(self):
        object.__setattr__(self, "constraint", Constraint(self.constraint))
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.constraint is Constraint.KMAX:
            if self.k_max is None or self.k_max < 1:
                raise ValueError("KMAX constraint needs k_max >= 1")
        elif self.constraint in (Constraint.STRUCTURED, Constraint.STRUCTURED_PLUS_TOTALSEP):
            if self.pair is None:
                object.__setattr__(self, "pair", (1, 3))
            p, q = self.pair
            if p == q or not (1 <= p <= self.n and 1 <= q <= self.n):
                raise ValueError(f"structure pair must be two distinct elements of 1..{self.n}")
            object.__setattr__(self, "pair", (min(p, q), max(p, q)))

    def __str__(self) -> str:
        c = self.constraint
        if c is Constraint.KMAX:
            return f"kmax({self.k_max})"
        if c is Constraint.FULL:
            return "full"
        return f"{c.value}({self.pair[0]},{self.pair[1]})"

    @classmethod
    def parse(cls, n: int, text: str) -> "UniverseSpec":
        """Parse ``full``, ``kmax(4)``/``kmax:4``, ``structured(1,3)``, ``structured+ts(1,3)``."""
        m = re.fullmatch(r"\s*([a-z+_]+)\s*(?:[(:]\s*([\d,\s]+?)\s*\)?)?\s*", text.lower())
        if not m:
            raise ValueError(f"bad universe spec {text!r}")
        name, args = m.group(1), m.group(2)
        nums = [int(x) for x in re.split(r"[,\s]+", args) if x] if args else []
        aliases = {
            "full": Constraint.FULL,
            "kmax": Constraint.KMAX,
            "structured": Constraint.STRUCTURED,
            "structured+ts": Constraint.STRUCTURED_PLUS_TOTALSEP,
            "structured_plus_totalsep": Constraint.STRUCTURED_PLUS_TOTALSEP,
        }
        if name not in aliases:
            raise ValueError(f"unknown universe constraint {name!r}")
        c = aliases[name]
        if c is Constraint.KMAX:
            if len(nums) != 1:
                raise ValueError("kmax needs one argument")
            return cls(n, c, k_max=nums[0])
        if c is Constraint.FULL:
            return cls(n, c)
        if nums and len(nums) != 2:
            raise ValueError("structured needs a pair of elements")
        return cls(n, c, pair=tuple(nums) if nums else None)


def iter_rgs(n: int, k_max: Optional[int] = None) -> Iterator[tuple[int, ...]]:
    """Restricted growth strings of length n in lexicographic order."""
    if n < 1:
        return
    limit = n if k_max is None else k_max
    rgs = [0] * n

    def rec(i: int, top: int):
        if i == n:
            yield tuple(rgs)
            return
        for x in range(min(top + 1, limit - 1) + 1):
            rgs[i] = x
            yield from rec(i + 1, max(top, x))

    yield from rec(1, 0)


@dataclass(frozen=True, eq=False)
class PartitionUniverse:
    spec: UniverseSpec
    members: tuple[Partition, ...] = field(repr=False)

    @property
    def n(self) -> int:
        return self.spec.n

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __getitem__(self, i):
        return self.members[i]

    def __contains__(self, p) -> bool:
        return p in self.index

    @cached_property
    def index(self) -> dict[Partition, int]:
        return {p: i for i, p in enumerate(self.members)}

    @cached_property
    def rgs_array(self) -> np.ndarray:
        return np.array([p.rgs for p in self.members], dtype=np.int16).reshape(len(self), self.n)

    @cached_property
    def embedding(self) -> np.ndarray:
        return embed_matrix(self.rgs_array)

    @cached_property
    def uncd_matrix(self) -> np.ndarray:
        return uncd_matrix(self.embedding)

    def export(self) -> str:
        lines = [f"# n={self.n} constraint={self.spec} count={len(self)}"]
        lines += [format_partition(p) for p in self.members]
        return "\n".join(lines) + "\n"


def enumerate_universe(
    n: int,
    constraint: Constraint | str = Constraint.FULL,
    k_max: Optional[int] = None,
    pair: Optional[tuple[int, int]] = None,
) -> PartitionUniverse:
    return universe(UniverseSpec(n, Constraint(constraint), k_max=k_max, pair=pair))


@lru_cache(maxsize=32)
def universe(spec: UniverseSpec) -> PartitionUniverse:
    """Enumerate (and cache) the universe described by ``spec``."""
    n, c = spec.n, spec.constraint
    if c is Constraint.FULL:
        members = [Partition(r) for r in iter_rgs(n)]
    elif c is Constraint.KMAX:
        members = [Partition(r) for r in iter_rgs(n, spec.k_max)]
    else:
        p, q = spec.pair
        members = [Partition(r) for r in iter_rgs(n) if r[p - 1] == r[q - 1]]
        if c is Constraint.STRUCTURED_PLUS_TOTALSEP:
            members.append(Partition.total_separation(n))
            members.sort()
    return PartitionUniverse(spec, tuple(members))


def parse_export(text: str) -> list[Partition]:
    """Read partitions back from :meth:`PartitionUniverse.export` output."""
    out = []
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            out.append(parse_partition(line))
    return out


# --------------------------------------------------------------------------
# sampling


def sample_size_for(fraction, universe_size: int, force_include: bool = False) -> int:
    """Sample size for a fraction of the universe, halves rounded to even.

    With a forced member the fraction applies to the rest of the universe
    and the forced member is added on top.
    """
    from fractions import Fraction

    f = Fraction(str(fraction)) if isinstance(fraction, float) else Fraction(fraction)
    if not 0 < f <= 1:
        raise ValueError("fraction must be in (0, 1]")
    if force_include:
        return min(universe_size, 1 + round(f * (universe_size - 1)))
    return max(1, min(universe_size, round(f * universe_size)))


def trial_rng(seed: int, trial: int = 0) -> np.random.Generator:
    """PCG64 stream for one trial.

    The stream is keyed by the entropy tuple (seed, trial) through numpy's
    SeedSequence hash, so trials are independent of execution order.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed & (2**64 - 1), trial])))


@dataclass(frozen=True)
class SampleSpec:
    universe: PartitionUniverse
    sample_size: int
    seed: int = 0
    force_include: Optional[Partition] = None
    replace: bool = False

    def __post_init__(self):
        m = len(self.universe)
        if self.sample_size < 1:
            raise ValueError("sample_size must be >= 1")
        if not self.replace and self.sample_size > m:
            raise ValueError(f"sample_size {self.sample_size} exceeds universe size {m}")
        if self.force_include is not None and self.force_include not in self.universe:
            raise PartitionError("force_include is not a member of the universe")


def sample_indices(
    m: int,
    size: int,
    rng: np.random.Generator,
    force: Optional[int] = None,
    replace: bool = False,
    ordered: bool = True,
) -> np.ndarray:
    """Indices into a universe of ``m`` members.

    Ascending by default. With ``ordered=False`` the draw order is kept and a
    forced member comes first, which is what order-sensitive tie rules see.
    """
    if force is None:
        idx = rng.choice(m, size=size, replace=replace)
    else:
        rest = np.delete(np.arange(m), force)
        idx = np.concatenate(([force], rng.choice(rest, size=size - 1, replace=replace)))
    return np.sort(idx) if ordered else idx


def sample(spec: SampleSpec, trial: int = 0) -> list[Partition]:
    u = spec.universe
    force = None if spec.force_include is None else u.index[spec.force_include]
    idx = sample_indices(len(u), spec.sample_size, trial_rng(spec.seed, trial), force, spec.replace)
    return [u[i] for i in idx]


def sample_from(members: Sequence[Partition], size: int, seed: int) -> list[Partition]:
    """Convenience wrapper for sampling an explicit list."""
    rng = trial_rng(seed)
    return [members[i] for i in sample_indices(len(members), size, rng)]
