"""Set partitions of {1..n} in restricted-growth-string form, and the
pair-counting distances between them."""

from __future__ import annotations

import enum
import re
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from math import comb, factorial
from typing import Hashable, Iterable, Optional, Sequence

import numpy as np


class PartitionError(ValueError):
    """Raised on malformed partitions or incompatible ground sets."""


@dataclass(frozen=True, order=True)
class Partition:
    """A set partition stored as a restricted growth string.

    ``rgs[i]`` is the cluster label of element ``i + 1``. Labels are numbered
    by first appearance, so equal partitions have equal ``rgs`` and the
    dataclass ordering is RGS-lexicographic.
    """

    rgs: tuple[int, ...]

    def __post_init__(self):
        rgs = tuple(int(x) for x in self.rgs)
        if not rgs:
            raise PartitionError("empty ground set")
        top = -1
        for x in rgs:
            if x < 0 or x > top + 1:
                raise PartitionError(f"not a restricted growth string: {rgs}")
            top = max(top, x)
        object.__setattr__(self, "rgs", rgs)

    @property
    def n(self) -> int:
        return len(self.rgs)

    @property
    def k(self) -> int:
        return max(self.rgs) + 1

    def clusters(self) -> list[tuple[int, ...]]:
        """Clusters as sorted tuples of 1-based elements, ordered by smallest element."""
        out: list[list[int]] = [[] for _ in range(self.k)]
        for i, label in enumerate(self.rgs):
            out[label].append(i + 1)
        return [tuple(c) for c in out]

    def cluster_of(self, element: int) -> tuple[int, ...]:
        label = self.rgs[element - 1]
        return tuple(i + 1 for i, x in enumerate(self.rgs) if x == label)

    def together(self, i: int, j: int) -> bool:
        return self.rgs[i - 1] == self.rgs[j - 1]

    def __str__(self) -> str:
        return format_partition(self)

    @classmethod
    def from_clusters(cls, clusters: Iterable[Iterable[int]]) -> "Partition":
        return parse_clusters(clusters)

    @classmethod
    def total_separation(cls, n: int) -> "Partition":
        return cls(tuple(range(n)))

    @classmethod
    def all_in_one(cls, n: int) -> "Partition":
        return cls((0,) * n)


def canonicalize(labels: Sequence[Hashable]) -> Partition:
    """Relabel clusters by order of first appearance."""
    if len(labels) == 0:
        raise PartitionError("empty ground set")
    seen: dict[Hashable, int] = {}
    rgs = []
    for x in labels:
        if x not in seen:
            seen[x] = len(seen)
        rgs.append(seen[x])
    return Partition(tuple(rgs))


def parse_clusters(clusters: Iterable[Iterable[int]]) -> Partition:
    clusters = [list(c) for c in clusters]
    elements = sorted(e for c in clusters for e in c)
    n = len(elements)
    if n == 0:
        raise PartitionError("empty ground set")
    if elements != list(range(1, n + 1)):
        raise PartitionError("clusters must cover 1..n exactly once")
    if any(len(c) == 0 for c in clusters):
        raise PartitionError("empty cluster")
    labels = [0] * n
    for label, c in enumerate(clusters):
        for e in c:
            labels[e - 1] = label
    return canonicalize(labels)


_BRACE_GROUP = re.compile(r"\{([^{}]*)\}")


def parse_partition(text: str) -> Partition:
    """Parse ``{ {1, 3} {2} }`` brace form or ``0,1,0`` RGS form."""
    text = text.strip()
    if "{" in text:
        inner = text
        if inner.startswith("{") and inner.endswith("}") and inner.count("{") > 1:
            inner = inner[1:-1]
        groups = _BRACE_GROUP.findall(inner)
        if not groups or _BRACE_GROUP.sub("", inner).replace(",", "").strip():
            raise PartitionError(f"cannot parse partition: {text!r}")
        clusters = []
        for g in groups:
            items = [s for s in re.split(r"[\s,]+", g.strip()) if s]
            try:
                clusters.append([int(s) for s in items])
            except ValueError:
                raise PartitionError(f"cannot parse partition: {text!r}") from None
        return parse_clusters(clusters)
    items = [s for s in re.split(r"[\s,]+", text) if s]
    try:
        labels = [int(s) for s in items]
    except ValueError:
        raise PartitionError(f"cannot parse partition: {text!r}") from None
    return canonicalize(labels)


def format_partition(p: Partition) -> str:
    body = " ".join("{" + ", ".join(map(str, c)) + "}" for c in p.clusters())
    return "{ " + body + " }"


def format_rgs(p: Partition) -> str:
    return ",".join(map(str, p.rgs))


# --------------------------------------------------------------------------
# distances


def _check_same_n(a: Partition, b: Partition) -> None:
    if a.n != b.n:
        raise PartitionError("ground-set size mismatch")


def uncd_pairwise(a: Partition, b: Partition) -> int:
    """Reference implementation: loop over all element pairs."""
    _check_same_n(a, b)
    ra, rb = a.rgs, b.rgs
    return sum(
        (ra[i] == ra[j]) != (rb[i] == rb[j])
        for i, j in combinations(range(a.n), 2)
    )


def uncd(a: Partition, b: Partition) -> int:
    """Number of element pairs co-clustered in exactly one of ``a``, ``b``.

    Counted from cluster sizes and the contingency table:
    pairs(a) + pairs(b) - 2 * pairs(a and b).
    """
    _check_same_n(a, b)
    pa = sum(comb(c, 2) for c in Counter(a.rgs).values())
    pb = sum(comb(c, 2) for c in Counter(b.rgs).values())
    both = sum(comb(c, 2) for c in Counter(zip(a.rgs, b.rgs)).values())
    return pa + pb - 2 * both


def cd(a: Partition, b: Partition) -> Fraction:
    """Normalised cluster difference, i.e. 1 - Rand index, as an exact fraction."""
    _check_same_n(a, b)
    if a.n < 2:
        raise PartitionError("CD undefined for n<2")
    return Fraction(uncd(a, b), comb(a.n, 2))


class DistanceKind(str, enum.Enum):
    UNCD = "uncd"
    CD = "cd"
    POWER = "power"


@dataclass(frozen=True)
class DistanceSpec:
    kind: DistanceKind = DistanceKind.UNCD
    exponent: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", DistanceKind(self.kind))
        if int(self.exponent) != self.exponent or self.exponent < 1:
            raise ValueError("exponent must be a positive integer")

    @classmethod
    def parse(cls, text: str) -> "DistanceSpec":
        """``uncd``, ``cd`` or ``power:<p>`` / ``uncd^<p>``."""
        t = text.strip().lower()
        m = re.fullmatch(r"(?:power[:=]?|uncd\^)(\d+)", t)
        if m:
            return cls(DistanceKind.POWER, int(m.group(1)))
        return cls(DistanceKind(t))

    def __str__(self) -> str:
        if self.kind is DistanceKind.POWER:
            return f"power:{self.exponent}"
        return self.kind.value

    def apply(self, raw: int, n: int):
        """Map a raw unCD value to this distance."""
        if self.kind is DistanceKind.UNCD:
            return raw
        if self.kind is DistanceKind.POWER:
            return raw**self.exponent
        if n < 2:
            raise PartitionError("CD undefined for n<2")
        return Fraction(raw, comb(n, 2))


UNCD = DistanceSpec(DistanceKind.UNCD)
CD = DistanceSpec(DistanceKind.CD)


def power(exponent: int) -> DistanceSpec:
    return DistanceSpec(DistanceKind.POWER, exponent)


def distance(a: Partition, b: Partition, spec: DistanceSpec = UNCD):
    return spec.apply(uncd(a, b), a.n)


# --------------------------------------------------------------------------
# counting


@lru_cache(maxsize=None)
def bell_number(n: int) -> int:
    """Bell number via the Bell triangle."""
    if n < 0:
        raise ValueError("n must be non-negative")
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for x in row:
            nxt.append(nxt[-1] + x)
        row = nxt
    return row[0]


def count_partitions_into_k(n: int, k: int) -> int:
    """Number of partitions of n elements into exactly k clusters,
    by the inclusion-exclusion sum (1/k!) sum_j (-1)^(k-j) C(k,j) j^n."""
    if k < 1 or k > n:
        raise ValueError(f"need 1 <= k <= n, got n={n}, k={k}")
    s = sum((-1) ** (k - j) * comb(k, j) * j**n for j in range(1, k + 1))
    q, r = divmod(s, factorial(k))
    assert r == 0
    return q


# --------------------------------------------------------------------------
# reducts, extensions, relabelling


def reduct(g: Partition) -> Partition:
    """Drop element n (and its cluster, if it was a singleton)."""
    if g.n < 2:
        raise PartitionError("no reduct of singleton ground set")
    # removing the last position keeps the string restricted-growth
    return Partition(g.rgs[:-1])


def simple_extension(g: Partition) -> Partition:
    return Partition(g.rgs + (g.k,))


def complex_extension(g: Partition, label: int) -> Partition:
    if not 0 <= label < g.k:
        raise PartitionError(f"no cluster {label} in {g}")
    return Partition(g.rgs + (label,))


def extensions(g: Partition) -> list[Partition]:
    """Simple extension first, then one complex extension per cluster."""
    return [simple_extension(g)] + [complex_extension(g, c) for c in range(g.k)]


def relabel(g: Partition) -> Partition:
    """Rename element i to i+1 and element n to 1."""
    n = g.n
    labels = [None] * n
    for i, label in enumerate(g.rgs):
        labels[(i + 1) % n] = label
    return canonicalize(labels)


def extension_uncd(
    base_uncd: int, s1: Iterable[int] = (), s2: Iterable[int] = ()
) -> int:
    """unCD between two extensions given the unCD of their reducts.

    ``s1``/``s2`` are the clusters of the reducts that receive the new
    element; an empty cluster stands for the simple extension.
    """
    s1, s2 = set(s1), set(s2)
    return base_uncd + len(s1 ^ s2)


def receiving_cluster(g: Partition) -> tuple[int, ...]:
    """Elements of {1..n-1} sharing a cluster with element n (empty for a simple extension)."""
    return tuple(e for e in g.cluster_of(g.n) if e != g.n)


# --------------------------------------------------------------------------
# co-membership embedding


def pair_index(i: int, j: int) -> int:
    """Zero-based coordinate of pair (i, j), 1 <= i < j.

    1-based this is (j-1)(j-2)/2 + i; here shifted down by one.
    """
    if not 1 <= i < j:
        raise ValueError(f"need 1 <= i < j, got ({i}, {j})")
    return (j - 1) * (j - 2) // 2 + (i - 1)


def pair_coordinates(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Zero-based element indices (a, b), a < b, in coordinate order."""
    a, b = [], []
    for j in range(1, n):
        for i in range(j):
            a.append(i)
            b.append(j)
    return np.asarray(a, dtype=np.intp), np.asarray(b, dtype=np.intp)


@dataclass(frozen=True)
class CoMembershipVector:
    bits: tuple[int, ...]
    n: int

    def __post_init__(self):
        if len(self.bits) != comb(self.n, 2):
            raise PartitionError("vector length must be n(n-1)/2")

    def hamming(self, other: "CoMembershipVector") -> int:
        if self.n != other.n:
            raise PartitionError("ground-set size mismatch")
        return sum(x != y for x, y in zip(self.bits, other.bits))

    def to_partition(self) -> Partition:
        return decode(self)


def embed(p: Partition) -> CoMembershipVector:
    a, b = pair_coordinates(p.n)
    rgs = np.asarray(p.rgs)
    bits = (rgs[a] == rgs[b]).astype(int)
    return CoMembershipVector(tuple(int(x) for x in bits), p.n)


def embed_matrix(rgs: np.ndarray) -> np.ndarray:
    """Embed many partitions at once: ``rgs`` is (m, n), result (m, n(n-1)/2) uint8."""
    rgs = np.asarray(rgs)
    a, b = pair_coordinates(rgs.shape[1])
    return (rgs[:, a] == rgs[:, b]).astype(np.uint8)


def decode(v: CoMembershipVector) -> Partition:
    """Inverse of :func:`embed`; rejects vectors that are not transitive."""
    n = v.n
    labels = list(range(n))
    for j in range(1, n):
        for i in range(j):
            if v.bits[pair_index(i + 1, j + 1)]:
                labels[j] = labels[i]
                break
    p = canonicalize(labels)
    if embed(p).bits != tuple(v.bits):
        raise PartitionError("co-membership vector is not transitive")
    return p


def uncd_matrix(left: np.ndarray, right: Optional[np.ndarray] = None) -> np.ndarray:
    """unCD between rows of two embedding matrices as Hamming distances.

    For 0/1 rows, |x - y|_1 = |x|^2 + |y|^2 - 2 x.y, which is also the squared
    Euclidean distance.
    """
    left = np.asarray(left)
    right = left if right is None else np.asarray(right)
    if left.shape[1] != right.shape[1]:
        raise PartitionError("ground-set size mismatch")
    lf = left.astype(np.float32)
    rf = lf if right is left else right.astype(np.float32)
    # float32 products are exact for these small integer counts
    d = lf.sum(1)[:, None] + rf.sum(1)[None, :] - 2.0 * (lf @ rf.T)
    dtype = np.int16 if left.shape[1] < 2**15 else np.int32
    return np.rint(d).astype(dtype)
