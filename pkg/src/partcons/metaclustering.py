"""Meta-clustering of partitions: PAM over exact distance matrices, Lloyd
k-means over the co-membership embedding, and grouping by common reducts."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Optional, Sequence

import numpy as np

from .partition import (
    UNCD,
    DistanceKind,
    DistanceSpec,
    Partition,
    PartitionError,
    embed_matrix,
    reduct,
    simple_extension,
    uncd_matrix,
)
from .universe import PartitionUniverse, trial_rng


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    """Symmetric matrix of exact distances between ``items``.

    ``entries`` holds integers: unCD or its powers. For CD the entries are
    unCD and ``scale`` (1 / C(n,2)) turns them into the exact value.
    """

    items: tuple[Partition, ...]
    entries: np.ndarray = field(repr=False)
    spec: DistanceSpec = UNCD
    scale: Fraction = Fraction(1)

    @property
    def n_items(self) -> int:
        return len(self.items)

    def value(self, i: int, j: int):
        v = int(self.entries[i, j])
        return v * self.scale if self.spec.kind is DistanceKind.CD else v

    def exact(self, total: int):
        return total * self.scale if self.spec.kind is DistanceKind.CD else total


def _embedding(items: Sequence[Partition]) -> np.ndarray:
    ns = {p.n for p in items}
    if len(ns) != 1:
        raise PartitionError("ground-set size mismatch")
    return embed_matrix(np.array([p.rgs for p in items]).reshape(len(items), ns.pop()))


def build_distance_matrix(items: Sequence[Partition], spec: DistanceSpec = UNCD) -> DistanceMatrix:
    if not items:
        raise ValueError("no items")
    items = tuple(items)
    raw = uncd_matrix(_embedding(items))
    n = items[0].n
    scale = Fraction(1)
    if spec.kind is DistanceKind.POWER and spec.exponent > 1:
        top = comb(n, 2) ** spec.exponent
        if top * len(items) < 2**63:
            entries = raw.astype(np.int64) ** spec.exponent
        else:
            entries = raw.astype(object) ** spec.exponent
    else:
        entries = raw
        if spec.kind is DistanceKind.CD:
            if n < 2:
                raise PartitionError("CD undefined for n<2")
            scale = Fraction(1, comb(n, 2))
    return DistanceMatrix(items, entries, spec, scale)


def universe_distance_matrix(u: PartitionUniverse) -> DistanceMatrix:
    return DistanceMatrix(u.members, u.uncd_matrix, UNCD)


@dataclass
class MetaCluster:
    members: list[int]
    center: int  # medoid, or the member closest to the centroid
    center_distance: float  # distance of ``center`` to the cluster centre
    centroid: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass
class MetaClusteringResult:
    algorithm: str
    k: int
    items: tuple[Partition, ...] = field(repr=False)
    assignment: np.ndarray = field(repr=False)
    clusters: list[MetaCluster] = field(repr=False)
    objective: object
    variance_explained: Optional[float] = None
    history: list = field(default_factory=list, repr=False)
    iterations: int = 0

    @property
    def centers(self) -> list[Partition]:
        return [self.items[c.center] for c in self.clusters]

    def cluster_of(self, p: Partition) -> MetaCluster:
        i = self.items.index(p)
        return self.clusters[int(self.assignment[i])]


# --------------------------------------------------------------------------
# PAM


def _nearest(d: np.ndarray, medoids: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    sub = d[:, list(medoids)]
    return sub.argmin(axis=1), sub.min(axis=1)


def pam_cost(dm: DistanceMatrix, medoids: Sequence[int]):
    _, dist = _nearest(dm.entries, medoids)
    return dm.exact(int(_sum(dist)))


def _sum(x: np.ndarray, axis=None):
    if x.dtype == object:
        return x.sum(axis=axis)
    return x.sum(axis=axis, dtype=np.int64)


def _last_argmax(x: np.ndarray) -> int:
    x = np.asarray(x)
    return len(x) - 1 - int(np.argmax(x[::-1]))


def _build(d: np.ndarray, k: int) -> list[int]:
    """Greedy seeding; ties go to the highest item index, as in R's cluster::pam."""
    medoids = [_last_argmax(-np.asarray(_sum(d, axis=1)))]
    near = d[:, medoids[0]].copy()
    while len(medoids) < k:
        # gain of adding i: sum_j max(near_j - d(j, i), 0)
        gain = np.asarray(_sum(np.maximum(near[:, None] - d, 0), axis=0)).astype(object)
        gain[medoids] = -1
        i = _last_argmax(gain.astype(float) if gain.max() < 2**52 else gain)
        medoids.append(i)
        near = np.minimum(near, d[:, i])
    return medoids


def _swap_costs(d: np.ndarray, medoids: list[int], block: int = 512) -> np.ndarray:
    """costs[a, h] = total cost after replacing medoids[a] with item h."""
    m, k = d.shape[0], len(medoids)
    costs = np.empty((k, m), dtype=object if d.dtype == object else np.int64)
    sub = d[:, medoids]
    big = np.iinfo(np.int64).max // 4 if d.dtype != object else None
    for a in range(k):
        if k > 1:
            others = np.delete(sub, a, axis=1).min(axis=1)
        else:
            others = np.full(m, big, dtype=np.int64) if big is not None else None
        for s in range(0, m, block):
            cols = d[:, s : s + block]
            if others is None:
                costs[a, s : s + block] = _sum(cols, axis=0)
            else:
                costs[a, s : s + block] = _sum(np.minimum(cols, others[:, None]), axis=0)
    return costs


def pam(dm: DistanceMatrix, k: int, seed: int = 0, max_iter: int = 1000) -> MetaClusteringResult:
    """k-medoids: greedy BUILD followed by steepest-descent SWAP.

    Deterministic, with R cluster::pam tie conventions: BUILD ties go to the
    highest item index; among equally good swaps the lowest incoming item
    wins, then the lowest-index medoid; a swap is made only if it strictly
    lowers the cost; items equidistant from several medoids join the
    lowest-index medoid. ``seed`` is accepted for interface symmetry with
    :func:`kmeans` and does not influence the result.
    """
    m = dm.n_items
    if not 1 <= k <= m:
        raise ValueError(f"k must be in 1..{m}")
    d = dm.entries
    medoids = _build(d, k)
    _, dist = _nearest(d, medoids)
    cost = int(_sum(dist))
    history = [cost]
    it = 0
    for it in range(1, max_iter + 1):
        costs = _swap_costs(d, medoids)
        costs[:, medoids] = cost  # swapping in a current medoid is a no-op
        # scan incoming item h first, then medoid slots in item-index order
        slots = np.argsort(medoids)
        flat = int(np.argmin(costs[slots].T.reshape(-1)))
        h, a = divmod(flat, k)
        a = int(slots[a])
        best = int(costs[a, h])
        if best >= cost:
            break
        medoids[a] = h
        cost = best
        history.append(cost)
    order = sorted(medoids)
    assign, dist = _nearest(d, order)
    clusters = [
        MetaCluster(members=[int(i) for i in np.flatnonzero(assign == c)], center=order[c], center_distance=0.0)
        for c in range(k)
    ]
    return MetaClusteringResult(
        algorithm="pam",
        k=k,
        items=dm.items,
        assignment=assign,
        clusters=clusters,
        objective=dm.exact(cost),
        history=[dm.exact(c) for c in history],
        iterations=it,
    )


def swap_deltas(dm: DistanceMatrix, medoids: Sequence[int]) -> np.ndarray:
    """Objective change for every (medoid slot, item) swap; used to audit fixed points."""
    medoids = list(medoids)
    cost = int(_sum(_nearest(dm.entries, medoids)[1]))
    costs = _swap_costs(dm.entries, medoids)
    costs[:, medoids] = cost
    return costs - cost


# --------------------------------------------------------------------------
# k-means


def _sq_dists(x: np.ndarray, c: np.ndarray) -> np.ndarray:
    d = (x * x).sum(1)[:, None] + (c * c).sum(1)[None, :] - 2.0 * x @ c.T
    return np.maximum(d, 0.0)


def _kmeanspp(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    m = x.shape[0]
    centers = [int(rng.integers(m))]
    d2 = _sq_dists(x, x[centers])[:, 0]
    while len(centers) < k:
        total = d2.sum()
        if total <= 0:
            i = int(rng.integers(m))
        else:
            i = int(rng.choice(m, p=d2 / total))
        centers.append(i)
        d2 = np.minimum(d2, _sq_dists(x, x[[i]])[:, 0])
    return x[centers].astype(float)


def kmeans(
    items: Sequence[Partition],
    k: int,
    seed: int = 0,
    max_iter: int = 300,
    embedding: Optional[np.ndarray] = None,
) -> MetaClusteringResult:
    """Lloyd k-means on 0/1 co-membership vectors with k-means++ seeding.

    An emptied cluster is re-seeded at the item farthest from its current
    centroid. Distances reported per cluster are Euclidean, i.e. the square
    root of unCD-like squared distances.
    """
    items = tuple(items)
    m = len(items)
    if not 1 <= k <= m:
        raise ValueError(f"k must be in 1..{m}")
    x = (_embedding(items) if embedding is None else embedding).astype(float)
    rng = trial_rng(seed)
    centroids = _kmeanspp(x, k, rng)
    assign = None
    history = []
    it = 0
    for it in range(1, max_iter + 1):
        d2 = _sq_dists(x, centroids)
        new = d2.argmin(axis=1)
        history.append(float(d2[np.arange(m), new].sum()))
        if assign is not None and np.array_equal(new, assign):
            break
        assign = new
        for c in range(k):
            mask = assign == c
            if mask.any():
                centroids[c] = x[mask].mean(axis=0)
        for c in range(k):
            if not (assign == c).any():
                own = _sq_dists(x, centroids)[np.arange(m), assign]
                # never empty another cluster while repairing this one
                own[np.bincount(assign, minlength=k)[assign] < 2] = -1.0
                far = int(np.argmax(own))
                assign[far] = c
                for cc in range(k):
                    centroids[cc] = x[assign == cc].mean(axis=0)
    d2 = _sq_dists(x, centroids)
    wss = float(d2[np.arange(m), assign].sum())
    grand = x.mean(axis=0)
    tss = float(((x - grand) ** 2).sum())
    clusters = []
    for c in range(k):
        members = np.flatnonzero(assign == c)
        j = members[np.argmin(d2[members, c])]
        clusters.append(
            MetaCluster(
                members=[int(i) for i in members],
                center=int(j),
                center_distance=float(np.sqrt(d2[j, c])),
                centroid=centroids[c].copy(),
            )
        )
    ve = 0.0 if tss == 0 else (tss - wss) / tss
    return MetaClusteringResult(
        algorithm="kmeans",
        k=k,
        items=items,
        assignment=assign,
        clusters=clusters,
        objective=wss,
        variance_explained=max(0.0, ve),
        history=history,
        iterations=it,
    )


# --------------------------------------------------------------------------
# reduct hierarchy


def pth_order_reduct(g: Partition, p: int) -> Partition:
    if p < 1:
        raise ValueError("p must be >= 1")
    if p >= g.n:
        raise PartitionError(f"no {p}-th order reduct of a partition of {g.n} elements")
    return Partition(g.rgs[: g.n - p])


def pth_order_simple_extension(g: Partition, p: int) -> Partition:
    for _ in range(p):
        g = simple_extension(g)
    return g


@dataclass
class ReductGroup:
    key: Partition
    center: Partition
    members: list[Partition]


def group_by_pth_reduct(u: PartitionUniverse | Sequence[Partition], p: int) -> list[ReductGroup]:
    """Group partitions by their p-th order reduct; each group's centre is
    the p-th order simple extension of that reduct."""
    members = list(u)
    n = members[0].n
    if not 1 <= p < n:
        raise ValueError(f"need 1 <= p < n, got p={p}, n={n}")
    groups: dict[Partition, list[Partition]] = {}
    for g in members:
        groups.setdefault(pth_order_reduct(g, p), []).append(g)
    return [
        ReductGroup(key, pth_order_simple_extension(key, p), grp)
        for key, grp in sorted(groups.items())
    ]


def reduct_group_exceptions(u: PartitionUniverse | Sequence[Partition], p: int) -> list[tuple[Partition, Partition]]:
    """Members not strictly unCD-closer to their own group's centre than to
    every other centre, as (member, offending centre) pairs."""
    groups = group_by_pth_reduct(u, p)
    centers = [g.center for g in groups]
    members = [m for g in groups for m in g.members]
    owner = np.array([gi for gi, g in enumerate(groups) for _ in g.members])
    d = uncd_matrix(_embedding(members), _embedding(centers)).astype(np.int64)
    own = d[np.arange(len(members)), owner]
    bad = d <= own[:, None]
    bad[np.arange(len(members)), owner] = False
    return [(members[i], centers[j]) for i, j in np.argwhere(bad)]
