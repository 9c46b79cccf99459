"""Exact consensus search over candidate pools, plus exhaustive checks of the
total-separation results and the closed-form extension sums."""

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
    extensions,
    format_partition,
    reduct,
    relabel,
    simple_extension,
    uncd_matrix,
)
from .universe import Constraint, UniverseSpec, universe


def _same_n(parts: Sequence[Partition]) -> int:
    ns = {p.n for p in parts}
    if len(ns) != 1:
        raise PartitionError("ground-set size mismatch")
    return ns.pop()


def embedding_of(parts: Sequence[Partition]) -> np.ndarray:
    return embed_matrix(np.array([p.rgs for p in parts]).reshape(len(parts), parts[0].n))


def exact_totals(raw: np.ndarray, spec: DistanceSpec, n: int) -> list:
    """Row sums of ``spec`` applied to a raw unCD block, without rounding.

    Returns Python ints (UNCD, POWER) or Fractions (CD).
    """
    raw = np.asarray(raw)
    if spec.kind is DistanceKind.POWER and spec.exponent > 1:
        p = spec.exponent
        top = int(raw.max()) if raw.size else 0
        if top**p * max(raw.shape[1], 1) < 2**63:
            sums = (raw.astype(np.int64) ** p).sum(axis=1)
        else:
            sums = (raw.astype(object) ** p).sum(axis=1)
        return [int(s) for s in sums]
    sums = [int(s) for s in raw.sum(axis=1, dtype=np.int64)]
    if spec.kind is DistanceKind.CD:
        if n < 2:
            raise PartitionError("CD undefined for n<2")
        return [Fraction(s, comb(n, 2)) for s in sums]
    return sums


def total_distance(candidate: Partition, refs: Sequence[Partition], spec: DistanceSpec = UNCD):
    if not refs:
        raise ValueError("empty reference set")
    n = _same_n([candidate, *refs])
    raw = uncd_matrix(embedding_of([candidate]), embedding_of(refs))
    return exact_totals(raw, spec, n)[0]


@dataclass
class ConsensusResult:
    minimizers: list[Partition]
    min_total: object
    n_refs: int
    self_included: bool = False  # the minimizers are themselves references
    per_candidate_totals: Optional[dict[Partition, object]] = field(default=None, repr=False)

    @property
    def unique(self) -> bool:
        return len(self.minimizers) == 1

    @property
    def min_average(self) -> Fraction:
        """Average distance of a minimizer to the references other than itself."""
        others = self.n_refs - self.self_included
        return Fraction(self.min_total) / others if others else Fraction(0)

    def contains(self, p: Partition) -> bool:
        return p in self.minimizers


def argmin_indices(totals: Sequence) -> list[int]:
    best = min(totals)
    return [i for i, t in enumerate(totals) if t == best]


def consensus(
    candidates: Sequence[Partition],
    refs: Sequence[Partition],
    spec: DistanceSpec = UNCD,
    keep_totals: bool = False,
) -> ConsensusResult:
    """All candidates minimising the total distance to ``refs``."""
    if not candidates or not refs:
        raise ValueError("empty input")
    n = _same_n([*candidates, *refs])
    raw = uncd_matrix(embedding_of(candidates), embedding_of(refs))
    totals = exact_totals(raw, spec, n)
    best = argmin_indices(totals)
    winner = candidates[best[0]]
    result = ConsensusResult(
        minimizers=sorted({candidates[i] for i in best}),
        min_total=totals[best[0]],
        n_refs=len(refs),
        self_included=winner in set(refs),
    )
    if keep_totals:
        result.per_candidate_totals = dict(zip(candidates, totals))
    return result


def average_distances(parts: Sequence[Partition], spec: DistanceSpec = UNCD) -> dict[Partition, Fraction]:
    """Average distance of each partition to the *other* members of ``parts``."""
    res = consensus(parts, parts, spec, keep_totals=True)
    m = len(parts) - 1
    return {p: Fraction(t) / m for p, t in res.per_candidate_totals.items()}


# --------------------------------------------------------------------------
# theorem checks


@dataclass
class Verdict:
    check: str
    n: int
    holds: bool
    detail: str = ""
    params: dict = field(default_factory=dict)
    unique: Optional[bool] = None
    minimizers: list[Partition] = field(default_factory=list)

    def line(self) -> str:
        params = " ".join(f"{k}={v}" for k, v in self.params.items())
        parts = ["PASS" if self.holds else "FAIL", self.check, f"n={self.n}"]
        if params:
            parts.append(params)
        if self.detail:
            parts.append(self.detail)
        return " ".join(parts)


def _full(n: int):
    return universe(UniverseSpec(n))


def verify_theorem1(n: int) -> Verdict:
    """Brute-force consensus of the full universe against itself under unCD."""
    if n < 2:
        raise ValueError("need n >= 2")
    u = _full(n)
    totals = exact_totals(u.uncd_matrix, UNCD, n)
    best = argmin_indices(totals)
    ts = Partition.total_separation(n)
    mins = sorted(u[i] for i in best)
    unique = len(mins) == 1
    # with two elements both partitions tie; from three on the minimum is unique
    holds = ts in mins and (unique or n < 3)
    avg = Fraction(totals[best[0]], len(u) - 1)
    detail = f"universe={len(u)} min_total={totals[best[0]]} avg={avg} unique={unique}"
    if not holds:
        detail += " minimizers=" + ";".join(map(format_partition, mins))
    return Verdict("theorem1", n, holds, detail, unique=unique, minimizers=mins)


def verify_theorem2(n: int, k_max: int) -> Verdict:
    """Total-separation against partitions with at most ``k_max`` clusters.

    The references are the k_max-limited universe. Candidates are that
    universe plus total-separation (which lies outside it once n > k_max);
    the verdict holds iff total-separation attains the minimum. The best
    partition *inside* the limited universe is reported alongside.
    """
    if k_max < 2:
        raise ValueError("k_max must be > 1")
    u = universe(UniverseSpec(n, Constraint.KMAX, k_max=k_max))
    ts = Partition.total_separation(n)
    ts_totals = exact_totals(uncd_matrix(embedding_of([ts]), u.embedding), UNCD, n)[0]
    totals = exact_totals(u.uncd_matrix, UNCD, n)
    inner = argmin_indices(totals)
    inner_best = totals[inner[0]]
    holds = ts_totals <= inner_best
    if ts_totals < inner_best:
        mins = [ts]
    elif ts_totals == inner_best:
        mins = sorted({ts, *(u[i] for i in inner)})
    else:
        mins = sorted(u[i] for i in inner)
    unique = len(mins) == 1
    detail = (
        f"universe={len(u)} ts_total={ts_totals} best_in_universe={inner_best} "
        f"inner_minimizers={len(inner)} first={format_partition(u[inner[0]]).replace(' ', '')} unique={unique}"
    )
    return Verdict(
        "theorem2", n, holds, detail, params={"k_max": k_max}, unique=unique, minimizers=mins
    )


# --------------------------------------------------------------------------
# closed-form extension sums


@dataclass
class LemmaReport:
    n: int
    k_max: Optional[int] = None
    checked: dict[str, int] = field(default_factory=dict)
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def lines(self) -> list[str]:
        params = {} if self.k_max is None else {"k_max": self.k_max}
        out = []
        for eq, count in self.checked.items():
            bad = [v for v in self.violations if v.startswith(eq + ":")]
            detail = f"cases={count} violations={len(bad)}"
            out.append(Verdict(f"lemma-{eq}", self.n, not bad, detail, params).line())
        return out


class _ExtensionTables:
    """Distances between all (n+1)-element partitions grouped by reduct."""

    def __init__(self, n: int):
        self.n = n
        self.lower = _full(n)
        self.upper = _full(n + 1)
        up = self.upper.rgs_array
        m = len(self.upper)
        # position of each reduct in the lower universe
        lower_index = self.lower.index
        self.reduct_of = np.array([lower_index[Partition(tuple(r[:-1]))] for r in up])
        self.k_lower = np.array([p.k for p in self.lower])
        last = up[:, -1].astype(np.int64)
        self.is_simple = last == self.k_lower[self.reduct_of]
        # size of the reduct cluster that received element n+1 (0 for simple)
        recv = (up[:, :-1] == up[:, -1:]).sum(axis=1)
        self.receiving = np.where(self.is_simple, 0, recv)
        self.d_upper = self.upper.uncd_matrix.astype(np.int64)
        self.d_lower = self.lower.uncd_matrix.astype(np.int64)
        self.group = np.zeros((m, len(self.lower)), dtype=np.int64)
        self.group[np.arange(m), self.reduct_of] = 1


def check_extension_lemmas(n: int) -> LemmaReport:
    """Compare directly summed extension distances with their closed forms.

    ``n`` is the size of the reducts; extensions live on n+1 elements.
    """
    if n < 1:
        raise ValueError("need n >= 1")
    t = _ExtensionTables(n)
    rep = LemmaReport(n)
    # sums[x, g'] = sum of unCD from x to every extension of g'
    sums = t.d_upper @ t.group
    own = t.reduct_of
    k_own = t.k_lower[own]

    simple = np.flatnonzero(t.is_simple)
    direct_simple = sums[simple, own[simple]]
    _record(rep, "simple-own", direct_simple, np.full_like(direct_simple, n), simple, t)

    cplx = np.flatnonzero(~t.is_simple)
    direct_complex = sums[cplx, own[cplx]]
    closed_complex = (k_own[cplx] - 1) * t.receiving[cplx] + n
    _record(rep, "complex-own", direct_complex, closed_complex, cplx, t)
    _record(rep, "complex-own-bound", direct_complex >= n, np.ones_like(direct_complex, dtype=bool), cplx, t)

    # foreign reducts g' (all of them, including g' = own reduct)
    base = t.d_lower[own]  # base[x, g'] = unCD(reduct(x), g')
    kp = t.k_lower[None, :]
    closed_simple_other = n + (kp + 1) * base[simple]
    _record_matrix(rep, "simple-other", sums[simple], closed_simple_other, simple, t)
    closed_complex_other = (kp + 1) * base[cplx] + (kp - 1) * t.receiving[cplx, None] + n
    _record_matrix(rep, "complex-other", sums[cplx], closed_complex_other, cplx, t)
    lower_complex_other = (kp + 1) * base[cplx] + n
    _record_matrix(rep, "complex-other-bound", sums[cplx] >= lower_complex_other, np.ones_like(lower_complex_other, dtype=bool), cplx, t)
    return rep


def check_kmax_lemmas(n: int, k_max: int) -> LemmaReport:
    """Same sums with the k_max limit applied at n+1 elements.

    A reduct with exactly k_max clusters loses its simple extension from the
    reference set; reducts with fewer clusters keep all extensions.
    """
    if k_max < 2:
        raise ValueError("need k_max > 1")
    t = _ExtensionTables(n)
    rep = LemmaReport(n, k_max)
    k_up = t.k_lower[t.reduct_of] + t.is_simple.astype(np.int64)
    allowed_upper = k_up <= k_max
    allowed_lower = t.k_lower <= k_max
    group = t.group * allowed_upper[:, None]
    sums = t.d_upper @ group
    own = t.reduct_of
    k_own = t.k_lower[own]
    at_limit = t.k_lower == k_max

    # same-reduct sums for partitions whose reduct sits below the limit: unchanged
    simple = np.flatnonzero(t.is_simple & allowed_lower[own] & ~at_limit[own])
    _record(rep, "simple-own", sums[simple, own[simple]], np.full(len(simple), n), simple, t)
    cplx_below = np.flatnonzero(~t.is_simple & allowed_lower[own] & ~at_limit[own])
    _record(
        rep,
        "complex-own",
        sums[cplx_below, own[cplx_below]],
        (k_own[cplx_below] - 1) * t.receiving[cplx_below] + n,
        cplx_below,
        t,
    )
    cplx_at = np.flatnonzero(~t.is_simple & at_limit[own])
    direct_at_limit = sums[cplx_at, own[cplx_at]]
    closed_at_limit = (k_own[cplx_at] - 2) * t.receiving[cplx_at] + n
    _record(rep, "complex-own-at-limit", direct_at_limit, closed_at_limit, cplx_at, t)
    _record(rep, "complex-own-at-limit-bound", direct_at_limit >= n, np.ones_like(direct_at_limit, dtype=bool), cplx_at, t)

    base = t.d_lower[own]
    cols_below = np.flatnonzero(allowed_lower & ~at_limit)
    cols_at = np.flatnonzero(at_limit)
    simple_all = np.flatnonzero(t.is_simple & allowed_lower[own])
    cplx_all = np.flatnonzero(~t.is_simple & allowed_lower[own])
    kp_b = t.k_lower[None, cols_below]
    kp_a = t.k_lower[None, cols_at]
    if len(cols_below):
        _record_matrix(
            rep, "simple-other", sums[np.ix_(simple_all, cols_below)],
            n + (kp_b + 1) * base[np.ix_(simple_all, cols_below)], simple_all, t,
        )
        _record_matrix(
            rep, "complex-other", sums[np.ix_(cplx_all, cols_below)],
            (kp_b + 1) * base[np.ix_(cplx_all, cols_below)]
            + (kp_b - 1) * t.receiving[cplx_all, None] + n,
            cplx_all, t,
        )
    if len(cols_at):
        _record_matrix(
            rep, "simple-other-at-limit", sums[np.ix_(simple_all, cols_at)],
            n + kp_a * base[np.ix_(simple_all, cols_at)], simple_all, t,
        )
        d_at_limit = sums[np.ix_(cplx_all, cols_at)]
        base_at_limit = base[np.ix_(cplx_all, cols_at)]
        _record_matrix(
            rep, "complex-other-at-limit", d_at_limit, kp_a * base_at_limit + (kp_a - 2) * t.receiving[cplx_all, None] + n, cplx_all, t
        )
        _record_matrix(rep, "complex-other-at-limit-bound", d_at_limit >= kp_a * base_at_limit + n, np.ones_like(d_at_limit, dtype=bool), cplx_all, t)
    return rep


def _record(rep: LemmaReport, eq: str, direct, closed, rows, t: _ExtensionTables):
    direct, closed = np.asarray(direct), np.asarray(closed)
    rep.checked[eq] = rep.checked.get(eq, 0) + int(direct.size)
    for i in np.flatnonzero(direct != closed):
        p = t.upper[int(rows[i])]
        rep.violations.append(f"{eq}: {format_partition(p)} direct={direct[i]} closed={closed[i]}")


def _record_matrix(rep: LemmaReport, eq: str, direct, closed, rows, t: _ExtensionTables):
    direct, closed = np.asarray(direct), np.asarray(closed)
    rep.checked[eq] = rep.checked.get(eq, 0) + int(direct.size)
    bad = np.argwhere(direct != closed)
    for i, j in bad[:50]:
        p = t.upper[int(rows[i])]
        rep.violations.append(
            f"{eq}: {format_partition(p)} vs extensions of reduct #{j} "
            f"direct={direct[i, j]} closed={closed[i, j]}"
        )
    if len(bad) > 50:
        rep.violations.append(f"{eq}: ... {len(bad) - 50} more")


# --------------------------------------------------------------------------
# candidate narrowing by relabelling


def narrow_candidates(n: int) -> list[list[Partition]]:
    """Trace C_0, C_1, ... of the relabel / reduct / simple-extension narrowing.

    C_0 holds the simple extensions of every partition of n-1 elements; each
    next set is simple_extension(reduct(relabel(C))), until one remains.
    """
    if n < 3:
        raise ValueError("narrowing needs n >= 3")
    current = sorted({simple_extension(g) for g in _full(n - 1)})
    trace = [current]
    for _ in range(n):
        if len(current) == 1:
            break
        current = sorted({simple_extension(reduct(relabel(c))) for c in current})
        trace.append(current)
    return trace


def extension_sums(g: Partition, refs_of: Partition) -> dict[Partition, int]:
    """Total unCD from each extension of ``g`` to all extensions of ``refs_of``."""
    refs = extensions(refs_of)
    return {e: total_distance(e, refs) for e in extensions(g)}
