"""Seeded Monte-Carlo drivers for the consensus and PAM sampling tables."""

from __future__ import annotations

import configparser
import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Optional, Sequence

import numpy as np

from .metaclustering import DistanceMatrix, pam
from .partition import UNCD, DistanceKind, DistanceSpec, Partition, power, uncd_matrix
from .universe import Constraint, UniverseSpec, sample_indices, sample_size_for, universe

log = logging.getLogger(__name__)

TABLES = ("T1", "T2", "T3", "T4", "T5", "T6")
CANDIDATE_POOLS = ("all", "universe", "sample")


def structure_centre(n: int, pair: tuple[int, int] = (1, 3)) -> Partition:
    """Every element a singleton except the structured pair."""
    p, q = pair
    return Partition.from_clusters([[p, q]] + [[i] for i in range(1, n + 1) if i not in pair])


derive_sample_size = sample_size_for


@dataclass(frozen=True)
class ExperimentSpec:
    table_id: str
    n: int
    fractions: tuple = (Fraction(1),)
    trials: int = 1000
    seed: int = 42
    sample_sizes: Optional[tuple[int, ...]] = None  # overrides fractions when set
    k_max: int = 4
    pam_k: int = 2
    candidate_pool: str = "all"
    distance: Optional[DistanceSpec] = None
    replace: bool = False
    jobs: int = 1

    def __post_init__(self):
        if self.table_id not in TABLES:
            raise ValueError(f"unknown table {self.table_id!r}; expected one of {TABLES}")
        if self.candidate_pool not in CANDIDATE_POOLS:
            raise ValueError(f"candidate_pool must be one of {CANDIDATE_POOLS}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        object.__setattr__(self, "fractions", tuple(Fraction(str(f)) if isinstance(f, float) else Fraction(f) for f in self.fractions))

    @property
    def is_pam(self) -> bool:
        return self.table_id in ("T5", "T6")

    @property
    def universe_spec(self) -> UniverseSpec:
        t = self.table_id
        if t in ("T1", "T2", "T5"):
            return UniverseSpec(self.n)
        if t == "T3":
            return UniverseSpec(self.n, Constraint.STRUCTURED, pair=(1, 3))
        if t == "T4":
            return UniverseSpec(self.n, Constraint.KMAX, k_max=self.k_max)
        return UniverseSpec(self.n, Constraint.STRUCTURED_PLUS_TOTALSEP, pair=(1, 3))

    @property
    def distance_spec(self) -> DistanceSpec:
        if self.distance is not None:
            return self.distance
        return power(10) if self.table_id == "T2" else UNCD

    @property
    def force_include(self) -> bool:
        return self.is_pam

    def sizes(self) -> list[tuple[Fraction, int]]:
        m = len(universe(self.universe_spec))
        if self.sample_sizes is not None:
            return [(Fraction(s, m), int(s)) for s in self.sample_sizes]
        return [(f, derive_sample_size(f, m, self.force_include)) for f in self.fractions]

    def describe(self) -> str:
        return (
            f"table={self.table_id} n={self.n} universe={self.universe_spec} "
            f"distance={self.distance_spec} pool={self.candidate_pool} trials={self.trials} "
            f"seed={self.seed} replace={self.replace}"
            + (f" pam_k={self.pam_k}" if self.is_pam else "")
        )


@dataclass
class ExperimentRow:
    table_id: str
    n: int
    universe_size: int
    sample_size: int
    fraction: Fraction
    pct_total_separation: float
    pct_structure_centre: Optional[float] = None
    pct_total_separation_unique: Optional[float] = None
    seed: int = 0
    trials: int = 0
    count_total_separation: int = 0
    count_structure_centre: Optional[int] = None

    @property
    def fraction_pct(self) -> Fraction:
        return self.fraction * 100


# --------------------------------------------------------------------------
# row-level machinery


def _row_key(table_id: str, n: int, size: int) -> tuple[int, int, int]:
    return (TABLES.index(table_id) + 1, n, size)


def _row_rng(seed: int, key: tuple[int, int, int], trial: int) -> np.random.Generator:
    """One independent PCG64 stream per (seed, table, n, size, trial)."""
    ss = np.random.SeedSequence([seed & (2**64 - 1), *key, trial])
    return np.random.Generator(np.random.PCG64(ss))


@lru_cache(maxsize=16)
def _consensus_tables(uspec: UniverseSpec, pool: str, dist: DistanceSpec):
    """Distance block candidates x universe, plus the indices of interest."""
    u = universe(uspec)
    n = uspec.n
    cands = universe(UniverseSpec(n)) if pool == "all" else u
    raw = uncd_matrix(cands.embedding, u.embedding)
    if dist.kind is DistanceKind.POWER and dist.exponent > 1:
        d = raw.astype(np.int64) ** dist.exponent
    else:
        # CD is a positive rescaling of unCD: same argmin sets
        d = raw.astype(np.int64)
    ts = Partition.total_separation(n)
    ts_idx = cands.index.get(ts, -1)
    centre_idx = -1
    if uspec.constraint in (Constraint.STRUCTURED, Constraint.STRUCTURED_PLUS_TOTALSEP):
        centre_idx = cands.index.get(structure_centre(n, uspec.pair), -1)
    # position of each universe member among the candidates
    u_in_cands = np.array([cands.index[p] for p in u]) if pool == "all" else np.arange(len(u))
    return d, ts_idx, centre_idx, u_in_cands


def _consensus_chunk(args) -> np.ndarray:
    uspec, pool, dist, size, seed, key, trials, replace_ = args
    d, ts, centre, u_in_c = _consensus_tables(uspec, pool, dist)
    m = d.shape[1]
    counts = np.zeros(3, dtype=np.int64)
    if dist.kind is DistanceKind.POWER and dist.exponent > 1 and int(d.max()) * size >= 2**63:
        raise OverflowError("power distance too large for exact int64 sums")
    for t in trials:
        idx = sample_indices(m, size, _row_rng(seed, key, t), replace=replace_)
        if pool == "sample":
            cand = u_in_c[np.unique(idx)]
            totals = d[np.ix_(cand, idx)].sum(axis=1)
        else:
            cand = None
            totals = d[:, idx].sum(axis=1)
        best = totals.min()
        winners = np.flatnonzero(totals == best)
        if cand is not None:
            winners = cand[winners]
        ts_in = ts >= 0 and ts in winners
        counts[0] += ts_in
        counts[1] += ts_in and len(winners) == 1
        counts[2] += centre >= 0 and centre in winners
    return counts


def _pam_chunk(args) -> np.ndarray:
    uspec, dist, size, seed, key, trials, k, replace_ = args
    u = universe(uspec)
    d_full = _pam_matrix(uspec, dist)
    ts = u.index[Partition.total_separation(uspec.n)]
    counts = np.zeros(3, dtype=np.int64)
    for t in trials:
        # forced member first, the rest in draw order: PAM ties depend on it
        idx = sample_indices(len(u), size, _row_rng(seed, key, t), force=ts, replace=replace_, ordered=False)
        if replace_:
            idx = idx[np.sort(np.unique(idx, return_index=True)[1])]
        dm = DistanceMatrix(tuple(u[i] for i in idx), d_full[np.ix_(idx, idx)], dist)
        res = pam(dm, min(k, len(idx)))
        medoids = [int(idx[c.center]) for c in res.clusters]
        counts[0] += ts in medoids
    return counts


@lru_cache(maxsize=8)
def _pam_matrix(uspec: UniverseSpec, dist: DistanceSpec) -> np.ndarray:
    raw = universe(uspec).uncd_matrix
    if dist.kind is DistanceKind.POWER and dist.exponent > 1:
        return raw.astype(np.int64) ** dist.exponent
    return raw


def _split(trials: int, jobs: int) -> list[range]:
    jobs = max(1, min(jobs, trials))
    step = -(-trials // jobs)
    return [range(s, min(trials, s + step)) for s in range(0, trials, step)]


def _run_chunks(fn, argsets: list, jobs: int) -> np.ndarray:
    if jobs <= 1 or len(argsets) == 1:
        parts = [fn(a) for a in argsets]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            parts = list(ex.map(fn, argsets))
    return np.sum(parts, axis=0)


def _pct(count: int, trials: int) -> float:
    return 100.0 * count / trials


def run_consensus_experiment(spec: ExperimentSpec) -> list[ExperimentRow]:
    """Tables T1-T4: how often total-separation (and, for T3, the structure
    centre) is among the consensus partitions of a uniform sample."""
    if spec.is_pam:
        raise ValueError(f"{spec.table_id} is a PAM table; use run_pam_experiment")
    uspec = spec.universe_spec
    u = universe(uspec)
    dist = spec.distance_spec
    log.info("consensus experiment: %s", spec.describe())
    rows = []
    for frac, size in spec.sizes():
        key = _row_key(spec.table_id, spec.n, size)
        full_row = size == len(u) and not spec.replace
        trials = range(1) if full_row else range(spec.trials)
        if full_row:
            counts = _consensus_chunk((uspec, spec.candidate_pool, dist, size, spec.seed, key, trials, False))
            counts = counts * spec.trials
        else:
            argsets = [
                (uspec, spec.candidate_pool, dist, size, spec.seed, key, chunk, spec.replace)
                for chunk in _split(spec.trials, spec.jobs)
            ]
            counts = _run_chunks(_consensus_chunk, argsets, spec.jobs)
        structured = uspec.constraint is Constraint.STRUCTURED
        rows.append(
            ExperimentRow(
                table_id=spec.table_id,
                n=spec.n,
                universe_size=len(u),
                sample_size=size,
                fraction=frac,
                pct_total_separation=_pct(counts[0], spec.trials),
                pct_structure_centre=_pct(counts[2], spec.trials) if structured else None,
                pct_total_separation_unique=_pct(counts[1], spec.trials),
                seed=spec.seed,
                trials=spec.trials,
                count_total_separation=int(counts[0]),
                count_structure_centre=int(counts[2]) if structured else None,
            )
        )
    return rows


def run_pam_experiment(spec: ExperimentSpec) -> list[ExperimentRow]:
    """Tables T5-T6: how often total-separation (always in the sample) is
    one of the PAM medoids."""
    if not spec.is_pam:
        raise ValueError(f"{spec.table_id} is a consensus table; use run_consensus_experiment")
    uspec = spec.universe_spec
    u = universe(uspec)
    dist = spec.distance_spec
    log.info("pam experiment: %s", spec.describe())
    rows = []
    for frac, size in spec.sizes():
        key = _row_key(spec.table_id, spec.n, size)
        argsets = [
            (uspec, dist, size, spec.seed, key, chunk, spec.pam_k, spec.replace)
            for chunk in _split(spec.trials, spec.jobs)
        ]
        counts = _run_chunks(_pam_chunk, argsets, spec.jobs)
        rows.append(
            ExperimentRow(
                table_id=spec.table_id,
                n=spec.n,
                universe_size=len(u),
                sample_size=size,
                fraction=frac,
                pct_total_separation=_pct(counts[0], spec.trials),
                seed=spec.seed,
                trials=spec.trials,
                count_total_separation=int(counts[0]),
            )
        )
    return rows


def run_experiment(spec: ExperimentSpec) -> list[ExperimentRow]:
    return run_pam_experiment(spec) if spec.is_pam else run_consensus_experiment(spec)


# --------------------------------------------------------------------------
# the published tables: (n, percentage of the universe, printed sample size,
# printed result(s) in percent)

PUBLISHED_TABLES: dict[str, list[tuple]] = {
    "T1": [
        (4, "100", 15, 100.0), (4, "50", 8, 88.2),
        (5, "100", 52, 100.0), (5, "50", 26, 100.0), (5, "40", 21, 97.2), (5, "20", 10, 78.9), (5, "10", 5, 23.1),
        (6, "100", 203, 100.0), (6, "50", 102, 100.0), (6, "40", 81, 100.0), (6, "20", 41, 99.9), (6, "10", 20, 96.5),
        (7, "10", 88, 100.0), (7, "5", 44, 99.9), (7, "4", 35, 99.7), (7, "2", 18, 93.7), (7, "1", 9, 49.9),
        (8, "1", 41, 100.0), (8, "0.5", 21, 94.0), (8, "0.4", 17, 89.0), (8, "0.2", 8, 61.0), (8, "0.1", 4, 38.0),
    ],
    "T2": [
        (4, "100", 15, 0.0), (4, "50", 8, 30.2),
        (5, "100", 52, 0.0), (5, "50", 26, 6.5), (5, "40", 21, 4.4), (5, "20", 10, 16.2), (5, "10", 5, 16.4),
        (6, "100", 203, 0.0), (6, "50", 102, 0.7), (6, "40", 81, 3.2), (6, "20", 41, 11.3), (6, "10", 20, 5.5),
        (7, "10", 88, 1.5), (7, "5", 44, 2.3), (7, "4", 35, 2.9), (7, "2", 18, 8.6), (7, "1", 9, 6.8),
    ],
    "T3": [
        (4, "100", 5, (0.0, 100.0)), (4, "50", 2.5, (0.0, 69.2)),
        (5, "100", 15, (0.0, 100.0)), (5, "50", 8, (0.0, 89.7)), (5, "40", 6, (0.0, 74.0)),
        (5, "20", 3, (0.0, 22.8)), (5, "10", 2, (0.0, 53.1)),
        (6, "100", 52, (0.0, 100.0)), (6, "50", 26, (0.0, 100.0)), (6, "40", 21, (0.0, 97.2)),
        (6, "20", 10, (0.0, 77.3)), (6, "10", 5, (0.0, 23.5)),
        (7, "20", 41, (0.0, 99.9)), (7, "10", 20, (0.0, 95.8)), (7, "8", 16, (0.0, 90.4)),
        (7, "4", 8, (0.0, 70.2)), (7, "2", 4, (0.0, 47.6)),
    ],
    "T4": [
        (6, "100", 187, 100.0), (6, "50", 94, 100.0), (6, "40", 75, 100.0), (6, "20", 37, 99.6), (6, "10", 19, 81.5),
        (7, "20", 143, 100.0), (7, "10", 72, 100.0), (7, "8", 57, 99.8), (7, "4", 29, 95.5), (7, "2", 14, 76.6),
    ],
    "T5": [
        (4, "100", 15, 100.0), (4, "50", 8, 64.9),
        (5, "100", 52, 100.0), (5, "50", 27, 99.6), (5, "40", 21, 97.8), (5, "20", 11, 83.7), (5, "10", 6, 68.9),
        (6, "100", 203, 100.0), (6, "50", 102, 100.0), (6, "40", 82, 100.0), (6, "20", 41, 99.9), (6, "10", 21, 98.0),
        (7, "10", 89, 100.0), (7, "5", 45, 100.0), (7, "4", 36, 100.0), (7, "2", 19, 99.6), (7, "1", 10, 96.9),
        (8, "2", 84, 100.0), (8, "1", 42, 100.0), (8, "0.8", 34, 100.0), (8, "0.4", 18, 99.0), (8, "0.2", 9, 99.0),
    ],
    "T6": [
        (4, "100", 6, 0.0), (4, "50", 3, 10.8),
        (5, "100", 16, 0.0), (5, "50", 9, 0.2), (5, "40", 7, 1.4), (5, "20", 4, 10.1), (5, "10", 3, 25.0),
        (6, "100", 53, 0.0), (6, "50", 27, 0.0), (6, "40", 22, 0.0), (6, "20", 11, 1.5), (6, "10", 6, 9.5),
        (7, "20", 42, 0.1), (7, "10", 21, 3.6), (7, "8", 17, 5.1), (7, "4", 9, 19.6), (7, "2", 5, 35.2),
        (8, "8", 71, 6.0), (8, "4", 36, 16.0), (8, "3.2", 29, 22.0), (8, "1.6", 15, 32.0), (8, "0.8", 8, 43.0),
    ],
}


@dataclass(frozen=True)
class PublishedRow:
    table_id: str
    n: int
    fraction: Fraction
    printed_size: float
    pct_total_separation: float
    pct_structure_centre: Optional[float] = None

    @property
    def full(self) -> bool:
        return self.fraction == 1


def published_rows(table_id: Optional[str] = None) -> list[PublishedRow]:
    out = []
    for tid, rows in PUBLISHED_TABLES.items():
        if table_id is not None and tid != table_id:
            continue
        for n, pct, size, val in rows:
            ts, centre = val if isinstance(val, tuple) else (val, None)
            out.append(PublishedRow(tid, n, Fraction(pct) / 100, size, ts, centre))
    return out


def published_specs(table_id: str, trials: int = 1000, seed: int = 42, jobs: int = 1) -> list[ExperimentSpec]:
    """One spec per data-set size, covering every row of a published table."""
    by_n: dict[int, list[Fraction]] = {}
    for r in published_rows(table_id):
        by_n.setdefault(r.n, []).append(r.fraction)
    return [
        ExperimentSpec(table_id, n, tuple(fracs), trials=trials, seed=seed, jobs=jobs)
        for n, fracs in by_n.items()
    ]


def regenerate_tables(
    tables: Iterable[str] = TABLES, trials: int = 1000, seed: int = 42, jobs: int = 1
) -> dict[str, list[ExperimentRow]]:
    out = {}
    for tid in tables:
        rows = []
        for spec in published_specs(tid, trials, seed, jobs):
            rows.extend(run_experiment(spec))
        out[tid] = rows
    return out


# --------------------------------------------------------------------------
# reports

_HEADERS = [
    "data set size",
    "number of all possible clusterings",
    "sample size",
    "percentage of possible clusterings",
    "percentage of total-separation partitions in consensus",
]
_PAM_HEADER = "percentage of total-separation partitions as meta-cluster centre"
_CENTRE_HEADER = "percentage of structure set centre"


def _fmt_num(x) -> str:
    x = float(x)
    s = f"{x:.4f}".rstrip("0").rstrip(".")
    return s if s else "0"


def _table_cells(rows: Sequence[ExperimentRow]) -> tuple[list[str], list[list[str]]]:
    headers = list(_HEADERS)
    if rows[0].table_id in ("T5", "T6"):
        headers[-1] = _PAM_HEADER
    with_centre = any(r.pct_structure_centre is not None for r in rows)
    if with_centre:
        headers.append(_CENTRE_HEADER)
    body = []
    for r in rows:
        line = [
            str(r.n),
            str(r.universe_size),
            str(r.sample_size),
            _fmt_num(r.fraction_pct),
            _fmt_num(round(r.pct_total_separation, 1)),
        ]
        if with_centre:
            line.append("" if r.pct_structure_centre is None else _fmt_num(round(r.pct_structure_centre, 1)))
        body.append(line)
    return headers, body


def _footer(rows: Sequence[ExperimentRow]) -> str:
    tables = sorted({r.table_id for r in rows})
    seeds = sorted({r.seed for r in rows})
    trials = sorted({r.trials for r in rows})
    return f"# table={','.join(tables)} seed={','.join(map(str, seeds))} trials={','.join(map(str, trials))}"


def emit_report(rows: Sequence[ExperimentRow], fmt: str = "csv") -> str:
    if not rows:
        raise ValueError("no rows to report")
    headers, body = _table_cells(rows)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(headers)
        w.writerows(body)
        return buf.getvalue() + _footer(rows) + "\n"
    if fmt in ("markdown", "md"):
        lines = ["| " + " | ".join(headers) + " |", "|" + "---|" * len(headers)]
        lines += ["| " + " | ".join(b) + " |" for b in body]
        return "\n".join(lines) + "\n\n" + _footer(rows).replace("# ", "<!-- ", 1) + " -->\n"
    raise ValueError(f"unknown report format {fmt!r}")


def parse_report(text: str) -> list[list[str]]:
    """Data cells of a CSV or markdown report, header excluded."""
    lines = [l for l in text.splitlines() if l.strip() and not l.startswith(("#", "<!--"))]
    if lines and lines[0].startswith("|"):
        cells = [[c.strip() for c in l.strip().strip("|").split("|")] for l in lines]
        return [c for c in cells[1:] if not set("".join(c)) <= set("-")]
    return list(csv.reader(lines))[1:]


# --------------------------------------------------------------------------
# batch config

def _fractions(text: str) -> tuple[Fraction, ...]:
    out = []
    for part in text.replace(";", ",").split(","):
        part = part.strip()
        if not part:
            continue
        if part.endswith("%"):
            out.append(Fraction(part[:-1].strip()) / 100)
        else:
            out.append(Fraction(part))
    return tuple(out)


def spec_from_mapping(cfg: dict, defaults: Optional[dict] = None) -> ExperimentSpec:
    merged = {**(defaults or {}), **cfg}
    kwargs = {
        "table_id": merged["table"].upper(),
        "n": int(merged["n"]),
        "trials": int(merged.get("trials", 1000)),
        "seed": int(merged.get("seed", 42)),
        "k_max": int(merged.get("k_max", 4)),
        "pam_k": int(merged.get("pam_k", 2)),
        "candidate_pool": merged.get("candidate_pool", "all"),
        "replace": str(merged.get("replace", "false")).lower() in ("1", "true", "yes"),
        "jobs": int(merged.get("jobs", 1)),
    }
    if "fraction" in merged or "fractions" in merged:
        kwargs["fractions"] = _fractions(merged.get("fractions", merged.get("fraction")))
    if "sample_size" in merged or "sample_sizes" in merged:
        raw = merged.get("sample_sizes", merged.get("sample_size"))
        kwargs["sample_sizes"] = tuple(int(x) for x in str(raw).replace(";", ",").split(",") if x.strip())
    if "distance" in merged:
        kwargs["distance"] = DistanceSpec.parse(merged["distance"])
    return ExperimentSpec(**kwargs)


def load_config(text: str) -> list[ExperimentSpec]:
    """Plain ``key = value`` config; each ``[section]`` is one experiment.

    Keys before the first section apply to every experiment.
    """
    parser = configparser.ConfigParser(default_section="defaults", interpolation=None)
    if not text.lstrip().startswith("["):
        text = "[defaults]\n" + text
    parser.read_string(text)
    defaults = dict(parser.defaults())
    sections = parser.sections()
    if not sections:
        return [spec_from_mapping(defaults)]
    return [spec_from_mapping(dict(parser[s])) for s in sections]
