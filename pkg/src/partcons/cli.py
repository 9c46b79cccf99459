"""Command-line front end. Each subcommand parses flags, calls the library and prints."""

from __future__ import annotations

import argparse
import logging
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

import importlib

from . import experiments as exp
from . import metaclustering as meta
from .partition import (
    UNCD,
    DistanceKind,
    DistanceSpec,
    Partition,
    PartitionError,
    cd,
    distance,
    format_partition,
    format_rgs,
    parse_partition,
    uncd,
)
from .universe import SampleSpec, UniverseSpec, parse_export, sample, sample_size_for, universe

# the package re-exports a function named ``consensus``; fetch the module itself
cons = importlib.import_module(".consensus", __package__)

log = logging.getLogger("partcons")

DEFAULT_SEED = 42


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _ints(text: str) -> list[int]:
    """``6``, ``2-8`` or ``4,5,6``."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError(f"no integers in {text!r}")
    return out


def _fraction(text: str) -> Fraction:
    text = text.strip()
    if text.endswith("%"):
        return Fraction(text[:-1]) / 100
    return Fraction(text)


def _distance(text: str) -> DistanceSpec:
    try:
        return DistanceSpec.parse(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def _fmt(p: Partition, style: str) -> str:
    return format_rgs(p) if style == "rgs" else format_partition(p)


def _write(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
        log.info("wrote %s", out)
    else:
        sys.stdout.write(text)


def _read_partitions(path: str) -> list[Partition]:
    return parse_export(Path(path).read_text(encoding="utf-8"))


def _universe_spec(args) -> UniverseSpec:
    return UniverseSpec.parse(args.n, args.universe)


# --------------------------------------------------------------------------
# subcommands


def cmd_enumerate(args) -> int:
    u = universe(_universe_spec(args))
    if args.count:
        _write(f"{len(u)}\n", args.out)
        return 0
    if args.format == "rgs":
        text = f"# n={u.n} constraint={u.spec} count={len(u)}\n" + "".join(format_rgs(p) + "\n" for p in u)
    else:
        text = u.export()
    _write(text, args.out)
    return 0


def cmd_distance(args) -> int:
    a, b = parse_partition(args.a), parse_partition(args.b)
    lines = [f"unCD {uncd(a, b)}"]
    if a.n >= 2:
        lines.append(f"CD {cd(a, b)}")
    if args.distance is not None and args.distance.kind is DistanceKind.POWER:
        lines.append(f"{args.distance} {distance(a, b, args.distance)}")
    print("\n".join(lines))
    return 0


def cmd_consensus(args) -> int:
    if args.refs:
        refs = _read_partitions(args.refs)
    else:
        if args.n is None:
            raise UsageError("consensus: give --n with --universe, or --refs")
        refs = list(universe(_universe_spec(args)))
    if args.candidates == "refs" or (args.candidates is None and args.refs):
        candidates = refs
    else:
        n = refs[0].n
        candidates = list(universe(UniverseSpec.parse(n, args.universe)))
    res = cons.consensus(candidates, refs, args.distance)
    print(f"candidates {len(candidates)} references {res.n_refs} distance {args.distance}")
    for p in res.minimizers:
        print(f"consensus {_fmt(p, args.format)}")
    print(f"unique {'yes' if res.unique else 'no'}")
    print(f"min_total {res.min_total}")
    print(f"avg {_num(res.min_average)}")
    return 0


def _num(x) -> str:
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{float(x):g} ({x})"
    return str(x)


def cmd_verify(args) -> int:
    chosen = [args.theorem1, args.theorem2, args.lemmas, args.kmax_lemmas, args.reduct_groups]
    if not any(chosen):
        raise UsageError("verify: choose at least one of --theorem1 --theorem2 --lemmas --kmax-lemmas --reduct-groups")
    ns = args.n or ([2, 3, 4, 5, 6])
    kmaxes = args.k_max or [2, 3, 4]
    ok = True
    lines = []
    for n in ns:
        if args.theorem1:
            v = cons.verify_theorem1(n)
            ok &= v.holds
            lines.append(v.line())
        if args.theorem2:
            for k in kmaxes:
                v = cons.verify_theorem2(n, k)
                ok &= v.holds
                lines.append(v.line())
        if args.lemmas:
            rep = cons.check_extension_lemmas(n)
            ok &= rep.ok
            lines.extend(rep.lines())
        if args.kmax_lemmas:
            for k in kmaxes:
                rep = cons.check_kmax_lemmas(n, k)
                ok &= rep.ok
                lines.extend(rep.lines())
        if args.reduct_groups:
            for p in range(1, min(args.max_order, n - 1) + 1):
                bad = meta.reduct_group_exceptions(universe(UniverseSpec(n)), p)
                ok &= not bad
                lines.append(f"{'PASS' if not bad else 'FAIL'} reduct-groups n={n} p={p} exceptions={len(bad)}")
    print("\n".join(lines))
    return 0 if ok else 2


def cmd_narrow(args) -> int:
    for i, c in enumerate(cons.narrow_candidates(args.n)):
        print(f"C_{i} ({len(c)}): " + "  ".join(_fmt(p, args.format) for p in c))
    return 0


def cmd_metacluster(args) -> int:
    u = universe(_universe_spec(args))
    force = Partition.total_separation(args.n) if args.force_total_separation else None
    if args.sample_size or args.fraction:
        size = args.sample_size or sample_size_for(args.fraction, len(u), force is not None)
        items = sample(SampleSpec(u, size, args.seed, force_include=force))
    else:
        items = list(u)
    seeds = args.seeds or [args.seed]
    blocks = []
    for s in seeds:
        if args.algorithm == "pam":
            res = meta.pam(meta.build_distance_matrix(items, args.distance), args.k)
        else:
            res = meta.kmeans(items, args.k, seed=s)
        blocks.append(_meta_report(res, s, args.format))
        if args.algorithm == "pam":
            break  # deterministic: one run suffices
    print("\n".join(blocks), end="")
    return 0


def _meta_report(res: meta.MetaClusteringResult, seed: int, style: str) -> str:
    head = f"algorithm={res.algorithm} k={res.k} items={len(res.items)} objective={_num(res.objective)}"
    if res.algorithm == "kmeans":
        head += f" seed={seed} variance_explained={res.variance_explained:.4f}"
    lines = [head]
    for i, c in enumerate(res.clusters):
        lines.append(
            f"cluster {i + 1}: size={c.size} center={_fmt(res.items[c.center], style)} "
            f"min_distance={c.center_distance:g}"
        )
    return "\n".join(lines) + "\n"


def cmd_experiment(args) -> int:
    if args.published:
        tables = args.tables or list(exp.TABLES)
        res = exp.regenerate_tables(tables, trials=args.trials, seed=args.seed, jobs=args.jobs)
        text = "".join(exp.emit_report(rows, args.format) + "\n" for rows in res.values())
        _write(text, args.out)
        return 0
    if args.config:
        specs = exp.load_config(Path(args.config).read_text(encoding="utf-8"))
    else:
        if not args.table or args.n is None:
            raise UsageError("experiment: give --table and --n, --config, or --published")
        kwargs = dict(
            trials=args.trials,
            seed=args.seed,
            k_max=args.k_max,
            candidate_pool=args.candidate_pool,
            replace=args.replace,
            jobs=args.jobs,
            distance=args.distance,
        )
        if args.sample_size:
            kwargs["sample_sizes"] = tuple(args.sample_size)
        elif args.fraction:
            kwargs["fractions"] = tuple(args.fraction)
        specs = [exp.ExperimentSpec(args.table.upper(), args.n, **kwargs)]
    out = []
    for spec in specs:
        log.info("experiment: %s", spec.describe())
        out.append(exp.emit_report(exp.run_experiment(spec), args.format))
    _write("\n".join(out), args.out)
    return 0


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="partcons", description=__doc__)
    p.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def universe_flags(sp, required=True):
        sp.add_argument("--n", type=int, required=required, help="ground-set size")
        sp.add_argument(
            "--universe", default="full",
            help="full | kmax(K) | structured(P,Q) | structured+ts(P,Q)  [default: full]",
        )

    def fmt_flag(sp):
        sp.add_argument("--format", choices=["brace", "rgs"], default="brace", help="partition text form")

    sp = sub.add_parser("enumerate", help="list a partition universe")
    universe_flags(sp)
    fmt_flag(sp)
    sp.add_argument("--count", action="store_true", help="print only the number of members")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_enumerate)

    sp = sub.add_parser("distance", help="unCD and CD between two partitions")
    sp.add_argument("--a", required=True)
    sp.add_argument("--b", required=True)
    sp.add_argument("--distance", type=_distance, help="also print e.g. power:10")
    sp.set_defaults(func=cmd_distance)

    sp = sub.add_parser("consensus", help="median partition(s) by exhaustive search")
    universe_flags(sp, required=False)
    fmt_flag(sp)
    sp.add_argument("--refs", help="file with one partition per line (default: the universe itself)")
    sp.add_argument("--candidates", choices=["universe", "refs"], help="candidate pool")
    sp.add_argument("--distance", type=_distance, default=UNCD)
    sp.set_defaults(func=cmd_consensus)

    sp = sub.add_parser("verify", help="exhaustive checks; exit 2 on any FAIL")
    sp.add_argument("--theorem1", action="store_true")
    sp.add_argument("--theorem2", action="store_true")
    sp.add_argument("--lemmas", action="store_true")
    sp.add_argument("--kmax-lemmas", action="store_true")
    sp.add_argument("--reduct-groups", action="store_true")
    sp.add_argument("--max-order", type=int, default=2, help="highest reduct order for --reduct-groups")
    sp.add_argument("--n", type=_ints, help="e.g. 6, 2-8 or 4,5  [default: 2-6]")
    sp.add_argument("--k-max", type=_ints, help="[default: 2,3,4]")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("narrow", help="trace the candidate narrowing towards total-separation")
    sp.add_argument("--n", type=int, required=True)
    fmt_flag(sp)
    sp.set_defaults(func=cmd_narrow)

    sp = sub.add_parser("metacluster", help="PAM or k-means over partitions")
    universe_flags(sp)
    fmt_flag(sp)
    sp.add_argument("--algorithm", choices=["pam", "kmeans"], default="pam")
    sp.add_argument("--k", type=int, default=2)
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sp.add_argument("--seeds", type=_ints, help="several k-means seeds, e.g. 0-19")
    sp.add_argument("--sample-size", type=int)
    sp.add_argument("--fraction", type=_fraction)
    sp.add_argument("--force-total-separation", action="store_true")
    sp.add_argument("--distance", type=_distance, default=UNCD, help="PAM dissimilarity")
    sp.set_defaults(func=cmd_metacluster)

    sp = sub.add_parser("experiment", help="Monte-Carlo table regeneration")
    sp.add_argument("--table", choices=list(exp.TABLES) + [t.lower() for t in exp.TABLES])
    sp.add_argument("--n", type=int)
    sp.add_argument("--fraction", type=_fraction, action="append", help="repeatable; 0.2 or 20%%")
    sp.add_argument("--sample-size", type=int, action="append", help="repeatable; overrides --fraction")
    sp.add_argument("--trials", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sp.add_argument("--k-max", type=int, default=4)
    sp.add_argument("--candidate-pool", choices=exp.CANDIDATE_POOLS, default="all")
    sp.add_argument("--distance", type=_distance, help="override the table's distance")
    sp.add_argument("--replace", action="store_true", help="sample with replacement")
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--format", choices=["csv", "markdown"], default="csv")
    sp.add_argument("--config", help="key=value batch file, one [section] per experiment")
    sp.add_argument("--published", action="store_true", help="regenerate every published row")
    sp.add_argument("--tables", nargs="+", choices=exp.TABLES, help="with --published")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_experiment)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except SystemExit as e:  # --help
        return int(e.code or 0)
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(message)s", stream=sys.stderr, force=True)
    effective = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    log.info("config: %s", " ".join(f"{k}={v}" for k, v in effective.items()))
    try:
        return args.func(args)
    except UsageError as e:
        print(e, file=sys.stderr)
        return 1
    except (PartitionError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
