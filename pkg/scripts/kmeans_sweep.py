"""Variance explained by k-means over the full universe for a range of k.

Stochastic and not part of the acceptance suite. Example:

    python scripts/kmeans_sweep.py --n 8 --k 2 20 50 --seed 42
"""

import argparse

from partcons import UniverseSpec, kmeans, universe


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=8)
    ap.add_argument("--k", type=int, nargs="+", default=[2, 20, 50, 100, 150, 200])
    ap.add_argument("--seed", type=int, default=42)
    args = ap.parse_args()
    u = universe(UniverseSpec(args.n))
    items = list(u)
    print("k,variance_explained,largest_cluster,largest_centre")
    for k in args.k:
        res = kmeans(items, k, seed=args.seed, embedding=u.embedding)
        big = max(res.clusters, key=lambda c: c.size)
        print(f"{k},{res.variance_explained:.4f},{big.size},\"{items[big.center]}\"")


if __name__ == "__main__":
    main()
