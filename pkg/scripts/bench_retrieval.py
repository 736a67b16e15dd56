"""Time index build and pruned top-k against a brute-force scan."""

import argparse
import time

from pseudopairs.chem import parse_smiles
from pseudopairs.fingerprints import FingerprintParams, compute_fingerprint
from pseudopairs.retrieval import brute_force_top_k, build_index, top_k
from pseudopairs.synthetic import distinct_molecules


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-n", type=int, default=5000, help="database size")
    ap.add_argument("-q", type=int, default=200, help="number of queries")
    ap.add_argument("-k", type=int, default=10)
    ap.add_argument("--kind", default="morgan", choices=("morgan", "path", "keys"))
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    params = FingerprintParams(args.kind)
    db = distinct_molecules(args.n, args.seed)
    t0 = time.perf_counter()
    index = build_index([(f"m{i}", c, "") for i, (_, c) in enumerate(db)], params)
    t_build = time.perf_counter() - t0
    queries = [compute_fingerprint(parse_smiles(c), params) for _, c in distinct_molecules(args.q, args.seed + 1)]

    t0 = time.perf_counter()
    fast = [top_k(index, q, args.k) for q in queries]
    t_fast = time.perf_counter() - t0
    t0 = time.perf_counter()
    slow = [brute_force_top_k(index, q, args.k) for q in queries]
    t_slow = time.perf_counter() - t0

    print(f"build: {len(index)} records in {t_build:.2f} s")
    print(f"top_k: {t_fast * 1000 / args.q:.2f} ms/query, brute force: {t_slow * 1000 / args.q:.2f} ms/query")
    print(f"identical results: {fast == slow}")


if __name__ == "__main__":
    main()
