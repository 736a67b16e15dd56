"""Write a toy annotated corpus of random valid molecules (csv or jsonl)."""

import argparse

from pseudopairs.dataset_ops import Corpus, save_corpus
from pseudopairs.retrieval import AnnotatedPair
from pseudopairs.synthetic import synthetic_pairs


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out", help="output path; .csv or .jsonl")
    ap.add_argument("-n", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--prefix", default="db")
    args = ap.parse_args()
    rows = synthetic_pairs(args.n, args.seed, args.prefix)
    save_corpus(Corpus([AnnotatedPair(i, s, d) for i, s, d in rows]), args.out)
    print(f"wrote {len(rows)} pairs to {args.out}")


if __name__ == "__main__":
    main()
