"""Description statistics of a large released corpus, streamed without SMILES parsing."""

import argparse
import json
from dataclasses import asdict

from pseudopairs.dataset_ops import description_stats, iter_descriptions


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("path", help="csv/tsv/jsonl file")
    ap.add_argument("--column", default="description")
    args = ap.parse_args()
    stats = description_stats(iter_descriptions(args.path, column=args.column))
    print(json.dumps(asdict(stats), indent=2))


if __name__ == "__main__":
    main()
