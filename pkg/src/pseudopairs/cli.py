"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 remote/API error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

from pseudopairs.config import PathsConfig, RunConfig, load_config, with_overrides
from pseudopairs.dataset_ops import (
    corpus_stats,
    emit_adaptation_corpus,
    emit_augmented_set,
    filter_overlap,
    load_corpus,
    save_corpus,
)
from pseudopairs.errors import DataError, RemoteError
from pseudopairs.fingerprints import compute_fingerprint
from pseudopairs.chem import SmilesParseError, parse_smiles, to_canonical_smiles
from pseudopairs.generator import generate_pairs
from pseudopairs.llm_client import ChatClient, MockLLMTransport, VirtualClock
from pseudopairs.metrics import evaluate_captioning, evaluate_generation, write_per_pair_csv, write_report_json
from pseudopairs.prompting import DEFAULT_TEMPLATE, load_template
from pseudopairs.quality import fit_kde, kde_grid, quality_score, read_scores, write_scores
from pseudopairs.retrieval import build_index, load_index, persist_index, top_k

log = logging.getLogger("pseudopairs")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_REMOTE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


# -- helpers --------------------------------------------------------------


def read_lines(path) -> list[str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    return [line.rstrip("\r") for line in text.split("\n")][: -1 if text.endswith("\n") else None]


def read_smiles_list(path) -> list[str]:
    """SMILES from a corpus file (csv/jsonl ``smiles`` field) or a plain one-per-line file."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".csv":
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            if "smiles" not in (reader.fieldnames or []):
                raise DataError(f"{path}: no smiles column")
            return [row["smiles"] for row in reader]
    if suffix in (".jsonl", ".json"):
        out = []
        for n, line in enumerate(read_lines(path), 1):
            if line.strip():
                try:
                    out.append(json.loads(line)["smiles"])
                except (ValueError, KeyError, TypeError) as exc:
                    raise DataError(f"{path}:{n}: no smiles field") from exc
        return out
    return [s.strip() for s in read_lines(path) if s.strip()]


def _need(value, flag: str):
    if value is None:
        raise UsageError(f"missing required {flag} (flag or config)")
    return value


def _exclusions(cfg: RunConfig) -> list[str]:
    out: list[str] = []
    for p in cfg.paths.exclusions:
        out.extend(read_smiles_list(p))
    return out


def _index_for(args, cfg: RunConfig):
    if getattr(args, "index", None):
        return load_index(args.index)
    db = _need(cfg.paths.db, "--db")
    corpus = load_corpus(db)
    return build_index(corpus.pairs, cfg.fingerprint, _exclusions(cfg))


def _emit(doc, fmt: str) -> None:
    if fmt == "json":
        sys.stdout.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    else:
        rows = doc if isinstance(doc, list) else [doc]
        for row in rows:
            sys.stdout.write("\t".join(f"{k}={v}" for k, v in row.items()) + "\n")


# -- subcommands ----------------------------------------------------------


def cmd_build_index(args, cfg: RunConfig) -> int:
    index = _index_for(argparse.Namespace(), cfg)
    out = _need(cfg.paths.output, "--out")
    persist_index(index, out)
    _emit({"records": len(index), "excluded": index.excluded_count, "failed": len(index.failures)}, args.format)
    return EXIT_OK


def cmd_retrieve(args, cfg: RunConfig) -> int:
    index = _index_for(args, cfg)
    try:
        mol = parse_smiles(to_canonical_smiles(parse_smiles(args.smiles)))
    except SmilesParseError as exc:
        raise DataError(str(exc)) from exc
    hits = top_k(index, compute_fingerprint(mol, index.params), cfg.k)
    _emit([{"pair_id": h.pair_id, "similarity": h.similarity} for h in hits], args.format)
    return EXIT_OK


def cmd_generate(args, cfg: RunConfig) -> int:
    index = _index_for(args, cfg)
    inputs = read_smiles_list(_need(cfg.paths.inputs, "--inputs"))
    out = _need(cfg.paths.output, "--out")
    template = load_template(cfg.template_path) if cfg.template_path else DEFAULT_TEMPLATE
    if args.mock_llm:
        client = ChatClient(cfg.client, transport=MockLLMTransport(), clock=VirtualClock(), seed=cfg.seed)
        now_ms = lambda ordinal: ordinal  # noqa: E731  deterministic stamps for reproducible files
    else:
        client = ChatClient(cfg.client, seed=cfg.seed)
        now_ms = None
    summary = generate_pairs(
        inputs, index, template, cfg.policy, client, _exclusions(cfg), out,
        k=cfg.k, workers=cfg.workers, max_prompt_chars=cfg.max_prompt_chars, now_ms=now_ms,
    )
    doc = vars(summary).copy()
    doc["written"] = summary.written
    _emit(doc, args.format)
    return EXIT_OK


def cmd_filter(args, cfg: RunConfig) -> int:
    corpus = load_corpus(args.corpus)
    refs = [read_smiles_list(p) for p in args.reference]
    filtered, removed = filter_overlap(corpus, refs)
    save_corpus(filtered, _need(cfg.paths.output, "--out"))
    _emit({"kept": len(filtered), "removed": removed, "unparseable": len(corpus.diagnostics)}, args.format)
    return EXIT_OK


def cmd_stats(args, cfg: RunConfig) -> int:
    stats = corpus_stats(load_corpus(args.corpus))
    _emit(vars(stats), args.format)
    return EXIT_OK


def cmd_emit_adaptation(args, cfg: RunConfig) -> int:
    counts = emit_adaptation_corpus(load_corpus(args.corpus), _need(cfg.paths.output, "--out"), cfg.seed)
    _emit(counts, args.format)
    return EXIT_OK


def cmd_emit_augmented(args, cfg: RunConfig) -> int:
    real = load_corpus(args.real, split="train")
    pseudo = load_corpus(args.pseudo)
    scores = read_scores(args.scores)
    counts = emit_augmented_set(real, pseudo, args.n_pseudo, scores, _need(cfg.paths.output, "--out"), cfg.seed)
    _emit(counts, args.format)
    return EXIT_OK


def cmd_quality(args, cfg: RunConfig) -> int:
    corpus = load_corpus(args.corpus)
    index = _index_for(args, cfg)
    scored = [(p.id, quality_score(p, index, cfg.k)) for p in corpus.pairs]
    write_scores(_need(cfg.paths.output, "--out"), scored)
    model = fit_kde([s.value for _, s in scored])
    if args.kde_out:
        xs, dens = kde_grid(model, args.grid)
        with open(args.kde_out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(("x", "density"))
            writer.writerows((f"{x:.6f}", f"{d:.6f}") for x, d in zip(xs, dens))
    _emit({"scored": len(scored), "bandwidth": model.bandwidth, "method": "proxy_retrieval"}, args.format)
    return EXIT_OK


def _evaluate(args, cfg: RunConfig, fn) -> int:
    preds, refs = read_lines(args.predictions), read_lines(args.references)
    report = fn(preds, refs)
    if cfg.paths.output:
        write_report_json(report, cfg.paths.output)
    if args.per_pair:
        write_per_pair_csv(report, args.per_pair)
    _emit(report.to_dict(), args.format)
    return EXIT_OK


def cmd_evaluate_caption(args, cfg: RunConfig) -> int:
    return _evaluate(args, cfg, evaluate_captioning)


def cmd_evaluate_generation(args, cfg: RunConfig) -> int:
    return _evaluate(args, cfg, evaluate_generation)


# -- parser ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=int)
    common.add_argument("--k", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--format", choices=("json", "tsv"), default="json")
    common.add_argument("--out", help="output path")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="pseudopairs", description="Pseudo molecule-description pair pipeline.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, fn, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(func=fn)
        return p

    def with_db(p, allow_index=True):
        p.add_argument("--db", help="annotated corpus (csv/jsonl) to index")
        p.add_argument("--exclude", action="append", help="SMILES file whose molecules must not be used (repeatable)")
        if allow_index:
            p.add_argument("--index", help="prebuilt index file")
        p.add_argument("--fp-kind", choices=("morgan", "path", "keys"))

    p = add("build-index", cmd_build_index, "build and persist a retrieval index")
    with_db(p, allow_index=False)

    p = add("retrieve", cmd_retrieve, "nearest annotated neighbors of one SMILES")
    with_db(p)
    p.add_argument("smiles")

    p = add("generate", cmd_generate, "generate pseudo descriptions")
    with_db(p)
    p.add_argument("--inputs", help="SMILES to describe")
    p.add_argument("--template", help="prompt template file")
    p.add_argument("--max-prompt-chars", type=int)
    p.add_argument("--temperature", type=float, help="exemplar selection temperature")
    p.add_argument("--mock-llm", action="store_true", help="use the offline deterministic mock model")

    p = add("filter", cmd_filter, "remove pairs overlapping reference sets")
    p.add_argument("--corpus", required=True)
    p.add_argument("--reference", action="append", required=True)

    p = add("stats", cmd_stats, "description length statistics")
    p.add_argument("--corpus", required=True)

    p = add("emit-adaptation", cmd_emit_adaptation, "write bidirectional seq2seq TSV")
    p.add_argument("--corpus", required=True)

    p = add("emit-augmented", cmd_emit_augmented, "write real plus distribution-matched pseudo pairs")
    p.add_argument("--real", required=True)
    p.add_argument("--pseudo", required=True)
    p.add_argument("--scores", required=True, help="JSONL scores for both corpora")
    p.add_argument("--n-pseudo", type=int, required=True)

    p = add("quality", cmd_quality, "proxy quality scores and KDE curve")
    with_db(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--kde-out", help="CSV of (x, density)")
    p.add_argument("--grid", type=int, default=200)

    for name, fn in (("evaluate-caption", cmd_evaluate_caption), ("evaluate-generation", cmd_evaluate_generation)):
        p = add(name, fn, "score predictions against references")
        p.add_argument("--predictions", required=True)
        p.add_argument("--references", required=True)
        p.add_argument("--per-pair", help="CSV dump of per-pair values")
    return parser


def resolve_config(args) -> RunConfig:
    cfg = load_config(args.config)
    fp = cfg.fingerprint
    if getattr(args, "fp_kind", None):
        fp = type(fp)(args.fp_kind, fp.bits, fp.radius, fp.max_path_len)
    paths = cfg.paths
    paths = PathsConfig(
        db=getattr(args, "db", None) or paths.db,
        exclusions=tuple(getattr(args, "exclude", None) or paths.exclusions),
        inputs=getattr(args, "inputs", None) or paths.inputs,
        output=args.out or paths.output,
    )
    return with_overrides(
        cfg,
        seed=args.seed,
        k=args.k,
        workers=args.workers,
        fingerprint=fp,
        paths=paths,
        template_path=getattr(args, "template", None),
        max_prompt_chars=getattr(args, "max_prompt_chars", None),
        temperature=getattr(args, "temperature", None),
    )


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.error("a subcommand is required")
        logging.basicConfig(
            level=logging.INFO if args.verbose else logging.WARNING,
            format="%(levelname)s %(name)s: %(message)s",
            stream=sys.stderr,
        )
        cfg = resolve_config(args)
        return args.func(args, cfg)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except RemoteError as exc:
        print(f"remote error: {exc}", file=sys.stderr)
        return EXIT_REMOTE
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
