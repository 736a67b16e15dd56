"""Corpus loading, overlap filtering, statistics and training-file emission."""

from __future__ import annotations

import csv
import json
import logging
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from pseudopairs.chem import SmilesParseError, canonical_set, parse_smiles, to_canonical_smiles
from pseudopairs.errors import DataError
from pseudopairs.quality import QualityScore, match_distribution_sample
from pseudopairs.retrieval import AnnotatedPair
from pseudopairs.text import sentences, tokenize, words

log = logging.getLogger(__name__)

COLUMNS = ("id", "smiles", "description")
SPLITS = ("train", "valid", "test", "unsplit")
S2C = "smiles2caption:"
C2S = "caption2smiles:"


@dataclass
class Corpus:
    pairs: list[AnnotatedPair]
    name: str = ""
    split: str = "unsplit"
    diagnostics: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.split not in SPLITS:
            raise DataError(f"unknown split {self.split!r}")
        seen = set()
        for p in self.pairs:
            if p.id in seen:
                raise DataError(f"duplicate pair id {p.id!r} in corpus {self.name!r}")
            seen.add(p.id)

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class CorpusStats:
    pair_count: int
    mean_sentences: float
    mean_words: float
    mean_tokens: float


def _from_generation_record(doc: dict) -> dict | None:
    """Map a generator output line onto corpus columns; rejected records are dropped."""
    if doc.get("status") != "kept":
        return None
    return {
        "id": f"pseudo{int(doc.get('input_ordinal', -1)):07d}",
        "smiles": doc["target_canonical_smiles"],
        "description": doc.get("description", ""),
    }


def _rows(path: Path, fmt: str):
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    with fh:
        if fmt == "csv":
            reader = csv.DictReader(fh)
            missing = [c for c in COLUMNS if c not in (reader.fieldnames or [])]
            if missing:
                raise DataError(f"{path}: missing columns {missing}")
            for n, row in enumerate(reader, 2):
                yield n, row
        else:
            for n, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    row = json.loads(line)
                except ValueError as exc:
                    raise DataError(f"{path}:{n}: invalid JSON: {exc}") from exc
                if isinstance(row, dict) and "target_canonical_smiles" in row and "smiles" not in row:
                    row = _from_generation_record(row)
                    if row is None:
                        continue
                missing = [c for c in COLUMNS if c not in row]
                if missing:
                    raise DataError(f"{path}:{n}: missing keys {missing}")
                yield n, row


def infer_format(path) -> str:
    suffix = Path(path).suffix.lower()
    if suffix in (".jsonl", ".json"):
        return "jsonl"
    if suffix in (".csv", ".tsv"):
        return "csv"
    raise DataError(f"cannot infer corpus format from {path}; pass csv or jsonl")


def load_corpus(path, fmt: str | None = None, name: str | None = None, split: str = "unsplit") -> Corpus:
    """Read ``id, smiles, description`` rows and canonicalize the SMILES.

    Unparseable rows are left out and reported in ``diagnostics``. A JSONL
    file written by the generator is also accepted: kept records become pairs
    with id ``pseudo<ordinal>`` and rejected ones are skipped.
    """
    path = Path(path)
    fmt = fmt or infer_format(path)
    if fmt not in ("csv", "jsonl"):
        raise DataError(f"unknown corpus format {fmt!r}")
    pairs, diagnostics = [], []
    for line_no, row in _rows(path, fmt):
        pid, smi, desc = (str(row[c]) for c in COLUMNS)
        try:
            canon = to_canonical_smiles(parse_smiles(smi.strip()))
        except SmilesParseError as exc:
            diagnostics.append(f"{path.name}:{line_no}: id {pid}: {exc.diagnostic}")
            continue
        pairs.append(AnnotatedPair(pid, canon, desc))
    for d in diagnostics:
        log.warning("skipped row %s", d)
    return Corpus(pairs, name or path.stem, split, diagnostics)


def save_corpus(corpus: Corpus, path, fmt: str | None = None) -> None:
    fmt = fmt or infer_format(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if fmt == "csv":
            writer = csv.writer(fh)
            writer.writerow(COLUMNS)
            for p in corpus.pairs:
                writer.writerow((p.id, p.canonical_smiles, p.description))
        else:
            for p in corpus.pairs:
                fh.write(json.dumps({"id": p.id, "smiles": p.canonical_smiles, "description": p.description}, ensure_ascii=False) + "\n")


def filter_overlap(corpus: Corpus, reference_sets: Iterable[Iterable[str]]) -> tuple[Corpus, int]:
    """Drop pairs whose canonical SMILES appears in any reference set.

    SMILES that fail to parse are compared as raw strings and flagged in the
    returned corpus's diagnostics.
    """
    reference: set[str] = set()
    for s in reference_sets:
        reference |= canonical_set(s)
    kept, removed, flags = [], 0, list(corpus.diagnostics)
    for p in corpus.pairs:
        try:
            key = to_canonical_smiles(parse_smiles(p.canonical_smiles))
        except SmilesParseError:
            key = p.canonical_smiles
            flags.append(f"id {p.id}: unparseable SMILES compared as raw string")
        if key in reference:
            removed += 1
        else:
            kept.append(p)
    return Corpus(kept, corpus.name, corpus.split, flags), removed


def description_stats(descriptions: Iterable[str]) -> CorpusStats:
    n = n_sent = n_words = n_tokens = 0
    for d in descriptions:
        n += 1
        n_sent += len(sentences(d))
        n_words += len(words(d))
        n_tokens += len(tokenize(d))
    if n == 0:
        raise DataError("cannot compute statistics of an empty corpus")
    return CorpusStats(n, n_sent / n, n_words / n, n_tokens / n)


def iter_descriptions(path, fmt: str | None = None, column: str = "description"):
    """Stream one text column of a csv/jsonl file without parsing the SMILES."""
    path = Path(path)
    fmt = fmt or infer_format(path)
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    with fh:
        if fmt == "csv":
            reader = csv.DictReader(fh, delimiter="\t" if path.suffix.lower() == ".tsv" else ",")
            if column not in (reader.fieldnames or []):
                raise DataError(f"{path}: no {column!r} column")
            for row in reader:
                yield row[column]
        else:
            for n, line in enumerate(fh, 1):
                if line.strip():
                    try:
                        yield json.loads(line)[column]
                    except (ValueError, KeyError, TypeError) as exc:
                        raise DataError(f"{path}:{n}: no {column!r} field") from exc


def corpus_stats(corpus: Corpus) -> CorpusStats:
    return description_stats(p.description for p in corpus.pairs)


def _clean_field(text: str) -> str:
    return " ".join(text.replace("\t", " ").split())


def emit_adaptation_corpus(pseudo: Corpus, out_path, seed: int = 0) -> dict[str, int]:
    """Write both translation directions for every pair as shuffled TSV lines."""
    if not pseudo.pairs:
        raise DataError("cannot emit an adaptation corpus from no pairs")
    lines = []
    for p in pseudo.pairs:
        smi, desc = _clean_field(p.canonical_smiles), _clean_field(p.description)
        lines.append(f"{S2C} {smi}\t{desc}")
        lines.append(f"{C2S} {desc}\t{smi}")
    random.Random(seed).shuffle(lines)
    try:
        Path(out_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot write {out_path}: {exc}") from exc
    return {"smiles2caption": len(pseudo.pairs), "caption2smiles": len(pseudo.pairs), "total": len(lines)}


def _score_values(corpus: Corpus, scores: Mapping[str, QualityScore | float], label: str) -> list[float]:
    out = []
    for p in corpus.pairs:
        if p.id not in scores:
            raise DataError(f"no quality score for {label} pair {p.id!r}")
        s = scores[p.id]
        out.append(s.value if isinstance(s, QualityScore) else float(s))
    return out


def emit_augmented_set(
    real_train: Corpus,
    pseudo: Corpus,
    n_pseudo: int,
    quality_scores: Mapping[str, QualityScore | float],
    out_path,
    seed: int = 0,
) -> dict[str, int]:
    """Write every real pair, then ``n_pseudo`` distribution-matched pseudo pairs, as JSONL."""
    if n_pseudo > len(pseudo):
        raise DataError(f"asked for {n_pseudo} pseudo pairs but only {len(pseudo)} are available")
    chosen: list[int] = []
    if n_pseudo > 0:
        real_vals = _score_values(real_train, quality_scores, "real")
        pseudo_vals = _score_values(pseudo, quality_scores, "pseudo")
        chosen = match_distribution_sample(pseudo_vals, real_vals, n_pseudo, seed)
    real_ids = {p.id for p in real_train.pairs}
    rows = [(p, "real") for p in real_train.pairs]
    for i in chosen:
        p = pseudo.pairs[i]
        if p.id in real_ids:
            raise DataError(f"pseudo pair id {p.id!r} collides with a real pair id")
        rows.append((p, "pseudo"))
    try:
        with open(out_path, "w", encoding="utf-8") as fh:
            for p, origin in rows:
                doc = {"id": p.id, "smiles": p.canonical_smiles, "description": p.description, "origin": origin}
                fh.write(json.dumps(doc, ensure_ascii=False) + "\n")
    except OSError as exc:
        raise DataError(f"cannot write {out_path}: {exc}") from exc
    return {"real": len(real_train), "pseudo": len(chosen), "total": len(rows)}
