"""Aggregate reports for molecule captioning and text-to-molecule generation.

BLEU in both reports is corpus-level, so it is not the mean of the per-pair
BLEU values in the dump. Every other field is a plain mean over its pairs.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

from pseudopairs.chem import SmilesParseError, is_valid, parse_smiles, to_canonical_smiles
from pseudopairs.errors import DataError
from pseudopairs.fingerprints import KEYS, MORGAN, PATH, FingerprintParams, compute_count_fingerprint, compute_fingerprint, tanimoto
from pseudopairs.metrics.frechet import frechet_fp_distance
from pseudopairs.metrics.text_metrics import bleu_n, meteor_lite, rouge

FFD_DIM = 64

LABELS = {
    "fts_morgan": "Morgan FTS",
    "fts_path": "Path FTS (RDK substitute)",
    "fts_keys": "Keys FTS (MACCS substitute)",
    "ffd": "Frechet fingerprint distance (FCD substitute)",
    "meteor": "METEOR (exact + stem stages only)",
}


def _mean(values) -> float:
    values = list(values)
    return sum(values) / len(values) if values else 0.0


def _check_lengths(a: Sequence, b: Sequence) -> None:
    if len(a) != len(b):
        raise DataError(f"{len(a)} predictions vs {len(b)} references")
    if not a:
        raise DataError("nothing to evaluate")


@dataclass
class CaptionReport:
    bleu2: float
    bleu4: float
    rouge1_f: float
    rouge2_f: float
    rougeL_f: float
    meteor: float
    n_pairs: int
    per_pair: list[dict] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc.pop("per_pair")
        doc["labels"] = {"meteor": LABELS["meteor"]}
        return doc


@dataclass
class GenerationReport:
    bleu4: float
    accuracy: float
    raw_accuracy: float
    mean_levenshtein: float
    validity: float
    fts_morgan: float
    fts_path: float
    fts_keys: float
    ffd: float | None
    n_pairs: int
    n_valid: int
    per_pair: list[dict] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc.pop("per_pair")
        doc["labels"] = {k: v for k, v in LABELS.items() if k != "meteor"}
        return doc


def evaluate_captioning(predicted: Sequence[str], references: Sequence[str]) -> CaptionReport:
    _check_lengths(predicted, references)
    rows = []
    for i, (p, r) in enumerate(zip(predicted, references)):
        rows.append(
            {
                "index": i,
                "bleu2": bleu_n([p], [r], 2),
                "bleu4": bleu_n([p], [r], 4),
                "rouge1_f": rouge(p, r, "1")[2],
                "rouge2_f": rouge(p, r, "2")[2],
                "rougeL_f": rouge(p, r, "L")[2],
                "meteor": meteor_lite(p, r),
            }
        )
    return CaptionReport(
        bleu2=bleu_n(predicted, references, 2),
        bleu4=bleu_n(predicted, references, 4),
        rouge1_f=_mean(x["rouge1_f"] for x in rows),
        rouge2_f=_mean(x["rouge2_f"] for x in rows),
        rougeL_f=_mean(x["rougeL_f"] for x in rows),
        meteor=_mean(x["meteor"] for x in rows),
        n_pairs=len(rows),
        per_pair=rows,
    )


def levenshtein(a: str, b: str) -> int:
    """Unit-cost character edit distance."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def _parse(text: str):
    try:
        mol = parse_smiles(text)
    except SmilesParseError:
        return None, None
    return mol, to_canonical_smiles(mol)


def evaluate_generation(
    predicted: Sequence[str],
    references: Sequence[str],
    fp_params: Sequence[FingerprintParams] = (MORGAN, PATH, KEYS),
) -> GenerationReport:
    """Score predicted SMILES against references.

    FTS means cover only pairs where both sides parse (``n_valid``); the
    distance between count-fingerprint sets uses the valid predictions and
    the valid references, and is ``None`` if either has fewer than 2.
    """
    _check_lengths(predicted, references)
    by_kind = {p.kind: p for p in fp_params}
    rows = []
    valid_pred_fps, valid_ref_fps = [], []
    for i, (p, r) in enumerate(zip(predicted, references)):
        p, r = p.strip(), r.strip()
        pmol, pcanon = _parse(p)
        rmol, rcanon = _parse(r)
        pred_ok = is_valid(p)[0] if pmol is not None else False
        row = {
            "index": i,
            "predicted": p,
            "reference": r,
            "valid": pred_ok,
            "exact": (pcanon == rcanon) if pcanon is not None and rcanon is not None else p == r,
            "raw_exact": p == r,
            "levenshtein": levenshtein(p, r),
        }
        both = pmol is not None and rmol is not None
        for kind in ("morgan", "path", "keys"):
            params = by_kind.get(kind)
            row[f"fts_{kind}"] = (
                tanimoto(compute_fingerprint(pmol, params), compute_fingerprint(rmol, params))
                if both and params is not None
                else None
            )
        row["both_parse"] = both
        rows.append(row)
        if pred_ok:
            valid_pred_fps.append(compute_count_fingerprint(pmol, MORGAN, FFD_DIM))
        if rmol is not None and is_valid(r)[0]:
            valid_ref_fps.append(compute_count_fingerprint(rmol, MORGAN, FFD_DIM))

    paired = [x for x in rows if x["both_parse"]]
    ffd = None
    if len(valid_pred_fps) >= 2 and len(valid_ref_fps) >= 2:
        ffd = frechet_fp_distance(valid_pred_fps, valid_ref_fps)
    char_pred = [list(x["predicted"]) for x in rows]
    char_ref = [list(x["reference"]) for x in rows]
    return GenerationReport(
        bleu4=bleu_n(char_pred, char_ref, 4),
        accuracy=_mean(x["exact"] for x in rows),
        raw_accuracy=_mean(x["raw_exact"] for x in rows),
        mean_levenshtein=_mean(x["levenshtein"] for x in rows),
        validity=_mean(x["valid"] for x in rows),
        fts_morgan=_mean(x["fts_morgan"] for x in paired if x["fts_morgan"] is not None),
        fts_path=_mean(x["fts_path"] for x in paired if x["fts_path"] is not None),
        fts_keys=_mean(x["fts_keys"] for x in paired if x["fts_keys"] is not None),
        ffd=ffd,
        n_pairs=len(rows),
        n_valid=len(paired),
        per_pair=rows,
    )


def write_report_json(report, path) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_per_pair_csv(report, path) -> None:
    rows = report.per_pair
    if not rows:
        return
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
