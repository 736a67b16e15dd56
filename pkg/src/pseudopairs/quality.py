"""Pair quality scores, score-density estimates and distribution-matched sampling.

The proxy score of a (molecule, description) pair is the similarity-weighted
ROUGE-L F1 between its description and the descriptions of its nearest
annotated neighbors. It is a cheap stand-in for a learned cross-modal scorer;
externally computed scores can be loaded from the same JSONL format with
``method="external"``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from pseudopairs.chem import SmilesParseError, parse_smiles, to_canonical_smiles
from pseudopairs.errors import DataError
from pseudopairs.fingerprints import compute_fingerprint
from pseudopairs.metrics.text_metrics import rouge_l_f1
from pseudopairs.retrieval import DEFAULT_K, AnnotatedPair, RetrievalIndex, top_k

METHODS = ("proxy_retrieval", "external")
N_BINS = 20
SIGMA_FLOOR = 1e-6


@dataclass(frozen=True)
class QualityScore:
    value: float
    method: str = "proxy_retrieval"

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise DataError(f"quality score {self.value} outside [0, 1]")
        if self.method not in METHODS:
            raise DataError(f"unknown scoring method {self.method!r}")


def quality_score(pair: AnnotatedPair, index: RetrievalIndex, k: int = DEFAULT_K) -> QualityScore:
    """Weighted ROUGE-L F1 against the top-k neighbors, skipping the pair's own id."""
    if not pair.description.strip():
        raise DataError(f"pair {pair.id!r} has an empty description")
    try:
        mol = parse_smiles(to_canonical_smiles(parse_smiles(pair.canonical_smiles)))
    except SmilesParseError as exc:
        raise DataError(f"pair {pair.id!r}: {exc}") from exc
    hits = top_k(index, compute_fingerprint(mol, index.params), k + 1)
    hits = [h for h in hits if h.pair_id != pair.id][:k]
    if not hits:
        raise DataError(f"no neighbors for pair {pair.id!r} besides itself")
    sims = np.array([h.similarity for h in hits])
    weights = sims / sims.sum() if sims.sum() > 0 else np.full(len(hits), 1.0 / len(hits))
    value = sum(w * rouge_l_f1(pair.description, index.get(h.pair_id).description) for w, h in zip(weights, hits))
    return QualityScore(min(max(float(value), 0.0), 1.0))


# -- density estimate -----------------------------------------------------


@dataclass(frozen=True)
class KdeModel:
    sample_points: tuple[float, ...]
    bandwidth: float
    kernel: str = "gaussian"

    def __post_init__(self):
        if not self.sample_points:
            raise DataError("KDE needs at least one sample point")
        if not self.bandwidth > 0:
            raise DataError("KDE bandwidth must be positive")


def silverman_bandwidth(scores: Sequence[float]) -> float:
    x = np.asarray(scores, dtype=float)
    sigma = float(np.std(x, ddof=1)) if len(x) > 1 else 0.0
    return 1.06 * max(sigma, SIGMA_FLOOR) * len(x) ** (-0.2)


def fit_kde(scores: Iterable[float]) -> KdeModel:
    points = tuple(float(s) for s in scores)
    if not points:
        raise DataError("cannot fit a KDE to no scores")
    return KdeModel(points, silverman_bandwidth(points))


def eval_kde(model: KdeModel, x):
    """Gaussian KDE density at ``x`` (scalar or array)."""
    pts = np.asarray(model.sample_points)
    xs = np.asarray(x, dtype=float)
    z = (xs[..., None] - pts) / model.bandwidth
    dens = np.exp(-0.5 * z * z).sum(axis=-1) / (len(pts) * model.bandwidth * math.sqrt(2 * math.pi))
    return float(dens) if np.ndim(x) == 0 else dens


def kde_grid(model: KdeModel, n_points: int = 200, pad: float = 3.0) -> tuple[np.ndarray, np.ndarray]:
    lo = min(model.sample_points) - pad * model.bandwidth
    hi = max(model.sample_points) + pad * model.bandwidth
    xs = np.linspace(lo, hi, n_points)
    return xs, eval_kde(model, xs)


# -- distribution matching ------------------------------------------------


def _bin_of(values: np.ndarray, lo: float, hi: float, n_bins: int) -> np.ndarray:
    if hi <= lo:
        return np.zeros(len(values), dtype=int)
    b = np.floor((values - lo) / ((hi - lo) / n_bins)).astype(int)
    return np.clip(b, 0, n_bins - 1)


def _largest_remainder(mass: np.ndarray, n: int) -> np.ndarray:
    raw = mass * n
    quota = np.floor(raw).astype(int)
    short = n - int(quota.sum())
    order = sorted(range(len(mass)), key=lambda b: (-(raw[b] - quota[b]), b))
    for b in order[:short]:
        quota[b] += 1
    return quota


def _redistribute(quota: np.ndarray, supply: np.ndarray) -> np.ndarray:
    """Move quota from bins without enough supply to the nearest bins with spare supply."""
    quota = quota.copy()
    n_bins = len(quota)
    for b in range(n_bins):
        excess = quota[b] - supply[b]
        if excess <= 0:
            continue
        quota[b] = supply[b]
        for other in sorted(range(n_bins), key=lambda o: (abs(o - b), o)):
            if excess == 0:
                break
            spare = supply[other] - quota[other]
            if spare > 0:
                take = min(spare, excess)
                quota[other] += take
                excess -= take
    return quota


def match_distribution_sample(
    pseudo_scores: Sequence[float],
    real_scores: Sequence[float],
    n: int,
    seed: int = 0,
    n_bins: int = N_BINS,
) -> list[int]:
    """Indices of ``n`` pseudo items whose score histogram follows ``real_scores``.

    Bins are equal-width over the real score range; pseudo scores outside it
    fall into the edge bins. Quotas follow the real bin masses (largest
    remainder rounding); a bin with too few pseudo items passes its shortfall
    to the nearest bins that still have items. Returned indices are sorted.
    """
    pseudo = np.asarray(pseudo_scores, dtype=float)
    real = np.asarray(real_scores, dtype=float)
    if n < 0 or n > len(pseudo):
        raise DataError(f"cannot draw {n} items from {len(pseudo)} pseudo scores")
    if n == 0:
        return []
    if len(real) == 0:
        raise DataError("no real scores to match")
    lo, hi = float(real.min()), float(real.max())
    real_bins = _bin_of(real, lo, hi, n_bins)
    pseudo_bins = _bin_of(pseudo, lo, hi, n_bins)
    mass = np.bincount(real_bins, minlength=n_bins) / len(real)
    supply = np.bincount(pseudo_bins, minlength=n_bins)
    quota = _redistribute(_largest_remainder(mass, n), supply)
    rng = np.random.default_rng(seed)
    chosen: list[int] = []
    for b in range(n_bins):
        if quota[b]:
            members = np.flatnonzero(pseudo_bins == b)
            chosen.extend(int(i) for i in rng.choice(members, size=int(quota[b]), replace=False))
    return sorted(chosen)


def ks_distance(a: Sequence[float], b: Sequence[float]) -> float:
    """Two-sample Kolmogorov-Smirnov statistic (sup of the ECDF gap)."""
    a, b = np.sort(np.asarray(a, float)), np.sort(np.asarray(b, float))
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / len(a)
    fb = np.searchsorted(b, grid, side="right") / len(b)
    return float(np.abs(fa - fb).max())


# -- score files ----------------------------------------------------------


def write_scores(path, scores: Iterable[tuple[str, QualityScore]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for pair_id, score in scores:
            fh.write(json.dumps({"pair_id": pair_id, "value": score.value, "method": score.method}) + "\n")


def read_scores(path) -> dict[str, QualityScore]:
    out: dict[str, QualityScore] = {}
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
            pair_id = str(doc["pair_id"])
            out[pair_id] = QualityScore(float(doc["value"]), doc.get("method", "external"))
        except (ValueError, KeyError, TypeError) as exc:
            raise DataError(f"{path}:{n}: bad score line: {exc}") from exc
    return out
