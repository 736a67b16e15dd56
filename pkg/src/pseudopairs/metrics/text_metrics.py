"""Corpus BLEU, ROUGE-1/2/L and an exact+stem METEOR variant.

BLEU works on case-preserved tokens; ROUGE and METEOR lowercase first. All
share :func:`pseudopairs.text.tokenize` unless given pre-tokenized input.
"""

from __future__ import annotations

import heapq
import math
from collections import Counter, defaultdict
from functools import lru_cache
from typing import Sequence, Union

from nltk.stem.porter import PorterStemmer

from pseudopairs.errors import DataError
from pseudopairs.text import tokenize

Text = Union[str, Sequence[str]]
SMOOTHING_EPS = 1e-9

_stemmer = PorterStemmer(mode=PorterStemmer.ORIGINAL_ALGORITHM)


def _tokens(x: Text, lowercase: bool = False) -> list[str]:
    if isinstance(x, str):
        return tokenize(x, lowercase=lowercase)
    return [t.lower() for t in x] if lowercase else list(x)


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu_n(
    hypotheses: Sequence[Text],
    references: Sequence[Text],
    n: int = 4,
    smoothing: bool = False,
) -> float:
    """Corpus-level BLEU with uniform weights over orders 1..n (one reference each)."""
    if len(hypotheses) != len(references):
        raise DataError(f"{len(hypotheses)} hypotheses vs {len(references)} references")
    if not hypotheses:
        raise DataError("empty corpus")
    matched = [0] * n
    total = [0] * n
    hyp_len = ref_len = 0
    for h, r in zip(hypotheses, references):
        ht, rt = _tokens(h), _tokens(r)
        hyp_len += len(ht)
        ref_len += len(rt)
        for order in range(1, n + 1):
            hc, rc = _ngrams(ht, order), _ngrams(rt, order)
            matched[order - 1] += sum(min(c, rc[g]) for g, c in hc.items())
            total[order - 1] += max(len(ht) - order + 1, 0)
    if hyp_len == 0:
        return 0.0
    log_sum = 0.0
    for m, t in zip(matched, total):
        if m == 0 or t == 0:
            if not smoothing:
                return 0.0
            m, t = m + SMOOTHING_EPS, max(t, 1)
        log_sum += math.log(m / t) / n
    bp = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / hyp_len)
    return bp * math.exp(log_sum)


def _prf(overlap: int, hyp_total: int, ref_total: int) -> tuple[float, float, float]:
    p = overlap / hyp_total if hyp_total else 0.0
    r = overlap / ref_total if ref_total else 0.0
    f = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            cur.append(prev[j] + 1 if x == y else max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def rouge(hypothesis: Text, reference: Text, variant: str | int = "L") -> tuple[float, float, float]:
    """(precision, recall, F1) for ROUGE-1, ROUGE-2 or ROUGE-L."""
    h = _tokens(hypothesis, lowercase=True)
    r = _tokens(reference, lowercase=True)
    variant = str(variant).upper()
    if variant == "L":
        return _prf(lcs_length(h, r), len(h), len(r))
    if variant not in ("1", "2"):
        raise ValueError(f"unknown ROUGE variant {variant!r}")
    n = int(variant)
    hc, rc = _ngrams(h, n), _ngrams(r, n)
    overlap = sum(min(c, rc[g]) for g, c in hc.items())
    return _prf(overlap, sum(hc.values()), sum(rc.values()))


def rouge_l_f1(hypothesis: Text, reference: Text) -> float:
    return rouge(hypothesis, reference, "L")[2]


@lru_cache(maxsize=65536)
def porter_stem(word: str) -> str:
    return _stemmer.stem(word)


def _stage_runs(hk: Sequence[str], rk: Sequence[str], used_h: set, used_r: set) -> list[tuple[int, int]]:
    """Align free tokens with equal keys, longest contiguous run first.

    Runs are taken in order of (length desc, hypothesis start, reference
    start). A run that overlaps earlier picks is split into its free pieces,
    which go back on the heap. Every token that can match still does, so the
    match count is maximal; taking long runs first keeps the chunk count low.
    """
    where: dict[str, list[int]] = defaultdict(list)
    for j, k in enumerate(rk):
        if j not in used_r:
            where[k].append(j)
    eligible = {(i, j) for i, k in enumerate(hk) if i not in used_h for j in where.get(k, ())}
    heap = []
    for i, j in eligible:
        if (i - 1, j - 1) in eligible:
            continue
        n = 1
        while (i + n, j + n) in eligible:
            n += 1
        heap.append((-n, i, j))
    heapq.heapify(heap)
    out = []
    while heap:
        neg, i, j = heapq.heappop(heap)
        free = [not (i + t in used_h or j + t in used_r) for t in range(-neg)]
        if all(free):
            for t in range(-neg):
                used_h.add(i + t)
                used_r.add(j + t)
                out.append((i + t, j + t))
            continue
        t = 0
        while t < len(free):
            if free[t]:
                s = t
                while t < len(free) and free[t]:
                    t += 1
                heapq.heappush(heap, (-(t - s), i + s, j + s))
            else:
                t += 1
    return out


def meteor_alignment(h: Sequence[str], r: Sequence[str]) -> list[tuple[int, int]]:
    """Exact-match stage, then Porter-stem stage over the still unmatched tokens."""
    used_h: set[int] = set()
    used_r: set[int] = set()
    pairs = _stage_runs(h, r, used_h, used_r)
    pairs += _stage_runs([porter_stem(w) for w in h], [porter_stem(w) for w in r], used_h, used_r)
    return sorted(pairs)


def count_chunks(alignment: Sequence[tuple[int, int]]) -> int:
    if not alignment:
        return 0
    chunks = 1
    for (h0, r0), (h1, r1) in zip(alignment, alignment[1:]):
        if not (h1 == h0 + 1 and r1 == r0 + 1):
            chunks += 1
    return chunks


def meteor_lite(
    hypothesis: Text,
    reference: Text,
    alpha: float = 0.9,
    beta: float = 3.0,
    gamma: float = 0.5,
) -> float:
    """METEOR without the synonym stage: ``F_mean * (1 - gamma * (chunks/m) ** beta)``."""
    h = _tokens(hypothesis, lowercase=True)
    r = _tokens(reference, lowercase=True)
    alignment = meteor_alignment(h, r)
    m = len(alignment)
    if m == 0:
        return 0.0
    p, rec = m / len(h), m / len(r)
    f_mean = p * rec / (alpha * p + (1 - alpha) * rec)
    penalty = gamma * (count_chunks(alignment) / m) ** beta
    return f_mean * (1 - penalty)
