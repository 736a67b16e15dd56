"""Local annotated-pair database with exact top-k Tanimoto search.

Records are kept sorted by fingerprint popcount so a query can visit popcount
buckets in decreasing order of the bound ``min(p, q) / max(p, q)`` and stop as
soon as the bound falls below the current k-th best similarity.

Index file layout (all integers little-endian)::

    b"MPFI" | u16 version
    body:   u8 kind | u32 bits | u8 radius | u8 max_path_len | u64 record count
            per record: u32 len + id utf-8 | u32 len + canonical smiles utf-8
                        | u32 len + description utf-8 | bits/8 raw fingerprint bytes
    u64 checksum  (BLAKE2b, 8-byte digest of the body)
"""

from __future__ import annotations

import hashlib
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from pseudopairs.chem import SmilesParseError, canonical_set, parse_smiles, to_canonical_smiles
from pseudopairs.errors import DataError
from pseudopairs.fingerprints import (
    KINDS,
    MORGAN,
    BitFingerprint,
    FingerprintError,
    FingerprintParams,
    compute_fingerprint,
)

log = logging.getLogger(__name__)

MAGIC = b"MPFI"
FORMAT_VERSION = 1
DEFAULT_K = 10


@dataclass(frozen=True)
class AnnotatedPair:
    id: str
    canonical_smiles: str
    description: str
    fingerprint: BitFingerprint | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Hit:
    pair_id: str
    similarity: float


class IndexBuildError(DataError):
    def __init__(self, message: str, diagnostics=()):
        super().__init__(message)
        self.diagnostics = list(diagnostics)


class IndexFormatError(DataError):
    """Unreadable index file. ``reason`` is one of bad_magic, version_mismatch,
    checksum, truncated."""

    def __init__(self, reason: str, message: str):
        super().__init__(f"{reason}: {message}")
        self.reason = reason


class RetrievalIndex:
    """Immutable, popcount-sorted fingerprint database."""

    def __init__(self, params: FingerprintParams, records: Iterable[AnnotatedPair]):
        self.params = params
        recs = list(records)
        for r in recs:
            if r.fingerprint is None or r.fingerprint.params != params:
                raise FingerprintError(f"record {r.id!r} lacks a {params.kind} fingerprint")
        recs.sort(key=lambda r: (r.fingerprint.popcount, r.id))
        ids = [r.id for r in recs]
        if len(set(ids)) != len(ids):
            raise IndexBuildError("duplicate pair ids in index")
        self.records: tuple[AnnotatedPair, ...] = tuple(recs)
        self.excluded_count = 0
        self.failures: list = []

        words = params.bits // 64
        self._matrix = np.zeros((len(recs), words), dtype=np.uint64)
        for i, r in enumerate(recs):
            self._matrix[i] = r.fingerprint.as_words()
        self._popcounts = np.array([r.fingerprint.popcount for r in recs], dtype=np.int64)
        order = sorted(range(len(ids)), key=ids.__getitem__)
        self._id_rank = np.empty(len(ids), dtype=np.int64)
        self._id_rank[order] = np.arange(len(ids))
        self._by_id = {r.id: r for r in recs}

        self.popcount_offsets: dict[int, tuple[int, int]] = {}
        start = 0
        for i in range(1, len(recs) + 1):
            if i == len(recs) or self._popcounts[i] != self._popcounts[start]:
                self.popcount_offsets[int(self._popcounts[start])] = (start, i)
                start = i

    def __len__(self) -> int:
        return len(self.records)

    def __eq__(self, other) -> bool:
        if not isinstance(other, RetrievalIndex):
            return NotImplemented
        return self.params == other.params and all(
            a == b and a.fingerprint == b.fingerprint for a, b in zip(self.records, other.records)
        ) and len(self) == len(other)

    def get(self, pair_id: str) -> AnnotatedPair:
        return self._by_id[pair_id]

    def similarities(self, query: BitFingerprint, start: int = 0, stop: int | None = None) -> np.ndarray:
        q = query.as_words()
        block = self._matrix[start:stop]
        inter = np.bitwise_count(block & q).sum(axis=1, dtype=np.int64)
        union = self._popcounts[start:stop] + query.popcount - inter
        sims = np.zeros(len(block), dtype=np.float64)
        nz = union > 0
        sims[nz] = inter[nz] / union[nz]
        return sims

    def _check_query(self, query: BitFingerprint, k: int) -> None:
        if k < 1:
            raise ValueError("k must be at least 1")
        if query.params != self.params:
            raise FingerprintError(f"query parameters {query.params} differ from index {self.params}")

    def _ranked(self, positions: np.ndarray, sims: np.ndarray, k: int) -> list[Hit]:
        order = np.lexsort((self._id_rank[positions], -sims))[:k]
        return [Hit(self.records[positions[i]].id, float(sims[i])) for i in order]


def build_index(
    pairs: Iterable,
    params: FingerprintParams = MORGAN,
    exclusion_set: Iterable[str] = (),
) -> RetrievalIndex:
    """Canonicalize, fingerprint and index ``pairs``, dropping excluded molecules.

    ``pairs`` holds :class:`AnnotatedPair` objects or ``(id, smiles,
    description)`` tuples. Parse failures are collected on ``index.failures``.
    """
    excluded = canonical_set(exclusion_set)
    records, failures, n_excluded = [], [], 0
    for p in pairs:
        pid, smi, desc = (p.id, p.canonical_smiles, p.description) if isinstance(p, AnnotatedPair) else p
        try:
            mol = parse_smiles(smi)
        except SmilesParseError as exc:
            failures.append((pid, exc.diagnostic))
            continue
        canon = to_canonical_smiles(mol)
        if canon in excluded:
            n_excluded += 1
            continue
        # Fingerprint the canonical parse so the index never depends on input rendering.
        fp = compute_fingerprint(parse_smiles(canon), params)
        records.append(AnnotatedPair(str(pid), canon, desc, fp))
    if not records:
        raise IndexBuildError(
            f"no records left ({len(failures)} unparseable, {n_excluded} excluded)", failures
        )
    index = RetrievalIndex(params, records)
    index.excluded_count = n_excluded
    index.failures = failures
    log.info("indexed %d records, excluded %d, failed %d", len(index), n_excluded, len(failures))
    return index


def brute_force_top_k(index: RetrievalIndex, query: BitFingerprint, k: int = DEFAULT_K) -> list[Hit]:
    """Linear scan over every record; the reference for :func:`top_k`."""
    index._check_query(query, k)
    sims = index.similarities(query)
    return index._ranked(np.arange(len(index)), sims, k)


def top_k(
    index: RetrievalIndex, query: BitFingerprint, k: int = DEFAULT_K, check_pruning: bool = False
) -> list[Hit]:
    """Exact top-k by (similarity desc, pair_id asc) with popcount-bound pruning.

    With ``check_pruning`` every skipped record is scored and asserted to sit
    strictly below the final k-th best similarity.
    """
    index._check_query(query, k)
    qp = query.popcount
    if qp == 0:
        return brute_force_top_k(index, query, k)
    buckets = sorted(
        index.popcount_offsets.items(),
        key=lambda kv: (-(min(kv[0], qp) / max(kv[0], qp)), kv[0]),
    )
    pos_parts, sim_parts = [], []
    n_seen = 0
    kth = -1.0
    skipped_from = len(buckets)
    for bi, (p, (start, stop)) in enumerate(buckets):
        bound = min(p, qp) / max(p, qp)
        if n_seen >= k and bound < kth:
            skipped_from = bi
            break
        pos_parts.append(np.arange(start, stop))
        sim_parts.append(index.similarities(query, start, stop))
        n_seen += stop - start
        if n_seen >= k:
            all_sims = np.concatenate(sim_parts)
            kth = float(np.partition(all_sims, len(all_sims) - k)[len(all_sims) - k])
    positions = np.concatenate(pos_parts)
    sims = np.concatenate(sim_parts)
    hits = index._ranked(positions, sims, k)
    if check_pruning and skipped_from < len(buckets):
        floor = hits[-1].similarity
        for _, (start, stop) in buckets[skipped_from:]:
            skipped = index.similarities(query, start, stop)
            assert (skipped < floor).all(), "popcount pruning skipped a qualifying record"
    return hits


# -- persistence ----------------------------------------------------------


def _checksum(body: bytes) -> bytes:
    return hashlib.blake2b(body, digest_size=8).digest()


def _pack_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


def dumps_index(index: RetrievalIndex) -> bytes:
    p = index.params
    parts = [struct.pack("<BIBBQ", KINDS.index(p.kind), p.bits, p.radius, p.max_path_len, len(index))]
    for r in index.records:
        parts.append(_pack_str(r.id))
        parts.append(_pack_str(r.canonical_smiles))
        parts.append(_pack_str(r.description))
        parts.append(r.fingerprint.bits)
    body = b"".join(parts)
    return MAGIC + struct.pack("<H", FORMAT_VERSION) + body + _checksum(body)


class _Cursor:
    def __init__(self, data: bytes, start: int, end: int):
        self.data, self.pos, self.end = data, start, end

    def take(self, n: int) -> bytes:
        if self.pos + n > self.end:
            raise IndexFormatError("truncated", f"needed {n} bytes at offset {self.pos}")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def string(self) -> str:
        (n,) = self.unpack("<I")
        try:
            return self.take(n).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise IndexFormatError("checksum", f"undecodable text at offset {self.pos}") from exc


def _parse_body(data: bytes, end: int) -> RetrievalIndex:
    cur = _Cursor(data, 6, end)
    kind, bits, radius, max_path_len, count = cur.unpack("<BIBBQ")
    if kind >= len(KINDS):
        raise IndexFormatError("checksum", f"bad fingerprint kind {kind}")
    try:
        params = FingerprintParams(KINDS[kind], bits, radius, max_path_len)
    except FingerprintError as exc:
        raise IndexFormatError("checksum", str(exc)) from exc
    records = []
    for _ in range(count):
        pid = cur.string()
        smi = cur.string()
        desc = cur.string()
        fp = BitFingerprint.from_bytes(params, cur.take(bits // 8))
        records.append(AnnotatedPair(pid, smi, desc, fp))
    if cur.pos != end:
        raise IndexFormatError("checksum", f"{end - cur.pos} unexpected trailing bytes")
    return RetrievalIndex(params, records)


def loads_index(data: bytes) -> RetrievalIndex:
    if len(data) < 4:
        raise IndexFormatError("truncated", "file shorter than magic")
    if data[:4] != MAGIC:
        raise IndexFormatError("bad_magic", f"expected {MAGIC!r}, found {data[:4]!r}")
    if len(data) < 6:
        raise IndexFormatError("truncated", "missing version")
    (version,) = struct.unpack("<H", data[4:6])
    if version != FORMAT_VERSION:
        raise IndexFormatError("version_mismatch", f"file version {version}, expected {FORMAT_VERSION}")
    if len(data) < 6 + 16 + 8:
        raise IndexFormatError("truncated", "file shorter than header and checksum")
    end = len(data) - 8
    if _checksum(data[6:end]) != data[end:]:
        # Distinguish a cut-off file from corruption when the structure says so.
        try:
            _parse_body(data, end)
        except IndexFormatError as exc:
            if exc.reason == "truncated":
                raise
        raise IndexFormatError("checksum", "body checksum mismatch")
    return _parse_body(data, end)


def persist_index(index: RetrievalIndex, path) -> None:
    Path(path).write_bytes(dumps_index(index))


def load_index(path) -> RetrievalIndex:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read index {path}: {exc}") from exc
    return loads_index(data)
