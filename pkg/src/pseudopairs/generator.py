"""End-to-end pseudo-description generation.

For every input SMILES: canonicalize, drop it if excluded, fingerprint,
retrieve the top-k annotated neighbors, draw one exemplar, render the prompt,
call the chat model, clean the reply and append one JSON line to the output.

The output is append-only JSONL. On restart, inputs whose canonical SMILES
already have a record are skipped, so a killed run can simply be relaunched.
A torn final line left by a crash is cut off before appending.
"""

from __future__ import annotations

import collections
import json
import logging
import os
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Callable, Iterable

from pseudopairs.chem import (
    ParseDiagnostic,
    SmilesParseError,
    canonical_set,
    parse_smiles,
    to_canonical_smiles,
)
from pseudopairs.errors import DataError
from pseudopairs.exemplar import SelectionPolicy, select_exemplar
from pseudopairs.fingerprints import compute_fingerprint
from pseudopairs.llm_client import AuthError, ChatClient, ChatMessage, LLMError
from pseudopairs.prompting import PromptTemplate, render_prompt
from pseudopairs.retrieval import DEFAULT_K, RetrievalIndex, top_k

log = logging.getLogger(__name__)

POSTPROCESS_VERSION = 1
MIN_WORDS = 20


@dataclass(frozen=True)
class GenerationRecord:
    target_canonical_smiles: str
    description: str
    exemplar_pair_id: str | None
    exemplar_similarity: float | None
    prompt_hash: str | None
    model_name: str
    created_unix_ms: int
    status: str  # "kept" | "rejected"
    reject_reason: str | None = None
    input_ordinal: int = -1

    def to_json(self) -> str:
        return json.dumps(asdict(self), ensure_ascii=False)

    @classmethod
    def from_json(cls, line: str) -> GenerationRecord:
        doc = json.loads(line)
        check_record(doc)
        return cls(**doc)


_RECORD_TYPES = {
    "target_canonical_smiles": (str,),
    "description": (str,),
    "exemplar_pair_id": (str, type(None)),
    "exemplar_similarity": (float, int, type(None)),
    "prompt_hash": (str, type(None)),
    "model_name": (str,),
    "created_unix_ms": (int,),
    "status": (str,),
    "reject_reason": (str, type(None)),
    "input_ordinal": (int,),
}


def check_record(doc: dict) -> None:
    """Raise :class:`DataError` unless ``doc`` matches the record schema."""
    if not isinstance(doc, dict):
        raise DataError("record is not a JSON object")
    names = {f.name for f in fields(GenerationRecord)}
    if set(doc) != names:
        raise DataError(f"record keys {sorted(doc)} do not match schema")
    for key, types in _RECORD_TYPES.items():
        if not isinstance(doc[key], types) or isinstance(doc[key], bool):
            raise DataError(f"record field {key} has type {type(doc[key]).__name__}")
    if doc["status"] not in ("kept", "rejected"):
        raise DataError(f"bad status {doc['status']!r}")
    sim = doc["exemplar_similarity"]
    if sim is not None and not 0.0 <= sim <= 1.0:
        raise DataError("exemplar_similarity outside [0, 1]")
    if doc["status"] == "kept" and len(doc["description"].split()) < MIN_WORDS:
        raise DataError("kept record with a description under the word minimum")


# -- post-processing ------------------------------------------------------

_FENCE = re.compile(r"```[^\n`]*\n?(.*?)```", re.S)
_HEADING = re.compile(r"^\s*#{1,6}\s*", re.M)
_BULLET = re.compile(r"^\s*(?:[-*+]|\d+[.)])\s+", re.M)
_EMPHASIS = re.compile(r"(\*\*|__|\*|`)")
_SENTENCE_START = re.compile(r"[.!?]\s+(?=[A-Z0-9(\[])")


@dataclass(frozen=True)
class PostProcessed:
    description: str
    reject_reason: str | None = None

    @property
    def ok(self) -> bool:
        return self.reject_reason is None


def post_process(raw_text: str, target_smiles: str) -> PostProcessed:
    """Clean a raw completion; rules run in a fixed order.

    1. unwrap code fences, drop markdown headings/bullets/emphasis, strip
    2. delete verbatim occurrences of the target SMILES
    3. collapse runs of whitespace
    4. if the reply opened with the SMILES, drop the subjectless fragment up to
       the next sentence start
    5. reject if empty, or if shorter than 20 words
    """
    text = _FENCE.sub(lambda m: m.group(1), raw_text)
    text = text.replace("```", "")
    text = _HEADING.sub("", text)
    text = _BULLET.sub("", text)
    text = _EMPHASIS.sub("", text)
    text = text.strip()

    led_with_echo = bool(target_smiles) and text.startswith(target_smiles)
    if target_smiles:
        text = text.replace(target_smiles, " ")
    text = " ".join(text.split())

    if led_with_echo:
        m = _SENTENCE_START.search(text)
        text = text[m.end():] if m else ""

    if not text:
        return PostProcessed("", "empty")
    if len(text.split()) < MIN_WORDS:
        return PostProcessed(text, "too_short")
    return PostProcessed(text)


# -- output file ----------------------------------------------------------


def read_existing(out_path) -> list[GenerationRecord]:
    """Load records from ``out_path``, truncating a torn final line in place."""
    path = Path(out_path)
    if not path.exists():
        return []
    data = path.read_bytes()
    if data and not data.endswith(b"\n"):
        cut = data.rfind(b"\n") + 1
        log.warning("dropping torn final line (%d bytes) in %s", len(data) - cut, path)
        with open(path, "r+b") as fh:
            fh.truncate(cut)
        data = data[:cut]
    records = []
    for n, line in enumerate(data.decode("utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            records.append(GenerationRecord.from_json(line))
        except (ValueError, TypeError) as exc:
            raise DataError(f"{path}:{n}: invalid record: {exc}") from exc
    return records


@dataclass
class GenerationSummary:
    total_inputs: int = 0
    kept: int = 0
    rejected: int = 0
    skipped_excluded: int = 0
    skipped_existing: int = 0
    skipped_duplicate: int = 0

    @property
    def written(self) -> int:
        return self.kept + self.rejected


def _wall_ms() -> int:
    return int(time.time() * 1000)


def generate_pairs(
    inputs: Iterable[str],
    index: RetrievalIndex,
    template: PromptTemplate,
    policy: SelectionPolicy,
    client: ChatClient,
    exclusion_set: Iterable[str],
    out_path,
    k: int = DEFAULT_K,
    workers: int = 4,
    max_prompt_chars: int | None = None,
    now_ms: Callable[[int], int] | None = None,
    on_record: Callable[[GenerationRecord], None] | None = None,
    fsync: bool = False,
) -> GenerationSummary:
    """Run the generation loop; see the module docstring.

    ``now_ms(ordinal)`` stamps ``created_unix_ms`` (wall clock by default).
    ``on_record`` is called after each line is durably appended.
    """
    stamp = now_ms or (lambda ordinal: _wall_ms())
    excluded = canonical_set(exclusion_set)
    existing = {r.target_canonical_smiles for r in read_existing(out_path)}
    summary = GenerationSummary()
    model = client.config.model_name

    # Canonicalize up front so skipped inputs never reach the model.
    jobs: list[tuple[int, str, object]] = []
    claimed = set(existing)
    for ordinal, raw in enumerate(inputs):
        summary.total_inputs += 1
        raw = raw.strip()
        try:
            mol = parse_smiles(raw)
            canon = to_canonical_smiles(mol)
        except SmilesParseError as exc:
            mol, canon = exc.diagnostic, raw
        if canon in excluded:
            summary.skipped_excluded += 1
            log.info("skipping excluded input %d (%s)", ordinal, canon)
            continue
        if canon in existing:
            summary.skipped_existing += 1
            continue
        if canon in claimed:
            summary.skipped_duplicate += 1
            continue
        claimed.add(canon)
        jobs.append((ordinal, canon, mol))

    def work(job) -> GenerationRecord:
        ordinal, canon, mol = job

        def rejected(reason, description="", hit=None, phash=None):
            return GenerationRecord(
                canon, description, hit.pair_id if hit else None, hit.similarity if hit else None,
                phash, model, stamp(ordinal), "rejected", reason, ordinal,
            )

        if isinstance(mol, ParseDiagnostic):
            return rejected(f"unparseable: {mol}")
        hits = top_k(index, compute_fingerprint(mol, index.params), k)
        hit = select_exemplar(hits, policy, counter=ordinal)
        prompt = render_prompt(template, canon, index.get(hit.pair_id), max_prompt_chars)
        messages = [ChatMessage("system", prompt.system_text), ChatMessage("user", prompt.user_text)]
        try:
            result = client.complete(messages)
        except AuthError:
            raise
        except LLMError as exc:
            return rejected(f"remote_error: {exc}", hit=hit, phash=prompt.content_hash)
        cleaned = post_process(result.text, canon)
        if not cleaned.ok:
            return rejected(cleaned.reject_reason, cleaned.description, hit, prompt.content_hash)
        return GenerationRecord(
            canon, cleaned.description, hit.pair_id, hit.similarity, prompt.content_hash,
            model, stamp(ordinal), "kept", None, ordinal,
        )

    path = Path(out_path)
    try:
        fh = open(path, "a", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc}") from exc
    window = max(1, workers) * 4
    with fh, ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        pending: collections.deque = collections.deque()
        queue = iter(jobs)
        try:
            while True:
                while len(pending) < window:
                    job = next(queue, None)
                    if job is None:
                        break
                    pending.append(pool.submit(work, job))
                if not pending:
                    break
                record = pending.popleft().result()
                fh.write(record.to_json() + "\n")
                fh.flush()
                if fsync:
                    os.fsync(fh.fileno())
                if record.status == "kept":
                    summary.kept += 1
                else:
                    summary.rejected += 1
                if on_record is not None:
                    on_record(record)
        except BaseException:
            for fut in pending:
                fut.cancel()
            raise
    log.info("generation done: %s", summary)
    return summary
