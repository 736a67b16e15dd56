"""Four-part generation prompt: role, task, one-shot example, output control.

The role definition becomes the system message. The user message is the task
description, the filled-in example block, the output control and the target
block, joined by blank lines in that order.

Template files are UTF-8 text split by ``## ROLE``, ``## TASK``,
``## FEWSHOT``, ``## OUTPUT`` and ``## TARGET`` header lines.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from pathlib import Path

from pseudopairs.errors import DataError
from pseudopairs.retrieval import AnnotatedPair

EX_SMILES = "{EX_SMILES}"
EX_DESC = "{EX_DESC}"
TARGET_SMILES = "{TARGET_SMILES}"
PLACEHOLDERS = (EX_SMILES, EX_DESC, TARGET_SMILES)
TRUNCATION_MARKER = " [...]"

_SECTIONS = {
    "ROLE": "role_definition",
    "TASK": "task_description",
    "FEWSHOT": "few_shot_block",
    "OUTPUT": "output_control",
    "TARGET": "target_block",
}
# block -> placeholders it must contain exactly once
_REQUIRED = {
    "few_shot_block": (EX_SMILES, EX_DESC),
    "target_block": (TARGET_SMILES,),
}


class TemplateError(DataError):
    pass


@dataclass(frozen=True)
class PromptTemplate:
    role_definition: str
    task_description: str
    few_shot_block: str
    output_control: str
    target_block: str


@dataclass(frozen=True)
class RenderedPrompt:
    system_text: str
    user_text: str
    content_hash: str
    truncated: bool = False


DEFAULT_TEMPLATE = PromptTemplate(
    role_definition=(
        "You are an expert chemist who writes concise, factual descriptions of molecules "
        "in the style of curated chemical database annotations."
    ),
    task_description=(
        "Write a description of the molecule given as a SMILES string at the end of this "
        "message. Cover its structural class, notable functional groups and rings, and its "
        "likely properties, biological roles or applications."
    ),
    few_shot_block=(
        "Here is an annotated molecule that is structurally similar to the target. Use it "
        "as reference material.\nSMILES: {EX_SMILES}\nDescription: {EX_DESC}"
    ),
    output_control=(
        "Answer with a single paragraph of plain prose that starts with \"The molecule is\". "
        "Do not repeat the SMILES string, do not use lists, headings or code blocks, and do "
        "not add any commentary before or after the description."
    ),
    target_block="Target SMILES: {TARGET_SMILES}",
)


def validate_template(t: PromptTemplate) -> list[str]:
    """Diagnostics for ``t``; an empty list means the template is valid."""
    problems = []
    for name in _SECTIONS.values():
        block = getattr(t, name)
        if not block.strip():
            problems.append(f"{name} is empty")
        required = _REQUIRED.get(name, ())
        for ph in PLACEHOLDERS:
            n = block.count(ph)
            if ph in required and n != 1:
                problems.append(f"{name} must contain {ph} exactly once (found {n})")
            elif ph not in required and n:
                problems.append(f"{name} must not contain {ph}")
    return problems


def load_template(path) -> PromptTemplate:
    text = Path(path).read_text(encoding="utf-8")
    blocks: dict[str, list[str]] = {}
    current = None
    for line in text.splitlines():
        m = re.fullmatch(r"##\s*([A-Z]+)\s*", line)
        if m and m.group(1) in _SECTIONS:
            current = _SECTIONS[m.group(1)]
            if current in blocks:
                raise TemplateError(f"duplicate section ## {m.group(1)}")
            blocks[current] = []
        elif current is not None:
            blocks[current].append(line)
        elif line.strip():
            raise TemplateError(f"text before the first section header: {line!r}")
    missing = [f"## {k}" for k, v in _SECTIONS.items() if v not in blocks]
    if missing:
        raise TemplateError(f"template missing sections: {', '.join(missing)}")
    return PromptTemplate(**{k: "\n".join(v).strip() for k, v in blocks.items()})


def dump_template(t: PromptTemplate) -> str:
    return "\n\n".join(f"## {head}\n{getattr(t, name)}" for head, name in _SECTIONS.items()) + "\n"


def prompt_hash(system_text: str, user_text: str) -> str:
    h = hashlib.blake2b(digest_size=8)
    h.update(system_text.encode("utf-8"))
    h.update(b"\x00")
    h.update(user_text.encode("utf-8"))
    return h.hexdigest()


def _truncate_at_sentence(text: str, limit: int) -> str:
    if limit <= 0:
        return ""
    cut = text[:limit]
    ends = [m.end() for m in re.finditer(r"[.!?](?=\s|$)", cut)]
    return cut[: ends[-1]] if ends else ""


def render_prompt(
    t: PromptTemplate,
    target_smiles: str,
    exemplar: AnnotatedPair,
    max_chars: int | None = None,
) -> RenderedPrompt:
    """Fill ``t`` for one target and exemplar.

    When ``max_chars`` is set and the prompt is too long, the exemplar
    description is cut back to a sentence boundary and marked with
    :data:`TRUNCATION_MARKER`; the result then has ``truncated=True``.
    """
    problems = validate_template(t)
    if problems:
        raise TemplateError("; ".join(problems))
    if not target_smiles:
        raise TemplateError("empty target SMILES")

    def build(desc: str) -> tuple[str, str]:
        few_shot = t.few_shot_block.replace(EX_SMILES, exemplar.canonical_smiles).replace(EX_DESC, desc)
        target = t.target_block.replace(TARGET_SMILES, target_smiles)
        user = "\n\n".join((t.task_description, few_shot, t.output_control, target))
        return t.role_definition, user

    desc = exemplar.description
    system, user = build(desc)
    truncated = False
    if max_chars is not None and len(system) + len(user) > max_chars:
        overhead = len(system) + len(user) - len(desc)
        short = _truncate_at_sentence(desc, max_chars - overhead - len(TRUNCATION_MARKER))
        system, user = build(short + TRUNCATION_MARKER)
        truncated = True
        if len(system) + len(user) > max_chars:
            raise TemplateError(f"prompt exceeds {max_chars} characters even without the exemplar text")
    return RenderedPrompt(system, user, prompt_hash(system, user), truncated)
