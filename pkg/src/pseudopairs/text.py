"""Tokenization shared by corpus statistics and text metrics."""

from __future__ import annotations

import re

TOKEN_RE = re.compile(r"\w+|[^\w\s]")
_SENTENCE_END = re.compile(r"[.!?](?=\s|$)")


def tokenize(text: str, lowercase: bool = False) -> list[str]:
    """Word-character runs and single punctuation marks."""
    if lowercase:
        text = text.lower()
    return TOKEN_RE.findall(text)


def words(text: str) -> list[str]:
    return text.split()


def sentences(text: str) -> list[str]:
    """Split after ``.``, ``!`` or ``?`` followed by whitespace or end of text."""
    parts, start = [], 0
    for m in _SENTENCE_END.finditer(text):
        parts.append(text[start : m.end()])
        start = m.end()
    parts.append(text[start:])
    return [p.strip() for p in parts if p.strip()]
