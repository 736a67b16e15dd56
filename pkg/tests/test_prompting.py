from dataclasses import replace

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pseudopairs.prompting import (
    DEFAULT_TEMPLATE,
    TRUNCATION_MARKER,
    TemplateError,
    dump_template,
    load_template,
    render_prompt,
    validate_template,
)
from pseudopairs.retrieval import AnnotatedPair

EX = AnnotatedPair("db1", "CC(=O)O", "The molecule is acetic acid. It is a simple carboxylic acid. It is found in vinegar.")
TARGET = "c1ccccc1N"


def test_default_is_valid():
    assert validate_template(DEFAULT_TEMPLATE) == []


def test_missing_placeholder_named():
    t = replace(DEFAULT_TEMPLATE, few_shot_block="SMILES: {EX_SMILES}")
    problems = validate_template(t)
    assert any("{EX_DESC}" in p for p in problems)


def test_duplicate_target_placeholder():
    t = replace(DEFAULT_TEMPLATE, target_block="{TARGET_SMILES} {TARGET_SMILES}")
    assert any("{TARGET_SMILES}" in p for p in validate_template(t))


def test_misplaced_and_empty():
    t = replace(DEFAULT_TEMPLATE, task_description="describe {TARGET_SMILES}", output_control="  ")
    problems = validate_template(t)
    assert any("task_description" in p for p in problems)
    assert any("output_control is empty" in p for p in problems)
    with pytest.raises(TemplateError):
        render_prompt(t, TARGET, EX)


def test_render_contents_and_order():
    p = render_prompt(DEFAULT_TEMPLATE, TARGET, EX)
    assert p.system_text == DEFAULT_TEMPLATE.role_definition
    assert p.user_text.count(EX.canonical_smiles) == 1
    assert p.user_text.count(EX.description) == 1
    assert p.user_text.count(TARGET) == 1
    positions = [
        p.user_text.index(DEFAULT_TEMPLATE.task_description),
        p.user_text.index(EX.description),
        p.user_text.index(DEFAULT_TEMPLATE.output_control),
        p.user_text.index(TARGET),
    ]
    assert positions == sorted(positions)
    assert not p.truncated


def test_hash_deterministic_and_sensitive():
    a = render_prompt(DEFAULT_TEMPLATE, TARGET, EX)
    assert a.content_hash == render_prompt(DEFAULT_TEMPLATE, TARGET, EX).content_hash
    assert a.content_hash != render_prompt(DEFAULT_TEMPLATE, "CCCC", EX).content_hash
    assert len(a.content_hash) == 16


def test_empty_target():
    with pytest.raises(TemplateError):
        render_prompt(DEFAULT_TEMPLATE, "", EX)


def test_budget_truncates_at_sentence():
    full = render_prompt(DEFAULT_TEMPLATE, TARGET, EX)
    budget = len(full.system_text) + len(full.user_text) - 10
    p = render_prompt(DEFAULT_TEMPLATE, TARGET, EX, max_chars=budget)
    assert p.truncated
    assert len(p.system_text) + len(p.user_text) <= budget
    assert "It is a simple carboxylic acid." + TRUNCATION_MARKER in p.user_text
    assert "vinegar" not in p.user_text


def test_budget_too_small():
    with pytest.raises(TemplateError):
        render_prompt(DEFAULT_TEMPLATE, TARGET, EX, max_chars=50)


@given(st.integers(0, 400))
def test_budget_never_exceeded(slack):
    full = render_prompt(DEFAULT_TEMPLATE, TARGET, EX)
    overhead = len(full.system_text) + len(full.user_text) - len(EX.description)
    budget = overhead + len(TRUNCATION_MARKER) + slack
    p = render_prompt(DEFAULT_TEMPLATE, TARGET, EX, max_chars=budget)
    assert len(p.system_text) + len(p.user_text) <= budget


def test_file_round_trip(tmp_path):
    path = tmp_path / "t.txt"
    path.write_text(dump_template(DEFAULT_TEMPLATE), encoding="utf-8")
    assert load_template(path) == DEFAULT_TEMPLATE


def test_file_missing_section(tmp_path):
    path = tmp_path / "t.txt"
    path.write_text("## ROLE\nx\n## TASK\ny\n", encoding="utf-8")
    with pytest.raises(TemplateError):
        load_template(path)
