"""Valence-based validity check."""

from __future__ import annotations

from pseudopairs.chem.elements import CHARGE_ADJUSTED, MAX_VALENCE
from pseudopairs.chem.molecule import Molecule
from pseudopairs.chem.smiles import SmilesParseError, parse_smiles


def max_valence(element: str, charge: int) -> int | None:
    base = MAX_VALENCE.get(element)
    if base is None:
        return None
    if element in CHARGE_ADJUSTED:
        base += abs(charge)
    return base


def valence_problems(mol: Molecule) -> list[str]:
    problems = []
    for i, atom in enumerate(mol.atoms):
        limit = max_valence(atom.element, atom.formal_charge)
        if limit is None:
            continue
        used = mol.bond_order_sum(i) + mol.hydrogen_count(i)
        if used > limit:
            problems.append(f"atom {i} ({atom.element}) valence {used} exceeds {limit}")
    return problems


def is_valid(text: str) -> tuple[bool, str]:
    """Return ``(ok, reason)``; ``reason`` is empty when ``ok``."""
    try:
        mol = parse_smiles(text)
    except SmilesParseError as exc:
        return False, str(exc.diagnostic)
    problems = valence_problems(mol)
    if problems:
        return False, "; ".join(problems)
    return True, ""
