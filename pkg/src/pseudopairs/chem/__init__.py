"""SMILES parsing, validation and canonicalization."""

from pseudopairs.chem.canon import (
    canonical_set,
    canonicalize,
    randomize_smiles,
    to_canonical_smiles,
)
from pseudopairs.chem.molecule import Atom, Bond, BondOrder, Molecule
from pseudopairs.chem.smiles import (
    DiagnosticKind,
    ParseDiagnostic,
    SmilesParseError,
    parse_smiles,
    try_parse,
)
from pseudopairs.chem.valence import is_valid

__all__ = [
    "Atom",
    "Bond",
    "BondOrder",
    "DiagnosticKind",
    "Molecule",
    "ParseDiagnostic",
    "SmilesParseError",
    "canonical_set",
    "canonicalize",
    "is_valid",
    "parse_smiles",
    "randomize_smiles",
    "to_canonical_smiles",
    "try_parse",
]
