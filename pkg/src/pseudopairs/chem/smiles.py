"""SMILES reader.

Covers the organic subset (aromatic lowercase included), bracket atoms with
isotope, chirality, hydrogen count, charge and atom class, branches, ring
closures (``1``-``9`` and ``%nn``), the bond symbols ``- = # : / \\`` and
dot-separated fragments. Errors are reported as :class:`ParseDiagnostic`
carried by :class:`SmilesParseError`; the reader never raises anything else.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from pseudopairs.chem.elements import (
    AROMATIC_BRACKET,
    AROMATIC_ORGANIC,
    MAX_ABS_CHARGE,
    ORGANIC_SUBSET,
    is_element,
)
from pseudopairs.chem.molecule import Atom, Bond, BondOrder, Molecule
from pseudopairs.errors import DataError


class DiagnosticKind(str, enum.Enum):
    UNCLOSED_RING = "unclosed_ring"
    BAD_ATOM = "bad_atom"
    BAD_CHARGE = "bad_charge"
    DANGLING_BOND = "dangling_bond"
    UNBALANCED_BRANCH = "unbalanced_branch"
    UNKNOWN_SYMBOL = "unknown_symbol"


@dataclass(frozen=True)
class ParseDiagnostic:
    byte_offset: int
    message: str
    kind: DiagnosticKind

    def __str__(self) -> str:
        return f"{self.kind.value} at byte {self.byte_offset}: {self.message}"


class SmilesParseError(DataError):
    def __init__(self, diagnostic: ParseDiagnostic, text: str = ""):
        super().__init__(str(diagnostic))
        self.diagnostic = diagnostic
        self.text = text


_BOND_SYMBOLS = {
    "-": (BondOrder.SINGLE, "none"),
    "=": (BondOrder.DOUBLE, "none"),
    "#": (BondOrder.TRIPLE, "none"),
    ":": (BondOrder.AROMATIC, "none"),
    "/": (BondOrder.SINGLE, "up"),
    "\\": (BondOrder.SINGLE, "down"),
}

_CHIRAL_CLASSES = ("TH", "AL", "SP", "TB", "OH")
_DIGITS = frozenset("0123456789")  # str.isdigit also accepts superscripts


class _Reader:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.atoms: list[Atom] = []
        self.bonds: list[Bond] = []
        self.bonded: set[tuple[int, int]] = set()

    def fail(self, kind: DiagnosticKind, message: str, pos: int | None = None):
        pos = self.pos if pos is None else pos
        offset = len(self.text[:pos].encode("utf-8"))
        raise SmilesParseError(ParseDiagnostic(offset, message, kind), self.text)

    # -- bonds -------------------------------------------------------------

    def add_bond(self, a: int, b: int, symbol: str | None, pos: int) -> None:
        if a == b:
            self.fail(DiagnosticKind.UNCLOSED_RING, "ring closure bonds an atom to itself", pos)
        key = (min(a, b), max(a, b))
        if key in self.bonded:
            self.fail(DiagnosticKind.UNCLOSED_RING, "ring closure duplicates an existing bond", pos)
        both_aromatic = self.atoms[a].aromatic and self.atoms[b].aromatic
        if symbol is None:
            order, stereo = (BondOrder.AROMATIC if both_aromatic else BondOrder.SINGLE), "none"
        else:
            order, stereo = _BOND_SYMBOLS[symbol]
            if order is BondOrder.AROMATIC and not both_aromatic:
                self.fail(DiagnosticKind.BAD_ATOM, "aromatic bond between non-aromatic atoms", pos)
        self.bonded.add(key)
        self.bonds.append(Bond(a, b, order, stereo))

    # -- atoms -------------------------------------------------------------

    def read_organic(self) -> Atom | None:
        t, p = self.text, self.pos
        for sym in ORGANIC_SUBSET:
            if t.startswith(sym, p):
                self.pos += len(sym)
                return Atom(sym)
        if t[p] in AROMATIC_ORGANIC:
            self.pos += 1
            return Atom(t[p].upper(), aromatic=True)
        return None

    def read_int(self) -> int | None:
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos] in _DIGITS:
            self.pos += 1
        return int(self.text[start : self.pos]) if self.pos > start else None

    def read_bracket(self) -> Atom:
        start = self.pos
        t = self.text
        close = t.find("]", start)
        if close == -1:
            self.fail(DiagnosticKind.BAD_ATOM, "unterminated bracket atom", start)
        self.pos += 1  # '['
        isotope = self.read_int()

        symbol, aromatic = None, False
        p = self.pos
        if p + 1 < close and t[p].isupper() and t[p + 1].islower() and is_element(t[p : p + 2]):
            symbol = t[p : p + 2]
        elif p < close and t[p].isupper() and is_element(t[p]):
            symbol = t[p]
        else:
            for sym in AROMATIC_BRACKET:
                if t.startswith(sym, p) and p + len(sym) <= close:
                    symbol, aromatic = sym.capitalize(), True
                    break
        if symbol is None:
            self.fail(DiagnosticKind.BAD_ATOM, f"unknown element in {t[start:close + 1]!r}", p)
        self.pos += len(symbol)

        chirality = None
        if t[self.pos] == "@":
            c0 = self.pos
            self.pos += 1
            if t[self.pos] == "@":
                self.pos += 1
            elif t[self.pos : self.pos + 2] in _CHIRAL_CLASSES:
                self.pos += 2
                if self.read_int() is None:
                    self.fail(DiagnosticKind.BAD_ATOM, "chirality class without number")
            chirality = t[c0 : self.pos]

        hcount = 0
        if t[self.pos] == "H":
            self.pos += 1
            n = self.read_int()
            hcount = 1 if n is None else n

        charge = 0
        if t[self.pos] in "+-":
            sign = 1 if t[self.pos] == "+" else -1
            c0 = self.pos
            self.pos += 1
            n = self.read_int()
            if n is None:
                n = 1
                while t[self.pos] == t[c0]:
                    n += 1
                    self.pos += 1
            if n > MAX_ABS_CHARGE:
                self.fail(DiagnosticKind.BAD_CHARGE, f"charge {sign * n:+d} outside ±{MAX_ABS_CHARGE}", c0)
            charge = sign * n

        atom_class = None
        if t[self.pos] == ":":
            self.pos += 1
            atom_class = self.read_int()
            if atom_class is None:
                self.fail(DiagnosticKind.BAD_ATOM, "atom class without number")

        if self.pos != close:
            self.fail(DiagnosticKind.BAD_ATOM, f"unexpected {t[self.pos]!r} in bracket atom")
        self.pos = close + 1
        return Atom(
            symbol,
            aromatic=aromatic,
            formal_charge=charge,
            isotope=isotope,
            explicit_h=hcount,
            chirality=chirality,
            atom_class=atom_class,
        )

    # -- main loop ---------------------------------------------------------

    def parse(self) -> Molecule:
        t = self.text
        if not t:
            self.fail(DiagnosticKind.UNKNOWN_SYMBOL, "empty SMILES", 0)
        prev: int | None = None
        pending: tuple[str, int] | None = None
        branches: list[int] = []
        rings: dict[int, tuple[int, str | None, int]] = {}

        while self.pos < len(t):
            c = t[self.pos]
            here = self.pos
            if c == "[" or c.isalpha():
                atom = self.read_bracket() if c == "[" else self.read_organic()
                if atom is None:
                    self.fail(DiagnosticKind.UNKNOWN_SYMBOL, f"unknown symbol {c!r}", here)
                self.atoms.append(atom)
                idx = len(self.atoms) - 1
                if prev is not None:
                    self.add_bond(prev, idx, pending[0] if pending else None, here)
                elif pending:
                    self.fail(DiagnosticKind.DANGLING_BOND, "bond symbol without a preceding atom", pending[1])
                pending = None
                prev = idx
            elif c in _BOND_SYMBOLS:
                if prev is None or pending is not None:
                    self.fail(DiagnosticKind.DANGLING_BOND, f"unexpected bond symbol {c!r}", here)
                pending = (c, here)
                self.pos += 1
            elif c == "(":
                if prev is None:
                    self.fail(DiagnosticKind.UNBALANCED_BRANCH, "branch opened before any atom", here)
                if pending is not None:
                    self.fail(DiagnosticKind.DANGLING_BOND, "bond symbol before a branch", pending[1])
                branches.append(prev)
                self.pos += 1
            elif c == ")":
                if not branches:
                    self.fail(DiagnosticKind.UNBALANCED_BRANCH, "unmatched ')'", here)
                if pending is not None:
                    self.fail(DiagnosticKind.DANGLING_BOND, "bond symbol at end of branch", pending[1])
                if t[self.pos - 1] == "(":
                    self.fail(DiagnosticKind.UNBALANCED_BRANCH, "empty branch", here)
                prev = branches.pop()
                self.pos += 1
            elif c in _DIGITS or c == "%":
                if c == "%":
                    digits = t[self.pos + 1 : self.pos + 3]
                    if len(digits) != 2 or not all(d in _DIGITS for d in digits):
                        self.fail(DiagnosticKind.UNKNOWN_SYMBOL, "'%' must be followed by two digits", here)
                    num = int(digits)
                    self.pos += 3
                else:
                    num = int(c)
                    self.pos += 1
                if prev is None:
                    self.fail(DiagnosticKind.UNCLOSED_RING, "ring closure without an atom", here)
                symbol = pending[0] if pending else None
                pending = None
                if num in rings:
                    other, open_symbol, _ = rings.pop(num)
                    if symbol and open_symbol and symbol != open_symbol:
                        self.fail(DiagnosticKind.DANGLING_BOND, f"conflicting bond symbols on ring {num}", here)
                    self.add_bond(other, prev, symbol or open_symbol, here)
                else:
                    rings[num] = (prev, symbol, here)
            elif c == ".":
                if pending is not None or prev is None:
                    self.fail(DiagnosticKind.DANGLING_BOND, "misplaced '.'", here)
                prev = None
                self.pos += 1
            else:
                self.fail(DiagnosticKind.UNKNOWN_SYMBOL, f"unknown symbol {c!r}", here)

        if pending is not None:
            self.fail(DiagnosticKind.DANGLING_BOND, "bond symbol at end of input", pending[1])
        if branches:
            self.fail(DiagnosticKind.UNBALANCED_BRANCH, "unclosed '('", len(t))
        if rings:
            num, (_, _, pos) = min(rings.items(), key=lambda kv: kv[1][2])
            self.fail(DiagnosticKind.UNCLOSED_RING, f"ring bond {num} never closed", pos)
        if prev is None:
            self.fail(DiagnosticKind.DANGLING_BOND, "trailing '.'", len(t))
        return Molecule.from_parts(self.atoms, self.bonds, t)


def parse_smiles(text: str) -> Molecule:
    """Parse SMILES text into a :class:`Molecule`.

    Raises :class:`SmilesParseError`, whose ``diagnostic`` attribute holds the
    offending byte offset and kind.
    """
    reader = _Reader(text)
    try:
        return reader.parse()
    except IndexError:
        # Running off the end inside a bracket atom.
        reader.fail(DiagnosticKind.BAD_ATOM, "truncated bracket atom", len(text))


def try_parse(text: str) -> Molecule | ParseDiagnostic:
    try:
        return parse_smiles(text)
    except SmilesParseError as exc:
        return exc.diagnostic
