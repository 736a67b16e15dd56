"""Bit and count fingerprints plus Tanimoto similarity.

Three kinds are provided:

``morgan``
    ECFP-style circular environments. The radius-0 identifier hashes
    (atomic number, degree, formal charge, hydrogen count, ring flag,
    aromatic flag). Round ``r`` hashes ``[r, own id, (bond code, neighbor id)
    pairs sorted]``. An environment whose bond set was already produced is
    dropped (lowest identifier kept within a round). Identifiers fold by
    ``id % bits``.
``path``
    Simple paths of 1..``max_path_len`` bonds, hashed on the direction
    normalized (atom code, bond code, atom code, ...) sequence. Stands in for
    RDKit's topological fingerprint.
``keys``
    The 64 structural descriptor keys in :data:`KEY_NAMES`, written to bits
    0..63. Stands in for MACCS keys (reported as "Keys FTS (MACCS substitute)").

All hashing goes through :func:`pseudopairs.hashing.hash_ints`.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from pseudopairs.chem.elements import atomic_number
from pseudopairs.chem.molecule import BondOrder, Molecule
from pseudopairs.errors import DataError
from pseudopairs.hashing import hash_ints

KINDS = ("morgan", "path", "keys")
ALLOWED_BITS = (512, 1024, 2048, 4096)
KEYS_VERSION = 1


class FingerprintError(DataError):
    pass


@dataclass(frozen=True)
class FingerprintParams:
    kind: str = "morgan"
    bits: int = 2048
    radius: int = 2
    max_path_len: int = 7

    def __post_init__(self):
        if self.kind not in KINDS:
            raise FingerprintError(f"unknown fingerprint kind {self.kind!r}")
        if self.bits not in ALLOWED_BITS:
            raise FingerprintError(f"bits must be one of {ALLOWED_BITS}, got {self.bits}")
        if not 0 <= self.radius <= 4:
            raise FingerprintError(f"radius must be in [0, 4], got {self.radius}")
        if not 1 <= self.max_path_len <= 7:
            raise FingerprintError(f"max_path_len must be in [1, 7], got {self.max_path_len}")


MORGAN = FingerprintParams("morgan")
PATH = FingerprintParams("path")
KEYS = FingerprintParams("keys")


@dataclass(frozen=True)
class BitFingerprint:
    params: FingerprintParams
    bits: bytes  # bit i lives in byte i // 8 at position i % 8 (LSB first)
    popcount: int

    @classmethod
    def from_indices(cls, params: FingerprintParams, indices) -> BitFingerprint:
        value = 0
        for i in set(indices):
            value |= 1 << i
        return cls.from_int(params, value)

    @classmethod
    def from_int(cls, params: FingerprintParams, value: int) -> BitFingerprint:
        if value >> params.bits:
            raise FingerprintError("bit set beyond fingerprint width")
        return cls(params, value.to_bytes(params.bits // 8, "little"), value.bit_count())

    @classmethod
    def from_bytes(cls, params: FingerprintParams, raw: bytes) -> BitFingerprint:
        if len(raw) * 8 != params.bits:
            raise FingerprintError(f"expected {params.bits // 8} bytes, got {len(raw)}")
        return cls(params, bytes(raw), int.from_bytes(raw, "little").bit_count())

    def to_int(self) -> int:
        return int.from_bytes(self.bits, "little")

    @property
    def width(self) -> int:
        return len(self.bits) * 8

    def on_bits(self) -> list[int]:
        v = self.to_int()
        return [i for i in range(self.width) if v >> i & 1]

    def as_words(self) -> np.ndarray:
        return np.frombuffer(self.bits, dtype="<u8")


@dataclass(frozen=True)
class CountFingerprint:
    params: FingerprintParams
    counts: tuple[int, ...]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float)


def tanimoto(a: BitFingerprint, b: BitFingerprint) -> float:
    """``|a & b| / |a | b|``, or 0.0 when both fingerprints are empty."""
    if a.params != b.params:
        raise FingerprintError(f"fingerprint parameters differ: {a.params} vs {b.params}")
    x, y = a.to_int(), b.to_int()
    union = (x | y).bit_count()
    if union == 0:
        return 0.0
    return (x & y).bit_count() / union


# -- morgan ---------------------------------------------------------------


def _atom_invariant(mol: Molecule, i: int) -> int:
    a = mol.atoms[i]
    return hash_ints(
        (
            atomic_number(a.element),
            mol.degree(i),
            a.formal_charge,
            mol.hydrogen_count(i),
            int(a.ring_member),
            int(a.aromatic),
        )
    )


def morgan_identifiers(mol: Molecule, radius: int) -> tuple[list[int], list[int]]:
    """Return (deduplicated identifiers, all per-atom identifiers over all rounds)."""
    n = len(mol)
    ids = [_atom_invariant(mol, i) for i in range(n)]
    envs: list[frozenset[int]] = [frozenset()] * n
    kept = list(ids)
    every = list(ids)
    seen: set[frozenset[int]] = {frozenset()}
    for r in range(1, radius + 1):
        new_ids, new_envs = [], []
        for i in range(n):
            pairs = sorted((int(b.order), ids[j]) for j, b in mol.neighbors(i))
            flat = [r, ids[i]]
            for order, nid in pairs:
                flat.append(order)
                flat.append(nid)
            new_ids.append(hash_ints(flat))
            env = set(envs[i])
            for j, bi in mol.adjacency[i]:
                env.add(bi)
                env |= envs[j]
            new_envs.append(frozenset(env))
        for nid, env in sorted(zip(new_ids, new_envs), key=lambda t: (t[0], sorted(t[1]))):
            if env in seen:
                continue
            seen.add(env)
            kept.append(nid)
        every.extend(new_ids)
        ids, envs = new_ids, new_envs
    return kept, every


# -- path -----------------------------------------------------------------


def _atom_code(mol: Molecule, i: int) -> int:
    a = mol.atoms[i]
    return atomic_number(a.element) * 2 + int(a.aromatic)


def path_identifiers(mol: Molecule, max_len: int) -> set[int]:
    codes = [_atom_code(mol, i) for i in range(len(mol))]
    out: set[int] = set()
    for start in range(len(mol)):
        # stack of (atom path, bond code path)
        stack = [([start], [])]
        while stack:
            path, bonds = stack.pop()
            if bonds and start < path[-1]:
                seq = [codes[path[0]]]
                for bcode, atom in zip(bonds, path[1:]):
                    seq.append(bcode)
                    seq.append(codes[atom])
                rev = seq[::-1]
                canon = min(seq, rev)
                out.add(hash_ints([len(bonds), *canon]))
            if len(bonds) == max_len:
                continue
            tail = path[-1]
            for j, b in mol.neighbors(tail):
                if j not in path:
                    stack.append((path + [j], bonds + [int(b.order)]))
    return out


# -- descriptor keys ------------------------------------------------------

_HALOGENS = frozenset({"F", "Cl", "Br", "I"})
_COMMON = frozenset({"H", "B", "C", "N", "O", "F", "Si", "P", "S", "Cl", "Se", "Br", "I"})


class _KeyContext:
    def __init__(self, mol: Molecule):
        self.mol = mol
        heavy = [i for i, a in enumerate(mol.atoms) if a.element != "H"]
        self.heavy = heavy
        self.elements = Counter(mol.atoms[i].element for i in heavy)
        self.h = mol.hydrogen_counts

    def count(self, el: str) -> int:
        return self.elements.get(el, 0)

    def atoms(self, el: str | None = None):
        for i in self.heavy:
            if el is None or self.mol.atoms[i].element == el:
                yield i

    def bonded(self, el_a: str, el_b: str, order: BondOrder) -> bool:
        for b in self.mol.bonds:
            if b.order is not order:
                continue
            pair = {self.mol.atoms[b.begin].element, self.mol.atoms[b.end].element}
            if pair == {el_a, el_b}:
                return True
        return False

    def nbr_elements(self, i: int, order: BondOrder | None = None) -> list[str]:
        return [
            self.mol.atoms[j].element
            for j, b in self.mol.neighbors(i)
            if order is None or b.order is order
        ]

    def has_carbonyl_with(self, el: str, need_h: bool = False) -> bool:
        """C(=O) bonded by a single bond to ``el`` (optionally carrying H)."""
        for i in self.atoms("C"):
            if "O" not in self.nbr_elements(i, BondOrder.DOUBLE):
                continue
            for j, b in self.mol.neighbors(i):
                if b.order is BondOrder.SINGLE and self.mol.atoms[j].element == el:
                    if not need_h or self.h[j] > 0:
                        return True
        return False


def _ring_hetero(c: _KeyContext) -> bool:
    return any(c.mol.atoms[i].ring_member and c.mol.atoms[i].element != "C" for i in c.heavy)


def _aromatic_halogen(c: _KeyContext) -> bool:
    return any(
        c.mol.atoms[i].aromatic and any(e in _HALOGENS for e in c.nbr_elements(i))
        for i in c.heavy
    )


def _nitro_like(c: _KeyContext) -> bool:
    return any(c.nbr_elements(i).count("O") >= 2 for i in c.atoms("N"))


_KEY_DEFS = [
    ("has_B", lambda c: c.count("B") > 0),
    ("has_N", lambda c: c.count("N") > 0),
    ("has_O", lambda c: c.count("O") > 0),
    ("has_F", lambda c: c.count("F") > 0),
    ("has_P", lambda c: c.count("P") > 0),
    ("has_S", lambda c: c.count("S") > 0),
    ("has_Cl", lambda c: c.count("Cl") > 0),
    ("has_Br", lambda c: c.count("Br") > 0),
    ("has_I", lambda c: c.count("I") > 0),
    ("has_Si", lambda c: c.count("Si") > 0),
    ("has_uncommon_element", lambda c: any(e not in _COMMON for e in c.elements)),
    ("has_Se", lambda c: c.count("Se") > 0),
    ("C_ge_2", lambda c: c.count("C") >= 2),
    ("C_ge_4", lambda c: c.count("C") >= 4),
    ("C_ge_8", lambda c: c.count("C") >= 8),
    ("C_ge_16", lambda c: c.count("C") >= 16),
    ("N_ge_2", lambda c: c.count("N") >= 2),
    ("N_ge_3", lambda c: c.count("N") >= 3),
    ("O_ge_2", lambda c: c.count("O") >= 2),
    ("O_ge_3", lambda c: c.count("O") >= 3),
    ("O_ge_4", lambda c: c.count("O") >= 4),
    ("O_ge_6", lambda c: c.count("O") >= 6),
    ("halogen_ge_1", lambda c: sum(c.count(h) for h in _HALOGENS) >= 1),
    ("halogen_ge_2", lambda c: sum(c.count(h) for h in _HALOGENS) >= 2),
    ("rings_ge_1", lambda c: c.mol.ring_count >= 1),
    ("rings_ge_2", lambda c: c.mol.ring_count >= 2),
    ("rings_ge_3", lambda c: c.mol.ring_count >= 3),
    ("rings_ge_4", lambda c: c.mol.ring_count >= 4),
    ("aromatic_atom", lambda c: any(c.mol.atoms[i].aromatic for i in c.heavy)),
    ("aromatic_atoms_ge_6", lambda c: sum(c.mol.atoms[i].aromatic for i in c.heavy) >= 6),
    ("aromatic_atoms_ge_10", lambda c: sum(c.mol.atoms[i].aromatic for i in c.heavy) >= 10),
    (
        "aromatic_heteroatom",
        lambda c: any(c.mol.atoms[i].aromatic and c.mol.atoms[i].element != "C" for i in c.heavy),
    ),
    ("positive_charge", lambda c: any(a.formal_charge > 0 for a in c.mol.atoms)),
    ("negative_charge", lambda c: any(a.formal_charge < 0 for a in c.mol.atoms)),
    (
        "both_charge_signs",
        lambda c: any(a.formal_charge > 0 for a in c.mol.atoms)
        and any(a.formal_charge < 0 for a in c.mol.atoms),
    ),
    ("isotope_label", lambda c: any(a.isotope is not None for a in c.mol.atoms)),
    ("double_bond", lambda c: any(b.order is BondOrder.DOUBLE for b in c.mol.bonds)),
    ("triple_bond", lambda c: any(b.order is BondOrder.TRIPLE for b in c.mol.bonds)),
    ("C=O", lambda c: c.bonded("C", "O", BondOrder.DOUBLE)),
    ("C=N", lambda c: c.bonded("C", "N", BondOrder.DOUBLE)),
    ("C#N", lambda c: c.bonded("C", "N", BondOrder.TRIPLE)),
    ("nitro_like_N", _nitro_like),
    ("S=O", lambda c: c.bonded("S", "O", BondOrder.DOUBLE)),
    ("P=O", lambda c: c.bonded("P", "O", BondOrder.DOUBLE)),
    ("hydroxyl", lambda c: any(c.h[i] > 0 and c.mol.degree(i) >= 1 for i in c.atoms("O"))),
    (
        "ether_O",
        lambda c: any(
            c.h[i] == 0 and not c.mol.atoms[i].aromatic and c.nbr_elements(i, BondOrder.SINGLE) == ["C", "C"]
            for i in c.atoms("O")
        ),
    ),
    ("NH2", lambda c: any(c.h[i] == 2 for i in c.atoms("N"))),
    ("NH", lambda c: any(c.h[i] == 1 for i in c.atoms("N"))),
    (
        "tertiary_N",
        lambda c: any(
            c.mol.degree(i) == 3 and not c.mol.atoms[i].aromatic and c.mol.atoms[i].formal_charge == 0
            and all(b.order is BondOrder.SINGLE for _, b in c.mol.neighbors(i))
            for i in c.atoms("N")
        ),
    ),
    ("amide", lambda c: c.has_carbonyl_with("N")),
    ("carboxyl_or_ester", lambda c: c.has_carbonyl_with("O")),
    ("carboxylic_acid", lambda c: c.has_carbonyl_with("O", need_h=True)),
    ("methyl", lambda c: any(c.h[i] == 3 and c.mol.degree(i) == 1 for i in c.atoms("C"))),
    (
        "chain_CH2",
        lambda c: any(
            c.h[i] == 2 and c.mol.degree(i) == 2 and not c.mol.atoms[i].ring_member for i in c.atoms("C")
        ),
    ),
    ("quaternary_C", lambda c: any(c.mol.degree(i) == 4 for i in c.atoms("C"))),
    ("branched_C", lambda c: any(c.mol.degree(i) == 3 for i in c.atoms("C"))),
    ("ring_heteroatom", _ring_hetero),
    (
        "nonaromatic_C=C",
        lambda c: any(
            b.order is BondOrder.DOUBLE
            and c.mol.atoms[b.begin].element == "C"
            and c.mol.atoms[b.end].element == "C"
            for b in c.mol.bonds
        ),
    ),
    ("multi_fragment", lambda c: len(c.mol.components) > 1),
    ("heavy_ge_10", lambda c: len(c.heavy) >= 10),
    ("heavy_ge_20", lambda c: len(c.heavy) >= 20),
    ("heavy_ge_40", lambda c: len(c.heavy) >= 40),
    ("S_two_neighbors", lambda c: any(c.mol.degree(i) >= 2 for i in c.atoms("S"))),
    ("aromatic_halogen", _aromatic_halogen),
]

KEY_NAMES = tuple(name for name, _ in _KEY_DEFS)
assert len(KEY_NAMES) == 64


def key_bits(mol: Molecule) -> list[int]:
    ctx = _KeyContext(mol)
    return [i for i, (_, pred) in enumerate(_KEY_DEFS) if pred(ctx)]


# -- public API -----------------------------------------------------------


def compute_fingerprint(mol: Molecule, params: FingerprintParams = MORGAN) -> BitFingerprint:
    if params.kind == "morgan":
        ids, _ = morgan_identifiers(mol, params.radius)
        idx = [x % params.bits for x in ids]
    elif params.kind == "path":
        idx = [x % params.bits for x in path_identifiers(mol, params.max_path_len)]
    else:
        idx = key_bits(mol)
    return BitFingerprint.from_indices(params, idx)


def compute_count_fingerprint(
    mol: Molecule, params: FingerprintParams = MORGAN, dim: int = 64
) -> CountFingerprint:
    """Folded environment counts (all atoms, all rounds, no dedup)."""
    if dim < 1:
        raise FingerprintError("dimension must be positive")
    counts = [0] * dim
    if params.kind == "morgan":
        _, ids = morgan_identifiers(mol, params.radius)
    elif params.kind == "path":
        ids = path_identifiers(mol, params.max_path_len)
    else:
        ids = key_bits(mol)
    for x in ids:
        counts[x % dim] += 1
    return CountFingerprint(params, tuple(counts))
