"""Random valid molecules and templated descriptions for fixtures and benchmarks."""

from __future__ import annotations

import random

from pseudopairs.chem import Atom, Bond, BondOrder, Molecule, to_canonical_smiles
from pseudopairs.chem.valence import valence_problems

_ELEMENTS = ["C"] * 65 + ["N"] * 12 + ["O"] * 12 + ["S"] * 3 + ["F"] * 3 + ["Cl"] * 3 + ["Br"] * 2
_CAPACITY = {"C": 4, "N": 3, "O": 2, "S": 2, "F": 1, "Cl": 1, "Br": 1}

# (elements, index of a pyrrole-type NH or None)
_AROMATIC_RINGS = [
    (["C"] * 6, None),
    (["N", "C", "C", "C", "C", "C"], None),
    (["N", "C", "N", "C", "C", "C"], None),
    (["S", "C", "C", "C", "C"], None),
    (["O", "C", "C", "C", "C"], None),
    (["N", "C", "C", "C", "C"], 0),
]

_COUNTER_IONS = [Atom("Cl", formal_charge=-1, explicit_h=0), Atom("Na", formal_charge=1, explicit_h=0)]


class _Builder:
    def __init__(self, rng: random.Random):
        self.rng = rng
        self.atoms: list[dict] = []
        self.bonds: list[tuple[int, int, BondOrder]] = []
        self.free: list[int] = []

    def add_atom(self, element: str, capacity: int, **kw) -> int:
        self.atoms.append(dict(element=element, **kw))
        self.free.append(capacity)
        return len(self.atoms) - 1

    def bond(self, a: int, b: int, order: BondOrder) -> None:
        self.bonds.append((a, b, order))
        cost = order.valence
        self.free[a] -= cost
        self.free[b] -= cost

    def open_sites(self, need: int = 1) -> list[int]:
        return [i for i, f in enumerate(self.free) if f >= need]

    def add_ring(self, anchor: int | None) -> None:
        elements, nh = self.rng.choice(_AROMATIC_RINGS)
        start = len(self.atoms)
        for k, el in enumerate(elements):
            if k == nh:
                self.add_atom(el, 0, aromatic=True, explicit_h=1)
            else:
                # aromatic C keeps one substituent slot; heteroatoms keep none
                self.add_atom(el, 3 if el == "C" else 2, aromatic=True)
        n = len(elements)
        for k in range(n):
            self.bond(start + k, start + (k + 1) % n, BondOrder.AROMATIC)
        if anchor is not None:
            ring_c = [start + k for k, el in enumerate(elements) if el == "C"]
            self.bond(anchor, self.rng.choice(ring_c), BondOrder.SINGLE)

    def distance_at_least(self, a: int, b: int, d: int) -> bool:
        adj: dict[int, list[int]] = {}
        for x, y, _ in self.bonds:
            adj.setdefault(x, []).append(y)
            adj.setdefault(y, []).append(x)
        frontier, seen = {a}, {a}
        for _ in range(d - 1):
            frontier = {n for f in frontier for n in adj.get(f, []) if n not in seen}
            seen |= frontier
            if b in seen:
                return False
        return b not in seen


def random_molecule(rng: random.Random, min_atoms: int = 3, max_atoms: int = 24) -> Molecule:
    """A random connected (occasionally salted) molecule that passes validity."""
    b = _Builder(rng)
    target = rng.randint(min_atoms, max_atoms)
    if rng.random() < 0.3:
        b.add_ring(None)
    else:
        el = rng.choice(_ELEMENTS)
        b.add_atom(el, _CAPACITY[el])
    while len(b.atoms) < target:
        sites = b.open_sites()
        if not sites:
            break
        anchor = rng.choice(sites)
        if rng.random() < 0.1 and len(b.atoms) + 6 <= max_atoms:
            b.add_ring(anchor)
            continue
        r = rng.random()
        if r < 0.04:
            new = b.add_atom("N", 3, formal_charge=1, bracket=True)
        elif r < 0.07:
            new = b.add_atom("O", 1, formal_charge=-1, bracket=True)
        elif r < 0.08:
            new = b.add_atom("C", 4, isotope=13, bracket=True)
        else:
            el = rng.choice(_ELEMENTS)
            new = b.add_atom(el, _CAPACITY[el])
        if b.atoms[new]["element"] == "N" and b.atoms[new].get("formal_charge") == 1:
            b.free[new] = 4
        order = BondOrder.SINGLE
        both = min(b.free[anchor], b.free[new])
        if not b.atoms[anchor].get("aromatic"):
            if both >= 3 and rng.random() < 0.03:
                order = BondOrder.TRIPLE
            elif both >= 2 and rng.random() < 0.15:
                order = BondOrder.DOUBLE
        b.bond(anchor, new, order)
    for _ in range(rng.choice([0, 0, 1, 1, 2])):
        sites = [i for i in b.open_sites() if not b.atoms[i].get("aromatic")]
        if len(sites) < 2:
            break
        x, y = rng.sample(sites, 2)
        if b.distance_at_least(x, y, 3):
            b.bond(x, y, BondOrder.SINGLE)

    atoms = []
    for i, spec in enumerate(b.atoms):
        explicit_h = spec.get("explicit_h")
        if spec.get("bracket"):
            explicit_h = max(0, b.free[i])
        atoms.append(
            Atom(
                spec["element"],
                aromatic=spec.get("aromatic", False),
                formal_charge=spec.get("formal_charge", 0),
                isotope=spec.get("isotope"),
                explicit_h=explicit_h,
            )
        )
    bonds = [Bond(x, y, o) for x, y, o in b.bonds]
    if rng.random() < 0.03:
        atoms.append(rng.choice(_COUNTER_IONS))
    mol = Molecule.from_parts(atoms, bonds)
    assert not valence_problems(mol), valence_problems(mol)
    return mol


def distinct_molecules(n: int, seed: int, **kw) -> list[tuple[Molecule, str]]:
    """``n`` molecules with pairwise distinct canonical SMILES."""
    rng = random.Random(seed)
    out, seen = [], set()
    while len(out) < n:
        mol = random_molecule(rng, **kw)
        canon = to_canonical_smiles(mol)
        if canon not in seen:
            seen.add(canon)
            out.append((mol, canon))
    return out


_OPENERS = [
    "The molecule is a {kind} compound.",
    "This structure is a {kind} small molecule.",
    "The compound is classified as a {kind} species.",
]
_FACTS = [
    "It contains {rings} ring systems and {hetero} heteroatoms in total.",
    "It has a role as a metabolite and is found in several plant species.",
    "It is functionally related to a simple carboxylic acid.",
    "It is a conjugate base of a weakly acidic parent compound.",
    "It has been investigated as an inhibitor of bacterial enzymes.",
    "It displays moderate solubility in water at physiological pH.",
    "Its structure carries {carbons} carbon atoms arranged around a central scaffold.",
]


def synthetic_description(mol: Molecule, rng: random.Random) -> str:
    elements = [a.element for a in mol.atoms]
    kind = "aromatic" if any(a.aromatic for a in mol.atoms) else "aliphatic"
    fmt = dict(
        kind=kind,
        rings=mol.ring_count,
        hetero=sum(e not in ("C", "H") for e in elements),
        carbons=elements.count("C"),
    )
    sentences = [rng.choice(_OPENERS).format(**fmt)]
    sentences += [s.format(**fmt) for s in rng.sample(_FACTS, rng.randint(2, 4))]
    return " ".join(sentences)


def synthetic_pairs(n: int, seed: int, prefix: str = "db") -> list[tuple[str, str, str]]:
    """``(id, canonical smiles, description)`` triples for a toy database."""
    rng = random.Random(seed ^ 0x5EED)
    return [
        (f"{prefix}{i:06d}", canon, synthetic_description(mol, rng))
        for i, (mol, canon) in enumerate(distinct_molecules(n, seed))
    ]
