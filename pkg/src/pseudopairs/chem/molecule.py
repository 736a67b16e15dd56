"""Molecular graph types."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterator

from pseudopairs.chem.elements import DEFAULT_VALENCES


class BondOrder(enum.IntEnum):
    SINGLE = 1
    DOUBLE = 2
    TRIPLE = 3
    AROMATIC = 4

    @property
    def valence(self) -> int:
        """Contribution to the bond-order sum; aromatic bonds count as 1."""
        return 1 if self is BondOrder.AROMATIC else int(self)


@dataclass(frozen=True)
class Atom:
    element: str
    aromatic: bool = False
    formal_charge: int = 0
    isotope: int | None = None
    # None means organic-subset atom whose hydrogens are implied by valence.
    explicit_h: int | None = None
    chirality: str | None = None
    atom_class: int | None = None
    ring_member: bool = False

    @property
    def bracketed(self) -> bool:
        return self.explicit_h is not None


@dataclass(frozen=True)
class Bond:
    begin: int
    end: int
    order: BondOrder = BondOrder.SINGLE
    stereo: str = "none"  # none | up | down; carried, never interpreted

    def other(self, atom: int) -> int:
        return self.end if atom == self.begin else self.begin


@dataclass(frozen=True)
class Molecule:
    atoms: tuple[Atom, ...]
    bonds: tuple[Bond, ...]
    source_smiles: str = field(default="", compare=False)

    @classmethod
    def from_parts(cls, atoms, bonds, source_smiles: str = "") -> Molecule:
        """Build a molecule and fill in the computed ring-membership flags."""
        atoms = tuple(atoms)
        bonds = tuple(bonds)
        ring_bonds = _ring_bond_indices(len(atoms), bonds)
        in_ring = [False] * len(atoms)
        for bi in ring_bonds:
            in_ring[bonds[bi].begin] = True
            in_ring[bonds[bi].end] = True
        atoms = tuple(
            a if a.ring_member == r else replace(a, ring_member=r)
            for a, r in zip(atoms, in_ring)
        )
        return cls(atoms, bonds, source_smiles)

    def __len__(self) -> int:
        return len(self.atoms)

    @cached_property
    def adjacency(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        """Per atom, the (neighbor, bond index) pairs in bond order."""
        adj: list[list[tuple[int, int]]] = [[] for _ in self.atoms]
        for bi, b in enumerate(self.bonds):
            adj[b.begin].append((b.end, bi))
            adj[b.end].append((b.begin, bi))
        return tuple(tuple(x) for x in adj)

    def neighbors(self, i: int) -> Iterator[tuple[int, Bond]]:
        for j, bi in self.adjacency[i]:
            yield j, self.bonds[bi]

    def degree(self, i: int) -> int:
        return len(self.adjacency[i])

    def bond_order_sum(self, i: int) -> int:
        return sum(self.bonds[bi].order.valence for _, bi in self.adjacency[i])

    def aromatic_bond_count(self, i: int) -> int:
        return sum(
            1 for _, bi in self.adjacency[i] if self.bonds[bi].order is BondOrder.AROMATIC
        )

    @cached_property
    def hydrogen_counts(self) -> tuple[int, ...]:
        return tuple(
            a.explicit_h if a.explicit_h is not None else implicit_hydrogens(self, i)
            for i, a in enumerate(self.atoms)
        )

    def hydrogen_count(self, i: int) -> int:
        return self.hydrogen_counts[i]

    @cached_property
    def components(self) -> tuple[tuple[int, ...], ...]:
        seen = [False] * len(self.atoms)
        comps = []
        for start in range(len(self.atoms)):
            if seen[start]:
                continue
            seen[start] = True
            stack, comp = [start], []
            while stack:
                a = stack.pop()
                comp.append(a)
                for b, _ in self.adjacency[a]:
                    if not seen[b]:
                        seen[b] = True
                        stack.append(b)
            comps.append(tuple(sorted(comp)))
        return tuple(comps)

    @property
    def ring_count(self) -> int:
        """Cyclomatic number: independent cycles of the graph."""
        return len(self.bonds) - len(self.atoms) + len(self.components)


def implicit_hydrogens(mol: Molecule, i: int) -> int:
    """Hydrogens implied for an organic-subset atom by the default valence table.

    Aromatic atoms donate one extra electron to the ring when the lowest normal
    valence leaves room for it (benzene ``c`` gets one H); otherwise they are
    treated as lone-pair donors (``s`` in thiophene, no H).
    """
    atom = mol.atoms[i]
    valences = DEFAULT_VALENCES.get(atom.element)
    if valences is None:
        return 0
    used = mol.bond_order_sum(i)
    if atom.aromatic and mol.aromatic_bond_count(i):
        lowest = valences[0]
        if used + 1 <= lowest:
            return lowest - used - 1
        return max(0, lowest - used)
    for v in valences:
        if v >= used:
            return v - used
    return 0


def _ring_bond_indices(n_atoms: int, bonds: tuple[Bond, ...]) -> set[int]:
    """Indices of bonds that lie on a cycle (all non-bridges)."""
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n_atoms)]
    for bi, b in enumerate(bonds):
        adj[b.begin].append((b.end, bi))
        adj[b.end].append((b.begin, bi))
    disc = [-1] * n_atoms
    low = [0] * n_atoms
    bridges: set[int] = set()
    timer = 0
    for root in range(n_atoms):
        if disc[root] != -1:
            continue
        disc[root] = low[root] = timer
        timer += 1
        # iterative DFS: (node, parent bond, neighbor iterator)
        stack = [(root, -1, iter(adj[root]))]
        while stack:
            node, pbond, it = stack[-1]
            advanced = False
            for nxt, bi in it:
                if bi == pbond:
                    continue
                if disc[nxt] == -1:
                    disc[nxt] = low[nxt] = timer
                    timer += 1
                    stack.append((nxt, bi, iter(adj[nxt])))
                    advanced = True
                    break
                low[node] = min(low[node], disc[nxt])
            if advanced:
                continue
            stack.pop()
            if stack:
                parent = stack[-1][0]
                low[parent] = min(low[parent], low[node])
                if low[node] > disc[parent]:
                    bridges.add(pbond)
    return set(range(len(bonds))) - bridges
