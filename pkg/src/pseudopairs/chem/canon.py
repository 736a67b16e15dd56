"""Canonical and randomized SMILES writers.

Canonical atom ranks come from iterative invariant refinement (Morgan/CANON
style). Remaining ties are broken by individualizing one atom of the lowest
tied class and refining again. At the first tie level every candidate (up to
``MAX_TOP_BRANCHES``) is tried and the lexicographically smallest SMILES wins;
deeper ties take the first candidate, which is exact whenever the tied atoms
are related by a graph automorphism (the normal case for molecules).

Stereo marks and atom classes are not written.
"""

from __future__ import annotations

import random

from pseudopairs.chem.elements import ORGANIC_SUBSET, atomic_number
from pseudopairs.chem.molecule import BondOrder, Molecule, implicit_hydrogens

MAX_TOP_BRANCHES = 8


def _dense_rank(keys: list) -> list[int]:
    index = {k: i for i, k in enumerate(sorted(set(keys)))}
    return [index[k] for k in keys]


def _initial_ranks(mol: Molecule) -> list[int]:
    keys = []
    for i, a in enumerate(mol.atoms):
        keys.append(
            (
                atomic_number(a.element),
                a.isotope or 0,
                mol.degree(i),
                mol.hydrogen_count(i),
                a.formal_charge,
                a.aromatic,
                a.ring_member,
            )
        )
    return _dense_rank(keys)


def _refine(nbrs: list[list[tuple[int, int]]], ranks: list[int]) -> list[int]:
    n_classes = len(set(ranks))
    while True:
        keys = [
            (ranks[i], tuple(sorted((order, ranks[j]) for j, order in nbrs[i])))
            for i in range(len(ranks))
        ]
        new = _dense_rank(keys)
        m = max(new) + 1 if new else 0
        if m == n_classes:
            return new
        n_classes, ranks = m, new


def _first_tied_class(ranks: list[int]) -> list[int] | None:
    seen: dict[int, list[int]] = {}
    for i, r in enumerate(ranks):
        seen.setdefault(r, []).append(i)
    tied = [members for r, members in sorted(seen.items()) if len(members) > 1]
    return tied[0] if tied else None


def _individualize(ranks: list[int], atom: int) -> list[int]:
    new = [2 * r for r in ranks]
    new[atom] -= 1
    return new


def canonical_rank_candidates(mol: Molecule) -> list[list[int]]:
    """Total atom orders, one per explored top-level tie break."""
    nbrs = [[(j, int(b.order)) for j, b in mol.neighbors(i)] for i in range(len(mol))]
    base = _refine(nbrs, _initial_ranks(mol))
    top = _first_tied_class(base)
    if top is None:
        return [base]
    out = []
    for cand in top[:MAX_TOP_BRANCHES]:
        ranks = _refine(nbrs, _individualize(base, cand))
        while (tied := _first_tied_class(ranks)) is not None:
            ranks = _refine(nbrs, _individualize(ranks, tied[0]))
        out.append(ranks)
    return out


def _atom_text(mol: Molecule, i: int) -> str:
    a = mol.atoms[i]
    h = mol.hydrogen_count(i)
    sym = a.element.lower() if a.aromatic else a.element
    bare = (
        a.element in ORGANIC_SUBSET
        and a.isotope is None
        and a.formal_charge == 0
        and h == implicit_hydrogens(mol, i)
        and (not a.aromatic or a.element in "BCNOPS")
    )
    if bare:
        return sym
    parts = ["[", str(a.isotope) if a.isotope is not None else "", sym]
    if h:
        parts.append("H" if h == 1 else f"H{h}")
    q = a.formal_charge
    if q:
        sign = "+" if q > 0 else "-"
        parts.append(sign if abs(q) == 1 else f"{sign}{abs(q)}")
    parts.append("]")
    return "".join(parts)


def _bond_text(mol: Molecule, bond_index: int) -> str:
    b = mol.bonds[bond_index]
    if b.order is BondOrder.SINGLE:
        both_aromatic = mol.atoms[b.begin].aromatic and mol.atoms[b.end].aromatic
        return "-" if both_aromatic else ""
    if b.order is BondOrder.DOUBLE:
        return "="
    if b.order is BondOrder.TRIPLE:
        return "#"
    return ""  # aromatic between aromatic atoms


def _ring_label(d: int) -> str:
    return str(d) if d < 10 else f"%{d}"


def _write_component(mol: Molecule, key: list[int], root: int) -> str:
    """Depth-first SMILES of one component; neighbors visited in ``key`` order."""
    sorted_nbrs = {}

    def nbrs_of(a):
        if a not in sorted_nbrs:
            sorted_nbrs[a] = sorted(mol.adjacency[a], key=lambda jb: key[jb[0]])
        return sorted_nbrs[a]

    # Pass 1: spanning tree and ring-closure bonds.
    preorder: dict[int, int] = {root: 0}
    children: dict[int, list[tuple[int, int]]] = {root: []}
    ring_bonds: dict[int, list[int]] = {}
    tree_bonds: set[int] = set()
    seen_ring: set[int] = set()
    stack = [(root, -1, iter(nbrs_of(root)))]
    while stack:
        node, pbond, it = stack[-1]
        for nxt, bi in it:
            if bi == pbond or bi in tree_bonds:
                continue
            if nxt in preorder:
                if bi not in seen_ring:
                    seen_ring.add(bi)
                    ring_bonds.setdefault(node, []).append(bi)
                    ring_bonds.setdefault(nxt, []).append(bi)
                continue
            preorder[nxt] = len(preorder)
            children[nxt] = []
            children[node].append((nxt, bi))
            tree_bonds.add(bi)
            stack.append((nxt, bi, iter(nbrs_of(nxt))))
            break
        else:
            stack.pop()

    # Pass 2: emit text in preorder, allocating ring digits on the fly.
    out: list[str] = []
    open_digits: dict[int, int] = {}
    free = list(range(1, 100))
    emitted: set[int] = set()
    work: list = [("node", root, -1)]
    while work:
        item = work.pop()
        if item[0] == "text":
            out.append(item[1])
            continue
        _, node, via = item
        if via >= 0:
            out.append(_bond_text(mol, via))
        out.append(_atom_text(mol, node))
        emitted.add(node)
        rb = ring_bonds.get(node, [])
        closing = sorted(
            (bi for bi in rb if mol.bonds[bi].other(node) in emitted and bi in open_digits),
            key=lambda bi: preorder[mol.bonds[bi].other(node)],
        )
        opening = sorted(
            (bi for bi in rb if bi not in open_digits),
            key=lambda bi: key[mol.bonds[bi].other(node)],
        )
        for bi in closing:
            d = open_digits.pop(bi)
            out.append(_ring_label(d))
            free.append(d)
            free.sort()
        for bi in opening:
            d = free.pop(0)
            open_digits[bi] = d
            out.append(_bond_text(mol, bi) + _ring_label(d))
        kids = children[node]
        if kids:
            last = kids[-1]
            work.append(("node", last[0], last[1]))
            for child, bi in reversed(kids[:-1]):
                work.append(("text", ")"))
                work.append(("node", child, bi))
                work.append(("text", "("))
    return "".join(out)


def _write(mol: Molecule, key: list[int]) -> list[str]:
    frags = []
    for comp in mol.components:
        root = min(comp, key=lambda a: key[a])
        frags.append(_write_component(mol, key, root))
    return frags


def to_canonical_smiles(mol: Molecule) -> str:
    """Canonical SMILES of ``mol``; depends only on the labeled graph."""
    if not mol.atoms:
        return ""
    best = None
    for ranks in canonical_rank_candidates(mol):
        text = ".".join(sorted(_write(mol, ranks)))
        if best is None or text < best:
            best = text
    return best


def randomize_smiles(mol: Molecule, seed: int) -> str:
    """A valid, non-canonical SMILES of the same graph, reproducible per seed."""
    rng = random.Random(seed & 0xFFFFFFFFFFFFFFFF)
    key = list(range(len(mol)))
    rng.shuffle(key)
    frags = _write(mol, key)
    rng.shuffle(frags)
    return ".".join(frags)


def canonicalize(text: str) -> str:
    """Parse then canonicalize; raises :class:`SmilesParseError` on bad input."""
    from pseudopairs.chem.smiles import parse_smiles

    return to_canonical_smiles(parse_smiles(text))


def canonical_set(smiles) -> set[str]:
    """Canonical forms of ``smiles``; entries that fail to parse are kept verbatim."""
    from pseudopairs.chem.smiles import SmilesParseError

    out = set()
    for s in smiles:
        s = s.strip()
        if not s:
            continue
        try:
            out.add(canonicalize(s))
        except SmilesParseError:
            out.add(s)
    return out
