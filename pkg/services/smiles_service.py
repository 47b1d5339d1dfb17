"""SMILES subset parser, ring perception and a writer for round trips."""
from __future__ import annotations

import logging
from typing import Iterator, Optional, Union

import networkx as nx
import pandas as pd

from core.errors import DataError, ParseError
from models.molecule_model import (
    AROMATIC_BRACKET,
    AROMATIC_ORGANIC,
    BRACKET_ELEMENTS,
    DEFAULT_VALENCE,
    ORGANIC_SUBSET,
    Atom,
    Bond,
    BondOrder,
    Hybridization,
    Molecule,
)

logger = logging.getLogger(__name__)

BOND_SYMBOLS = {
    "-": BondOrder.SINGLE,
    "=": BondOrder.DOUBLE,
    "#": BondOrder.TRIPLE,
    ":": BondOrder.AROMATIC,
    # directional single bonds; stereo is ignored
    "/": BondOrder.SINGLE,
    "\\": BondOrder.SINGLE,
}

_CHIRAL_CLASSES = ("TH", "AL", "SP", "TB", "OH")


# ----------------------------------------------------------------------
# Public API
# ----------------------------------------------------------------------
def parse_smiles(smiles: Union[str, bytes]) -> Molecule:
    """Parse a SMILES string into a :class:`Molecule` with rings, aromaticity and hydrogens resolved."""
    text = _as_ascii(smiles)
    if not text:
        raise ParseError(0, "empty SMILES string")

    molecule = _Parser(text).run()

    _mark_rings(molecule)
    for bond in molecule.bonds:
        if bond.order is BondOrder.AROMATIC and not bond.in_ring:
            bond.order = BondOrder.SINGLE
    for atom_index, atom in enumerate(molecule.atoms):
        if atom.aromatic and not any(atom_index in ring for ring in molecule.rings):
            raise ParseError(atom.offset, f"aromatic atom {atom.element!r} outside a ring")

    _assign_hydrogens(molecule)
    _mark_conjugation(molecule)
    return molecule


def perceive_rings(molecule: Molecule) -> Molecule:
    """Set ``rings`` to a minimum cycle basis and refresh ``in_ring``/``conjugated`` bond flags."""
    _mark_rings(molecule)
    _mark_conjugation(molecule)
    return molecule


def write_smiles(molecule: Molecule) -> str:
    """Write a SMILES string that parses back to an isomorphic molecule (not canonical)."""
    if not molecule.atoms:
        raise DataError("cannot write an empty molecule")
    return _Writer(molecule).run()


def describe_molecule(molecule: Molecule) -> tuple[pd.DataFrame, pd.DataFrame]:
    """Atom and bond tables for diagnostics."""
    atoms = pd.DataFrame(
        [
            {
                "index": i,
                "element": atom.element,
                "aromatic": atom.aromatic,
                "charge": atom.formal_charge,
                "explicit_h": atom.explicit_h if atom.explicit_h is not None else "",
                "implicit_h": atom.implicit_h,
                "degree": atom.degree,
                "hybridization": molecule.hybridization(i).value,
                "ring_sizes": ",".join(str(n) for n in sorted(molecule.ring_sizes(i))),
            }
            for i, atom in enumerate(molecule.atoms)
        ],
        columns=["index", "element", "aromatic", "charge", "explicit_h", "implicit_h", "degree", "hybridization", "ring_sizes"],
    )
    bonds = pd.DataFrame(
        [
            {
                "a": bond.a,
                "b": bond.b,
                "order": bond.order.value,
                "in_ring": bond.in_ring,
                "conjugated": bond.conjugated,
            }
            for bond in molecule.bonds
        ],
        columns=["a", "b", "order", "in_ring", "conjugated"],
    )
    return atoms, bonds


# ----------------------------------------------------------------------
# Parsing
# ----------------------------------------------------------------------
def _as_ascii(smiles: Union[str, bytes]) -> str:
    if isinstance(smiles, (bytes, bytearray)):
        for offset, byte in enumerate(smiles):
            if byte > 0x7F:
                raise ParseError(offset, "non-ASCII byte")
        return bytes(smiles).decode("ascii")
    if not isinstance(smiles, str):
        raise ParseError(0, f"expected a string, got {type(smiles).__name__}")
    for offset, char in enumerate(smiles):
        if ord(char) > 0x7F:
            raise ParseError(offset, "non-ASCII character")
    return smiles


class _Parser:
    def __init__(self, text: str) -> None:
        self.text = text
        self.pos = 0
        self.molecule = Molecule()
        self.bond_keys: set[tuple[int, int]] = set()
        self.prev: Optional[int] = None
        self.branches: list[tuple[int, int]] = []  # (anchor atom, offset of "(")
        self.open_rings: dict[int, tuple[int, Optional[BondOrder], int]] = {}
        self.pending: Optional[tuple[BondOrder, int]] = None
        self.last_token = ""

    def run(self) -> Molecule:
        text = self.text
        while self.pos < len(text):
            char = text[self.pos]
            if char == "(":
                self._open_branch()
            elif char == ")":
                self._close_branch()
            elif char in BOND_SYMBOLS:
                self._bond_symbol(char)
            elif char == ".":
                raise ParseError(self.pos, "dot-disconnected components are not supported")
            elif char.isdigit() or char == "%":
                self._ring_closure()
            elif char == "[":
                self._bracket_atom()
            else:
                self._organic_atom()

        if self.pending is not None:
            raise ParseError(self.pending[1], "bond symbol without a following atom")
        if self.branches:
            raise ParseError(self.branches[-1][1], "unbalanced parenthesis: branch never closed")
        if self.open_rings:
            number, (_, _, offset) = min(self.open_rings.items(), key=lambda item: item[1][2])
            raise ParseError(offset, f"unclosed ring closure {number}")
        if not self.molecule.atoms:
            raise ParseError(0, "no atoms")
        return self.molecule

    # -- structure ------------------------------------------------------
    def _open_branch(self) -> None:
        if self.prev is None:
            raise ParseError(self.pos, "branch before any atom")
        if self.pending is not None:
            raise ParseError(self.pending[1], "bond symbol before a branch")
        self.branches.append((self.prev, self.pos))
        self.last_token = "("
        self.pos += 1

    def _close_branch(self) -> None:
        if not self.branches:
            raise ParseError(self.pos, "unbalanced parenthesis: unexpected ')'")
        if self.pending is not None:
            raise ParseError(self.pending[1], "bond symbol without a following atom")
        if self.last_token == "(":
            raise ParseError(self.pos, "empty branch")
        self.prev = self.branches.pop()[0]
        self.last_token = ")"
        self.pos += 1

    def _bond_symbol(self, char: str) -> None:
        if self.prev is None:
            raise ParseError(self.pos, "bond before the first atom")
        if self.pending is not None:
            raise ParseError(self.pos, "two consecutive bond symbols")
        self.pending = (BOND_SYMBOLS[char], self.pos)
        self.last_token = "bond"
        self.pos += 1

    def _ring_closure(self) -> None:
        start = self.pos
        if self.prev is None:
            raise ParseError(start, "ring closure before any atom")
        if self.text[start] == "%":
            digits = self.text[start + 1 : start + 3]
            if len(digits) != 2 or not digits.isdigit():
                raise ParseError(start, "'%' must be followed by two digits")
            number = int(digits)
            self.pos += 3
        else:
            number = int(self.text[start])
            self.pos += 1

        order = self.pending[0] if self.pending else None
        self.pending = None
        self.last_token = "ring"

        if number in self.open_rings:
            other, opening_order, _ = self.open_rings.pop(number)
            if order is not None and opening_order is not None and order is not opening_order:
                raise ParseError(start, f"conflicting bond orders for ring closure {number}")
            self._add_bond(self.prev, other, order or opening_order, start)
        else:
            self.open_rings[number] = (self.prev, order, start)

    # -- atoms ----------------------------------------------------------
    def _organic_atom(self) -> None:
        text, start = self.text, self.pos
        char = text[start]
        pair = text[start : start + 2]
        if pair in ("Cl", "Br"):
            element, aromatic, width = pair, False, 2
        elif char in ORGANIC_SUBSET:
            element, aromatic, width = char, False, 1
        elif char in AROMATIC_ORGANIC:
            element, aromatic, width = AROMATIC_ORGANIC[char], True, 1
        elif char.isalpha():
            raise ParseError(start, f"unknown element {char!r} (use brackets for elements outside B C N O P S F Cl Br I)")
        else:
            raise ParseError(start, f"unexpected character {char!r}")
        self.pos += width
        self._add_atom(Atom(element=element, aromatic=aromatic, offset=start))

    def _bracket_atom(self) -> None:
        start = self.pos
        close = self.text.find("]", start + 1)
        if close < 0:
            raise ParseError(start, "malformed bracket atom: missing ']'")
        body = self.text[start + 1 : close]
        base = start + 1
        i = 0

        while i < len(body) and body[i].isdigit():  # isotope, ignored
            i += 1

        if body[i : i + 2] in AROMATIC_BRACKET:
            element, aromatic = AROMATIC_BRACKET[body[i : i + 2]], True
            i += 2
        elif i < len(body) and body[i] in AROMATIC_BRACKET:
            element, aromatic = AROMATIC_BRACKET[body[i]], True
            i += 1
        elif i < len(body) and body[i].isupper():
            two = body[i : i + 2]
            two_letter = len(two) == 2 and two[1].islower()
            if two_letter and two in BRACKET_ELEMENTS:
                element = two
            elif not two_letter and body[i] in BRACKET_ELEMENTS:
                element = body[i]
            else:
                raise ParseError(base + i, f"unknown element {two if two_letter else body[i]!r}")
            aromatic = False
            i += len(element)
        else:
            raise ParseError(base + i, "malformed bracket atom: missing element symbol")

        # chirality, ignored
        while i < len(body) and body[i] == "@":
            i += 1
        if body[i : i + 2] in _CHIRAL_CLASSES:
            i += 2
            while i < len(body) and body[i].isdigit():
                i += 1

        hydrogens = 0
        if i < len(body) and body[i] == "H":
            i += 1
            digits_start = i
            while i < len(body) and body[i].isdigit():
                i += 1
            hydrogens = int(body[digits_start:i]) if i > digits_start else 1

        charge = 0
        if i < len(body) and body[i] in "+-":
            sign = 1 if body[i] == "+" else -1
            symbol = body[i]
            i += 1
            digits_start = i
            while i < len(body) and body[i].isdigit():
                i += 1
            if i > digits_start:
                charge = sign * int(body[digits_start:i])
            else:
                count = 1
                while i < len(body) and body[i] == symbol:
                    count += 1
                    i += 1
                charge = sign * count

        if i < len(body) and body[i] == ":":  # atom class, ignored
            i += 1
            digits_start = i
            while i < len(body) and body[i].isdigit():
                i += 1
            if i == digits_start:
                raise ParseError(base + i, "malformed bracket atom: atom class needs digits")

        if i != len(body):
            raise ParseError(base + i, f"malformed bracket atom: unexpected {body[i]!r}")

        self.pos = close + 1
        self._add_atom(
            Atom(
                element=element,
                formal_charge=charge,
                explicit_h=hydrogens,
                aromatic=aromatic,
                offset=start,
            )
        )

    def _add_atom(self, atom: Atom) -> None:
        index = len(self.molecule.atoms)
        self.molecule.atoms.append(atom)
        if self.prev is not None:
            order, offset = self.pending if self.pending else (None, atom.offset)
            self._add_bond(self.prev, index, order, offset)
        self.pending = None
        self.prev = index
        self.last_token = "atom"

    def _add_bond(self, a: int, b: int, order: Optional[BondOrder], offset: int) -> None:
        if a == b:
            raise ParseError(offset, "ring closure bonds an atom to itself")
        key = (a, b) if a < b else (b, a)
        if key in self.bond_keys:
            raise ParseError(offset, f"duplicate bond between atoms {a} and {b}")
        atoms = self.molecule.atoms
        both_aromatic = atoms[a].aromatic and atoms[b].aromatic
        if order is None:
            order = BondOrder.AROMATIC if both_aromatic else BondOrder.SINGLE
        elif order is BondOrder.AROMATIC and not both_aromatic:
            raise ParseError(offset, "aromatic bond between non-aromatic atoms")
        self.bond_keys.add(key)
        self.molecule.bonds.append(Bond(a=a, b=b, order=order))


# ----------------------------------------------------------------------
# Perception
# ----------------------------------------------------------------------
def _order_cycle(nodes: list[int], adjacency: dict[int, set[int]]) -> list[int]:
    members = set(nodes)
    start = min(members)
    cycle = [start]
    previous, current = None, start
    while True:
        options = sorted(n for n in adjacency[current] if n in members and n != previous)
        following = next((n for n in options if n not in cycle), None)
        if following is None:
            return cycle
        cycle.append(following)
        previous, current = current, following


def _mark_rings(molecule: Molecule) -> None:
    graph = nx.Graph()
    graph.add_nodes_from(range(len(molecule.atoms)))
    graph.add_edges_from((bond.a, bond.b) for bond in molecule.bonds)
    cycle_rank = graph.number_of_edges() - graph.number_of_nodes() + nx.number_connected_components(graph)
    if cycle_rank <= 0:
        molecule.rings = []
    else:
        adjacency = {node: set(graph.neighbors(node)) for node in graph.nodes}
        cycles = [_order_cycle(list(cycle), adjacency) for cycle in nx.minimum_cycle_basis(graph)]
        molecule.rings = sorted(cycles, key=lambda ring: (len(ring), sorted(ring)))

    ring_pairs = set()
    for ring in molecule.rings:
        for pos, atom in enumerate(ring):
            other = ring[(pos + 1) % len(ring)]
            ring_pairs.add((atom, other) if atom < other else (other, atom))
    for bond in molecule.bonds:
        bond.in_ring = bond.key in ring_pairs


def _assign_hydrogens(molecule: Molecule) -> None:
    for index, atom in enumerate(molecule.atoms):
        bonds = molecule.incident_bonds(index)
        atom.degree = len(bonds)

        # bracket atoms carry exactly their written hydrogen count
        if atom.explicit_h is not None or atom.element not in DEFAULT_VALENCE:
            atom.implicit_h = 0
            continue

        if atom.aromatic:
            used = sum(1 if bond.order is BondOrder.AROMATIC else int(bond.order.valence) for bond in bonds)
        else:
            used = sum(int(bond.order.valence) for bond in bonds)

        target = next((v for v in DEFAULT_VALENCE[atom.element] if v >= used), None)
        free = 0 if target is None else target - used
        if atom.aromatic and free >= 1:
            free -= 1  # one electron goes to the aromatic system
        atom.implicit_h = max(0, free)


def _mark_conjugation(molecule: Molecule) -> None:
    unsaturated = [
        molecule.hybridization(i) in (Hybridization.SP, Hybridization.SP2)
        for i in range(len(molecule.atoms))
    ]
    for bond in molecule.bonds:
        bond.conjugated = unsaturated[bond.a] and unsaturated[bond.b]


# ----------------------------------------------------------------------
# Writing
# ----------------------------------------------------------------------
class _Writer:
    def __init__(self, molecule: Molecule) -> None:
        self.molecule = molecule
        self.adjacency = {i: sorted(molecule.neighbors(i)) for i in range(len(molecule.atoms))}
        self.orders = {bond.key: bond.order for bond in molecule.bonds}
        self.children: dict[int, list[int]] = {i: [] for i in self.adjacency}
        self.ring_partners: dict[int, list[int]] = {i: [] for i in self.adjacency}
        self.emitted: set[int] = set()
        self.open_digits: dict[tuple[int, int], int] = {}
        self.free_digits: list[int] = []
        self.next_digit = 1

    def run(self) -> str:
        parts = []
        visited: set[int] = set()
        for root in self.adjacency:
            if root in visited:
                continue
            self._discover(root, visited)
            parts.append(self._emit(root))
        if len(parts) > 1:
            raise DataError("molecule is disconnected; cannot write a single SMILES")
        return parts[0]

    def _discover(self, root: int, visited: set[int]) -> None:
        """Depth-first spanning tree from ``root``; non-tree bonds become ring closures."""
        visited.add(root)
        stack: list[tuple[int, Optional[int], Iterator[int]]] = [(root, None, iter(self.adjacency[root]))]
        while stack:
            atom, parent, pending = stack[-1]
            for other in pending:
                if other == parent:
                    continue
                if other not in visited:
                    self.children[atom].append(other)
                    visited.add(other)
                    stack.append((other, atom, iter(self.adjacency[other])))
                    break
                if other not in self.ring_partners[atom]:
                    self.ring_partners[atom].append(other)
                    self.ring_partners[other].append(atom)
            else:
                stack.pop()

    def _bond_text(self, a: int, b: int) -> str:
        order = self.orders[(a, b) if a < b else (b, a)]
        both_aromatic = self.molecule.atoms[a].aromatic and self.molecule.atoms[b].aromatic
        if order is BondOrder.DOUBLE:
            return "="
        if order is BondOrder.TRIPLE:
            return "#"
        if order is BondOrder.SINGLE and both_aromatic:
            return "-"
        return ""

    def _atom_text(self, index: int) -> str:
        atom = self.molecule.atoms[index]
        symbol = atom.element.lower() if atom.aromatic else atom.element
        if atom.explicit_h is None and atom.element in ORGANIC_SUBSET and atom.formal_charge == 0:
            return symbol
        text = "[" + symbol
        if atom.explicit_h:
            text += "H" if atom.explicit_h == 1 else f"H{atom.explicit_h}"
        if atom.formal_charge:
            sign = "+" if atom.formal_charge > 0 else "-"
            size = abs(atom.formal_charge)
            text += sign if size == 1 else f"{sign}{size}"
        return text + "]"

    def _digit(self) -> int:
        if self.free_digits:
            self.free_digits.sort()
            return self.free_digits.pop(0)
        digit = self.next_digit
        self.next_digit += 1
        return digit

    @staticmethod
    def _digit_text(digit: int) -> str:
        return str(digit) if digit < 10 else f"%{digit:02d}"

    def _emit(self, root: int) -> str:
        out: list[str] = []
        # work items: an atom to write (with its tree parent) or literal text
        stack: list[tuple[Optional[int], Optional[int], str]] = [(root, None, "")]
        while stack:
            atom, parent, text = stack.pop()
            if atom is None:
                out.append(text)
                continue
            if parent is not None:
                out.append(self._bond_text(parent, atom))
            out.append(self._atom_text(atom))
            self.emitted.add(atom)

            for other in self.ring_partners[atom]:
                key = (atom, other) if atom < other else (other, atom)
                if other in self.emitted:
                    digit = self.open_digits.pop(key)
                    out.append(self._digit_text(digit))
                    self.free_digits.append(digit)
                else:
                    digit = self._digit()
                    self.open_digits[key] = digit
                    out.append(self._bond_text(atom, other) + self._digit_text(digit))

            children = self.children[atom]
            if children:
                stack.append((children[-1], atom, ""))
                for child in reversed(children[:-1]):
                    stack.extend([(None, None, ")"), (child, atom, ""), (None, None, "(")])
        return "".join(out)
