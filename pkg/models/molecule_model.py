from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional


class BondOrder(str, Enum):
    SINGLE = "single"
    DOUBLE = "double"
    TRIPLE = "triple"
    AROMATIC = "aromatic"

    @property
    def valence(self) -> float:
        return _BOND_VALENCE[self]


_BOND_VALENCE = {
    BondOrder.SINGLE: 1.0,
    BondOrder.DOUBLE: 2.0,
    BondOrder.TRIPLE: 3.0,
    BondOrder.AROMATIC: 1.5,
}


class Hybridization(str, Enum):
    SP = "sp"
    SP2 = "sp2"
    SP3 = "sp3"
    OTHER = "other"


# Organic subset: may be written without brackets and gets implicit hydrogens.
ORGANIC_SUBSET = ("B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I")

# Allowed valences, smallest first; P and S pick the smallest one that fits.
DEFAULT_VALENCE: dict[str, tuple[int, ...]] = {
    "B": (3,),
    "C": (4,),
    "N": (3,),
    "O": (2,),
    "P": (3, 5),
    "S": (2, 4, 6),
    "F": (1,),
    "Cl": (1,),
    "Br": (1,),
    "I": (1,),
}

# Elements accepted inside brackets besides the organic subset.
BRACKET_ELEMENTS = frozenset(
    {
        *ORGANIC_SUBSET,
        "H", "He", "Li", "Be", "Na", "Mg", "Al", "Si", "K", "Ca", "Ti", "V", "Cr",
        "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se", "Rb", "Sr",
        "Zr", "Mo", "Ru", "Rh", "Pd", "Ag", "Cd", "In", "Sn", "Sb", "Te", "Cs",
        "Ba", "Gd", "W", "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi",
    }
)

AROMATIC_ORGANIC = {"b": "B", "c": "C", "n": "N", "o": "O", "p": "P", "s": "S"}
AROMATIC_BRACKET = {**AROMATIC_ORGANIC, "se": "Se", "as": "As"}


@dataclass
class Atom:
    element: str
    formal_charge: int = 0
    explicit_h: Optional[int] = None
    aromatic: bool = False
    degree: int = 0
    implicit_h: int = 0
    offset: int = 0  # position in the source string

    @property
    def total_h(self) -> int:
        return self.implicit_h + (self.explicit_h or 0)


@dataclass
class Bond:
    a: int
    b: int
    order: BondOrder = BondOrder.SINGLE
    in_ring: bool = False
    conjugated: bool = False

    @property
    def key(self) -> tuple[int, int]:
        return (self.a, self.b) if self.a < self.b else (self.b, self.a)

    def other(self, index: int) -> int:
        return self.b if index == self.a else self.a


@dataclass
class Molecule:
    atoms: list[Atom] = field(default_factory=list)
    bonds: list[Bond] = field(default_factory=list)
    rings: list[list[int]] = field(default_factory=list)

    def incident_bonds(self, index: int) -> list[Bond]:
        return [bond for bond in self.bonds if index in (bond.a, bond.b)]

    def neighbors(self, index: int) -> list[int]:
        return [bond.other(index) for bond in self.incident_bonds(index)]

    def hybridization(self, index: int) -> Hybridization:
        """Syntactic hybridisation: aromatic or double -> sp2, triple -> sp, else sp3."""
        atom = self.atoms[index]
        if atom.element not in DEFAULT_VALENCE:
            return Hybridization.OTHER
        orders = {bond.order for bond in self.incident_bonds(index)}
        if atom.aromatic or BondOrder.DOUBLE in orders:
            return Hybridization.SP2
        if BondOrder.TRIPLE in orders:
            return Hybridization.SP
        return Hybridization.SP3

    def ring_sizes(self, index: int) -> set[int]:
        return {len(ring) for ring in self.rings if index in ring}

    def bond_ring_sizes(self, bond: Bond) -> set[int]:
        sizes = set()
        for ring in self.rings:
            n = len(ring)
            for pos, atom in enumerate(ring):
                if {atom, ring[(pos + 1) % n]} == {bond.a, bond.b}:
                    sizes.add(n)
                    break
        return sizes
