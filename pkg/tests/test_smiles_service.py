import networkx as nx
import numpy as np
import pytest

from core.errors import DataError, ParseError
from models.molecule_model import BondOrder, Hybridization, Molecule
from services.smiles_service import describe_molecule, parse_smiles, perceive_rings, write_smiles


def as_graph(molecule: Molecule) -> nx.Graph:
    graph = nx.Graph()
    for i, atom in enumerate(molecule.atoms):
        graph.add_node(i, label=(atom.element, atom.aromatic, atom.formal_charge, atom.total_h))
    for bond in molecule.bonds:
        graph.add_edge(bond.a, bond.b, order=bond.order)
    return graph


def isomorphic(a: Molecule, b: Molecule) -> bool:
    return nx.is_isomorphic(
        as_graph(a),
        as_graph(b),
        node_match=nx.algorithms.isomorphism.categorical_node_match("label", None),
        edge_match=nx.algorithms.isomorphism.categorical_edge_match("order", None),
    )


# =============================================================================
# Reference corpus
# =============================================================================

class TestCorpus:
    def test_counts_match_reference(self, smiles_corpus):
        mismatches = []
        for row in smiles_corpus.itertuples(index=False):
            molecule = parse_smiles(row.smiles)
            got = (
                len(molecule.atoms),
                len(molecule.bonds),
                len(molecule.rings),
                sum(atom.aromatic for atom in molecule.atoms),
                sum(atom.total_h for atom in molecule.atoms),
                ",".join(str(n) for n in sorted(len(ring) for ring in molecule.rings)),
            )
            expected = (row.atoms, row.bonds, row.rings, row.aromatic, row.hydrogens, row.ring_sizes)
            if got != expected:
                mismatches.append((row.smiles, got, expected))
        assert mismatches == []

    def test_round_trip_is_isomorphic(self, smiles_corpus):
        for smiles in smiles_corpus["smiles"]:
            original = parse_smiles(smiles)
            written = write_smiles(original)
            assert isomorphic(original, parse_smiles(written)), (smiles, written)

    def test_ring_bonds_flagged(self):
        molecule = parse_smiles("CC1CC1")
        flags = {bond.key: bond.in_ring for bond in molecule.bonds}
        assert flags[(0, 1)] is False
        assert all(flag for key, flag in flags.items() if key != (0, 1))

    def test_rings_are_ordered_cycles(self):
        molecule = parse_smiles("c1ccc2ccccc2c1")
        bonds = {bond.key for bond in molecule.bonds}
        for ring in molecule.rings:
            for pos, atom in enumerate(ring):
                other = ring[(pos + 1) % len(ring)]
                assert (min(atom, other), max(atom, other)) in bonds

    def test_corpus_is_broad(self, smiles_corpus):
        assert len(smiles_corpus) >= 100
        assert (smiles_corpus["rings"] > 0).sum() >= 50


class TestLongMolecules:
    def test_long_chain_writes_back(self):
        chain = "C" * 1500
        assert write_smiles(parse_smiles(chain)) == chain

    def test_long_chain_with_rings_round_trips(self):
        smiles = "C1CC1" + "C" * 1500 + "C1CC1"
        original = parse_smiles(smiles)
        again = parse_smiles(write_smiles(original))
        assert len(again.atoms) == len(original.atoms) == 1506
        assert len(again.bonds) == len(original.bonds) == 1507
        assert [len(ring) for ring in again.rings] == [3, 3]
        assert sum(atom.total_h for atom in again.atoms) == sum(atom.total_h for atom in original.atoms)

    def test_long_branch_round_trips(self):
        smiles = "CC(" + "C" * 1500 + ")C"
        written = write_smiles(parse_smiles(smiles))
        assert len(parse_smiles(written).atoms) == 1503
        assert written.count("(") == written.count(")") == 1


class TestAtomsAndBonds:
    def test_bracket_atom_fields(self):
        atom = parse_smiles("[13CH3-:7]").atoms[0]
        assert (atom.element, atom.explicit_h, atom.formal_charge, atom.implicit_h) == ("C", 3, -1, 0)

    @pytest.mark.parametrize("smiles,charge", [("[Fe+2]", 2), ("[Fe++]", 2), ("[O--]", -2), ("[N+]", 1)])
    def test_charges(self, smiles, charge):
        assert parse_smiles(smiles).atoms[0].formal_charge == charge

    def test_two_letter_organic(self):
        assert [a.element for a in parse_smiles("ClCBr").atoms] == ["Cl", "C", "Br"]

    def test_bond_orders(self):
        orders = [bond.order for bond in parse_smiles("C=CC#N").bonds]
        assert orders == [BondOrder.DOUBLE, BondOrder.SINGLE, BondOrder.TRIPLE]

    def test_aromatic_bonds_inside_ring_only(self):
        molecule = parse_smiles("c1ccccc1-c1ccccc1")
        orders = {bond.order for bond in molecule.bonds if not bond.in_ring}
        assert orders == {BondOrder.SINGLE}
        assert sum(bond.order is BondOrder.AROMATIC for bond in molecule.bonds) == 12

    def test_explicit_aromatic_bond_symbol(self):
        molecule = parse_smiles("c1:c:c:c:c:c1")
        assert all(bond.order is BondOrder.AROMATIC for bond in molecule.bonds)

    def test_hybridization(self):
        molecule = parse_smiles("C#CC=CC")
        assert [molecule.hybridization(i) for i in range(5)] == [
            Hybridization.SP, Hybridization.SP, Hybridization.SP2, Hybridization.SP2, Hybridization.SP3,
        ]
        assert parse_smiles("[Fe+2]").hybridization(0) is Hybridization.OTHER

    def test_conjugation(self):
        molecule = parse_smiles("C=CC=CCC")
        assert [bond.conjugated for bond in molecule.bonds] == [True, True, True, False, False]
        assert all(bond.conjugated for bond in parse_smiles("c1ccccc1").bonds)

    def test_degrees(self):
        molecule = parse_smiles("CC(C)(C)C")
        assert [atom.degree for atom in molecule.atoms] == [1, 4, 1, 1, 1]

    def test_perceive_rings_recomputes(self):
        molecule = parse_smiles("C1CCCCC1")
        molecule.rings = []
        assert perceive_rings(molecule).rings == [[0, 1, 2, 3, 4, 5]]

    def test_describe_molecule(self):
        atoms, bonds = describe_molecule(parse_smiles("c1ccncc1"))
        assert len(atoms) == 6 and len(bonds) == 6
        assert set(atoms["ring_sizes"]) == {"6"}
        assert atoms.loc[3, "element"] == "N"
        assert bonds["in_ring"].all()

    def test_bytes_input(self):
        assert len(parse_smiles(b"CCO").atoms) == 3


# =============================================================================
# Errors
# =============================================================================

class TestErrors:
    @pytest.mark.parametrize(
        "smiles,offset",
        [
            ("", 0),
            ("C1CC", 1),
            ("C(C", 1),
            ("C)C", 1),
            ("C==C", 2),
            ("CX", 1),
            ("[Xx]", 1),
            ("[C", 0),
            ("C.C", 1),
            ("cc", 0),
            ("C11", 2),
            ("C12CC12", 6),
            ("C=1CC-1", 6),
            ("(C)", 0),
            ("C()", 2),
            ("C=", 1),
            ("C:C", 1),
            ("C%1C", 1),
            ("=C", 0),
            ("[]", 1),
            ("[CH3:]", 5),
        ],
    )
    def test_offsets(self, smiles, offset):
        with pytest.raises(ParseError) as info:
            parse_smiles(smiles)
        assert info.value.offset == offset

    def test_non_ascii_byte(self):
        with pytest.raises(ParseError) as info:
            parse_smiles(b"CC\xffO")
        assert info.value.offset == 2

    def test_non_ascii_character(self):
        with pytest.raises(ParseError) as info:
            parse_smiles("CCé")
        assert info.value.offset == 2

    def test_parse_error_is_data_error(self):
        with pytest.raises(DataError):
            parse_smiles("C(")

    def test_message_names_problem(self):
        with pytest.raises(ParseError, match="unclosed ring closure 1"):
            parse_smiles("C1CC")

    def test_write_empty_molecule(self):
        with pytest.raises(DataError):
            write_smiles(Molecule())


# =============================================================================
# Fuzzing
# =============================================================================

ALPHABET = np.frombuffer(b"CNOSPFcnos()[]=#-:/\\123%0+@H.BrlXe* \xc3", dtype=np.uint8)


def fuzz(count: int, seed: int) -> None:
    rng = np.random.default_rng(seed)
    for _ in range(count):
        length = int(rng.integers(0, 24))
        data = bytes(rng.choice(ALPHABET, size=length).tolist())
        try:
            parse_smiles(data)
        except ParseError:
            pass


class TestFuzz:
    def test_random_input_only_raises_parse_errors(self):
        fuzz(5_000, seed=11)

    @pytest.mark.slow
    def test_random_input_long_run(self):
        fuzz(100_000, seed=12)
