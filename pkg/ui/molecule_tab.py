from __future__ import annotations

import streamlit as st
from streamlit_agraph import Config, Edge, Node, agraph

from core.errors import DataError
from models.molecule_model import BondOrder, Molecule
from services.featurizer_service import feature_tables, featurize
from services.smiles_service import describe_molecule, parse_smiles, write_smiles

ELEMENT_COLORS = {
    "C": "#607D8B",
    "N": "#1E88E5",
    "O": "#E53935",
    "S": "#FDD835",
    "P": "#FB8C00",
    "F": "#43A047",
    "Cl": "#2E7D32",
    "Br": "#8D6E63",
    "I": "#6A1B9A",
}

BOND_WIDTHS = {
    BondOrder.SINGLE: 2,
    BondOrder.AROMATIC: 3,
    BondOrder.DOUBLE: 4,
    BondOrder.TRIPLE: 6,
}


def molecule_graph_elements(molecule: Molecule) -> tuple[list[Node], list[Edge]]:
    """agraph nodes (one per atom) and edges (one per bond)."""
    nodes = []
    for index, atom in enumerate(molecule.atoms):
        label = atom.element.lower() if atom.aromatic else atom.element
        if atom.total_h:
            label += "H" if atom.total_h == 1 else f"H{atom.total_h}"
        if atom.formal_charge:
            label += f"{atom.formal_charge:+d}"
        nodes.append(
            Node(
                id=str(index),
                label=label,
                size=18,
                color=ELEMENT_COLORS.get(atom.element, "#90A4AE"),
                title=f"Atom {index}\nHybridization: {molecule.hybridization(index).value}",
            )
        )

    edges = []
    for bond in molecule.bonds:
        edges.append(
            Edge(
                source=str(bond.a),
                target=str(bond.b),
                label=bond.order.value,
                width=BOND_WIDTHS[bond.order],
                dashes=bond.order is BondOrder.AROMATIC,
                color="#546E7A",
            )
        )
    return nodes, edges


def render():
    smiles = st.text_input("SMILES", value="c1ccccc1O", placeholder="Bijv: CC(=O)Oc1ccccc1C(=O)O")
    if not smiles.strip():
        st.caption("Vul een SMILES-string in.")
        return

    try:
        molecule = parse_smiles(smiles.strip())
        graph = featurize(molecule)
    except DataError as exc:
        st.warning(str(exc))
        return

    atoms, bonds = describe_molecule(molecule)
    st.caption(
        f"{len(molecule.atoms)} atoms, {len(molecule.bonds)} bonds, {len(molecule.rings)} rings. "
        f"Written back as `{write_smiles(molecule)}`"
    )

    graphContainer, tableContainer = st.columns([3, 3])
    with graphContainer:
        nodes, edges = molecule_graph_elements(molecule)
        config = Config(
            height=450,
            width="100%",
            directed=False,
            physics=True,
            hierarchical=False,
            backgroundColor="#FAFAFA",
        )
        agraph(nodes=nodes, edges=edges, config=config)

    with tableContainer:
        st.subheader("Atoms")
        st.dataframe(atoms, hide_index=True)
        st.subheader("Bonds")
        st.dataframe(bonds, hide_index=True)

    with st.expander("Feature matrices"):
        node_table, edge_table = feature_tables(graph)
        st.dataframe(node_table)
        st.dataframe(edge_table, hide_index=True)
