"""Molecule -> MolGraph: fixed one-hot node (36) and edge (8) layouts."""
from __future__ import annotations

import logging

import numpy as np
import pandas as pd

from core.errors import FeaturizationError
from models.graph_model import EDGE_DIM, NODE_DIM, MolGraph
from models.molecule_model import BondOrder, Hybridization, Molecule

logger = logging.getLogger(__name__)

ELEMENTS = ("B", "C", "N", "O", "F", "P", "S", "Cl", "Br", "I")  # + "other"
DEGREES = (0, 1, 2, 3, 4, 5)
CHARGES = (-2, -1, 0, 1, 2)
HYDROGENS = (0, 1, 2, 3, 4)
HYBRIDIZATIONS = (Hybridization.SP, Hybridization.SP2, Hybridization.SP3, Hybridization.OTHER)
ATOM_RING_SIZES = (3, 4, 5)
BOND_ORDERS = (BondOrder.SINGLE, BondOrder.DOUBLE, BondOrder.TRIPLE, BondOrder.AROMATIC)
BOND_RING_SIZES = (5, 6)


def node_feature_names() -> list[str]:
    return [
        *(f"element={e}" for e in ELEMENTS),
        "element=other",
        *(f"degree={d}" for d in DEGREES),
        *(f"charge={c:+d}" for c in CHARGES),
        *(f"total_h={h}" for h in HYDROGENS),
        *(f"hybridization={h.value}" for h in HYBRIDIZATIONS),
        "aromatic",
        "in_ring",
        *(f"ring_size={s}" for s in ATOM_RING_SIZES),
    ]


def edge_feature_names() -> list[str]:
    return [
        *(f"order={o.value}" for o in BOND_ORDERS),
        "conjugated",
        "in_ring",
        *(f"ring_size={s}" for s in BOND_RING_SIZES),
    ]


def _one_hot(value, choices) -> list[float]:
    # value outside the choices leaves the block all zero
    return [1.0 if value == choice else 0.0 for choice in choices]


def _node_vector(molecule: Molecule, index: int) -> list[float]:
    atom = molecule.atoms[index]
    degree = len(molecule.incident_bonds(index))
    if degree > DEGREES[-1]:
        raise FeaturizationError(
            f"atom {index} ({atom.element}) has degree {degree}; at most {DEGREES[-1]} is supported"
        )
    element = _one_hot(atom.element, ELEMENTS)
    element.append(0.0 if any(element) else 1.0)
    ring_sizes = molecule.ring_sizes(index)
    return [
        *element,
        *_one_hot(degree, DEGREES),
        *_one_hot(atom.formal_charge, CHARGES),
        *_one_hot(atom.total_h, HYDROGENS),
        *_one_hot(molecule.hybridization(index), HYBRIDIZATIONS),
        1.0 if atom.aromatic else 0.0,
        1.0 if ring_sizes else 0.0,
        *(1.0 if size in ring_sizes else 0.0 for size in ATOM_RING_SIZES),
    ]


def _edge_vector(molecule: Molecule, bond) -> list[float]:
    ring_sizes = molecule.bond_ring_sizes(bond)
    return [
        *_one_hot(bond.order, BOND_ORDERS),
        1.0 if bond.conjugated else 0.0,
        1.0 if bond.in_ring else 0.0,
        *(1.0 if size in ring_sizes else 0.0 for size in BOND_RING_SIZES),
    ]


def featurize(molecule: Molecule) -> MolGraph:
    """Initial node and directed-edge states; both directions of a bond share one vector."""
    n = len(molecule.atoms)
    node_feats = np.array([_node_vector(molecule, i) for i in range(n)], dtype=np.float64).reshape(n, NODE_DIM)

    edges: list[tuple[int, int]] = []
    edge_rows: list[list[float]] = []
    for bond in molecule.bonds:
        vector = _edge_vector(molecule, bond)
        edges.extend([(bond.a, bond.b), (bond.b, bond.a)])
        edge_rows.extend([vector, vector])

    neighbors: list[list[int]] = [[] for _ in range(n)]
    for i, j in edges:
        neighbors[i].append(j)

    return MolGraph(
        n=n,
        node_feats=node_feats,
        edges=np.array(edges, dtype=np.int64).reshape(-1, 2),
        edge_feats=np.array(edge_rows, dtype=np.float64).reshape(-1, EDGE_DIM),
        neighbors=[sorted(row) for row in neighbors],
    )


def feature_tables(graph: MolGraph) -> tuple[pd.DataFrame, pd.DataFrame]:
    """Node and edge feature matrices as labelled frames (diagnostics)."""
    nodes = pd.DataFrame(graph.node_feats, columns=node_feature_names())
    nodes.index.name = "atom"
    edges = pd.DataFrame(graph.edge_feats, columns=edge_feature_names())
    edges.insert(0, "dst", graph.edges[:, 1])
    edges.insert(0, "src", graph.edges[:, 0])
    return nodes, edges
