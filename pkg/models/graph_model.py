from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from core.errors import DataError

NODE_DIM = 36
EDGE_DIM = 8


@dataclass
class MolGraph:
    """Featurised molecule: one row per atom, one row per directed edge.

    ``edges[k]`` is the ordered pair ``(i, j)`` whose initial state is
    ``edge_feats[k]``; every bond contributes ``(i, j)`` and ``(j, i)``.
    """

    n: int
    node_feats: np.ndarray
    edges: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=np.int64))
    edge_feats: np.ndarray = field(default_factory=lambda: np.zeros((0, EDGE_DIM)))
    neighbors: list[list[int]] = field(default_factory=list)

    @property
    def num_edges(self) -> int:
        return int(self.edges.shape[0])

    def edge_map(self) -> dict[tuple[int, int], np.ndarray]:
        return {(int(i), int(j)): self.edge_feats[k] for k, (i, j) in enumerate(self.edges)}

    def permuted(self, order: Sequence[int]) -> "MolGraph":
        """Relabel atoms so that new atom ``k`` is old atom ``order[k]``."""
        order = np.asarray(order, dtype=np.int64)
        new_index = np.empty_like(order)
        new_index[order] = np.arange(order.size)
        edges = new_index[self.edges] if self.num_edges else self.edges.copy()
        neighbors = [sorted(int(new_index[j]) for j in self.neighbors[int(old)]) for old in order]
        return MolGraph(
            n=self.n,
            node_feats=self.node_feats[order].copy(),
            edges=edges,
            edge_feats=self.edge_feats.copy(),
            neighbors=neighbors,
        )


@dataclass
class GraphBatch:
    """Disjoint union of several graphs with offset atom indices."""

    node_feats: np.ndarray
    edge_feats: np.ndarray
    src: np.ndarray
    dst: np.ndarray
    node_graph: np.ndarray  # graph id per node
    num_graphs: int

    @property
    def num_nodes(self) -> int:
        return int(self.node_feats.shape[0])

    @classmethod
    def from_graphs(cls, graphs: Sequence[MolGraph]) -> "GraphBatch":
        if not graphs:
            raise DataError("cannot batch zero graphs")
        offsets = np.cumsum([0] + [g.n for g in graphs[:-1]])
        src, dst = [], []
        for offset, graph in zip(offsets, graphs):
            if graph.n == 0:
                raise DataError("empty graph (no atoms)")
            if graph.num_edges:
                src.append(graph.edges[:, 0] + offset)
                dst.append(graph.edges[:, 1] + offset)
        empty = np.zeros(0, dtype=np.int64)
        return cls(
            node_feats=np.concatenate([g.node_feats for g in graphs], axis=0),
            edge_feats=np.concatenate([g.edge_feats for g in graphs], axis=0),
            src=np.concatenate(src).astype(np.int64) if src else empty,
            dst=np.concatenate(dst).astype(np.int64) if dst else empty,
            node_graph=np.repeat(np.arange(len(graphs)), [g.n for g in graphs]),
            num_graphs=len(graphs),
        )
