"""Edge-then-node message passing over molecular graphs and the mean readout."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from core.autodiff import Tape, Tensor, concat, gather_rows, relu, reshape, segment_mean, segment_sum
from core.errors import DataError, ShapeError
from core.nn import DropoutContext, kaiming_uniform, linear
from models.graph_model import EDGE_DIM, NODE_DIM, GraphBatch, MolGraph

logger = logging.getLogger(__name__)


@dataclass
class GraphNetLayer:
    W_e: Tensor
    b_e: Tensor
    W_v: Tensor
    b_v: Tensor

    @property
    def hidden_dim(self) -> int:
        return int(self.W_e.shape[1])


@dataclass
class GraphNetStack:
    layers: list[GraphNetLayer] = field(default_factory=list)

    @property
    def output_dim(self) -> int:
        return 2 * self.layers[-1].hidden_dim


@dataclass
class GraphState:
    """Node and directed-edge states of a (batched) graph during message passing."""

    nodes: Tensor
    edges: Tensor
    src: np.ndarray
    dst: np.ndarray
    node_graph: np.ndarray
    num_graphs: int

    @property
    def num_nodes(self) -> int:
        return int(self.nodes.shape[0])

    @classmethod
    def initial(cls, graphs: Union[MolGraph, GraphBatch]) -> "GraphState":
        batch = graphs if isinstance(graphs, GraphBatch) else GraphBatch.from_graphs([graphs])
        return cls(
            nodes=Tensor(batch.node_feats),
            edges=Tensor(batch.edge_feats),
            src=batch.src,
            dst=batch.dst,
            node_graph=batch.node_graph,
            num_graphs=batch.num_graphs,
        )


# ----------------------------------------------------------------------
# Construction
# ----------------------------------------------------------------------
def build_graphnet(
    tape: Tape,
    rng: np.random.Generator,
    hidden_dim: int,
    num_layers: int = 3,
    node_dim: int = NODE_DIM,
    edge_dim: int = EDGE_DIM,
    prefix: str = "graphnet",
) -> GraphNetStack:
    layers = []
    for index in range(num_layers):
        fan_e = edge_dim + 2 * node_dim
        fan_v = node_dim + hidden_dim
        layers.append(
            GraphNetLayer(
                W_e=tape.parameter(f"{prefix}.{index}.W_e", kaiming_uniform(rng, fan_e, (fan_e, hidden_dim))),
                b_e=tape.parameter(f"{prefix}.{index}.b_e", np.zeros(hidden_dim), weight=False),
                W_v=tape.parameter(f"{prefix}.{index}.W_v", kaiming_uniform(rng, fan_v, (fan_v, hidden_dim))),
                b_v=tape.parameter(f"{prefix}.{index}.b_v", np.zeros(hidden_dim), weight=False),
            )
        )
        node_dim = edge_dim = hidden_dim
    return GraphNetStack(layers=layers)


# ----------------------------------------------------------------------
# Message passing
# ----------------------------------------------------------------------
def edge_update(layer: GraphNetLayer, state: GraphState) -> Tensor:
    """``e_ij <- relu([e_ij, v_i, v_j] W_e + b_e)`` for every directed edge, from one snapshot."""
    expected = layer.W_e.shape[0]
    got = state.edges.shape[1] + 2 * state.nodes.shape[1]
    if got != expected:
        raise ShapeError(
            f"edge_update: edge {state.edges.shape} and node {state.nodes.shape} states give width {got}, "
            f"layer expects {layer.W_e.shape}"
        )
    message = concat([state.edges, gather_rows(state.nodes, state.src), gather_rows(state.nodes, state.dst)], axis=1)
    return relu(linear(message, layer.W_e, layer.b_e))


def node_update(layer: GraphNetLayer, state: GraphState) -> Tensor:
    """``v_i <- relu([v_i, sum_j e_ij] W_v + b_v)``; isolated atoms receive a zero message."""
    expected = layer.W_v.shape[0]
    got = state.nodes.shape[1] + state.edges.shape[1]
    if got != expected:
        raise ShapeError(
            f"node_update: node {state.nodes.shape} and edge {state.edges.shape} states give width {got}, "
            f"layer expects {layer.W_v.shape}"
        )
    incoming = segment_sum(state.edges, state.src, state.num_nodes)
    return relu(linear(concat([state.nodes, incoming], axis=1), layer.W_v, layer.b_v))


def readout(state: GraphState) -> Tensor:
    """Per-graph mean over atoms of ``[v_i, mean of outgoing e_ij]``; shape ``(graphs, 2 * hidden)``."""
    if state.num_nodes == 0:
        raise DataError("readout of an empty graph")
    edge_mean = segment_mean(state.edges, state.src, state.num_nodes)
    per_atom = concat([state.nodes, edge_mean], axis=1)
    return segment_mean(per_atom, state.node_graph, state.num_graphs)


def encode_drugs(stack: GraphNetStack, graphs: Union[MolGraph, GraphBatch], dropout: DropoutContext) -> Tensor:
    state = GraphState.initial(graphs)
    if state.num_nodes == 0:
        raise DataError("cannot encode an empty graph")
    for layer in stack.layers:
        edges = edge_update(layer, state)
        state.edges = edges
        state.nodes = node_update(layer, state)
        state.nodes = dropout(state.nodes)
        state.edges = dropout(state.edges)
    return readout(state)


def encode_drug(stack: GraphNetStack, graph: MolGraph, dropout: DropoutContext) -> Tensor:
    """Drug vector ``x_d`` of one molecule."""
    x_d = encode_drugs(stack, graph, dropout)
    return reshape(x_d, (x_d.shape[1],))
