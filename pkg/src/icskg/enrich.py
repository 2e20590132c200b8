"""Structural enrichment: FastRP node embeddings and KNN link inference.

Products that look alike structurally (similar communication neighborhoods)
receive HAS_POSSIBLE_COMMUNICATION edges to their top-k most cosine-similar
peers, surfacing plausible but unobserved interactions.  Everything is seeded
and deterministic: the very-sparse random projection is drawn from a Philox
counter stream over nodes in sorted-id order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from io import StringIO
from typing import Sequence

import numpy as np

from icskg.errors import EmptyGraph
from icskg.graph import Edge, EdgeKind, GraphView

DEFAULT_DIM = 128
DEFAULT_ITERATION_WEIGHTS = (0.0, 1.0, 1.0)
DEFAULT_TOP_K = 5


@dataclass
class EmbeddingMatrix:
    node_ids: list[str]
    vectors: np.ndarray          # shape (len(node_ids), dim)
    dim: int
    iteration_weights: tuple[float, ...]
    seed: int

    def vector(self, node_id: str) -> np.ndarray:
        return self.vectors[self.node_ids.index(node_id)]

    def to_csv(self) -> bytes:
        buf = StringIO()
        buf.write("id," + ",".join(f"e{i}" for i in range(self.dim)) + "\n")
        for node_id, row in zip(self.node_ids, self.vectors):
            buf.write(node_id + "," + ",".join(f"{x:.8f}" for x in row) + "\n")
        return buf.getvalue().encode("utf-8")


def fastrp_embed(view: GraphView, dim: int = DEFAULT_DIM,
                 iteration_weights: Sequence[float] = DEFAULT_ITERATION_WEIGHTS,
                 seed: int = 42) -> EmbeddingMatrix:
    """Fast random-projection embedding of the view's product nodes.

    State 0 is a very-sparse signed projection (density 1/sqrt(dim)); each
    further state applies degree-normalized propagation over the view's
    undirected communication adjacency.  The final vector is the weighted sum
    of states, with iteration_weights[0] weighting the raw projection.
    """
    nodes = view.nodes()
    if not nodes:
        raise EmptyGraph("fastrp_embed requires a non-empty view")
    n = len(nodes)
    index = {u: i for i, u in enumerate(nodes)}

    s = math.sqrt(dim)
    rng = np.random.Generator(np.random.Philox(key=np.array(
        [seed & 0xFFFFFFFFFFFFFFFF, 0xFA57], dtype=np.uint64)))
    draws = rng.random((n, dim))
    state = np.zeros((n, dim))
    state[draws < 1.0 / (2.0 * s)] = math.sqrt(s)
    state[draws > 1.0 - 1.0 / (2.0 * s)] = -math.sqrt(s)

    neighbor_sets: list[set[int]] = [set() for _ in range(n)]
    for e in view.edges:
        i, j = index[e.src], index[e.dst]
        neighbor_sets[i].add(j)
        neighbor_sets[j].add(i)
    neighbors = [sorted(nbrs) for nbrs in neighbor_sets]

    weights = tuple(float(w) for w in iteration_weights)
    final = weights[0] * state
    for w in weights[1:]:
        nxt = np.zeros_like(state)
        for i, nbrs in enumerate(neighbors):
            if nbrs:
                nxt[i] = state[nbrs].mean(axis=0)
        state = nxt
        final = final + w * state
    return EmbeddingMatrix(node_ids=nodes, vectors=final, dim=dim,
                           iteration_weights=weights, seed=seed)


def cosine_similarity_matrix(emb: EmbeddingMatrix) -> np.ndarray:
    norms = np.linalg.norm(emb.vectors, axis=1)
    safe = np.where(norms > 0.0, norms, 1.0)
    unit = emb.vectors / safe[:, None]
    return unit @ unit.T


def knn_possible_links(emb: EmbeddingMatrix, view: GraphView,
                       top_k: int = DEFAULT_TOP_K) -> list[Edge]:
    """Propose HAS_POSSIBLE_COMMUNICATION edges to each product's top-k most
    similar peers.

    Pairs already linked by COMMUNICATES_WITH (either direction) are skipped,
    as are candidates with non-positive similarity; a zero-vector query node
    proposes nothing.  Each product therefore gains at most top_k outgoing
    possible-links.
    """
    sims = cosine_similarity_matrix(emb)
    linked: set[frozenset[str]] = {
        e.pair for e in view.graph.edges(EdgeKind.COMMUNICATES_WITH)}
    edges: list[Edge] = []
    for i, src in enumerate(emb.node_ids):
        candidates = []
        for j, dst in enumerate(emb.node_ids):
            if i == j or frozenset((src, dst)) in linked:
                continue
            sim = float(sims[i, j])
            if sim <= 0.0:
                continue
            candidates.append((-sim, dst))
        candidates.sort()
        for neg_sim, dst in candidates[:top_k]:
            edges.append(Edge(src, dst, EdgeKind.HAS_POSSIBLE_COMMUNICATION,
                              props={"similarity": f"{-neg_sim:.6f}"}))
    return edges
