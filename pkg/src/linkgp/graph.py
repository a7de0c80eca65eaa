"""Immutable undirected graphs and the structural operators the model needs.

A :class:`GraphDomain` is a simple undirected graph (no self-loops, no
duplicate edges, unweighted). On top of it this module provides the
normalized convolution matrix ``S = Dt^{-1/2} (A + I) Dt^{-1/2}``, its
row-stochastic variant, interpolated convolution products, the Dirichlet
norm of a node signal, BFS distance classes, and pre-image node sets for
batched convolution.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True, eq=False)
class GraphDomain:
    """Undirected simple graph over nodes ``0..node_count-1``.

    ``edges`` is canonical: each row ``(i, j)`` has ``i < j`` and rows are
    sorted lexicographically, so two graphs with the same edge set compare
    equal row-for-row.
    """

    node_count: int
    edges: np.ndarray  # (E, 2) int64, canonical order
    adjacency: sp.csr_matrix  # (N, N) float64, symmetric, zero diagonal
    degrees: np.ndarray  # (N,) int64

    @classmethod
    def from_edges(cls, edges, node_count=None) -> "GraphDomain":
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if node_count is None:
            node_count = int(edges.max()) + 1 if edges.size else 0
        node_count = int(node_count)
        if node_count < 1:
            raise ValueError("graph must have at least one node")
        if edges.size:
            if edges.min() < 0 or edges.max() >= node_count:
                raise ValueError("edge endpoint out of range")
            if np.any(edges[:, 0] == edges[:, 1]):
                raise ValueError("self-loops are not allowed")
        lo = np.minimum(edges[:, 0], edges[:, 1])
        hi = np.maximum(edges[:, 0], edges[:, 1])
        canon = np.stack([lo, hi], axis=1)
        if canon.shape[0]:
            order = np.lexsort((canon[:, 1], canon[:, 0]))
            canon = canon[order]
            if np.any(np.all(canon[1:] == canon[:-1], axis=1)):
                raise ValueError("duplicate edges are not allowed")
        n, e = node_count, canon.shape[0]
        rows = np.concatenate([canon[:, 0], canon[:, 1]])
        cols = np.concatenate([canon[:, 1], canon[:, 0]])
        adj = sp.csr_matrix(
            (np.ones(2 * e), (rows, cols)), shape=(n, n), dtype=np.float64
        )
        degrees = np.asarray(adj.sum(axis=1)).ravel().astype(np.int64)
        return cls(node_count=n, edges=canon, adjacency=adj, degrees=degrees)

    @property
    def edge_count(self) -> int:
        return self.edges.shape[0]

    @cached_property
    def convolution_matrix(self) -> sp.csr_matrix:
        return normalized_convolution_matrix(self)

    @cached_property
    def _neighbor_lists(self):
        indptr, indices = self.adjacency.indptr, self.adjacency.indices
        return [indices[indptr[i]: indptr[i + 1]] for i in range(self.node_count)]

    def neighbors(self, node: int) -> np.ndarray:
        return self._neighbor_lists[node]


@dataclass(frozen=True)
class ConvolutionConfig:
    """Convolution depth ``K`` and per-step interpolation weights in [0, 1].

    Each step interpolates between the convolution matrix (weight 1) and
    the identity (weight 0). Weight clamping under gradient updates is
    handled by the training engine's sigmoid reparameterization; this
    config holds the constrained values.
    """

    depth: int
    weights: np.ndarray

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        object.__setattr__(self, "weights", weights)
        if self.depth < 0:
            raise ValueError("depth must be non-negative")
        if weights.shape[0] != self.depth:
            raise ValueError(
                f"expected {self.depth} weights, got {weights.shape[0]}"
            )
        if weights.size and (weights.min() < 0.0 or weights.max() > 1.0):
            raise ValueError("convolution weights must lie in [0, 1]")

    @classmethod
    def full(cls, depth: int) -> "ConvolutionConfig":
        """All weights 1: plain repeated convolution."""
        return cls(depth=depth, weights=np.ones(depth))


def normalized_convolution_matrix(g: GraphDomain) -> sp.csr_matrix:
    """Symmetric normalization ``Dt^{-1/2} (A + I) Dt^{-1/2}``.

    Entry (i, j) equals ``1 / sqrt((d_i + 1)(d_j + 1))`` whenever j is i or
    one of its neighbors, and 0 otherwise. Well-defined for every graph,
    including isolated nodes (their diagonal entry is 1).
    """
    a_tilde = (self_loops(g) + g.adjacency).tocsr()
    inv_sqrt = 1.0 / np.sqrt(g.degrees + 1.0)
    d = sp.diags(inv_sqrt)
    return (d @ a_tilde @ d).tocsr()


def asymmetric_convolution_matrix(g: GraphDomain) -> sp.csr_matrix:
    """Row-stochastic normalization ``Dt^{-1} (A + I)``; every row sums to 1."""
    a_tilde = (self_loops(g) + g.adjacency).tocsr()
    d = sp.diags(1.0 / (g.degrees + 1.0))
    return (d @ a_tilde).tocsr()


def self_loops(g: GraphDomain) -> sp.csr_matrix:
    return sp.identity(g.node_count, dtype=np.float64, format="csr")


def interpolated_convolution_product(g: GraphDomain, cfg: ConvolutionConfig) -> np.ndarray:
    """Dense product of the interpolated convolution steps.

    Returns ``S_1 @ S_2 @ ... @ S_K`` with ``S_k = w_k S + (1 - w_k) I``;
    depth 0 gives the identity. All factors are polynomials in the same
    matrix, so the product order is immaterial.
    """
    n = g.node_count
    out = np.eye(n)
    if cfg.depth == 0:
        return out
    s = g.convolution_matrix.toarray()
    eye = np.eye(n)
    for w in cfg.weights:
        out = out @ (w * s + (1.0 - w) * eye)
    return out


def laplacian(g: GraphDomain) -> sp.csr_matrix:
    """Combinatorial Laplacian ``D - A`` (positive semi-definite)."""
    return (sp.diags(g.degrees.astype(np.float64)) - g.adjacency).tocsr()


def dirichlet_norm(g: GraphDomain, signal) -> float:
    """Smoothness of a node signal: ``0.5 * sum_ij a_ij (g_i - g_j)^2``.

    Computed as the sum of squared differences over the edge list, which
    equals the quadratic form with ``D - A``.
    """
    signal = np.asarray(signal, dtype=np.float64).reshape(-1)
    if signal.shape[0] != g.node_count:
        raise ValueError(
            f"signal has {signal.shape[0]} entries, graph has {g.node_count} nodes"
        )
    if g.edge_count == 0:
        return 0.0
    diff = signal[g.edges[:, 0]] - signal[g.edges[:, 1]]
    return float(np.dot(diff, diff))


def geodesic_distances(g: GraphDomain, center: int) -> np.ndarray:
    """BFS distances from ``center``; unreachable nodes get -1."""
    if not 0 <= center < g.node_count:
        raise ValueError(f"center {center} out of range")
    dist = np.full(g.node_count, -1, dtype=np.int64)
    dist[center] = 0
    frontier = np.array([center], dtype=np.int64)
    d = 0
    indptr, indices = g.adjacency.indptr, g.adjacency.indices
    while frontier.size:
        d += 1
        nbrs = np.unique(
            np.concatenate([indices[indptr[v]: indptr[v + 1]] for v in frontier])
        )
        nxt = nbrs[dist[nbrs] < 0]
        dist[nxt] = d
        frontier = nxt
    return dist


def geodesic_distance_classes(g: GraphDomain, center: int, max_d: int) -> list[np.ndarray]:
    """Nodes at BFS distance exactly 1..max_d from ``center``.

    Always returns ``max_d`` arrays; classes beyond the reachable radius
    are empty.
    """
    if max_d < 1:
        raise ValueError("max_d must be positive")
    dist = geodesic_distances(g, center)
    return [np.flatnonzero(dist == d) for d in range(1, max_d + 1)]


def preimage_nodes(g: GraphDomain, seed_nodes, depth: int) -> np.ndarray:
    """Union of the closed ``depth``-hop neighborhoods of the seed nodes.

    These are exactly the rows of the depth-step convolution that can
    influence values at the seeds; depth 0 returns the seeds themselves.
    """
    seeds = np.unique(np.asarray(seed_nodes, dtype=np.int64).reshape(-1))
    if seeds.size and (seeds.min() < 0 or seeds.max() >= g.node_count):
        raise ValueError("seed node out of range")
    if depth < 0:
        raise ValueError("depth must be non-negative")
    reached = np.zeros(g.node_count, dtype=bool)
    reached[seeds] = True
    frontier = seeds
    indptr, indices = g.adjacency.indptr, g.adjacency.indices
    for _ in range(depth):
        if not frontier.size:
            break
        nbrs = np.unique(
            np.concatenate([indices[indptr[v]: indptr[v + 1]] for v in frontier])
        )
        frontier = nbrs[~reached[nbrs]]
        reached[frontier] = True
    return np.flatnonzero(reached)
