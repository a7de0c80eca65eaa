"""Shared builders for small deterministic and random test graphs."""

import numpy as np

from linkgp import GraphDomain


def path_graph(n: int) -> GraphDomain:
    edges = np.asarray([(i, i + 1) for i in range(n - 1)], dtype=np.int64)
    return GraphDomain.from_edges(edges)


def ring_graph(n: int) -> GraphDomain:
    edges = np.asarray([(i, (i + 1) % n) for i in range(n)], dtype=np.int64)
    return GraphDomain.from_edges(edges)


def complete_graph(n: int) -> GraphDomain:
    edges = np.asarray(
        [(i, j) for i in range(n) for j in range(i + 1, n)], dtype=np.int64
    )
    return GraphDomain.from_edges(edges)


def star_graph(n_leaves: int) -> GraphDomain:
    edges = np.asarray([(0, i) for i in range(1, n_leaves + 1)], dtype=np.int64)
    return GraphDomain.from_edges(edges)


def random_er_graph(rng: np.random.Generator, n: int, p: float) -> GraphDomain:
    """Random simple graph; guaranteed at least one edge."""
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    mask = rng.random(len(pairs)) < p
    edges = [pair for pair, keep in zip(pairs, mask) if keep]
    if not edges:
        edges = [pairs[int(rng.integers(len(pairs)))]]
    return GraphDomain.from_edges(np.asarray(edges, dtype=np.int64),
                                  node_count=n)


def two_triangles_graph() -> GraphDomain:
    """Two triangles {0,1,2} and {3,4,5} joined by the bridge 0-3."""
    edges = np.asarray(
        [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5), (0, 3)],
        dtype=np.int64,
    )
    return GraphDomain.from_edges(edges)


def community_features(sizes: tuple[int, ...]) -> np.ndarray:
    """One-hot community indicator rows, one block per size."""
    total = sum(sizes)
    x = np.zeros((total, len(sizes)))
    start = 0
    for c, size in enumerate(sizes):
        x[start: start + size, c] = 1.0
        start += size
    return x


def dense_convolution_matrix(g: GraphDomain) -> np.ndarray:
    """Reference construction of the normalized convolution matrix."""
    n = g.node_count
    a_tilde = g.adjacency.toarray() + np.eye(n)
    inv_sqrt = 1.0 / np.sqrt(a_tilde.sum(axis=1))
    return a_tilde * np.outer(inv_sqrt, inv_sqrt)
