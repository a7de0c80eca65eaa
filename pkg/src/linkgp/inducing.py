"""Connected random inducing graph and inducing-feature initialization.

The sparse approximation places its inducing variables on the *edges* of a
small random graph; a feature vector on each inducing node is a free
parameter. The graph is sampled once (uniform random spanning tree plus
uniformly chosen extra edges, which guarantees connectedness) and frozen;
only the node features are optimized afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import GraphDomain


@dataclass(frozen=True, eq=False)
class InducingStructure:
    """Frozen inducing graph plus (initial) inducing node features.

    ``inducing_edges`` enumerates the graph's edges in canonical order; the
    pair process has one inducing variable per edge.
    """

    graph: GraphDomain
    features: np.ndarray  # (n_nodes, D)

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        object.__setattr__(self, "features", feats)
        if feats.ndim != 2 or feats.shape[0] != self.graph.node_count:
            raise ValueError("features must have one row per inducing node")

    @property
    def inducing_edges(self) -> np.ndarray:
        return self.graph.edges

    @property
    def n_inducing(self) -> int:
        return self.graph.edge_count


def default_inducing_sizes(input_graph: GraphDomain) -> tuple[int, int]:
    """Default inducing graph sizes: half the input nodes, twice that many
    edges, clipped to the feasible range for a connected simple graph."""
    n_bar = max(2, input_graph.node_count // 2)
    max_edges = n_bar * (n_bar - 1) // 2
    e_bar = min(2 * n_bar, max_edges)
    e_bar = max(e_bar, n_bar - 1)
    return n_bar, e_bar


def resolve_inducing_sizes(input_graph: GraphDomain, n_nodes=None,
                           n_edges=None) -> tuple[int, int]:
    """Apply the default sizing rule, honoring explicit overrides."""
    n_bar = max(2, input_graph.node_count // 2) if n_nodes is None else int(n_nodes)
    if n_edges is None:
        max_edges = n_bar * (n_bar - 1) // 2
        e_bar = max(min(2 * n_bar, max_edges), n_bar - 1)
    else:
        e_bar = int(n_edges)
    return n_bar, e_bar


def sample_connected_er(n_nodes: int, n_edges: int, seed) -> GraphDomain:
    """Connected graph with exactly ``n_nodes`` nodes and ``n_edges`` edges.

    A uniform random spanning tree (Aldous-Broder walk on the complete
    graph) is augmented with distinct non-tree edges chosen uniformly at
    random. Deterministic given the seed.
    """
    if n_nodes < 2:
        raise ValueError("need at least two inducing nodes")
    max_edges = n_nodes * (n_nodes - 1) // 2
    if n_edges < n_nodes - 1 or n_edges > max_edges:
        raise ValueError(
            f"edge count {n_edges} infeasible for a connected simple graph "
            f"on {n_nodes} nodes (must be in [{n_nodes - 1}, {max_edges}])"
        )
    rng = np.random.default_rng(seed)

    edges = set()
    visited = np.zeros(n_nodes, dtype=bool)
    current = int(rng.integers(n_nodes))
    visited[current] = True
    n_visited = 1
    while n_visited < n_nodes:
        step = int(rng.integers(n_nodes - 1))
        nxt = step if step < current else step + 1
        if not visited[nxt]:
            visited[nxt] = True
            n_visited += 1
            edges.add((min(current, nxt), max(current, nxt)))
        current = nxt

    extra = n_edges - (n_nodes - 1)
    if extra > 0:
        iu, ju = np.triu_indices(n_nodes, k=1)
        all_pairs = list(zip(iu.tolist(), ju.tolist()))
        candidates = [p for p in all_pairs if p not in edges]
        chosen = rng.choice(len(candidates), size=extra, replace=False)
        for idx in sorted(chosen.tolist()):
            edges.add(candidates[idx])

    edge_arr = np.array(sorted(edges), dtype=np.int64)
    return GraphDomain.from_edges(edge_arr, node_count=n_nodes)


def initialize_inducing_features(x, n_inducing: int, seed,
                                 noise_scale: float = 0.01) -> np.ndarray:
    """Inducing features drawn from the input features plus small noise.

    Rows are sampled without replacement (with replacement if more inducing
    nodes than inputs are requested) and perturbed by Gaussian noise scaled
    to ``noise_scale`` times each dimension's standard deviation.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("input features must be a non-empty 2-d array")
    if n_inducing < 2:
        raise ValueError("need at least two inducing nodes")
    rng = np.random.default_rng(seed)
    replace = n_inducing > x.shape[0]
    rows = rng.choice(x.shape[0], size=n_inducing, replace=replace)
    z = x[rows].copy()
    scale = noise_scale * x.std(axis=0)
    z += rng.standard_normal(z.shape) * scale
    return z


def build_inducing_structure(x, n_nodes: int, n_edges: int, seed) -> InducingStructure:
    """Sample the inducing graph and initialize its node features.

    The graph and feature draws use independent streams derived from the
    seed so either piece is reproducible on its own.
    """
    seq = (seed if isinstance(seed, np.random.SeedSequence)
           else np.random.SeedSequence(seed))
    graph_seed, feat_seed = seq.spawn(2)
    g = sample_connected_er(n_nodes, n_edges, graph_seed)
    z = initialize_inducing_features(x, n_nodes, feat_seed)
    return InducingStructure(graph=g, features=z)
